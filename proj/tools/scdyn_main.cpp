#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scdyn/config.hpp"
#include "scdyn/ensemble.hpp"
#include "scdyn/errors.hpp"
#include "scdyn/io.hpp"
#include "scdyn/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scdyn;

namespace {

constexpr const char* kToolVersion = "scdyn 0.1.0";

struct Overrides {
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    std::size_t n_runs = 0;
};

RunConfig load_config(const std::string& path, const Overrides& ov) {
    RunConfig cfg = RunConfig::load_file(path);
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    if (ov.seed_set) cfg.seed = ov.seed;
    if (ov.threads >= 0) cfg.threads = ov.threads;
    if (ov.n_runs > 0) cfg.n_runs = ov.n_runs;
    return cfg;
}

json manifest_json(const RunConfig& cfg) {
    const DerivedConstants c = derive_constants(cfg.model);
    const ValidationReport v = validate(cfg.model);
    json m;
    m["tool"] = kToolVersion;
    m["config_hash"] = cfg.hash();
    m["seed"] = cfg.seed;
    m["config"] = cfg.to_json();
    m["derived_constants"] = {{"D", c.D},
                              {"Dtilde", c.Dtilde},
                              {"sigma1_sq", c.sigma1_sq},
                              {"Delta", c.Delta},
                              {"force_noise_var", c.force_noise_var},
                              {"record_noise_var", c.record_noise_var},
                              {"coupling_defined", c.coupling_defined}};
    m["validation"] = {{"decoherent", v.decoherent},
                       {"positivity_margin", v.positivity_margin},
                       {"classical_regime", v.classical_regime},
                       {"messages", v.messages}};
    if (cfg.engine == EngineKind::PhaseSpace && cfg.model.lambda != 0.0) {
        const SmearingKernel k = build_smearing(cfg.model, c);
        m["smearing_kernel"] = {{"cov", {{k.cov.qq, k.cov.qp}, {k.cov.qp, k.cov.pp}}},
                                {"gram", {{k.gram.qq, k.gram.qp}, {k.gram.qp, k.gram.pp}}},
                                {"record_var_per_step", k.record_var_per_step},
                                {"warnings", k.warnings}};
    }
    return m;
}

void write_schema(const std::string& dir) {
    json s;
    s["paths.csv"] = "t, mean_Q, then per kept run k: Q_k, Qdot_k, q_k (small-particle path "
                     "or <x>); sse runs add varq_k and the record qbar_k";
    s["runs.csv"] = "run, q0, p0, final_Q, final_Qdot, branch (-1 = unclassified), distance";
    s["energy_weight.csv"] = "Ebar, w: normalized energy-measurement weight density";
    s["histograms.csv"] = "bin_lo, bin_hi, count over final Q";
    s["summary.json"] = "aggregates: final_Q moments, branch fractions with standard errors, "
                        "unclassified fraction, engine diagnostics";
    s["manifest.json"] = "tool version, config echo, config hash, seed, derived constants, "
                         "validation report";
    s["wigner.csv"] = "q, p, W rows (row-major over the q,p grid)";
    s["compare.csv"] = "lambda, D, mc_err, n (divergence sweep) or branch cross-check columns";
    s["floats"] = "all floating-point values serialized with 17 significant digits";
    write_text_file(dir + "/schema.json", s.dump(2) + "\n");
}

void write_wigner_csv(const std::string& path, const WignerGrid& w) {
    std::vector<std::vector<double>> rows;
    rows.reserve(w.q.n * w.p.n);
    for (std::size_t iq = 0; iq < w.q.n; ++iq)
        for (std::size_t ip = 0; ip < w.p.n; ++ip)
            rows.push_back({w.q.value(iq), w.p.value(ip), w.at(iq, ip)});
    write_csv(path, {"q", "p", "W"}, rows);
}

int cmd_simulate(const std::string& config_path, const Overrides& ov) {
    const RunConfig cfg = load_config(config_path, ov);
    fs::create_directories(cfg.out_dir);
    const EnsembleResult res = run_ensemble(cfg);

    write_text_file(cfg.out_dir + "/manifest.json", manifest_json(cfg).dump(2) + "\n");
    write_text_file(cfg.out_dir + "/summary.json", summary_json(res).dump(2) + "\n");

    const bool sse_cols = !res.kept_varq.empty();
    std::vector<std::string> cols{"t", "mean_Q"};
    for (std::size_t k = 0; k < res.kept_Q.size(); ++k) {
        cols.push_back("Q_" + std::to_string(k));
        cols.push_back("Qdot_" + std::to_string(k));
        cols.push_back("q_" + std::to_string(k));
        if (sse_cols) {
            cols.push_back("varq_" + std::to_string(k));
            cols.push_back("qbar_" + std::to_string(k));
        }
    }
    auto cell = [](const std::vector<std::vector<double>>& v, std::size_t k, std::size_t i) {
        return k < v.size() && i < v[k].size() ? v[k][i] : 0.0;
    };
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.t_kept.size(); ++i) {
        std::vector<double> row{res.t_kept[i],
                                i < res.mean_Q_path.size() ? res.mean_Q_path[i] : 0.0};
        for (std::size_t k = 0; k < res.kept_Q.size(); ++k) {
            row.push_back(cell(res.kept_Q, k, i));
            row.push_back(cell(res.kept_Qdot, k, i));
            row.push_back(cell(res.kept_q, k, i));
            if (sse_cols) {
                row.push_back(cell(res.kept_varq, k, i));
                row.push_back(cell(res.kept_qbar, k, i));
            }
        }
        rows.push_back(std::move(row));
    }
    write_csv(cfg.out_dir + "/paths.csv", cols, rows);

    // per-run summary table
    std::vector<std::vector<double>> rrows;
    rrows.reserve(res.runs.size());
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const RunSummary& s = res.runs[i];
        rrows.push_back({static_cast<double>(i), s.q0, s.p0, s.final_Q, s.final_Qdot,
                         static_cast<double>(s.branch), s.distance});
    }
    write_csv(cfg.out_dir + "/runs.csv",
              {"run", "q0", "p0", "final_Q", "final_Qdot", "branch", "distance"}, rrows);

    if (res.engine == EngineKind::Energy && !res.energy_weight_density.density.empty()) {
        std::vector<std::vector<double>> wrows;
        const auto& w = res.energy_weight_density;
        for (std::size_t i = 0; i < w.ebar.n; ++i)
            wrows.push_back({w.ebar.value(i), w.density[i]});
        write_csv(cfg.out_dir + "/energy_weight.csv", {"Ebar", "w"}, wrows);
    }

    std::vector<std::vector<double>> hrows;
    const auto& h = res.hist_final_Q;
    const double bw = h.counts.empty() ? 0.0
                                       : (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        hrows.push_back({h.lo + bw * static_cast<double>(b),
                         h.lo + bw * static_cast<double>(b + 1),
                         static_cast<double>(h.counts[b])});
    write_csv(cfg.out_dir + "/histograms.csv", {"bin_lo", "bin_hi", "count"}, hrows);
    write_schema(cfg.out_dir);

    std::cout << "engine=" << engine_name(res.engine) << " n_runs=" << res.n_runs
              << " mean_final_Q=" << format_g17(res.mean_final_Q) << "\n";
    if (!res.branch_fractions.empty()) {
        std::cout << "branch_fractions=";
        for (std::size_t i = 0; i < res.branch_fractions.size(); ++i)
            std::cout << (i ? "," : "") << format_g17(res.branch_fractions[i]);
        std::cout << " unclassified=" << format_g17(res.unclassified_fraction) << "\n";
    }
    for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_wigner(const std::string& config_path, const Overrides& ov) {
    const RunConfig cfg = load_config(config_path, ov);
    fs::create_directories(cfg.out_dir);
    const ModelParams& p = cfg.model;

    WignerGrid raw;
    double q_lo = 1e300, q_hi = -1e300, p_lo = 1e300, p_hi = -1e300;
    const bool packets = cfg.state.has_packets();
    if (packets) {
        const SuperpositionState state = cfg.state.to_superposition(p.hbar);
        for (const auto& t : state.terms) {
            const double sp = p.hbar / (2.0 * t.packet.s);
            q_lo = std::min(q_lo, t.packet.q0 - 8.0 * t.packet.s);
            q_hi = std::max(q_hi, t.packet.q0 + 8.0 * t.packet.s);
            p_lo = std::min(p_lo, t.packet.p0 - 8.0 * sp);
            p_hi = std::max(p_hi, t.packet.p0 + 8.0 * sp);
        }
        const Axis qa = Axis::spanning(q_lo, q_hi, cfg.sample_grid_n);
        const Axis pa = Axis::spanning(p_lo, p_hi, cfg.sample_grid_n);
        raw = wigner_transform(state, qa, pa);
    } else {
        raw = wigner_transform(cfg.state.to_gridwf(p.hbar, cfg.sse_grid), p.hbar);
    }
    write_wigner_csv(cfg.out_dir + "/wigner.csv", raw);

    json report;
    report["raw"] = {{"min", raw.min_value()}, {"normalization", raw.integral()}};
    std::cout << "raw: min=" << format_g17(raw.min_value())
              << " normalization=" << format_g17(raw.integral()) << "\n";
    if (p.lambda != 0.0) {
        const DerivedConstants consts = derive_constants(p);
        const SmearingKernel kernel = build_smearing(p, consts);
        WignerGrid sm;
        if (packets) {
            const SuperpositionState state = cfg.state.to_superposition(p.hbar);
            // extend axes by the kernel widths so the smeared mass stays inside
            const double wq = 7.0 * std::sqrt(kernel.cov.qq);
            const double wp = 7.0 * std::sqrt(kernel.cov.pp);
            const Axis qa2 = Axis::spanning(q_lo - wq, q_hi + wq, cfg.sample_grid_n);
            const Axis pa2 = Axis::spanning(p_lo - wp, p_hi + wp, cfg.sample_grid_n);
            sm = smear(state, kernel, qa2, pa2);
        } else {
            sm = smear(raw, kernel);
        }
        write_wigner_csv(cfg.out_dir + "/wigner_smeared.csv", sm);
        const double sd = std::sqrt(kernel.cov.det());
        report["smeared"] = {{"min", sm.min_value()},
                             {"normalization", sm.integral()},
                             {"sqrt_det_cov", sd},
                             {"husimi_dominating", sd >= 0.5 * p.hbar}};
        std::cout << "smeared: min=" << format_g17(sm.min_value())
                  << " normalization=" << format_g17(sm.integral())
                  << " sqrt_det_cov=" << format_g17(sd) << (sd >= 0.5 * p.hbar ? " (>= hbar/2)" : " (< hbar/2)")
                  << "\n";
    }
    write_text_file(cfg.out_dir + "/wigner_report.json", report.dump(2) + "\n");
    write_schema(cfg.out_dir);
    return 0;
}

int cmd_compare(const std::string& config_a, const std::string& config_b, const Overrides& ov) {
    const RunConfig a = load_config(config_a, ov);
    Overrides ov_b = ov;
    ov_b.out.clear();
    const RunConfig b = load_config(config_b, ov_b);
    fs::create_directories(a.out_dir);

    json report;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> cols;

    if (!a.compare_lambdas.empty() && b.engine == EngineKind::MeanField) {
        const auto curve = compare_meanfield(a, a.compare_lambdas);
        cols = {"lambda", "D", "mc_err", "n"};
        for (const auto& pt : curve) {
            rows.push_back({pt.lambda, pt.D, pt.mc_err, static_cast<double>(pt.n)});
            std::cout << "lambda=" << format_g17(pt.lambda) << " D=" << format_g17(pt.D)
                      << " mc_err=" << format_g17(pt.mc_err) << "\n";
        }
        report["mode"] = "meanfield_divergence_sweep";
    } else {
        const EnsembleResult ra = run_ensemble(a);
        const EnsembleResult rb = run_ensemble(b);
        if (ra.t_kept.size() != rb.t_kept.size() ||
            std::abs(ra.t_kept.back() - rb.t_kept.back()) > 1e-12)
            throw ConfigError("compare: configurations produce incompatible time grids");
        double acc = 0.0, err = 0.0;
        for (std::size_t k = 0; k < ra.t_kept.size(); ++k) {
            const double d = ra.mean_Q_path[k] - rb.mean_Q_path[k];
            acc += d * d;
            err += ra.var_Q_path[k] / static_cast<double>(ra.n_runs) +
                   rb.var_Q_path[k] / static_cast<double>(rb.n_runs);
        }
        const double D = std::sqrt(acc / static_cast<double>(ra.t_kept.size()));
        const double mc = std::sqrt(err / static_cast<double>(ra.t_kept.size()));
        std::cout << "D=" << format_g17(D) << " mc_err=" << format_g17(mc) << "\n";
        report["mode"] = "two_engine";
        report["D"] = D;
        report["mc_err"] = mc;
        if (!ra.branch_fractions.empty() &&
            ra.branch_fractions.size() == rb.branch_fractions.size()) {
            cols = {"branch", "fraction_a", "se_a", "fraction_b", "se_b", "joint_se"};
            for (std::size_t i = 0; i < ra.branch_fractions.size(); ++i) {
                const double joint = std::sqrt(ra.branch_fraction_se[i] * ra.branch_fraction_se[i] +
                                               rb.branch_fraction_se[i] * rb.branch_fraction_se[i]);
                rows.push_back({static_cast<double>(i), ra.branch_fractions[i],
                                ra.branch_fraction_se[i], rb.branch_fractions[i],
                                rb.branch_fraction_se[i], joint});
                std::cout << "branch " << i << ": " << format_g17(ra.branch_fractions[i]) << " vs "
                          << format_g17(rb.branch_fractions[i]) << " (joint se "
                          << format_g17(joint) << ")\n";
            }
        } else {
            cols = {"t", "mean_Q_a", "mean_Q_b"};
            for (std::size_t k = 0; k < ra.t_kept.size(); ++k)
                rows.push_back({ra.t_kept[k], ra.mean_Q_path[k], rb.mean_Q_path[k]});
        }
    }
    write_csv(a.out_dir + "/compare.csv", cols, rows);
    write_text_file(a.out_dir + "/compare_summary.json", report.dump(2) + "\n");
    write_schema(a.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic semiclassical dynamics of a classical particle coupled to a "
                 "quantum oscillator"};
    app.require_subcommand(1);

    Overrides ov;
    std::string config_a, config_b;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_a, "JSON run configuration")->required();
        cmd->add_option("--out", ov.out, "output directory override");
        cmd->add_option("--seed", ov.seed, "master seed override")->each([&](const std::string&) {
            ov.seed_set = true;
        });
        cmd->add_option("--threads", ov.threads, "worker cap (0 = available parallelism)");
        cmd->add_option("--n-runs", ov.n_runs, "ensemble size override");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run the configured engine");
    add_common(sim);
    CLI::App* wig = app.add_subcommand("wigner", "emit raw and smeared Wigner grids");
    add_common(wig);
    CLI::App* cmp = app.add_subcommand("compare", "compare two configurations");
    cmp->add_option("--config", config_a, "first (reference) configuration")->required();
    cmp->add_option("--config-b", config_b, "second configuration")->required();
    cmp->add_option("--out", ov.out, "output directory override");
    cmp->add_option("--seed", ov.seed, "master seed override")->each([&](const std::string&) {
        ov.seed_set = true;
    });
    cmp->add_option("--threads", ov.threads, "worker cap");
    cmp->add_option("--n-runs", ov.n_runs, "ensemble size override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_a, ov);
        if (wig->parsed()) return cmd_wigner(config_a, ov);
        if (cmp->parsed()) return cmd_compare(config_a, config_b, ov);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        std::cerr << "replay with: --config <same config> --seed <same seed>\n";
        return 1;
    }
    return 2;
}
