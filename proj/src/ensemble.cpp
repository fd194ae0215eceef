#include "scdyn/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "scdyn/errors.hpp"
#include "scdyn/rng.hpp"
#include "scdyn/sse.hpp"

namespace scdyn {

namespace {

std::size_t auto_stride(std::size_t steps, std::size_t requested) {
    if (requested > 0) return requested;
    std::size_t stride = 1;
    while ((steps / stride) + 1 > 512) stride *= 2;
    return stride;
}

std::vector<double> strided(const std::vector<double>& v, std::size_t stride) {
    std::vector<double> out;
    out.reserve(v.size() / stride + 1);
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
    return out;
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
    Histogram h;
    if (values.empty()) return h;
    h.lo = *std::min_element(values.begin(), values.end());
    h.hi = *std::max_element(values.begin(), values.end());
    if (h.hi <= h.lo) h.hi = h.lo + 1.0;
    h.counts.assign(bins, 0);
    for (const double v : values) {
        auto idx = static_cast<std::size_t>((v - h.lo) / (h.hi - h.lo) * static_cast<double>(bins));
        if (idx >= bins) idx = bins - 1;
        h.counts[idx]++;
    }
    return h;
}

struct MomentAccumulator {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

std::uint64_t run_seed(std::uint64_t master, std::size_t run) {
    std::uint64_t x = master ^ (0x9e3779b97f4a7c15ULL * (run + 1));
    return splitmix64(x);
}

}  // namespace

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (nt < 1) nt = 1;
    if (nt == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double path_distance(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0) throw Error("path_distance on empty paths");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

ClassificationResult classify_branches(const std::vector<std::vector<double>>& paths,
                                       const std::vector<std::vector<double>>& templates,
                                       double threshold) {
    if (templates.empty()) throw Error("classify_branches: no templates");
    ClassificationResult out;
    out.labels.reserve(paths.size());
    std::vector<std::size_t> counts(templates.size(), 0);
    std::size_t unclassified = 0;
    for (const auto& p : paths) {
        int best = -1;
        double best_d = 0.0;
        for (std::size_t t = 0; t < templates.size(); ++t) {
            const double d = path_distance(p, templates[t]);
            if (best < 0 || d < best_d) {
                best = static_cast<int>(t);
                best_d = d;
            }
        }
        if (threshold > 0.0 && best_d > threshold) {
            out.labels.push_back(-1);
            ++unclassified;
        } else {
            out.labels.push_back(best);
            counts[static_cast<std::size_t>(best)]++;
        }
    }
    const double n_classified = static_cast<double>(paths.size() - unclassified);
    out.fractions.resize(templates.size());
    out.se.resize(templates.size());
    for (std::size_t t = 0; t < templates.size(); ++t) {
        const double f = n_classified > 0 ? static_cast<double>(counts[t]) / n_classified : 0.0;
        out.fractions[t] = f;
        out.se[t] =
            n_classified > 0 ? std::sqrt(std::max(f * (1.0 - f), 1e-12) / n_classified) : 0.0;
    }
    out.unclassified_fraction =
        paths.empty() ? 0.0 : static_cast<double>(unclassified) / static_cast<double>(paths.size());
    if (out.unclassified_fraction > 0.5)
        out.warnings.push_back("more than half of the runs fell outside the classification "
                               "threshold; templates may be closer than the noise scale");
    return out;
}

ClassificationResult classify_branches(const std::vector<ClassicalPath>& paths,
                                       const std::vector<ClassicalPath>& templates,
                                       double threshold) {
    std::vector<std::vector<double>> ps, ts;
    ps.reserve(paths.size());
    ts.reserve(templates.size());
    for (const auto& p : paths) ps.push_back(p.Q);
    for (const auto& t : templates) ts.push_back(t.Q);
    return classify_branches(ps, ts, threshold);
}

namespace {

// ---------------------------------------------------------------------------
// phase-space engine
// ---------------------------------------------------------------------------

struct PhaseEngineSetup {
    SmearingKernel kernel;
    WignerGrid density;
    bool smeared = false;
    std::vector<ClassicalPath> templates;
    std::vector<std::vector<double>> template_Q_strided;
    double threshold = 0.0;
    // discrete record-basis table and Gram for the in-span projection
    std::vector<std::array<double, 2>> phi;
    Mat2 gram_disc;
};

// Record-noise force series, in-span component removed: the smearing of the
// initial data already carries it.
std::vector<double> record_force_series(const PhaseEngineSetup& setup, const ModelParams& p,
                                        Rng& rng) {
    const std::size_t K = setup.phi.size();
    std::vector<double> r(K);
    const double sd = std::sqrt(setup.kernel.record_var_per_step);
    for (auto& v : r) v = sd * rng.normal();
    // least-squares coefficients of r on span{phi} with the dt measure
    double b0 = 0.0, b1 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        b0 += p.dt * r[k] * setup.phi[k][0];
        b1 += p.dt * r[k] * setup.phi[k][1];
    }
    const Mat2 ginv = setup.gram_disc.inverse();
    const double a0 = ginv.qq * b0 + ginv.qp * b1;
    const double a1 = ginv.qp * b0 + ginv.pp * b1;
    for (std::size_t k = 0; k < K; ++k) r[k] -= a0 * setup.phi[k][0] + a1 * setup.phi[k][1];
    return r;
}

PhaseEngineSetup phase_setup(const RunConfig& cfg, const DerivedConstants& consts) {
    PhaseEngineSetup setup;
    const ModelParams& p = cfg.model;
    const std::size_t steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));

    const bool coupled = p.lambda != 0.0;
    if (coupled) {
        setup.kernel = build_smearing(p, consts);
        setup.smeared = true;
        setup.phi.resize(steps);
        for (std::size_t k = 0; k < steps; ++k)
            setup.phi[k] = record_basis(p, static_cast<double>(k) * p.dt);
        Mat2 g;
        for (std::size_t k = 0; k < steps; ++k) {
            g.qq += p.dt * setup.phi[k][0] * setup.phi[k][0];
            g.qp += p.dt * setup.phi[k][0] * setup.phi[k][1];
            g.pp += p.dt * setup.phi[k][1] * setup.phi[k][1];
        }
        setup.gram_disc = g;
    }

    if (cfg.state.has_packets()) {
        const SuperpositionState state = cfg.state.to_superposition(p.hbar);
        // sampling grid spanning every packet plus kernel widths
        double cov_q = setup.smeared ? setup.kernel.cov.qq : 0.0;
        double cov_p = setup.smeared ? setup.kernel.cov.pp : 0.0;
        double q_lo = 1e300, q_hi = -1e300, p_lo = 1e300, p_hi = -1e300;
        for (const auto& t : state.terms) {
            const double sq = std::sqrt(t.packet.s * t.packet.s + cov_q);
            const double sp_pack = p.hbar / (2.0 * t.packet.s);
            const double sp = std::sqrt(sp_pack * sp_pack + cov_p);
            q_lo = std::min(q_lo, t.packet.q0 - 7.0 * sq);
            q_hi = std::max(q_hi, t.packet.q0 + 7.0 * sq);
            p_lo = std::min(p_lo, t.packet.p0 - 7.0 * sp);
            p_hi = std::max(p_hi, t.packet.p0 + 7.0 * sp);
        }
        const Axis qa = Axis::spanning(q_lo, q_hi, cfg.sample_grid_n);
        const Axis pa = Axis::spanning(p_lo, p_hi, cfg.sample_grid_n);
        setup.density = setup.smeared ? smear(state, setup.kernel, qa, pa)
                                      : wigner_transform(state, qa, pa);

        // noiseless templates, one per packet
        for (const auto& t : state.terms) {
            setup.templates.push_back(integrate_branch(cfg.classical,
                                                       {t.packet.q0, t.packet.p0}, cfg.coupling,
                                                       p, consts, cfg.seed, false));
        }
        const std::size_t stride = auto_stride(steps, cfg.path_stride);
        for (const auto& t : setup.templates)
            setup.template_Q_strided.push_back(strided(t.Q, stride));
    } else {
        // grid-file states: grid transform + FFT smear; no packet templates
        const GridWavefunction psi = cfg.state.to_gridwf(p.hbar, cfg.sse_grid);
        const WignerGrid raw = wigner_transform(psi, p.hbar);
        setup.density = setup.smeared ? smear(raw, setup.kernel) : raw;
        // the smeared support must fit the stored axes
        double max_v = 0.0, edge = 0.0;
        const WignerGrid& w = setup.density;
        for (const double v : w.values) max_v = std::max(max_v, std::abs(v));
        for (std::size_t j = 0; j < w.p.n; ++j) {
            edge = std::max(edge, std::abs(w.at(0, j)));
            edge = std::max(edge, std::abs(w.at(w.q.n - 1, j)));
        }
        for (std::size_t i = 0; i < w.q.n; ++i) {
            edge = std::max(edge, std::abs(w.at(i, 0)));
            edge = std::max(edge, std::abs(w.at(i, w.p.n - 1)));
        }
        if (edge > 1e-4 * max_v)
            throw SpanError("smeared phase-space density clipped by the grid box; enlarge "
                            "options.sse_grid");
    }
    // quadrature drift: renormalize the grid mass before inverse-CDF sampling
    const double mass = setup.density.integral();
    for (auto& v : setup.density.values) v /= mass;
    return setup;
}

EnsembleResult run_phase_space(const RunConfig& cfg) {
    const ModelParams& p = cfg.model;
    DerivedConstants consts = derive_constants(p);
    if (p.lambda == 0.0) {
        // uncoupled limit of the total law: the record channel's force noise
        // 2 hbar^2 Dtilde eta survives lambda -> 0, so the white force carries
        // the full eta-free variance here
        consts.force_noise_var = 2.0 * p.hbar * p.hbar * consts.Dtilde;
    }
    PhaseEngineSetup setup = phase_setup(cfg, consts);
    const std::size_t steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
    const std::size_t stride = auto_stride(steps, cfg.path_stride);

    EnsembleResult res;
    res.engine = EngineKind::PhaseSpace;
    res.config_hash = cfg.hash();
    res.master_seed = cfg.seed;
    res.n_runs = cfg.n_runs;
    for (const auto& k : setup.kernel.warnings) res.warnings.push_back(k);
    res.template_Q = setup.template_Q_strided;

    // calibration: noise-only RMS spread around each template fixes the
    // classification threshold at 3x that scale
    double threshold = cfg.classify_threshold;
    if (threshold <= 0.0 && !setup.templates.empty()) {
        MomentAccumulator cal;
        const SuperpositionState state = cfg.state.to_superposition(p.hbar);
        for (std::size_t t = 0; t < setup.templates.size(); ++t) {
            for (std::size_t rep = 0; rep < 16; ++rep) {
                Rng rng(run_seed(cfg.seed ^ 0xca11b7a7e5ULL, t * 97 + rep), 1);
                std::vector<double> rforce;
                if (setup.smeared) rforce = record_force_series(setup, p, rng);
                const auto& pk = state.terms[t].packet;
                ClassicalPath path = integrate_branch(
                    cfg.classical, {pk.q0, pk.p0}, cfg.coupling, p, consts,
                    run_seed(cfg.seed ^ 0x5eedca1ULL, t * 97 + rep), true, rforce);
                const double d =
                    path_distance(strided(path.Q, stride), setup.template_Q_strided[t]);
                cal.add(d * d);
            }
        }
        threshold = 3.0 * std::sqrt(cal.mean);
    }
    res.classify_threshold = threshold;

    const PhaseSampleSet samples =
        sample_phase_space(setup.density, cfg.n_runs, cfg.seed ^ 0x5a11e5ULL);

    res.t_kept.clear();
    for (std::size_t k = 0; k <= steps; k += stride)
        res.t_kept.push_back(static_cast<double>(k) * p.dt);

    res.runs.assign(cfg.n_runs, RunSummary{});
    std::vector<std::vector<double>> q_paths(std::min(cfg.keep_paths, cfg.n_runs));
    std::vector<std::vector<double>> kept_small(q_paths.size());
    std::vector<std::vector<double>> kept_vel(q_paths.size());
    std::vector<std::vector<double>> all_Q(cfg.n_runs);

    parallel_for(cfg.n_runs, cfg.threads, [&](std::size_t i) {
      try {
        Rng rng(run_seed(cfg.seed, i), 2);
        std::vector<double> rforce;
        if (setup.smeared) rforce = record_force_series(setup, p, rng);
        InitialClassicalState init = cfg.classical;
        if (cfg.classical.spread.qq > 0.0 || cfg.classical.spread.pp > 0.0) {
            // independent Gaussian spread of the large-particle initial data
            init.Q0 += std::sqrt(std::max(0.0, cfg.classical.spread.qq)) * rng.normal();
            init.P0 += std::sqrt(std::max(0.0, cfg.classical.spread.pp)) * rng.normal();
        }
        const auto& s = samples.samples[i];
        ClassicalPath path = integrate_branch(init, {s.q0, s.p0}, cfg.coupling, p, consts,
                                              run_seed(cfg.seed ^ 0xf0ceULL, i), true, rforce);
        RunSummary& sum = res.runs[i];
        sum.final_Q = path.Q.back();
        sum.final_Qdot = path.Qdot.back();
        sum.q0 = s.q0;
        sum.p0 = s.p0;
        all_Q[i] = strided(path.Q, stride);
        if (!setup.template_Q_strided.empty()) {
            int best = -1;
            double best_d = 0.0;
            for (std::size_t t = 0; t < setup.template_Q_strided.size(); ++t) {
                const double d = path_distance(all_Q[i], setup.template_Q_strided[t]);
                if (best < 0 || d < best_d) {
                    best = static_cast<int>(t);
                    best_d = d;
                }
            }
            sum.distance = best_d;
            sum.branch = (threshold > 0.0 && best_d > threshold) ? -1 : best;
        }
        if (i < q_paths.size()) {
            q_paths[i] = all_Q[i];
            kept_small[i] = strided(path.q, stride);
            kept_vel[i] = strided(path.Qdot, stride);
        }
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "run " << i << " (master seed " << cfg.seed << "): " << e.what();
        throw Error(os.str());
      }
    });

    // deterministic sequential reduction in run order
    MomentAccumulator mq;
    std::vector<double> finals(cfg.n_runs);
    std::vector<std::size_t> counts(setup.templates.size(), 0);
    std::size_t unclassified = 0;
    res.mean_Q_path.assign(res.t_kept.size(), 0.0);
    res.var_Q_path.assign(res.t_kept.size(), 0.0);
    for (std::size_t i = 0; i < cfg.n_runs; ++i) {
        finals[i] = res.runs[i].final_Q;
        mq.add(res.runs[i].final_Q);
        if (res.runs[i].branch < 0)
            ++unclassified;
        else
            counts[static_cast<std::size_t>(res.runs[i].branch)]++;
        for (std::size_t k = 0; k < res.t_kept.size() && k < all_Q[i].size(); ++k)
            res.mean_Q_path[k] += all_Q[i][k];
    }
    for (auto& v : res.mean_Q_path) v /= static_cast<double>(cfg.n_runs);
    for (std::size_t i = 0; i < cfg.n_runs; ++i)
        for (std::size_t k = 0; k < res.t_kept.size() && k < all_Q[i].size(); ++k) {
            const double d = all_Q[i][k] - res.mean_Q_path[k];
            res.var_Q_path[k] += d * d;
        }
    if (cfg.n_runs > 1)
        for (auto& v : res.var_Q_path) v /= static_cast<double>(cfg.n_runs - 1);

    res.mean_final_Q = mq.mean;
    res.var_final_Q = mq.variance();
    res.hist_final_Q = make_histogram(finals, 64);
    const double n_classified = static_cast<double>(cfg.n_runs - unclassified);
    res.branch_fractions.resize(counts.size());
    res.branch_fraction_se.resize(counts.size());
    for (std::size_t t = 0; t < counts.size(); ++t) {
        const double f = n_classified > 0 ? static_cast<double>(counts[t]) / n_classified : 0.0;
        res.branch_fractions[t] = f;
        res.branch_fraction_se[t] =
            n_classified > 0 ? std::sqrt(std::max(f * (1.0 - f), 1e-12) / n_classified) : 0.0;
    }
    res.unclassified_fraction =
        setup.templates.empty()
            ? 0.0
            : static_cast<double>(unclassified) / static_cast<double>(cfg.n_runs);
    if (res.unclassified_fraction > 0.5)
        res.warnings.push_back("unclassified fraction above 50%: template separation below the "
                               "noise scale");
    res.kept_Q = std::move(q_paths);
    res.kept_q = std::move(kept_small);
    res.kept_Qdot = std::move(kept_vel);
    return res;
}

// ---------------------------------------------------------------------------
// sse engine
// ---------------------------------------------------------------------------

EnsembleResult run_sse(const RunConfig& cfg) {
    const ModelParams& p = cfg.model;
    const DerivedConstants consts = derive_constants(p);
    const std::size_t steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
    const std::size_t stride = auto_stride(steps, cfg.path_stride);

    const GridWavefunction psi0 = cfg.state.to_gridwf(p.hbar, cfg.sse_grid);

    EnsembleResult res;
    res.engine = EngineKind::Sse;
    res.config_hash = cfg.hash();
    res.master_seed = cfg.seed;
    res.n_runs = cfg.n_runs;

    // templates on the small-particle expectation path: deterministic branches
    std::vector<std::vector<double>> templates_q;
    std::vector<ClassicalPath> templates;
    if (cfg.state.has_packets()) {
        const SuperpositionState state = cfg.state.to_superposition(p.hbar);
        for (const auto& t : state.terms) {
            ClassicalPath tpl = integrate_branch(cfg.classical, {t.packet.q0, t.packet.p0},
                                                 cfg.coupling, p, consts, cfg.seed, false);
            templates_q.push_back(strided(tpl.q, stride));
            templates.push_back(std::move(tpl));
        }
        for (const auto& t : templates) res.template_Q.push_back(strided(t.Q, stride));
    }

    res.t_kept.clear();
    for (std::size_t k = 0; k <= steps; k += stride)
        res.t_kept.push_back(static_cast<double>(k) * p.dt);

    res.runs.assign(cfg.n_runs, RunSummary{});
    std::vector<std::vector<double>> all_Q(cfg.n_runs), all_q(cfg.n_runs);
    const std::size_t n_keep = std::min(cfg.keep_paths, cfg.n_runs);
    std::vector<std::vector<double>> keep_vel(n_keep), keep_var(n_keep), keep_rec(n_keep);
    std::vector<double> defects(cfg.n_runs, 0.0), post_defects(cfg.n_runs, 0.0);

    parallel_for(cfg.n_runs, cfg.threads, [&](std::size_t i) {
      try {
        CoupledRunResult run = coupled_run(psi0, cfg.classical, cfg.coupling, p, consts,
                                           run_seed(cfg.seed, i), p.duration);
        RunSummary& sum = res.runs[i];
        sum.final_Q = run.path.Q.back();
        sum.final_Qdot = run.path.Qdot.back();
        sum.q0 = run.path.q.front();
        sum.p0 = 0.0;
        all_Q[i] = strided(run.path.Q, stride);
        all_q[i] = strided(run.path.q, stride);
        defects[i] = run.state.max_norm_defect;
        post_defects[i] = run.state.max_post_norm_defect;
        if (i < n_keep) {
            keep_vel[i] = strided(run.path.Qdot, stride);
            keep_var[i] = strided(run.var_q, stride);
            keep_rec[i] = strided(run.path.qbar, stride);
        }
        if (!templates_q.empty()) {
            int best = -1;
            double best_d = 0.0;
            for (std::size_t t = 0; t < templates_q.size(); ++t) {
                const double d = path_distance(all_q[i], templates_q[t]);
                if (best < 0 || d < best_d) {
                    best = static_cast<int>(t);
                    best_d = d;
                }
            }
            sum.branch = best;
            sum.distance = best_d;
        }
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "run " << i << " (master seed " << cfg.seed << "): " << e.what();
        throw Error(os.str());
      }
    });

    MomentAccumulator mq;
    std::vector<double> finals(cfg.n_runs);
    std::vector<std::size_t> counts(templates_q.size(), 0);
    res.mean_Q_path.assign(res.t_kept.size(), 0.0);
    res.var_Q_path.assign(res.t_kept.size(), 0.0);
    for (std::size_t i = 0; i < cfg.n_runs; ++i) {
        finals[i] = res.runs[i].final_Q;
        mq.add(res.runs[i].final_Q);
        if (res.runs[i].branch >= 0) counts[static_cast<std::size_t>(res.runs[i].branch)]++;
        res.max_norm_defect = std::max(res.max_norm_defect, defects[i]);
        res.max_post_norm_defect = std::max(res.max_post_norm_defect, post_defects[i]);
        for (std::size_t k = 0; k < res.t_kept.size() && k < all_Q[i].size(); ++k)
            res.mean_Q_path[k] += all_Q[i][k];
    }
    for (auto& v : res.mean_Q_path) v /= static_cast<double>(cfg.n_runs);
    res.mean_final_Q = mq.mean;
    res.var_final_Q = mq.variance();
    res.hist_final_Q = make_histogram(finals, 64);
    if (!counts.empty()) {
        res.branch_fractions.resize(counts.size());
        res.branch_fraction_se.resize(counts.size());
        for (std::size_t t = 0; t < counts.size(); ++t) {
            const double f = static_cast<double>(counts[t]) / static_cast<double>(cfg.n_runs);
            res.branch_fractions[t] = f;
            res.branch_fraction_se[t] =
                std::sqrt(std::max(f * (1.0 - f), 1e-12) / static_cast<double>(cfg.n_runs));
        }
    }
    for (std::size_t i = 0; i < n_keep; ++i) {
        res.kept_Q.push_back(all_Q[i]);
        res.kept_q.push_back(all_q[i]);
    }
    res.kept_Qdot = std::move(keep_vel);
    res.kept_varq = std::move(keep_var);
    res.kept_qbar = std::move(keep_rec);
    return res;
}

// ---------------------------------------------------------------------------
// mean-field and energy engines
// ---------------------------------------------------------------------------

EnsembleResult run_meanfield_engine(const RunConfig& cfg) {
    const ModelParams& p = cfg.model;
    const std::size_t steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
    const std::size_t stride = auto_stride(steps, cfg.path_stride);
    const GridWavefunction psi0 = cfg.state.to_gridwf(p.hbar, cfg.sse_grid);
    MeanFieldResult mf = integrate_meanfield(cfg.classical, cfg.coupling, p, psi0);

    EnsembleResult res;
    res.engine = EngineKind::MeanField;
    res.config_hash = cfg.hash();
    res.master_seed = cfg.seed;
    res.n_runs = 1;
    RunSummary sum;
    sum.final_Q = mf.path.Q.back();
    sum.final_Qdot = mf.path.Qdot.back();
    sum.q0 = mf.path.q.front();
    res.runs.push_back(sum);
    res.mean_final_Q = sum.final_Q;
    res.t_kept.clear();
    for (std::size_t k = 0; k <= steps; k += stride)
        res.t_kept.push_back(static_cast<double>(k) * p.dt);
    res.kept_Q.push_back(strided(mf.path.Q, stride));
    res.kept_q.push_back(strided(mf.path.q, stride));
    res.kept_Qdot.push_back(strided(mf.path.Qdot, stride));
    res.mean_Q_path = res.kept_Q.front();
    res.var_Q_path.assign(res.t_kept.size(), 0.0);
    res.hist_final_Q = make_histogram({sum.final_Q}, 1);
    // energy audit: relative drift of the total energy
    const double e0 = mf.energy.front();
    double max_drift = 0.0;
    for (const double e : mf.energy)
        max_drift = std::max(max_drift, std::abs(e - e0) / std::max(1.0, std::abs(e0)));
    if (max_drift > 1e-4) {
        std::ostringstream os;
        os << "mean-field energy drift " << max_drift << " exceeds 1e-4";
        res.warnings.push_back(os.str());
    }
    return res;
}

EnsembleResult run_energy_engine(const RunConfig& cfg) {
    const ModelParams& p = cfg.model;
    const DerivedConstants consts = derive_constants(p);
    std::vector<EnergyLevel> populations;
    if (!cfg.state.grid_file.empty()) {
        populations = energy_decompose(cfg.state.to_gridwf(p.hbar, cfg.sse_grid), p,
                                       cfg.energy_n_max);
    } else {
        populations = energy_decompose(cfg.state.to_superposition(p.hbar), p, cfg.energy_n_max);
    }
    EnergyBranchSet set = run_energy_ensemble(populations, cfg.coupling.g, cfg.classical, p,
                                              consts, cfg.n_runs, cfg.seed);

    EnsembleResult res;
    res.engine = EngineKind::Energy;
    res.config_hash = cfg.hash();
    res.master_seed = cfg.seed;
    res.n_runs = cfg.n_runs;
    res.populations = set.populations;
    res.energy_frequencies = set.frequencies;
    res.energy_frequency_se = set.frequency_se;
    res.energy_weight_density = set.weight;
    const std::size_t steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
    const std::size_t stride = auto_stride(steps, cfg.path_stride);
    res.t_kept.clear();
    for (std::size_t k = 0; k <= steps; k += stride)
        res.t_kept.push_back(static_cast<double>(k) * p.dt);
    for (const auto& t : set.branch_templates) res.template_Q.push_back(strided(t.Q, stride));
    MomentAccumulator mq;
    res.runs.resize(cfg.n_runs);
    for (std::size_t i = 0; i < cfg.n_runs; ++i) {
        res.runs[i].final_Q = set.final_Q[i];
        res.runs[i].branch = static_cast<int>(set.branch_of_run[i]);
        mq.add(set.final_Q[i]);
    }
    res.mean_final_Q = mq.mean;
    res.var_final_Q = mq.variance();
    res.hist_final_Q = make_histogram(set.final_Q, 64);
    res.branch_fractions = set.frequencies;
    res.branch_fraction_se = set.frequency_se;
    return res;
}

}  // namespace

EnsembleResult run_ensemble(const RunConfig& cfg) {
    if (cfg.n_runs < 1) throw ConfigError("n_runs must be >= 1");
    switch (cfg.engine) {
        case EngineKind::PhaseSpace: return run_phase_space(cfg);
        case EngineKind::Sse: return run_sse(cfg);
        case EngineKind::MeanField: return run_meanfield_engine(cfg);
        case EngineKind::Energy: return run_energy_engine(cfg);
    }
    throw Error("unreachable engine kind");
}

std::vector<DivergencePoint> compare_meanfield(const RunConfig& base,
                                               const std::vector<double>& lambda_sweep) {
    if (!base.coupling.linear_coupling())
        throw PreconditionError("compare_meanfield sweeps the linear coupling strength");
    std::vector<DivergencePoint> curve;
    for (const double lam : lambda_sweep) {
        RunConfig cfg = base;
        cfg.model.lambda = lam;
        cfg.coupling = CouplingSpec::linear(lam);
        cfg.coupling.V = base.coupling.V;
        cfg.engine = EngineKind::PhaseSpace;
        // common random numbers across the sweep: identical master seed
        EnsembleResult ps = run_ensemble(cfg);

        RunConfig mf_cfg = cfg;
        mf_cfg.engine = EngineKind::MeanField;
        EnsembleResult mf = run_ensemble(mf_cfg);
        if (ps.t_kept.size() != mf.t_kept.size())
            throw Error("compare_meanfield: engines produced mismatched time grids");

        DivergencePoint pt;
        pt.lambda = lam;
        pt.n = ps.n_runs;
        double acc = 0.0, err = 0.0;
        for (std::size_t k = 0; k < ps.t_kept.size(); ++k) {
            const double d = ps.mean_Q_path[k] - mf.mean_Q_path[k];
            acc += d * d;
            err += ps.var_Q_path[k] / static_cast<double>(ps.n_runs);
        }
        pt.D = std::sqrt(acc / static_cast<double>(ps.t_kept.size()));
        pt.mc_err = std::sqrt(err / static_cast<double>(ps.t_kept.size()));
        curve.push_back(pt);
    }
    return curve;
}

nlohmann::json summary_json(const EnsembleResult& r) {
    nlohmann::json j;
    j["engine"] = engine_name(r.engine);
    j["config_hash"] = r.config_hash;
    j["seed"] = r.master_seed;
    j["n_runs"] = r.n_runs;
    j["final_Q"] = {{"mean", r.mean_final_Q}, {"variance", r.var_final_Q}};
    j["branch_fractions"] = r.branch_fractions;
    j["branch_fraction_se"] = r.branch_fraction_se;
    j["unclassified_fraction"] = r.unclassified_fraction;
    j["classify_threshold"] = r.classify_threshold;
    j["warnings"] = r.warnings;
    if (r.engine == EngineKind::Sse) {
        j["max_norm_defect"] = r.max_norm_defect;
        j["max_post_norm_defect"] = r.max_post_norm_defect;
    }
    if (r.engine == EngineKind::Energy) {
        nlohmann::json pops = nlohmann::json::array();
        for (const auto& lvl : r.populations) pops.push_back({{"E", lvl.E}, {"rho", lvl.rho}});
        j["populations"] = pops;
        j["energy_frequencies"] = r.energy_frequencies;
    }
    return j;
}

}  // namespace scdyn
