#include "scdyn/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/rng.hpp"

namespace scdyn {

EnergyWeight energy_weight(const std::vector<EnergyLevel>& populations,
                           const ModelParams& params, const DerivedConstants& consts, double tau,
                           const Axis& ebar_axis) {
    if (params.lambda == 0.0)
        throw InfiniteSmearingError("energy weight undefined at lambda = 0");
    const double coef = params.lambda * params.lambda * tau /
                        (4.0 * params.hbar * params.hbar * consts.Dtilde * params.eta);
    EnergyWeight out;
    out.ebar = ebar_axis;
    // exp(-coef (E-Ebar)^2) = exp(-(E-Ebar)^2 / (2 width^2))
    out.width = std::sqrt(0.5 / coef);
    for (const auto& lvl : populations) {
        if (lvl.rho <= 0.0) continue;
        if (lvl.E - 5.0 * out.width < ebar_axis.min || lvl.E + 5.0 * out.width > ebar_axis.max()) {
            std::ostringstream os;
            os << "Ebar grid [" << ebar_axis.min << ", " << ebar_axis.max()
               << "] does not cover level E = " << lvl.E << " within 5 widths (" << out.width
               << ")";
            throw SpanError(os.str());
        }
    }
    out.density.assign(ebar_axis.n, 0.0);
    for (std::size_t i = 0; i < ebar_axis.n; ++i) {
        const double e = ebar_axis.value(i);
        double acc = 0.0;
        for (const auto& lvl : populations) {
            const double d = e - lvl.E;
            acc += lvl.rho * std::exp(-coef * d * d);
        }
        out.density[i] = acc;
    }
    double mass = 0.0;
    for (const double v : out.density) mass += v;
    mass *= ebar_axis.step;
    for (auto& v : out.density) v /= mass;
    return out;
}

ClassicalPath branch_trajectory(double E, const std::vector<double>& gX,
                                const InitialClassicalState& init, const ModelParams& params,
                                std::uint64_t seed, bool with_noise) {
    if (E < 0.0) throw PreconditionError("oscillator branch energies are nonnegative");
    const DerivedConstants consts = derive_constants(params);
    const double dt = params.dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(params.duration / dt));

    CouplingSpec coupling;
    coupling.g = gX;

    ClassicalPath path;
    path.dt = dt;
    path.variant = "energy";
    path.seed = seed;
    path.with_noise = with_noise;
    path.t.resize(steps + 1);
    path.Q.resize(steps + 1);
    path.Qdot.resize(steps + 1);
    path.q.assign(steps + 1, E);     // branch label series: the measured energy
    path.qbar.assign(steps + 1, E);  // force residual uses g'(Q) E

    Rng rng(seed, 0x9e377cbULL);
    const double xi_sd = with_noise ? std::sqrt(2.0 * params.hbar * params.hbar * consts.Dtilde / dt)
                                    : 0.0;

    double Q = init.Q0, P = init.P0;
    path.t[0] = 0.0;
    path.Q[0] = Q;
    path.Qdot[0] = P / params.M;
    auto F = [&](double Qv) { return -coupling.g_prime(Qv) * E; };
    for (std::size_t k = 0; k < steps; ++k) {
        const double xi = with_noise ? xi_sd * rng.normal() : 0.0;
        P += 0.5 * dt * F(Q) + dt * xi;
        Q += dt * P / params.M;
        P += 0.5 * dt * F(Q);
        path.t[k + 1] = static_cast<double>(k + 1) * dt;
        path.Q[k + 1] = Q;
        path.Qdot[k + 1] = P / params.M;
    }
    return path;
}

EnergyBranchSet run_energy_ensemble(const std::vector<EnergyLevel>& populations,
                                    const std::vector<double>& gX,
                                    const InitialClassicalState& init, const ModelParams& params,
                                    const DerivedConstants& consts, std::size_t n,
                                    std::uint64_t seed) {
    double total = 0.0;
    for (const auto& lvl : populations) total += lvl.rho;
    if (total < 1.0 - 1e-6) {
        std::ostringstream os;
        os << "populations capture only " << total << " of the norm; raise the level cutoff";
        throw TruncationError(os.str());
    }

    EnergyBranchSet out;
    out.populations = populations;
    out.tau = params.duration;
    double emax = 0.0;
    for (const auto& lvl : populations) emax = std::max(emax, lvl.E);
    const double coef = params.lambda != 0.0
                            ? params.lambda * params.lambda * params.duration /
                                  (4.0 * params.hbar * params.hbar * consts.Dtilde * params.eta)
                            : 0.0;
    if (params.lambda != 0.0) {
        const double width = std::sqrt(0.5 / coef);
        const Axis ebar = Axis::spanning(-6.0 * width, emax + 6.0 * width, 512);
        out.weight = energy_weight(populations, params, consts, params.duration, ebar);
    }
    for (const auto& lvl : populations)
        out.branch_templates.push_back(branch_trajectory(lvl.E, gX, init, params, seed, false));

    std::vector<double> cdf(populations.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < populations.size(); ++i) {
        acc += populations[i].rho;
        cdf[i] = acc;
    }

    out.counts.assign(populations.size(), 0);
    out.final_Q.resize(n);
    out.branch_of_run.resize(n);
    for (std::size_t run = 0; run < n; ++run) {
        Rng pick(seed, 0xa02bdbf7ULL + run);
        const double u = pick.uniform() * acc;
        std::size_t branch = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (branch >= populations.size()) branch = populations.size() - 1;
        const ClassicalPath p = branch_trajectory(populations[branch].E, gX, init, params,
                                                  seed ^ (0x51ed2701ULL + run * 2654435761ULL),
                                                  true);
        out.counts[branch]++;
        out.branch_of_run[run] = branch;
        out.final_Q[run] = p.Q.back();
    }
    out.frequencies.resize(populations.size());
    out.frequency_se.resize(populations.size());
    for (std::size_t i = 0; i < populations.size(); ++i) {
        const double f = static_cast<double>(out.counts[i]) / static_cast<double>(n);
        out.frequencies[i] = f;
        out.frequency_se[i] = std::sqrt(std::max(f * (1.0 - f), 1e-12) / static_cast<double>(n));
    }
    return out;
}

}  // namespace scdyn
