#include "scdyn/sse.hpp"

#include <cmath>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/fft.hpp"

namespace scdyn {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

void ensure_cache(SSEState& s, const ModelParams& p) {
    SSEState::StepCache& c = s.cache;
    if (c.n == s.psi.n && c.dq == s.psi.dq() && c.q_min == s.psi.q_min && c.dt == p.dt &&
        c.m == p.m && c.omega == p.omega && c.hbar == p.hbar)
        return;
    c.n = s.psi.n;
    c.dq = s.psi.dq();
    c.q_min = s.psi.q_min;
    c.dt = p.dt;
    c.m = p.m;
    c.omega = p.omega;
    c.hbar = p.hbar;
    const double L = s.psi.q_max - s.psi.q_min;
    c.kin_half.resize(c.n);
    c.quad_quarter.resize(c.n);
    for (std::size_t j = 0; j < c.n; ++j) {
        const std::ptrdiff_t jt = (j < c.n / 2) ? static_cast<std::ptrdiff_t>(j)
                                                : static_cast<std::ptrdiff_t>(j) -
                                                      static_cast<std::ptrdiff_t>(c.n);
        const double pk = p.hbar * 2.0 * kPi * static_cast<double>(jt) / L;
        c.kin_half[j] = std::exp(cplx(0.0, -pk * pk * (0.5 * p.dt) / (2.0 * p.m * p.hbar)));
        const double x = s.psi.node(j);
        const double V = 0.5 * p.m * p.omega * p.omega * x * x;
        c.quad_quarter[j] = std::exp(cplx(0.0, -V * (0.25 * p.dt) / p.hbar));
    }
}

// multiply by exp(-i g(Q) f(x) tau / hbar) on top of the cached quadratic kick
void source_kick(SSEState& s, const CouplingSpec& coupling, double Q_t, double tau,
                 double hbar) {
    auto& psi = s.psi.values;
    const std::size_t n = s.psi.n;
    const double gq = coupling.g_val(Q_t);
    for (std::size_t j = 0; j < n; ++j) psi[j] *= s.cache.quad_quarter[j];
    if (gq == 0.0) return;
    const bool linear_f = coupling.f.size() == 2 && coupling.f[0] == 0.0 && coupling.f[1] == 1.0;
    if (linear_f) {
        // exp(-i gq x_j tau) via one exponential and a unit-modulus recurrence
        const cplx step = std::exp(cplx(0.0, -gq * s.psi.dq() * tau / hbar));
        cplx f = std::exp(cplx(0.0, -gq * s.psi.q_min * tau / hbar));
        for (std::size_t j = 0; j < n; ++j) {
            psi[j] *= f;
            f *= step;
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = s.psi.node(j);
            psi[j] *= std::exp(cplx(0.0, -gq * coupling.f_val(x) * tau / hbar));
        }
    }
}

}  // namespace

void SSEState::refresh_moments(double hbar) {
    mean_q = grid_mean_q(psi);
    var_q = grid_var_q(psi);
    mean_p = grid_mean_p(psi, hbar);
}

void sse_step(SSEState& s, double Q_t, const CouplingSpec& coupling, const ModelParams& params,
              const DerivedConstants& consts, double dW) {
    if (!consts.coupling_defined)
        throw InfiniteSmearingError("sigma1 undefined at lambda = 0; the SSE needs lambda != 0");
    ensure_cache(s, params);
    auto& psi = s.psi.values;
    const std::size_t n = s.psi.n;
    const double dq = s.psi.dq();
    const double dt = params.dt;
    const double s1sq = consts.sigma1_sq;
    const double s1 = std::sqrt(s1sq);

    // localization must stay resolvable on the grid (moments kept current by
    // the previous step or by refresh_moments at initialization)
    if (std::sqrt(s.var_q) < 4.0 * dq) {
        std::ostringstream os;
        os << "wavepacket width " << std::sqrt(s.var_q) << " below 4 grid cells (" << 4.0 * dq
           << "); refine the grid";
        throw LocalizationResolutionError(os.str());
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    auto kin_half_drift = [&](bool measure_p) {
        fft(psi, -1);
        if (measure_p) {
            // running <p> diagnostic, taken while the state sits in k-space
            const double L = s.psi.q_max - s.psi.q_min;
            double acc = 0.0, ktot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const std::ptrdiff_t jt = (j < n / 2) ? static_cast<std::ptrdiff_t>(j)
                                                      : static_cast<std::ptrdiff_t>(j) -
                                                            static_cast<std::ptrdiff_t>(n);
                const double pk = params.hbar * 2.0 * kPi * static_cast<double>(jt) / L;
                const double w = std::norm(psi[j]);
                acc += pk * w;
                ktot += w;
            }
            s.mean_p = acc / ktot;
        }
        for (std::size_t j = 0; j < n; ++j) psi[j] *= s.cache.kin_half[j];
        fft(psi, +1);
        for (auto& v : psi) v *= inv_n;
    };

    // Hamiltonian half-step (Strang inside: quarter kick, half drift, quarter kick)
    source_kick(s, coupling, Q_t, 0.25 * dt, params.hbar);
    kin_half_drift(false);
    source_kick(s, coupling, Q_t, 0.25 * dt, params.hbar);

    // Ito measurement substep: psi <- (1 - dt X^2/s1^2 + dW X/s1) psi, X = q - <q>
    double mq = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::norm(psi[i]);
        mq += s.psi.node(i) * w;
        tot += w;
    }
    mq /= tot;
    for (std::size_t i = 0; i < n; ++i) {
        const double X = s.psi.node(i) - mq;
        psi[i] *= 1.0 - dt * X * X / s1sq + dW * X / s1;
    }

    source_kick(s, coupling, Q_t, 0.25 * dt, params.hbar);
    kin_half_drift(true);
    source_kick(s, coupling, Q_t, 0.25 * dt, params.hbar);

    const double norm = std::sqrt(s.psi.norm_sq());
    s.last_norm_defect = std::abs(norm - 1.0);
    s.max_norm_defect = std::max(s.max_norm_defect, s.last_norm_defect);
    const double inv_norm = 1.0 / norm;
    for (auto& v : psi) v *= inv_norm;

    // fused post-step moments and the post-normalization defect
    double w_tot = 0.0, w_x = 0.0, w_xx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::norm(psi[i]);
        const double x = s.psi.node(i);
        w_tot += w;
        w_x += w * x;
        w_xx += w * x * x;
    }
    s.max_post_norm_defect =
        std::max(s.max_post_norm_defect, std::abs(std::sqrt(w_tot * dq) - 1.0));
    s.mean_q = w_x / w_tot;
    s.var_q = std::max(0.0, w_xx / w_tot - s.mean_q * s.mean_q);

    s.t += dt;
}

double measurement_record(SSEState& s, const DerivedConstants& consts, double eta) {
    const double qbar = s.mean_q + 0.5 * std::sqrt(consts.sigma1_sq) * eta;
    s.record.push_back(qbar);
    return qbar;
}

CoupledRunResult coupled_run(const GridWavefunction& psi0, const InitialClassicalState& init,
                             const CouplingSpec& coupling, const ModelParams& params,
                             const DerivedConstants& consts, std::uint64_t seed, double tau,
                             bool share_noise) {
    if (!coupling.linear_coupling())
        throw PreconditionError("coupled_run requires the linear coupling g(Q) = lambda Q, "
                                "f(x) = x");
    psi0.check();
    const double dt = params.dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(tau / dt));
    const double lambda = coupling.linear_lambda();
    const double s1 = std::sqrt(consts.sigma1_sq);

    CoupledRunResult out;
    out.state.psi = psi0;
    out.state.seed = seed;
    out.state.refresh_moments(params.hbar);

    ClassicalPath& path = out.path;
    path.dt = dt;
    path.variant = "sse";
    path.seed = seed;
    path.with_noise = true;
    path.t.resize(steps + 1);
    path.Q.resize(steps + 1);
    path.Qdot.resize(steps + 1);
    path.q.resize(steps + 1);
    path.qbar.resize(steps + 1);
    out.var_q.resize(steps + 1);

    Rng rng(seed, 0x6d2b79f5ULL);
    Rng rng_indep(seed, 0x52dce729ULL);  // ablation mode: independent record noise

    double Q = init.Q0, P = init.P0;
    path.t[0] = 0.0;
    path.Q[0] = Q;
    path.Qdot[0] = P / params.M;
    path.q[0] = out.state.mean_q;
    out.var_q[0] = out.state.var_q;
    const double sqrt_dt = std::sqrt(dt);

    for (std::size_t k = 0; k < steps; ++k) {
        const double dW = sqrt_dt * rng.normal();
        const double eta = dW / dt;  // white noise sample, variance 1/dt
        const double eta_rec = share_noise ? eta : rng_indep.normal() / sqrt_dt;
        path.qbar[k] = measurement_record(out.state, consts, eta_rec);

        const double mean_q_before = out.state.mean_q;
        // M Qdd + lambda <q> + (lambda sigma1/2) eta = 0, noise impulse up front
        P += 0.5 * dt * (-lambda * mean_q_before) + dt * (-0.5 * lambda * s1 * eta);
        Q += dt * P / params.M;
        sse_step(out.state, path.Q[k], coupling, params, consts, dW);
        P += 0.5 * dt * (-lambda * out.state.mean_q);

        path.t[k + 1] = static_cast<double>(k + 1) * dt;
        path.Q[k + 1] = Q;
        path.Qdot[k + 1] = P / params.M;
        path.q[k + 1] = out.state.mean_q;
        out.var_q[k + 1] = out.state.var_q;
    }
    path.qbar[steps] = out.state.mean_q;
    return out;
}

}  // namespace scdyn
