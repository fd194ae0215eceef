#include "scdyn/trajectories.hpp"

#include <cmath>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/fft.hpp"

namespace scdyn {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double poly_val(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

double poly_prime(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) acc = acc * x + c[i] * static_cast<double>(i);
    return acc;
}

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

void check_resolution(const CouplingSpec& coupling, const InitialClassicalState& init,
                      const ModelParams& p) {
    double max_rate = p.omega;
    // local large-particle frequency from the quadratic part of V at Q0
    if (coupling.V.size() >= 3) {
        const double Vpp = 2.0 * coupling.V[2];
        if (Vpp > 0.0) max_rate = std::max(max_rate, std::sqrt(Vpp / p.M));
    }
    (void)init;
    const double dt_max = 1.0 / (20.0 * max_rate);
    if (p.dt > dt_max) {
        std::ostringstream os;
        os << "dt = " << p.dt << " does not resolve the fastest dynamical rate; use dt <= "
           << dt_max;
        throw ResolutionError(os.str());
    }
}

}  // namespace

CouplingSpec CouplingSpec::linear(double lambda) {
    CouplingSpec c;
    c.V = {};
    c.g = {0.0, lambda};
    c.f = {0.0, 1.0};
    return c;
}

double CouplingSpec::V_val(double X) const { return poly_val(V, X); }
double CouplingSpec::V_prime(double X) const { return poly_prime(V, X); }
double CouplingSpec::g_val(double X) const { return poly_val(g, X); }
double CouplingSpec::g_prime(double X) const { return poly_prime(g, X); }
double CouplingSpec::f_val(double x) const { return poly_val(f, x); }
double CouplingSpec::f_prime(double x) const { return poly_prime(f, x); }

bool CouplingSpec::linear_coupling() const {
    const bool g_lin = g.size() <= 2 && (g.empty() || g[0] == 0.0);
    const bool f_id = f.size() == 2 && f[0] == 0.0 && f[1] == 1.0;
    return g_lin && f_id;
}

double CouplingSpec::linear_lambda() const { return g.size() >= 2 ? g[1] : 0.0; }

double green_function(const ModelParams& p, double t, double t_prime) {
    if (t < t_prime) return 0.0;  // retarded: causality, not an error
    const double dt = t - t_prime;
    return -dt * sinc(p.omega * dt) / p.m;
}

ClassicalPath integrate_branch(const InitialClassicalState& init,
                               std::pair<double, double> phase_sample,
                               const CouplingSpec& coupling, const ModelParams& params,
                               const DerivedConstants& consts, std::uint64_t seed,
                               bool with_noise, std::span<const double> record_force) {
    check_resolution(coupling, init, params);
    const double dt = params.dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(params.duration / dt));
    if (!record_force.empty() && record_force.size() != steps)
        throw PreconditionError("record_force must supply one value per step");

    ClassicalPath path;
    path.dt = dt;
    path.variant = "branch";
    path.seed = seed;
    path.with_noise = with_noise;
    path.q0 = phase_sample.first;
    path.p0 = phase_sample.second;
    path.t.resize(steps + 1);
    path.Q.resize(steps + 1);
    path.Qdot.resize(steps + 1);
    path.q.resize(steps + 1);
    path.qbar.resize(steps + 1);

    Rng rng(seed, 0x17b9e2dULL);
    const double xi_sd = with_noise ? std::sqrt(consts.force_noise_var / dt) : 0.0;

    double Q = init.Q0, P = init.P0;
    double q = phase_sample.first, pm = phase_sample.second;

    auto FQ = [&](double Qv, double qv) {
        return -coupling.V_prime(Qv) - coupling.g_prime(Qv) * coupling.f_val(qv);
    };
    auto Fq = [&](double qv, double Qv) {
        return -(params.m * params.omega * params.omega * qv +
                 coupling.g_val(Qv) * coupling.f_prime(qv));
    };

    path.t[0] = 0.0;
    path.Q[0] = Q;
    path.Qdot[0] = P / params.M;
    path.q[0] = q;
    path.qbar[0] = coupling.f_val(q) + (record_force.empty() ? 0.0 : record_force[0]);

    for (std::size_t k = 0; k < steps; ++k) {
        const double r_k = record_force.empty() ? 0.0 : record_force[k];
        const double xi_k = with_noise ? xi_sd * rng.normal() : 0.0;
        // full impulse of the stochastic terms in the first half-kick keeps the
        // three-point recursion M Qdd_k = F_k + xi_k - g'(Q_k) r_k exact
        P += 0.5 * dt * FQ(Q, q) + dt * (xi_k - coupling.g_prime(Q) * r_k);
        pm += 0.5 * dt * Fq(q, Q);
        Q += dt * P / params.M;
        q += dt * pm / params.m;
        P += 0.5 * dt * FQ(Q, q);
        pm += 0.5 * dt * Fq(q, Q);

        path.t[k + 1] = static_cast<double>(k + 1) * dt;
        path.Q[k + 1] = Q;
        path.Qdot[k + 1] = P / params.M;
        path.q[k + 1] = q;
        const double r_next = (record_force.empty() || k + 1 >= steps) ? 0.0 : record_force[k + 1];
        path.qbar[k + 1] = coupling.f_val(q) + r_next;
    }
    return path;
}

MeanFieldResult integrate_meanfield(const InitialClassicalState& init,
                                    const CouplingSpec& coupling, const ModelParams& params,
                                    const GridWavefunction& psi0) {
    psi0.check();
    check_resolution(coupling, init, params);
    const double dt = params.dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(params.duration / dt));
    const std::size_t n = psi0.n;
    const double dq = psi0.dq();
    const double L = psi0.q_max - psi0.q_min;

    MeanFieldResult out;
    out.psi = psi0;
    auto& psi = out.psi.values;

    std::vector<double> x(n), kin_phase_re(n), kin_phase_im(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = psi0.node(i);
    std::vector<cplx> kin_factor(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::ptrdiff_t jt = (j < n / 2) ? static_cast<std::ptrdiff_t>(j)
                                              : static_cast<std::ptrdiff_t>(j) -
                                                    static_cast<std::ptrdiff_t>(n);
        const double p = params.hbar * 2.0 * kPi * static_cast<double>(jt) / L;
        kin_factor[j] = std::exp(cplx(0.0, -p * p * dt / (2.0 * params.m * params.hbar)));
    }

    auto mean_f = [&]() {
        double acc = 0.0, tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::norm(psi[i]);
            acc += coupling.f_val(x[i]) * w;
            tot += w;
        }
        return acc / tot;
    };
    auto mean_x = [&]() {
        double acc = 0.0, tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::norm(psi[i]);
            acc += x[i] * w;
            tot += w;
        }
        return acc / tot;
    };
    auto small_energy = [&](double Qv) {
        std::vector<cplx> ft(psi);
        fft(ft, -1);
        double kin = 0.0, tot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::ptrdiff_t jt = (j < n / 2) ? static_cast<std::ptrdiff_t>(j)
                                                  : static_cast<std::ptrdiff_t>(j) -
                                                        static_cast<std::ptrdiff_t>(n);
            const double p = params.hbar * 2.0 * kPi * static_cast<double>(jt) / L;
            const double w = std::norm(ft[j]);
            kin += p * p / (2.0 * params.m) * w;
            tot += w;
        }
        kin /= tot;
        double pot = 0.0, totx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::norm(psi[i]);
            pot += (0.5 * params.m * params.omega * params.omega * x[i] * x[i] +
                    coupling.g_val(Qv) * coupling.f_val(x[i])) *
                   w;
            totx += w;
        }
        return kin + pot / totx;
    };
    auto leakage = [&]() {
        return (std::norm(psi[0]) + std::norm(psi[1]) + std::norm(psi[n - 2]) +
                std::norm(psi[n - 1])) *
               dq;
    };
    auto pot_kick = [&](double Qv, double tau) {
        const double gq = coupling.g_val(Qv);
        for (std::size_t i = 0; i < n; ++i) {
            const double V = 0.5 * params.m * params.omega * params.omega * x[i] * x[i] +
                             gq * coupling.f_val(x[i]);
            psi[i] *= std::exp(cplx(0.0, -V * tau / params.hbar));
        }
    };

    ClassicalPath& path = out.path;
    path.dt = dt;
    path.variant = "meanfield";
    path.t.resize(steps + 1);
    path.Q.resize(steps + 1);
    path.Qdot.resize(steps + 1);
    path.q.resize(steps + 1);
    path.qbar.resize(steps + 1);
    out.energy.resize(steps + 1);

    double Q = init.Q0, P = init.P0;
    double fexp = mean_f();
    path.t[0] = 0.0;
    path.Q[0] = Q;
    path.Qdot[0] = P / params.M;
    path.q[0] = mean_x();
    path.qbar[0] = fexp;
    out.energy[0] = P * P / (2.0 * params.M) + coupling.V_val(Q) + small_energy(Q);

    for (std::size_t k = 0; k < steps; ++k) {
        P += 0.5 * dt * (-coupling.V_prime(Q) - coupling.g_prime(Q) * fexp);
        pot_kick(Q, 0.5 * dt);
        fft(psi, -1);
        for (std::size_t j = 0; j < n; ++j) psi[j] *= kin_factor[j];
        fft(psi, +1);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : psi) v *= inv_n;
        Q += dt * P / params.M;
        pot_kick(Q, 0.5 * dt);
        fexp = mean_f();
        P += 0.5 * dt * (-coupling.V_prime(Q) - coupling.g_prime(Q) * fexp);

        if (leakage() > 1e-4) {
            std::ostringstream os;
            os << "wavefunction leaked past the grid box at t = " << (k + 1) * dt
               << " (boundary mass " << leakage() << " > 1e-4)";
            throw LeakageError(os.str());
        }

        path.t[k + 1] = static_cast<double>(k + 1) * dt;
        path.Q[k + 1] = Q;
        path.Qdot[k + 1] = P / params.M;
        path.q[k + 1] = mean_x();
        path.qbar[k + 1] = fexp;
        out.energy[k + 1] = P * P / (2.0 * params.M) + coupling.V_val(Q) + small_energy(Q);
    }
    return out;
}

double onsager_machlup_check(const ClassicalPath& path, const CouplingSpec& coupling,
                             const ModelParams& params, const DerivedConstants& consts) {
    const std::size_t n = path.Q.size();
    if (n < 3) throw PreconditionError("need at least 3 interior-resolving nodes");
    const double dt = path.dt;
    for (std::size_t k = 1; k < path.t.size(); ++k) {
        if (std::abs(path.t[k] - path.t[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
            throw Error("onsager_machlup_check requires a uniform time grid");
    }
    double acc = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double Qdd = (path.Q[k + 1] - 2.0 * path.Q[k] + path.Q[k - 1]) / (dt * dt);
        const double qbar = path.qbar.empty() ? 0.0 : path.qbar[k];
        const double res = params.M * Qdd + coupling.V_prime(path.Q[k]) +
                           coupling.g_prime(path.Q[k]) * qbar;
        acc += dt * res * res;
    }
    return -acc / (2.0 * consts.force_noise_var);
}

double langevin_transition_step(double Q_prev, double Q, double qbar,
                                const CouplingSpec& coupling, const ModelParams& params,
                                const DerivedConstants& consts, Rng& rng) {
    const double dt = params.dt;
    const double F = -coupling.V_prime(Q) - coupling.g_prime(Q) * qbar;
    const double xi = std::sqrt(consts.force_noise_var / dt) * rng.normal();
    return 2.0 * Q - Q_prev + dt * dt / params.M * (F + xi);
}

double langevin_transition_log_density(double Q_prev, double Q, double Q_next, double qbar,
                                       const CouplingSpec& coupling, const ModelParams& params,
                                       const DerivedConstants& consts) {
    const double dt = params.dt;
    const double F = -coupling.V_prime(Q) - coupling.g_prime(Q) * qbar;
    const double Qdd = (Q_next - 2.0 * Q + Q_prev) / (dt * dt);
    const double res = params.M * Qdd - F;
    return -dt * res * res / (2.0 * consts.force_noise_var);
}

}  // namespace scdyn
