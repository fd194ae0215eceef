#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scdyn/linalg.hpp"
#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/rng.hpp"

namespace scdyn {

// Polynomial coupling data: potential V(X), coupling g(X) f(x). Coefficients in
// ascending powers. The linear model of the simplest case is V = 0, g = lambda X,
// f = x.
struct CouplingSpec {
    std::vector<double> V;
    std::vector<double> g;
    std::vector<double> f;

    static CouplingSpec linear(double lambda);

    double V_val(double X) const;
    double V_prime(double X) const;
    double g_val(double X) const;
    double g_prime(double X) const;
    double f_val(double x) const;
    double f_prime(double x) const;

    // true when g(X) = lambda X (any lambda) and f(x) = x
    bool linear_coupling() const;
    double linear_lambda() const;  // g'(0) when linear
};

struct InitialClassicalState {
    double Q0 = 0.0;
    double P0 = 0.0;
    Mat2 spread;  // optional Gaussian spread of (Q0, P0); zero = delta-peaked
};

struct ClassicalPath {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> Q;
    std::vector<double> Qdot;
    std::vector<double> q;     // small-particle path (or <x> for mean-field runs)
    std::vector<double> qbar;  // effective record f(q) + r driving the large particle
    double q0 = 0.0, p0 = 0.0;
    std::uint64_t seed = 0;
    bool with_noise = false;
    std::string variant;  // "branch", "meanfield", "sse", "energy"
};

// Retarded response of the small oscillator: -sin(w (t-t'))/(m w) for t > t',
// 0 for t < t'; the w -> 0 limit is -(t-t')/m.
double green_function(const ModelParams& params, double t, double t_prime);

// Coupled leapfrog integration of
//   M Qdd + V'(Q) + g'(Q) (f(q) + r) = xi,   m qdd + m w^2 q + g(Q) f'(q) = 0
// with white force noise xi of variance force_noise_var/dt per step when
// with_noise. record_force, when nonempty, supplies one r_k per step (the
// record-noise drive used by the phase-space ensemble engine).
ClassicalPath integrate_branch(const InitialClassicalState& init,
                               std::pair<double, double> phase_sample,
                               const CouplingSpec& coupling, const ModelParams& params,
                               const DerivedConstants& consts, std::uint64_t seed,
                               bool with_noise, std::span<const double> record_force = {});

struct MeanFieldResult {
    ClassicalPath path;  // q holds <x>(t)
    GridWavefunction psi;
    std::vector<double> energy;  // total energy at each node (audit)
};

// Mean-field alternation: M Qdd + V'(Q) + g'(Q) <f(x)> = 0 with the split-step
// Schrodinger evolution of psi under Q(t) as external source.
MeanFieldResult integrate_meanfield(const InitialClassicalState& init,
                                    const CouplingSpec& coupling, const ModelParams& params,
                                    const GridWavefunction& psi0);

// Discrete Onsager-Machlup log-density of a path (up to the Gaussian
// normalization): -(1/(4 hbar^2 Dtilde (1-eta))) Sum dt (M Qdd + V' + g' qbar)^2
// with central second differences. Interior nodes only.
double onsager_machlup_check(const ClassicalPath& path, const CouplingSpec& coupling,
                             const ModelParams& params, const DerivedConstants& consts);

// Position-form Markov chain equivalent to integrate_branch:
//   Q_next = 2 Q - Q_prev + (dt^2/M) (F(Q, qbar) + xi)
double langevin_transition_step(double Q_prev, double Q, double qbar,
                                const CouplingSpec& coupling, const ModelParams& params,
                                const DerivedConstants& consts, Rng& rng);

// Log transition density of that chain (up to the shared normalization constant).
double langevin_transition_log_density(double Q_prev, double Q, double Q_next, double qbar,
                                       const CouplingSpec& coupling, const ModelParams& params,
                                       const DerivedConstants& consts);

}  // namespace scdyn
