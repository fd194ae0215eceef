#pragma once

#include <cstdint>
#include <vector>

#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/trajectories.hpp"

namespace scdyn {

struct SSEState {
    GridWavefunction psi;
    double t = 0.0;
    std::vector<double> record;
    std::uint64_t seed = 0;
    double mean_q = 0.0;
    double mean_p = 0.0;  // updated at the kinetic substep of each step
    double var_q = 0.0;
    double last_norm_defect = 0.0;  // pre-normalization |norm - 1| of the latest step
    double max_norm_defect = 0.0;
    double max_post_norm_defect = 0.0;  // residual defect after renormalization

    void refresh_moments(double hbar);

    // per-state cache of the step-independent split factors
    struct StepCache {
        std::size_t n = 0;
        double dq = 0.0, q_min = 0.0, dt = 0.0, m = 0.0, omega = 0.0, hbar = 0.0;
        std::vector<cplx> kin_half;      // kinetic half-step multipliers (FFT order)
        std::vector<cplx> quad_quarter;  // oscillator-potential quarter-kick multipliers
    };
    StepCache cache;
};

// One step of d psi = [-(i/hbar) H - (1/sigma1^2)(q - <q>)^2] psi dt
//                     + (1/sigma1)(q - <q>) psi dW,
// H = p^2/2m + (1/2) m w^2 x^2 + g(Q_t) f(x). Strang order: Hamiltonian
// half-step (spectral), measurement drift+diffusion in position space,
// Hamiltonian half-step. Renormalizes and records the norm defect.
void sse_step(SSEState& s, double Q_t, const CouplingSpec& coupling, const ModelParams& params,
              const DerivedConstants& consts, double dW);

// q_bar = <q> + (sigma1/2) eta, appended to the record. eta ~ N(0, 1/dt).
double measurement_record(SSEState& s, const DerivedConstants& consts, double eta);

struct CoupledRunResult {
    ClassicalPath path;  // Q(t); q column holds <q>(t)
    SSEState state;
    std::vector<double> var_q;  // Var q at each node
};

// Alternates sse_step with M Qdd + lambda <q> + (lambda sigma1 / 2) eta = 0,
// the same white noise eta driving record and classical equation.
CoupledRunResult coupled_run(const GridWavefunction& psi0, const InitialClassicalState& init,
                             const CouplingSpec& coupling, const ModelParams& params,
                             const DerivedConstants& consts, std::uint64_t seed, double tau,
                             bool share_noise = true);

}  // namespace scdyn
