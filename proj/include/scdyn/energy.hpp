#pragma once

#include <cstdint>
#include <vector>

#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/trajectories.hpp"

namespace scdyn {

struct EnergyWeight {
    Axis ebar;
    std::vector<double> density;  // normalized over the grid
    double width = 0.0;           // standard deviation of one measurement Gaussian
};

// w(Ebar) = Sum_E rho_EE exp(-(lambda^2 tau / (4 hbar^2 Dtilde eta)) (E - Ebar)^2),
// normalized on the grid. Linear g only.
EnergyWeight energy_weight(const std::vector<EnergyLevel>& populations,
                           const ModelParams& params, const DerivedConstants& consts, double tau,
                           const Axis& ebar_axis);

// M Qdd + g'(Q) E = xi, xi white with variance 2 hbar^2 Dtilde per unit time
// (or 0). For g = lambda Q the noiseless solution is constant-force kinematics.
ClassicalPath branch_trajectory(double E, const std::vector<double>& gX,
                                const InitialClassicalState& init, const ModelParams& params,
                                std::uint64_t seed, bool with_noise);

struct EnergyBranchSet {
    std::vector<EnergyLevel> populations;
    std::vector<ClassicalPath> branch_templates;  // noiseless path per level
    EnergyWeight weight;
    double tau = 0.0;

    std::vector<std::size_t> counts;      // samples per branch
    std::vector<double> frequencies;      // counts / n
    std::vector<double> frequency_se;     // binomial standard errors
    std::vector<double> final_Q;          // per-run summary
    std::vector<std::size_t> branch_of_run;
};

// Samples branch energies from the populations, integrates one noisy branch per
// sample, tabulates branch frequencies.
EnergyBranchSet run_energy_ensemble(const std::vector<EnergyLevel>& populations,
                                    const std::vector<double>& gX,
                                    const InitialClassicalState& init, const ModelParams& params,
                                    const DerivedConstants& consts, std::size_t n,
                                    std::uint64_t seed);

}  // namespace scdyn
