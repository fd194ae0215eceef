#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scdyn/linalg.hpp"
#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"

namespace scdyn {

// Finite-dimensional reduction of the functional record weight: a 2x2 Gaussian
// smearing of the initial phase-space data plus white per-step record noise.
struct SmearingKernel {
    Mat2 cov;                  // covariance of the (q0, p0) smearing
    Mat2 gram;                 // Gram matrix of {cos wt, sin wt/(m w)} over [0, tau]
    double record_var_per_step = 0.0;  // record variance about the classical path, per step
    double duration = 0.0;
    double dt = 0.0;
    double gram_condition = 1.0;
    std::vector<std::string> warnings;
};

// Exact trigonometric Gram integrals; throws InfiniteSmearingError at lambda = 0.
SmearingKernel build_smearing(const ModelParams& params, const DerivedConstants& consts);

// Basis the record projects onto: phi(t) = (cos wt, sin wt/(m w)); stable at w -> 0.
std::array<double, 2> record_basis(const ModelParams& params, double t);

// Gaussian convolution of a Wigner grid (FFT, zero-padded).
WignerGrid smear(const WignerGrid& w, const SmearingKernel& k);
// Closed form for analytic states, evaluated on the requested axes.
WignerGrid smear(const SuperpositionState& state, const SmearingKernel& k, const Axis& q_axis,
                 const Axis& p_axis);

struct PhaseSample {
    double q0 = 0.0;
    double p0 = 0.0;
    int sign = 1;  // always +1: sampling refuses signed densities
};

struct PhaseSampleSet {
    std::vector<PhaseSample> samples;
    std::uint64_t seed = 0;
    double acceptance_rate = 1.0;  // inverse-CDF sampling accepts every draw
};

// i.i.d. samples from a nonnegative normalized grid density via inverse CDF on
// the flattened grid with within-cell jitter. Deterministic given the seed.
PhaseSampleSet sample_phase_space(const WignerGrid& w, std::size_t n, std::uint64_t seed);

// Grid for the dense small-grid evaluators (inclusive endpoints).
struct SmallGridSpec {
    double x_min = -6.0;
    double x_max = 6.0;
    std::size_t n = 48;  // <= 64

    double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
    double node(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
};

// Time-discretized double path sum of the record weight functional, dense over
// (x, y) pair states. Unnormalized; <= 4 record slices, <= 64 grid points.
double weight_direct_smallgrid(const StateMixture& rho0, const SmallGridSpec& grid,
                               std::span<const double> qbar, std::span<const double> Qpath,
                               const ModelParams& params, const DerivedConstants& consts);

// Continuous-measurement variant. Its Gaussians are evaluated in the factored
// form midpoint x relative-coordinate, so dropping the xi factor reproduces
// weight_direct_smallgrid exactly.
double cm_probability_smallgrid(const StateMixture& rho0, const SmallGridSpec& grid,
                                std::span<const double> qbar, std::span<const double> Qpath,
                                const ModelParams& params, double sigma1_sq,
                                bool include_xi_factor = true);

}  // namespace scdyn
