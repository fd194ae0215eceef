#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "scdyn/linalg.hpp"
#include "scdyn/model.hpp"

namespace scdyn {

using cplx = std::complex<double>;

// Uniform axis with nodes min + i*step, i in [0, n).
struct Axis {
    double min = 0.0;
    double step = 0.0;
    std::size_t n = 0;

    double value(std::size_t i) const { return min + static_cast<double>(i) * step; }
    double max() const { return value(n == 0 ? 0 : n - 1); }
    static Axis spanning(double lo, double hi, std::size_t n_nodes) {
        return Axis{lo, (hi - lo) / static_cast<double>(n_nodes - 1), n_nodes};
    }
};

struct GaussianPacket {
    double q0 = 0.0;
    double p0 = 0.0;
    double s = 1.0;     // position width, Var(x) = s^2
    double phase = 0.0;

    cplx value(double x, double hbar) const;
};

struct SuperpositionState {
    struct Term {
        cplx amplitude;
        GaussianPacket packet;
    };
    std::vector<Term> terms;
    double hbar = 1.0;

    double norm() const;  // sqrt(<psi|psi>) from analytic overlaps
    void normalize();     // rescale amplitudes so norm() == 1
    cplx value(double x) const;
};

// Analytic overlap <a|b> of two Gaussian packets.
cplx packet_overlap(const GaussianPacket& a, const GaussianPacket& b, double hbar);

struct GridWavefunction {
    double q_min = 0.0;
    double q_max = 0.0;
    std::size_t n = 0;  // power of two
    std::vector<cplx> values;

    double dq() const { return (q_max - q_min) / static_cast<double>(n); }
    double node(std::size_t i) const { return q_min + static_cast<double>(i) * dq(); }
    double norm_sq() const;
    void renormalize();
    void check() const;  // normalization and boundary-leakage invariants
};

// Sample a superposition onto a grid; throws SpanError when the box clips it.
GridWavefunction to_grid(const SuperpositionState& state, double q_min, double q_max,
                         std::size_t n);

struct WignerGrid {
    Axis q;
    Axis p;
    std::vector<double> values;  // row-major, index iq * p.n + ip
    double imag_residue = 0.0;   // max |Im| discarded by a grid transform

    double& at(std::size_t iq, std::size_t ip) { return values[iq * p.n + ip]; }
    double at(std::size_t iq, std::size_t ip) const { return values[iq * p.n + ip]; }
    double integral() const;  // sum * dq * dp
    double min_value() const;
    void check() const;
};

// Conjugate momentum axis of a position grid: the p-grid on which the discrete
// transform makes both marginals exact.
Axis conjugate_axis(const GridWavefunction& psi, double hbar);

// W(q,p) = (1/2 pi hbar) Int dxi e^{-i p xi / hbar} psi(q + xi/2) conj(psi)(q - xi/2)
WignerGrid wigner_transform(const GridWavefunction& psi, double hbar);
WignerGrid wigner_transform(const GridWavefunction& psi, const Axis& p_axis, double hbar);
WignerGrid wigner_transform(const SuperpositionState& state, const Axis& q_axis,
                            const Axis& p_axis);

// Closed-form Wigner value of a superposition at one phase-space point.
double wigner_analytic(const SuperpositionState& state, double q, double p);

// Closed-form Gaussian-smeared Wigner: (W * N(0, cov))(q,p), evaluated on a grid.
WignerGrid smeared_wigner_analytic(const SuperpositionState& state, const Mat2& cov,
                                   const Axis& q_axis, const Axis& p_axis);

// Convex mixture of pure states (the only density matrices used here).
struct StateMixture {
    std::vector<std::pair<double, SuperpositionState>> components;
};

WignerGrid wigner_transform(const StateMixture& mix, const Axis& q_axis, const Axis& p_axis);

// (position density, momentum density); each on its own axis of w.
std::pair<std::vector<double>, std::vector<double>> marginals(const WignerGrid& w);

struct EnergyLevel {
    double E = 0.0;
    double rho = 0.0;  // diagonal population
};

// Populations in the harmonic eigenbasis; throws TruncationError when the
// cutoff captures less than 1 - 1e-8 of the norm.
std::vector<EnergyLevel> energy_decompose(const GridWavefunction& psi, const ModelParams& params,
                                          std::size_t n_max);
std::vector<EnergyLevel> energy_decompose(const SuperpositionState& state,
                                          const ModelParams& params, std::size_t n_max);

// Grid state Sum_n c_n phi_n with the harmonic eigenfunctions of params.
GridWavefunction synthesize_energy_state(const std::vector<cplx>& coeffs,
                                         const ModelParams& params, double q_min, double q_max,
                                         std::size_t n);

// <psi| p^2/2m + (1/2) m omega^2 x^2 |psi> via the spectral kinetic term.
double grid_energy_expectation(const GridWavefunction& psi, const ModelParams& params);

double grid_mean_q(const GridWavefunction& psi);
double grid_mean_p(const GridWavefunction& psi, double hbar);
double grid_var_q(const GridWavefunction& psi);

// Coherent-state width s = sqrt(hbar / (2 m omega)).
double coherent_width(const ModelParams& params);

}  // namespace scdyn
