#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "scdyn/errors.hpp"
#include "scdyn/qstate.hpp"

using namespace scdyn;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModelParams unit_oscillator() {
    ModelParams p;
    p.m = 1.0;
    p.omega = 1.0;
    p.hbar = 1.0;
    return p;
}

SuperpositionState ground_state() {
    SuperpositionState s;
    s.hbar = 1.0;
    GaussianPacket g;
    g.s = std::sqrt(0.5);  // coherent width for m = omega = hbar = 1
    s.terms.push_back({cplx(1.0, 0.0), g});
    s.normalize();
    return s;
}

SuperpositionState cat_state(double q0, double a1 = 1.0, double a2 = 1.0) {
    SuperpositionState s;
    s.hbar = 1.0;
    GaussianPacket g1, g2;
    g1.s = g2.s = std::sqrt(0.5);
    g1.q0 = q0;
    g2.q0 = -q0;
    s.terms.push_back({cplx(a1, 0.0), g1});
    s.terms.push_back({cplx(a2, 0.0), g2});
    s.normalize();
    return s;
}

}  // namespace

TEST_CASE("ground-state Wigner value at the origin is 1/pi") {
    const SuperpositionState s = ground_state();
    CHECK(wigner_analytic(s, 0.0, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));

    // grid-transform oracle on a 512-point grid
    const GridWavefunction g = to_grid(s, -10.0, 10.0, 512);
    const WignerGrid w = wigner_transform(g, 1.0);
    // nearest node to the origin
    std::size_t iq = 0, ip = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < w.q.n; ++i)
        if (std::abs(w.q.value(i)) < best) best = std::abs(w.q.value(i)), iq = i;
    best = 1e300;
    for (std::size_t j = 0; j < w.p.n; ++j)
        if (std::abs(w.p.value(j)) < best) best = std::abs(w.p.value(j)), ip = j;
    CHECK(wigner_analytic(s, w.q.value(iq), w.p.value(ip)) ==
          doctest::Approx(w.at(iq, ip)).epsilon(1e-8));
}

TEST_CASE("Wigner normalization holds on both routes") {
    const SuperpositionState s = cat_state(4.0);
    const GridWavefunction g = to_grid(s, -12.0, 12.0, 512);
    const WignerGrid wg = wigner_transform(g, 1.0);
    CHECK(std::abs(wg.integral() - 1.0) < 1e-8);
    CHECK(wg.imag_residue < 1e-10);
    wg.check();

    const Axis qa = Axis::spanning(-12.0, 12.0, 301);
    const Axis pa = Axis::spanning(-8.0, 8.0, 301);
    const WignerGrid wa = wigner_transform(s, qa, pa);
    CHECK(std::abs(wa.integral() - 1.0) < 1e-6);  // open-grid quadrature
}

TEST_CASE("analytic and grid-transform Wigner agree pointwise within 1e-6") {
    const SuperpositionState s = cat_state(4.0);
    const GridWavefunction g = to_grid(s, -12.0, 12.0, 512);
    const WignerGrid w = wigner_transform(g, 1.0);
    double max_err = 0.0;
    for (std::size_t i = 0; i < w.q.n; i += 7) {
        for (std::size_t j = 0; j < w.p.n; j += 7) {
            const double p = w.p.value(j);
            if (std::abs(p) > 6.0) continue;  // skip the far tail rows
            max_err = std::max(max_err,
                               std::abs(w.at(i, j) - wigner_analytic(s, w.q.value(i), p)));
        }
    }
    CHECK(max_err < 1e-6);
}

TEST_CASE("cat-state interference fringes at q=0 have period pi/4 in p") {
    // packets at +-4: cross term oscillates as cos(8 p), zeros spaced pi/8
    const SuperpositionState s = cat_state(4.0);
    SuperpositionState left = ground_state(), right = ground_state();
    left.terms[0].packet.q0 = -4.0;
    right.terms[0].packet.q0 = 4.0;

    auto cross = [&](double p) {
        return wigner_analytic(s, 0.0, p) - 0.5 * wigner_analytic(left, 0.0, p) -
               0.5 * wigner_analytic(right, 0.0, p);
    };
    std::vector<double> zeros;
    double prev = cross(0.01);
    for (double p = 0.011; p < 1.6; p += 1e-4) {
        const double cur = cross(p);
        if (prev * cur < 0.0) zeros.push_back(p);
        prev = cur;
    }
    REQUIRE(zeros.size() >= 4);
    for (std::size_t i = 1; i < zeros.size(); ++i)
        CHECK(zeros[i] - zeros[i - 1] == doctest::Approx(kPi / 8.0).epsilon(0.01));
}

TEST_CASE("position marginal equals |psi|^2 pointwise for grid states") {
    const SuperpositionState s = cat_state(3.0);
    const GridWavefunction g = to_grid(s, -10.0, 10.0, 512);
    const WignerGrid w = wigner_transform(g, 1.0);
    const auto [pos, mom] = marginals(w);
    double max_err = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        max_err = std::max(max_err, std::abs(pos[i] - std::norm(g.values[i])));
    CHECK(max_err < 1e-6);

    double pos_mass = 0.0, mom_mass = 0.0;
    for (const double v : pos) pos_mass += v * w.q.step;
    for (const double v : mom) mom_mass += v * w.p.step;
    CHECK(pos_mass == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(mom_mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("ground-state position marginal is the Gaussian exp(-q^2)/sqrt(pi)") {
    const SuperpositionState s = ground_state();
    const GridWavefunction g = to_grid(s, -10.0, 10.0, 512);
    const WignerGrid w = wigner_transform(g, 1.0);
    const auto pos = marginals(w).first;
    for (std::size_t i = 0; i < w.q.n; i += 5) {
        const double q = w.q.value(i);
        CHECK(pos[i] == doctest::Approx(std::exp(-q * q) / std::sqrt(kPi)).epsilon(1e-6));
    }
}

TEST_CASE("momentum marginal of a real wavefunction is even in p") {
    const SuperpositionState s = cat_state(3.0);  // real amplitudes, p0 = 0
    const GridWavefunction g = to_grid(s, -10.0, 10.0, 256);
    const WignerGrid w = wigner_transform(g, 1.0);
    const auto mom = marginals(w).second;
    // conjugate axis holds p and -p at mirrored indices (skip the unpaired first row)
    for (std::size_t j = 1; j < w.p.n / 2; ++j)
        CHECK(mom[j] == doctest::Approx(mom[w.p.n - j]).epsilon(1e-9));
}

TEST_CASE("parity: symmetric states give W(q,p) = W(-q,-p)") {
    const SuperpositionState s = cat_state(2.5);
    for (double q : {0.3, 1.7, 2.9}) {
        for (double p : {0.2, 0.9, 2.1}) {
            CHECK(wigner_analytic(s, q, p) ==
                  doctest::Approx(wigner_analytic(s, -q, -p)).epsilon(1e-10));
        }
    }
}

TEST_CASE("Wigner transform is linear in the density matrix") {
    // mixture of two packets vs population-weighted sum of pure Wigner grids
    SuperpositionState a = ground_state(), b = ground_state();
    a.terms[0].packet.q0 = 2.0;
    b.terms[0].packet.q0 = -2.0;
    StateMixture mix;
    mix.components = {{0.3, a}, {0.7, b}};
    const Axis qa = Axis::spanning(-8.0, 8.0, 101);
    const Axis pa = Axis::spanning(-6.0, 6.0, 101);
    const WignerGrid wm = wigner_transform(mix, qa, pa);
    const WignerGrid wa = wigner_transform(a, qa, pa);
    const WignerGrid wb = wigner_transform(b, qa, pa);
    for (std::size_t k = 0; k < wm.values.size(); k += 37)
        CHECK(wm.values[k] ==
              doctest::Approx(0.3 * wa.values[k] + 0.7 * wb.values[k]).epsilon(1e-12));
}

TEST_CASE("superposition norm includes overlap corrections") {
    SuperpositionState s;
    s.hbar = 1.0;
    GaussianPacket g1, g2;
    g1.s = g2.s = std::sqrt(0.5);
    g1.q0 = 0.4;
    g2.q0 = -0.4;  // strongly overlapping packets
    s.terms.push_back({cplx(1.0, 0.0), g1});
    s.terms.push_back({cplx(1.0, 0.0), g2});
    s.normalize();
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    const GridWavefunction g = to_grid(s, -10.0, 10.0, 512);
    CHECK(std::abs(g.norm_sq() - 1.0) < 1e-10);
}

TEST_CASE("wigner_transform rejects unnormalized input") {
    SuperpositionState s = ground_state();
    s.terms[0].amplitude *= 1.5;
    const Axis qa = Axis::spanning(-8.0, 8.0, 32);
    CHECK_THROWS_AS(wigner_transform(s, qa, qa), PreconditionError);
}

TEST_CASE("narrow boxes raise span errors with measured leakage") {
    const SuperpositionState s = cat_state(4.0);
    CHECK_THROWS_AS(to_grid(s, -4.5, 4.5, 256), SpanError);
    const Axis qa = Axis::spanning(-3.0, 3.0, 32);
    const Axis pa = Axis::spanning(-8.0, 8.0, 32);
    CHECK_THROWS_AS(wigner_transform(s, qa, pa), SpanError);
}

TEST_CASE("energy decomposition: eigenstates, coherent states, mixtures of levels") {
    const ModelParams p = unit_oscillator();

    SUBCASE("ground state is a single level at E = 1/2") {
        const auto levels = energy_decompose(ground_state(), p, 8);
        CHECK(levels[0].E == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(levels[0].rho == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t k = 1; k < levels.size(); ++k) CHECK(levels[k].rho < 1e-10);
    }

    SUBCASE("coherent state with |alpha|^2 = 1 is Poisson(1)") {
        SuperpositionState s = ground_state();
        s.terms[0].packet.q0 = std::sqrt(2.0);  // alpha = 1
        s.normalize();
        const auto levels = energy_decompose(s, p, 14);
        double fact = 1.0;
        for (std::size_t k = 0; k <= 6; ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            CHECK(levels[k].rho == doctest::Approx(std::exp(-1.0) / fact).epsilon(1e-6));
        }
        CHECK(levels[0].rho == doctest::Approx(0.36787944117144233).epsilon(1e-8));
    }

    SUBCASE("equal superposition of n = 0, 1 splits 1/2 - 1/2") {
        const GridWavefunction g = synthesize_energy_state(
            {cplx(1.0 / std::sqrt(2.0), 0.0), cplx(1.0 / std::sqrt(2.0), 0.0)}, p, -10.0, 10.0,
            512);
        const auto levels = energy_decompose(g, p, 6);
        CHECK(levels[0].rho == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(levels[1].rho == doctest::Approx(0.5).epsilon(1e-10));
    }

    SUBCASE("undersized cutoff raises a truncation error with diagnostics") {
        SuperpositionState s = ground_state();
        s.terms[0].packet.q0 = std::sqrt(2.0);
        s.normalize();
        CHECK_THROWS_AS(energy_decompose(s, p, 6), TruncationError);
    }
}

TEST_CASE("diagonal energy resynthesis matches the grid expectation within 1e-8") {
    const ModelParams p = unit_oscillator();
    SuperpositionState s = ground_state();
    s.terms[0].packet.q0 = 1.0;
    s.terms[0].packet.p0 = 0.7;
    s.normalize();
    const GridWavefunction g = to_grid(s, -12.0, 12.0, 1024);
    const auto levels = energy_decompose(g, p, 24);
    double e_diag = 0.0;
    for (const auto& lvl : levels) e_diag += lvl.E * lvl.rho;
    CHECK(e_diag == doctest::Approx(grid_energy_expectation(g, p)).epsilon(1e-8));
}
