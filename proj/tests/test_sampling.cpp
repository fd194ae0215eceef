#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "scdyn/errors.hpp"
#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/rng.hpp"
#include "scdyn/sampling.hpp"
#include "scdyn/trajectories.hpp"

using namespace scdyn;

namespace {

ModelParams params_with(double Dtilde_target, double eta, double lambda, double tau, double dt) {
    // sigma = 1 fixes 1/(4 sigma^2) = 0.25; pick kT for the requested Dtilde
    ModelParams p;
    p.M = 1.0;
    p.m = 1.0;
    p.omega = 1.0;
    p.lambda = lambda;
    p.gamma = 1.0;
    p.sigma = 1.0;
    p.kT = (Dtilde_target - 0.25) / 2.0;
    p.eta = eta;
    p.duration = tau;
    p.dt = dt;
    return p;
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

// Simpson quadrature of the record-basis Gram over [0, tau]
Mat2 gram_quadrature(const ModelParams& p, double tau, std::size_t n) {
    if (n % 2 == 1) ++n;
    const double h = tau / static_cast<double>(n);
    Mat2 g;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = h * static_cast<double>(i);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const auto phi = record_basis(p, t);
        g.qq += w * phi[0] * phi[0];
        g.qp += w * phi[0] * phi[1];
        g.pp += w * phi[1] * phi[1];
    }
    return g.scaled(h / 3.0);
}

SmearingKernel kernel_with_cov(const Mat2& cov) {
    SmearingKernel k;
    k.cov = cov;
    k.record_var_per_step = 1.0;
    k.duration = 1.0;
    k.dt = 1e-3;
    return k;
}

}  // namespace

TEST_CASE("Gram matrix in the free-particle limit: [[1, 1/2],[1/2, 1/3]] over tau = 1") {
    ModelParams p = params_with(2.25, 0.5, 1.0, 1.0, 1e-3);
    p.omega = 1e-12;  // free small particle
    const DerivedConstants c = derive_constants(p);
    const SmearingKernel k = build_smearing(p, c);
    CHECK(k.gram.qq == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(k.gram.qp == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(k.gram.pp == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    // cov = S Gram^{-1}, S = 2.25; Gram^{-1} = [[4, -6], [-6, 12]]
    CHECK(k.cov.qq == doctest::Approx(2.25 * 4.0).epsilon(1e-9));
    CHECK(k.cov.qp == doctest::Approx(2.25 * -6.0).epsilon(1e-9));
    CHECK(k.cov.pp == doctest::Approx(2.25 * 12.0).epsilon(1e-9));
}

TEST_CASE("full-period Gram is diagonal with entries tau/2") {
    const double tau = 2.0 * 3.14159265358979323846;
    const ModelParams p = params_with(2.25, 0.5, 1.0, tau, 1e-3);
    const DerivedConstants c = derive_constants(p);
    const SmearingKernel k = build_smearing(p, c);
    CHECK(k.gram.qq == doctest::Approx(tau / 2.0).epsilon(1e-12));
    CHECK(k.gram.pp == doctest::Approx(tau / 2.0).epsilon(1e-12));
    CHECK(std::abs(k.gram.qp) < 1e-14);
    CHECK(std::abs(k.cov.qp) < 1e-13);
}

TEST_CASE("exact Gram formulas agree with Simpson quadrature") {
    Rng rng(11, 0);
    for (int i = 0; i < 20; ++i) {
        ModelParams p = params_with(2.25, 0.5, 1.0, 0.3 + 6.0 * rng.uniform(), 1e-3);
        p.omega = 0.05 + 3.0 * rng.uniform();
        p.m = 0.3 + 2.0 * rng.uniform();
        const SmearingKernel k = build_smearing(p, derive_constants(p));
        const Mat2 g = gram_quadrature(p, p.duration, 20000);
        CHECK(k.gram.qq == doctest::Approx(g.qq).epsilon(1e-9));
        CHECK(k.gram.qp == doctest::Approx(g.qp).epsilon(1e-9));
        CHECK(k.gram.pp == doctest::Approx(g.pp).epsilon(1e-9));
    }
}

TEST_CASE("doubling eta doubles every covariance entry") {
    const ModelParams p1 = params_with(2.25, 0.25, 1.3, 2.0, 1e-3);
    ModelParams p2 = p1;
    p2.eta = 0.5;
    const SmearingKernel k1 = build_smearing(p1, derive_constants(p1));
    const SmearingKernel k2 = build_smearing(p2, derive_constants(p2));
    CHECK(k2.cov.qq == doctest::Approx(2.0 * k1.cov.qq).epsilon(1e-15));
    CHECK(k2.cov.qp == doctest::Approx(2.0 * k1.cov.qp).epsilon(1e-15));
    CHECK(k2.cov.pp == doctest::Approx(2.0 * k1.cov.pp).epsilon(1e-15));
}

TEST_CASE("short histories surface a Gram condition warning") {
    const ModelParams p = params_with(2.25, 0.5, 1.0, 1e-4, 1e-5);
    const SmearingKernel k = build_smearing(p, derive_constants(p));
    CHECK(k.gram_condition > 1e6);
    CHECK(!k.warnings.empty());
}

TEST_CASE("lambda = 0 raises the infinite-smearing error") {
    ModelParams p = params_with(2.25, 0.5, 1.0, 1.0, 1e-3);
    p.lambda = 0.0;
    CHECK_THROWS_AS(build_smearing(p, derive_constants(p)), InfiniteSmearingError);
}

TEST_CASE("grid smear of a delta cell reproduces the kernel Gaussian") {
    const Mat2 cov{1.0, 0.2, 1.4};
    WignerGrid w;
    w.q = Axis::spanning(-8.0, 8.0, 161);
    w.p = Axis::spanning(-8.0, 8.0, 161);
    w.values.assign(w.q.n * w.p.n, 0.0);
    w.at(80, 80) = 1.0 / (w.q.step * w.p.step);  // unit mass at the origin
    const WignerGrid sm = smear(w, kernel_with_cov(cov));
    CHECK(std::abs(sm.integral() - 1.0) < 1e-8);
    const Mat2 ci = cov.inverse();
    const double norm = 1.0 / (2.0 * 3.14159265358979323846 * std::sqrt(cov.det()));
    for (std::size_t i = 20; i < w.q.n; i += 23)
        for (std::size_t j = 20; j < w.p.n; j += 23) {
            const double dq = w.q.value(i), dp = w.p.value(j);
            const double expect =
                norm * std::exp(-0.5 * (ci.qq * dq * dq + 2.0 * ci.qp * dq * dp + ci.pp * dp * dp));
            CHECK(sm.at(i, j) == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
        }
}

TEST_CASE("analytic smear agrees with the FFT-convolution route") {
    const SuperpositionState s = cat_state(3.0);
    const GridWavefunction g = to_grid(s, -12.0, 12.0, 512);
    const WignerGrid raw = wigner_transform(g, 1.0);
    const Mat2 cov{1.44, 0.0, 1.44};
    const WignerGrid viafft = smear(raw, kernel_with_cov(cov));
    const WignerGrid direct = smeared_wigner_analytic(s, cov, raw.q, raw.p);
    double max_err = 0.0;
    for (std::size_t i = 0; i < raw.q.n; i += 11)
        for (std::size_t j = 0; j < raw.p.n; j += 11)
            max_err = std::max(max_err, std::abs(viafft.at(i, j) - direct.at(i, j)));
    CHECK(max_err < 1e-6);
    CHECK(std::abs(viafft.integral() - 1.0) < 1e-8);
}

TEST_CASE("smear commutes with phase-space translation") {
    SuperpositionState s = cat_state(2.0);
    const Mat2 cov{0.8, 0.1, 0.9};
    const Axis qa = Axis::spanning(-9.0, 9.0, 121);
    const Axis pa = Axis::spanning(-7.0, 7.0, 121);
    const WignerGrid base = smeared_wigner_analytic(s, cov, qa, pa);

    const double dq = 1.25, dp = -0.5;
    SuperpositionState moved = s;
    for (auto& t : moved.terms) {
        t.packet.q0 += dq;
        t.packet.p0 += dp;
        // phase-space translation psi -> e^{i dp x / hbar} psi(x - dq) carries a
        // packet-dependent constant phase in this parametrization
        t.packet.phase += dp * t.packet.q0 / s.hbar;
    }
    const Axis qa2 = Axis{qa.min + dq, qa.step, qa.n};
    const Axis pa2 = Axis{pa.min + dp, pa.step, pa.n};
    const WignerGrid shifted = smeared_wigner_analytic(moved, cov, qa2, pa2);
    double max_err = 0.0;
    for (std::size_t k = 0; k < base.values.size(); k += 13)
        max_err = std::max(max_err, std::abs(base.values[k] - shifted.values[k]));
    CHECK(max_err < 1e-8);
}

TEST_CASE("Husimi-dominating smear turns the cat Wigner nonnegative; weaker smear does not") {
    const SuperpositionState s = cat_state(6.0, std::sqrt(0.3), std::sqrt(0.7));
    const Axis qa = Axis::spanning(-12.0, 12.0, 257);
    const Axis pa = Axis::spanning(-9.0, 9.0, 257);

    const WignerGrid pos = smeared_wigner_analytic(s, Mat2{0.5, 0.0, 0.5}, qa, pa);
    CHECK(pos.min_value() >= -1e-10);  // sqrt(det cov) = hbar/2 exactly

    const WignerGrid neg = smeared_wigner_analytic(s, Mat2{0.125, 0.0, 0.125}, qa, pa);
    CHECK(neg.min_value() < -1e-6);  // sqrt(det cov) = hbar/8
}

TEST_CASE("interference mass in the midpoint strip decreases as the kernel widens") {
    const double q0 = 3.0;
    const SuperpositionState cat = cat_state(q0);
    SuperpositionState up = cat, dn = cat;
    up.terms.resize(1);
    up.terms[0].amplitude = 1.0;
    dn.terms.erase(dn.terms.begin());
    dn.terms[0].amplitude = 1.0;

    const Axis qa = Axis::spanning(-q0 / 4.0, q0 / 4.0, 61);
    const Axis pa = Axis::spanning(-8.0, 8.0, 241);
    double prev = 1e300;
    for (const double c : {0.30, 0.55, 0.80}) {
        const Mat2 cov{c, 0.0, c};
        const WignerGrid wcat = smeared_wigner_analytic(cat, cov, qa, pa);
        const WignerGrid w1 = smeared_wigner_analytic(up, cov, qa, pa);
        const WignerGrid w2 = smeared_wigner_analytic(dn, cov, qa, pa);
        double l1 = 0.0;
        for (std::size_t k = 0; k < wcat.values.size(); ++k)
            l1 += std::abs(wcat.values[k] - 0.5 * w1.values[k] - 0.5 * w2.values[k]);
        l1 *= qa.step * pa.step;
        CHECK(l1 < prev);
        prev = l1;
    }
}

TEST_CASE("inverse-CDF sampling: reproducibility, moments, half-plane masses, edge cases") {
    const ModelParams p = params_with(2.25, 0.5, 1.6, 3.0, 5e-4);
    const DerivedConstants c = derive_constants(p);
    const SmearingKernel k = build_smearing(p, c);
    const SuperpositionState s = cat_state(6.0, std::sqrt(0.3), std::sqrt(0.7));
    const Axis qa = Axis::spanning(-14.0, 14.0, 256);
    const Axis pa = Axis::spanning(-9.0, 9.0, 256);
    WignerGrid w = smear(s, k, qa, pa);
    const double mass = w.integral();
    for (auto& v : w.values) v /= mass;

    SUBCASE("same seed gives the identical sample sequence") {
        const PhaseSampleSet a = sample_phase_space(w, 500, 42);
        const PhaseSampleSet b = sample_phase_space(w, 500, 42);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].q0 == b.samples[i].q0);
            CHECK(a.samples[i].p0 == b.samples[i].p0);
        }
    }

    SUBCASE("n = 0 yields an empty set without error") {
        CHECK(sample_phase_space(w, 0, 1).samples.empty());
    }

    SUBCASE("half-plane fractions reproduce the packet weights") {
        const PhaseSampleSet set = sample_phase_space(w, 20000, 7);
        std::size_t plus = 0;
        for (const auto& ps : set.samples)
            if (ps.q0 > 0.0) ++plus;
        const double f = static_cast<double>(plus) / 20000.0;
        CHECK(std::abs(f - 0.3) < 5.0 * std::sqrt(0.3 * 0.7 / 20000.0));
    }

    SUBCASE("sample moments converge to the grid moments at MC rate") {
        const std::size_t n = 100000;
        const PhaseSampleSet set = sample_phase_space(w, n, 99);
        double gq = 0.0, gp = 0.0, gqq = 0.0;
        for (std::size_t i = 0; i < w.q.n; ++i)
            for (std::size_t j = 0; j < w.p.n; ++j) {
                const double wgt = w.at(i, j) * w.q.step * w.p.step;
                gq += wgt * w.q.value(i);
                gp += wgt * w.p.value(j);
                gqq += wgt * w.q.value(i) * w.q.value(i);
            }
        const double gvar = gqq - gq * gq;
        double mq = 0.0, mp = 0.0, vq = 0.0;
        for (const auto& ps : set.samples) {
            mq += ps.q0;
            mp += ps.p0;
        }
        mq /= static_cast<double>(n);
        mp /= static_cast<double>(n);
        for (const auto& ps : set.samples) vq += (ps.q0 - mq) * (ps.q0 - mq);
        vq /= static_cast<double>(n - 1);
        CHECK(std::abs(mq - gq) < 5.0 * std::sqrt(gvar / static_cast<double>(n)));
        CHECK(std::abs(mp - gp) < 5.0 * std::sqrt(k.cov.pp * 4.0 / static_cast<double>(n)));
        CHECK(std::abs(vq - gvar) < 5.0 * gvar * std::sqrt(2.0 / static_cast<double>(n)));
    }

    SUBCASE("negative densities are refused with a pointer to smear") {
        const WignerGrid raw = wigner_transform(s, qa, pa);
        CHECK(raw.min_value() < 0.0);
        CHECK_THROWS_AS(sample_phase_space(raw, 10, 1), NotAProbabilityError);
    }
}

TEST_CASE("single-slice weight collapses to the smeared instantaneous position density") {
    ModelParams p = params_with(0.5, 0.5, 1.0, 1.0, 0.05);  // sigma1^2 = 1
    const DerivedConstants c = derive_constants(p);
    REQUIRE(c.sigma1_sq == doctest::Approx(1.0).epsilon(1e-12));
    const SuperpositionState s = cat_state(2.0);
    StateMixture rho;
    rho.components = {{1.0, s}};
    const SmallGridSpec grid{-6.0, 6.0, 48};
    const std::vector<double> qbar{0.3};
    const std::vector<double> Qpath{0.0};
    const double got = weight_direct_smallgrid(rho, grid, qbar, Qpath, p, c);
    double expect = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.node(i);
        const double d = x - qbar[0];
        expect += std::norm(s.value(x)) * std::exp(-p.dt * d * d / c.sigma1_sq) * grid.dx();
    }
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("cm formula with the xi factor removed equals the weight bit-for-bit") {
    const ModelParams p = params_with(0.5, 0.5, 1.0, 1.0, 0.05);
    const DerivedConstants c = derive_constants(p);
    StateMixture rho;
    rho.components = {{1.0, cat_state(2.0)}};
    const SmallGridSpec grid{-6.0, 6.0, 48};
    const std::vector<double> qbar{0.3, 0.1, -0.2};
    const std::vector<double> Qpath{0.5, 0.2, -0.1};
    const double w = weight_direct_smallgrid(rho, grid, qbar, Qpath, p, c);
    const double cm = cm_probability_smallgrid(rho, grid, qbar, Qpath, p, c.sigma1_sq, false);
    CHECK(w == cm);  // identical arithmetic once the xi factor is dropped
}

TEST_CASE("large sigma1 makes the cm formula close to the weight; small sigma1 does not") {
    StateMixture rho;
    rho.components = {{1.0, cat_state(2.0)}};
    const SmallGridSpec grid{-6.0, 6.0, 48};
    const std::vector<double> qbar{0.3, 0.1, -0.2};
    const std::vector<double> Qpath{0.0, 0.0, 0.0};

    // sigma1^2 / hbar^2 = 1e4: Dtilde = 5000 at eta = 0.5, lambda = 1
    const ModelParams big = params_with(5000.0, 0.5, 1.0, 1.0, 0.05);
    const DerivedConstants cbig = derive_constants(big);
    REQUIRE(cbig.sigma1_sq == doctest::Approx(1e4).epsilon(1e-12));
    const double w_big = weight_direct_smallgrid(rho, grid, qbar, Qpath, big, cbig);
    const double cm_big =
        cm_probability_smallgrid(rho, grid, qbar, Qpath, big, cbig.sigma1_sq, true);
    CHECK(std::abs(cm_big - w_big) / std::abs(w_big) < 0.01);

    const ModelParams small = params_with(0.5, 0.5, 1.0, 1.0, 0.05);  // sigma1^2 = 1
    const DerivedConstants csmall = derive_constants(small);
    const double w_small = weight_direct_smallgrid(rho, grid, qbar, Qpath, small, csmall);
    const double cm_small =
        cm_probability_smallgrid(rho, grid, qbar, Qpath, small, csmall.sigma1_sq, true);
    CHECK(std::abs(cm_small - w_small) / std::abs(w_small) > 0.10);
}

TEST_CASE("weight peaks where the record matches the classical solution") {
    // dt per slice large enough that the Fresnel stationary width sqrt(hbar dt/m)
    // spans >= 2 grid cells, otherwise the lattice path sum aliases
    const ModelParams p = params_with(0.5, 0.5, 1.0, 1.5, 0.3);  // sigma1^2 = 1
    const DerivedConstants c = derive_constants(p);
    SuperpositionState s;
    s.hbar = 1.0;
    GaussianPacket g;
    g.s = std::sqrt(0.5);
    g.q0 = 1.5;
    s.terms.push_back({cplx(1.0, 0.0), g});
    s.normalize();
    StateMixture rho;
    rho.components = {{1.0, s}};
    const SmallGridSpec grid{-6.0, 6.0, 48};

    auto scan_peak = [&](double Qconst) {
        std::vector<double> Qpath{Qconst, Qconst, Qconst};
        double best_s = 0.0, best_w = -1e300;
        for (double shift = -2.0; shift <= 2.0; shift += 0.05) {
            std::vector<double> qbar(3);
            for (std::size_t k = 0; k < 3; ++k)
                qbar[k] = 1.5 * std::cos(p.omega * p.dt * static_cast<double>(k)) + shift;
            const double w = weight_direct_smallgrid(rho, grid, qbar, Qpath, p, c);
            if (w > best_w) {
                best_w = w;
                best_s = shift;
            }
        }
        return best_s;
    };

    const double cell = grid.dx();
    const double peak0 = scan_peak(0.0);
    CHECK(std::abs(peak0) <= cell);

    // Green-function response of the record to a constant Q, with the same
    // left-endpoint time measure the lattice action uses:
    // delta_k = lambda Q sum_{j<k} dt G(t_k, t_j)
    const double Qconst = 6.0;
    double predicted = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        double dk = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            dk += p.dt * green_function(p, p.dt * static_cast<double>(k),
                                        p.dt * static_cast<double>(j));
        predicted += p.lambda * Qconst * dk;
    }
    predicted /= 3.0;
    const double peak_shift = scan_peak(Qconst) - peak0;
    CHECK(std::abs(peak_shift - predicted) <= cell);
}

TEST_CASE("cost guards refuse oversized dense sums") {
    const ModelParams p = params_with(0.5, 0.5, 1.0, 1.0, 0.05);
    const DerivedConstants c = derive_constants(p);
    StateMixture rho;
    rho.components = {{1.0, cat_state(2.0)}};
    const std::vector<double> q5(5, 0.0), Q5(5, 0.0);
    CHECK_THROWS_AS(
        weight_direct_smallgrid(rho, SmallGridSpec{-6.0, 6.0, 48}, q5, Q5, p, c),
        CostGuardError);
    const std::vector<double> q2(2, 0.0), Q2(2, 0.0);
    CHECK_THROWS_AS(
        weight_direct_smallgrid(rho, SmallGridSpec{-6.0, 6.0, 65}, q2, Q2, p, c),
        CostGuardError);
}
