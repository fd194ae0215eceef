#include <doctest.h>

#include <cmath>

#include "scdyn/errors.hpp"
#include "scdyn/model.hpp"
#include "scdyn/rng.hpp"

using namespace scdyn;

namespace {
ModelParams base_params() {
    ModelParams p;
    p.M = 1.0;
    p.m = 1.0;
    p.omega = 1.0;
    p.lambda = 1.0;
    p.gamma = 1.0;
    p.kT = 1.0;
    p.hbar = 1.0;
    p.sigma = 1.0;
    p.eta = 0.5;
    p.duration = 1.0;
    p.dt = 1e-3;
    return p;
}
}  // namespace

TEST_CASE("derived constants match the closed-form definitions") {
    ModelParams p = base_params();
    const DerivedConstants c = derive_constants(p);
    CHECK(c.D == doctest::Approx(2.0).epsilon(1e-15));          // 2 M gamma kT / hbar^2
    CHECK(c.Dtilde == doctest::Approx(2.25).epsilon(1e-15));    // D + 1/(4 sigma^2)
    CHECK(c.sigma1_sq == doctest::Approx(4.5).epsilon(1e-15));  // 4 hbar^2 Dtilde eta / lambda^2
    CHECK(c.Delta == doctest::Approx(2.25).epsilon(1e-15));     // hbar^2 Dtilde m omega^2 / lambda^2
    CHECK(c.force_noise_var == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(c.record_noise_var == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(c.coupling_defined);
}

TEST_CASE("derive_constants is pure: identical inputs, bit-identical outputs") {
    ModelParams p = base_params();
    p.kT = 0.7231;
    p.gamma = 1.9;
    const DerivedConstants a = derive_constants(p);
    const DerivedConstants b = derive_constants(p);
    CHECK(a.D == b.D);
    CHECK(a.Dtilde == b.Dtilde);
    CHECK(a.sigma1_sq == b.sigma1_sq);
    CHECK(a.Delta == b.Delta);
}

TEST_CASE("lambda = 0 flags sigma1 and Delta infinite") {
    ModelParams p = base_params();
    p.lambda = 0.0;
    const DerivedConstants c = derive_constants(p);
    CHECK(!c.coupling_defined);
    CHECK(std::isinf(c.sigma1_sq));
    CHECK(std::isinf(c.Delta));
    CHECK(std::isfinite(c.force_noise_var));
}

TEST_CASE("invalid parameters are rejected") {
    ModelParams p = base_params();
    p.M = 0.0;
    CHECK_THROWS_AS(derive_constants(p), InvalidParameterError);
    p = base_params();
    p.kT = -1.0;
    CHECK_THROWS_AS(derive_constants(p), InvalidParameterError);
    p = base_params();
    p.eta = 1.0;
    CHECK_THROWS_AS(derive_constants(p), InvalidParameterError);
    p = base_params();
    p.dt = 2.0;  // dt >= duration
    CHECK_THROWS_AS(derive_constants(p), InvalidParameterError);
}

TEST_CASE("doubling kT scales D, Dtilde - 1/(4 sigma^2), sigma1^2 lambda^2/eta and Delta "
          "exactly at the maximal-refinement sigma") {
    // sigma1^2 and Delta carry Dtilde = D + 1/(4 sigma^2); they scale with kT
    // once sigma tracks the refinement default sigma = D^(-1/2)
    ModelParams p = base_params();
    p.kT = 0.75;
    p.lambda = 2.0;
    p.sigma = default_sigma(p);
    const DerivedConstants a = derive_constants(p);
    ModelParams p2 = p;
    p2.kT = 2.0 * p.kT;  // power-of-two factor: exact in floating point
    p2.sigma = default_sigma(p2);
    const DerivedConstants b = derive_constants(p2);
    CHECK(b.D == 2.0 * a.D);
    CHECK(b.Dtilde - 1.0 / (4.0 * p2.sigma * p2.sigma) ==
          doctest::Approx(2.0 * (a.Dtilde - 1.0 / (4.0 * p.sigma * p.sigma))).epsilon(1e-15));
    CHECK(b.sigma1_sq * p.lambda * p.lambda / p.eta ==
          doctest::Approx(2.0 * (a.sigma1_sq * p.lambda * p.lambda / p.eta)).epsilon(1e-15));
    CHECK(b.Delta == doctest::Approx(2.0 * a.Delta).epsilon(1e-15));
}

TEST_CASE("decoherence flag follows D sigma^2 > 1") {
    ModelParams p = base_params();  // D = 2, sigma = 1
    CHECK(validate(p).decoherent);
    p.sigma = 0.5;  // D sigma^2 = 0.5
    const ValidationReport r = validate(p);
    CHECK(!r.decoherent);
    CHECK(!r.messages.empty());
}

TEST_CASE("decoherent flag is monotone in kT and sigma") {
    Rng rng(7, 0);
    for (int i = 0; i < 200; ++i) {
        ModelParams p = base_params();
        p.kT = 0.05 + 2.0 * rng.uniform();
        p.sigma = 0.2 + 2.0 * rng.uniform();
        p.gamma = 0.1 + rng.uniform();
        const bool dec = validate(p).decoherent;
        ModelParams hotter = p;
        hotter.kT *= 1.0 + rng.uniform();
        ModelParams coarser = p;
        coarser.sigma *= 1.0 + rng.uniform();
        if (dec) {
            CHECK(validate(hotter).decoherent);
            CHECK(validate(coarser).decoherent);
        } else {
            // cooling or refining never turns decoherence on
            ModelParams colder = p;
            colder.kT *= rng.uniform();
            ModelParams finer = p;
            finer.sigma *= rng.uniform();
            CHECK(!validate(colder).decoherent);
            CHECK(!validate(finer).decoherent);
        }
    }
}

TEST_CASE("classical regime threshold at Delta/hbar = 10") {
    // Delta = hbar^2 Dtilde m omega^2 / lambda^2 = 50 here
    ModelParams p = base_params();
    p.gamma = 1.0;
    p.kT = 24.875;  // D = 49.75, Dtilde = 50
    const ValidationReport r = validate(p);
    CHECK(r.positivity_margin == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.classical_regime);

    p.kT = 1.0;  // Delta = 2.25
    CHECK(!validate(p).classical_regime);
}

TEST_CASE("default sigma helper is D^(-1/2)") {
    ModelParams p = base_params();  // D = 2
    CHECK(default_sigma(p) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}
