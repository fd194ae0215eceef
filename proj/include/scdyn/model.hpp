#pragma once

#include <string>
#include <vector>

namespace scdyn {

// Physical inputs, dimensionless simulation units; hbar is configurable and
// defaults to 1.
struct ModelParams {
    double M = 1.0;        // large-particle mass
    double m = 1.0;        // small-particle mass
    double omega = 1.0;    // small-particle angular frequency
    double lambda = 1.0;   // coupling strength (any real, 0 allowed)
    double gamma = 1.0;    // dissipation rate feeding decoherence
    double kT = 1.0;       // thermal energy of the environment
    double hbar = 1.0;
    double sigma = 1.0;    // Gaussian projector width for the large particle
    double eta = 0.5;      // deconvolution split, in (0,1)
    double duration = 1.0; // history length tau
    double dt = 1e-3;      // integration step

    void check() const;    // throws InvalidParameterError
};

struct DerivedConstants {
    double D = 0.0;                // 2 M gamma kT / hbar^2
    double Dtilde = 0.0;           // D + 1/(4 sigma^2)
    double sigma1_sq = 0.0;        // 4 hbar^2 Dtilde eta / lambda^2, inf at lambda=0
    double Delta = 0.0;            // hbar^2 Dtilde m omega^2 / lambda^2, inf at lambda=0
    double force_noise_var = 0.0;  // 2 hbar^2 Dtilde (1-eta), per unit time
    double record_noise_var = 0.0; // 2 hbar^2 Dtilde eta / lambda^2, per unit time

    bool coupling_defined = true;  // false when lambda == 0 (sigma1, Delta infinite)
};

struct ValidationReport {
    bool decoherent = false;        // D sigma^2 > 1
    double positivity_margin = 0.0; // Delta / hbar
    bool classical_regime = false;  // Delta / hbar >= threshold
    std::vector<std::string> messages;

    static constexpr double kClassicalThreshold = 10.0;
};

// Pure function of params; identical inputs give bit-identical outputs.
DerivedConstants derive_constants(const ModelParams& params);

// Never throws for structurally valid params; regime violations become warnings.
ValidationReport validate(const ModelParams& params);

// Maximal-refinement helper: projector width of order D^(-1/2).
double default_sigma(const ModelParams& params);

}  // namespace scdyn
