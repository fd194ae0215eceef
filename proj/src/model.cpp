#include "scdyn/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "scdyn/errors.hpp"

namespace scdyn {

void ModelParams::check() const {
    auto require_pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << "model parameter '" << name << "' must be strictly positive, got " << v;
            throw InvalidParameterError(os.str());
        }
    };
    require_pos(M, "M");
    require_pos(m, "m");
    require_pos(omega, "omega");
    require_pos(gamma, "gamma");
    require_pos(kT, "kT");
    require_pos(hbar, "hbar");
    require_pos(sigma, "sigma");
    require_pos(duration, "duration");
    require_pos(dt, "dt");
    if (!std::isfinite(lambda)) throw InvalidParameterError("lambda must be finite");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidParameterError("eta must lie in (0,1)");
    if (!(dt < duration)) throw InvalidParameterError("dt must be smaller than duration");
}

DerivedConstants derive_constants(const ModelParams& p) {
    p.check();
    DerivedConstants c;
    c.D = 2.0 * p.M * p.gamma * p.kT / (p.hbar * p.hbar);
    c.Dtilde = c.D + 1.0 / (4.0 * p.sigma * p.sigma);
    c.force_noise_var = 2.0 * p.hbar * p.hbar * c.Dtilde * (1.0 - p.eta);
    if (p.lambda != 0.0) {
        const double l2 = p.lambda * p.lambda;
        c.sigma1_sq = 4.0 * p.hbar * p.hbar * c.Dtilde * p.eta / l2;
        c.Delta = p.hbar * p.hbar * c.Dtilde * p.m * p.omega * p.omega / l2;
        c.record_noise_var = 2.0 * p.hbar * p.hbar * c.Dtilde * p.eta / l2;
        c.coupling_defined = true;
    } else {
        c.sigma1_sq = std::numeric_limits<double>::infinity();
        c.Delta = std::numeric_limits<double>::infinity();
        c.record_noise_var = std::numeric_limits<double>::infinity();
        c.coupling_defined = false;
    }
    return c;
}

ValidationReport validate(const ModelParams& p) {
    const DerivedConstants c = derive_constants(p);
    ValidationReport r;
    r.decoherent = c.D * p.sigma * p.sigma > 1.0;
    r.positivity_margin = c.Delta / p.hbar;
    r.classical_regime = r.positivity_margin >= ValidationReport::kClassicalThreshold;
    if (!r.decoherent) {
        std::ostringstream os;
        os << "histories only marginally decoherent: D*sigma^2 = " << c.D * p.sigma * p.sigma
           << " <= 1";
        r.messages.push_back(os.str());
    }
    if (!c.coupling_defined) {
        r.messages.push_back("lambda = 0: sigma1 and Delta are infinite; weak-coupling runs "
                             "should use the mean-field engine");
    } else if (!r.classical_regime) {
        std::ostringstream os;
        os << "phase-space smearing scale Delta/hbar = " << r.positivity_margin << " below "
           << ValidationReport::kClassicalThreshold
           << "; smeared weight may fail positivity for superposition states";
        r.messages.push_back(os.str());
    }
    return r;
}

double default_sigma(const ModelParams& p) {
    const double D = 2.0 * p.M * p.gamma * p.kT / (p.hbar * p.hbar);
    return 1.0 / std::sqrt(D);
}

}  // namespace scdyn
