#pragma once

#include <cmath>

#include "scdyn/errors.hpp"

namespace scdyn {

// Symmetric 2x2 matrix over (q,p), used for phase-space covariances.
struct Mat2 {
    double qq = 0.0;
    double qp = 0.0;
    double pp = 0.0;

    double det() const { return qq * pp - qp * qp; }

    Mat2 inverse() const {
        const double d = det();
        if (d == 0.0) throw InvalidParameterError("singular 2x2 matrix");
        return Mat2{pp / d, -qp / d, qq / d};
    }

    Mat2 scaled(double s) const { return Mat2{qq * s, qp * s, pp * s}; }

    bool positive_definite() const { return qq > 0.0 && det() > 0.0; }

    // Largest/smallest eigenvalue ratio.
    double condition_number() const {
        const double tr = qq + pp;
        const double disc = std::sqrt((qq - pp) * (qq - pp) + 4.0 * qp * qp);
        const double lo = 0.5 * (tr - disc);
        const double hi = 0.5 * (tr + disc);
        if (lo <= 0.0) return INFINITY;
        return hi / lo;
    }
};

}  // namespace scdyn
