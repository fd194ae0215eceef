#include "scdyn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/fft.hpp"
#include "scdyn/rng.hpp"

namespace scdyn {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// (1 - sinc x) / x^2, entire in x.
double one_minus_sinc_over_sq(double x) {
    const double x2 = x * x;
    if (std::abs(x) < 0.1)
        return 1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362880.0;
    return (1.0 - sinc(x)) / x2;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

std::array<double, 2> record_basis(const ModelParams& p, double t) {
    const double u = std::cos(p.omega * t);
    const double v = t * sinc(p.omega * t) / p.m;  // sin(wt)/(m w)
    return {u, v};
}

SmearingKernel build_smearing(const ModelParams& p, const DerivedConstants& c) {
    p.check();
    if (p.lambda == 0.0)
        throw InfiniteSmearingError(
            "lambda = 0 gives an infinitely wide record smearing; use the mean-field route");
    const double tau = p.duration;
    const double wt = p.omega * tau;

    SmearingKernel k;
    k.duration = tau;
    k.dt = p.dt;
    k.gram.qq = 0.5 * tau * (1.0 + sinc(2.0 * wt));
    k.gram.qp = 0.5 * tau * tau * sinc(wt) * sinc(wt) / p.m;
    k.gram.pp = 2.0 * tau * tau * tau * one_minus_sinc_over_sq(2.0 * wt) / (p.m * p.m);

    const double S = c.record_noise_var;  // 2 hbar^2 Dtilde eta / lambda^2
    k.cov = k.gram.inverse().scaled(S);
    k.record_var_per_step = S / p.dt;
    k.gram_condition = k.gram.condition_number();
    if (k.gram_condition > 1e6) {
        std::ostringstream os;
        os << "record Gram matrix nearly rank-deficient (condition " << k.gram_condition
           << "): tau too short to resolve both phase-space directions";
        k.warnings.push_back(os.str());
    }
    return k;
}

WignerGrid smear(const WignerGrid& w, const SmearingKernel& k) {
    if (!k.cov.positive_definite())
        throw InvalidParameterError("smearing covariance must be positive definite");
    const double sq = std::sqrt(k.cov.qq);
    const double sp = std::sqrt(k.cov.pp);
    if (w.q.step > sq / 8.0 || w.p.step > sp / 8.0) {
        std::ostringstream os;
        os << "grid does not resolve the smearing kernel (need >= 8 nodes per standard "
              "deviation; steps "
           << w.q.step << ", " << w.p.step << " vs widths " << sq << ", " << sp << ")";
        throw ResolutionError(os.str());
    }

    // zero-padded FFT convolution; pad by 8 standard deviations each side
    const std::size_t pad_q = static_cast<std::size_t>(std::ceil(8.0 * sq / w.q.step));
    const std::size_t pad_p = static_cast<std::size_t>(std::ceil(8.0 * sp / w.p.step));
    const std::size_t nq = next_pow2(w.q.n + 2 * pad_q);
    const std::size_t np = next_pow2(w.p.n + 2 * pad_p);

    std::vector<cplx> f(nq * np, cplx(0.0, 0.0));
    std::vector<cplx> g(nq * np, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < w.q.n; ++i)
        for (std::size_t j = 0; j < w.p.n; ++j) f[i * np + j] = w.at(i, j);

    // kernel sampled on the padded torus, centered at index 0
    const Mat2 cinv = k.cov.inverse();
    const double knorm = 1.0 / (2.0 * kPi * std::sqrt(k.cov.det()));
    for (std::size_t i = 0; i < nq; ++i) {
        const double dq_i =
            (i <= nq / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(nq)) *
            w.q.step;
        for (std::size_t j = 0; j < np; ++j) {
            const double dp_j = (j <= np / 2 ? static_cast<double>(j)
                                             : static_cast<double>(j) - static_cast<double>(np)) *
                                w.p.step;
            const double e =
                cinv.qq * dq_i * dq_i + 2.0 * cinv.qp * dq_i * dp_j + cinv.pp * dp_j * dp_j;
            g[i * np + j] = knorm * std::exp(-0.5 * e);
        }
    }

    auto fft2 = [&](std::vector<cplx>& a, int sign) {
        for (std::size_t i = 0; i < nq; ++i) fft_inplace(a.data() + i * np, np, sign);
        std::vector<cplx> col(nq);
        for (std::size_t j = 0; j < np; ++j) {
            for (std::size_t i = 0; i < nq; ++i) col[i] = a[i * np + j];
            fft_inplace(col.data(), nq, sign);
            for (std::size_t i = 0; i < nq; ++i) a[i * np + j] = col[i];
        }
    };
    fft2(f, -1);
    fft2(g, -1);
    for (std::size_t idx = 0; idx < f.size(); ++idx) f[idx] *= g[idx];
    fft2(f, +1);
    const double scale = w.q.step * w.p.step / static_cast<double>(nq * np);

    WignerGrid out;
    out.q = w.q;
    out.p = w.p;
    out.values.assign(w.q.n * w.p.n, 0.0);
    for (std::size_t i = 0; i < w.q.n; ++i)
        for (std::size_t j = 0; j < w.p.n; ++j) out.at(i, j) = f[i * np + j].real() * scale;
    out.imag_residue = w.imag_residue;
    return out;
}

WignerGrid smear(const SuperpositionState& state, const SmearingKernel& k, const Axis& q_axis,
                 const Axis& p_axis) {
    return smeared_wigner_analytic(state, k.cov, q_axis, p_axis);
}

PhaseSampleSet sample_phase_space(const WignerGrid& w, std::size_t n, std::uint64_t seed) {
    double max_abs = 0.0;
    for (const double v : w.values) max_abs = std::max(max_abs, std::abs(v));
    for (const double v : w.values) {
        if (v < -1e-12 * max_abs) {
            std::ostringstream os;
            os << "density has negative values (min " << w.min_value()
               << "); not a probability - smear the Wigner function first";
            throw NotAProbabilityError(os.str());
        }
    }
    if (std::abs(w.integral() - 1.0) > 1e-6)
        throw PreconditionError("sample_phase_space expects a normalized density");

    PhaseSampleSet out;
    out.seed = seed;
    out.samples.reserve(n);
    if (n == 0) return out;

    std::vector<double> cdf(w.values.size());
    double acc = 0.0;
    for (std::size_t idx = 0; idx < w.values.size(); ++idx) {
        acc += std::max(0.0, w.values[idx]);
        cdf[idx] = acc;
    }
    const double total = acc;

    Rng rng(seed, 0x5a3c1e9ULL);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
        if (idx >= w.values.size()) idx = w.values.size() - 1;
        const std::size_t iq = idx / w.p.n;
        const std::size_t ip = idx % w.p.n;
        PhaseSample ps;
        ps.q0 = w.q.value(iq) + (rng.uniform() - 0.5) * w.q.step;
        ps.p0 = w.p.value(ip) + (rng.uniform() - 0.5) * w.p.step;
        out.samples.push_back(ps);
    }
    return out;
}

namespace {

// Shared dense evaluator. record_factor(k, mid, xi) multiplies the integrand at
// slice k; K-1 short-time propagations connect consecutive slices.
template <typename RecordFactor>
cplx dense_path_sum(const StateMixture& rho0, const SmallGridSpec& grid,
                    std::span<const double> qbar, std::span<const double> Qpath,
                    const ModelParams& p, RecordFactor record_factor) {
    const std::size_t K = qbar.size();
    if (K == 0 || K > 4) {
        std::ostringstream os;
        os << "dense path sum limited to 1..4 record slices, got " << K
           << " (cost guard: O(K n^4) terms)";
        throw CostGuardError(os.str());
    }
    if (grid.n < 2 || grid.n > 64) {
        std::ostringstream os;
        os << "dense path sum limited to <= 64 grid points per slice, got " << grid.n;
        throw CostGuardError(os.str());
    }
    if (Qpath.size() != K)
        throw PreconditionError("Qpath must supply one value per record slice");

    const std::size_t n = grid.n;
    const double dx = grid.dx();
    const double dt = p.dt;

    // rho(x, y) = sum_c w_c psi_c(x) conj(psi_c(y))
    std::vector<cplx> R(n * n, cplx(0.0, 0.0));
    for (const auto& [wgt, state] : rho0.components) {
        std::vector<cplx> amp(n);
        for (std::size_t i = 0; i < n; ++i) amp[i] = state.value(grid.node(i));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) R[i * n + j] += wgt * amp[i] * std::conj(amp[j]);
    }

    std::vector<cplx> U(n * n), A(n * n), B(n * n);
    for (std::size_t k = 0; k < K; ++k) {
        // record coupling at slice k
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double y = grid.node(j);
                R[i * n + j] *= record_factor(k, 0.5 * (x + y), x - y);
            }
        }
        if (k + 1 == K) break;

        // short-time propagator with the left-endpoint potential, source lambda Q_k x
        const double g_k = p.lambda * Qpath[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double xp = grid.node(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double x = grid.node(j);
                const double kin = p.m * (xp - x) * (xp - x) / (2.0 * dt);
                const double pot = dt * (0.5 * p.m * p.omega * p.omega * x * x + g_k * x);
                U[i * n + j] = std::exp(cplx(0.0, (kin - pot) / p.hbar));
            }
        }
        // R <- (dx^2) U R U^dagger
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                cplx s(0.0, 0.0);
                for (std::size_t l = 0; l < n; ++l) s += U[i * n + l] * R[l * n + j];
                A[i * n + j] = s;
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                cplx s(0.0, 0.0);
                for (std::size_t l = 0; l < n; ++l) s += A[i * n + l] * std::conj(U[j * n + l]);
                B[i * n + j] = s * (dx * dx);
            }
        std::swap(R, B);
    }

    cplx trace(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) trace += R[i * n + i];
    return trace * dx;
}

}  // namespace

double weight_direct_smallgrid(const StateMixture& rho0, const SmallGridSpec& grid,
                               std::span<const double> qbar, std::span<const double> Qpath,
                               const ModelParams& params, const DerivedConstants& consts) {
    if (!consts.coupling_defined)
        throw InfiniteSmearingError("weight functional undefined at lambda = 0");
    const double s1sq = consts.sigma1_sq;  // lambda^2/(4 hbar^2 Dtilde eta) = 1/sigma1^2
    const double dt = params.dt;
    const auto factor = [&](std::size_t k, double mid, double /*xi*/) {
        const double d = mid - qbar[k];
        return std::exp(-dt * d * d / s1sq);
    };
    return dense_path_sum(rho0, grid, qbar, Qpath, params, factor).real();
}

double cm_probability_smallgrid(const StateMixture& rho0, const SmallGridSpec& grid,
                                std::span<const double> qbar, std::span<const double> Qpath,
                                const ModelParams& params, double sigma1_sq,
                                bool include_xi_factor) {
    const double dt = params.dt;
    const auto factor = [&](std::size_t k, double mid, double xi) {
        const double d = mid - qbar[k];
        double f = std::exp(-dt * d * d / sigma1_sq);
        if (include_xi_factor) f *= std::exp(-dt * xi * xi / (4.0 * sigma1_sq));
        return f;
    };
    return dense_path_sum(rho0, grid, qbar, Qpath, params, factor).real();
}

}  // namespace scdyn
