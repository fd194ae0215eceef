#include "scdyn/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/fft.hpp"

namespace scdyn {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
const cplx kI(0.0, 1.0);

// Int exp(-a x^2 + b x + c) dx over the real line, Re(a) > 0.
cplx gauss_integral(cplx a, cplx b, cplx c) {
    return std::sqrt(kPi / a) * std::exp(b * b / (4.0 * a) + c);
}

// Complex symmetric 2x2 over (q,p).
struct CMat2 {
    cplx qq, qp, pp;
};

struct CVec2 {
    cplx q, p;
};

// One Wigner cross/auto term: K * exp(z^T Q z + l.z + c), z = (q,p).
struct WignerTerm {
    CMat2 Q;
    CVec2 l;
    cplx c;
    cplx K;

    cplx eval(double q, double p) const {
        const cplx e = Q.qq * q * q + 2.0 * Q.qp * q * p + Q.pp * p * p + l.q * q + l.p * p + c;
        return K * std::exp(e);
    }
};

// Closed-form Wigner term for the packet pair (i, j), weighted by
// amp_i * conj(amp_j): the xi-integral of
// psi_i(q + xi/2) conj(psi_j)(q - xi/2) e^{-i p xi / hbar}.
WignerTerm wigner_pair_term(const GaussianPacket& gi, const GaussianPacket& gj, cplx weight,
                            double hbar) {
    const double ai = 1.0 / (4.0 * gi.s * gi.s);
    const double aj = 1.0 / (4.0 * gj.s * gj.s);
    const double Ni = std::pow(2.0 * kPi * gi.s * gi.s, -0.25);
    const double Nj = std::pow(2.0 * kPi * gj.s * gj.s, -0.25);
    const cplx alpha = cplx(0.25 * (ai + aj), 0.0);

    // B(q,p) = b0 + bq q + bp p, coefficient of xi in the exponent
    const cplx b0 = cplx(ai * gi.q0 - aj * gj.q0, 0.5 * (gi.p0 + gj.p0) / hbar);
    const cplx bq = cplx(aj - ai, 0.0);
    const cplx bp = cplx(0.0, -1.0 / hbar);

    // C(q) = cqq q^2 + cq q + c0, xi-independent part
    const cplx cqq = cplx(-(ai + aj), 0.0);
    const cplx cq = cplx(2.0 * (ai * gi.q0 + aj * gj.q0), (gi.p0 - gj.p0) / hbar);
    const cplx c0 = cplx(-ai * gi.q0 * gi.q0 - aj * gj.q0 * gj.q0, 0.0) -
                    kI * (gi.p0 * gi.q0 - gj.p0 * gj.q0) / hbar + kI * (gi.phase - gj.phase);

    WignerTerm t;
    const cplx inv4a = 1.0 / (4.0 * alpha);
    t.Q.qq = bq * bq * inv4a + cqq;
    t.Q.qp = bq * bp * inv4a;
    t.Q.pp = bp * bp * inv4a;
    t.l.q = 2.0 * b0 * bq * inv4a + cq;
    t.l.p = 2.0 * b0 * bp * inv4a;
    t.c = b0 * b0 * inv4a + c0;
    t.K = weight * Ni * Nj * std::sqrt(kPi / alpha) / (2.0 * kPi * hbar);
    return t;
}

std::vector<WignerTerm> wigner_terms(const SuperpositionState& state) {
    std::vector<WignerTerm> terms;
    terms.reserve(state.terms.size() * state.terms.size());
    for (const auto& ti : state.terms)
        for (const auto& tj : state.terms)
            terms.push_back(wigner_pair_term(ti.packet, tj.packet,
                                             ti.amplitude * std::conj(tj.amplitude), state.hbar));
    return terms;
}

// Gaussian smear of one term: convolve K exp(z^T Q z + l.z + c) with N(0, C).
// With P = -2Q, v = l the convolution is
//   det(I + C P)^{-1/2} exp(-z^T P z / 2 + v.z + c + (Pz - v)^T (P + C^{-1})^{-1} (Pz - v) / 2)
WignerTerm smear_term(const WignerTerm& t, const Mat2& cov) {
    const CMat2 P{-2.0 * t.Q.qq, -2.0 * t.Q.qp, -2.0 * t.Q.pp};
    const Mat2 cinv = cov.inverse();
    const CMat2 A{P.qq + cinv.qq, P.qp + cinv.qp, P.pp + cinv.pp};
    const cplx detA = A.qq * A.pp - A.qp * A.qp;
    const CMat2 T{A.pp / detA, -A.qp / detA, A.qq / detA};  // A^{-1}

    // det(I + C P), C real symmetric, P complex symmetric
    const cplx m11 = 1.0 + cov.qq * P.qq + cov.qp * P.qp;
    const cplx m12 = cov.qq * P.qp + cov.qp * P.pp;
    const cplx m21 = cov.qp * P.qq + cov.pp * P.qp;
    const cplx m22 = 1.0 + cov.qp * P.qp + cov.pp * P.pp;
    const cplx det_icp = m11 * m22 - m12 * m21;

    // Expand (Pz - v)^T T (Pz - v)/2 into a quadratic form in z.
    // Pz = (P.qq q + P.qp p, P.qp q + P.pp p).
    WignerTerm out;
    const CVec2 v = t.l;
    // columns of P
    const CVec2 Pq{P.qq, P.qp};
    const CVec2 Pp{P.qp, P.pp};
    auto quad = [&](const CVec2& a, const CVec2& b) {
        return a.q * (T.qq * b.q + T.qp * b.p) + a.p * (T.qp * b.q + T.pp * b.p);
    };
    out.Q.qq = -0.5 * P.qq + 0.5 * quad(Pq, Pq);
    out.Q.pp = -0.5 * P.pp + 0.5 * quad(Pp, Pp);
    out.Q.qp = -0.5 * P.qp + 0.5 * quad(Pq, Pp);
    out.l.q = v.q - quad(Pq, v);
    out.l.p = v.p - quad(Pp, v);
    out.c = t.c + 0.5 * quad(v, v);
    out.K = t.K / std::sqrt(det_icp);
    return out;
}

std::vector<double> hermite_basis_column(double y, std::size_t n_max) {
    // phi_n at one scaled point y, without the (m omega / pi hbar)^{1/4} factor
    // and without exp(-y^2/2); both are applied by the caller.
    std::vector<double> h(n_max + 1);
    h[0] = 1.0;
    if (n_max >= 1) h[1] = std::sqrt(2.0) * y;
    for (std::size_t k = 2; k <= n_max; ++k) {
        const double kk = static_cast<double>(k);
        h[k] = std::sqrt(2.0 / kk) * y * h[k - 1] - std::sqrt((kk - 1.0) / kk) * h[k - 2];
    }
    return h;
}

}  // namespace

cplx GaussianPacket::value(double x, double hbar) const {
    if (!(s > 0.0)) throw InvalidParameterError("packet width s must be positive");
    const double N = std::pow(2.0 * kPi * s * s, -0.25);
    const double d = x - q0;
    return N * std::exp(cplx(-d * d / (4.0 * s * s), p0 * d / hbar + phase));
}

cplx packet_overlap(const GaussianPacket& a, const GaussianPacket& b, double hbar) {
    // Int conj(psi_a) psi_b dx
    const double aa = 1.0 / (4.0 * a.s * a.s);
    const double ab = 1.0 / (4.0 * b.s * b.s);
    const double Na = std::pow(2.0 * kPi * a.s * a.s, -0.25);
    const double Nb = std::pow(2.0 * kPi * b.s * b.s, -0.25);
    const cplx qa = cplx(aa, 0.0);
    const cplx qb = cplx(ab, 0.0);
    const cplx lin = cplx(2.0 * (aa * a.q0 + ab * b.q0), (b.p0 - a.p0) / hbar);
    const cplx cst = cplx(-aa * a.q0 * a.q0 - ab * b.q0 * b.q0, 0.0) +
                     kI * (a.p0 * a.q0 - b.p0 * b.q0) / hbar + kI * (b.phase - a.phase);
    return Na * Nb * gauss_integral(qa + qb, lin, cst);
}

double SuperpositionState::norm() const {
    cplx acc(0.0, 0.0);
    for (const auto& ti : terms)
        for (const auto& tj : terms)
            acc += std::conj(ti.amplitude) * tj.amplitude *
                   packet_overlap(ti.packet, tj.packet, hbar);
    return std::sqrt(std::max(0.0, acc.real()));
}

void SuperpositionState::normalize() {
    const double n = norm();
    if (n <= 0.0) throw InvalidParameterError("cannot normalize a null superposition");
    for (auto& t : terms) t.amplitude /= n;
}

cplx SuperpositionState::value(double x) const {
    cplx acc(0.0, 0.0);
    for (const auto& t : terms) acc += t.amplitude * t.packet.value(x, hbar);
    return acc;
}

double GridWavefunction::norm_sq() const {
    double acc = 0.0;
    for (const auto& v : values) acc += std::norm(v);
    return acc * dq();
}

void GridWavefunction::renormalize() {
    const double n = std::sqrt(norm_sq());
    for (auto& v : values) v /= n;
}

void GridWavefunction::check() const {
    if (!is_power_of_two(n) || values.size() != n)
        throw InvalidParameterError("grid wavefunction needs a power-of-two node count");
    if (std::abs(norm_sq() - 1.0) > 1e-10)
        throw PreconditionError("grid wavefunction not normalized");
    const double edge = std::max(std::abs(values.front()), std::abs(values.back()));
    if (edge >= 1e-6) {
        std::ostringstream os;
        os << "grid boundary amplitude " << edge << " exceeds 1e-6; widen the box";
        throw SpanError(os.str());
    }
}

GridWavefunction to_grid(const SuperpositionState& state, double q_min, double q_max,
                         std::size_t n) {
    GridWavefunction g;
    g.q_min = q_min;
    g.q_max = q_max;
    g.n = n;
    g.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.values[i] = state.value(g.node(i));
    const double edge = std::max(std::abs(g.values.front()), std::abs(g.values.back()));
    if (edge >= 1e-6) {
        std::ostringstream os;
        os << "state clipped by grid box [" << q_min << ", " << q_max << "]: boundary amplitude "
           << edge;
        throw SpanError(os.str());
    }
    g.renormalize();
    return g;
}

double WignerGrid::integral() const {
    double acc = 0.0;
    for (const auto& v : values) acc += v;
    return acc * q.step * p.step;
}

double WignerGrid::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

void WignerGrid::check() const {
    if (std::abs(integral() - 1.0) > 1e-8) throw PreconditionError("Wigner grid not normalized");
    if (imag_residue > 1e-10) throw PreconditionError("Wigner transform imaginary residue too large");
}

Axis conjugate_axis(const GridWavefunction& psi, double hbar) {
    const double step = kPi * hbar / (static_cast<double>(psi.n) * psi.dq());
    const double min = -step * static_cast<double>(psi.n / 2);
    return Axis{min, step, psi.n};
}

WignerGrid wigner_transform(const GridWavefunction& psi, double hbar) {
    if (std::abs(psi.norm_sq() - 1.0) > 1e-8)
        throw PreconditionError("wigner_transform input not normalized");
    const std::size_t n = psi.n;
    const double dxi = 2.0 * psi.dq();
    WignerGrid w;
    w.q = Axis{psi.q_min, psi.dq(), n};
    w.p = conjugate_axis(psi, hbar);
    w.values.assign(n * n, 0.0);
    const double scale = dxi / (2.0 * kPi * hbar);

    std::vector<cplx> row(n);
    double max_imag = 0.0;
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t iq = 0; iq < n; ++iq) {
        // correlation in FFT index order: m' < n/2 holds xi = 2 dq m', the rest wrap to
        // negative xi
        for (std::size_t mp = 0; mp < n; ++mp) {
            const std::ptrdiff_t m = (mp < n / 2) ? static_cast<std::ptrdiff_t>(mp)
                                                  : static_cast<std::ptrdiff_t>(mp) -
                                                        static_cast<std::ptrdiff_t>(n);
            const std::ptrdiff_t ia = static_cast<std::ptrdiff_t>(iq) + m;
            const std::ptrdiff_t ib = static_cast<std::ptrdiff_t>(iq) - m;
            if (ia < 0 || ib < 0 || ia >= static_cast<std::ptrdiff_t>(n) ||
                ib >= static_cast<std::ptrdiff_t>(n)) {
                row[mp] = cplx(0.0, 0.0);
            } else {
                row[mp] = psi.values[static_cast<std::size_t>(ia)] *
                          std::conj(psi.values[static_cast<std::size_t>(ib)]);
            }
        }
        fft(row, -1);
        for (std::size_t ip = 0; ip < n; ++ip) {
            const std::ptrdiff_t jt = static_cast<std::ptrdiff_t>(ip) - half;  // signed p index
            const std::size_t k = static_cast<std::size_t>(jt < 0 ? jt + static_cast<std::ptrdiff_t>(n) : jt);
            w.at(iq, ip) = scale * row[k].real();
            max_imag = std::max(max_imag, std::abs(scale * row[k].imag()));
        }
    }
    w.imag_residue = max_imag;

    // boundary rows of the momentum marginal gauge whether the p-span suffices
    const auto mm = marginals(w).second;
    const double leak = std::max(std::abs(mm.front()), std::abs(mm.back()));
    if (leak >= 1e-6) {
        std::ostringstream os;
        os << "momentum density " << leak << " at p-grid boundary exceeds 1e-6";
        throw SpanError(os.str());
    }
    return w;
}

WignerGrid wigner_transform(const GridWavefunction& psi, const Axis& p_axis, double hbar) {
    if (std::abs(psi.norm_sq() - 1.0) > 1e-8)
        throw PreconditionError("wigner_transform input not normalized");
    const std::size_t n = psi.n;
    const double dxi = 2.0 * psi.dq();
    WignerGrid w;
    w.q = Axis{psi.q_min, psi.dq(), n};
    w.p = p_axis;
    w.values.assign(n * p_axis.n, 0.0);
    const double scale = dxi / (2.0 * kPi * hbar);
    double max_imag = 0.0;
    for (std::size_t iq = 0; iq < n; ++iq) {
        for (std::size_t ip = 0; ip < p_axis.n; ++ip) {
            const double p = p_axis.value(ip);
            cplx acc(0.0, 0.0);
            const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(n / 2);
            for (std::ptrdiff_t m = -half; m < half; ++m) {
                const std::ptrdiff_t ia = static_cast<std::ptrdiff_t>(iq) + m;
                const std::ptrdiff_t ib = static_cast<std::ptrdiff_t>(iq) - m;
                if (ia < 0 || ib < 0 || ia >= static_cast<std::ptrdiff_t>(n) ||
                    ib >= static_cast<std::ptrdiff_t>(n))
                    continue;
                const double xi = dxi * static_cast<double>(m);
                acc += psi.values[static_cast<std::size_t>(ia)] *
                       std::conj(psi.values[static_cast<std::size_t>(ib)]) *
                       std::exp(cplx(0.0, -p * xi / hbar));
            }
            w.at(iq, ip) = scale * acc.real();
            max_imag = std::max(max_imag, std::abs(scale * acc.imag()));
        }
    }
    w.imag_residue = max_imag;
    return w;
}

double wigner_analytic(const SuperpositionState& state, double q, double p) {
    cplx acc(0.0, 0.0);
    for (const auto& ti : state.terms)
        for (const auto& tj : state.terms)
            acc += wigner_pair_term(ti.packet, tj.packet,
                                    ti.amplitude * std::conj(tj.amplitude), state.hbar)
                       .eval(q, p);
    return acc.real();
}

WignerGrid wigner_transform(const SuperpositionState& state, const Axis& q_axis,
                            const Axis& p_axis) {
    if (std::abs(state.norm() - 1.0) > 1e-8)
        throw PreconditionError("wigner_transform input not normalized");
    // conservative magnitude bounds at the box edges
    auto q_bound = [&](double q) {
        double b = 0.0;
        for (const auto& t : state.terms) b += std::abs(t.amplitude * t.packet.value(q, state.hbar));
        return b * b;
    };
    auto p_bound = [&](double p) {
        double b = 0.0;
        for (const auto& t : state.terms) {
            const double sp = state.hbar / (2.0 * t.packet.s);  // momentum width
            const double amp = std::pow(2.0 * kPi * sp * sp, -0.25);
            const double d = p - t.packet.p0;
            b += std::abs(t.amplitude) * amp * std::exp(-d * d / (4.0 * sp * sp));
        }
        return b * b;
    };
    if (std::max(q_bound(q_axis.min), q_bound(q_axis.max())) >= 1e-6)
        throw SpanError("q-axis too narrow for the superposition state");
    if (std::max(p_bound(p_axis.min), p_bound(p_axis.max())) >= 1e-6)
        throw SpanError("p-axis too narrow for the superposition state");

    const auto terms = wigner_terms(state);
    WignerGrid w;
    w.q = q_axis;
    w.p = p_axis;
    w.values.assign(q_axis.n * p_axis.n, 0.0);
    for (std::size_t iq = 0; iq < q_axis.n; ++iq) {
        const double q = q_axis.value(iq);
        for (std::size_t ip = 0; ip < p_axis.n; ++ip) {
            const double p = p_axis.value(ip);
            cplx acc(0.0, 0.0);
            for (const auto& t : terms) acc += t.eval(q, p);
            w.at(iq, ip) = acc.real();
        }
    }
    return w;
}

WignerGrid smeared_wigner_analytic(const SuperpositionState& state, const Mat2& cov,
                                   const Axis& q_axis, const Axis& p_axis) {
    if (!cov.positive_definite())
        throw InvalidParameterError("smearing covariance must be positive definite");
    auto terms = wigner_terms(state);
    for (auto& t : terms) t = smear_term(t, cov);
    WignerGrid w;
    w.q = q_axis;
    w.p = p_axis;
    w.values.assign(q_axis.n * p_axis.n, 0.0);
    for (std::size_t iq = 0; iq < q_axis.n; ++iq) {
        const double q = q_axis.value(iq);
        for (std::size_t ip = 0; ip < p_axis.n; ++ip) {
            const double p = p_axis.value(ip);
            cplx acc(0.0, 0.0);
            for (const auto& t : terms) acc += t.eval(q, p);
            w.at(iq, ip) = acc.real();
        }
    }
    return w;
}

WignerGrid wigner_transform(const StateMixture& mix, const Axis& q_axis, const Axis& p_axis) {
    WignerGrid w;
    w.q = q_axis;
    w.p = p_axis;
    w.values.assign(q_axis.n * p_axis.n, 0.0);
    for (const auto& [weight, state] : mix.components) {
        const WignerGrid wi = wigner_transform(state, q_axis, p_axis);
        for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] += weight * wi.values[k];
    }
    return w;
}

std::pair<std::vector<double>, std::vector<double>> marginals(const WignerGrid& w) {
    std::vector<double> pos(w.q.n, 0.0), mom(w.p.n, 0.0);
    for (std::size_t iq = 0; iq < w.q.n; ++iq)
        for (std::size_t ip = 0; ip < w.p.n; ++ip) {
            pos[iq] += w.at(iq, ip) * w.p.step;
            mom[ip] += w.at(iq, ip) * w.q.step;
        }
    return {pos, mom};
}

std::vector<EnergyLevel> energy_decompose(const GridWavefunction& psi, const ModelParams& params,
                                          std::size_t n_max) {
    const double scale = std::sqrt(params.m * params.omega / params.hbar);
    const double norm0 = std::pow(params.m * params.omega / (kPi * params.hbar), 0.25);
    std::vector<cplx> c(n_max + 1, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < psi.n; ++i) {
        const double x = psi.node(i);
        const double y = scale * x;
        const auto h = hermite_basis_column(y, n_max);
        const double env = norm0 * std::exp(-0.5 * y * y);
        for (std::size_t k = 0; k <= n_max; ++k) c[k] += h[k] * env * psi.values[i] * psi.dq();
    }
    std::vector<EnergyLevel> out(n_max + 1);
    double captured = 0.0;
    for (std::size_t k = 0; k <= n_max; ++k) {
        out[k].E = params.hbar * params.omega * (static_cast<double>(k) + 0.5);
        out[k].rho = std::norm(c[k]);
        captured += out[k].rho;
    }
    if (captured < 1.0 - 1e-8) {
        std::ostringstream os;
        os << "energy cutoff n_max=" << n_max << " captures only " << captured
           << " of the norm; raise the cutoff";
        throw TruncationError(os.str());
    }
    return out;
}

std::vector<EnergyLevel> energy_decompose(const SuperpositionState& state,
                                          const ModelParams& params, std::size_t n_max) {
    double span = std::sqrt((2.0 * static_cast<double>(n_max) + 1.0) * params.hbar /
                            (params.m * params.omega)) *
                  1.6;
    for (const auto& t : state.terms)
        span = std::max(span, std::abs(t.packet.q0) + 10.0 * t.packet.s);
    return energy_decompose(to_grid(state, -span, span, 1024), params, n_max);
}

GridWavefunction synthesize_energy_state(const std::vector<cplx>& coeffs,
                                         const ModelParams& params, double q_min, double q_max,
                                         std::size_t n) {
    GridWavefunction g;
    g.q_min = q_min;
    g.q_max = q_max;
    g.n = n;
    g.values.assign(n, cplx(0.0, 0.0));
    const std::size_t n_max = coeffs.empty() ? 0 : coeffs.size() - 1;
    const double scale = std::sqrt(params.m * params.omega / params.hbar);
    const double norm0 = std::pow(params.m * params.omega / (kPi * params.hbar), 0.25);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = scale * g.node(i);
        const auto h = hermite_basis_column(y, n_max);
        const double env = norm0 * std::exp(-0.5 * y * y);
        cplx acc(0.0, 0.0);
        for (std::size_t k = 0; k < coeffs.size(); ++k) acc += coeffs[k] * h[k] * env;
        g.values[i] = acc;
    }
    g.renormalize();
    return g;
}

double grid_mean_q(const GridWavefunction& psi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.n; ++i) acc += psi.node(i) * std::norm(psi.values[i]);
    return acc * psi.dq() / psi.norm_sq();
}

double grid_var_q(const GridWavefunction& psi) {
    const double mu = grid_mean_q(psi);
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.n; ++i) {
        const double d = psi.node(i) - mu;
        acc += d * d * std::norm(psi.values[i]);
    }
    return acc * psi.dq() / psi.norm_sq();
}

double grid_mean_p(const GridWavefunction& psi, double hbar) {
    std::vector<cplx> ft(psi.values);
    fft(ft, -1);
    const double L = psi.q_max - psi.q_min;
    double acc = 0.0, tot = 0.0;
    for (std::size_t j = 0; j < psi.n; ++j) {
        const std::ptrdiff_t jt = (j < psi.n / 2) ? static_cast<std::ptrdiff_t>(j)
                                                  : static_cast<std::ptrdiff_t>(j) -
                                                        static_cast<std::ptrdiff_t>(psi.n);
        const double p = hbar * 2.0 * kPi * static_cast<double>(jt) / L;
        const double w = std::norm(ft[j]);
        acc += p * w;
        tot += w;
    }
    return acc / tot;
}

double grid_energy_expectation(const GridWavefunction& psi, const ModelParams& params) {
    std::vector<cplx> ft(psi.values);
    fft(ft, -1);
    const double L = psi.q_max - psi.q_min;
    double kin = 0.0, tot = 0.0;
    for (std::size_t j = 0; j < psi.n; ++j) {
        const std::ptrdiff_t jt = (j < psi.n / 2) ? static_cast<std::ptrdiff_t>(j)
                                                  : static_cast<std::ptrdiff_t>(j) -
                                                        static_cast<std::ptrdiff_t>(psi.n);
        const double p = params.hbar * 2.0 * kPi * static_cast<double>(jt) / L;
        const double w = std::norm(ft[j]);
        kin += p * p / (2.0 * params.m) * w;
        tot += w;
    }
    kin /= tot;
    double pot = 0.0;
    for (std::size_t i = 0; i < psi.n; ++i) {
        const double x = psi.node(i);
        pot += 0.5 * params.m * params.omega * params.omega * x * x * std::norm(psi.values[i]);
    }
    pot *= psi.dq() / psi.norm_sq();
    return kin + pot;
}

double coherent_width(const ModelParams& params) {
    return std::sqrt(params.hbar / (2.0 * params.m * params.omega));
}

}  // namespace scdyn
