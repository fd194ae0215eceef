#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "scdyn/config.hpp"
#include "scdyn/energy.hpp"
#include "scdyn/ensemble.hpp"
#include "scdyn/errors.hpp"
#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/sampling.hpp"
#include "scdyn/sse.hpp"
#include "scdyn/trajectories.hpp"

namespace py = pybind11;
using namespace scdyn;

namespace {

SuperpositionState make_state(const std::vector<std::tuple<std::complex<double>, double, double,
                                                           double, double>>& packets,
                              double hbar) {
    SuperpositionState s;
    s.hbar = hbar;
    for (const auto& [amp, q0, p0, s2, phase] : packets) {
        GaussianPacket g;
        g.q0 = q0;
        g.p0 = p0;
        g.s = std::sqrt(s2);
        g.phase = phase;
        s.terms.push_back({amp, g});
    }
    s.normalize();
    return s;
}

py::dict wigner_to_dict(const WignerGrid& w) {
    py::dict d;
    std::vector<double> qs(w.q.n), ps(w.p.n);
    for (std::size_t i = 0; i < w.q.n; ++i) qs[i] = w.q.value(i);
    for (std::size_t i = 0; i < w.p.n; ++i) ps[i] = w.p.value(i);
    d["q"] = qs;
    d["p"] = ps;
    d["values"] = w.values;
    d["min"] = w.min_value();
    d["integral"] = w.integral();
    return d;
}

py::dict path_to_dict(const ClassicalPath& p) {
    py::dict d;
    d["t"] = p.t;
    d["Q"] = p.Q;
    d["Qdot"] = p.Qdot;
    d["q"] = p.q;
    d["variant"] = p.variant;
    return d;
}

}  // namespace

PYBIND11_MODULE(_scdyn, m) {
    m.doc() = "stochastic semiclassical dynamics: classical particle coupled to a quantum "
              "oscillator";

    py::register_exception<Error>(m, "ScdynError");

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double M, double mm, double omega, double lambda, double gamma,
                         double kT, double hbar, double sigma, double eta, double duration,
                         double dt) {
                 ModelParams p;
                 p.M = M;
                 p.m = mm;
                 p.omega = omega;
                 p.lambda = lambda;
                 p.gamma = gamma;
                 p.kT = kT;
                 p.hbar = hbar;
                 p.sigma = sigma;
                 p.eta = eta;
                 p.duration = duration;
                 p.dt = dt;
                 p.check();
                 return p;
             }),
             py::arg("M") = 1.0, py::arg("m") = 1.0, py::arg("omega") = 1.0,
             py::arg("lambda_") = 1.0, py::arg("gamma") = 1.0, py::arg("kT") = 1.0,
             py::arg("hbar") = 1.0, py::arg("sigma") = 1.0, py::arg("eta") = 0.5,
             py::arg("duration") = 1.0, py::arg("dt") = 1e-3)
        .def_readwrite("M", &ModelParams::M)
        .def_readwrite("m", &ModelParams::m)
        .def_readwrite("omega", &ModelParams::omega)
        .def_readwrite("lambda_", &ModelParams::lambda)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("kT", &ModelParams::kT)
        .def_readwrite("hbar", &ModelParams::hbar)
        .def_readwrite("sigma", &ModelParams::sigma)
        .def_readwrite("eta", &ModelParams::eta)
        .def_readwrite("duration", &ModelParams::duration)
        .def_readwrite("dt", &ModelParams::dt);

    py::class_<DerivedConstants>(m, "DerivedConstants")
        .def_readonly("D", &DerivedConstants::D)
        .def_readonly("Dtilde", &DerivedConstants::Dtilde)
        .def_readonly("sigma1_sq", &DerivedConstants::sigma1_sq)
        .def_readonly("Delta", &DerivedConstants::Delta)
        .def_readonly("force_noise_var", &DerivedConstants::force_noise_var)
        .def_readonly("record_noise_var", &DerivedConstants::record_noise_var)
        .def_readonly("coupling_defined", &DerivedConstants::coupling_defined);

    m.def("derive_constants", &derive_constants, py::arg("params"));
    m.def(
        "validate",
        [](const ModelParams& p) {
            const ValidationReport r = validate(p);
            py::dict d;
            d["decoherent"] = r.decoherent;
            d["positivity_margin"] = r.positivity_margin;
            d["classical_regime"] = r.classical_regime;
            d["messages"] = r.messages;
            return d;
        },
        py::arg("params"));

    py::class_<SuperpositionState>(m, "SuperpositionState")
        .def(py::init(&make_state), py::arg("packets"), py::arg("hbar") = 1.0,
             "packets: list of (amplitude, q0, p0, s2, phase)")
        .def("norm", &SuperpositionState::norm)
        .def("wigner", [](const SuperpositionState& s, double q, double p) {
            return wigner_analytic(s, q, p);
        });

    m.def(
        "wigner_grid",
        [](const SuperpositionState& s, double q_lo, double q_hi, double p_lo, double p_hi,
           std::size_t n) {
            const Axis qa = Axis::spanning(q_lo, q_hi, n);
            const Axis pa = Axis::spanning(p_lo, p_hi, n);
            return wigner_to_dict(wigner_transform(s, qa, pa));
        },
        py::arg("state"), py::arg("q_lo"), py::arg("q_hi"), py::arg("p_lo"), py::arg("p_hi"),
        py::arg("n") = 128);

    m.def(
        "smeared_wigner_grid",
        [](const SuperpositionState& s, const ModelParams& params, double q_lo, double q_hi,
           double p_lo, double p_hi, std::size_t n) {
            const DerivedConstants c = derive_constants(params);
            const SmearingKernel k = build_smearing(params, c);
            const Axis qa = Axis::spanning(q_lo, q_hi, n);
            const Axis pa = Axis::spanning(p_lo, p_hi, n);
            return wigner_to_dict(smear(s, k, qa, pa));
        },
        py::arg("state"), py::arg("params"), py::arg("q_lo"), py::arg("q_hi"), py::arg("p_lo"),
        py::arg("p_hi"), py::arg("n") = 128);

    m.def(
        "build_smearing",
        [](const ModelParams& params) {
            const DerivedConstants c = derive_constants(params);
            const SmearingKernel k = build_smearing(params, c);
            py::dict d;
            d["cov"] = std::vector<std::vector<double>>{{k.cov.qq, k.cov.qp},
                                                        {k.cov.qp, k.cov.pp}};
            d["gram"] = std::vector<std::vector<double>>{{k.gram.qq, k.gram.qp},
                                                         {k.gram.qp, k.gram.pp}};
            d["record_var_per_step"] = k.record_var_per_step;
            d["warnings"] = k.warnings;
            return d;
        },
        py::arg("params"));

    m.def(
        "sample_phase_space",
        [](const SuperpositionState& s, const ModelParams& params, std::size_t n,
           std::uint64_t seed, std::size_t grid_n) {
            const DerivedConstants c = derive_constants(params);
            const SmearingKernel k = build_smearing(params, c);
            double q_lo = 1e300, q_hi = -1e300, p_lo = 1e300, p_hi = -1e300;
            for (const auto& t : s.terms) {
                const double sq = std::sqrt(t.packet.s * t.packet.s + k.cov.qq);
                const double spp = params.hbar / (2.0 * t.packet.s);
                const double sp = std::sqrt(spp * spp + k.cov.pp);
                q_lo = std::min(q_lo, t.packet.q0 - 7.0 * sq);
                q_hi = std::max(q_hi, t.packet.q0 + 7.0 * sq);
                p_lo = std::min(p_lo, t.packet.p0 - 7.0 * sp);
                p_hi = std::max(p_hi, t.packet.p0 + 7.0 * sp);
            }
            WignerGrid w = smear(s, k, Axis::spanning(q_lo, q_hi, grid_n),
                                 Axis::spanning(p_lo, p_hi, grid_n));
            const double mass = w.integral();
            for (auto& v : w.values) v /= mass;
            const PhaseSampleSet set = sample_phase_space(w, n, seed);
            std::vector<std::pair<double, double>> out;
            out.reserve(set.samples.size());
            for (const auto& ps : set.samples) out.emplace_back(ps.q0, ps.p0);
            return out;
        },
        py::arg("state"), py::arg("params"), py::arg("n"), py::arg("seed"),
        py::arg("grid_n") = 256);

    m.def(
        "integrate_branch",
        [](double Q0, double P0, double q0, double p0, const ModelParams& params,
           std::uint64_t seed, bool with_noise) {
            const DerivedConstants c = derive_constants(params);
            InitialClassicalState init;
            init.Q0 = Q0;
            init.P0 = P0;
            const CouplingSpec coupling = CouplingSpec::linear(params.lambda);
            return path_to_dict(
                integrate_branch(init, {q0, p0}, coupling, params, c, seed, with_noise));
        },
        py::arg("Q0"), py::arg("P0"), py::arg("q0"), py::arg("p0"), py::arg("params"),
        py::arg("seed") = 1, py::arg("with_noise") = false);

    m.def(
        "energy_populations",
        [](const SuperpositionState& s, const ModelParams& params, std::size_t n_max) {
            const auto levels = energy_decompose(s, params, n_max);
            std::vector<std::pair<double, double>> out;
            for (const auto& l : levels) out.emplace_back(l.E, l.rho);
            return out;
        },
        py::arg("state"), py::arg("params"), py::arg("n_max") = 16);

    m.def(
        "run_ensemble",
        [](const std::string& config_json) {
            const RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(config_json));
            const EnsembleResult res = run_ensemble(cfg);
            return summary_json(res).dump();
        },
        py::arg("config_json"), "run a full ensemble from a JSON config string; returns the "
                                "summary JSON");

    m.def(
        "compare_meanfield",
        [](const std::string& config_json, const std::vector<double>& lambdas) {
            const RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(config_json));
            const auto curve = compare_meanfield(cfg, lambdas);
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& pt : curve) out.emplace_back(pt.lambda, pt.D, pt.mc_err);
            return out;
        },
        py::arg("config_json"), py::arg("lambdas"));
}
