#include "scdyn/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "scdyn/errors.hpp"
#include "scdyn/io.hpp"

namespace scdyn {

using nlohmann::json;

std::string engine_name(EngineKind e) {
    switch (e) {
        case EngineKind::PhaseSpace: return "phase-space";
        case EngineKind::Sse: return "sse";
        case EngineKind::MeanField: return "meanfield";
        case EngineKind::Energy: return "energy";
    }
    return "?";
}

EngineKind engine_from_name(const std::string& name) {
    if (name == "phase-space") return EngineKind::PhaseSpace;
    if (name == "sse") return EngineKind::Sse;
    if (name == "meanfield") return EngineKind::MeanField;
    if (name == "energy") return EngineKind::Energy;
    throw ConfigError("unknown engine '" + name +
                      "' (expected phase-space | sse | meanfield | energy)");
}

SuperpositionState StateSpec::to_superposition(double hbar) const {
    if (packets.empty())
        throw ConfigError("state: packet list required for this operation (grid-file states "
                          "have no packet structure)");
    SuperpositionState s;
    s.hbar = hbar;
    for (const auto& ps : packets) s.terms.push_back({ps.amplitude, ps.packet});
    s.normalize();
    return s;
}

GridWavefunction StateSpec::to_gridwf(double hbar, const GridSpec& box) const {
    if (!grid_file.empty()) {
        std::ifstream in(grid_file);
        if (!in) throw ConfigError("cannot read grid state file: " + grid_file);
        std::vector<cplx> vals;
        double qmin = 0.0, qmax = 0.0;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == 'q') continue;  // header
            std::istringstream ls(line);
            double q, re, im;
            char comma;
            if (!(ls >> q >> comma >> re >> comma >> im))
                throw ConfigError("grid state file: expected 'q,re,im' rows: " + grid_file);
            if (first) qmin = q;
            qmax = q;
            first = false;
            vals.emplace_back(re, im);
        }
        GridWavefunction g;
        g.n = vals.size();
        // nodes are cell-left points: recover the box from node spacing
        const double dq = (qmax - qmin) / static_cast<double>(vals.size() - 1);
        g.q_min = qmin;
        g.q_max = qmax + dq;
        g.values = std::move(vals);
        g.renormalize();
        g.check();
        return g;
    }
    return to_grid(to_superposition(hbar), box.q_min, box.q_max, box.n);
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

ModelParams model_from_json(const json& j) {
    ModelParams p;
    p.M = get_or(j, "M", p.M);
    p.m = get_or(j, "m", p.m);
    p.omega = get_or(j, "omega", p.omega);
    p.lambda = get_or(j, "lambda", p.lambda);
    p.gamma = get_or(j, "gamma", p.gamma);
    p.kT = get_or(j, "kT", p.kT);
    p.hbar = get_or(j, "hbar", p.hbar);
    p.sigma = get_or(j, "sigma", p.sigma);
    p.eta = get_or(j, "eta", p.eta);
    p.duration = get_or(j, "duration", p.duration);
    p.dt = get_or(j, "dt", p.dt);
    return p;
}

json model_to_json(const ModelParams& p) {
    return json{{"M", p.M},       {"m", p.m},         {"omega", p.omega}, {"lambda", p.lambda},
                {"gamma", p.gamma}, {"kT", p.kT},     {"hbar", p.hbar},   {"sigma", p.sigma},
                {"eta", p.eta},   {"duration", p.duration}, {"dt", p.dt}};
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        c.schema_version = get_or(j, "schema_version", 1);
        if (c.schema_version != 1)
            throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
        if (j.contains("model")) c.model = model_from_json(j.at("model"));
        if (j.contains("state")) {
            const json& s = j.at("state");
            if (s.contains("grid_file")) c.state.grid_file = s.at("grid_file").get<std::string>();
            if (s.contains("packets")) {
                for (const auto& pj : s.at("packets")) {
                    StateSpec::PacketSpec ps;
                    if (pj.contains("amplitude")) {
                        const auto& a = pj.at("amplitude");
                        if (a.is_array())
                            ps.amplitude = cplx(a.at(0).get<double>(), a.at(1).get<double>());
                        else
                            ps.amplitude = cplx(a.get<double>(), 0.0);
                    }
                    ps.packet.q0 = get_or(pj, "q0", 0.0);
                    ps.packet.p0 = get_or(pj, "p0", 0.0);
                    if (pj.contains("s2"))
                        ps.packet.s = std::sqrt(pj.at("s2").get<double>());
                    else
                        ps.packet.s = get_or(pj, "s", 1.0);
                    ps.packet.phase = get_or(pj, "phase", 0.0);
                    c.state.packets.push_back(ps);
                }
            }
        }
        if (j.contains("classical")) {
            const json& cl = j.at("classical");
            c.classical.Q0 = get_or(cl, "Q0", 0.0);
            c.classical.P0 = get_or(cl, "P0", 0.0);
            if (cl.contains("spread")) {
                const auto& sp = cl.at("spread");
                c.classical.spread.qq = sp.at(0).at(0).get<double>();
                c.classical.spread.qp = sp.at(0).at(1).get<double>();
                c.classical.spread.pp = sp.at(1).at(1).get<double>();
            }
        }
        if (j.contains("coupling")) {
            const json& cp = j.at("coupling");
            c.coupling.V = get_or(cp, "V", std::vector<double>{});
            c.coupling.g = get_or(cp, "g", std::vector<double>{0.0, c.model.lambda});
            c.coupling.f = get_or(cp, "f", std::vector<double>{0.0, 1.0});
        } else {
            c.coupling = CouplingSpec::linear(c.model.lambda);
        }
        if (j.contains("engine")) c.engine = engine_from_name(j.at("engine").get<std::string>());
        c.n_runs = get_or<std::size_t>(j, "n_runs", 1);
        c.seed = get_or<std::uint64_t>(j, "seed", 1);
        c.out_dir = get_or<std::string>(j, "out_dir", "out");
        c.threads = get_or(j, "threads", 0);
        if (j.contains("options")) {
            const json& o = j.at("options");
            c.sample_grid_n = get_or<std::size_t>(o, "sample_grid_n", c.sample_grid_n);
            if (o.contains("sse_grid")) {
                const json& g = o.at("sse_grid");
                c.sse_grid.q_min = get_or(g, "q_min", c.sse_grid.q_min);
                c.sse_grid.q_max = get_or(g, "q_max", c.sse_grid.q_max);
                c.sse_grid.n = get_or<std::size_t>(g, "n", c.sse_grid.n);
            }
            c.energy_n_max = get_or<std::size_t>(o, "energy_n_max", c.energy_n_max);
            c.keep_paths = get_or<std::size_t>(o, "keep_paths", c.keep_paths);
            c.path_stride = get_or<std::size_t>(o, "path_stride", c.path_stride);
            c.classify_threshold = get_or(o, "classify_threshold", c.classify_threshold);
        }
        if (j.contains("compare"))
            c.compare_lambdas = get_or(j.at("compare"), "lambda_sweep", std::vector<double>{});
        c.model.check();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidParameterError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["model"] = model_to_json(model);
    json packets = json::array();
    for (const auto& ps : state.packets) {
        packets.push_back(json{{"amplitude", {ps.amplitude.real(), ps.amplitude.imag()}},
                               {"q0", ps.packet.q0},
                               {"p0", ps.packet.p0},
                               {"s", ps.packet.s},
                               {"phase", ps.packet.phase}});
    }
    j["state"] = json{{"packets", packets}};
    if (!state.grid_file.empty()) j["state"]["grid_file"] = state.grid_file;
    j["classical"] = json{{"Q0", classical.Q0},
                          {"P0", classical.P0},
                          {"spread", {{classical.spread.qq, classical.spread.qp},
                                      {classical.spread.qp, classical.spread.pp}}}};
    j["coupling"] = json{{"V", coupling.V}, {"g", coupling.g}, {"f", coupling.f}};
    j["engine"] = engine_name(engine);
    j["n_runs"] = n_runs;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["threads"] = threads;
    j["options"] = json{{"sample_grid_n", sample_grid_n},
                        {"sse_grid", {{"q_min", sse_grid.q_min},
                                      {"q_max", sse_grid.q_max},
                                      {"n", sse_grid.n}}},
                        {"energy_n_max", energy_n_max},
                        {"keep_paths", keep_paths},
                        {"path_stride", path_stride},
                        {"classify_threshold", classify_threshold}};
    if (!compare_lambdas.empty()) j["compare"] = json{{"lambda_sweep", compare_lambdas}};
    return j;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is the offset; report the line for editor-friendly messages
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        std::ostringstream os;
        os << path << ":" << line << ": " << e.what();
        throw ConfigError(os.str());
    }
    return from_json(j);
}

std::string RunConfig::canonical_dump() const {
    json j = to_json();
    // execution environment does not change the simulated law
    j.erase("threads");
    j.erase("out_dir");
    return j.dump();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_dump()); }

}  // namespace scdyn
