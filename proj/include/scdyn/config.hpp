#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scdyn/model.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/trajectories.hpp"

namespace scdyn {

enum class EngineKind { PhaseSpace, Sse, MeanField, Energy };

std::string engine_name(EngineKind e);
EngineKind engine_from_name(const std::string& name);

struct GridSpec {
    double q_min = -16.0;
    double q_max = 16.0;
    std::size_t n = 1024;
};

struct StateSpec {
    struct PacketSpec {
        cplx amplitude{1.0, 0.0};
        GaussianPacket packet;
    };
    std::vector<PacketSpec> packets;
    std::string grid_file;  // alternative: CSV of q,re,im rows

    SuperpositionState to_superposition(double hbar) const;  // normalized
    GridWavefunction to_gridwf(double hbar, const GridSpec& box) const;
    bool has_packets() const { return !packets.empty(); }
};

struct RunConfig {
    int schema_version = 1;
    ModelParams model;
    StateSpec state;
    InitialClassicalState classical;
    CouplingSpec coupling;  // defaults to the linear model with model.lambda
    EngineKind engine = EngineKind::PhaseSpace;
    std::size_t n_runs = 1;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int threads = 0;  // 0 = available parallelism

    std::size_t sample_grid_n = 256;
    GridSpec sse_grid;
    std::size_t energy_n_max = 16;
    std::size_t keep_paths = 8;
    std::size_t path_stride = 0;  // 0 = auto, <= 512 kept nodes
    double classify_threshold = 0.0;  // 0 = auto: 3x calibrated noise RMS
    std::vector<double> compare_lambdas;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static RunConfig load_file(const std::string& path);  // ConfigError, line-anchored
    std::string canonical_dump() const;
    std::uint64_t hash() const;
};

}  // namespace scdyn
