#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scdyn/config.hpp"
#include "scdyn/energy.hpp"
#include "scdyn/qstate.hpp"
#include "scdyn/sampling.hpp"
#include "scdyn/trajectories.hpp"

namespace scdyn {

struct RunSummary {
    double final_Q = 0.0;
    double final_Qdot = 0.0;
    double q0 = 0.0;
    double p0 = 0.0;
    int branch = -1;        // -1 = unclassified
    double distance = 0.0;  // to the nearest template
};

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

struct EnsembleResult {
    EngineKind engine = EngineKind::PhaseSpace;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    std::size_t n_runs = 0;

    std::vector<RunSummary> runs;
    double mean_final_Q = 0.0;
    double var_final_Q = 0.0;
    Histogram hist_final_Q;

    std::vector<double> branch_fractions;
    std::vector<double> branch_fraction_se;
    double unclassified_fraction = 0.0;
    double classify_threshold = 0.0;

    std::vector<double> t_kept;                  // strided time grid
    std::vector<std::vector<double>> kept_Q;     // first keep_paths runs
    std::vector<std::vector<double>> kept_Qdot;
    std::vector<std::vector<double>> kept_q;
    std::vector<std::vector<double>> kept_varq;  // sse engine only
    std::vector<std::vector<double>> kept_qbar;  // sse engine only
    std::vector<double> mean_Q_path;             // ensemble mean Q(t) on t_kept
    std::vector<double> var_Q_path;              // per-node sample variance
    std::vector<std::vector<double>> template_Q;

    std::vector<std::string> warnings;

    // sse diagnostics
    double max_norm_defect = 0.0;
    double max_post_norm_defect = 0.0;

    // energy engine extras
    std::vector<EnergyLevel> populations;
    std::vector<double> energy_frequencies;
    std::vector<double> energy_frequency_se;
    EnergyWeight energy_weight_density;
};

EnsembleResult run_ensemble(const RunConfig& config);

struct ClassificationResult {
    std::vector<int> labels;
    std::vector<double> fractions;
    std::vector<double> se;
    double unclassified_fraction = 0.0;
    std::vector<std::string> warnings;
};

// Nearest-template assignment by time-averaged L2 distance of Q(t).
ClassificationResult classify_branches(const std::vector<std::vector<double>>& paths,
                                       const std::vector<std::vector<double>>& templates,
                                       double threshold);
ClassificationResult classify_branches(const std::vector<ClassicalPath>& paths,
                                       const std::vector<ClassicalPath>& templates,
                                       double threshold);

double path_distance(const std::vector<double>& a, const std::vector<double>& b);

struct DivergencePoint {
    double lambda = 0.0;
    double D = 0.0;       // time-averaged L2 distance, ensemble mean vs mean-field
    double mc_err = 0.0;  // Monte Carlo error floor of D
    std::size_t n = 0;
};

// Runs the phase-space engine and the mean-field engine per coupling value
// (common random numbers across the sweep) and reports the divergence curve.
std::vector<DivergencePoint> compare_meanfield(const RunConfig& base,
                                               const std::vector<double>& lambda_sweep);

nlohmann::json summary_json(const EnsembleResult& r);

// Deterministic work distribution: fn(i) for i in [0, n), any thread order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace scdyn
