#ifndef CLGSMOOTH_METRICS_HPP
#define CLGSMOOTH_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/clg_model.hpp"
#include "clgsmooth/rbss.hpp"

namespace clgsmooth {

enum class Algorithm { mpf, rbss, rbss_refine, erbss };

std::string algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& name);

/// Root mean square errors pooled over instants (and runs): `lin` averages
/// over the D_L components, `nonlin` over the D_N components.
struct RmseValues {
    double lin;
    double nonlin;
};

/// estimates/truth: one row per instant. Throws on length mismatch.
RmseValues rmse_metrics(const Eigen::MatrixXd& est_lin, const Eigen::MatrixXd& est_nonlin,
                        const Eigen::MatrixXd& truth_lin, const Eigen::MatrixXd& truth_nonlin);

struct ExperimentConfig {
    Eigen::Index horizon = 200;
    int n_particles = 100;
    int n_trajectories = 0;      // 0 means M = N_p
    double sigma_w_lin = 0.2;
    double sigma_w_nonlin = 0.2;
    double sigma_e = 0.03;
    int n_runs = 50;
    std::uint64_t seed = 1;
    std::vector<Algorithm> algorithms{Algorithm::mpf, Algorithm::rbss};
    WeightMode weight_mode = WeightMode::approx;
    int threads = 1;             // Monte Carlo runs in parallel when > 1
    bool linearized = false;     // use the linearized benchmark variant

    void validate() const;       // throws std::invalid_argument
    int trajectories() const { return n_trajectories > 0 ? n_trajectories : n_particles; }
};

/// Per-algorithm aggregate over the Monte Carlo runs.
struct AlgorithmReport {
    Algorithm algorithm;
    RmseValues rmse;
    RmseValues rmse_halfwidth;   // 1.96 SE of the pooled RMSE (delta method)
    double ctb_seconds;          // mean wall clock per block, excluding sim/IO
    std::vector<RmseValues> per_run;
    std::vector<double> per_run_ctb;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<AlgorithmReport> algorithms;
    std::vector<std::uint64_t> run_seeds;
    int excluded_runs = 0;       // runs dropped after a numerical failure
    std::uint64_t floor_activations = 0;
    std::uint64_t cz_floor_events = 0;
    std::uint64_t degenerate_weight_aborts = 0;

    const AlgorithmReport& find(Algorithm a) const;
};

/// Runs the configured Monte Carlo study: every algorithm consumes the same
/// simulated data per run; CTB is measured around the algorithm block only.
/// Deterministic given config.seed (regardless of config.threads).
RunReport run_experiment(const ExperimentConfig& config);

enum class SweepAxis { n_particles, sigma_e, sigma_w };

std::string sweep_axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(const std::string& name);

struct SweepPoint {
    double value;
    RunReport report;
};

/// One report per axis value; the base seed is offset per point.
std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<double>& values);

} // namespace clgsmooth

#endif
