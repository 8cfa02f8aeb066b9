#include "clgsmooth/metrics.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "clgsmooth/erbss.hpp"
#include "clgsmooth/mpf.hpp"

namespace clgsmooth {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::mpf: return "mpf";
        case Algorithm::rbss: return "rbss";
        case Algorithm::rbss_refine: return "rbss+refine";
        case Algorithm::erbss: return "erbss";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
    if (name == "mpf") return Algorithm::mpf;
    if (name == "rbss") return Algorithm::rbss;
    if (name == "rbss+refine" || name == "rbss_refine") return Algorithm::rbss_refine;
    if (name == "erbss") return Algorithm::erbss;
    return std::nullopt;
}

RmseValues rmse_metrics(const Eigen::MatrixXd& est_lin, const Eigen::MatrixXd& est_nonlin,
                        const Eigen::MatrixXd& truth_lin, const Eigen::MatrixXd& truth_nonlin) {
    if (est_lin.rows() != truth_lin.rows() || est_lin.cols() != truth_lin.cols() ||
        est_nonlin.rows() != truth_nonlin.rows() || est_nonlin.cols() != truth_nonlin.cols() ||
        est_lin.rows() != est_nonlin.rows())
        throw std::invalid_argument("rmse_metrics: estimate/truth length mismatch");
    double mse_lin = (est_lin - truth_lin).array().square().mean();
    double mse_nonlin = (est_nonlin - truth_nonlin).array().square().mean();
    return RmseValues{std::sqrt(mse_lin), std::sqrt(mse_nonlin)};
}

void ExperimentConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
    if (n_particles < 1) throw std::invalid_argument("config: n_particles must be >= 1");
    if (n_trajectories < 0) throw std::invalid_argument("config: n_trajectories must be >= 0");
    if (!(sigma_w_lin > 0.0) || !(sigma_w_nonlin > 0.0) || !(sigma_e > 0.0))
        throw std::invalid_argument("config: sigmas must be positive");
    if (n_runs < 1) throw std::invalid_argument("config: n_runs must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("config: no algorithms selected");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

const AlgorithmReport& RunReport::find(Algorithm a) const {
    for (const auto& r : algorithms)
        if (r.algorithm == a) return r;
    throw std::invalid_argument("RunReport: algorithm not present");
}

namespace {

constexpr std::uint64_t kTagRun = 0xD0;
constexpr std::uint64_t kTagSim = 0xD1;
constexpr std::uint64_t kTagForward = 0xD2;
constexpr std::uint64_t kTagErbss = 0xD3;

struct RunOutcome {
    bool ok = false;
    bool degenerate = false;
    std::vector<RmseValues> rmse;      // per algorithm
    std::vector<double> ctb;           // per algorithm
    SmootherDiagnostics diag;
};

struct Estimates {
    Eigen::MatrixXd lin;
    Eigen::MatrixXd nonlin;
};

Estimates run_algorithm(Algorithm alg, const ClgModel& model, const Trajectory& data,
                        const ExperimentConfig& cfg, std::uint64_t run_seed,
                        SmootherDiagnostics* diag) {
    const Eigen::Index horizon = data.horizon();
    std::vector<Eigen::VectorXd> y = data.measurement_rows();
    std::uint64_t fwd_seed = seed_mix({run_seed, kTagForward});
    BackwardOptions options{cfg.weight_mode, true};

    Estimates est;
    est.lin.resize(horizon, model.d_lin());
    est.nonlin.resize(horizon, model.d_nonlin());

    ForwardHistory history = run_forward(model, y, cfg.n_particles, fwd_seed);
    if (alg == Algorithm::mpf) {
        for (Eigen::Index l = 0; l < horizon; ++l) {
            FilteredEstimate f = filtered_estimate(history.instants[l]);
            est.lin.row(l) = f.x_lin.transpose();
            est.nonlin.row(l) = f.x_nonlin.transpose();
        }
        return est;
    }
    if (alg == Algorithm::erbss) {
        ErbssResult r = run_erbss(history, model, y, cfg.trajectories(), options,
                                  seed_mix({run_seed, kTagErbss}), diag);
        for (Eigen::Index l = 0; l < horizon; ++l) {
            est.lin.row(l) = r.x_lin_hat[l].transpose();
            est.nonlin.row(l) = r.x_nonlin_hat[l].transpose();
        }
        return est;
    }

    std::vector<SmoothedMarginal> smoothed = run_backward(history, model, y, options, diag);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        est.lin.row(l) = smoothed[l].lin_hat.mean().transpose();
        est.nonlin.row(l) = smoothed[l].x_nonlin_hat.transpose();
    }
    if (alg == Algorithm::rbss_refine) {
        std::vector<GaussianMoment> refined = refine_linear(smoothed, model, y);
        for (Eigen::Index l = 0; l < horizon; ++l)
            est.lin.row(l) = refined[l].mean().transpose();
    }
    return est;
}

RunOutcome execute_run(const ExperimentConfig& cfg, const ClgModel& model,
                       std::uint64_t run_seed) {
    RunOutcome out;
    try {
        Trajectory data = simulate(model, cfg.horizon, seed_mix({run_seed, kTagSim}));
        for (Algorithm alg : cfg.algorithms) {
            auto t0 = std::chrono::steady_clock::now();
            Estimates est = run_algorithm(alg, model, data, cfg, run_seed, &out.diag);
            auto t1 = std::chrono::steady_clock::now();
            out.ctb.push_back(std::chrono::duration<double>(t1 - t0).count());
            out.rmse.push_back(
                rmse_metrics(est.lin, est.nonlin, data.states_lin, data.states_nonlin));
        }
        out.ok = true;
    } catch (const degenerate_weights_error&) {
        out.degenerate = true;
    } catch (const numerical_error&) {
        // run excluded, counted by the caller
    }
    return out;
}

double halfwidth_of_rmse(const std::vector<double>& per_run_mse, double pooled_rmse) {
    const std::size_t r = per_run_mse.size();
    if (r < 2 || !(pooled_rmse > 0.0)) return 0.0;
    double mean = 0.0;
    for (double m : per_run_mse) mean += m;
    mean /= static_cast<double>(r);
    double var = 0.0;
    for (double m : per_run_mse) var += (m - mean) * (m - mean);
    var /= static_cast<double>(r - 1);
    // delta method for sqrt of the mean MSE
    return 1.96 * std::sqrt(var / static_cast<double>(r)) / (2.0 * pooled_rmse);
}

} // namespace

RunReport run_experiment(const ExperimentConfig& config) {
    config.validate();

    ClgModel model = config.linearized
                         ? linearized_benchmark_model(config.sigma_w_lin, config.sigma_w_nonlin,
                                                      config.sigma_e)
                         : benchmark_model(config.sigma_w_lin, config.sigma_w_nonlin,
                                           config.sigma_e);

    RunReport report;
    report.config = config;
    report.run_seeds.reserve(config.n_runs);
    for (int r = 0; r < config.n_runs; ++r)
        report.run_seeds.push_back(seed_mix({config.seed, kTagRun, static_cast<std::uint64_t>(r)}));

    std::uint64_t floor_before = floor_activation_count();
    std::vector<RunOutcome> outcomes(config.n_runs);

    if (config.threads <= 1) {
        for (int r = 0; r < config.n_runs; ++r)
            outcomes[r] = execute_run(config, model, report.run_seeds[r]);
    } else {
        const int n_threads = std::min<int>(config.threads, config.n_runs);
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t]() {
                for (int r = t; r < config.n_runs; r += n_threads)
                    outcomes[r] = execute_run(config, model, report.run_seeds[r]);
            });
        }
        for (auto& th : pool) th.join();
    }

    report.floor_activations = floor_activation_count() - floor_before;

    const std::size_t n_alg = config.algorithms.size();
    std::vector<std::vector<double>> mse_lin(n_alg), mse_nonlin(n_alg);
    std::vector<AlgorithmReport> algs(n_alg);
    for (std::size_t a = 0; a < n_alg; ++a) algs[a].algorithm = config.algorithms[a];

    for (const RunOutcome& o : outcomes) {
        report.cz_floor_events += o.diag.cz_floor_events;
        if (!o.ok) {
            ++report.excluded_runs;
            if (o.degenerate) ++report.degenerate_weight_aborts;
            continue;
        }
        for (std::size_t a = 0; a < n_alg; ++a) {
            algs[a].per_run.push_back(o.rmse[a]);
            algs[a].per_run_ctb.push_back(o.ctb[a]);
            mse_lin[a].push_back(o.rmse[a].lin * o.rmse[a].lin);
            mse_nonlin[a].push_back(o.rmse[a].nonlin * o.rmse[a].nonlin);
        }
    }

    if (report.excluded_runs == config.n_runs)
        throw numerical_error("run_experiment: every Monte Carlo run failed");

    for (std::size_t a = 0; a < n_alg; ++a) {
        const auto mean_of = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        algs[a].rmse.lin = std::sqrt(mean_of(mse_lin[a]));
        algs[a].rmse.nonlin = std::sqrt(mean_of(mse_nonlin[a]));
        algs[a].rmse_halfwidth.lin = halfwidth_of_rmse(mse_lin[a], algs[a].rmse.lin);
        algs[a].rmse_halfwidth.nonlin = halfwidth_of_rmse(mse_nonlin[a], algs[a].rmse.nonlin);
        algs[a].ctb_seconds = mean_of(algs[a].per_run_ctb);
    }
    report.algorithms = std::move(algs);
    return report;
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::n_particles: return "n_particles";
        case SweepAxis::sigma_e: return "sigma_e";
        case SweepAxis::sigma_w: return "sigma_w";
    }
    return "?";
}

std::optional<SweepAxis> parse_sweep_axis(const std::string& name) {
    if (name == "n_particles" || name == "np") return SweepAxis::n_particles;
    if (name == "sigma_e") return SweepAxis::sigma_e;
    if (name == "sigma_w") return SweepAxis::sigma_w;
    return std::nullopt;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep: no axis values");
    std::vector<SweepPoint> points;
    points.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ExperimentConfig c = config;
        switch (axis) {
            case SweepAxis::n_particles:
                c.n_particles = static_cast<int>(values[i]);
                break;
            case SweepAxis::sigma_e:
                c.sigma_e = values[i];
                break;
            case SweepAxis::sigma_w:
                c.sigma_w_lin = values[i];
                c.sigma_w_nonlin = values[i];
                break;
        }
        c.seed = seed_mix({config.seed, 0x5Eu, static_cast<std::uint64_t>(i)});
        points.push_back(SweepPoint{values[i], run_experiment(c)});
    }
    return points;
}

} // namespace clgsmooth
