#include "clgsmooth/erbss.hpp"

namespace clgsmooth {

namespace {
constexpr std::uint64_t kTagTrajectory = 0xE5;
}

TerminalSample sample_terminal(const ForwardHistory& history, Rng& rng) {
    const auto& last = history.instants.back();
    std::vector<double> weights;
    weights.reserve(last.size());
    for (const auto& p : last) weights.push_back(p.weight_mu);
    int idx = rng.categorical(weights);
    return TerminalSample{idx, BackwardState{last[idx].x_nonlin, last[idx].lin_filt}};
}

BackwardSample backward_step(const ForwardSlice& slice, const BackwardState& bwd,
                             const Eigen::VectorXd& y, const ClgModel& model, int l,
                             Eigen::Index horizon, const BackwardOptions& options, Rng& rng,
                             SmootherDiagnostics* diag) {
    Step7Result r = backward_instant(slice, bwd, y, model, l, horizon, options, diag);
    std::vector<double> weights;
    weights.reserve(r.marginal.particles.size());
    for (const auto& p : r.marginal.particles) weights.push_back(p.weight);
    int idx = rng.categorical(weights);
    const auto& chosen = r.marginal.particles[idx];
    return BackwardSample{idx, BackwardState{chosen.x_nonlin, chosen.lin}};
}

std::vector<GaussianMoment> smooth_linear_on_trajectory(
    const BackwardTrajectory& traj, const ClgModel& model,
    const std::vector<Eigen::VectorXd>& measurements) {
    return conditional_linear_smooth(model, measurements, traj.nonlin_path);
}

ErbssResult run_erbss(const ForwardHistory& history, const ClgModel& model,
                      const std::vector<Eigen::VectorXd>& measurements, int n_trajectories,
                      const BackwardOptions& options, std::uint64_t seed,
                      SmootherDiagnostics* diag) {
    if (n_trajectories < 1) throw std::invalid_argument("run_erbss: need at least one trajectory");
    const Eigen::Index horizon = history.horizon();
    if (static_cast<Eigen::Index>(measurements.size()) != horizon)
        throw std::invalid_argument("run_erbss: history/measurements length mismatch");

    ErbssResult result;
    result.trajectories.reserve(n_trajectories);

    for (int m = 0; m < n_trajectories; ++m) {
        Rng rng(seed_mix({seed, kTagTrajectory, static_cast<std::uint64_t>(m)}));

        BackwardTrajectory traj;
        traj.nonlin_path.resize(horizon);
        traj.chosen_indices.resize(horizon);

        try {
            TerminalSample term = sample_terminal(history, rng);
            traj.chosen_indices[horizon - 1] = term.index;
            traj.nonlin_path[horizon - 1] = term.state.x_nonlin;
            traj.terminal_linear = term.state.lin;

            BackwardState bwd = term.state;
            for (Eigen::Index l = horizon - 2; l >= 0; --l) {
                ForwardSlice slice{&history.instants[l]};
                BackwardSample bs = backward_step(slice, bwd, measurements[l], model,
                                                  static_cast<int>(l), horizon, options, rng, diag);
                traj.chosen_indices[l] = bs.index;
                traj.nonlin_path[l] = bs.state.x_nonlin;
                bwd = bs.state;
            }
            traj.lin_smoothed = smooth_linear_on_trajectory(traj, model, measurements);
        } catch (const numerical_error& e) {
            throw numerical_error("erbss trajectory " + std::to_string(m) + ": " + e.what());
        }
        result.trajectories.push_back(std::move(traj));
    }

    // Uniform averages over the equally likely trajectories.
    result.x_nonlin_hat.resize(horizon);
    result.x_lin_hat.resize(horizon);
    const double inv_m = 1.0 / static_cast<double>(n_trajectories);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        Eigen::VectorXd xn = Eigen::VectorXd::Zero(model.d_nonlin());
        Eigen::VectorXd xl = Eigen::VectorXd::Zero(model.d_lin());
        for (const auto& traj : result.trajectories) {
            xn += traj.nonlin_path[l];
            xl += traj.lin_smoothed[l].mean();
        }
        result.x_nonlin_hat[l] = inv_m * xn;
        result.x_lin_hat[l] = inv_m * xl;
    }
    return result;
}

} // namespace clgsmooth
