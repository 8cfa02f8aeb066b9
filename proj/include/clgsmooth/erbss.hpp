#ifndef CLGSMOOTH_ERBSS_HPP
#define CLGSMOOTH_ERBSS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/rbss.hpp"

namespace clgsmooth {

// ERBSS: one forward pass followed by M independent backward simulation
// passes. Each pass samples a nonlinear trajectory made of forward particles
// and then re-smooths the linear component conditionally on it.

/// One sampled backward trajectory.
struct BackwardTrajectory {
    std::vector<Eigen::VectorXd> nonlin_path;   // length T, ascending l
    std::vector<int> chosen_indices;            // j_l per instant
    GaussianMoment terminal_linear;             // (eta_fe,T,jT, C_fe,T,jT)
    std::vector<GaussianMoment> lin_smoothed;   // conditional Kalman smoothing
};

/// Result of the full run: M trajectories plus uniform-average marginal
/// point estimates per instant.
struct ErbssResult {
    std::vector<BackwardTrajectory> trajectories;
    std::vector<Eigen::VectorXd> x_nonlin_hat;  // per instant
    std::vector<Eigen::VectorXd> x_lin_hat;     // per instant
};

/// Samples the terminal particle with probabilities {w_{T/T,j}}; the backward
/// state carries its particle and its updated linear Gaussian.
struct TerminalSample {
    int index;
    BackwardState state;
};
TerminalSample sample_terminal(const ForwardHistory& history, Rng& rng);

/// One backward simulation step at instant l: computes {W_sm,l,j} with the
/// rbss steps 1-6, then samples j_l. The new backward state carries the
/// selected particle and its per-particle smoothed Gaussian (not the
/// condensed mixture).
struct BackwardSample {
    int index;
    BackwardState state;
};
BackwardSample backward_step(const ForwardSlice& slice, const BackwardState& bwd,
                             const Eigen::VectorXd& y, const ClgModel& model, int l,
                             Eigen::Index horizon, const BackwardOptions& options, Rng& rng,
                             SmootherDiagnostics* diag = nullptr);

/// Conditional Kalman smoothing of the linear component along the sampled
/// trajectory, seeded at l = T with the trajectory's terminal Gaussian.
std::vector<GaussianMoment> smooth_linear_on_trajectory(const BackwardTrajectory& traj,
                                                        const ClgModel& model,
                                                        const std::vector<Eigen::VectorXd>& measurements);

/// M independent backward passes (substream per trajectory index) plus the
/// per-instant uniform-average estimates.
ErbssResult run_erbss(const ForwardHistory& history, const ClgModel& model,
                      const std::vector<Eigen::VectorXd>& measurements, int n_trajectories,
                      const BackwardOptions& options, std::uint64_t seed,
                      SmootherDiagnostics* diag = nullptr);

} // namespace clgsmooth

#endif
