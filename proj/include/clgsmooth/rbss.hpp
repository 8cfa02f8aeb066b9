#ifndef CLGSMOOTH_RBSS_HPP
#define CLGSMOOTH_RBSS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/clg_model.hpp"
#include "clgsmooth/gaussian.hpp"
#include "clgsmooth/message_rules.hpp"
#include "clgsmooth/mpf.hpp"

namespace clgsmooth {

// Backward pass of the Rao-Blackwellized serial smoother. Each recursion
// processes one instant: a linear part (steps 1-3) producing per-particle
// smoothed Gaussians, a nonlinear part (steps 4-6) producing new particle
// weights, and an output step (7) condensing them into the next backward
// messages. Per-particle work is a pure map over the forward particle set;
// forward weights are not an input (only init_backward at l = T reads them).

/// How the three weight factors of steps 4-6 are combined.
/// `exact` keeps every particle-dependent normalizer and multiplies raw
/// factors; `approx` drops the normalizers and normalizes each factor set
/// before multiplying.
enum class WeightMode { exact, approx };

struct BackwardOptions {
    WeightMode weight_mode = WeightMode::approx;
    /// When false, step 3 keeps the backward-only message at every instant
    /// (the Lindsten-style variant used for comparison in erbss).
    bool merge_forward = true;
};

/// Counters accumulated over a smoothing run.
struct SmootherDiagnostics {
    std::uint64_t cz_floor_events = 0; // indefinite C_z floored in step 5
};

/// Backward input messages entering the recursion at instant l: the point
/// estimate of x_{l+1}^(N) and the Gaussian for x_{l+1}^(L).
struct BackwardState {
    Eigen::VectorXd x_nonlin;
    GaussianMoment lin;
};

/// What the backward steps may see of the forward pass at one instant:
/// predicted particles and their predicted linear Gaussians only.
struct ForwardSlice {
    const std::vector<ParticleHypothesis>* hyps;

    Eigen::Index size() const { return static_cast<Eigen::Index>(hyps->size()); }
    const Eigen::VectorXd& x_nonlin(Eigen::Index j) const { return (*hyps)[j].x_nonlin; }
    const GaussianMoment& lin_pred(Eigen::Index j) const { return (*hyps)[j].lin_pred; }
};

/// Smoothed marginal at one instant: the reweighted forward particle cloud,
/// the per-particle linear Gaussians, and their point estimates.
struct SmoothedMarginal {
    struct Particle {
        Eigen::VectorXd x_nonlin;
        double weight;
        GaussianMoment lin;
    };

    int instant = 0;
    std::vector<Particle> particles;
    Eigen::VectorXd x_nonlin_hat;
    GaussianMoment lin_hat;

    double effective_sample_size() const;
};

/// Terminal backward messages built from the last forward recursion:
/// x = sum_j w_{T/T,j} x_{T/(T-1),j}, Gaussian = condensed MU mixture.
BackwardState init_backward(const ForwardHistory& history);

/// Particle-independent pieces of step 1 at one instant, shared across j.
struct LinearTuContext {
    Eigen::MatrixXd prec_w_lin;    // W_w^(L)
    Eigen::MatrixXd cbar;          // (W_w + W_be)^-1
    Eigen::MatrixXd p;             // I - cbar * W_w
    Eigen::VectorXd cbar_w_be;     // cbar * w_be
};
LinearTuContext make_linear_tu_context(const GaussianMoment& lin_be_next,
                                       const Eigen::MatrixXd& cov_w_lin);
/// Canonical-form variant; handles rank-deficient backward messages exactly.
LinearTuContext make_linear_tu_context(const GaussianCanonical& lin_be_next,
                                       const Eigen::MatrixXd& cov_w_lin);

/// Step 1, time update for x^(L): the backward prediction
/// W1 = A' W_w P A, w1 = A' W_w (cbar w_be - P f). Possibly rank deficient.
GaussianCanonical step1_tu_linear(const ModelParams& params, const LinearTuContext& ctx);
GaussianCanonical step1_tu_linear(const ModelParams& params, const BackwardState& bwd,
                                  const Eigen::MatrixXd& cov_w_lin);

/// Step 2, measurement update for x^(L): fuses the pseudo-measurement
/// z = x_be^(N) - f^(N) and the measurement y into m1. Also returns the
/// intermediate messages m3 (after the pseudo-measurement) and m4 (the
/// measurement-only canonical term).
struct Step2Result {
    GaussianCanonical m3;
    GaussianCanonical m4;
    GaussianCanonical m_be;
};
Step2Result step2_mu_linear(const GaussianCanonical& m1, const ModelParams& params,
                            const Eigen::VectorXd& x_be_nonlin_next, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& cov_w_nonlin, const Eigen::MatrixXd& cov_e);

/// Step 3, merge of forward and backward messages about x^(L). At l = T the
/// smoothed message is the forward prediction; at l = 1 (instant index 0) it
/// is the backward message alone.
GaussianMoment step3_merge_linear(const GaussianMoment& lin_pred, const GaussianCanonical& m_be,
                                  int l, Eigen::Index horizon, bool merge_forward = true);

/// Step 4, time update for x^(N): log of the weight
/// w1 = N(x_be,l+1; A^(N) eta_sm + f^(N), A^(N) C_sm A^(N)' + C_w^(N)).
/// In approx mode the Gaussian normalizer is dropped.
double step4_tu_nonlinear(const ModelParams& params, const GaussianMoment& m_sm,
                          const Eigen::VectorXd& x_be_nonlin_next,
                          const Eigen::MatrixXd& cov_w_nonlin, WeightMode mode);

/// Step 5, measurement update for x^(N): log weights w2 (overlap of the
/// z^(N) message with N(f^(L), C_w^(L))) and w4 (the marginal measurement
/// likelihood). An indefinite C_z is floored and reported via cz_floored.
struct Step5Result {
    double log_w2;
    double log_w4;
    bool cz_floored;
};
Step5Result step5_mu_nonlinear(const ModelParams& params, const GaussianMoment& m_sm,
                               const BackwardState& bwd, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& cov_w_lin, const Eigen::MatrixXd& cov_e,
                               WeightMode mode);

/// Step 6, weight combination. Input: per-particle log factors {w1, w2, w4}.
/// Exact mode sums raw log factors and normalizes once; approx mode
/// normalizes each factor set first. Throws degenerate_weights_error when
/// everything collapses.
std::vector<double> step6_merge_nonlinear(const std::vector<double>& log_w1,
                                          const std::vector<double>& log_w2,
                                          const std::vector<double>& log_w4, WeightMode mode,
                                          int instant);

/// Step 7, outputs: the smoothed marginal at l and the backward state for
/// the next recursion (weighted particle mean + condensed linear mixture).
struct Step7Result {
    SmoothedMarginal marginal;
    BackwardState next;
};
Step7Result step7_outputs(const ForwardSlice& slice, const std::vector<double>& w_sm,
                          const std::vector<GaussianMoment>& lin_sm, int l);

/// Steps 1-7 for one instant (l < T-1 in 0-based indexing, i.e. any instant
/// that is not the terminal one).
Step7Result backward_instant(const ForwardSlice& slice, const BackwardState& bwd,
                             const Eigen::VectorXd& y, const ClgModel& model, int l,
                             Eigen::Index horizon, const BackwardOptions& options,
                             SmootherDiagnostics* diag = nullptr);

/// Full backward pass. Returns one SmoothedMarginal per instant, ascending in
/// l; the entry at l = T-1 is the filtered terminal marginal.
std::vector<SmoothedMarginal> run_backward(const ForwardHistory& history, const ClgModel& model,
                                           const std::vector<Eigen::VectorXd>& measurements,
                                           const BackwardOptions& options = {},
                                           SmootherDiagnostics* diag = nullptr);

/// Forward/backward/merge Kalman smoothing of the linear component along a
/// fixed nonlinear trajectory. The backward information pass starts from the
/// measurement likelihood at l = T, so the merged result equals the exact
/// two-filter smoother; at l = 1 the merge keeps the backward message only.
std::vector<GaussianMoment> conditional_linear_smooth(const ClgModel& model,
                                                      const std::vector<Eigen::VectorXd>& measurements,
                                                      const std::vector<Eigen::VectorXd>& nonlin_traj);

/// Optional refinement: re-smooths the linear component conditioned on the
/// nonlinear point trajectory {x_be,l} produced by run_backward.
std::vector<GaussianMoment> refine_linear(const std::vector<SmoothedMarginal>& smoothed,
                                          const ClgModel& model,
                                          const std::vector<Eigen::VectorXd>& measurements);

} // namespace clgsmooth

#endif
