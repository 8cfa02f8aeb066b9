#ifndef CLGSMOOTH_CLG_MODEL_HPP
#define CLGSMOOTH_CLG_MODEL_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/gaussian.hpp"
#include "clgsmooth/rng.hpp"

namespace clgsmooth {

/// The model matrices/offsets evaluated at one (instant, nonlinear state):
///   x_lin'    = a_lin * x_lin + f_lin + w_lin
///   x_nonlin' = f_nonlin + a_nonlin * x_lin + w_nonlin
///   y         = h_obs + b_obs * x_lin + e
struct ModelParams {
    Eigen::MatrixXd a_lin;     // D_L x D_L
    Eigen::VectorXd f_lin;     // D_L
    Eigen::MatrixXd a_nonlin;  // D_N x D_L
    Eigen::VectorXd f_nonlin;  // D_N
    Eigen::MatrixXd b_obs;     // P x D_L
    Eigen::VectorXd h_obs;     // P
};

/// Conditionally linear Gaussian state-space model. Given the nonlinear
/// component, dynamics and observations are affine with Gaussian noise.
/// Immutable after construction.
class ClgModel {
public:
    using ParamEval = std::function<ModelParams(int l, const Eigen::VectorXd& x_nonlin)>;

    /// Throws std::invalid_argument on inconsistent dimensions or noise
    /// covariances that are not symmetric PSD. Covariances may be singular;
    /// inverses are only formed where an update actually needs them.
    ClgModel(Eigen::Index d_lin, Eigen::Index d_nonlin, Eigen::Index d_obs, ParamEval param_eval,
             const Eigen::MatrixXd& cov_w_lin, const Eigen::MatrixXd& cov_w_nonlin,
             const Eigen::MatrixXd& cov_e, GaussianMoment prior_lin, GaussianMoment prior_nonlin);

    Eigen::Index d_lin() const { return d_lin_; }
    Eigen::Index d_nonlin() const { return d_nonlin_; }
    Eigen::Index d_obs() const { return d_obs_; }

    ModelParams params(int l, const Eigen::VectorXd& x_nonlin) const;

    const Eigen::MatrixXd& cov_w_lin() const { return cov_w_lin_; }
    const Eigen::MatrixXd& cov_w_nonlin() const { return cov_w_nonlin_; }
    const Eigen::MatrixXd& cov_e() const { return cov_e_; }
    const GaussianMoment& prior_lin() const { return prior_lin_; }
    const GaussianMoment& prior_nonlin() const { return prior_nonlin_; }

    /// Copy of this model with replaced noise covariances (used by tests to
    /// build zero-noise variants for hand recursions).
    ClgModel with_noise(const Eigen::MatrixXd& cov_w_lin, const Eigen::MatrixXd& cov_w_nonlin,
                        const Eigen::MatrixXd& cov_e) const;

    /// Copy of this model with replaced initial priors.
    ClgModel with_priors(GaussianMoment prior_lin, GaussianMoment prior_nonlin) const;

private:
    Eigen::Index d_lin_, d_nonlin_, d_obs_;
    ParamEval param_eval_;
    Eigen::MatrixXd cov_w_lin_, cov_w_nonlin_, cov_e_;
    GaussianMoment prior_lin_, prior_nonlin_;
};

/// One simulated state/measurement sequence. Row l holds instant l (0-based).
struct Trajectory {
    Eigen::MatrixXd states_lin;      // T x D_L
    Eigen::MatrixXd states_nonlin;   // T x D_N
    Eigen::MatrixXd measurements;    // T x P
    std::uint64_t seed = 0;

    Eigen::Index horizon() const { return states_lin.rows(); }
    std::vector<Eigen::VectorXd> measurement_rows() const;
};

/// The three-dimensional-linear / scalar-nonlinear benchmark system:
///   a_lin = [[0.8, 0.2, 0], [0, 0.7, -0.2], [0, 0.2, 0.7]]
///   f_lin(x) = [cos x, -sin x, 0.5 sin 2x],  f_nonlin(x) = arctan x
///   a_nonlin = [0.9, 0, 0]
///   h_obs(x) = [0.1 x^2 sgn x, 0],  b_obs = [[0, 0, 0], [1, -1, 1]]
/// with isotropic noises sigma^2 * I and priors x_lin ~ N(0, I3),
/// x_nonlin ~ N(0, 1). Throws on a nonpositive sigma.
ClgModel benchmark_model(double sigma_w_lin, double sigma_w_nonlin, double sigma_e);

/// Variant of the benchmark with every nonlinearity replaced by a linear map
/// (arctan x -> 0.5 x, f_lin -> [0.2, -0.3, 0.1]' x, h_obs -> [0.3, 0]' x), so
/// the joint model is exactly linear Gaussian. Used against Kalman/RTS oracles.
ClgModel linearized_benchmark_model(double sigma_w_lin, double sigma_w_nonlin, double sigma_e);

/// Simulates `horizon` instants from the model priors; reproducible from seed.
/// Throws numerical_error if a state stops being finite.
Trajectory simulate(const ClgModel& model, Eigen::Index horizon, std::uint64_t seed);

/// Pseudo-measurement informing x_lin: z_lin = x_nonlin_next - f_nonlin,
/// distributed as N(a_nonlin * x_lin, cov_w_nonlin).
Eigen::VectorXd pseudo_meas_lin(const Eigen::VectorXd& x_nonlin_next, const ModelParams& params);

/// Pseudo-measurement informing x_nonlin: z_nonlin = x_lin_next - a_lin * x_lin,
/// distributed as N(f_lin, cov_w_lin).
Eigen::VectorXd pseudo_meas_nonlin(const Eigen::VectorXd& x_lin_next, const Eigen::VectorXd& x_lin,
                                   const ModelParams& params);

} // namespace clgsmooth

#endif
