#ifndef CLGSMOOTH_ORACLES_HPP
#define CLGSMOOTH_ORACLES_HPP

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/gaussian.hpp"

namespace clgsmooth::oracles {

// Independent reference implementations used by tests and the acceptance
// suite only: exact Kalman filtering/RTS smoothing in covariance form, a
// dense-grid smoother for scalar models, and quadrature utilities.

/// Time-invariant linear Gaussian model
///   x' = F x + b + w,  w ~ N(0, Q)
///   y  = H x + d + e,  e ~ N(0, R)
struct LinearGaussianModel {
    Eigen::MatrixXd f;
    Eigen::VectorXd b;
    Eigen::MatrixXd q;
    Eigen::MatrixXd h;
    Eigen::VectorXd d;
    Eigen::MatrixXd r;
    GaussianMoment prior;
};

struct KalmanResult {
    std::vector<GaussianMoment> predicted; // predicted[l] = p(x_l | y_0:l-1)
    std::vector<GaussianMoment> filtered;  // filtered[l]  = p(x_l | y_0:l)
};

/// Standard covariance-form predict/update filter.
KalmanResult kalman_filter(const LinearGaussianModel& model,
                           const std::vector<Eigen::VectorXd>& measurements);

/// Rauch-Tung-Striebel backward recursion on a filter result.
std::vector<GaussianMoment> rts_smoother(const KalmanResult& filter,
                                         const LinearGaussianModel& model);

/// Scalar state-space model given by log densities, for the grid smoother.
struct ScalarModel {
    std::function<double(int l, double x_next, double x)> log_transition;
    std::function<double(int l, double y, double x)> log_observation;
    std::function<double(double x)> log_prior;
};

struct GridSpec {
    double lo = -10.0;
    double hi = 10.0;
    int n = 2048;
};

/// Per-instant discretized posteriors from direct forward/backward summation:
/// values are probabilities over grid cells (trapezoid weights folded in),
/// summing to one per instant.
struct GridPosterior {
    Eigen::VectorXd points;
    std::vector<Eigen::VectorXd> filtered;
    std::vector<Eigen::VectorXd> smoothed;

    double mean(const Eigen::VectorXd& probs) const;
    double var(const Eigen::VectorXd& probs) const;
};
GridPosterior grid_smoother(const ScalarModel& model, const std::vector<double>& measurements,
                            const GridSpec& grid);

// --- quadrature utilities ---

/// Gauss-Hermite nodes and weights for integrals against exp(-t^2)
/// (Golub-Welsch on the Jacobi matrix).
struct GaussHermite {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
GaussHermite gauss_hermite(int n);

/// Integral of f against N(mean, cov) using a (tensorized) Gauss-Hermite rule.
double integrate_gaussian(const GaussianMoment& g, int order,
                          const std::function<double(const Eigen::VectorXd&)>& f);

/// Uniform grid with trapezoid weights.
struct Grid1d {
    Eigen::VectorXd points;
    Eigen::VectorXd weights;
};
Grid1d uniform_grid(double lo, double hi, int n);

} // namespace clgsmooth::oracles

#endif
