#ifndef CLGSMOOTH_TEST_SUPPORT_HPP
#define CLGSMOOTH_TEST_SUPPORT_HPP

#include <functional>
#include <random>

#include <Eigen/Dense>

#include "clgsmooth/clg_model.hpp"
#include "clgsmooth/gaussian.hpp"
#include "clgsmooth/oracles.hpp"

namespace testsup {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double urand(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline VectorXd rand_vec(std::mt19937_64& rng, Eigen::Index d, double lo = -2.0, double hi = 2.0) {
    VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = urand(rng, lo, hi);
    return v;
}

inline MatrixXd rand_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                            double lo = -1.0, double hi = 1.0) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = urand(rng, lo, hi);
    return m;
}

inline MatrixXd rand_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> nd;
    MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = nd(rng);
    return Eigen::HouseholderQR<MatrixXd>(a).householderQ();
}

/// SPD matrix with eigenvalues uniform in [ev_lo, ev_hi].
inline MatrixXd rand_spd(std::mt19937_64& rng, Eigen::Index d, double ev_lo = 0.5,
                         double ev_hi = 2.0) {
    MatrixXd q = rand_orthogonal(rng, d);
    VectorXd ev(d);
    for (Eigen::Index i = 0; i < d; ++i) ev(i) = urand(rng, ev_lo, ev_hi);
    MatrixXd m = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

/// Invertible square matrix (|det| bounded away from zero by construction).
inline MatrixXd rand_invertible(std::mt19937_64& rng, Eigen::Index d) {
    MatrixXd q1 = rand_orthogonal(rng, d);
    MatrixXd q2 = rand_orthogonal(rng, d);
    VectorXd sv(d);
    for (Eigen::Index i = 0; i < d; ++i) sv(i) = urand(rng, 0.4, 1.8) * (urand(rng, 0, 1) < 0.5 ? -1.0 : 1.0);
    return q1 * sv.asDiagonal() * q2.transpose();
}

using Density1d = std::function<double(double)>;
using Density2d = std::function<double(double, double)>;

/// Sup-norm distance of two densities after normalizing each on the same
/// trapezoid grid.
inline double sup_diff_1d(const Density1d& f1, const Density1d& f2, double lo, double hi, int n) {
    auto grid = clgsmooth::oracles::uniform_grid(lo, hi, n);
    VectorXd v1(n), v2(n);
    for (int i = 0; i < n; ++i) {
        v1(i) = f1(grid.points(i));
        v2(i) = f2(grid.points(i));
    }
    v1 /= v1.dot(grid.weights);
    v2 /= v2.dot(grid.weights);
    return (v1 - v2).cwiseAbs().maxCoeff();
}

inline double sup_diff_2d(const Density2d& f1, const Density2d& f2, double lo0, double hi0,
                          double lo1, double hi1, int n) {
    auto g0 = clgsmooth::oracles::uniform_grid(lo0, hi0, n);
    auto g1 = clgsmooth::oracles::uniform_grid(lo1, hi1, n);
    MatrixXd v1(n, n), v2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            v1(i, j) = f1(g0.points(i), g1.points(j));
            v2(i, j) = f2(g0.points(i), g1.points(j));
        }
    double z1 = g0.weights.transpose() * v1 * g1.weights;
    double z2 = g0.weights.transpose() * v2 * g1.weights;
    return (v1 / z1 - v2 / z2).cwiseAbs().maxCoeff();
}

/// Mean and variance of a 1-d density on a grid.
struct GridMoments {
    double mean;
    double var;
};
inline GridMoments grid_moments_1d(const Density1d& f, double lo, double hi, int n) {
    auto grid = clgsmooth::oracles::uniform_grid(lo, hi, n);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = f(grid.points(i));
    VectorXd p = v.cwiseProduct(grid.weights);
    p /= p.sum();
    double mean = p.dot(grid.points);
    double var = p.dot((grid.points.array() - mean).square().matrix());
    return {mean, var};
}

inline Density1d gaussian_density_1d(const clgsmooth::GaussianMoment& g) {
    return [g](double x) {
        return std::exp(clgsmooth::log_density(g, VectorXd::Constant(1, x)));
    };
}

inline Density2d gaussian_density_2d(const clgsmooth::GaussianMoment& g) {
    return [g](double x, double y) {
        VectorXd v(2);
        v << x, y;
        return std::exp(clgsmooth::log_density(g, v));
    };
}

/// Linear degenerate CLG model whose nonlinear component does not influence
/// the linear recursions: A^(N) = 0, constant f^(L), B, h. The conditional
/// linear filter/smoother on it is exactly a D_L-dimensional Kalman problem.
inline clgsmooth::ClgModel decoupled_linear_model(double sigma_w_nonlin) {
    using namespace clgsmooth;
    auto eval = [](int, const VectorXd& x) {
        ModelParams p;
        p.a_lin.resize(2, 2);
        p.a_lin << 0.9, 0.1, 0.0, 0.8;
        p.f_lin.resize(2);
        p.f_lin << 0.5, -0.3;
        p.a_nonlin = MatrixXd::Zero(1, 2);
        p.f_nonlin = VectorXd::Constant(1, 0.7 * x(0));
        p.b_obs.resize(1, 2);
        p.b_obs << 1.0, 0.5;
        p.h_obs = VectorXd::Constant(1, 0.2);
        return p;
    };
    MatrixXd cw_lin(2, 2);
    cw_lin << 0.04, 0.0, 0.0, 0.09;
    MatrixXd cw_nonlin = MatrixXd::Constant(1, 1, sigma_w_nonlin * sigma_w_nonlin);
    MatrixXd ce = MatrixXd::Constant(1, 1, 0.01);
    VectorXd mu_lin(2);
    mu_lin << 0.1, -0.2;
    MatrixXd c_lin(2, 2);
    c_lin << 1.0, 0.0, 0.0, 0.5;
    return ClgModel(2, 1, 1, eval, cw_lin, cw_nonlin, ce,
                    GaussianMoment(mu_lin, c_lin),
                    GaussianMoment(VectorXd::Constant(1, 0.3), MatrixXd::Zero(1, 1)));
}

/// The D_L-dimensional linear Gaussian model matching decoupled_linear_model.
inline clgsmooth::oracles::LinearGaussianModel decoupled_oracle_model() {
    using namespace clgsmooth;
    oracles::LinearGaussianModel m;
    m.f.resize(2, 2);
    m.f << 0.9, 0.1, 0.0, 0.8;
    m.b.resize(2);
    m.b << 0.5, -0.3;
    m.q.resize(2, 2);
    m.q << 0.04, 0.0, 0.0, 0.09;
    m.h.resize(1, 2);
    m.h << 1.0, 0.5;
    m.d = VectorXd::Constant(1, 0.2);
    m.r = MatrixXd::Constant(1, 1, 0.01);
    VectorXd mu(2);
    mu << 0.1, -0.2;
    MatrixXd c(2, 2);
    c << 1.0, 0.0, 0.0, 0.5;
    m.prior = GaussianMoment(mu, c);
    return m;
}

/// Joint 4-d linear Gaussian model equivalent to linearized_benchmark_model.
inline clgsmooth::oracles::LinearGaussianModel joint_linearized_oracle(double sigma_w_lin,
                                                                      double sigma_w_nonlin,
                                                                      double sigma_e) {
    using namespace clgsmooth;
    oracles::LinearGaussianModel m;
    m.f = MatrixXd::Zero(4, 4);
    m.f.topLeftCorner(3, 3) << 0.8, 0.2, 0.0, 0.0, 0.7, -0.2, 0.0, 0.2, 0.7;
    m.f.topRightCorner(3, 1) << 0.2, -0.3, 0.1;   // linearized f_lin
    m.f.bottomLeftCorner(1, 3) << 0.9, 0.0, 0.0;  // a_nonlin
    m.f(3, 3) = 0.5;                              // linearized f_nonlin
    m.b = VectorXd::Zero(4);
    m.q = MatrixXd::Zero(4, 4);
    m.q.topLeftCorner(3, 3) = sigma_w_lin * sigma_w_lin * MatrixXd::Identity(3, 3);
    m.q(3, 3) = sigma_w_nonlin * sigma_w_nonlin;
    m.h = MatrixXd::Zero(2, 4);
    m.h.topLeftCorner(2, 3) << 0.0, 0.0, 0.0, 1.0, -1.0, 1.0;
    m.h(0, 3) = 0.3;                              // linearized h_obs
    m.d = VectorXd::Zero(2);
    m.r = sigma_e * sigma_e * MatrixXd::Identity(2, 2);
    m.prior = GaussianMoment(VectorXd::Zero(4), MatrixXd::Identity(4, 4));
    return m;
}

} // namespace testsup

#endif
