#ifndef CLGSMOOTH_MESSAGE_RULES_HPP
#define CLGSMOOTH_MESSAGE_RULES_HPP

#include <functional>

#include <Eigen/Core>

#include "clgsmooth/gaussian.hpp"

namespace clgsmooth {

// Closed-form sum-product rules for equality and affine-Gaussian function
// nodes. Gaussian messages carry no normalization constants; scalar weights
// (delta reweighting, Gaussian overlaps) are exposed in log form where they
// feed particle weights.

/// Affine-Gaussian factor N(x2; A*x1 + offset, cov) (or, read as a
/// likelihood, N(c; A*x + offset, cov) for an observed c).
struct AffineFactor {
    Eigen::MatrixXd a;
    Eigen::VectorXd offset;
    Eigen::MatrixXd cov;
};

/// Equality node, delta times density: f(x) * delta(x - a) -> reweighted delta.
WeightedDelta eq_delta_times_f(const WeightedDelta& d,
                               const std::function<double(const Eigen::VectorXd&)>& f);

/// Equality node, product of two Gaussians: w = w1 + w2, W = W1 + W2.
GaussianCanonical eq_gauss_product(const GaussianCanonical& m1, const GaussianCanonical& m2);

/// Equality node, Gaussian prior times affine-Gaussian likelihood with
/// observed value c: W = W1 + A' W2 A, w = w1 + A' W2 (c - offset).
GaussianCanonical eq_gauss_likelihood(const GaussianCanonical& m1, const AffineFactor& lik,
                                      const Eigen::VectorXd& c);

/// Function node, Gaussian through an affine-Gaussian factor:
/// N(x2; A*eta1 + g, A C1 A' + C2).
GaussianMoment fn_affine_marginal(const GaussianMoment& m1, const AffineFactor& factor);

/// Function node, delta through an affine-Gaussian factor: N(x2; A*a + g, C2).
GaussianMoment fn_affine_at_point(const Eigen::VectorXd& a, const AffineFactor& factor);

/// Likelihood in x2 produced by a delta message hitting a factor
/// N(x1; A*x2, C2): the object N(a; A*x2, C2), later consumed by
/// eq_gauss_likelihood with observed value a.
struct DeltaLikelihood {
    Eigen::VectorXd observed;
    Eigen::MatrixXd a;
    Eigen::MatrixXd cov;

    AffineFactor factor() const {
        return AffineFactor{a, Eigen::VectorXd::Zero(observed.size()), cov};
    }
    /// log of the likelihood evaluated at a given x2.
    double log_at(const Eigen::VectorXd& x2) const;
};
DeltaLikelihood fn_delta_likelihood(const Eigen::VectorXd& a, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& C2);

/// The two log factors of the Gaussian-overlap weight
/// K * exp{ [eta'W eta - eta1'W1 eta1 - eta2'W2 eta2] / 2 },
/// K = det(C1 + C2)^(-N/2): `log_scale` = log K (mean independent),
/// `exponent` = the bracketed quadratic term / 2.
struct LogOverlap {
    double log_scale;
    double exponent;
};
LogOverlap log_gauss_overlap(const GaussianMoment& m1, const GaussianMoment& m2);

/// Function node, product of two Gaussian messages over the same variable,
/// integrated out: the scalar weight K * exp{...} above.
double fn_gauss_overlap(const GaussianMoment& m1, const GaussianMoment& m2);

/// Function node, reverse message through an affine-Gaussian factor
/// N(x1; g + A*x2, C2) fed by N(x1; eta1, C1): canonical Gaussian in x2 with
/// W = A' (C1+C2)^-1 A and w = A' (C1+C2)^-1 (eta1 - g). May be rank
/// deficient, hence the canonical return form.
GaussianCanonical fn_affine_reverse(const GaussianMoment& m1, const AffineFactor& factor);

/// Condenses a normalized mixture into the single Gaussian with the same mean
/// and covariance.
GaussianMoment gm_condense(const GaussianMixture& mix);

} // namespace clgsmooth

#endif
