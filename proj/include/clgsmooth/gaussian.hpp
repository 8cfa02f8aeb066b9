#ifndef CLGSMOOTH_GAUSSIAN_HPP
#define CLGSMOOTH_GAUSSIAN_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/errors.hpp"
#include "clgsmooth/rng.hpp"

namespace clgsmooth {

/// Symmetrizes m and clamps eigenvalues below eps = 1e-10 * max(1, trace/d)
/// up to eps, so the result is SPD. Fast path: if m - eps*I admits a Cholesky
/// factorization the symmetrized matrix is returned unchanged.
/// `clamped`, when non-null, reports whether any eigenvalue was raised.
Eigen::MatrixXd spd_floor(const Eigen::MatrixXd& m, bool* clamped = nullptr);

/// Like spd_floor but clamps eigenvalues to >= 0 only (no positive floor).
/// Used for sampling from possibly singular covariances.
Eigen::MatrixXd psd_clamp(const Eigen::MatrixXd& m);

/// Total number of eigenvalue-floor activations since process start.
/// Experiment runs snapshot this counter to report flooring diagnostics.
std::uint64_t floor_activation_count();

/// Multivariate Gaussian in moment form (mean, covariance). The covariance is
/// symmetrized and eigenvalue-floored on construction, so it is always SPD.
class GaussianMoment {
public:
    GaussianMoment() = default;
    GaussianMoment(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    Eigen::Index dim() const { return mean_.size(); }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

/// Multivariate Gaussian in canonical (information) form: precision W and
/// transformed mean w = W*eta. W is symmetrized on construction but may be
/// rank deficient; messages stay in this form until a moment-form value is
/// actually needed.
class GaussianCanonical {
public:
    GaussianCanonical() = default;
    GaussianCanonical(Eigen::VectorXd tmean, const Eigen::MatrixXd& prec);

    const Eigen::VectorXd& tmean() const { return tmean_; }
    const Eigen::MatrixXd& prec() const { return prec_; }
    Eigen::Index dim() const { return tmean_.size(); }

private:
    Eigen::VectorXd tmean_;
    Eigen::MatrixXd prec_;
};

/// Normalized finite mixture of moment-form Gaussians.
class GaussianMixture {
public:
    struct Component {
        double weight;
        GaussianMoment density;
    };

    /// Normalizes the weights; throws on an empty list, nonuniform
    /// dimensions, or a nonpositive weight sum.
    explicit GaussianMixture(std::vector<Component> components);

    const std::vector<Component>& components() const { return components_; }
    Eigen::Index dim() const { return components_.front().density.dim(); }

private:
    std::vector<Component> components_;
};

/// Weighted Dirac delta, the particle-side message of the smoother.
struct WeightedDelta {
    Eigen::VectorXd location;
    double weight = 1.0;
};

GaussianCanonical to_canonical(const GaussianMoment& g);
GaussianMoment to_moment(const GaussianCanonical& g);

/// log N(x; mean, cov), normalizer included.
double log_density(const GaussianMoment& g, const Eigen::VectorXd& x);

/// The two pieces of a Gaussian log density: `log_norm` is the mean-independent
/// normalizer -(d*log(2*pi) + log det C)/2, `quad` is -(x-eta)' W (x-eta)/2.
struct LogDensityParts {
    double log_norm;
    double quad;
};
LogDensityParts log_density_parts(const GaussianMoment& g, const Eigen::VectorXd& x);

/// Draws from N(mean, cov) for a raw (possibly singular) covariance using an
/// eigendecomposition; negative eigenvalues are clamped to zero, so
/// zero-variance directions are deterministic.
Eigen::VectorXd sample_gaussian_raw(Rng& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& cov);

/// Draws from a moment-form Gaussian. Eigenvalues at the construction floor
/// are treated as exact zeros: the floor exists for invertibility and must
/// not inject noise into deterministic directions.
Eigen::VectorXd sample_gaussian(Rng& rng, const GaussianMoment& g);

} // namespace clgsmooth

#endif
