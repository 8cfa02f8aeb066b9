#include "clgsmooth/gaussian.hpp"

#include <atomic>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace clgsmooth {

namespace {

constexpr double kFloorScale = 1e-10;

std::atomic<std::uint64_t> g_floor_activations{0};

double floor_epsilon(const Eigen::MatrixXd& sym) {
    double d = static_cast<double>(sym.rows());
    return kFloorScale * std::max(1.0, sym.trace() / d);
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw numerical_error(std::string(what) + " has non-finite entries");
}

// Symmetric eigensolver; the analytic 2x2/3x3 path keeps flooring cheap in
// the per-particle loops.
void solve_sym(const Eigen::MatrixXd& sym, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    if (sym.rows() <= 3)
        es.computeDirect(sym);
    else
        es.compute(sym);
}

} // namespace

std::uint64_t floor_activation_count() { return g_floor_activations.load(); }

Eigen::MatrixXd spd_floor(const Eigen::MatrixXd& m, bool* clamped) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spd_floor: matrix not square");
    require_finite(m, "spd_floor: matrix");
    if (clamped) *clamped = false;

    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const double eps = floor_epsilon(sym);

    Eigen::MatrixXd shifted = sym;
    shifted.diagonal().array() -= eps;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return sym; // all eigenvalues >= eps

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    solve_sym(sym, es);
    if (es.info() != Eigen::Success) throw numerical_error("spd_floor: eigensolver failed");

    Eigen::VectorXd ev = es.eigenvalues();
    bool any = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < eps) {
            ev(i) = eps;
            any = true;
        }
    }
    if (!any) return sym; // borderline LLT failure only
    if (clamped) *clamped = true;
    g_floor_activations.fetch_add(1, std::memory_order_relaxed);
    Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd psd_clamp(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("psd_clamp: matrix not square");
    require_finite(m, "psd_clamp: matrix");
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    solve_sym(sym, es);
    if (es.info() != Eigen::Success) throw numerical_error("psd_clamp: eigensolver failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

GaussianMoment::GaussianMoment(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
    if (cov.rows() != mean_.size() || cov.cols() != mean_.size())
        throw std::invalid_argument("GaussianMoment: covariance shape mismatch");
    if (!mean_.allFinite()) throw numerical_error("GaussianMoment: non-finite mean");
    cov_ = spd_floor(cov);
}

GaussianCanonical::GaussianCanonical(Eigen::VectorXd tmean, const Eigen::MatrixXd& prec)
    : tmean_(std::move(tmean)) {
    if (prec.rows() != tmean_.size() || prec.cols() != tmean_.size())
        throw std::invalid_argument("GaussianCanonical: precision shape mismatch");
    if (!tmean_.allFinite()) throw numerical_error("GaussianCanonical: non-finite tmean");
    require_finite(prec, "GaussianCanonical: precision");
    prec_ = 0.5 * (prec + prec.transpose());
}

GaussianMixture::GaussianMixture(std::vector<Component> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("GaussianMixture: empty mixture");
    const Eigen::Index d = components_.front().density.dim();
    double sum = 0.0;
    for (const auto& c : components_) {
        if (c.density.dim() != d)
            throw std::invalid_argument("GaussianMixture: mixed dimensions");
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            throw std::invalid_argument("GaussianMixture: invalid weight");
        sum += c.weight;
    }
    if (!(sum > 0.0)) throw numerical_error("GaussianMixture: weight sum not positive");
    for (auto& c : components_) c.weight /= sum;
}

GaussianCanonical to_canonical(const GaussianMoment& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov());
    if (llt.info() != Eigen::Success)
        throw numerical_error("to_canonical: covariance singular after floor");
    Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(g.dim(), g.dim()));
    Eigen::VectorXd tmean = llt.solve(g.mean());
    return GaussianCanonical(std::move(tmean), prec);
}

GaussianMoment to_moment(const GaussianCanonical& g) {
    Eigen::MatrixXd prec = spd_floor(g.prec());
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
        throw numerical_error("to_moment: precision singular after floor");
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(g.dim(), g.dim()));
    Eigen::VectorXd mean = llt.solve(g.tmean());
    return GaussianMoment(std::move(mean), cov);
}

LogDensityParts log_density_parts(const GaussianMoment& g, const Eigen::VectorXd& x) {
    if (x.size() != g.dim()) throw std::invalid_argument("log_density: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov());
    if (llt.info() != Eigen::Success)
        throw numerical_error("log_density: covariance singular after floor");
    double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Eigen::VectorXd r = x - g.mean();
    double quad = -0.5 * r.dot(llt.solve(r));
    constexpr double kLog2Pi = 1.8378770664093454836;
    return {-0.5 * (static_cast<double>(g.dim()) * kLog2Pi + log_det), quad};
}

double log_density(const GaussianMoment& g, const Eigen::VectorXd& x) {
    LogDensityParts p = log_density_parts(g, x);
    return p.log_norm + p.quad;
}

namespace {

Eigen::VectorXd sample_with_cutoff(Rng& rng, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov, double cutoff) {
    Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    solve_sym(sym, es);
    if (es.info() != Eigen::Success) throw numerical_error("sample_gaussian: eigensolver failed");
    Eigen::VectorXd scale(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        double ev = es.eigenvalues()(i);
        scale(i) = ev > cutoff ? std::sqrt(ev) : 0.0;
    }
    Eigen::VectorXd z = rng.normal_vector(mean.size());
    return mean + es.eigenvectors() * (scale.asDiagonal() * z);
}

} // namespace

Eigen::VectorXd sample_gaussian_raw(Rng& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& cov) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("sample_gaussian_raw: shape mismatch");
    require_finite(cov, "sample_gaussian_raw: covariance");
    return sample_with_cutoff(rng, mean, cov, 0.0);
}

Eigen::VectorXd sample_gaussian(Rng& rng, const GaussianMoment& g) {
    double cutoff = floor_epsilon(g.cov()) * (1.0 + 1e-6);
    return sample_with_cutoff(rng, g.mean(), g.cov(), cutoff);
}

} // namespace clgsmooth
