#include "clgsmooth/message_rules.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace clgsmooth {

namespace {

void check_factor(const AffineFactor& f, Eigen::Index in_dim, const char* what) {
    if (f.a.cols() != in_dim || f.offset.size() != f.a.rows() || f.cov.rows() != f.a.rows() ||
        f.cov.cols() != f.a.rows())
        throw std::invalid_argument(std::string(what) + ": factor shape mismatch");
}

Eigen::LLT<Eigen::MatrixXd> chol_spd(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(spd_floor(m));
    if (llt.info() != Eigen::Success)
        throw numerical_error(std::string(what) + ": matrix singular after floor");
    return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace

WeightedDelta eq_delta_times_f(const WeightedDelta& d,
                               const std::function<double(const Eigen::VectorXd&)>& f) {
    double v = f(d.location);
    if (!std::isfinite(v))
        throw numerical_error("eq_delta_times_f: density non-finite at delta location");
    return WeightedDelta{d.location, d.weight * v};
}

GaussianCanonical eq_gauss_product(const GaussianCanonical& m1, const GaussianCanonical& m2) {
    if (m1.dim() != m2.dim())
        throw std::invalid_argument("eq_gauss_product: dimension mismatch");
    return GaussianCanonical(m1.tmean() + m2.tmean(), m1.prec() + m2.prec());
}

GaussianCanonical eq_gauss_likelihood(const GaussianCanonical& m1, const AffineFactor& lik,
                                      const Eigen::VectorXd& c) {
    check_factor(lik, m1.dim(), "eq_gauss_likelihood");
    if (c.size() != lik.a.rows())
        throw std::invalid_argument("eq_gauss_likelihood: observation shape mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt = chol_spd(lik.cov, "eq_gauss_likelihood");
    Eigen::MatrixXd w2a = llt.solve(lik.a);                       // W2 A
    Eigen::MatrixXd prec = m1.prec() + lik.a.transpose() * w2a;
    Eigen::VectorXd tmean = m1.tmean() + w2a.transpose() * (c - lik.offset);
    return GaussianCanonical(std::move(tmean), prec);
}

GaussianMoment fn_affine_marginal(const GaussianMoment& m1, const AffineFactor& factor) {
    check_factor(factor, m1.dim(), "fn_affine_marginal");
    Eigen::VectorXd mean = factor.a * m1.mean() + factor.offset;
    Eigen::MatrixXd cov = factor.a * m1.cov() * factor.a.transpose() + factor.cov;
    return GaussianMoment(std::move(mean), cov);
}

GaussianMoment fn_affine_at_point(const Eigen::VectorXd& a, const AffineFactor& factor) {
    check_factor(factor, a.size(), "fn_affine_at_point");
    return GaussianMoment(factor.a * a + factor.offset, factor.cov);
}

DeltaLikelihood fn_delta_likelihood(const Eigen::VectorXd& a, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& C2) {
    if (A.rows() != a.size() || C2.rows() != a.size() || C2.cols() != a.size())
        throw std::invalid_argument("fn_delta_likelihood: shape mismatch");
    return DeltaLikelihood{a, A, C2};
}

double DeltaLikelihood::log_at(const Eigen::VectorXd& x2) const {
    if (x2.size() != a.cols()) throw std::invalid_argument("DeltaLikelihood: x2 shape mismatch");
    return log_density(GaussianMoment(a * x2, cov), observed);
}

LogOverlap log_gauss_overlap(const GaussianMoment& m1, const GaussianMoment& m2) {
    if (m1.dim() != m2.dim())
        throw std::invalid_argument("fn_gauss_overlap: dimension mismatch");
    const double n = static_cast<double>(m1.dim());
    // K * exp{...} evaluated through the equivalent difference form
    // -(eta1-eta2)' (C1+C2)^-1 (eta1-eta2) / 2, which avoids cancellation
    // between the three quadratic terms when the precisions are large.
    Eigen::LLT<Eigen::MatrixXd> llt = chol_spd(m1.cov() + m2.cov(), "fn_gauss_overlap");
    Eigen::VectorXd diff = m1.mean() - m2.mean();
    double exponent = -0.5 * diff.dot(llt.solve(diff));
    double log_scale = -0.5 * n * log_det_from_llt(llt);
    return LogOverlap{log_scale, exponent};
}

double fn_gauss_overlap(const GaussianMoment& m1, const GaussianMoment& m2) {
    LogOverlap lo = log_gauss_overlap(m1, m2);
    return std::exp(lo.log_scale + lo.exponent);
}

GaussianCanonical fn_affine_reverse(const GaussianMoment& m1, const AffineFactor& factor) {
    if (factor.a.rows() != m1.dim() || factor.offset.size() != m1.dim() ||
        factor.cov.rows() != m1.dim() || factor.cov.cols() != m1.dim())
        throw std::invalid_argument("fn_affine_reverse: factor shape mismatch");
    // A' W2 [I - C3 W2] A reduces to A' (C1+C2)^-1 A (and likewise for the
    // tmean), with C3 = (W1+W2)^-1.
    Eigen::LLT<Eigen::MatrixXd> llt = chol_spd(m1.cov() + factor.cov, "fn_affine_reverse");
    Eigen::MatrixXd sa = llt.solve(factor.a);             // (C1+C2)^-1 A
    Eigen::MatrixXd prec = factor.a.transpose() * sa;
    Eigen::VectorXd tmean = sa.transpose() * (m1.mean() - factor.offset);
    return GaussianCanonical(std::move(tmean), prec);
}

GaussianMoment gm_condense(const GaussianMixture& mix) {
    const Eigen::Index d = mix.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& c : mix.components()) mean += c.weight * c.density.mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& c : mix.components()) {
        Eigen::VectorXd r = c.density.mean() - mean;
        cov += c.weight * (c.density.cov() + r * r.transpose());
    }
    return GaussianMoment(std::move(mean), cov);
}

} // namespace clgsmooth
