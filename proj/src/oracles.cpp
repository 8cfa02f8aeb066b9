#include "clgsmooth/oracles.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "clgsmooth/errors.hpp"

namespace clgsmooth::oracles {

KalmanResult kalman_filter(const LinearGaussianModel& model,
                           const std::vector<Eigen::VectorXd>& measurements) {
    const Eigen::Index horizon = static_cast<Eigen::Index>(measurements.size());
    if (horizon == 0) throw std::invalid_argument("kalman_filter: no measurements");

    KalmanResult out;
    out.predicted.reserve(horizon);
    out.filtered.reserve(horizon);

    Eigen::VectorXd mean = model.prior.mean();
    Eigen::MatrixXd cov = model.prior.cov();
    for (Eigen::Index l = 0; l < horizon; ++l) {
        out.predicted.emplace_back(mean, cov);

        // update
        Eigen::VectorXd innovation = measurements[l] - (model.h * mean + model.d);
        Eigen::MatrixXd s = model.h * cov * model.h.transpose() + model.r;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (s + s.transpose()));
        if (ldlt.info() != Eigen::Success)
            throw numerical_error("kalman_filter: singular innovation covariance");
        Eigen::MatrixXd gain = cov * model.h.transpose() * ldlt.solve(
            Eigen::MatrixXd::Identity(s.rows(), s.cols()));
        mean += gain * innovation;
        Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
        // Joseph form keeps the covariance symmetric PSD.
        Eigen::MatrixXd ikh = eye - gain * model.h;
        cov = ikh * cov * ikh.transpose() + gain * model.r * gain.transpose();
        out.filtered.emplace_back(mean, cov);

        // predict
        if (l + 1 < horizon) {
            mean = model.f * mean + model.b;
            cov = model.f * cov * model.f.transpose() + model.q;
        }
    }
    return out;
}

std::vector<GaussianMoment> rts_smoother(const KalmanResult& filter,
                                         const LinearGaussianModel& model) {
    const Eigen::Index horizon = static_cast<Eigen::Index>(filter.filtered.size());
    std::vector<GaussianMoment> smoothed(horizon);
    smoothed[horizon - 1] = filter.filtered[horizon - 1];

    for (Eigen::Index l = horizon - 2; l >= 0; --l) {
        const GaussianMoment& f = filter.filtered[l];
        // predicted moments for l+1 from the filtered ones at l
        Eigen::VectorXd pred_mean = model.f * f.mean() + model.b;
        Eigen::MatrixXd pred_cov = model.f * f.cov() * model.f.transpose() + model.q;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (pred_cov + pred_cov.transpose()));
        if (ldlt.info() != Eigen::Success)
            throw numerical_error("rts_smoother: singular predicted covariance");
        Eigen::MatrixXd gain = f.cov() * model.f.transpose() *
                               ldlt.solve(Eigen::MatrixXd::Identity(pred_cov.rows(),
                                                                    pred_cov.cols()));
        Eigen::VectorXd mean = f.mean() + gain * (smoothed[l + 1].mean() - pred_mean);
        Eigen::MatrixXd cov =
            f.cov() + gain * (smoothed[l + 1].cov() - pred_cov) * gain.transpose();
        smoothed[l] = GaussianMoment(std::move(mean), cov);
    }
    return smoothed;
}

double GridPosterior::mean(const Eigen::VectorXd& probs) const { return probs.dot(points); }

double GridPosterior::var(const Eigen::VectorXd& probs) const {
    double m = mean(probs);
    return probs.dot((points.array() - m).square().matrix());
}

GridPosterior grid_smoother(const ScalarModel& model, const std::vector<double>& measurements,
                            const GridSpec& grid) {
    const int n = grid.n;
    const Eigen::Index horizon = static_cast<Eigen::Index>(measurements.size());
    if (horizon == 0) throw std::invalid_argument("grid_smoother: no measurements");

    Grid1d g = uniform_grid(grid.lo, grid.hi, n);

    auto normalize = [&](Eigen::VectorXd& v) {
        double s = v.sum();
        if (!(s > 0.0) || !std::isfinite(s))
            throw numerical_error("grid_smoother: support escaped the grid");
        v /= s;
    };

    // transition matrix t(i, j) = f(x_i | x_j) * trapezoid weight of x_j,
    // assumed time invariant across the tested models
    Eigen::MatrixXd trans(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            trans(i, j) = std::exp(model.log_transition(0, g.points(i), g.points(j))) * g.weights(j);

    std::vector<Eigen::VectorXd> lik(horizon);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        lik[l].resize(n);
        for (int i = 0; i < n; ++i)
            lik[l](i) = std::exp(model.log_observation(static_cast<int>(l), measurements[l],
                                                       g.points(i)));
    }

    GridPosterior out;
    out.points = g.points;
    out.filtered.resize(horizon);
    out.smoothed.resize(horizon);

    // forward: prediction/update with cellwise probabilities
    std::vector<Eigen::VectorXd> fp(horizon);
    fp[0].resize(n);
    for (int i = 0; i < n; ++i) fp[0](i) = std::exp(model.log_prior(g.points(i))) * g.weights(i);
    normalize(fp[0]);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        Eigen::VectorXd fe = fp[l].cwiseProduct(lik[l]);
        normalize(fe);
        out.filtered[l] = fe;
        if (l + 1 < horizon) {
            // fp(x') = sum_x f(x'|x) fe(x); cell weights already folded into fe
            fp[l + 1] = (trans * fe.cwiseQuotient(g.weights)).cwiseProduct(g.weights);
            normalize(fp[l + 1]);
        }
    }

    // backward information pass: be(x) = f(y_{l:T} | x) on the grid
    Eigen::VectorXd be = lik[horizon - 1];
    out.smoothed[horizon - 1] = out.filtered[horizon - 1];
    for (Eigen::Index l = horizon - 2; l >= 0; --l) {
        // integral over x_{l+1}: bp(x_j) = sum_i f(x_i | x_j) w_i be(x_i)
        Eigen::VectorXd bp =
            (trans.transpose() * be.cwiseProduct(g.weights)).cwiseQuotient(g.weights);
        be = bp.cwiseProduct(lik[l]);
        double scale = be.maxCoeff();
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw numerical_error("grid_smoother: backward message vanished");
        be /= scale;
        Eigen::VectorXd sm = fp[l].cwiseProduct(be);
        normalize(sm);
        out.smoothed[l] = sm;
    }
    return out;
}

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be positive");
    // Golub-Welsch: Jacobi matrix of the Hermite recurrence.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        double b = std::sqrt(i / 2.0);
        jacobi(i, i - 1) = b;
        jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        double v0 = es.eigenvectors()(0, i);
        gh.weights(i) = sqrt_pi * v0 * v0;
    }
    return gh;
}

double integrate_gaussian(const GaussianMoment& g, int order,
                          const std::function<double(const Eigen::VectorXd&)>& f) {
    const Eigen::Index d = g.dim();
    if (d > 2) throw std::invalid_argument("integrate_gaussian: dimension > 2 not supported");
    GaussHermite gh = gauss_hermite(order);
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov());
    if (llt.info() != Eigen::Success)
        throw numerical_error("integrate_gaussian: covariance not SPD");
    Eigen::MatrixXd scale = std::sqrt(2.0) * llt.matrixL().toDenseMatrix();

    const double norm = std::pow(M_PI, -0.5 * static_cast<double>(d));
    double total = 0.0;
    if (d == 1) {
        for (int i = 0; i < order; ++i) {
            Eigen::VectorXd x = g.mean() + scale * Eigen::VectorXd::Constant(1, gh.nodes(i));
            total += gh.weights(i) * f(x);
        }
    } else {
        Eigen::VectorXd t(2);
        for (int i = 0; i < order; ++i) {
            for (int j = 0; j < order; ++j) {
                t << gh.nodes(i), gh.nodes(j);
                total += gh.weights(i) * gh.weights(j) * f(g.mean() + scale * t);
            }
        }
    }
    return norm * total;
}

Grid1d uniform_grid(double lo, double hi, int n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("uniform_grid: bad spec");
    Grid1d g;
    g.points = Eigen::VectorXd::LinSpaced(n, lo, hi);
    double h = (hi - lo) / static_cast<double>(n - 1);
    g.weights = Eigen::VectorXd::Constant(n, h);
    g.weights(0) = 0.5 * h;
    g.weights(n - 1) = 0.5 * h;
    return g;
}

} // namespace clgsmooth::oracles
