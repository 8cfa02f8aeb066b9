#include "clgsmooth/clg_model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace clgsmooth {

namespace {

void check_psd(const Eigen::MatrixXd& m, Eigen::Index d, const char* what) {
    if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
    if (!m.isApprox(m.transpose(), 1e-9))
        throw std::invalid_argument(std::string(what) + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double scale = std::max(1.0, m.trace() / static_cast<double>(d));
    if (es.eigenvalues().minCoeff() < -1e-9 * scale)
        throw std::invalid_argument(std::string(what) + ": not positive semidefinite");
}

void check_params(const ModelParams& p, Eigen::Index dl, Eigen::Index dn, Eigen::Index dy) {
    bool ok = p.a_lin.rows() == dl && p.a_lin.cols() == dl && p.f_lin.size() == dl &&
              p.a_nonlin.rows() == dn && p.a_nonlin.cols() == dl && p.f_nonlin.size() == dn &&
              p.b_obs.rows() == dy && p.b_obs.cols() == dl && p.h_obs.size() == dy;
    if (!ok) throw std::invalid_argument("ModelParams: shape mismatch");
    ok = p.a_lin.allFinite() && p.f_lin.allFinite() && p.a_nonlin.allFinite() &&
         p.f_nonlin.allFinite() && p.b_obs.allFinite() && p.h_obs.allFinite();
    if (!ok) throw numerical_error("ModelParams: non-finite entries");
}

} // namespace

ClgModel::ClgModel(Eigen::Index d_lin, Eigen::Index d_nonlin, Eigen::Index d_obs,
                   ParamEval param_eval, const Eigen::MatrixXd& cov_w_lin,
                   const Eigen::MatrixXd& cov_w_nonlin, const Eigen::MatrixXd& cov_e,
                   GaussianMoment prior_lin, GaussianMoment prior_nonlin)
    : d_lin_(d_lin),
      d_nonlin_(d_nonlin),
      d_obs_(d_obs),
      param_eval_(std::move(param_eval)),
      cov_w_lin_(cov_w_lin),
      cov_w_nonlin_(cov_w_nonlin),
      cov_e_(cov_e),
      prior_lin_(std::move(prior_lin)),
      prior_nonlin_(std::move(prior_nonlin)) {
    if (d_lin_ < 1 || d_nonlin_ < 1 || d_obs_ < 1)
        throw std::invalid_argument("ClgModel: dimensions must be positive");
    check_psd(cov_w_lin_, d_lin_, "ClgModel: cov_w_lin");
    check_psd(cov_w_nonlin_, d_nonlin_, "ClgModel: cov_w_nonlin");
    check_psd(cov_e_, d_obs_, "ClgModel: cov_e");
    if (prior_lin_.dim() != d_lin_ || prior_nonlin_.dim() != d_nonlin_)
        throw std::invalid_argument("ClgModel: prior dimension mismatch");
    if (!param_eval_) throw std::invalid_argument("ClgModel: missing param_eval");
}

ModelParams ClgModel::params(int l, const Eigen::VectorXd& x_nonlin) const {
    if (x_nonlin.size() != d_nonlin_)
        throw std::invalid_argument("ClgModel::params: x_nonlin shape mismatch");
    ModelParams p = param_eval_(l, x_nonlin);
    check_params(p, d_lin_, d_nonlin_, d_obs_);
    return p;
}

ClgModel ClgModel::with_noise(const Eigen::MatrixXd& cov_w_lin, const Eigen::MatrixXd& cov_w_nonlin,
                              const Eigen::MatrixXd& cov_e) const {
    return ClgModel(d_lin_, d_nonlin_, d_obs_, param_eval_, cov_w_lin, cov_w_nonlin, cov_e,
                    prior_lin_, prior_nonlin_);
}

ClgModel ClgModel::with_priors(GaussianMoment prior_lin, GaussianMoment prior_nonlin) const {
    return ClgModel(d_lin_, d_nonlin_, d_obs_, param_eval_, cov_w_lin_, cov_w_nonlin_, cov_e_,
                    std::move(prior_lin), std::move(prior_nonlin));
}

std::vector<Eigen::VectorXd> Trajectory::measurement_rows() const {
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(measurements.rows());
    for (Eigen::Index l = 0; l < measurements.rows(); ++l)
        rows.push_back(measurements.row(l).transpose());
    return rows;
}

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

ModelParams benchmark_params(const Eigen::VectorXd& x_nonlin) {
    const double x = x_nonlin(0);
    ModelParams p;
    p.a_lin.resize(3, 3);
    p.a_lin << 0.8, 0.2, 0.0,
               0.0, 0.7, -0.2,
               0.0, 0.2, 0.7;
    p.f_lin.resize(3);
    p.f_lin << std::cos(x), -std::sin(x), 0.5 * std::sin(2.0 * x);
    p.a_nonlin.resize(1, 3);
    p.a_nonlin << 0.9, 0.0, 0.0;
    p.f_nonlin.resize(1);
    p.f_nonlin << std::atan(x);
    p.b_obs.resize(2, 3);
    p.b_obs << 0.0, 0.0, 0.0,
               1.0, -1.0, 1.0;
    p.h_obs.resize(2);
    p.h_obs << 0.1 * x * x * sgn(x), 0.0;
    return p;
}

ModelParams linearized_benchmark_params(const Eigen::VectorXd& x_nonlin) {
    const double x = x_nonlin(0);
    ModelParams p = benchmark_params(x_nonlin);
    p.f_lin << 0.2 * x, -0.3 * x, 0.1 * x;
    p.f_nonlin << 0.5 * x;
    p.h_obs << 0.3 * x, 0.0;
    return p;
}

ClgModel make_benchmark(double sigma_w_lin, double sigma_w_nonlin, double sigma_e,
                        ClgModel::ParamEval eval) {
    if (!(sigma_w_lin > 0.0) || !(sigma_w_nonlin > 0.0) || !(sigma_e > 0.0))
        throw std::invalid_argument("benchmark_model: sigmas must be positive");
    Eigen::MatrixXd cw_lin = sigma_w_lin * sigma_w_lin * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd cw_nonlin = sigma_w_nonlin * sigma_w_nonlin * Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd ce = sigma_e * sigma_e * Eigen::MatrixXd::Identity(2, 2);
    GaussianMoment prior_lin(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    GaussianMoment prior_nonlin(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    return ClgModel(3, 1, 2, std::move(eval), cw_lin, cw_nonlin, ce, std::move(prior_lin),
                    std::move(prior_nonlin));
}

} // namespace

ClgModel benchmark_model(double sigma_w_lin, double sigma_w_nonlin, double sigma_e) {
    return make_benchmark(sigma_w_lin, sigma_w_nonlin, sigma_e,
                          [](int, const Eigen::VectorXd& x) { return benchmark_params(x); });
}

ClgModel linearized_benchmark_model(double sigma_w_lin, double sigma_w_nonlin, double sigma_e) {
    return make_benchmark(sigma_w_lin, sigma_w_nonlin, sigma_e,
                          [](int, const Eigen::VectorXd& x) { return linearized_benchmark_params(x); });
}

Trajectory simulate(const ClgModel& model, Eigen::Index horizon, std::uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");

    Trajectory traj;
    traj.seed = seed;
    traj.states_lin.resize(horizon, model.d_lin());
    traj.states_nonlin.resize(horizon, model.d_nonlin());
    traj.measurements.resize(horizon, model.d_obs());

    Rng rng(seed_mix({seed, 0x51u}));
    Eigen::VectorXd x_lin = sample_gaussian(rng, model.prior_lin());
    Eigen::VectorXd x_nonlin = sample_gaussian(rng, model.prior_nonlin());

    for (Eigen::Index l = 0; l < horizon; ++l) {
        ModelParams p = model.params(static_cast<int>(l), x_nonlin);
        Eigen::VectorXd y = sample_gaussian_raw(rng, p.b_obs * x_lin + p.h_obs, model.cov_e());

        traj.states_lin.row(l) = x_lin.transpose();
        traj.states_nonlin.row(l) = x_nonlin.transpose();
        traj.measurements.row(l) = y.transpose();

        if (l + 1 < horizon) {
            Eigen::VectorXd next_lin =
                sample_gaussian_raw(rng, p.a_lin * x_lin + p.f_lin, model.cov_w_lin());
            Eigen::VectorXd next_nonlin =
                sample_gaussian_raw(rng, p.f_nonlin + p.a_nonlin * x_lin, model.cov_w_nonlin());
            if (!next_lin.allFinite() || !next_nonlin.allFinite())
                throw numerical_error("simulate: state overflow at instant " + std::to_string(l));
            x_lin = std::move(next_lin);
            x_nonlin = std::move(next_nonlin);
        }
    }
    return traj;
}

Eigen::VectorXd pseudo_meas_lin(const Eigen::VectorXd& x_nonlin_next, const ModelParams& params) {
    if (x_nonlin_next.size() != params.f_nonlin.size())
        throw std::invalid_argument("pseudo_meas_lin: shape mismatch");
    return x_nonlin_next - params.f_nonlin;
}

Eigen::VectorXd pseudo_meas_nonlin(const Eigen::VectorXd& x_lin_next, const Eigen::VectorXd& x_lin,
                                   const ModelParams& params) {
    if (x_lin_next.size() != params.a_lin.rows() || x_lin.size() != params.a_lin.cols())
        throw std::invalid_argument("pseudo_meas_nonlin: shape mismatch");
    return x_lin_next - params.a_lin * x_lin;
}

} // namespace clgsmooth
