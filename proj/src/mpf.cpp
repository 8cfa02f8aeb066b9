#include "clgsmooth/mpf.hpp"

#include <cmath>

#include "clgsmooth/message_rules.hpp"

namespace clgsmooth {

namespace {

// Substream tags; every draw site gets its own key so results do not depend
// on evaluation order.
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagTimeUpdate = 0x12;
constexpr std::uint64_t kTagResample = 0x13;

void normalize_log_weights(std::vector<ParticleHypothesis>& particles, int instant) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (const auto& p : particles) max_log = std::max(max_log, p.weight_mu);
    if (!std::isfinite(max_log))
        throw degenerate_weights_error(instant, "measurement update");
    double sum = 0.0;
    for (auto& p : particles) {
        p.weight_mu = std::exp(p.weight_mu - max_log);
        sum += p.weight_mu;
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw degenerate_weights_error(instant, "measurement update");
    for (auto& p : particles) p.weight_mu /= sum;
}

} // namespace

std::vector<ParticleHypothesis> init_forward(const ClgModel& model, int n_particles,
                                             std::uint64_t seed) {
    if (n_particles < 1) throw std::invalid_argument("init_forward: need at least one particle");
    std::vector<ParticleHypothesis> particles(n_particles);
    const double w = 1.0 / static_cast<double>(n_particles);
    for (int j = 0; j < n_particles; ++j) {
        Rng rng(seed_mix({seed, kTagInit, static_cast<std::uint64_t>(j)}));
        particles[j].x_nonlin = sample_gaussian(rng, model.prior_nonlin());
        particles[j].lin_pred = model.prior_lin();
        particles[j].weight_mu = w;
    }
    return particles;
}

void measurement_update(std::vector<ParticleHypothesis>& particles, const Eigen::VectorXd& y,
                        const ClgModel& model, int l) {
    if (y.size() != model.d_obs())
        throw std::invalid_argument("measurement_update: measurement shape mismatch");
    for (auto& p : particles) {
        ModelParams mp = model.params(l, p.x_nonlin);
        AffineFactor obs{mp.b_obs, mp.h_obs, model.cov_e()};
        // marginal likelihood of y under this hypothesis
        GaussianMoment predictive = fn_affine_marginal(p.lin_pred, obs);
        p.weight_mu = std::log(p.weight_mu) + log_density(predictive, y);
        p.lin_filt = to_moment(eq_gauss_likelihood(to_canonical(p.lin_pred), obs, y));
    }
    normalize_log_weights(particles, l);
}

std::vector<ParticleHypothesis> resample(const std::vector<ParticleHypothesis>& particles,
                                         std::uint64_t seed, std::vector<int>* ancestors) {
    const int n = static_cast<int>(particles.size());
    Rng rng(seed_mix({seed, kTagResample}));
    const double step = 1.0 / static_cast<double>(n);
    double u = rng.uniform() * step;

    std::vector<ParticleHypothesis> out;
    out.reserve(n);
    if (ancestors) ancestors->clear();
    int i = 0;
    double c = particles[0].weight_mu;
    for (int p = 0; p < n; ++p) {
        const double target = u + p * step;
        while (target > c && i + 1 < n) c += particles[++i].weight_mu;
        out.push_back(particles[i]);
        out.back().weight_mu = step;
        if (ancestors) ancestors->push_back(i);
    }
    return out;
}

std::vector<ParticleHypothesis> time_update(const std::vector<ParticleHypothesis>& particles,
                                            const ClgModel& model, int l, std::uint64_t seed) {
    std::vector<ParticleHypothesis> out(particles.size());
    const double w = 1.0 / static_cast<double>(particles.size());
    for (std::size_t j = 0; j < particles.size(); ++j) {
        const ParticleHypothesis& p = particles[j];
        ModelParams mp = model.params(l, p.x_nonlin);

        // nonlinear draw from the marginal transition
        Rng rng(seed_mix({seed, kTagTimeUpdate, static_cast<std::uint64_t>(l),
                          static_cast<std::uint64_t>(j)}));
        Eigen::VectorXd mean = mp.f_nonlin + mp.a_nonlin * p.lin_filt.mean();
        Eigen::MatrixXd cov =
            mp.a_nonlin * p.lin_filt.cov() * mp.a_nonlin.transpose() + model.cov_w_nonlin();
        Eigen::VectorXd x_next = sample_gaussian_raw(rng, mean, cov);

        // condition the linear Gaussian on the pseudo-measurement z = x' - f^(N)
        GaussianMoment conditioned = p.lin_filt;
        if (!mp.a_nonlin.isZero(0.0)) {
            AffineFactor pseudo{mp.a_nonlin, Eigen::VectorXd::Zero(model.d_nonlin()),
                                model.cov_w_nonlin()};
            Eigen::VectorXd z = pseudo_meas_lin(x_next, mp);
            conditioned = to_moment(eq_gauss_likelihood(to_canonical(p.lin_filt), pseudo, z));
        }

        out[j].x_nonlin = std::move(x_next);
        out[j].lin_pred =
            fn_affine_marginal(conditioned, AffineFactor{mp.a_lin, mp.f_lin, model.cov_w_lin()});
        out[j].weight_mu = w;
    }
    return out;
}

ForwardHistory run_forward(const ClgModel& model, const std::vector<Eigen::VectorXd>& measurements,
                           int n_particles, std::uint64_t seed) {
    if (measurements.empty()) throw std::invalid_argument("run_forward: no measurements");
    const Eigen::Index horizon = static_cast<Eigen::Index>(measurements.size());

    ForwardHistory history;
    history.instants.reserve(horizon);

    std::vector<ParticleHypothesis> particles = init_forward(model, n_particles, seed);
    for (Eigen::Index l = 0; l < horizon; ++l) {
        measurement_update(particles, measurements[l], model, static_cast<int>(l));
        history.instants.push_back(particles);
        if (l + 1 < horizon) {
            std::vector<int> ancestors;
            std::vector<ParticleHypothesis> survivors =
                resample(particles, seed_mix({seed, static_cast<std::uint64_t>(l)}), &ancestors);
            history.ancestors.push_back(std::move(ancestors));
            particles = time_update(survivors, model, static_cast<int>(l), seed);
        }
    }
    return history;
}

FilteredEstimate filtered_estimate(const std::vector<ParticleHypothesis>& particles) {
    FilteredEstimate est;
    est.x_nonlin = Eigen::VectorXd::Zero(particles.front().x_nonlin.size());
    est.x_lin = Eigen::VectorXd::Zero(particles.front().lin_filt.dim());
    for (const auto& p : particles) {
        est.x_nonlin += p.weight_mu * p.x_nonlin;
        est.x_lin += p.weight_mu * p.lin_filt.mean();
    }
    return est;
}

} // namespace clgsmooth
