#ifndef CLGSMOOTH_MPF_HPP
#define CLGSMOOTH_MPF_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "clgsmooth/clg_model.hpp"
#include "clgsmooth/gaussian.hpp"

namespace clgsmooth {

// Marginalized particle filter: particles for the nonlinear state component,
// per-particle conditional Gaussians for the linear one. The full per-instant
// history feeds the backward smoothing passes.

/// One forward hypothesis at instant l: the predicted particle x_{l/(l-1),j},
/// its predicted linear Gaussian (eta_fp, C_fp), the measurement-update weight
/// w_{l/l,j} and the post-update linear Gaussian (eta_fe, C_fe).
struct ParticleHypothesis {
    Eigen::VectorXd x_nonlin;
    GaussianMoment lin_pred;
    double weight_mu = 0.0;
    GaussianMoment lin_filt;
};

/// Per-instant particle lists plus the ancestor indices chosen by resampling
/// after each measurement update (ancestors[l][i] is the index of the particle
/// that survived into slot i for the transition l -> l+1).
struct ForwardHistory {
    std::vector<std::vector<ParticleHypothesis>> instants;
    std::vector<std::vector<int>> ancestors;

    Eigen::Index horizon() const { return static_cast<Eigen::Index>(instants.size()); }
};

/// Samples the instant-1 particle set from the model priors: uniform weights,
/// lin_pred = linear prior.
std::vector<ParticleHypothesis> init_forward(const ClgModel& model, int n_particles,
                                             std::uint64_t seed);

/// Measurement update at instant l: reweights every hypothesis by the marginal
/// likelihood N(y; B eta_fp + h, B C_fp B' + C_e) and conditions its linear
/// Gaussian on y. Normalizes weights; throws degenerate_weights_error if they
/// all collapse.
void measurement_update(std::vector<ParticleHypothesis>& particles, const Eigen::VectorXd& y,
                        const ClgModel& model, int l);

/// Systematic resampling. Returns the surviving particles with uniform weights
/// and records the chosen ancestor indices.
std::vector<ParticleHypothesis> resample(const std::vector<ParticleHypothesis>& particles,
                                         std::uint64_t seed, std::vector<int>* ancestors = nullptr);

/// Time update l -> l+1 for every hypothesis: draws the next nonlinear
/// particle from the marginal transition, conditions the linear Gaussian on
/// the resulting pseudo-measurement, then propagates it through the linear
/// dynamics into lin_pred at l+1.
std::vector<ParticleHypothesis> time_update(const std::vector<ParticleHypothesis>& particles,
                                            const ClgModel& model, int l, std::uint64_t seed);

/// Full forward pass over the measurement sequence.
ForwardHistory run_forward(const ClgModel& model, const std::vector<Eigen::VectorXd>& measurements,
                           int n_particles, std::uint64_t seed);

/// Filtered point estimates at one instant: weighted particle mean for the
/// nonlinear component, weighted mean of the updated linear means.
struct FilteredEstimate {
    Eigen::VectorXd x_nonlin;
    Eigen::VectorXd x_lin;
};
FilteredEstimate filtered_estimate(const std::vector<ParticleHypothesis>& particles);

} // namespace clgsmooth

#endif
