#include "clgsmooth/rbss.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace clgsmooth {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
    Eigen::MatrixXd floored = spd_floor(m);
    Eigen::LLT<Eigen::MatrixXd> llt(floored);
    if (llt.info() != Eigen::Success)
        throw numerical_error(std::string(what) + ": matrix singular after floor");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

// log(sum(exp(v))) with max subtraction; -inf when everything is -inf.
double log_sum_exp(const std::vector<double>& v) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (double x : v)
        if (x > max_log) max_log = x;
    if (!std::isfinite(max_log)) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - max_log);
    return max_log + std::log(sum);
}

} // namespace

double SmoothedMarginal::effective_sample_size() const {
    double s = 0.0;
    for (const auto& p : particles) s += p.weight * p.weight;
    return s > 0.0 ? 1.0 / s : 0.0;
}

BackwardState init_backward(const ForwardHistory& history) {
    if (history.instants.empty()) throw std::invalid_argument("init_backward: empty history");
    const auto& last = history.instants.back();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(last.front().x_nonlin.size());
    std::vector<GaussianMixture::Component> comps;
    comps.reserve(last.size());
    for (const auto& p : last) {
        x += p.weight_mu * p.x_nonlin;
        comps.push_back({p.weight_mu, p.lin_filt});
    }
    return BackwardState{std::move(x), gm_condense(GaussianMixture(std::move(comps)))};
}

namespace {

LinearTuContext make_context(const Eigen::MatrixXd& prec_be, const Eigen::VectorXd& w_be,
                             const Eigen::MatrixXd& cov_w_lin) {
    LinearTuContext ctx;
    ctx.prec_w_lin = spd_inverse(cov_w_lin, "step1: cov_w_lin");
    ctx.cbar = spd_inverse(ctx.prec_w_lin + prec_be, "step1: W_w + W_be");
    ctx.p = Eigen::MatrixXd::Identity(cov_w_lin.rows(), cov_w_lin.cols()) -
            ctx.cbar * ctx.prec_w_lin;
    ctx.cbar_w_be = ctx.cbar * w_be;
    return ctx;
}

} // namespace

LinearTuContext make_linear_tu_context(const GaussianMoment& lin_be_next,
                                       const Eigen::MatrixXd& cov_w_lin) {
    Eigen::MatrixXd prec_be = spd_inverse(lin_be_next.cov(), "step1: C_be");
    return make_context(prec_be, prec_be * lin_be_next.mean(), cov_w_lin);
}

LinearTuContext make_linear_tu_context(const GaussianCanonical& lin_be_next,
                                       const Eigen::MatrixXd& cov_w_lin) {
    return make_context(lin_be_next.prec(), lin_be_next.tmean(), cov_w_lin);
}

GaussianCanonical step1_tu_linear(const ModelParams& params, const LinearTuContext& ctx) {
    const Eigen::MatrixXd& a = params.a_lin;
    Eigen::MatrixXd prec = a.transpose() * (ctx.prec_w_lin * (ctx.p * a));
    Eigen::VectorXd tmean =
        a.transpose() * (ctx.prec_w_lin * (ctx.cbar_w_be - ctx.p * params.f_lin));
    return GaussianCanonical(std::move(tmean), prec);
}

GaussianCanonical step1_tu_linear(const ModelParams& params, const BackwardState& bwd,
                                  const Eigen::MatrixXd& cov_w_lin) {
    return step1_tu_linear(params, make_linear_tu_context(bwd.lin, cov_w_lin));
}

Step2Result step2_mu_linear(const GaussianCanonical& m1, const ModelParams& params,
                            const Eigen::VectorXd& x_be_nonlin_next, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& cov_w_nonlin, const Eigen::MatrixXd& cov_e) {
    Step2Result r;

    // pseudo-measurement z = x_be,l+1 - f^(N)
    Eigen::VectorXd z = pseudo_meas_lin(x_be_nonlin_next, params);
    AffineFactor pseudo{params.a_nonlin, Eigen::VectorXd::Zero(z.size()), cov_w_nonlin};
    r.m3 = params.a_nonlin.isZero(0.0) ? m1 : eq_gauss_likelihood(m1, pseudo, z);

    AffineFactor obs{params.b_obs, params.h_obs, cov_e};
    GaussianCanonical zero(Eigen::VectorXd::Zero(m1.dim()),
                           Eigen::MatrixXd::Zero(m1.dim(), m1.dim()));
    r.m4 = eq_gauss_likelihood(zero, obs, y);
    r.m_be = eq_gauss_product(r.m3, r.m4);
    return r;
}

GaussianMoment step3_merge_linear(const GaussianMoment& lin_pred, const GaussianCanonical& m_be,
                                  int l, Eigen::Index horizon, bool merge_forward) {
    if (l == static_cast<int>(horizon) - 1) return lin_pred;
    if (l == 0 || !merge_forward) return to_moment(m_be);
    return to_moment(eq_gauss_product(to_canonical(lin_pred), m_be));
}

double step4_tu_nonlinear(const ModelParams& params, const GaussianMoment& m_sm,
                          const Eigen::VectorXd& x_be_nonlin_next,
                          const Eigen::MatrixXd& cov_w_nonlin, WeightMode mode) {
    Eigen::VectorXd eta = params.a_nonlin * m_sm.mean() + params.f_nonlin;
    Eigen::MatrixXd cov =
        params.a_nonlin * m_sm.cov() * params.a_nonlin.transpose() + cov_w_nonlin;
    LogDensityParts parts = log_density_parts(GaussianMoment(std::move(eta), cov),
                                              x_be_nonlin_next);
    return mode == WeightMode::exact ? parts.log_norm + parts.quad : parts.quad;
}

Step5Result step5_mu_nonlinear(const ModelParams& params, const GaussianMoment& m_sm,
                               const BackwardState& bwd, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& cov_w_lin, const Eigen::MatrixXd& cov_e,
                               WeightMode mode) {
    Step5Result r{};

    // m_z^(N): difference of backward and propagated smoothed moments; the
    // covariance may be indefinite and is floored.
    Eigen::VectorXd eta_z = bwd.lin.mean() - params.a_lin * m_sm.mean();
    Eigen::MatrixXd cov_z_raw =
        bwd.lin.cov() - params.a_lin * m_sm.cov() * params.a_lin.transpose();
    Eigen::MatrixXd cov_z = spd_floor(cov_z_raw, &r.cz_floored);

    LogOverlap overlap = log_gauss_overlap(GaussianMoment(std::move(eta_z), cov_z),
                                           GaussianMoment(params.f_lin, cov_w_lin));
    r.log_w2 =
        mode == WeightMode::exact ? overlap.log_scale + overlap.exponent : overlap.exponent;

    Eigen::VectorXd eta4 = params.b_obs * m_sm.mean() + params.h_obs;
    Eigen::MatrixXd cov4 = params.b_obs * m_sm.cov() * params.b_obs.transpose() + cov_e;
    LogDensityParts parts = log_density_parts(GaussianMoment(std::move(eta4), cov4), y);
    r.log_w4 = mode == WeightMode::exact ? parts.log_norm + parts.quad : parts.quad;
    return r;
}

std::vector<double> step6_merge_nonlinear(const std::vector<double>& log_w1,
                                          const std::vector<double>& log_w2,
                                          const std::vector<double>& log_w4, WeightMode mode,
                                          int instant) {
    const std::size_t n = log_w1.size();
    if (log_w2.size() != n || log_w4.size() != n)
        throw std::invalid_argument("step6: weight set sizes differ");

    std::vector<double> log_total(n);
    if (mode == WeightMode::exact) {
        for (std::size_t j = 0; j < n; ++j) log_total[j] = log_w1[j] + log_w2[j] + log_w4[j];
    } else {
        const double n1 = log_sum_exp(log_w1);
        const double n2 = log_sum_exp(log_w2);
        const double n4 = log_sum_exp(log_w4);
        if (!std::isfinite(n1) || !std::isfinite(n2) || !std::isfinite(n4))
            throw degenerate_weights_error(instant, "backward weight factor set");
        for (std::size_t j = 0; j < n; ++j)
            log_total[j] = (log_w1[j] - n1) + (log_w2[j] - n2) + (log_w4[j] - n4);
    }

    double max_log = -std::numeric_limits<double>::infinity();
    for (double x : log_total)
        if (x > max_log) max_log = x;
    if (!std::isfinite(max_log))
        throw degenerate_weights_error(instant, "backward weight combination");

    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = std::exp(log_total[j] - max_log);
        sum += w[j];
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw degenerate_weights_error(instant, "backward weight combination");
    for (double& x : w) x /= sum;
    return w;
}

Step7Result step7_outputs(const ForwardSlice& slice, const std::vector<double>& w_sm,
                          const std::vector<GaussianMoment>& lin_sm, int l) {
    const Eigen::Index n = slice.size();
    Step7Result out;
    out.marginal.instant = l;
    out.marginal.particles.reserve(n);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(slice.x_nonlin(0).size());
    std::vector<GaussianMixture::Component> comps;
    comps.reserve(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.marginal.particles.push_back({slice.x_nonlin(j), w_sm[j], lin_sm[j]});
        x += w_sm[j] * slice.x_nonlin(j);
        comps.push_back({w_sm[j], lin_sm[j]});
    }
    out.marginal.x_nonlin_hat = x;
    out.marginal.lin_hat = gm_condense(GaussianMixture(std::move(comps)));
    out.next = BackwardState{out.marginal.x_nonlin_hat, out.marginal.lin_hat};
    return out;
}

Step7Result backward_instant(const ForwardSlice& slice, const BackwardState& bwd,
                             const Eigen::VectorXd& y, const ClgModel& model, int l,
                             Eigen::Index horizon, const BackwardOptions& options,
                             SmootherDiagnostics* diag) {
    const Eigen::Index n = slice.size();
    LinearTuContext ctx = make_linear_tu_context(bwd.lin, model.cov_w_lin());

    std::vector<GaussianMoment> lin_sm(n);
    std::vector<double> lw1(n), lw2(n), lw4(n);

    // Steps 1-5 are independent across particles (pure map).
    for (Eigen::Index j = 0; j < n; ++j) {
        ModelParams params = model.params(l, slice.x_nonlin(j));

        GaussianCanonical m1 = step1_tu_linear(params, ctx);
        Step2Result s2 = step2_mu_linear(m1, params, bwd.x_nonlin, y, model.cov_w_nonlin(),
                                         model.cov_e());
        lin_sm[j] =
            step3_merge_linear(slice.lin_pred(j), s2.m_be, l, horizon, options.merge_forward);

        lw1[j] = step4_tu_nonlinear(params, lin_sm[j], bwd.x_nonlin, model.cov_w_nonlin(),
                                    options.weight_mode);
        Step5Result s5 = step5_mu_nonlinear(params, lin_sm[j], bwd, y, model.cov_w_lin(),
                                            model.cov_e(), options.weight_mode);
        lw2[j] = s5.log_w2;
        lw4[j] = s5.log_w4;
        if (diag && s5.cz_floored) ++diag->cz_floor_events;
    }

    std::vector<double> w_sm = step6_merge_nonlinear(lw1, lw2, lw4, options.weight_mode, l);
    return step7_outputs(slice, w_sm, lin_sm, l);
}

std::vector<SmoothedMarginal> run_backward(const ForwardHistory& history, const ClgModel& model,
                                           const std::vector<Eigen::VectorXd>& measurements,
                                           const BackwardOptions& options,
                                           SmootherDiagnostics* diag) {
    const Eigen::Index horizon = history.horizon();
    if (static_cast<Eigen::Index>(measurements.size()) != horizon)
        throw std::invalid_argument("run_backward: history/measurements length mismatch");

    std::vector<SmoothedMarginal> out(horizon);

    // Terminal marginal: the filtered result.
    BackwardState bwd = init_backward(history);
    const auto& last = history.instants.back();
    SmoothedMarginal& terminal = out[horizon - 1];
    terminal.instant = static_cast<int>(horizon) - 1;
    for (const auto& p : last) terminal.particles.push_back({p.x_nonlin, p.weight_mu, p.lin_filt});
    terminal.x_nonlin_hat = bwd.x_nonlin;
    terminal.lin_hat = bwd.lin;

    for (Eigen::Index l = horizon - 2; l >= 0; --l) {
        ForwardSlice slice{&history.instants[l]};
        Step7Result r = backward_instant(slice, bwd, measurements[l], model, static_cast<int>(l),
                                         horizon, options, diag);
        out[l] = std::move(r.marginal);
        bwd = std::move(r.next);
    }
    return out;
}

std::vector<GaussianMoment> conditional_linear_smooth(
    const ClgModel& model, const std::vector<Eigen::VectorXd>& measurements,
    const std::vector<Eigen::VectorXd>& nonlin_traj) {
    const Eigen::Index horizon = static_cast<Eigen::Index>(measurements.size());
    if (static_cast<Eigen::Index>(nonlin_traj.size()) != horizon)
        throw std::invalid_argument("conditional_linear_smooth: trajectory length mismatch");

    // Forward pass along the fixed nonlinear trajectory.
    std::vector<GaussianMoment> fp(horizon);
    fp[0] = model.prior_lin();
    for (Eigen::Index l = 0; l + 1 < horizon; ++l) {
        ModelParams p = model.params(static_cast<int>(l), nonlin_traj[l]);
        AffineFactor obs{p.b_obs, p.h_obs, model.cov_e()};
        GaussianCanonical fe = eq_gauss_likelihood(to_canonical(fp[l]), obs, measurements[l]);
        if (!p.a_nonlin.isZero(0.0)) {
            AffineFactor pseudo{p.a_nonlin, Eigen::VectorXd::Zero(model.d_nonlin()),
                                model.cov_w_nonlin()};
            fe = eq_gauss_likelihood(fe, pseudo, pseudo_meas_lin(nonlin_traj[l + 1], p));
        }
        fp[l + 1] =
            fn_affine_marginal(to_moment(fe), AffineFactor{p.a_lin, p.f_lin, model.cov_w_lin()});
    }

    // Backward information pass, started from the likelihood of y_T alone so
    // that the merge below reproduces the exact two-filter smoother.
    auto likelihood_term = [&](Eigen::Index l) {
        ModelParams p = model.params(static_cast<int>(l), nonlin_traj[l]);
        GaussianCanonical zero(Eigen::VectorXd::Zero(model.d_lin()),
                               Eigen::MatrixXd::Zero(model.d_lin(), model.d_lin()));
        return eq_gauss_likelihood(zero, AffineFactor{p.b_obs, p.h_obs, model.cov_e()},
                                   measurements[l]);
    };

    if (horizon == 1)
        return {to_moment(eq_gauss_product(to_canonical(fp[0]), likelihood_term(0)))};

    std::vector<GaussianCanonical> be(horizon);
    be[horizon - 1] = likelihood_term(horizon - 1);
    for (Eigen::Index l = horizon - 2; l >= 0; --l) {
        ModelParams p = model.params(static_cast<int>(l), nonlin_traj[l]);
        LinearTuContext ctx = make_linear_tu_context(be[l + 1], model.cov_w_lin());
        GaussianCanonical m1 = step1_tu_linear(p, ctx);
        be[l] = step2_mu_linear(m1, p, nonlin_traj[l + 1], measurements[l],
                                model.cov_w_nonlin(), model.cov_e())
                    .m_be;
    }

    // Merge; backward message only at l = 1.
    std::vector<GaussianMoment> out(horizon);
    out[0] = to_moment(be[0]);
    for (Eigen::Index l = 1; l < horizon; ++l)
        out[l] = to_moment(eq_gauss_product(to_canonical(fp[l]), be[l]));
    return out;
}

std::vector<GaussianMoment> refine_linear(const std::vector<SmoothedMarginal>& smoothed,
                                          const ClgModel& model,
                                          const std::vector<Eigen::VectorXd>& measurements) {
    if (smoothed.empty()) throw std::invalid_argument("refine_linear: empty smoothing result");
    std::vector<Eigen::VectorXd> traj;
    traj.reserve(smoothed.size());
    for (const auto& m : smoothed) traj.push_back(m.x_nonlin_hat);
    return conditional_linear_smooth(model, measurements, traj);
}

} // namespace clgsmooth
