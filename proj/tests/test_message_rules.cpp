#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "clgsmooth/message_rules.hpp"
#include "clgsmooth/oracles.hpp"
#include "test_support.hpp"

using namespace clgsmooth;
using namespace testsup;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

GaussianCanonical rand_canonical(std::mt19937_64& rng, Eigen::Index d) {
    return to_canonical(GaussianMoment(rand_vec(rng, d), rand_spd(rng, d)));
}

} // namespace

TEST_SUITE_BEGIN("gaussian_mp");

TEST_CASE("eq_delta_times_f reweights the delta") {
    GaussianMoment std_normal(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    auto pdf = [&](const VectorXd& x) { return std::exp(log_density(std_normal, x)); };

    WeightedDelta at0{VectorXd::Zero(1), 1.0};
    CHECK(eq_delta_times_f(at0, pdf).weight ==
          doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));

    WeightedDelta at_a{VectorXd::Constant(1, 0.37), 0.8};
    WeightedDelta unchanged = eq_delta_times_f(at_a, [](const VectorXd&) { return 1.0; });
    CHECK(unchanged.weight == doctest::Approx(0.8));
    CHECK(unchanged.location == at_a.location);

    WeightedDelta at1{VectorXd::Constant(1, 1.0), 1.0};
    CHECK(eq_delta_times_f(at1, pdf).weight ==
          doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("eq_gauss_product adds precisions") {
    GaussianCanonical std1(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    GaussianCanonical prod = eq_gauss_product(std1, std1);
    CHECK(prod.prec()(0, 0) == doctest::Approx(2.0));
    CHECK(prod.tmean()(0) == doctest::Approx(0.0));

    GaussianCanonical a = to_canonical(GaussianMoment(VectorXd::Constant(1, 1.0),
                                                      MatrixXd::Identity(1, 1)));
    GaussianCanonical b = to_canonical(GaussianMoment(VectorXd::Constant(1, 3.0),
                                                      MatrixXd::Identity(1, 1)));
    GaussianMoment fused = to_moment(eq_gauss_product(a, b));
    CHECK(fused.mean()(0) == doctest::Approx(2.0));
    CHECK(fused.cov()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("eq_gauss_product matches the pointwise product on a grid") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        GaussianMoment g1(rand_vec(rng, 2, -1.5, 1.5), rand_spd(rng, 2));
        GaussianMoment g2(rand_vec(rng, 2, -1.5, 1.5), rand_spd(rng, 2));
        GaussianMoment fused = to_moment(eq_gauss_product(to_canonical(g1), to_canonical(g2)));

        auto product = [&](double x, double y) {
            VectorXd v(2);
            v << x, y;
            return std::exp(log_density(g1, v) + log_density(g2, v));
        };
        auto closed = gaussian_density_2d(fused);

        // pdf-ratio deviation where the fused density is non-negligible
        auto g0 = oracles::uniform_grid(fused.mean()(0) - 6, fused.mean()(0) + 6, 121);
        auto g1g = oracles::uniform_grid(fused.mean()(1) - 6, fused.mean()(1) + 6, 121);
        MatrixXd grid_vals(121, 121), closed_vals(121, 121);
        for (int i = 0; i < 121; ++i)
            for (int j = 0; j < 121; ++j) {
                grid_vals(i, j) = product(g0.points(i), g1g.points(j));
                closed_vals(i, j) = closed(g0.points(i), g1g.points(j));
            }
        double z1 = g0.weights.transpose() * grid_vals * g1g.weights;
        double z2 = g0.weights.transpose() * closed_vals * g1g.weights;
        double peak = closed_vals.maxCoeff() / z2;
        double worst = 0.0;
        for (int i = 0; i < 121; ++i)
            for (int j = 0; j < 121; ++j) {
                double pc = closed_vals(i, j) / z2;
                if (pc < 1e-4 * peak) continue;
                worst = std::max(worst, std::abs(grid_vals(i, j) / z1 / pc - 1.0));
            }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("eq_gauss_product is commutative and associative") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        GaussianCanonical a = rand_canonical(rng, 3);
        GaussianCanonical b = rand_canonical(rng, 3);
        GaussianCanonical c = rand_canonical(rng, 3);

        GaussianCanonical ab = eq_gauss_product(a, b);
        GaussianCanonical ba = eq_gauss_product(b, a);
        CHECK((ab.prec() - ba.prec()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((ab.tmean() - ba.tmean()).cwiseAbs().maxCoeff() < 1e-12);

        GaussianCanonical abc1 = eq_gauss_product(ab, c);
        GaussianCanonical abc2 = eq_gauss_product(a, eq_gauss_product(b, c));
        CHECK((abc1.prec() - abc2.prec()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((abc1.tmean() - abc2.tmean()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("eq_gauss_likelihood fuses an affine observation") {
    // identity fusion
    GaussianCanonical prior2(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    AffineFactor ident{MatrixXd::Identity(2, 2), VectorXd::Zero(2), MatrixXd::Identity(2, 2)};
    GaussianCanonical post = eq_gauss_likelihood(prior2, ident, VectorXd::Zero(2));
    CHECK((post.prec() - 2.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(post.tmean().cwiseAbs().maxCoeff() < 1e-12);

    // scalar conjugate update
    GaussianCanonical prior1(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    AffineFactor f{MatrixXd::Identity(1, 1), VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
    GaussianMoment m = to_moment(eq_gauss_likelihood(prior1, f, VectorXd::Constant(1, 2.0)));
    CHECK(m.mean()(0) == doctest::Approx(1.0));
    CHECK(m.cov()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("eq_gauss_likelihood applies the offset shift c - b") {
    // N(c; Ax + b, C2) as a function of x peaks at A^-1 (c - b)
    GaussianCanonical flat(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 1e-12));
    AffineFactor f{MatrixXd::Constant(1, 1, 2.0), VectorXd::Constant(1, 1.0),
                   MatrixXd::Constant(1, 1, 1.0)};
    GaussianMoment m = to_moment(eq_gauss_likelihood(flat, f, VectorXd::Constant(1, 5.0)));
    CHECK(m.mean()(0) == doctest::Approx(2.0).epsilon(1e-9)); // (5 - 1) / 2
}

TEST_CASE("eq_gauss_likelihood matches the grid Bayes oracle") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 8; ++t) {
        GaussianMoment prior(rand_vec(rng, 2, -1, 1), rand_spd(rng, 2));
        AffineFactor f{rand_matrix(rng, 2, 2, -1.5, 1.5), rand_vec(rng, 2, -1, 1),
                       rand_spd(rng, 2)};
        VectorXd c = rand_vec(rng, 2, -1, 1);
        GaussianMoment post = to_moment(eq_gauss_likelihood(to_canonical(prior), f, c));

        auto bayes = [&](double x, double y) {
            VectorXd v(2);
            v << x, y;
            GaussianMoment lik(f.a * v + f.offset, f.cov);
            return std::exp(log_density(prior, v) + log_density(lik, c));
        };
        double s = sup_diff_2d(bayes, gaussian_density_2d(post), post.mean()(0) - 7,
                               post.mean()(0) + 7, post.mean()(1) - 7, post.mean()(1) + 7, 161);
        CHECK(s < 1e-6);
    }
}

TEST_CASE("fn_affine_marginal propagates moments") {
    AffineFactor f{MatrixXd::Constant(1, 1, 2.0), VectorXd::Constant(1, 1.0),
                   MatrixXd::Constant(1, 1, 1.0)};
    GaussianMoment in(VectorXd::Constant(1, 1.0), MatrixXd::Constant(1, 1, 1.0));
    GaussianMoment out = fn_affine_marginal(in, f);
    CHECK(out.mean()(0) == doctest::Approx(3.0));
    CHECK(out.cov()(0, 0) == doctest::Approx(5.0));

    std::mt19937_64 rng(23);
    AffineFactor ident{MatrixXd::Identity(2, 2), VectorXd::Zero(2), MatrixXd::Zero(2, 2)};
    GaussianMoment g(VectorXd::Constant(2, 0.3), rand_spd(rng, 2));
    GaussianMoment same = fn_affine_marginal(g, ident);
    CHECK((same.mean() - g.mean()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((same.cov() - g.cov()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fn_affine_marginal matches Monte Carlo moments for a 3->2 map") {
    std::mt19937_64 seeder(14);
    GaussianMoment in(rand_vec(seeder, 3, -1, 1), rand_spd(seeder, 3));
    AffineFactor f{rand_matrix(seeder, 2, 3), rand_vec(seeder, 2, -1, 1), rand_spd(seeder, 2)};
    GaussianMoment out = fn_affine_marginal(in, f);

    Rng rng(2024);
    const int n = 40000;
    MatrixXd draws(n, 2);
    for (int i = 0; i < n; ++i) {
        VectorXd x1 = sample_gaussian(rng, in);
        GaussianMoment cond(f.a * x1 + f.offset, f.cov);
        draws.row(i) = sample_gaussian(rng, cond).transpose();
    }
    VectorXd mean = draws.colwise().mean();
    MatrixXd centered = draws.rowwise() - mean.transpose();
    MatrixXd cov = centered.transpose() * centered / (n - 1);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(mean(i) - out.mean()(i)) < 3.0 * std::sqrt(out.cov()(i, i) / n));
        CHECK(std::abs(cov(i, i) - out.cov()(i, i)) <
              3.0 * out.cov()(i, i) * std::sqrt(2.0 / n));
    }
}

TEST_CASE("fn_affine_at_point is the degenerate marginal") {
    MatrixXd c2 = MatrixXd::Identity(2, 2) * 0.7;
    AffineFactor ident{MatrixXd::Identity(2, 2), VectorXd::Zero(2), c2};
    GaussianMoment at0 = fn_affine_at_point(VectorXd::Zero(2), ident);
    CHECK(at0.mean().cwiseAbs().maxCoeff() == 0.0);
    CHECK((at0.cov() - c2).cwiseAbs().maxCoeff() < 1e-12);

    MatrixXd a(1, 2);
    a << 1.0, 0.0;
    AffineFactor row{a, VectorXd::Constant(1, 1.0), MatrixXd::Constant(1, 1, 0.5)};
    GaussianMoment shifted = fn_affine_at_point(VectorXd::Constant(2, 1.0), row);
    CHECK(shifted.mean()(0) == doctest::Approx(2.0));

    // consistency with fn_affine_marginal when C1 -> 0
    std::mt19937_64 rng(15);
    VectorXd point = rand_vec(rng, 2);
    AffineFactor f{rand_matrix(rng, 2, 2), rand_vec(rng, 2), rand_spd(rng, 2)};
    GaussianMoment tight(point, MatrixXd::Zero(2, 2));
    GaussianMoment via_marginal = fn_affine_marginal(tight, f);
    GaussianMoment direct = fn_affine_at_point(point, f);
    CHECK((via_marginal.mean() - direct.mean()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((via_marginal.cov() - direct.cov()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fn_delta_likelihood evaluates N(a; A x2, C2)") {
    DeltaLikelihood lik0 = fn_delta_likelihood(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                               MatrixXd::Identity(2, 2));
    CHECK(lik0.log_at(VectorXd::Zero(2)) ==
          doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));

    // scalar a=1, A=2: as a function of x2 the likelihood peaks at 0.5
    DeltaLikelihood lik = fn_delta_likelihood(VectorXd::Constant(1, 1.0),
                                              MatrixXd::Constant(1, 1, 2.0),
                                              MatrixXd::Constant(1, 1, 1.0));
    double best_x = 0.0, best = -1e300;
    for (double x = -2.0; x <= 2.0; x += 1e-3) {
        double v = lik.log_at(VectorXd::Constant(1, x));
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    CHECK(best_x == doctest::Approx(0.5).epsilon(1e-2));

    // grid evaluation matches the closed form
    std::mt19937_64 rng(16);
    DeltaLikelihood rl = fn_delta_likelihood(rand_vec(rng, 1), rand_matrix(rng, 1, 1, 0.5, 2.0),
                                             MatrixXd::Constant(1, 1, urand(rng, 0.5, 2.0)));
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        double direct = -0.5 * std::log(2.0 * M_PI * rl.cov(0, 0)) -
                        0.5 * std::pow(rl.observed(0) - rl.a(0, 0) * x, 2) / rl.cov(0, 0);
        CHECK(std::abs(std::exp(rl.log_at(VectorXd::Constant(1, x))) - std::exp(direct)) < 1e-12);
    }
}

TEST_CASE("fn_gauss_overlap scalar value and monotonicity") {
    GaussianMoment std1(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    CHECK(fn_gauss_overlap(std1, std1) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));

    double prev = 1e300;
    for (double delta : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        GaussianMoment shifted(VectorXd::Constant(1, delta), MatrixXd::Identity(1, 1));
        double v = fn_gauss_overlap(std1, shifted);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("fn_gauss_overlap equals the printed w/W/eta form") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 30; ++t) {
        Eigen::Index d = 1 + (t % 3);
        GaussianMoment m1(rand_vec(rng, d), rand_spd(rng, d));
        GaussianMoment m2(rand_vec(rng, d), rand_spd(rng, d));

        MatrixXd w1 = m1.cov().inverse(), w2 = m2.cov().inverse();
        MatrixXd w = w1 + w2;
        VectorXd eta = w.ldlt().solve(w1 * m1.mean() + w2 * m2.mean());
        double printed_exp = 0.5 * (eta.dot(w * eta) - m1.mean().dot(w1 * m1.mean()) -
                                    m2.mean().dot(w2 * m2.mean()));
        double printed_k =
            std::pow((m1.cov() + m2.cov()).determinant(), -0.5 * static_cast<double>(d));

        LogOverlap lo = log_gauss_overlap(m1, m2);
        CHECK(lo.exponent == doctest::Approx(printed_exp).epsilon(1e-10));
        CHECK(lo.log_scale == doctest::Approx(std::log(printed_k)).epsilon(1e-10));
    }
}

TEST_CASE("fn_gauss_overlap is proportional to the quadrature integral") {
    std::mt19937_64 rng(18);
    double c1 = urand(rng, 0.5, 2.0), c2 = urand(rng, 0.5, 2.0);
    double expected_ratio = -1.0;
    for (int t = 0; t < 10; ++t) {
        GaussianMoment m1(rand_vec(rng, 1), MatrixXd::Constant(1, 1, c1));
        GaussianMoment m2(rand_vec(rng, 1), MatrixXd::Constant(1, 1, c2));
        auto grid = oracles::uniform_grid(-20, 20, 8001);
        double integral = 0.0;
        for (int i = 0; i < grid.points.size(); ++i) {
            VectorXd x = VectorXd::Constant(1, grid.points(i));
            integral +=
                grid.weights(i) * std::exp(log_density(m1, x) + log_density(m2, x));
        }
        double ratio = integral / fn_gauss_overlap(m1, m2);
        if (expected_ratio < 0)
            expected_ratio = ratio;
        else
            CHECK(ratio == doctest::Approx(expected_ratio).epsilon(1e-8));
        // for scalars the constant is (2 pi)^-1/2
        CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-6));
    }
}

TEST_CASE("fn_affine_reverse hand cases") {
    // g=0, A=I, C1=C2=I, eta1=0 -> prec 0.5, tmean 0
    GaussianMoment m1(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    AffineFactor f{MatrixXd::Identity(1, 1), VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
    GaussianCanonical rev = fn_affine_reverse(m1, f);
    CHECK(rev.prec()(0, 0) == doctest::Approx(0.5));
    CHECK(rev.tmean()(0) == doctest::Approx(0.0));

    // C1 -> infinity: precision vanishes
    GaussianMoment wide(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 1e12));
    GaussianCanonical rev2 = fn_affine_reverse(wide, f);
    CHECK(rev2.prec()(0, 0) < 1e-11);
}

TEST_CASE("fn_affine_reverse matches a quadrature fit") {
    std::mt19937_64 rng(19);
    for (int t = 0; t < 8; ++t) {
        GaussianMoment m1(rand_vec(rng, 1), MatrixXd::Constant(1, 1, urand(rng, 0.5, 2.0)));
        double a = urand(rng, 0.5, 2.0) * (urand(rng, 0, 1) < 0.5 ? -1 : 1);
        AffineFactor f{MatrixXd::Constant(1, 1, a), rand_vec(rng, 1),
                       MatrixXd::Constant(1, 1, urand(rng, 0.5, 2.0))};
        GaussianMoment result = to_moment(fn_affine_reverse(m1, f));

        // q(x2) = integral N(x1; eta1, C1) N(x1; g + A x2, C2) dx1 by quadrature
        auto q = [&](double x2) {
            GaussianMoment inner(f.offset + f.a * VectorXd::Constant(1, x2), f.cov);
            return oracles::integrate_gaussian(m1, 64, [&](const VectorXd& x1) {
                return std::exp(log_density(inner, x1));
            });
        };
        GridMoments gm = grid_moments_1d(q, result.mean()(0) - 10 * std::sqrt(result.cov()(0, 0)),
                                         result.mean()(0) + 10 * std::sqrt(result.cov()(0, 0)),
                                         4001);
        CHECK(gm.mean == doctest::Approx(result.mean()(0)).epsilon(1e-6));
        CHECK(gm.var == doctest::Approx(result.cov()(0, 0)).epsilon(1e-6));
    }
}

TEST_CASE("gm_condense preserves mixture moments") {
    GaussianMoment g(VectorXd::Constant(1, 0.7), MatrixXd::Constant(1, 1, 1.3));
    GaussianMoment single = gm_condense(GaussianMixture({{1.0, g}}));
    CHECK(single.mean()(0) == doctest::Approx(0.7));
    CHECK(single.cov()(0, 0) == doctest::Approx(1.3));

    GaussianMoment plus(VectorXd::Constant(1, 1.0), MatrixXd::Identity(1, 1));
    GaussianMoment minus(VectorXd::Constant(1, -1.0), MatrixXd::Identity(1, 1));
    GaussianMoment two = gm_condense(GaussianMixture({{0.5, plus}, {0.5, minus}}));
    CHECK(two.mean()(0) == doctest::Approx(0.0));
    CHECK(two.cov()(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("gm_condense equals exact closed-form mixture moments") {
    std::mt19937_64 rng(20);
    for (int t = 0; t < 20; ++t) {
        std::vector<GaussianMixture::Component> comps;
        for (int k = 0; k < 5; ++k)
            comps.push_back({urand(rng, 0.1, 1.0),
                             GaussianMoment(rand_vec(rng, 3), rand_spd(rng, 3))});
        GaussianMixture mix(comps);
        GaussianMoment condensed = gm_condense(mix);

        VectorXd mean = VectorXd::Zero(3);
        for (const auto& c : mix.components()) mean += c.weight * c.density.mean();
        MatrixXd second = MatrixXd::Zero(3, 3);
        for (const auto& c : mix.components())
            second += c.weight *
                      (c.density.cov() + c.density.mean() * c.density.mean().transpose());
        MatrixXd cov = second - mean * mean.transpose();
        CHECK((condensed.mean() - mean).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((condensed.cov() - cov).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("gm_condense matches Monte Carlo sampling moments") {
    std::mt19937_64 seeder(21);
    std::vector<GaussianMixture::Component> comps;
    for (int k = 0; k < 5; ++k)
        comps.push_back({urand(seeder, 0.2, 1.0),
                         GaussianMoment(rand_vec(seeder, 3), rand_spd(seeder, 3))});
    GaussianMixture mix(comps);
    GaussianMoment condensed = gm_condense(mix);

    Rng rng(77);
    const int n = 40000;
    MatrixXd draws(n, 3);
    std::vector<double> w;
    for (const auto& c : mix.components()) w.push_back(c.weight);
    for (int i = 0; i < n; ++i) {
        int k = rng.categorical(w);
        draws.row(i) = sample_gaussian(rng, mix.components()[k].density).transpose();
    }
    VectorXd mean = draws.colwise().mean();
    MatrixXd centered = draws.rowwise() - mean.transpose();
    MatrixXd cov = centered.transpose() * centered / (n - 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(mean(i) - condensed.mean()(i)) <
              3.0 * std::sqrt(condensed.cov()(i, i) / n));
        CHECK(std::abs(cov(i, i) - condensed.cov()(i, i)) <
              4.0 * condensed.cov()(i, i) * std::sqrt(2.0 / n));
    }
}

TEST_CASE("emitted matrices are symmetric with floored eigenvalues") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 20; ++t) {
        GaussianMoment m1(rand_vec(rng, 2), rand_spd(rng, 2));
        AffineFactor f{rand_matrix(rng, 2, 2), rand_vec(rng, 2), rand_spd(rng, 2)};
        for (const MatrixXd& m : {fn_affine_marginal(m1, f).cov(),
                                  to_moment(fn_affine_reverse(m1, f)).cov(),
                                  to_canonical(m1).prec()}) {
            CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_SUITE_END();
