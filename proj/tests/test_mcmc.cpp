#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "spider/logreg.hpp"
#include "spider/mcmc.hpp"
#include "spider/rng.hpp"

using namespace spider;
using namespace spider::mcmc;

namespace {

double pg_mean(double c) {
    if (c == 0.0) return 0.25;
    return std::tanh(c / 2.0) / (2.0 * c);
}

}  // namespace

TEST_CASE("polya-gamma sample means match the analytic moments") {
    const int draws = 100000;
    for (const double c : {0.0, 0.5, 1.0, 2.5, 5.0}) {
        std::vector<double> xs;
        xs.reserve(draws);
        rng::Stream stream(rng::derive(808, {static_cast<std::uint64_t>(c * 16.0)}));
        for (int r = 0; r < draws; ++r) xs.push_back(sample_pg1(c, stream));
        const auto stats = testutil::sample_stats(xs);
        CHECK(std::abs(stats.mean - pg_mean(c)) <= 3.0 * stats.stderr_mean);
    }
}

TEST_CASE("polya-gamma sampler stays correct far in the tails") {
    // exercises the log-space inverse-gaussian CDF branch
    for (const double c : {20.0, 100.0, 400.0}) {
        std::vector<double> xs;
        rng::Stream stream(rng::derive(911, {static_cast<std::uint64_t>(c)}));
        for (int r = 0; r < 20000; ++r) xs.push_back(sample_pg1(c, stream));
        const auto stats = testutil::sample_stats(xs);
        const double target = std::tanh(c / 2.0) / (2.0 * c);
        CHECK(std::abs(stats.mean - target) <= 4.0 * stats.stderr_mean);
        for (double x : xs) CHECK(x > 0.0);
    }
}

TEST_CASE("polya-gamma law is symmetric in the sign of c") {
    const int draws = 10000;
    std::vector<double> plus, minus;
    rng::Stream sp(111), sm(222);
    for (int r = 0; r < draws; ++r) {
        plus.push_back(sample_pg1(1.7, sp));
        minus.push_back(sample_pg1(-1.7, sm));
    }
    const double d = testutil::ks_statistic(plus, minus);
    CHECK(d < testutil::ks_critical(1.628, draws, draws));
}

TEST_CASE("production sampler agrees with the series oracle") {
    const int draws = 10000;
    std::vector<double> production, series;
    rng::Stream ps(333), ss(444);
    for (int r = 0; r < draws; ++r) {
        production.push_back(sample_pg1(1.0, ps));
        series.push_back(testutil::pg1_series_oracle(1.0, ss));
    }
    const double d = testutil::ks_statistic(production, series);
    CHECK(d < testutil::ks_critical(1.628, draws, draws));
}

TEST_CASE("gibbs chain marginal at c = 0 is the base gaussian") {
    const GibbsTarget target{0.8, 0.0, 0.3};
    const auto chain = gibbs_chain(target, 100000, 50, 987);
    const auto stats = testutil::sample_stats(chain.z_samples);
    CHECK(std::abs(stats.mean - 0.8) <= 3.0 * stats.stderr_mean);
}

TEST_CASE("gibbs weighted functional matches the quadrature identity") {
    // long-run mean of z against the separate posterior-mean computation
    const double a = 0.3, c = 2.0, s2 = 0.05;
    const auto chain = gibbs_chain({a, c, s2}, 10000, 100, 55);
    const auto stats = testutil::sample_stats(chain.z_samples);
    const double reference = testutil::trapezoid_posterior_mean(a, c, s2, 200001);
    CHECK(std::abs(stats.mean - reference) <= 0.02);
}

TEST_CASE("chains replay bit-identically") {
    const GibbsTarget target{0.1, 1.4, 0.2};
    const auto a = gibbs_chain(target, 500, 20, 31337);
    const auto b = gibbs_chain(target, 500, 20, 31337);
    REQUIRE(a.z_samples.size() == b.z_samples.size());
    for (std::size_t i = 0; i < a.z_samples.size(); ++i)
        CHECK(a.z_samples[i] == b.z_samples[i]);
    const auto c = gibbs_chain(target, 500, 20, 31338);
    CHECK(a.z_samples != c.z_samples);
}

TEST_CASE("mc field estimate approaches the quadrature field") {
    const auto data = logreg::synthesize_dataset(12, 3, Vec::Zero(3), 0.05, 5);
    const auto model = logreg::build_model(data, 0.05, 1.0);
    auto em = logreg::em_statistic_model(model);

    McModelContext ctx;
    ctx.X = &model.X();
    ctx.y = &model.y();
    ctx.sigma2 = model.sigma2();
    ctx.B = &model.B();
    ctx.burn_in = 100;

    rng::Stream stream(9001);
    const Vec s = testutil::random_vec(3, stream, 0.4);
    const int i = 4;
    const Vec exact = em->posterior_mean(i, model.B().apply(s)) - s;
    const Vec estimate = mc_hbar_estimate(s, i, ctx, 100000, 777);
    CHECK((estimate - exact).cwiseAbs().maxCoeff() <= 0.01);

    // the averaged logistic weight keeps the MC term inside its crude bound
    const double yi = model.y()(i);
    const double norm = model.column_norm(i);
    const Vec linear = -s + model.X().col(i) *
                                (model.X().col(i).dot(model.B().apply(s)) /
                                 (model.sigma2() * norm * norm));
    const Vec mc_term = estimate - linear;
    CHECK(mc_term.norm() <= std::abs(yi) * norm * (1.0 + 1e-12));
}

TEST_CASE("correlated chains reduce the variance of difference estimates") {
    const auto data = logreg::synthesize_dataset(10, 3, Vec::Zero(3), 0.05, 6);
    const auto model = logreg::build_model(data, 0.05, 1.0);

    McModelContext ctx;
    ctx.X = &model.X();
    ctx.y = &model.y();
    ctx.sigma2 = model.sigma2();
    ctx.B = &model.B();
    ctx.burn_in = 30;

    rng::Stream stream(12345);
    const Vec s = testutil::random_vec(3, stream, 0.3);
    const Vec s_near = s + 0.02 * testutil::random_vec(3, stream, 1.0);
    const int i = 2;
    const std::int64_t budget = 40;

    std::vector<double> coupled, uncoupled;
    for (int r = 0; r < 1000; ++r) {
        const auto seed = rng::derive(5150, {static_cast<std::uint64_t>(r)});
        const auto shared = rng::derive(seed, {0});
        const Vec d_crn = mc_hbar_estimate(s, i, ctx, budget, seed, shared) -
                          mc_hbar_estimate(s_near, i, ctx, budget, seed, shared);
        const Vec d_ind =
            mc_hbar_estimate(s, i, ctx, budget, rng::derive(seed, {1})) -
            mc_hbar_estimate(s_near, i, ctx, budget, rng::derive(seed, {2}));
        coupled.push_back(d_crn.squaredNorm());
        uncoupled.push_back(d_ind.squaredNorm());
    }
    const auto c_stats = testutil::sample_stats(coupled);
    const auto u_stats = testutil::sample_stats(uncoupled);
    CHECK(c_stats.mean < u_stats.mean);
}

TEST_CASE("gibbs chain input validation") {
    CHECK_THROWS_AS(gibbs_chain({0.0, 0.0, 0.0}, 10, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gibbs_chain({0.0, 0.0, 1.0}, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gibbs_chain({0.0, 0.0, 1.0}, 10, -1, 1), std::invalid_argument);
}
