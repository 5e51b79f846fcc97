#include <doctest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "spider/algorithms.hpp"
#include "spider/em.hpp"
#include "spider/rng.hpp"

using namespace spider;

namespace {

std::shared_ptr<GaussianGaussianModel> fixture_y13() {
    return std::make_shared<GaussianGaussianModel>(std::vector<double>{1.0, 3.0});
}

}  // namespace

TEST_CASE("fixture field values") {
    auto model = fixture_y13();
    auto oracle = em_field_oracle(model);
    const auto I1 = MetricOperator::identity(1);

    // hbar_i(s) = (s + y_i)/2 - s
    const Vec s{{0.4}};
    CHECK(oracle->eval_single(0, s, I1, 0, 0)(0) ==
          doctest::Approx((0.4 + 1.0) / 2.0 - 0.4));

    // the mean field vanishes at the observation mean
    const Vec star{{2.0}};
    CHECK(mean_field(*oracle, star, I1).norm() <= 1e-15);

    // single observation equal to the state
    auto one = std::make_shared<GaussianGaussianModel>(std::vector<double>{0.8});
    auto oracle1 = em_field_oracle(one);
    CHECK(oracle1->eval_single(0, Vec{{0.8}}, I1, 0, 0).norm() <= 1e-15);
}

TEST_CASE("em_full_step closed-form recursion") {
    auto model = fixture_y13();
    const auto g = ProxFunction::zero();

    Vec s{{0.0}};
    s = em_full_step(*model, s, 1.0, g);
    CHECK(s(0) == doctest::Approx(1.0));
    s = em_full_step(*model, s, 1.0, g);
    CHECK(s(0) == doctest::Approx(1.5));
    for (int it = 0; it < 60; ++it) s = em_full_step(*model, s, 1.0, g);
    CHECK(s(0) == doctest::Approx(2.0).epsilon(1e-12));

    // fixed point and gamma = 0 leave the state unchanged
    CHECK(em_full_step(*model, Vec{{2.0}}, 1.0, g)(0) == doctest::Approx(2.0));
    CHECK(em_full_step(*model, Vec{{0.3}}, 0.0, g)(0) == doctest::Approx(0.3));
}

TEST_CASE("online_em_step single-example field") {
    auto model = fixture_y13();
    const auto g = ProxFunction::zero();
    const Vec s{{0.0}};
    CHECK(online_em_step(*model, s, 1.0, g, {0})(0) == doctest::Approx(0.5));

    // full batch reduces to the full step
    CHECK(online_em_step(*model, s, 1.0, g, {0, 1})(0) ==
          doctest::Approx(em_full_step(*model, s, 1.0, g)(0)));
}

TEST_CASE("batch expectation of the online step matches the full direction") {
    auto model = std::make_shared<GaussianGaussianModel>(
        std::vector<double>{0.2, -1.0, 2.5, 4.0, 1.1});
    const auto g = ProxFunction::zero();
    const Vec s{{0.7}};
    const double gamma = 0.6;
    const Vec full = em_full_step(*model, s, gamma, g);

    std::vector<double> steps;
    for (int r = 0; r < 10000; ++r) {
        const auto batch = sample_batch(model->sample_count(), 2, false,
                                        rng::derive(31, {static_cast<std::uint64_t>(r)}));
        steps.push_back(online_em_step(*model, s, gamma, g, batch)(0));
    }
    const auto stats = testutil::sample_stats(steps);
    CHECK(std::abs(stats.mean - full(0)) <= 3.0 * stats.stderr_mean);
}

TEST_CASE("statistic-space EM equals parameter-space EM through T") {
    auto model = std::make_shared<GaussianGaussianModel>(
        std::vector<double>{0.5, 1.7, -2.0, 3.3});
    const auto g = ProxFunction::zero();

    Vec s{{0.1}};
    double theta = model->m_step(s)(0);  // parameter-space state
    for (int it = 0; it < 20; ++it) {
        s = em_full_step(*model, s, 1.0, g);
        // textbook parameter-space EM: theta <- T(sbar(theta))
        double sbar = 0.0;
        for (int i = 0; i < model->sample_count(); ++i)
            sbar += model->posterior_mean(i, Vec{{theta}})(0);
        sbar /= model->sample_count();
        theta = sbar;  // T is the identity on this fixture
        CHECK(std::abs(model->m_step(s)(0) - theta) <= 1e-10);
    }
}

TEST_CASE("3p-spider with exact EM oracle reproduces classical EM") {
    auto model = std::make_shared<GaussianGaussianModel>(
        std::vector<double>{0.5, 1.7, -2.0, 3.3});
    auto oracle = em_field_oracle(model);
    const int n = model->sample_count();

    RunConfig c;
    c.kout = 4;
    c.kin_schedule = [](std::int64_t) { return std::int64_t{5}; };
    c.batch_size = n;
    c.stepsize_schedule = [](std::int64_t, std::int64_t) { return 1.0; };
    const auto result = run_3p_spider(c, *oracle, ProxFunction::zero(), Vec{{0.1}},
                                      MetricOperator::identity(1));

    Vec s{{0.1}};
    for (std::size_t row = 0; row < result.trace.size(); ++row) {
        s = em_full_step(*model, s, 1.0, ProxFunction::zero());
        CHECK(std::abs(result.trace[row].iterate_sq_norm - s.squaredNorm()) <=
              1e-12);
    }
    CHECK(std::abs(result.final_iterate(0) - s(0)) <= 1e-12);
}

TEST_CASE("exact EM decreases the fixture likelihood monotonically") {
    auto model = std::make_shared<GaussianGaussianModel>(
        std::vector<double>{2.0, -0.4, 0.9, 5.0, 3.1, -1.7});
    const auto g = ProxFunction::zero();
    Vec s{{-3.0}};
    double prev = model->neg_log_likelihood(model->m_step(s)(0));
    for (int it = 0; it < 40; ++it) {
        s = em_full_step(*model, s, 1.0, g);
        const double nll = model->neg_log_likelihood(model->m_step(s)(0));
        CHECK(nll <= prev + 1e-12);
        prev = nll;
    }
}

TEST_CASE("m_step minimizes the fixture criterion against perturbations") {
    auto model = fixture_y13();
    rng::Stream stream(64);
    const Vec s{{1.3}};
    const Vec theta = model->m_step(s);
    const double at_min = model->mstep_criterion(theta, s);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec nearby{{theta(0) + 0.5 * stream.gaussian()}};
        CHECK(at_min <= model->mstep_criterion(nearby, s) + 1e-12);
    }
}
