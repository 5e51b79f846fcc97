#include "spider/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spider/rng.hpp"

namespace spider {

namespace {

// seed-tree tags for the drivers
constexpr std::uint64_t kTagInnerBatch = 21;
constexpr std::uint64_t kTagInnerOracle = 22;
constexpr std::uint64_t kTagRefreshBatch = 23;
constexpr std::uint64_t kTagRefreshOracle = 24;

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

std::vector<int> sample_batch(int n, int b, bool with_replacement,
                              std::uint64_t seed) {
    if (n < 1 || b < 1) throw std::invalid_argument("sample_batch: n, b >= 1");
    if (!with_replacement && b > n)
        throw std::invalid_argument(
            "sample_batch: batch larger than population without replacement");
    rng::Stream stream(seed);
    std::vector<int> batch;
    batch.reserve(static_cast<std::size_t>(b));
    if (with_replacement) {
        for (int j = 0; j < b; ++j)
            batch.push_back(static_cast<int>(stream() % static_cast<std::uint64_t>(n)));
    } else {
        // partial Fisher-Yates
        std::vector<int> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        for (int j = 0; j < b; ++j) {
            const int r = j + static_cast<int>(stream() %
                                               static_cast<std::uint64_t>(n - j));
            std::swap(pool[static_cast<std::size_t>(j)],
                      pool[static_cast<std::size_t>(r)]);
            batch.push_back(pool[static_cast<std::size_t>(j)]);
        }
    }
    std::sort(batch.begin(), batch.end());
    return batch;
}

BatchMeanProperties batch_mean_properties(const std::vector<Vec>& values, int b) {
    const int n = static_cast<int>(values.size());
    if (n < 1 || b < 1 || b > n)
        throw std::invalid_argument("batch_mean_properties: need 1 <= b <= n");
    if (n > 12)
        throw std::invalid_argument("batch_mean_properties: n too large to enumerate");

    const Eigen::Index q = values.front().size();
    Vec full_mean = Vec::Zero(q);
    for (const Vec& f : values) full_mean += f;
    full_mean /= static_cast<double>(n);

    Vec mean_acc = Vec::Zero(q);
    double var_acc = 0.0;
    std::int64_t count = 0;
    std::vector<int> idx(static_cast<std::size_t>(b));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        Vec bm = Vec::Zero(q);
        for (int i : idx) bm += values[static_cast<std::size_t>(i)];
        bm /= static_cast<double>(b);
        mean_acc += bm;
        var_acc += (bm - full_mean).squaredNorm();
        ++count;
        // next combination in lexicographic order
        int j = b - 1;
        while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - b + j) --j;
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
        for (int l = j + 1; l < b; ++l)
            idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
    }

    double bound = 0.0;
    for (const Vec& f : values) bound += (f - full_mean).squaredNorm();
    bound /= static_cast<double>(b) * static_cast<double>(n);

    BatchMeanProperties props;
    props.mean_of_batch_means = mean_acc / static_cast<double>(count);
    props.variance_of_batch_means = var_acc / static_cast<double>(count);
    props.variance_bound = bound;
    return props;
}

double stationarity_delta(const ProxFunction& g, double gamma,
                          const MetricOperator& B, const Vec& s, const Vec& field) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("stationarity_delta requires gamma > 0");
    const Vec p = prox(g, gamma, B, s + gamma * field);
    return B.norm_sq(p - s) / (gamma * gamma);
}

double max_initial_stepsize(const SmoothnessProfile& profile, std::int64_t kin,
                            std::int64_t b, double C_vb, double min_Mbar) {
    profile.validate();
    if (kin < 1 || b < 1 || C_vb < 0.0 || !(min_Mbar > 0.0))
        throw std::invalid_argument("max_initial_stepsize: invalid inputs");
    const double L = profile.aggregate_L;
    const double Lw = profile.gradient_lipschitz;
    const double upsilon =
        1.0 + 2.0 * C_vb / (std::sqrt(static_cast<double>(b)) * min_Mbar);
    const double ratio = static_cast<double>(kin) / static_cast<double>(b);
    const double root =
        (1.0 / (4.0 * L * profile.v_max * upsilon * ratio)) *
        (std::sqrt(Lw * Lw / (L * L) +
                   4.0 * profile.v_min * profile.v_max * ratio * upsilon) -
         Lw / L);
    // the admissible interval is open; stay strictly inside it so the gate
    // evaluated at the returned value is strictly below 1/2
    return root * (1.0 - 1e-13);
}

double lambda_gate(double gamma_tk, const SmoothnessProfile& profile,
                   std::int64_t kin_t, std::int64_t b, double C_vb,
                   double Mbar_tk1) {
    profile.validate();
    if (kin_t < 1 || b < 1 || C_vb < 0.0 || !(Mbar_tk1 > 0.0) || gamma_tk < 0.0)
        throw std::invalid_argument("lambda_gate: invalid inputs");
    const double L = profile.aggregate_L;
    const double linear = gamma_tk * profile.gradient_lipschitz / profile.v_min;
    const double quadratic =
        gamma_tk * gamma_tk * L * L * 2.0 * profile.v_max *
        static_cast<double>(kin_t) /
        (profile.v_min * static_cast<double>(b)) *
        (1.0 + 2.0 * C_vb / (std::sqrt(static_cast<double>(b)) * Mbar_tk1));
    return linear + quadratic;
}

StepsizeSchedule decreasing_stepsize_schedule(
    double gamma_t0, double C_b,
    std::function<std::int64_t(std::int64_t, std::int64_t)> m_schedule) {
    if (!(gamma_t0 > 0.0) || C_b < 0.0)
        throw std::invalid_argument("decreasing_stepsize_schedule: invalid inputs");
    return [gamma_t0, C_b, m_schedule = std::move(m_schedule)](std::int64_t t,
                                                               std::int64_t k) {
        double gamma = gamma_t0;
        if (C_b == 0.0) return gamma;
        for (std::int64_t j = 0; j <= k; ++j) {
            const double factor =
                1.0 + 2.0 * C_b / static_cast<double>(m_schedule(t, j + 1));
            double next = gamma / factor;
            // keep the defining inequality valid in machine arithmetic
            while (next * factor > gamma) next = std::nextafter(next, 0.0);
            gamma = next;
        }
        return gamma;
    };
}

namespace {

struct DriverState {
    std::vector<TraceRecord> trace;
    std::int64_t oracle_calls = 0;
    std::int64_t prox_calls = 0;
    std::int64_t mc_draws = 0;
    double max_lambda = 0.0;
    std::int64_t gate_violations = 0;
    std::int64_t start_ns = 0;
    bool record_walltime = false;

    TraceRecord make_record(std::int64_t t, std::int64_t k, double delta,
                            const Vec& iterate,
                            const std::function<double(const Vec&)>& objective,
                            int n) const {
        TraceRecord r;
        r.t = t;
        r.k = k;
        r.delta = delta;
        r.iterate_sq_norm = iterate.squaredNorm();
        if (objective) r.objective = objective(iterate);
        r.oracle_calls_cum = oracle_calls;
        r.prox_calls_cum = prox_calls;
        r.epoch_fraction = static_cast<double>(oracle_calls) / n;
        r.wall_ns = record_walltime ? (now_ns() - start_ns) : 0;
        return r;
    }
};

void check_gate(const RunConfig& config, DriverState& state, double gamma,
                std::int64_t kin_t, std::int64_t Mbar) {
    if (!config.gate_profile) return;
    const double lambda = lambda_gate(gamma, *config.gate_profile, kin_t,
                                      config.batch_size, config.gate_C_vb,
                                      static_cast<double>(Mbar));
    state.max_lambda = std::max(state.max_lambda, lambda);
    if (lambda >= 0.5) ++state.gate_violations;
}

std::int64_t mc_cost(const ForwardOracle& oracle, std::int64_t budget,
                     int chains) {
    switch (oracle.exactness()) {
        case Exactness::exact:
            return 0;
        default:
            return budget * chains;
    }
}

}  // namespace

RunResult run_vmfb(const RunConfig& config, const ForwardOracle& oracle,
                   const ProxFunction& g, Vec s_init) {
    if (!config.stepsize_schedule)
        throw std::invalid_argument("run_vmfb: stepsize schedule required");
    if (!g.contains(s_init))
        throw std::invalid_argument("run_vmfb: initial point outside dom g");
    const int n = oracle.components();
    const std::int64_t b = config.batch_size;

    DriverState state;
    state.record_walltime = config.record_walltime;
    state.start_ns = now_ns();

    Vec iterate = std::move(s_init);
    for (std::int64_t k = 0; k < config.kout; ++k) {
        const std::vector<int> batch =
            sample_batch(n, static_cast<int>(b), config.with_replacement,
                         rng::derive(config.master_seed, {kTagInnerBatch, 0,
                                                          static_cast<std::uint64_t>(k)}));
        const MetricOperator B = config.metric_fn
                                     ? config.metric_fn(iterate)
                                     : MetricOperator::identity(static_cast<int>(iterate.size()));
        const std::int64_t budget = config.budgets.inner_at(1, k + 1);
        Vec field = Vec::Zero(iterate.size());
        for (std::size_t slot = 0; slot < batch.size(); ++slot) {
            const std::uint64_t seed = rng::derive(
                config.master_seed,
                {kTagInnerOracle, 0, static_cast<std::uint64_t>(k),
                 static_cast<std::uint64_t>(slot),
                 static_cast<std::uint64_t>(batch[slot])});
            field += oracle.eval_single(batch[slot], iterate, B, budget, seed);
        }
        field /= static_cast<double>(batch.size());
        state.oracle_calls += b;
        state.mc_draws += mc_cost(oracle, budget, 1) * b;

        const double gamma = config.stepsize_schedule(1, k);
        if (!(gamma > 0.0)) throw std::invalid_argument("stepsize must be positive");

        const Vec half = iterate + gamma * field;
        Vec next = prox(g, gamma, B, half);
        ++state.prox_calls;
        const double delta = B.norm_sq(next - iterate) / (gamma * gamma);
        iterate = std::move(next);
        state.trace.push_back(
            state.make_record(1, k, delta, iterate, config.objective_fn, n));
    }

    RunResult result;
    result.trace = std::move(state.trace);
    result.final_iterate = std::move(iterate);
    result.oracle_calls = state.oracle_calls;
    result.prox_calls = state.prox_calls;
    result.mc_draws = state.mc_draws;
    result.max_lambda = state.max_lambda;
    if (state.gate_violations > 0) {
        std::ostringstream os;
        os << "stepsize gate >= 1/2 on " << state.gate_violations
           << " iteration(s); max " << state.max_lambda;
        result.warnings.push_back(os.str());
    }
    return result;
}

RunResult run_3p_spider(const RunConfig& config, const ForwardOracle& oracle,
                        const ProxFunction& g, Vec s_init, MetricOperator B_init) {
    if (!config.stepsize_schedule)
        throw std::invalid_argument("run_3p_spider: stepsize schedule required");
    if (!g.contains(s_init))
        throw std::invalid_argument("run_3p_spider: initial point outside dom g");
    const int n = oracle.components();
    const std::int64_t b = config.batch_size;
    std::function<std::int64_t(std::int64_t)> kin = config.kin_schedule;
    if (!kin) kin = [](std::int64_t) { return std::int64_t{1}; };
    std::function<std::int64_t(std::int64_t)> b_prime = config.b_prime_schedule;
    if (!b_prime) b_prime = [n](std::int64_t) { return std::int64_t{n}; };

    DriverState state;
    state.record_walltime = config.record_walltime;
    state.start_ns = now_ns();

    Vec s_cur = std::move(s_init);   // \hat S_{t,k}
    Vec s_prev = s_cur;              // \hat S_{t,k-1}
    MetricOperator B_cur = std::move(B_init);  // B_{t,k}
    Vec estimator = Vec::Zero(s_cur.size());   // running field estimate

    for (std::int64_t t = 1; t <= config.kout; ++t) {
        // refresh: S_{t,0} on a batch of size b'_t at the carried metric
        s_prev = s_cur;
        const std::int64_t bp = b_prime(t);
        const std::vector<int> refresh_batch = sample_batch(
            n, static_cast<int>(bp), config.with_replacement,
            rng::derive(config.master_seed,
                        {kTagRefreshBatch, static_cast<std::uint64_t>(t)}));
        const std::int64_t m0 = config.budgets.refresh_at(t);
        estimator = spider_refresh(
            oracle, refresh_batch, s_cur, B_cur, m0,
            rng::derive(config.master_seed,
                        {kTagRefreshOracle, static_cast<std::uint64_t>(t)}));
        state.oracle_calls += bp;
        state.mc_draws += mc_cost(oracle, m0, 1) * bp;

        const std::int64_t kin_t = kin(t);
        for (std::int64_t k = 0; k < kin_t; ++k) {
            const MetricOperator B_next =
                config.metric_fn ? config.metric_fn(s_cur) : B_cur;  // B_{t,k+1}
            if (k == 0) {
                // S_{t,1} = S_{t,0}: the first difference after a refresh is
                // identically zero (the two anchor iterates coincide) and
                // costs no oracle calls
            } else {
                const std::vector<int> batch = sample_batch(
                    n, static_cast<int>(b), config.with_replacement,
                    rng::derive(config.master_seed,
                                {kTagInnerBatch, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(k)}));
                const std::int64_t m = config.budgets.inner_at(t, k + 1);
                Vec increment = Vec::Zero(s_cur.size());
                for (std::size_t slot = 0; slot < batch.size(); ++slot) {
                    const std::uint64_t seed = rng::derive(
                        config.master_seed,
                        {kTagInnerOracle, static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(slot),
                         static_cast<std::uint64_t>(batch[slot])});
                    increment += oracle.eval_diff(batch[slot], s_cur, B_next,
                                                  s_prev, B_cur, m, seed,
                                                  config.crn);
                }
                estimator += increment / static_cast<double>(batch.size());
                state.oracle_calls += 2 * b;
                state.mc_draws += mc_cost(oracle, m, 2) * b;
            }

            const double gamma = config.stepsize_schedule(t, k);
            if (!(gamma > 0.0))
                throw std::invalid_argument("stepsize must be positive");
            check_gate(config, state, gamma, kin_t,
                       config.budgets.inner_at(t, k + 1));

            const Vec half = s_cur + gamma * estimator;
            Vec next = prox(g, gamma, B_next, half);
            ++state.prox_calls;
            const double delta = B_next.norm_sq(next - s_cur) / (gamma * gamma);

            s_prev = s_cur;
            s_cur = std::move(next);
            B_cur = B_next;
            state.trace.push_back(
                state.make_record(t, k, delta, s_cur, config.objective_fn, n));
        }
    }

    RunResult result;
    result.trace = std::move(state.trace);
    result.final_iterate = std::move(s_cur);
    result.oracle_calls = state.oracle_calls;
    result.prox_calls = state.prox_calls;
    result.mc_draws = state.mc_draws;
    result.max_lambda = state.max_lambda;
    if (state.gate_violations > 0) {
        std::ostringstream os;
        os << "stepsize gate >= 1/2 on " << state.gate_violations
           << " iteration(s); max " << state.max_lambda;
        result.warnings.push_back(os.str());
    }
    return result;
}

}  // namespace spider
