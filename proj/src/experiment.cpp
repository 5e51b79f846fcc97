#include "spider/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "spider/quadrature.hpp"
#include "spider/rng.hpp"

namespace spider::exp {

namespace {

constexpr std::uint64_t kTagReplicate = 70;
constexpr std::uint64_t kTagToyMatrix = 71;
constexpr std::uint64_t kTagToyShift = 72;
constexpr std::uint64_t kTagFixtureData = 73;
constexpr std::uint64_t kTagEmIter = 74;
constexpr std::uint64_t kTagEmBatch = 75;

using nlohmann::json;

void expect_keys(const json& j, const std::string& path,
                 const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(path + "." + item.key(), "unknown key");
}

template <class T>
T require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key, "wrong type");
    }
}

template <class T>
T optional_or(const json& j, const std::string& path, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key, "wrong type");
    }
}

ProblemSpec parse_problem(const json& j) {
    ProblemSpec p;
    const std::string path = "problem";
    const std::string type = require<std::string>(j, path, "type");
    if (type == "synthetic") {
        p.type = ProblemSpec::Type::synthetic;
        expect_keys(j, path, {"type", "n", "d", "theta_star", "sigma2", "tau", "seed"});
        p.n = require<int>(j, path, "n");
        p.d = require<int>(j, path, "d");
        p.sigma2 = require<double>(j, path, "sigma2");
        p.tau = require<double>(j, path, "tau");
        p.seed = optional_or<std::uint64_t>(j, path, "seed", 0);
        if (j.contains("theta_star")) {
            const auto v = require<std::vector<double>>(j, path, "theta_star");
            if (static_cast<int>(v.size()) != p.d)
                throw ConfigError(path + ".theta_star", "length must equal d");
            p.theta_star = Eigen::Map<const Vec>(v.data(), p.d);
        }
    } else if (type == "file") {
        p.type = ProblemSpec::Type::file;
        expect_keys(j, path, {"type", "path", "sigma2", "tau"});
        p.path = require<std::string>(j, path, "path");
        p.sigma2 = require<double>(j, path, "sigma2");
        p.tau = require<double>(j, path, "tau");
    } else if (type == "quadratic_toy") {
        p.type = ProblemSpec::Type::quadratic_toy;
        expect_keys(j, path, {"type", "n", "q", "radius", "seed"});
        p.n = optional_or<int>(j, path, "n", 20);
        p.q = optional_or<int>(j, path, "q", 5);
        p.radius = optional_or<double>(j, path, "radius", 1.0);
        p.seed = optional_or<std::uint64_t>(j, path, "seed", 0);
    } else if (type == "gaussian_em_fixture") {
        p.type = ProblemSpec::Type::gaussian_em_fixture;
        expect_keys(j, path, {"type", "n", "theta_star", "seed"});
        p.n = optional_or<int>(j, path, "n", 50);
        p.theta_star_scalar = optional_or<double>(j, path, "theta_star", 1.0);
        p.seed = optional_or<std::uint64_t>(j, path, "seed", 0);
    } else {
        throw ConfigError(path + ".type", "unknown problem type '" + type + "'");
    }
    if (p.type != ProblemSpec::Type::file && p.n < 1)
        throw ConfigError(path + ".n", "must be >= 1");
    return p;
}

OracleSpec parse_oracle(const json& j) {
    OracleSpec o;
    const std::string path = "oracle";
    expect_keys(j, path, {"class", "m0", "mt", "growth_t", "growth_k", "burn_in"});
    const std::string cls = require<std::string>(j, path, "class");
    if (cls == "exact_quadrature")
        o.exact = true;
    else if (cls == "mcmc")
        o.exact = false;
    else
        throw ConfigError(path + ".class", "must be exact_quadrature or mcmc");
    o.m0 = optional_or<std::int64_t>(j, path, "m0", 1);
    o.mt = optional_or<std::int64_t>(j, path, "mt", 1);
    o.growth_t = optional_or<double>(j, path, "growth_t", 0.0);
    o.growth_k = optional_or<double>(j, path, "growth_k", 0.0);
    o.burn_in = optional_or<std::int64_t>(j, path, "burn_in", 100);
    if (o.m0 < 1 || o.mt < 1) throw ConfigError(path, "budgets must be >= 1");
    if (o.growth_t < 0.0 || o.growth_k < 0.0)
        throw ConfigError(path, "growth exponents must be >= 0");
    if (o.burn_in < 0) throw ConfigError(path + ".burn_in", "must be >= 0");
    return o;
}

RunSpec parse_run(const json& j) {
    RunSpec r;
    const std::string path = "run";
    expect_keys(j, path,
                {"epochs", "kin", "b", "b_prime", "stepsize", "with_replacement",
                 "record_objective"});
    r.epochs = require<double>(j, path, "epochs");
    if (!(r.epochs > 0)) throw ConfigError(path + ".epochs", "must be positive");
    r.b = optional_or<std::int64_t>(j, path, "b", 1);
    if (r.b < 1) throw ConfigError(path + ".b", "must be >= 1");
    r.kin = optional_or<std::int64_t>(j, path, "kin", 0);
    if (r.kin < 0) throw ConfigError(path + ".kin", "must be >= 0");
    if (j.contains("b_prime")) {
        if (j.at("b_prime").is_string()) {
            if (j.at("b_prime").get<std::string>() != "n")
                throw ConfigError(path + ".b_prime", "must be an integer or \"n\"");
            r.b_prime = 0;
        } else {
            r.b_prime = require<std::int64_t>(j, path, "b_prime");
            if (r.b_prime < 1) throw ConfigError(path + ".b_prime", "must be >= 1");
        }
    }
    if (j.contains("stepsize")) {
        r.stepsize.clear();
        const auto& arr = j.at("stepsize");
        if (!arr.is_array() || arr.empty())
            throw ConfigError(path + ".stepsize", "must be a nonempty array");
        double prev = -1.0;
        for (std::size_t idx = 0; idx < arr.size(); ++idx) {
            const auto& piece = arr[idx];
            std::ostringstream os;
            os << path << ".stepsize[" << idx << "]";
            if (!piece.is_array() || piece.size() != 2)
                throw ConfigError(os.str(), "must be [epoch_from, gamma]");
            StepsizePiece sp{piece[0].get<double>(), piece[1].get<double>()};
            if (idx == 0 && sp.epoch_from != 0.0)
                throw ConfigError(os.str(), "first piece must start at epoch 0");
            if (sp.epoch_from <= prev)
                throw ConfigError(os.str(), "epochs must be increasing");
            if (!(sp.gamma > 0.0)) throw ConfigError(os.str(), "gamma must be positive");
            prev = sp.epoch_from;
            r.stepsize.push_back(sp);
        }
    }
    r.with_replacement = optional_or<bool>(j, path, "with_replacement", false);
    r.record_objective = optional_or<bool>(j, path, "record_objective", false);
    return r;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    expect_keys(j, "config",
                {"problem", "algorithm", "oracle", "run", "replicates",
                 "master_seed", "record_walltime"});
    ExperimentConfig c;
    if (!j.contains("problem")) throw ConfigError("problem", "missing");
    c.problem = parse_problem(j.at("problem"));
    c.algorithm = require<std::string>(j, "config", "algorithm");
    static const std::set<std::string> kAlgos = {"em", "online_em", "spider",
                                                 "spider_corr", "vmfb"};
    if (!kAlgos.count(c.algorithm))
        throw ConfigError("algorithm", "unknown algorithm '" + c.algorithm + "'");
    if (j.contains("oracle")) c.oracle = parse_oracle(j.at("oracle"));
    if (!j.contains("run")) throw ConfigError("run", "missing");
    c.run = parse_run(j.at("run"));
    c.replicates = optional_or<int>(j, "config", "replicates", 1);
    if (c.replicates < 1) throw ConfigError("replicates", "must be >= 1");
    c.master_seed = optional_or<std::uint64_t>(j, "config", "master_seed", 0);
    c.record_walltime = optional_or<bool>(j, "config", "record_walltime", false);

    const bool em_like = c.algorithm != "vmfb";
    if (c.problem.type == ProblemSpec::Type::quadratic_toy && em_like &&
        c.algorithm != "spider" && c.algorithm != "spider_corr")
        throw ConfigError("algorithm", "quadratic_toy supports vmfb and spider only");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

namespace {

// forces the Monte Carlo posterior path of a model that also has the
// closed-form one
class McOnlyView final : public CurvedExpFamilyModel {
  public:
    explicit McOnlyView(std::shared_ptr<const CurvedExpFamilyModel> inner)
        : inner_(std::move(inner)) {}
    int stat_dim() const override { return inner_->stat_dim(); }
    int sample_count() const override { return inner_->sample_count(); }
    bool has_exact_posterior() const override { return false; }
    Vec posterior_mean(int i, const Vec& th) const override {
        return inner_->posterior_mean(i, th);
    }
    Vec posterior_mean_mc(int i, const Vec& th, std::int64_t budget,
                          std::uint64_t seed) const override {
        return inner_->posterior_mean_mc(i, th, budget, seed);
    }
    Vec m_step(const Vec& s) const override { return inner_->m_step(s); }
    MetricOperator induced_metric(const Vec& s) const override {
        return inner_->induced_metric(s);
    }
    ProxFunction stat_domain() const override { return inner_->stat_domain(); }
    double mstep_criterion(const Vec& th, const Vec& s) const override {
        return inner_->mstep_criterion(th, s);
    }

  private:
    std::shared_ptr<const CurvedExpFamilyModel> inner_;
};

AssembledProblem assemble_logreg(const ExperimentConfig& config) {
    logreg::Dataset data;
    if (config.problem.type == ProblemSpec::Type::synthetic) {
        Vec theta_star = config.problem.theta_star.size() == config.problem.d
                             ? config.problem.theta_star
                             : Vec::Zero(config.problem.d);
        data = logreg::synthesize_dataset(config.problem.n, config.problem.d,
                                          theta_star, config.problem.sigma2,
                                          config.problem.seed);
    } else {
        data = logreg::ingest_dataset(config.problem.path);
    }
    const logreg::LogRegREModel model =
        logreg::build_model(std::move(data), config.problem.sigma2,
                            config.problem.tau);

    AssembledProblem ap;
    auto em_model = logreg::em_statistic_model(model, config.oracle.burn_in);
    ap.em_model = config.oracle.exact
                      ? em_model
                      : std::make_shared<McOnlyView>(em_model);
    ap.oracle = em_field_oracle(em_model, config.oracle.exact);
    ap.g = em_model->stat_domain();
    const MetricOperator B = model.B();
    ap.metric_fn = [B](const Vec&) { return B; };
    ap.s_init = Vec::Zero(model.d());
    ap.B_init = B;
    ap.n = model.n();
    if (config.run.record_objective)
        ap.objective = [model, B](const Vec& s) {
            return logreg::criterion_F(model, B.apply(s));
        };
    return ap;
}

AssembledProblem assemble_quadratic_toy(const ExperimentConfig& config) {
    const int n = config.problem.n;
    const int q = config.problem.q;
    std::vector<Mat> mats;
    std::vector<Vec> shifts;
    mats.reserve(static_cast<std::size_t>(n));
    shifts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rng::Stream ms(rng::derive(config.problem.seed,
                                   {kTagToyMatrix, static_cast<std::uint64_t>(i)}));
        Mat gauss(q, q);
        for (int r = 0; r < q; ++r)
            for (int c = 0; c < q; ++c) gauss(r, c) = ms.gaussian();
        const Eigen::HouseholderQR<Mat> qr(gauss);
        Mat orth = qr.householderQ();
        Vec eigs(q);
        for (int r = 0; r < q; ++r) eigs(r) = 0.5 + 1.5 * ms.uniform();
        mats.push_back(orth * eigs.asDiagonal() * orth.transpose());

        rng::Stream ss(rng::derive(config.problem.seed,
                                   {kTagToyShift, static_cast<std::uint64_t>(i)}));
        Vec b(q);
        for (int r = 0; r < q; ++r) b(r) = ss.gaussian();
        shifts.push_back(b);
    }

    std::vector<ComponentMap> comps;
    comps.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Mat A = mats[static_cast<std::size_t>(i)];
        const Vec b = shifts[static_cast<std::size_t>(i)];
        comps.push_back([A, b](const Vec& s) { return Vec(A * s - b); });
    }

    AssembledProblem ap;
    ap.oracle = exact_finite_sum_oracle(std::move(comps));
    ap.g = ProxFunction::indicator_ball(config.problem.radius, Vec::Zero(q));
    ap.s_init = Vec::Zero(q);
    ap.B_init = MetricOperator::identity(q);
    ap.n = n;
    Mat abar = Mat::Zero(q, q);
    Vec bbar = Vec::Zero(q);
    for (int i = 0; i < n; ++i) {
        abar += mats[static_cast<std::size_t>(i)];
        bbar += shifts[static_cast<std::size_t>(i)];
    }
    abar /= n;
    bbar /= n;
    ap.objective = [abar, bbar](const Vec& s) {
        return 0.5 * s.dot(abar * s) - bbar.dot(s);
    };
    return ap;
}

AssembledProblem assemble_fixture(const ExperimentConfig& config) {
    std::vector<double> y(static_cast<std::size_t>(config.problem.n));
    rng::Stream stream(rng::derive(config.problem.seed, {kTagFixtureData}));
    for (double& v : y)
        v = config.problem.theta_star_scalar + std::sqrt(2.0) * stream.gaussian();
    auto model = std::make_shared<GaussianGaussianModel>(std::move(y));

    AssembledProblem ap;
    ap.em_model = model;
    ap.oracle = em_field_oracle(model, true);
    ap.g = ProxFunction::zero();
    ap.s_init = Vec::Zero(1);
    ap.B_init = MetricOperator::identity(1);
    ap.n = config.problem.n;
    ap.objective = [model](const Vec& s) { return model->neg_log_likelihood(s(0)); };
    return ap;
}

}  // namespace

AssembledProblem assemble_problem(const ExperimentConfig& config) {
    switch (config.problem.type) {
        case ProblemSpec::Type::synthetic:
        case ProblemSpec::Type::file:
            return assemble_logreg(config);
        case ProblemSpec::Type::quadratic_toy:
            return assemble_quadratic_toy(config);
        case ProblemSpec::Type::gaussian_em_fixture:
            return assemble_fixture(config);
    }
    throw std::logic_error("unreachable problem type");
}

namespace {

double gamma_at_epoch(const std::vector<StepsizePiece>& pieces, double epoch) {
    double g = pieces.front().gamma;
    for (const auto& p : pieces) {
        if (epoch >= p.epoch_from - 1e-12)
            g = p.gamma;
        else
            break;
    }
    return g;
}

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct ReplicateRun {
    std::vector<TraceRecord> trace;
    std::int64_t oracle_calls = 0;
    std::int64_t mc_draws = 0;
    std::int64_t wall_ns = 0;
};

// EM and Online EM baselines: one prox'd SA step per iteration, full data
// or a fresh batch per step
ReplicateRun run_em_baseline(const AssembledProblem& ap,
                             const ExperimentConfig& config, std::uint64_t seed,
                             bool online) {
    if (!ap.em_model)
        throw ConfigError("algorithm", "EM baselines need an EM-capable problem");
    const CurvedExpFamilyModel& model = *ap.em_model;
    const int n = ap.n;
    const std::int64_t b = online ? config.run.b : n;
    const std::int64_t iters =
        online ? static_cast<std::int64_t>(
                     std::ceil(config.run.epochs * n / static_cast<double>(b)))
               : static_cast<std::int64_t>(std::ceil(config.run.epochs));
    const bool mc = !model.has_exact_posterior();

    ReplicateRun out;
    const std::int64_t start = now_ns();
    Vec s = ap.s_init;
    for (std::int64_t it = 0; it < iters; ++it) {
        const double epoch =
            static_cast<double>(it) * static_cast<double>(b) / n;
        const double gamma = gamma_at_epoch(config.run.stepsize, epoch);
        Vec next;
        if (online) {
            const auto batch = sample_batch(
                n, static_cast<int>(b), config.run.with_replacement,
                rng::derive(seed, {kTagEmBatch, static_cast<std::uint64_t>(it)}));
            next = online_em_step(model, s, gamma, ap.g, batch, config.oracle.mt,
                                  rng::derive(seed, {kTagEmIter,
                                                     static_cast<std::uint64_t>(it)}));
        } else {
            next = em_full_step(model, s, gamma, ap.g, config.oracle.mt,
                                rng::derive(seed, {kTagEmIter,
                                                   static_cast<std::uint64_t>(it)}));
        }
        out.oracle_calls += b;
        if (mc) out.mc_draws += config.oracle.mt * b;

        const MetricOperator B = model.induced_metric(s);
        const double delta = B.norm_sq(next - s) / (gamma * gamma);
        s = std::move(next);

        TraceRecord r;
        r.t = it + 1;
        r.k = 0;
        r.delta = delta;
        r.iterate_sq_norm = s.squaredNorm();
        if (ap.objective) r.objective = ap.objective(s);
        r.oracle_calls_cum = out.oracle_calls;
        r.prox_calls_cum = it + 1;
        r.epoch_fraction = static_cast<double>(out.oracle_calls) / n;
        r.wall_ns = config.record_walltime ? now_ns() - start : 0;
        out.trace.push_back(std::move(r));
    }
    out.wall_ns = config.record_walltime ? now_ns() - start : 0;
    return out;
}

ReplicateRun run_replicate(const AssembledProblem& ap,
                           const ExperimentConfig& config, int replicate) {
    const std::uint64_t seed = rng::derive(
        config.master_seed, {kTagReplicate, static_cast<std::uint64_t>(replicate)});
    if (config.algorithm == "em" || config.algorithm == "online_em")
        return run_em_baseline(ap, config, seed, config.algorithm == "online_em");

    const int n = ap.n;
    RunConfig rc;
    rc.batch_size = config.run.b;
    rc.with_replacement = config.run.with_replacement;
    rc.budgets.refresh = config.oracle.m0;
    rc.budgets.inner = config.oracle.mt;
    rc.budgets.growth_t = config.oracle.growth_t;
    rc.budgets.growth_k = config.oracle.growth_k;
    rc.master_seed = seed;
    rc.metric_fn = ap.metric_fn;
    rc.objective_fn = ap.objective;
    rc.record_walltime = config.record_walltime;

    RunResult rr;
    const std::int64_t start = now_ns();
    if (config.algorithm == "vmfb") {
        rc.kout = static_cast<std::int64_t>(
            std::ceil(config.run.epochs * n / static_cast<double>(config.run.b)));
        const auto pieces = config.run.stepsize;
        const std::int64_t b = config.run.b;
        rc.stepsize_schedule = [pieces, b, n](std::int64_t, std::int64_t k) {
            return gamma_at_epoch(pieces,
                                  static_cast<double>(k) * b / n);
        };
        rr = run_vmfb(rc, *ap.oracle, ap.g, ap.s_init);
    } else {
        const std::int64_t kin =
            config.run.kin > 0
                ? config.run.kin
                : static_cast<std::int64_t>(
                      std::ceil(n / static_cast<double>(config.run.b)));
        const std::int64_t bp = config.run.b_prime > 0 ? config.run.b_prime : n;
        const double outer_cost =
            static_cast<double>(bp) +
            2.0 * static_cast<double>(config.run.b) * static_cast<double>(kin - 1);
        rc.kout = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(
                   std::ceil(config.run.epochs * n / outer_cost)));
        rc.kin_schedule = [kin](std::int64_t) { return kin; };
        rc.b_prime_schedule = [bp](std::int64_t) { return bp; };
        rc.crn = config.algorithm == "spider_corr";
        const auto pieces = config.run.stepsize;
        const std::int64_t b = config.run.b;
        rc.stepsize_schedule = [pieces, b, n, bp, outer_cost](std::int64_t t,
                                                              std::int64_t k) {
            const double calls = static_cast<double>(t - 1) * outer_cost +
                                 static_cast<double>(bp) +
                                 (k >= 1 ? 2.0 * static_cast<double>(b * k) : 0.0);
            return gamma_at_epoch(pieces, calls / n);
        };
        rr = run_3p_spider(rc, *ap.oracle, ap.g, ap.s_init, ap.B_init);
    }

    ReplicateRun out;
    out.trace = std::move(rr.trace);
    out.oracle_calls = rr.oracle_calls;
    out.mc_draws = rr.mc_draws;
    out.wall_ns = config.record_walltime ? now_ns() - start : 0;
    return out;
}

ReplicateSummary summarize(const ReplicateRun& run, int replicate) {
    ReplicateSummary s;
    s.replicate = replicate;
    s.oracle_calls = run.oracle_calls;
    s.mc_draws = run.mc_draws;
    s.wall_ns = run.wall_ns;
    if (run.trace.empty()) return s;
    s.final_delta = run.trace.back().delta;
    const double last_epoch = run.trace.back().epoch_fraction;
    double acc = 0.0;
    int count = 0;
    for (const auto& r : run.trace) {
        if (r.epoch_fraction > last_epoch - 5.0) {
            acc += r.delta;
            ++count;
        }
    }
    s.last5_mean_delta = count > 0 ? acc / count : 0.0;
    return s;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

json envelope(const std::vector<double>& values) {
    json e;
    double mn = values.front(), mx = values.front(), acc = 0.0;
    for (double v : values) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        acc += v;
    }
    e["min"] = mn;
    e["mean"] = acc / static_cast<double>(values.size());
    e["max"] = mx;
    return e;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& outdir) {
    std::filesystem::create_directories(outdir);
    const AssembledProblem ap = assemble_problem(config);

    std::vector<std::future<ReplicateRun>> futures;
    futures.reserve(static_cast<std::size_t>(config.replicates));
    for (int r = 0; r < config.replicates; ++r)
        futures.push_back(std::async(std::launch::async, [&, r] {
            return run_replicate(ap, config, r);
        }));

    ExperimentOutcome outcome;
    std::vector<double> final_deltas;
    std::vector<double> last5;
    for (int r = 0; r < config.replicates; ++r) {
        const ReplicateRun run = futures[static_cast<std::size_t>(r)].get();
        std::ostringstream name;
        name << "trace_" << config.algorithm << "_" << r << ".csv";
        const auto path = outdir / name.str();
        write_trace_csv(path, run.trace);
        outcome.trace_files.push_back(path);
        const ReplicateSummary rs = summarize(run, r);
        outcome.replicates.push_back(rs);
        final_deltas.push_back(rs.final_delta);
        last5.push_back(rs.last5_mean_delta);
    }

    json summary;
    summary["algorithm"] = config.algorithm;
    summary["replicates"] = json::array();
    for (const auto& rs : outcome.replicates) {
        json jr;
        jr["replicate"] = rs.replicate;
        jr["final_delta"] = rs.final_delta;
        jr["last5_mean_delta"] = rs.last5_mean_delta;
        jr["oracle_calls"] = rs.oracle_calls;
        jr["mc_draws"] = rs.mc_draws;
        jr["wall_ns"] = rs.wall_ns;
        summary["replicates"].push_back(jr);
    }
    summary["envelope"]["final_delta"] = envelope(final_deltas);
    summary["envelope"]["last5_mean_delta"] = envelope(last5);
    outcome.median_last5_mean_delta = median(last5);
    summary["median_last5_mean_delta"] = outcome.median_last5_mean_delta;

    outcome.summary = summary;
    outcome.summary_file = outdir / "summary.json";
    std::ofstream out(outcome.summary_file, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + outcome.summary_file.string());
    out << summary.dump(2) << '\n';
    return outcome;
}

json compare(const std::vector<ExperimentConfig>& configs,
             const std::filesystem::path& outdir) {
    if (configs.empty()) throw ConfigError("compare", "no configs");
    for (const auto& c : configs) {
        if (c.problem.seed != configs.front().problem.seed ||
            c.problem.type != configs.front().problem.type)
            throw ConfigError("compare",
                              "configs must share the same problem and seed");
    }

    json merged;
    merged["algorithms"] = json::array();
    std::map<std::string, double> med;
    for (std::size_t idx = 0; idx < configs.size(); ++idx) {
        const auto& c = configs[idx];
        std::ostringstream sub;
        sub << "cfg" << idx << "_" << c.algorithm;
        const ExperimentOutcome oc = run_experiment(c, outdir / sub.str());
        json ja = oc.summary;
        ja["directory"] = sub.str();
        merged["algorithms"].push_back(ja);
        med[c.algorithm] = oc.median_last5_mean_delta;
    }

    if (med.count("spider_corr") && med.count("spider") && med.count("online_em")) {
        json verdict;
        verdict["median_last5"] = {{"spider_corr", med["spider_corr"]},
                                   {"spider", med["spider"]},
                                   {"online_em", med["online_em"]}};
        verdict["corr_le_plain"] = med["spider_corr"] <= med["spider"];
        verdict["plain_le_online"] = med["spider"] <= med["online_em"];
        verdict["corr_lt_online"] = med["spider_corr"] < med["online_em"];
        verdict["ordering_ok"] = verdict["corr_le_plain"].get<bool>() &&
                                 verdict["plain_le_online"].get<bool>() &&
                                 verdict["corr_lt_online"].get<bool>();
        merged["ordering_verdict"] = verdict;
    }

    std::ofstream out(outdir / "compare.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write compare.json");
    out << merged.dump(2) << '\n';
    return merged;
}

}  // namespace spider::exp
