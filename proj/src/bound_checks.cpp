#include "abstain/bound_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "abstain/common.hpp"

namespace abstain {

void BoundCheckReport::merge(const BoundCheckReport& other) {
    trials += other.trials;
    violation_count += other.violation_count;
    for (const auto& v : other.violations) {
        if (violations.size() >= kMaxStoredViolations) break;
        violations.push_back(v);
    }
    max_slack = std::max(max_slack, other.max_slack);
    min_slack = std::min(min_slack, other.min_slack);
    oracle_failures += other.oracle_failures;
}

void BoundCheckReport::finish() { passed = violation_count == 0; }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoundCheckReport empty_report(std::string name) {
    BoundCheckReport r;
    r.name = std::move(name);
    r.max_slack = -kInf;
    r.min_slack = kInf;
    return r;
}

std::uint64_t trial_seed(std::uint64_t base, long trial) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

void record(BoundCheckReport& rep, const std::string& context, double lhs, double rhs,
            double tol) {
    rep.trials += 1;
    const double slack = rhs - lhs;
    rep.max_slack = std::max(rep.max_slack, slack);
    rep.min_slack = std::min(rep.min_slack, slack);
    if (lhs > rhs + tol) {
        rep.violation_count += 1;
        if (rep.violations.size() < BoundCheckReport::kMaxStoredViolations)
            rep.violations.push_back({context, lhs, rhs});
    }
}

// Surrogate calibration gap of a score vector, guarded against oracle
// non-convergence. Returns nullopt when the oracle came out worse than
// the sampled point itself.
std::optional<double> surrogate_gap(const ScoreVector& s, const ConditionalDistribution& dist,
                                    const CompSumParams& params, const MinRiskOptions& opts,
                                    double* slack_out) {
    const auto oracle = min_conditional_risk_surrogate(dist, params, opts);
    const double risk = conditional_risk_surrogate(s, dist, params);
    const double slack = 10.0 * oracle.residual + 1e-12;
    if (slack_out) *slack_out = slack;
    const double gap = risk - oracle.value;
    if (gap < -(slack + 1e-9)) return std::nullopt;
    return std::max(gap, 0.0);
}

// Scores for a stress draw: the pointwise-optimal assignment with the
// two leading categories tied or swapped, which is where the bounds
// are tight.
std::vector<double> stress_scores(const ConditionalDistribution& dist, double mu, Rng& rng) {
    const int n = dist.n();
    std::vector<double> h(static_cast<std::size_t>(n) + 1, 0.0);
    const double power = mu < 2.0 ? 1.0 / (2.0 - mu) : 1.0;
    for (int y = 1; y <= n + 1; ++y) {
        const double p = dist.p_plus(y);
        h[static_cast<std::size_t>(y - 1)] = p > 0.0 ? power * std::log(p) : -40.0;
    }
    // top two categories by p+
    int a = 1, b = 2;
    if (dist.p_plus(b) > dist.p_plus(a)) std::swap(a, b);
    for (int y = 3; y <= n + 1; ++y) {
        if (dist.p_plus(y) > dist.p_plus(a)) {
            b = a;
            a = y;
        } else if (dist.p_plus(y) > dist.p_plus(b)) {
            b = y;
        }
    }
    const double mid =
        0.5 * (h[static_cast<std::size_t>(a - 1)] + h[static_cast<std::size_t>(b - 1)]);
    const double eps = rng.uniform(0.0, 0.05);
    h[static_cast<std::size_t>(a - 1)] = mid - eps;  // demote the leader slightly
    h[static_cast<std::size_t>(b - 1)] = mid + eps;
    return h;
}

template <typename TrialFn>
BoundCheckReport run_trials(std::string name, long trials, unsigned workers, TrialFn&& fn) {
    auto total = empty_report(name);
    std::mutex mu;
    parallel_chunks(static_cast<std::size_t>(trials),
                    workers == 0 ? default_workers() : workers,
                    [&](unsigned, std::size_t begin, std::size_t end) {
                        auto part = empty_report(name);
                        for (std::size_t t = begin; t < end; ++t)
                            fn(static_cast<long>(t), part);
                        std::lock_guard<std::mutex> lock(mu);
                        total.merge(part);
                    });
    total.finish();
    return total;
}

}  // namespace

BoundCheckReport check_theorem_3_1(const CompSumParams& params, const CostModel& cost, int n,
                                   const SamplerConfig& cfg) {
    if (cfg.trials <= 0) throw std::invalid_argument("check_theorem_3_1: trials must be > 0");
    const GammaTransform gamma_raw = gamma_mu_transform(params.mu(), cost.c(), n);
    // mutation control scales the transform value itself
    auto gamma = [&](double t) { return cfg.gamma_scale * gamma_raw(t); };

    std::ostringstream label;
    label << "thm3.1 mu=" << params.mu() << " c=" << cost.c() << " n=" << n;

    auto pointwise = run_trials(label.str(), cfg.trials, cfg.workers,
                                [&](long t, BoundCheckReport& rep) {
        Rng rng(trial_seed(cfg.seed, t));
        ConditionalDistribution dist(rng.simplex(static_cast<std::size_t>(n)), cost);
        std::vector<double> raw(static_cast<std::size_t>(n) + 1);
        const bool stress = rng.uniform() < cfg.stress_fraction;
        if (stress)
            raw = stress_scores(dist, params.mu(), rng);
        else
            for (auto& v : raw) v = rng.uniform(-cfg.score_range, cfg.score_range);
        ScoreVector s(raw, n);

        MinRiskOptions opts = cfg.oracle;
        opts.seed = trial_seed(cfg.seed ^ 0x517cc1b727220a95ULL, t);
        double slack = 0.0;
        const auto gap = surrogate_gap(s, dist, params, opts, &slack);
        if (!gap) {
            rep.oracle_failures += 1;
            return;
        }
        const double lhs = abstention_calibration_gap(predict_label(s), dist);
        const double rhs = gamma(*gap + slack);
        std::ostringstream ctx;
        ctx << (stress ? "stress" : "uniform") << " trial " << t;
        record(rep, ctx.str(), lhs, rhs, cfg.tolerance);
    });

    // Expectation form over random discrete problems: exact weighted
    // sums over atoms, no sampling error inside a check.
    auto expectation =
        run_trials(label.str() + " expectation", cfg.expectation_problems, cfg.workers,
                   [&](long t, BoundCheckReport& rep) {
        Rng rng(trial_seed(cfg.seed ^ 0xd1b54a32d192ed03ULL, t));
        const auto weights = rng.simplex(static_cast<std::size_t>(cfg.atoms_per_problem));
        double lhs = 0.0, sur = 0.0, slack_sum = 0.0;
        for (int a = 0; a < cfg.atoms_per_problem; ++a) {
            ConditionalDistribution dist(rng.simplex(static_cast<std::size_t>(n)), cost);
            std::vector<double> raw(static_cast<std::size_t>(n) + 1);
            for (auto& v : raw) v = rng.uniform(-cfg.score_range, cfg.score_range);
            ScoreVector s(raw, n);
            MinRiskOptions opts = cfg.oracle;
            opts.seed = trial_seed(cfg.seed ^ 0x2545f4914f6cdd1dULL, t * 64 + a);
            double slack = 0.0;
            const auto gap = surrogate_gap(s, dist, params, opts, &slack);
            if (!gap) {
                rep.oracle_failures += 1;
                return;
            }
            const double w = weights[static_cast<std::size_t>(a)];
            lhs += w * abstention_calibration_gap(predict_label(s), dist);
            sur += w * *gap;
            slack_sum += w * slack;
        }
        record(rep, "expectation problem " + std::to_string(t), lhs,
               gamma(sur + slack_sum), cfg.tolerance);
    });

    pointwise.merge(expectation);
    pointwise.finish();
    return pointwise;
}

BoundCheckReport check_theorem_3_3(const GammaTransform& base_gamma,
                                   const CompSumParams& base_loss, const CostModel& cost,
                                   int n, const SamplerConfig& cfg) {
    if (cfg.trials <= 0) throw std::invalid_argument("check_theorem_3_3: trials must be > 0");
    const GammaTransform transformed_raw = transform_bound(base_gamma, cost.c());
    auto transformed = [&](double t) { return cfg.gamma_scale * transformed_raw(t); };

    std::ostringstream label;
    label << "thm3.3 base=" << base_gamma.describe() << " mu=" << base_loss.mu()
          << " c=" << cost.c() << " n=" << n;

    return run_trials(label.str(), cfg.trials, cfg.workers,
                      [&](long t, BoundCheckReport& rep) {
        Rng rng(trial_seed(cfg.seed, t));
        const auto weights = rng.simplex(static_cast<std::size_t>(cfg.atoms_per_problem));
        double lhs = 0.0, sur = 0.0, slack_sum = 0.0;
        for (int a = 0; a < cfg.atoms_per_problem; ++a) {
            ConditionalDistribution dist(rng.simplex(static_cast<std::size_t>(n)), cost);
            std::vector<double> raw(static_cast<std::size_t>(n) + 1);
            const bool stress = rng.uniform() < cfg.stress_fraction;
            if (stress)
                raw = stress_scores(dist, base_loss.mu(), rng);
            else
                for (auto& v : raw) v = rng.uniform(-cfg.score_range, cfg.score_range);
            ScoreVector s(raw, n);
            MinRiskOptions opts = cfg.oracle;
            opts.seed = trial_seed(cfg.seed ^ 0x9e6c63d0876a9a41ULL, t * 64 + a);
            double slack = 0.0;
            const auto gap = surrogate_gap(s, dist, base_loss, opts, &slack);
            if (!gap) {
                rep.oracle_failures += 1;
                return;
            }
            const double w = weights[static_cast<std::size_t>(a)];
            lhs += w * abstention_calibration_gap(predict_label(s), dist);
            sur += w * *gap;
            slack_sum += w * slack;
        }
        // (2-c) * Gamma((t + slack)/(2-c)) == transformed(t + slack)
        record(rep, "problem " + std::to_string(t), lhs, transformed(sur + slack_sum),
               cfg.tolerance);
    });
}

double two_stage_conditional_risk(double p_err, double cost, double t,
                                  const MarginFunction& phi) {
    return p_err * phi(t) + cost * phi(-t);
}

double two_stage_conditional_risk_min(double p_err, double cost, const MarginFunction& phi) {
    if (p_err <= 0.0) return 0.0;  // infimum as t -> -inf
    if (phi.kind() == MarginFunction::Kind::exponential) return 2.0 * std::sqrt(p_err * cost);
    // logistic: optimum at t* = log(p_err / c)
    const double t_star = std::log(p_err / cost);
    return two_stage_conditional_risk(p_err, cost, t_star, phi);
}

double two_stage_bound_rhs(const GammaTransform& gamma1, const GammaTransform& gamma2,
                           double stage1, double stage2, double cost) {
    return gamma1(stage1) + (gamma2.is_linear() ? gamma2(stage2)
                                                : (1.0 + cost) * gamma2(stage2 / cost));
}

BoundCheckReport check_theorem_4_1(const DiscreteProblem& problem, const GammaTransform& gamma1,
                                   const GammaTransform& gamma2, const MarginFunction& phi,
                                   const SamplerConfig& cfg) {
    if (cfg.trials <= 0) throw std::invalid_argument("check_theorem_4_1: trials must be > 0");
    gamma1.validate();
    gamma2.validate();
    const int n = problem.n();
    const double c = problem.c();

    std::ostringstream label;
    label << "thm4.1 c=" << c << " n=" << n
          << " phi=" << (phi.kind() == MarginFunction::Kind::exponential ? "exp" : "logistic");

    return run_trials(label.str(), cfg.trials, cfg.workers,
                      [&](long t, BoundCheckReport& rep) {
        Rng rng(trial_seed(cfg.seed, t));
        double lhs = 0.0, stage1 = 0.0, stage2 = 0.0;
        // Stress trials put every atom just below the abstention
        // boundary at a near-optimal predictor, where the bound is
        // tight; deciding per trial keeps the atom sums correlated.
        const bool stress = rng.uniform() < cfg.stress_fraction;
        for (const auto& atom : problem.atoms()) {
            const auto& p = atom.dist.p();
            std::vector<double> hy(static_cast<std::size_t>(n));
            double rej;
            if (stress) {
                for (int y = 0; y < n; ++y)
                    hy[static_cast<std::size_t>(y)] =
                        (p[static_cast<std::size_t>(y)] > 0.0
                             ? std::log(p[static_cast<std::size_t>(y)])
                             : -30.0) +
                        rng.uniform(-0.005, 0.005);
                rej = *std::max_element(hy.begin(), hy.end()) + rng.uniform(-0.02, 0.0005);
            } else {
                for (auto& v : hy) v = rng.uniform(-cfg.score_range, cfg.score_range);
                rej = rng.uniform(-cfg.score_range, cfg.score_range);
            }

            int pred = 1;
            double best = hy[0];
            for (int y = 2; y <= n; ++y)
                if (hy[static_cast<std::size_t>(y - 1)] > best) {
                    best = hy[static_cast<std::size_t>(y - 1)];
                    pred = y;
                }
            const int decision = rej >= best ? n + 1 : pred;
            lhs += atom.weight * abstention_calibration_gap(decision, atom.dist);

            // first stage: n-class logistic gap = KL(p || softmax(hy))
            const auto q = softmax(std::span<const double>(hy));
            double kl = 0.0;
            for (int y = 0; y < n; ++y) {
                const double py = p[static_cast<std::size_t>(y)];
                if (py > 0.0) kl += py * (std::log(py) - std::log(q[static_cast<std::size_t>(y)]));
            }
            stage1 += atom.weight * std::max(kl, 0.0);

            // second stage at the frozen predictor
            const double p_err = 1.0 - p[static_cast<std::size_t>(pred - 1)];
            const double risk = two_stage_conditional_risk(p_err, c, rej - best, phi);
            const double risk_min = two_stage_conditional_risk_min(p_err, c, phi);
            stage2 += atom.weight * std::max(risk - risk_min, 0.0);
        }
        // mutation scales the second-stage transform's value
        const double rhs_raw = two_stage_bound_rhs(gamma1, gamma2, stage1, stage2, c);
        const double rhs = gamma1(stage1) + cfg.gamma_scale * (rhs_raw - gamma1(stage1));
        record(rep, "assignment " + std::to_string(t), lhs, rhs, cfg.tolerance);
    });
}

double CalibrationCurve::envelope_at_bin(std::size_t i) const {
    double best = 0.0;
    for (std::size_t j = 0; j <= i && j < max_target.size(); ++j)
        if (max_target[j]) best = std::max(best, *max_target[j]);
    return best;
}

namespace {

CalibrationCurve bin_samples(const std::vector<std::pair<double, double>>& samples, int bins) {
    CalibrationCurve curve;
    curve.samples = static_cast<long>(samples.size());
    double max_x = 0.0;
    for (const auto& [x, y] : samples) {
        max_x = std::max(max_x, x);
        if (y > 1e-12 && x > 0.0) curve.fitted_sqrt_k = std::max(curve.fitted_sqrt_k, y * y / x);
    }
    if (max_x <= 0.0) max_x = 1.0;
    curve.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        curve.bin_edges[static_cast<std::size_t>(i)] = max_x * i / bins;
    curve.max_target.assign(static_cast<std::size_t>(bins), std::nullopt);
    for (const auto& [x, y] : samples) {
        auto idx = static_cast<std::size_t>(std::min<int>(
            bins - 1, static_cast<int>(x / max_x * bins)));
        if (!curve.max_target[idx] || y > *curve.max_target[idx]) curve.max_target[idx] = y;
    }
    return curve;
}

}  // namespace

CalibrationCurve estimate_calibration_abstention(const CompSumParams& params,
                                                 const CostModel& cost, int n,
                                                 const SamplerConfig& cfg) {
    if (cfg.trials <= 0)
        throw std::invalid_argument("estimate_calibration_abstention: trials must be > 0");
    std::vector<std::pair<double, double>> samples(static_cast<std::size_t>(cfg.trials),
                                                   {0.0, 0.0});
    std::vector<char> ok(static_cast<std::size_t>(cfg.trials), 1);
    parallel_chunks(static_cast<std::size_t>(cfg.trials),
                    cfg.workers == 0 ? default_workers() : cfg.workers,
                    [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng(trial_seed(cfg.seed, static_cast<long>(t)));
            ConditionalDistribution dist(rng.simplex(static_cast<std::size_t>(n)), cost);
            std::vector<double> raw(static_cast<std::size_t>(n) + 1);
            const bool stress = rng.uniform() < cfg.stress_fraction;
            if (stress)
                raw = stress_scores(dist, params.mu(), rng);
            else
                for (auto& v : raw) v = rng.uniform(-cfg.score_range, cfg.score_range);
            ScoreVector s(raw, n);
            MinRiskOptions opts = cfg.oracle;
            opts.seed = trial_seed(cfg.seed ^ 0x8cb92ba72f3d8dd7ULL, static_cast<long>(t));
            double slack = 0.0;
            const auto gap = surrogate_gap(s, dist, params, opts, &slack);
            if (!gap) {
                ok[t] = 0;
                continue;
            }
            samples[t] = {*gap, abstention_calibration_gap(predict_label(s), dist)};
        }
    });
    std::vector<std::pair<double, double>> kept;
    kept.reserve(samples.size());
    for (std::size_t t = 0; t < samples.size(); ++t)
        if (ok[t]) kept.push_back(samples[t]);
    if (kept.empty())
        throw std::runtime_error("estimate_calibration_abstention: no usable samples");
    return bin_samples(kept, 40);
}

CalibrationCurve estimate_calibration_binary(const MarginFunction& phi,
                                             const SamplerConfig& cfg) {
    if (cfg.trials <= 0)
        throw std::invalid_argument("estimate_calibration_binary: trials must be > 0");
    std::vector<std::pair<double, double>> samples;
    samples.reserve(static_cast<std::size_t>(cfg.trials));
    Rng rng(cfg.seed);
    for (long t = 0; t < cfg.trials; ++t) {
        const double eta = rng.uniform();
        const bool stress = rng.uniform() < cfg.stress_fraction;
        double score;
        if (stress) {
            // just on the wrong side of the zero-one decision boundary
            const double wrong_sign = eta >= 0.5 ? -1.0 : 1.0;
            score = wrong_sign * rng.uniform(1e-4, 0.2);
        } else {
            score = rng.uniform(-cfg.score_range, cfg.score_range);
        }
        // binary target: predict +1 iff score >= 0; risks 1-eta / eta
        const double target_risk = score >= 0.0 ? 1.0 - eta : eta;
        const double target_gap = target_risk - std::min(eta, 1.0 - eta);
        const double sur = eta * phi(score) + (1.0 - eta) * phi(-score);
        double sur_min;
        if (phi.kind() == MarginFunction::Kind::exponential) {
            sur_min = 2.0 * std::sqrt(eta * (1.0 - eta));
        } else {
            // binary cross-entropy in bits
            auto h = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
            sur_min = h(eta) + h(1.0 - eta);
        }
        samples.emplace_back(std::max(sur - sur_min, 0.0), target_gap);
    }
    return bin_samples(samples, 40);
}

GammaTransform gamma_from_envelope(const CalibrationCurve& curve, double pad) {
    if (curve.fitted_sqrt_k <= 0.0)
        throw std::invalid_argument("gamma_from_envelope: degenerate envelope");
    return GammaTransform::sqrt(curve.fitted_sqrt_k * (1.0 + pad));
}

ApproxVsGapRecord approx_vs_gap_demo(double lambda, double eta) {
    if (!(lambda > 0.0)) throw std::invalid_argument("approx_vs_gap_demo: lambda must be > 0");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("approx_vs_gap_demo: eta must lie in [0, 1]");
    ApproxVsGapRecord rec;
    rec.unbounded_inf = 2.0 * std::sqrt(eta * (1.0 - eta));
    const double hi = std::max(eta, 1.0 - eta), lo = std::min(eta, 1.0 - eta);
    const double threshold = (eta <= 0.0 || eta >= 1.0)
                                 ? kInf
                                 : 0.5 * std::abs(std::log(eta / (1.0 - eta)));
    rec.bounded_inf = lambda < threshold
                          ? hi * std::exp(-lambda) + lo * std::exp(lambda)
                          : rec.unbounded_inf;
    rec.difference = rec.bounded_inf - rec.unbounded_inf;
    return rec;
}

}  // namespace abstain
