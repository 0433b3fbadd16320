#include "abstain/rademacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "abstain/common.hpp"
#include "abstain/gamma.hpp"
#include "abstain/io/synthetic.hpp"
#include "abstain/oracles.hpp"
#include "abstain/problem_eval.hpp"

namespace abstain {

namespace {

Model family_model(const TrainConfig& cfg, int d, int outputs, std::uint64_t seed) {
    if (cfg.model_kind == Model::Kind::linear) {
        Model m = Model::linear_zero(d, outputs, cfg.clamp);
        m.seed = seed;
        return m;
    }
    return Model::mlp_seeded(d, outputs, cfg.hidden_width, cfg.clamp, seed);
}

}  // namespace

RademacherEstimate empirical_rademacher(const TabularDataset& sample, const TrainConfig& family,
                                        int sigma_draws, std::uint64_t seed,
                                        const AscentOptions& opts) {
    sample.validate();
    if (sigma_draws < 1)
        throw std::invalid_argument("empirical_rademacher: sigma_draws must be >= 1");
    if (!(family.clamp > 0.0))
        throw std::invalid_argument(
            "empirical_rademacher: family must be clamped, supremum may diverge otherwise");
    if (family.loss.kind != LossSelector::Kind::comp_sum)
        throw std::invalid_argument("empirical_rademacher: loss selector must be L_mu");
    const CompSumParams params(family.loss.mu);
    const CostModel cost(family.cost);

    RademacherEstimate est;
    est.sigma_draws = sigma_draws;
    est.per_draw.resize(static_cast<std::size_t>(sigma_draws));
    std::vector<double> residuals(static_cast<std::size_t>(sigma_draws), 0.0);

    Rng seeder(seed);
    std::vector<std::uint64_t> draw_seeds(static_cast<std::size_t>(sigma_draws));
    for (auto& s : draw_seeds) s = seeder.next_u64();

    parallel_chunks(static_cast<std::size_t>(sigma_draws), default_workers(),
                    [&](unsigned, std::size_t begin, std::size_t end) {
        std::vector<double> raw, hidden;
        for (std::size_t drawi = begin; drawi < end; ++drawi) {
            Rng rng(draw_seeds[drawi]);
            std::vector<double> sigma(static_cast<std::size_t>(sample.m));
            for (auto& s : sigma) s = rng.coin() ? 1.0 : -1.0;

            auto objective = [&](const Model& m, std::vector<double>* grad) {
                double acc = 0.0;
                for (int i = 0; i < sample.m; ++i) {
                    const std::span<const double> x(sample.row(i),
                                                    static_cast<std::size_t>(sample.d));
                    m.forward_raw(x, raw, &hidden);
                    std::vector<double> clamped = raw;
                    for (auto& v : clamped) v = std::clamp(v, -m.clamp, m.clamp);
                    ScoreVector s(clamped, sample.n);
                    const int y = sample.labels[static_cast<std::size_t>(i)];
                    const double sgn = sigma[static_cast<std::size_t>(i)];
                    acc += sgn * surrogate_L_mu(s, y, cost, params) / sample.m;
                    if (grad) {
                        auto ds = grad_surrogate_L_mu(s, y, cost, params);
                        // ascent: accumulate the negated gradient so a
                        // descent step maximizes
                        backprop(m, x, raw, hidden, ds, -sgn / sample.m, *grad);
                    }
                }
                return acc;
            };

            double best = -std::numeric_limits<double>::infinity();
            double late_gain = 0.0;
            for (int r = 0; r < opts.restarts; ++r) {
                Model m = family_model(family, sample.d, sample.n + 1, rng.next_u64());
                if (r > 0 && family.model_kind == Model::Kind::linear)
                    for (auto& v : m.w1) v = rng.uniform(-0.5, 0.5);
                std::vector<double> grad(m.parameter_count());
                double run_best = -std::numeric_limits<double>::infinity();
                double at_90 = 0.0;
                const int tail_mark = opts.steps - std::max(opts.steps / 10, 1);
                for (int step = 0; step < opts.steps; ++step) {
                    std::fill(grad.begin(), grad.end(), 0.0);
                    const double val = objective(m, &grad);
                    run_best = std::max(run_best, val);
                    if (step == tail_mark) at_90 = run_best;
                    apply_gradient(m, grad, opts.learning_rate, 0.0);
                }
                run_best = std::max(run_best, objective(m, nullptr));
                late_gain = std::max(late_gain, run_best - at_90);
                best = std::max(best, run_best);
            }
            est.per_draw[drawi] = best;
            residuals[drawi] = late_gain;
        }
    });

    double sum = 0.0;
    for (double v : est.per_draw) sum += v;
    est.value = sum / sigma_draws;
    for (double r : residuals) est.optimizer_residual = std::max(est.optimizer_residual, r);
    if (sigma_draws > 1) {
        double var = 0.0;
        for (double v : est.per_draw) var += (v - est.value) * (v - est.value);
        var /= (sigma_draws - 1);
        est.standard_error = std::sqrt(var / sigma_draws);
    }
    return est;
}

double loss_upper_bound(double mu, double cost, int n, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("loss_upper_bound: lambda must be > 0");
    const CompSumParams params(mu);
    const CostModel cm(cost);
    double b_ell;
    if (params.is_one()) {
        b_ell = 2.0 * lambda + std::log(static_cast<double>(n + 1));
    } else if (params.mu() < 1.0) {
        const double z = static_cast<double>(n + 1) * std::exp(2.0 * lambda);
        b_ell = (std::pow(z, 1.0 - params.mu()) - 1.0) / (1.0 - params.mu());
    } else {
        b_ell = 1.0 / (params.mu() - 1.0);
    }
    return (2.0 - cm.c()) * b_ell;
}

void FiniteSampleInput::validate() const {
    if (m < 1) throw std::invalid_argument("FiniteSampleInput: m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("FiniteSampleInput: delta must lie in (0,1)");
    if (!(B > 0.0)) throw std::invalid_argument("FiniteSampleInput: B must be > 0");
    if (!(R >= 0.0) || !(M_surrogate >= 0.0) || !(M_abstention >= 0.0))
        throw std::invalid_argument("FiniteSampleInput: R and gaps must be >= 0");
}

double assemble_bound(const FiniteSampleInput& input) {
    input.validate();
    const double deviation =
        2.0 * input.B * std::sqrt(std::log(2.0 / input.delta) / (2.0 * input.m));
    const double inner = 4.0 * input.R + deviation + input.M_surrogate;
    return gamma_mu(inner, input.mu, input.cost, input.n) - input.M_abstention;
}

CoverageRecord validate_bound(const DiscreteProblem& problem, const ValidateBoundConfig& cfg) {
    if (cfg.trials < 20) throw std::invalid_argument("validate_bound: at least 20 trials");
    if (!(cfg.erm.clamp > 0.0))
        throw std::invalid_argument("validate_bound: family must be clamped");
    if (!problem.has_features())
        throw std::invalid_argument("validate_bound: problem needs atom features");
    const CompSumParams params(cfg.erm.loss.mu);
    const int n = problem.n();
    const double c = problem.c();
    const double lambda = cfg.erm.clamp;

    CoverageRecord rec;
    rec.trials = cfg.trials;
    rec.m = cfg.m;
    rec.delta = cfg.delta;
    rec.B = loss_upper_bound(params.mu(), c, n, lambda);

    // Dense-training reference for the best-in-class risks.
    const auto dense = expand_problem_to_dataset(problem);
    double best_sur = std::numeric_limits<double>::infinity();
    double best_abs = std::numeric_limits<double>::infinity();
    {
        std::mutex mtx;
        parallel_chunks(static_cast<std::size_t>(cfg.reference_runs),
                        cfg.workers == 0 ? default_workers() : cfg.workers,
                        [&](unsigned, std::size_t begin, std::size_t end) {
            double local_sur = std::numeric_limits<double>::infinity();
            double local_abs = std::numeric_limits<double>::infinity();
            for (std::size_t r = begin; r < end; ++r) {
                TrainConfig ref = cfg.erm;
                ref.seed = cfg.seed + 1000 + r;
                ref.epochs = cfg.reference_epochs;
                const auto trained = train_single_stage(dense, ref);
                local_sur = std::min(local_sur, problem_surrogate_risk_single(
                                                    trained.model, problem, params));
                local_abs = std::min(local_abs, problem_abstention_risk_single(
                                                    trained.model, problem));
            }
            std::lock_guard<std::mutex> lock(mtx);
            best_sur = std::min(best_sur, local_sur);
            best_abs = std::min(best_abs, local_abs);
        });
        for (int r = 0; r < cfg.reference_runs; ++r)
            rec.reference_seeds.push_back(cfg.seed + 1000 + static_cast<std::uint64_t>(r));
    }
    rec.best_in_class_surrogate = best_sur;
    rec.best_in_class_abstention = best_abs;

    // Minimizability gaps of the clamped family: pointwise minima over
    // the score box per atom.
    double pointwise_sur = 0.0;
    for (const auto& atom : problem.atoms()) {
        MinRiskOptions opts;
        opts.box = lambda;
        opts.seed = cfg.seed ^ 0x5bd1e995ULL;
        pointwise_sur +=
            atom.weight * min_conditional_risk_surrogate(atom.dist, params, opts).value;
    }
    rec.m_surrogate = std::max(best_sur - pointwise_sur, 0.0);
    rec.m_abstention = std::max(best_abs - problem_bayes_abstention_risk(problem), 0.0);

    rec.per_trial.resize(static_cast<std::size_t>(cfg.trials));
    parallel_chunks(static_cast<std::size_t>(cfg.trials),
                    cfg.workers == 0 ? default_workers() : cfg.workers,
                    [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            CoverageTrial trial;
            const std::uint64_t trial_seed = cfg.seed + 77777ULL * (t + 1);
            const auto sample =
                sample_from_problem(problem, static_cast<int>(cfg.m), trial_seed);
            TrainConfig erm = cfg.erm;
            erm.seed = trial_seed ^ 0xffULL;
            TrainResult fit;
            try {
                fit = train_single_stage(sample, erm);
            } catch (const TrainingError&) {
                trial.erm_flagged = true;
                rec.per_trial[t] = trial;
                continue;
            }
            trial.excess = problem_abstention_risk_single(fit.model, problem) - best_abs;

            const auto rad = empirical_rademacher(sample, erm, cfg.sigma_draws,
                                                  trial_seed ^ 0xabcULL, cfg.ascent);
            FiniteSampleInput input;
            input.m = cfg.m;
            input.delta = cfg.delta;
            input.B = rec.B;
            // the true complexity is nonnegative (the class realizes
            // constants); draws can dip below zero under MC noise
            input.R = std::max(rad.value + rad.optimizer_residual + rad.standard_error, 0.0);
            input.mu = params.mu();
            input.cost = c;
            input.n = n;
            input.M_surrogate = rec.m_surrogate;
            input.M_abstention = rec.m_abstention;
            trial.bound = assemble_bound(input);
            trial.covered = trial.excess <= trial.bound;
            rec.per_trial[t] = trial;
        }
    });

    int covered = 0;
    for (const auto& t : rec.per_trial)
        if (t.covered) ++covered;
    rec.coverage = static_cast<double>(covered) / cfg.trials;
    rec.threshold =
        1.0 - cfg.delta - 2.0 * std::sqrt(std::log(1.0 / 0.05) / (2.0 * cfg.trials));
    rec.passed = rec.coverage >= rec.threshold;
    return rec;
}

}  // namespace abstain
