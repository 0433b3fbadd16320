#include "abstain/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "abstain/common.hpp"

namespace abstain {

namespace {

// Conditional risk and its gradient. Unconstrained minimization pins
// the rejection logit to 0 (translation redundancy); box-constrained
// minimization keeps all n+1 logits free and projects onto the box,
// since pinning would misrepresent the clamped score set.
struct RiskObjective {
    const ConditionalDistribution& dist;
    double mu;
    bool pin_rejection;

    int free_dims() const { return dist.n() + (pin_rejection ? 0 : 1); }

    std::vector<double> scores_of(const std::vector<double>& h) const {
        std::vector<double> scores(h);
        if (pin_rejection) scores.push_back(0.0);
        return scores;
    }

    double value(const std::vector<double>& h) const {
        ScoreVector s(scores_of(h), dist.n());
        return conditional_risk_surrogate(s, dist, CompSumParams(mu));
    }

    // d/dh_k = sigma_k * S - p+_k * w_k  with  w_y = e^{(1-mu) z_y}
    void gradient(const std::vector<double>& h, std::vector<double>& g) const {
        const int n = dist.n();
        const auto scores = scores_of(h);
        const double lse = logsumexp(scores);
        double big_s = 0.0;
        std::vector<double> w(static_cast<std::size_t>(n) + 1);
        for (int y = 1; y <= n + 1; ++y) {
            const double z = lse - scores[static_cast<std::size_t>(y - 1)];
            w[static_cast<std::size_t>(y - 1)] = std::exp((1.0 - mu) * z);
            big_s += dist.p_plus(y) * w[static_cast<std::size_t>(y - 1)];
        }
        for (int k = 1; k <= free_dims(); ++k) {
            const double sig = std::exp(scores[static_cast<std::size_t>(k - 1)] - lse);
            g[static_cast<std::size_t>(k - 1)] =
                sig * big_s - dist.p_plus(k) * w[static_cast<std::size_t>(k - 1)];
        }
    }
};

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// iRprop-: per-coordinate sign-adaptive steps. Robust to the huge
// dynamic range of the gradient across mu regimes and to the vanishing
// gradients on the vertex approach for mu >= 2.
struct RpropResult {
    std::vector<double> h;
    double value;
    double grad_norm;
    int iters;
    bool converged;
};

RpropResult rprop_minimize(const RiskObjective& obj, std::vector<double> h,
                           const MinRiskOptions& opts) {
    const int d = obj.free_dims();
    std::vector<double> g(d, 0.0), prev_g(d, 0.0), step(d, 0.25);
    const double kLogitCap = opts.box > 0.0 ? opts.box : 200.0;

    std::vector<double> best_h = h;
    double best_val = obj.value(h);
    double gnorm = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        obj.gradient(h, g);
        gnorm = inf_norm(g);
        if (gnorm < opts.grad_tol) break;
        for (int k = 0; k < d; ++k) {
            const double prod = g[k] * prev_g[k];
            if (prod > 0.0)
                step[k] = std::min(step[k] * 1.2, 5.0);
            else if (prod < 0.0) {
                step[k] = std::max(step[k] * 0.5, 1e-14);
                g[k] = 0.0;  // hold this coordinate for one iteration
            }
            double next = h[static_cast<std::size_t>(k)];
            if (g[k] > 0.0)
                next -= step[k];
            else if (g[k] < 0.0)
                next += step[k];
            h[static_cast<std::size_t>(k)] = std::clamp(next, -kLogitCap, kLogitCap);
            prev_g[k] = g[k];
        }
        const double val = obj.value(h);
        if (val < best_val) {
            best_val = val;
            best_h = h;
        }
    }
    // Report the residual at the best point visited, not the last iterate.
    obj.gradient(best_h, g);
    return {std::move(best_h), best_val, inf_norm(g), it, gnorm < opts.grad_tol};
}

// Stationary candidate: sigma* proportional to (p+)^{1/(2-mu)} for
// mu < 2; the vertex at argmax p+ for mu >= 2.
std::vector<double> analytic_start(const ConditionalDistribution& dist, double mu,
                                   double cap) {
    const int n = dist.n();
    std::vector<double> h(static_cast<std::size_t>(n), 0.0);
    const double push = std::min(cap, 45.0);
    if (mu < 2.0) {
        const double pow_inv = 1.0 / (2.0 - mu);
        const double ref = std::log(dist.p_plus(n + 1));  // 1-c > 0 always
        for (int y = 1; y <= n; ++y) {
            const double py = dist.p_plus(y);
            h[static_cast<std::size_t>(y - 1)] =
                py > 0.0 ? std::clamp(pow_inv * (std::log(py) - ref), -push, push) : -push;
        }
    } else {
        int arg = n + 1;
        double best = dist.p_plus(n + 1);
        for (int y = 1; y <= n; ++y)
            if (dist.p_plus(y) > best) {
                best = dist.p_plus(y);
                arg = y;
            }
        if (arg == n + 1)
            std::fill(h.begin(), h.end(), -push);
        else
            h[static_cast<std::size_t>(arg - 1)] = push;
    }
    return h;
}

}  // namespace

MinRiskResult min_conditional_risk_surrogate(const ConditionalDistribution& dist,
                                             const CompSumParams& params,
                                             const MinRiskOptions& opts) {
    const RiskObjective obj{dist, params.mu(), opts.box <= 0.0};
    const double cap = opts.box > 0.0 ? opts.box : 200.0;
    Rng rng(opts.seed);

    MinRiskResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(opts.starts, 1); ++s) {
        std::vector<double> h0;
        if (s == 0 && opts.box == 0.0) {
            h0 = analytic_start(dist, params.mu(), cap);
        } else {
            h0.resize(static_cast<std::size_t>(obj.free_dims()));
            for (auto& v : h0) v = rng.uniform(-std::min(3.0, cap), std::min(3.0, cap));
        }
        auto r = rprop_minimize(obj, std::move(h0), opts);
        if (r.value < best.value ||
            (r.value == best.value && r.grad_norm < best.residual)) {
            best.value = r.value;
            best.residual = r.grad_norm;
            best.converged = r.converged;
            best.iterations = r.iters;
            best.softmax = softmax(obj.scores_of(r.h));
        }
    }
    return best;
}

double closed_form_V(double mu, double cost) {
    if (!(mu >= 0.0)) throw std::invalid_argument("closed_form_V: mu must be >= 0");
    const CostModel cm(cost);
    const double c = cm.c();
    const CompSumParams params(mu);
    if (params.is_one()) return std::log(2.0 - c) + (1.0 - c) * std::log((2.0 - c) / (1.0 - c));
    if (params.mu() >= 2.0) return (1.0 - c) / (params.mu() - 1.0);
    const double m = params.mu();
    const double u = std::pow(1.0 - c, 1.0 / (2.0 - m));
    return (std::pow(1.0 + u, 2.0 - m) - (2.0 - c)) / (1.0 - m);
}

std::pair<double, double> optimal_softmax_deterministic(double mu, double cost) {
    const CompSumParams params(mu);
    if (params.mu() >= 2.0) return {1.0, 0.0};
    const double u = std::pow(1.0 - cost, 1.0 / (2.0 - params.mu()));
    return {1.0 / (1.0 + u), u / (1.0 + u)};
}

FamilyDescriptor FamilyDescriptor::singleton(std::vector<std::vector<double>> scores) {
    FamilyDescriptor f;
    f.kind = Kind::singleton;
    f.singleton_scores = std::move(scores);
    return f;
}

GapReport minimizability_gap(const DiscreteProblem& problem, const FamilyDescriptor& family,
                             const CompSumParams& params, const MinRiskOptions& opts) {
    GapReport report;
    report.mu = params.mu();
    report.c = problem.c();

    bool deterministic = true;
    double inner = 0.0, residual = 0.0;
    bool converged = true;
    bool first = true;
    MinRiskOptions atom_opts = opts;
    for (const auto& atom : problem.atoms()) {
        deterministic = deterministic && atom.dist.deterministic();
        atom_opts.seed = opts.seed * 0x9e3779b97f4a7c15ULL + 1;
        const auto r = min_conditional_risk_surrogate(atom.dist, params, atom_opts);
        inner += atom.weight * r.value;
        residual = std::max(residual, r.residual);
        converged = converged && r.converged;
        if (first) {
            const int ymax = chow_decision(atom.dist);
            report.optimal_softmax = {r.softmax[static_cast<std::size_t>(ymax - 1)],
                                      r.softmax.back()};
            first = false;
        }
    }

    double best_in_class = 0.0;
    if (family.kind == FamilyDescriptor::Kind::symmetric_complete) {
        // The family realizes every per-atom assignment, so the best
        // joint risk is the weighted sum of independently re-solved
        // pointwise minima (distinct seed as the second route).
        MinRiskOptions route_b = opts;
        route_b.seed = opts.seed ^ 0xabcdef12345678ULL;
        for (const auto& atom : problem.atoms()) {
            const auto r = min_conditional_risk_surrogate(atom.dist, params, route_b);
            best_in_class += atom.weight * r.value;
            converged = converged && r.converged;
        }
    } else {
        if (family.singleton_scores.size() != problem.atoms().size())
            throw std::invalid_argument("minimizability_gap: one score vector per atom required");
        for (std::size_t i = 0; i < problem.atoms().size(); ++i) {
            ScoreVector s(family.singleton_scores[i], problem.n());
            best_in_class +=
                problem.atoms()[i].weight *
                conditional_risk_surrogate(s, problem.atoms()[i].dist, params);
        }
    }

    report.numeric_v = inner;
    report.gap_estimate = best_in_class - inner;
    report.closed_form_v = deterministic ? closed_form_V(params.mu(), problem.c())
                                         : std::numeric_limits<double>::quiet_NaN();
    report.oracle_residual = residual;
    report.converged = converged;
    return report;
}

}  // namespace abstain
