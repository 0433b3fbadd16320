#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "abstain/distribution.hpp"

namespace abstain {

struct MinRiskOptions {
    int starts = 5;
    int max_iters = 20000;
    double grad_tol = 1e-10;
    double box = 0.0;  // > 0: constrain logits to [-box, +box] (clamped families)
    std::uint64_t seed = 0x5eedULL;
};

struct MinRiskResult {
    double value = 0.0;
    std::vector<double> softmax;  // argmin softmax over the n+1 categories
    double residual = 0.0;        // final gradient infinity-norm at the best start
    bool converged = false;
    int iterations = 0;
};

/// Minimizes the conditional surrogate risk Σ_y p⁺[y] ℓ_μ(s, y) over
/// score vectors (logit n+1 pinned to 0; translation invariance makes
/// it redundant). Multi-start adaptive descent; start #1 is the
/// analytic stationary candidate, the rest are random. Non-convergence
/// is flagged and the best value found is still returned.
MinRiskResult min_conditional_risk_surrogate(const ConditionalDistribution& dist,
                                             const CompSumParams& params,
                                             const MinRiskOptions& opts = {});

/// E*_{L_μ} − M_{L_μ} of the deterministic case in closed form:
///   μ=1:  log(2−c) + (1−c)·log((2−c)/(1−c))
///   μ≥2:  (1−c)/(μ−1)
///   else: (1/(1−μ))·[(1+(1−c)^{1/(2−μ)})^{2−μ} − (2−c)]
/// The μ>2 branch is the vertex value: the interior stationary point is
/// a maximum there, so the displayed general form only applies below 2.
double closed_form_V(double mu, double cost);

/// Softmax mass on (y_max, n+1) at the deterministic-case optimum:
/// μ<2: (1, u)/(1+u) with u = (1−c)^{1/(2−μ)}; μ≥2: (1, 0).
std::pair<double, double> optimal_softmax_deterministic(double mu, double cost);

struct GapReport {
    double mu = 0.0;
    double c = 0.0;
    double closed_form_v = 0.0;  // NaN when the problem is not deterministic
    double numeric_v = 0.0;      // Σ_atoms w · pointwise oracle minimum
    double gap_estimate = 0.0;   // E*(family) − numeric_v
    std::pair<double, double> optimal_softmax{0.0, 0.0};
    double oracle_residual = 0.0;
    bool converged = true;
};

/// Hypothesis family descriptor for gap computations. The trained-model
/// families live in the finite-sample module; here a family is either
/// every score assignment (symmetric and complete) or a fixed singleton
/// assignment per atom.
struct FamilyDescriptor {
    enum class Kind { symmetric_complete, singleton };
    Kind kind = Kind::symmetric_complete;
    std::vector<std::vector<double>> singleton_scores;  // one (n+1)-vector per atom

    static FamilyDescriptor symmetric_complete() { return {}; }
    static FamilyDescriptor singleton(std::vector<std::vector<double>> scores);
};

/// M = E*_{L_μ}(family) − Σ_atoms w·min conditional risk, packaged with
/// the deterministic-case diagnostics.
GapReport minimizability_gap(const DiscreteProblem& problem, const FamilyDescriptor& family,
                             const CompSumParams& params, const MinRiskOptions& opts = {});

}  // namespace abstain
