#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abstain/distribution.hpp"
#include "abstain/gamma.hpp"
#include "abstain/oracles.hpp"

namespace abstain {

struct BoundViolation {
    std::string context;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct BoundCheckReport {
    std::string name;
    long trials = 0;
    long violation_count = 0;
    std::vector<BoundViolation> violations;  // first kMaxStoredViolations kept
    double max_slack = 0.0;
    double min_slack = 0.0;
    long oracle_failures = 0;
    bool passed = false;

    static constexpr std::size_t kMaxStoredViolations = 50;
    void merge(const BoundCheckReport& other);
    void finish();
};

struct SamplerConfig {
    long trials = 10000;
    std::uint64_t seed = 1;
    double score_range = 5.0;
    /// Fraction of draws placed near the tight region of the bound
    /// (optimal assignment with the top two categories swapped or
    /// tied). 0 reproduces the plain uniform measure.
    double stress_fraction = 0.1;
    double tolerance = 1e-9;
    /// Mutation control: scales the constant of the bound transform.
    double gamma_scale = 1.0;
    long expectation_problems = 50;
    int atoms_per_problem = 5;
    unsigned workers = 0;  // 0: use default_workers()
    MinRiskOptions oracle;
};

/// Pointwise + expectation form of the cross-entropy abstention bound:
/// ΔC_abs ≤ Γ_μ(ΔC_{L_μ}) on random (p, scores) draws.
BoundCheckReport check_theorem_3_1(const CompSumParams& params, const CostModel& cost, int n,
                                   const SamplerConfig& cfg);

/// Expectation form of the transformed bound of a standard-loss pair:
/// given a base Γ valid for (ℓ_μ, zero-one) over n+1 categories, checks
/// Σw·ΔC_abs ≤ (2−c)Γ(Σw·ΔC_L/(2−c)) with L the induced surrogate.
BoundCheckReport check_theorem_3_3(const GammaTransform& base_gamma,
                                   const CompSumParams& base_loss, const CostModel& cost,
                                   int n, const SamplerConfig& cfg);

/// Two-stage bound: Σw·ΔC_abs ≤ Γ1(first-stage gap) + (1+c)Γ2(second/c),
/// the constant factors dropped when Γ2 is linear. First stage is the
/// n-class logistic loss; stage assignments are sampled per atom.
BoundCheckReport check_theorem_4_1(const DiscreteProblem& problem, const GammaTransform& gamma1,
                                   const GammaTransform& gamma2, const MarginFunction& phi,
                                   const SamplerConfig& cfg);

/// Empirical lower envelope of a target/surrogate calibration pair:
/// surrogate gaps binned, max target gap per bin. Any valid transform
/// for the pair dominates the step curve.
struct CalibrationCurve {
    std::vector<double> bin_edges;                 // size bins+1
    std::vector<std::optional<double>> max_target;  // size bins; absent = empty bin
    double fitted_sqrt_k = 0.0;  // smallest k with sqrt(k t) over all samples
    long samples = 0;

    /// Step-curve value: max target gap among samples with surrogate
    /// gap ≤ the bin's right edge.
    double envelope_at_bin(std::size_t i) const;
};

/// Pair (L_abs, L_μ) at fixed (μ, c, n); random p/scores sampling.
CalibrationCurve estimate_calibration_abstention(const CompSumParams& params,
                                                 const CostModel& cost, int n,
                                                 const SamplerConfig& cfg);

/// Pair (binary zero-one, Φ); random (η, t) sampling. Used to supply
/// Γ2 for the exponential Φ, where no transcribed constant is trusted.
CalibrationCurve estimate_calibration_binary(const MarginFunction& phi,
                                             const SamplerConfig& cfg);

/// Γ2 candidate from the fitted envelope, padded slightly upward.
GammaTransform gamma_from_envelope(const CalibrationCurve& curve, double pad = 1e-3);

/// Λ-bounded exponential-margin demonstration that the minimizability
/// gap can sit strictly below the approximation error.
struct ApproxVsGapRecord {
    double bounded_inf = 0.0;    // inf over |h| ≤ Λ
    double unbounded_inf = 0.0;  // inf over all measurable = 2√(η(1−η))
    double difference = 0.0;
};
ApproxVsGapRecord approx_vs_gap_demo(double lambda, double eta);

/// Conditional risk of the second-stage loss at rejector offset t=r−M,
/// and its exact infimum over t, for either Φ kind.
double two_stage_conditional_risk(double p_err, double cost, double t,
                                  const MarginFunction& phi);
double two_stage_conditional_risk_min(double p_err, double cost, const MarginFunction& phi);

/// Right-hand side of the two-stage bound for given stage sums:
/// Γ1(s1) + (1+c)·Γ2(s2/c), with the constant factors dropped when Γ2
/// is linear.
double two_stage_bound_rhs(const GammaTransform& gamma1, const GammaTransform& gamma2,
                           double stage1, double stage2, double cost);

}  // namespace abstain
