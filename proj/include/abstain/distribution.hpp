#pragma once

#include <optional>
#include <vector>

#include "abstain/losses.hpp"

namespace abstain {

/// Conditional label distribution p(x,·) over the n true labels plus
/// the constant cost c. p⁺ augments it with p(x, n+1) = 1−c.
class ConditionalDistribution {
public:
    ConditionalDistribution(std::vector<double> p, CostModel cost);

    int n() const { return static_cast<int>(p_.size()); }
    double c() const { return cost_.c(); }
    const CostModel& cost() const { return cost_; }
    const std::vector<double>& p() const { return p_; }

    /// p⁺[y] for y in 1..n+1 (1-based)
    double p_plus(int y) const {
        return y == n() + 1 ? 1.0 - cost_.c() : p_[static_cast<std::size_t>(y - 1)];
    }

    /// whether every p(x,y) is 0 or 1
    bool deterministic(double tol = 0.0) const;

private:
    std::vector<double> p_;
    CostModel cost_;
};

/// Finite weighted mixture of input atoms; the oracle substrate for all
/// expectation-form bound checks. Atoms optionally carry feature
/// vectors so that trainable models can be evaluated exactly on the
/// problem.
class DiscreteProblem {
public:
    struct Atom {
        double weight;
        ConditionalDistribution dist;
        std::optional<std::vector<double>> features;
    };

    DiscreteProblem(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    int n() const { return atoms_.front().dist.n(); }
    double c() const { return atoms_.front().dist.c(); }
    bool has_features() const { return atoms_.front().features.has_value(); }
    int feature_dim() const;

private:
    std::vector<Atom> atoms_;
};

/// 1 − p⁺[decision]: risk of announcing `decision` under dist.
double conditional_risk_abstention(int decision, const ConditionalDistribution& dist);

/// y_max: abstain when 1−c ≥ max_y p(x,y), otherwise the most probable
/// label (smallest index on ties).
int chow_decision(const ConditionalDistribution& dist);

/// p⁺[y_max] − p⁺[decision]; ≥ 0. Assumes all n+1 decisions reachable.
double abstention_calibration_gap(int decision, const ConditionalDistribution& dist);

/// Σ_y p⁺[y]·ℓ_μ(s, y) over y in 1..n+1.
double conditional_risk_surrogate(const ScoreVector& s, const ConditionalDistribution& dist,
                                  const CompSumParams& params);

}  // namespace abstain
