#pragma once

#include <functional>
#include <span>
#include <vector>

namespace abstain {

/// Scores h(x, y) for the n true labels followed by the rejection
/// category n+1. Labels are 1-based throughout, matching the usual
/// y ∈ {1..n+1} convention; index [label] accounts for that.
struct ScoreVector {
    std::vector<double> scores;  // length n+1
    int n = 0;

    ScoreVector() = default;
    ScoreVector(std::vector<double> s, int n_labels);

    double operator[](int label) const { return scores[static_cast<std::size_t>(label - 1)]; }
    double& operator[](int label) { return scores[static_cast<std::size_t>(label - 1)]; }
    int categories() const { return n + 1; }
};

/// Constant abstention cost, open interval (0,1).
class CostModel {
public:
    explicit CostModel(double c);
    double c() const { return c_; }

private:
    double c_;
};

/// Parameter of the cross-entropy loss family. Values within 1e-12 of
/// the special points 1 and 2 are canonicalized to them exactly, since
/// the closed forms there are exact and the general branch is singular.
class CompSumParams {
public:
    explicit CompSumParams(double mu);
    double mu() const { return mu_; }
    bool is_one() const { return mu_ == 1.0; }
    bool is_two() const { return mu_ == 2.0; }

private:
    double mu_;
};

/// Decreasing margin function Φ for the second-stage loss.
/// exponential: e^{-t}; logistic: log2(1+e^{-t}).
/// Both satisfy Φ(t) ≥ 1_{t≤0} and Φ(t) → 0 as t → +∞.
class MarginFunction {
public:
    enum class Kind { exponential, logistic };

    explicit MarginFunction(Kind k) : kind_(k) {}
    static MarginFunction exponential() { return MarginFunction(Kind::exponential); }
    static MarginFunction logistic() { return MarginFunction(Kind::logistic); }

    Kind kind() const { return kind_; }
    double operator()(double t) const;
    double derivative(double t) const;

private:
    Kind kind_;
};

/// n+1 if the rejection score ties or beats every label score,
/// otherwise the smallest index attaining the label maximum.
int predict_label(const ScoreVector& s);

/// Eq-(1)-style target loss: 1 on a wrong accepted prediction, c on
/// abstention, 0 otherwise.
double abstention_loss(const ScoreVector& s, int y, const CostModel& cost);

/// Cross-entropy family member ℓ_μ evaluated at category y ∈ {1..n+1}.
/// Computed through a max-shifted log-sum-exp, so no intermediate
/// overflow for |scores| up to ~500.
double comp_sum_loss(const ScoreVector& s, int y, const CompSumParams& params);

/// L_μ = ℓ_μ(·, y) + (1−c)·ℓ_μ(·, n+1).
double surrogate_L_mu(const ScoreVector& s, int y, const CostModel& cost,
                      const CompSumParams& params);

using BaseLoss = std::function<double(const ScoreVector&, int)>;

/// base(·, y) + (1−c)·base(·, n+1) for any loss over n+1 categories.
double generic_surrogate(const BaseLoss& base, const ScoreVector& s, int y,
                         const CostModel& cost);

/// Second-stage loss: wrong·Φ(r − M) + c·Φ(M − r), where M is the top
/// predictor score and wrong indicates a smallest-index-argmax miss.
double two_stage_loss(std::span<const double> predictor_scores, double rejector_score,
                      int y, const CostModel& cost, const MarginFunction& phi);

/// Max-shifted softmax over all n+1 categories.
std::vector<double> softmax(const ScoreVector& s);
std::vector<double> softmax(std::span<const double> scores);

/// ℓ_μ over an arbitrary category count (0-based index). The
/// ScoreVector overload forwards here; the two-stage trainer uses this
/// directly for the n-category first stage.
double comp_sum_loss_over(std::span<const double> scores, std::size_t y_index,
                          const CompSumParams& params);
std::vector<double> grad_comp_sum_loss_over(std::span<const double> scores,
                                            std::size_t y_index, const CompSumParams& params);

/// Analytic ∂ℓ_μ/∂scores at category y.
std::vector<double> grad_comp_sum_loss(const ScoreVector& s, int y,
                                       const CompSumParams& params);

/// Analytic ∂L_μ/∂scores.
std::vector<double> grad_surrogate_L_mu(const ScoreVector& s, int y, const CostModel& cost,
                                        const CompSumParams& params);

/// ∂(two_stage_loss)/∂rejector_score with the predictor fixed.
double grad_two_stage_loss(std::span<const double> predictor_scores, double rejector_score,
                           int y, const CostModel& cost, const MarginFunction& phi);

}  // namespace abstain
