#pragma once

#include <cstdint>
#include <vector>

#include "abstain/distribution.hpp"
#include "abstain/train.hpp"

namespace abstain {

struct RademacherEstimate {
    double value = 0.0;  // mean of per-draw suprema
    int sigma_draws = 0;
    std::vector<double> per_draw;
    double optimizer_residual = 0.0;  // max late-stage ascent improvement
    double standard_error = 0.0;
};

struct AscentOptions {
    int restarts = 3;
    int steps = 2000;
    double learning_rate = 0.05;
};

/// Monte-Carlo empirical Rademacher complexity of the L_μ-composed
/// clamped family on the sample: per σ-draw, the supremum of
/// (1/m)Σ σ_i L_μ(h(x_i), y_i) is approximated by multi-start gradient
/// ascent over parameters. Ascent under-shoots the true supremum, so
/// downstream users inflate by the reported residual.
RademacherEstimate empirical_rademacher(const TabularDataset& sample, const TrainConfig& family,
                                        int sigma_draws, std::uint64_t seed,
                                        const AscentOptions& opts = {});

/// B_{L_μ} = (2−c)·B_ℓ with B_ℓ the clamped-score bound on ℓ_μ:
///   μ<1: (((n+1)e^{2Λ})^{1−μ} − 1)/(1−μ);  μ=1: 2Λ+log(n+1);  μ>1: 1/(μ−1).
double loss_upper_bound(double mu, double cost, int n, double lambda);

struct FiniteSampleInput {
    long m = 0;
    double delta = 0.05;
    double B = 0.0;
    double R = 0.0;  // Rademacher value, already inflated by its residual
    double mu = 1.0;
    double cost = 0.1;
    int n = 2;
    double M_surrogate = 0.0;
    double M_abstention = 0.0;

    void validate() const;
};

/// Γ_μ(4R + 2B√(log(2/δ)/(2m)) + M_surrogate) − M_abstention.
double assemble_bound(const FiniteSampleInput& input);

struct CoverageTrial {
    double excess = 0.0;
    double bound = 0.0;
    bool covered = false;
    bool erm_flagged = false;
};

struct CoverageRecord {
    int trials = 0;
    double coverage = 0.0;
    double threshold = 0.0;  // 1 − δ − Monte-Carlo slack
    bool passed = false;
    long m = 0;
    double delta = 0.0;
    double best_in_class_abstention = 0.0;
    double best_in_class_surrogate = 0.0;
    double m_surrogate = 0.0;
    double m_abstention = 0.0;
    double B = 0.0;
    std::vector<CoverageTrial> per_trial;
    std::vector<std::uint64_t> reference_seeds;
};

struct ValidateBoundConfig {
    long m = 500;
    double delta = 0.05;
    int trials = 40;
    std::uint64_t seed = 7;
    int reference_runs = 20;
    int reference_epochs = 300;
    int sigma_draws = 12;
    unsigned workers = 0;
    TrainConfig erm;  // family + trainer; clamp must be > 0
    AscentOptions ascent;
};

/// Draws i.i.d. samples of size m from the known problem, trains the
/// ERM, measures the exact abstention excess against a dense-training
/// reference for E*, and reports how often assemble_bound covers it.
CoverageRecord validate_bound(const DiscreteProblem& problem, const ValidateBoundConfig& cfg);

}  // namespace abstain
