#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "abstain/dataset.hpp"
#include "abstain/losses.hpp"
#include "abstain/model.hpp"

namespace abstain {

/// Thrown when optimization breaks down (NaN loss); the CLI maps it to
/// its training-failure exit code.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LossSelector {
    enum class Kind { comp_sum, two_stage };
    Kind kind = Kind::comp_sum;
    double mu = 1.0;                                              // comp_sum
    MarginFunction::Kind phi = MarginFunction::Kind::exponential;  // two_stage

    static LossSelector comp_sum_mu(double mu_value) {
        LossSelector s;
        s.kind = Kind::comp_sum;
        s.mu = mu_value;
        return s;
    }
    static LossSelector two_stage_phi(MarginFunction::Kind k) {
        LossSelector s;
        s.kind = Kind::two_stage;
        s.phi = k;
        return s;
    }
};

struct TrainConfig {
    LossSelector loss;
    double cost = 0.1;
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 0.1;
    enum class Schedule { constant, cosine } schedule = Schedule::constant;
    std::uint64_t seed = 1;
    double l2 = 0.0;
    double clamp = 0.0;     // 0: unclamped
    double momentum = 0.0;  // heavy-ball coefficient; 0 = plain SGD
    Model::Kind model_kind = Model::Kind::linear;
    int hidden_width = 64;

    void validate() const;
};

struct TrainResult {
    Model model;
    std::vector<double> epoch_losses;  // accepted (best-so-far) loss per epoch
    double final_loss = 0.0;
    int lr_halvings = 0;
};

/// Minibatch SGD on (1/W)Σ w_i L_μ(h(x_i), y_i) over a model with n+1
/// outputs. The learning rate is halved and the best parameters are
/// restored whenever an epoch regresses by more than 5%.
TrainResult train_single_stage(const TabularDataset& data, const TrainConfig& cfg);

/// Same, continuing from given parameters. The saturating family
/// members (mu well above 1) optimize poorly from a cold start; the
/// usual warm start is the mu=1 minimizer, whose pointwise optimum
/// already carries the right score ordering.
TrainResult train_single_stage(const TabularDataset& data, const TrainConfig& cfg,
                               const Model& init);

struct TwoStageResult {
    Model predictor;  // n outputs
    Model rejector;   // 1 output
    std::vector<double> stage1_losses, stage2_losses;
};

/// Stage 1 fits the n-output predictor on the standard ℓ_μ (μ from
/// cfg_stage1.loss.mu; the logistic loss by default). Stage 2 freezes
/// it and fits the scalar rejector on the two-stage loss.
TwoStageResult train_two_stage(const TabularDataset& data, const TrainConfig& cfg_stage1,
                               const TrainConfig& cfg_stage2);

struct Metrics {
    double abstention_loss = 0.0;
    double rejection_rate = 0.0;
    std::optional<double> accepted_accuracy;  // absent when everything was rejected
    double mean_surrogate = 0.0;
    long count = 0;
};

/// Single-stage metrics of a model with n+1 outputs.
Metrics evaluate(const Model& model, const TabularDataset& data, const CostModel& cost,
                 const CompSumParams& params);

/// Composite metrics of a (predictor, rejector) pair: abstain iff the
/// rejector score reaches the top predictor score.
Metrics evaluate_two_stage(const Model& predictor, const Model& rejector,
                           const TabularDataset& data, const CostModel& cost,
                           const MarginFunction& phi);

/// Composite decision at a feature vector (two-stage pair).
int two_stage_decision(const Model& predictor, const Model& rejector,
                       std::span<const double> x);

}  // namespace abstain
