#include "abstain/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abstain/common.hpp"

namespace abstain {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    if (l2 < 0.0) throw std::invalid_argument("TrainConfig: l2 must be >= 0");
    if (clamp < 0.0) throw std::invalid_argument("TrainConfig: clamp must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
    CostModel check(cost);  // range-checks c
    (void)check;
}

namespace {

double schedule_lr(const TrainConfig& cfg, int epoch, double lr_scale) {
    double lr = cfg.learning_rate;
    if (cfg.schedule == TrainConfig::Schedule::cosine)
        lr *= 0.5 * (1.0 + std::cos(M_PI * epoch / std::max(cfg.epochs, 1)));
    return lr * lr_scale;
}

Model make_model(const TrainConfig& cfg, int input_dim, int outputs) {
    Model m = cfg.model_kind == Model::Kind::linear
                  ? Model::linear_zero(input_dim, outputs, cfg.clamp)
                  : Model::mlp_seeded(input_dim, outputs, cfg.hidden_width, cfg.clamp, cfg.seed);
    m.cost = cfg.cost;
    m.seed = cfg.seed;
    return m;
}

std::vector<double> clamp_scores(const Model& m, const std::vector<double>& raw) {
    if (!all_finite(raw))
        throw TrainingError("training diverged: non-finite model scores");
    std::vector<double> s = raw;
    if (m.clamp > 0.0)
        for (auto& v : s) v = std::clamp(v, -m.clamp, m.clamp);
    return s;
}

// Shared SGD loop. per_example(i, model, grad_out) must return the loss
// of example i and accumulate its parameter gradient scaled by `scale`.
template <typename LossGrad>
TrainResult sgd_loop(Model model, const TabularDataset& data, const TrainConfig& cfg,
                     LossGrad&& loss_grad) {
    const double total_w = data.total_weight();
    std::vector<std::size_t> order(static_cast<std::size_t>(data.m));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed ^ 0x7a1eadbeef11ULL);

    TrainResult out;
    std::vector<double> grad(model.parameter_count(), 0.0);
    std::vector<double> velocity(model.parameter_count(), 0.0);

    auto full_loss = [&](const Model& m) {
        double acc = 0.0;
        for (int i = 0; i < data.m; ++i)
            acc += data.weight(i) / total_w * loss_grad(m, i, nullptr, 0.0);
        return acc;
    };

    double best_loss = full_loss(model);
    Model best_model = model;
    double lr_scale = 1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        const double lr = schedule_lr(cfg, epoch, lr_scale);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const int i = static_cast<int>(order[k]);
                const double scale =
                    data.weight(i) * data.m / total_w / static_cast<double>(stop - start);
                loss_grad(model, i, &grad, scale);
            }
            if (cfg.momentum > 0.0) {
                for (std::size_t k = 0; k < grad.size(); ++k) {
                    velocity[k] = cfg.momentum * velocity[k] + grad[k];
                    grad[k] = velocity[k];
                }
            }
            apply_gradient(model, grad, lr, cfg.l2);
        }
        const double epoch_loss = full_loss(model);
        if (std::isnan(epoch_loss))
            throw TrainingError("training diverged: loss is NaN at epoch " +
                                std::to_string(epoch));
        if (epoch_loss > best_loss * 1.05) {
            model = best_model;
            std::fill(velocity.begin(), velocity.end(), 0.0);
            lr_scale *= 0.5;
            out.lr_halvings += 1;
        } else if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best_model = model;
        }
        out.epoch_losses.push_back(best_loss);
    }
    out.model = std::move(best_model);
    out.final_loss = best_loss;
    return out;
}

}  // namespace

TrainResult train_single_stage(const TabularDataset& data, const TrainConfig& cfg) {
    return train_single_stage(data, cfg, make_model(cfg, data.d, data.n + 1));
}

TrainResult train_single_stage(const TabularDataset& data, const TrainConfig& cfg,
                               const Model& init_model) {
    data.validate();
    cfg.validate();
    if (cfg.loss.kind != LossSelector::Kind::comp_sum)
        throw std::invalid_argument("train_single_stage: config must select an L_mu loss");
    if (init_model.input_dim != data.d || init_model.output_count != data.n + 1)
        throw std::invalid_argument("train_single_stage: init model shape mismatch");
    const CompSumParams params(cfg.loss.mu);
    const CostModel cost(cfg.cost);

    Model init = init_model;
    init.clamp = cfg.clamp;
    init.cost = cfg.cost;
    init.seed = cfg.seed;
    init.loss_tag = "L_mu";
    init.mu = params.mu();

    std::vector<double> raw, hidden;
    auto loss_grad = [&](const Model& m, int i, std::vector<double>* grad,
                         double scale) -> double {
        m.forward_raw(std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                      raw, &hidden);
        ScoreVector s(clamp_scores(m, raw), data.n);
        const int y = data.labels[static_cast<std::size_t>(i)];
        if (grad) {
            const auto ds = grad_surrogate_L_mu(s, y, cost, params);
            backprop(m, std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                     raw, hidden, ds, scale, *grad);
        }
        return surrogate_L_mu(s, y, cost, params);
    };
    auto result = sgd_loop(std::move(init), data, cfg, loss_grad);
    result.model.loss_tag = "L_mu";
    result.model.mu = params.mu();
    return result;
}

TwoStageResult train_two_stage(const TabularDataset& data, const TrainConfig& cfg_stage1,
                               const TrainConfig& cfg_stage2) {
    data.validate();
    cfg_stage1.validate();
    cfg_stage2.validate();
    if (cfg_stage1.loss.kind != LossSelector::Kind::comp_sum)
        throw std::invalid_argument(
            "train_two_stage: stage 1 must select a standard multiclass surrogate");
    if (cfg_stage2.loss.kind != LossSelector::Kind::two_stage)
        throw std::invalid_argument("train_two_stage: stage 2 must select the two-stage loss");
    const CompSumParams params1(cfg_stage1.loss.mu);
    const CostModel cost(cfg_stage2.cost);
    const MarginFunction phi(cfg_stage2.loss.phi);

    // Stage 1: n-output predictor on the standard surrogate (no
    // rejection category present).
    Model pred_init = make_model(cfg_stage1, data.d, data.n);
    std::vector<double> raw, hidden;
    auto stage1_grad = [&](const Model& m, int i, std::vector<double>* grad,
                           double scale) -> double {
        m.forward_raw(std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                      raw, &hidden);
        const auto scores = clamp_scores(m, raw);
        const auto y_idx = static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)] - 1);
        if (grad) {
            const auto ds = grad_comp_sum_loss_over(scores, y_idx, params1);
            backprop(m, std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                     raw, hidden, ds, scale, *grad);
        }
        return comp_sum_loss_over(scores, y_idx, params1);
    };
    auto stage1 = sgd_loop(std::move(pred_init), data, cfg_stage1, stage1_grad);
    stage1.model.loss_tag = "ell_mu";
    stage1.model.mu = params1.mu();

    // Stage 2: predictor frozen; cache its top score per example.
    const Model& predictor = stage1.model;
    std::vector<double> top(static_cast<std::size_t>(data.m));
    std::vector<int> pred_label(static_cast<std::size_t>(data.m));
    for (int i = 0; i < data.m; ++i) {
        const auto scores = forward(
            predictor, std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)));
        int arg = 1;
        double best = scores[0];
        for (int y = 2; y <= data.n; ++y)
            if (scores[static_cast<std::size_t>(y - 1)] > best) {
                best = scores[static_cast<std::size_t>(y - 1)];
                arg = y;
            }
        top[static_cast<std::size_t>(i)] = best;
        pred_label[static_cast<std::size_t>(i)] = arg;
    }

    Model rej_init = make_model(cfg_stage2, data.d, 1);
    auto stage2_grad = [&](const Model& m, int i, std::vector<double>* grad,
                           double scale) -> double {
        m.forward_raw(std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                      raw, &hidden);
        const auto rscore = clamp_scores(m, raw);
        const double mtop = top[static_cast<std::size_t>(i)];
        const double wrong =
            pred_label[static_cast<std::size_t>(i)] != data.labels[static_cast<std::size_t>(i)]
                ? 1.0
                : 0.0;
        const double r = rscore[0];
        if (grad) {
            const double dr = wrong * phi.derivative(r - mtop) -
                              cost.c() * phi.derivative(mtop - r);
            const double ds[1] = {dr};
            backprop(m, std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)),
                     raw, hidden, ds, scale, *grad);
        }
        return wrong * phi(r - mtop) + cost.c() * phi(mtop - r);
    };
    auto stage2 = sgd_loop(std::move(rej_init), data, cfg_stage2, stage2_grad);
    stage2.model.loss_tag = "two_stage";
    stage2.model.phi_tag =
        phi.kind() == MarginFunction::Kind::exponential ? "exp" : "logistic";

    TwoStageResult out;
    out.predictor = std::move(stage1.model);
    out.rejector = std::move(stage2.model);
    out.stage1_losses = std::move(stage1.epoch_losses);
    out.stage2_losses = std::move(stage2.epoch_losses);
    return out;
}

Metrics evaluate(const Model& model, const TabularDataset& data, const CostModel& cost,
                 const CompSumParams& params) {
    data.validate();
    if (model.output_count != data.n + 1)
        throw std::invalid_argument("evaluate: model must produce n+1 scores");
    Metrics m;
    m.count = data.m;
    const double total_w = data.total_weight();
    double accepted_w = 0.0, accepted_correct = 0.0;
    for (int i = 0; i < data.m; ++i) {
        const double w = data.weight(i) / total_w;
        const auto raw = forward(
            model, std::span<const double>(data.row(i), static_cast<std::size_t>(data.d)));
        ScoreVector s(raw, data.n);
        const int y = data.labels[static_cast<std::size_t>(i)];
        m.abstention_loss += w * abstention_loss(s, y, cost);
        m.mean_surrogate += w * surrogate_L_mu(s, y, cost, params);
        const int pred = predict_label(s);
        if (pred == data.n + 1) {
            m.rejection_rate += w;
        } else {
            accepted_w += w;
            if (pred == y) accepted_correct += w;
        }
    }
    if (accepted_w > 0.0) m.accepted_accuracy = accepted_correct / accepted_w;
    return m;
}

int two_stage_decision(const Model& predictor, const Model& rejector,
                       std::span<const double> x) {
    const auto scores = forward(predictor, x);
    int arg = 1;
    double best = scores[0];
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > best) {
            best = scores[k];
            arg = static_cast<int>(k) + 1;
        }
    const double r = forward(rejector, x)[0];
    return r >= best ? predictor.output_count + 1 : arg;
}

Metrics evaluate_two_stage(const Model& predictor, const Model& rejector,
                           const TabularDataset& data, const CostModel& cost,
                           const MarginFunction& phi) {
    data.validate();
    if (predictor.output_count != data.n)
        throw std::invalid_argument("evaluate_two_stage: predictor must produce n scores");
    if (rejector.output_count != 1)
        throw std::invalid_argument("evaluate_two_stage: rejector must produce one score");
    Metrics m;
    m.count = data.m;
    const double total_w = data.total_weight();
    double accepted_w = 0.0, accepted_correct = 0.0;
    for (int i = 0; i < data.m; ++i) {
        const double w = data.weight(i) / total_w;
        const std::span<const double> x(data.row(i), static_cast<std::size_t>(data.d));
        const int y = data.labels[static_cast<std::size_t>(i)];
        const int decision = two_stage_decision(predictor, rejector, x);
        const auto pred_scores = forward(predictor, x);
        m.mean_surrogate +=
            w * two_stage_loss(pred_scores, forward(rejector, x)[0], y, cost, phi);
        if (decision == data.n + 1) {
            m.rejection_rate += w;
            m.abstention_loss += w * cost.c();
        } else {
            accepted_w += w;
            if (decision == y)
                accepted_correct += w;
            else
                m.abstention_loss += w;
        }
    }
    if (accepted_w > 0.0) m.accepted_accuracy = accepted_correct / accepted_w;
    return m;
}

}  // namespace abstain
