#include <doctest.h>

#include <cmath>

#include "abstain/common.hpp"
#include "abstain/io/synthetic.hpp"
#include "abstain/oracles.hpp"
#include "abstain/problem_eval.hpp"
#include "abstain/train.hpp"

using namespace abstain;

namespace {

TrainConfig quick_cfg(double mu, double cost, int epochs, std::uint64_t seed = 1,
                      double lr = 0.5) {
    TrainConfig cfg;
    cfg.loss = LossSelector::comp_sum_mu(mu);
    cfg.cost = cost;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.learning_rate = lr;
    cfg.seed = seed;
    return cfg;
}

TabularDataset one_hot_points(int n_labels, const std::vector<int>& labels) {
    TabularDataset data;
    data.m = static_cast<int>(labels.size());
    data.d = data.m;
    data.n = n_labels;
    data.labels = labels;
    data.features.assign(static_cast<std::size_t>(data.m) * data.d, 0.0);
    for (int i = 0; i < data.m; ++i)
        data.features[static_cast<std::size_t>(i) * data.d + i] = 1.0;
    return data;
}

}  // namespace

TEST_CASE("model forward behavior") {
    SUBCASE("zero-weight linear model scores zero") {
        const auto m = Model::linear_zero(3, 4);
        const std::vector<double> x{0.4, -1.2, 2.0};
        for (double s : forward(m, x)) CHECK(s == 0.0);
    }
    SUBCASE("identity rows pick out coordinates") {
        auto m = Model::linear_zero(3, 3);
        for (int o = 0; o < 3; ++o) m.w1[static_cast<std::size_t>(o) * 3 + o] = 1.0;
        const std::vector<double> x{0.0, 1.0, 0.0};
        const auto s = forward(m, x);
        CHECK(s[0] == 0.0);
        CHECK(s[1] == 1.0);
        CHECK(s[2] == 0.0);
    }
    SUBCASE("clamp caps the raw score") {
        auto m = Model::linear_zero(1, 1, 1.0);
        m.w1[0] = 3.7;
        const std::vector<double> x{1.0};
        CHECK(forward(m, x)[0] == 1.0);
        m.w1[0] = -2.5;
        CHECK(forward(m, x)[0] == -1.0);
    }
    SUBCASE("dimension mismatch is an error") {
        const auto m = Model::linear_zero(3, 2);
        const std::vector<double> x{1.0, 2.0};
        CHECK_THROWS_AS(forward(m, x), std::invalid_argument);
    }
}

TEST_CASE("training config preconditions") {
    auto cfg = quick_cfg(1.0, 0.5, 1);
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = quick_cfg(1.0, 0.5, 1);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = quick_cfg(1.0, 0.5, 1);
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    const auto data = one_hot_points(2, {1, 2});
    auto two_stage = quick_cfg(1.0, 0.5, 5);
    two_stage.loss = LossSelector::two_stage_phi(MarginFunction::Kind::exponential);
    CHECK_THROWS_AS(train_single_stage(data, two_stage), std::invalid_argument);
    CHECK_THROWS_AS(train_two_stage(data, two_stage, two_stage), std::invalid_argument);
    CHECK_THROWS_AS(train_two_stage(data, quick_cfg(1.0, 0.5, 5), quick_cfg(1.0, 0.5, 5)),
                    std::invalid_argument);
}

TEST_CASE("single-stage training reaches the pointwise optimum on one deterministic point") {
    TabularDataset data;
    data.m = 1;
    data.d = 2;
    data.n = 2;
    data.features = {1.0, 0.0};
    data.labels = {1};
    const auto cfg = quick_cfg(1.0, 0.5, 500);
    const auto result = train_single_stage(data, cfg);
    CHECK(std::abs(result.final_loss - 0.95477125244221923) <= 1e-2);

    SUBCASE("epoch losses are non-increasing as recorded") {
        for (std::size_t e = 1; e < result.epoch_losses.size(); ++e)
            CHECK(result.epoch_losses[e] <= result.epoch_losses[e - 1] + 1e-12);
    }
}

TEST_CASE("single-stage training on separable data drives abstention error down") {
    SyntheticRecipe recipe;
    recipe.kind = SyntheticRecipe::Kind::separable_margin;
    recipe.n = 2;
    recipe.d = 2;
    recipe.c = 0.05;
    recipe.margin = 0.5;
    recipe.atom_count = 40;
    recipe.seed = 5;
    const auto gen = generate(recipe);
    const auto data = expand_problem_to_dataset(gen.problem);
    // The MLP minimizer attains the pointwise optimum (score ratio
    // 1-c on the true label) and so never abstains here; the linear
    // minimizer genuinely abstains on interior atoms instead.
    auto cfg = quick_cfg(1.0, 0.05, 1000, 2);
    cfg.model_kind = Model::Kind::mlp;
    const auto result = train_single_stage(data, cfg);
    const auto metrics = evaluate(result.model, data, CostModel(0.05), CompSumParams(1.0));
    CHECK(metrics.abstention_loss <= 0.01);

    SUBCASE("the linear family's surrogate minimizer abstains instead") {
        const auto lin = train_single_stage(data, quick_cfg(1.0, 0.05, 800, 2));
        const auto lm = evaluate(lin.model, data, CostModel(0.05), CompSumParams(1.0));
        CHECK(lm.rejection_rate > 0.2);
    }
}

TEST_CASE("training is deterministic in data, config and seed") {
    const auto data = one_hot_points(3, {1, 2, 3, 1, 2, 3});
    auto cfg = quick_cfg(1.7, 0.3, 40, 99);
    cfg.model_kind = Model::Kind::mlp;
    cfg.hidden_width = 8;
    const auto a = train_single_stage(data, cfg);
    const auto b = train_single_stage(data, cfg);
    CHECK(a.model.parameter_hash() == b.model.parameter_hash());
    cfg.seed = 100;
    const auto c = train_single_stage(data, cfg);
    CHECK(a.model.parameter_hash() != c.model.parameter_hash());
}

TEST_CASE("a tiny SGD step moves the loss downhill") {
    TabularDataset data;
    data.m = 1;
    data.d = 2;
    data.n = 2;
    data.features = {0.7, -0.3};
    data.labels = {2};
    auto cfg = quick_cfg(1.0, 0.4, 1, 5, 1e-6);
    cfg.batch_size = 1;
    cfg.model_kind = Model::Kind::mlp;
    cfg.hidden_width = 8;

    // loss of the freshly seeded model before any step
    const auto init = Model::mlp_seeded(2, 3, 8, 0.0, cfg.seed);
    ScoreVector s0(forward(init, std::span<const double>(data.row(0), 2)), 2);
    const double before = surrogate_L_mu(s0, 2, CostModel(0.4), CompSumParams(1.0));
    const auto result = train_single_stage(data, cfg);
    CHECK(result.final_loss < before);
    CHECK(before - result.final_loss < 1e-3);  // lr 1e-6 moves it only slightly
}

TEST_CASE("training failure on divergence raises TrainingError") {
    TabularDataset data;
    data.m = 6;
    data.d = 1;
    data.n = 2;
    data.features = {1.0, -1.0, 0.5, -0.5, 2.0, -2.0};
    data.labels = {1, 2, 1, 2, 1, 2};
    auto cfg = quick_cfg(0.0, 0.5, 10, 3, 1e30);
    cfg.batch_size = 1;
    CHECK_THROWS_AS(train_single_stage(data, cfg), TrainingError);
}

TEST_CASE("two-stage training") {
    SyntheticRecipe recipe;
    recipe.kind = SyntheticRecipe::Kind::separable_margin;
    recipe.n = 3;
    recipe.d = 2;
    recipe.c = 0.2;
    recipe.margin = 0.5;
    recipe.atom_count = 60;
    recipe.seed = 7;
    const auto gen = generate(recipe);
    CHECK(gen.certified_margin >= 0.5);
    const auto data = expand_problem_to_dataset(gen.problem);

    auto cfg1 = quick_cfg(1.0, 0.2, 300, 11);
    auto cfg2 = quick_cfg(1.0, 0.2, 300, 13);
    cfg2.loss = LossSelector::two_stage_phi(MarginFunction::Kind::exponential);

    const auto pair = train_two_stage(data, cfg1, cfg2);
    const auto metrics = evaluate_two_stage(pair.predictor, pair.rejector, data,
                                            CostModel(0.2), MarginFunction::exponential());
    CHECK(metrics.abstention_loss <= 0.01);

    SUBCASE("stage 2 leaves stage-1 parameters untouched") {
        // same stage-1 config, different stage-2 run: the predictor
        // hash cannot depend on anything stage 2 did
        auto other2 = cfg2;
        other2.seed = 999;
        other2.epochs = 17;
        const auto again = train_two_stage(data, cfg1, other2);
        CHECK(pair.predictor.parameter_hash() == again.predictor.parameter_hash());
        CHECK(pair.rejector.parameter_hash() != again.rejector.parameter_hash());
    }

    SUBCASE("perfect predictor drives the rejection rate to zero") {
        // brute force: with wrong=0 the per-point loss c*Phi(M-r) is
        // decreasing as r falls, so the optimum pushes r below M
        const MarginFunction phi = MarginFunction::exponential();
        for (double r : {-1.0, -2.0, -5.0})
            CHECK(two_stage_loss(std::vector<double>{1.0, 0.0}, r, 1, CostModel(0.2), phi) <
                  two_stage_loss(std::vector<double>{1.0, 0.0}, r + 0.5, 1, CostModel(0.2),
                                 phi));
        CHECK(metrics.rejection_rate == 0.0);
    }

    SUBCASE("rejection rate falls as the cost rises on noisy data") {
        SyntheticRecipe noisy = recipe;
        noisy.kind = SyntheticRecipe::Kind::label_noise;
        noisy.noise = 0.25;
        noisy.c = 0.01;
        const auto noisy_low = generate(noisy);
        const auto low_data = expand_problem_to_dataset(noisy_low.problem);
        auto c1 = cfg1, c2 = cfg2;
        c1.cost = c2.cost = 0.01;
        const auto low = train_two_stage(low_data, c1, c2);
        const auto low_metrics = evaluate_two_stage(low.predictor, low.rejector, low_data,
                                                    CostModel(0.01),
                                                    MarginFunction::exponential());
        noisy.c = 0.99;
        const auto noisy_high = generate(noisy);
        const auto high_data = expand_problem_to_dataset(noisy_high.problem);
        c1.cost = c2.cost = 0.99;
        const auto high = train_two_stage(high_data, c1, c2);
        const auto high_metrics = evaluate_two_stage(high.predictor, high.rejector, high_data,
                                                     CostModel(0.99),
                                                     MarginFunction::exponential());
        CHECK(high_metrics.rejection_rate < low_metrics.rejection_rate);
        CHECK(low_metrics.rejection_rate > 0.9);  // cheap abstention: reject almost all
    }
}

TEST_CASE("scaling closure probe: positive weight scaling preserves decisions") {
    SyntheticRecipe recipe;
    recipe.kind = SyntheticRecipe::Kind::label_noise;
    recipe.noise = 0.15;
    recipe.n = 3;
    recipe.d = 2;
    recipe.c = 0.3;
    recipe.atom_count = 30;
    recipe.seed = 17;
    const auto gen = generate(recipe);
    const auto data = expand_problem_to_dataset(gen.problem);
    const auto result = train_single_stage(data, quick_cfg(1.0, 0.3, 60, 19));

    for (double alpha : {0.2, 3.0, 17.0}) {
        Model scaled = result.model;
        scaled.scale_weights(alpha);
        for (int i = 0; i < data.m; ++i) {
            const std::span<const double> x(data.row(i), 2);
            const ScoreVector a(forward(result.model, x), data.n);
            const ScoreVector b(forward(scaled, x), data.n);
            CHECK(predict_label(a) == predict_label(b));
        }
    }
}

TEST_CASE("evaluate metric fields") {
    // four one-hot points with a hand-built scorer: 2 correct accepts,
    // 1 error, 1 abstention at c = 0.2
    auto data = one_hot_points(2, {1, 2, 2, 1});
    auto m = Model::linear_zero(4, 3);
    auto set_col = [&](int point, double s1, double s2, double srej) {
        m.w1[static_cast<std::size_t>(0) * 4 + point] = s1;
        m.w1[static_cast<std::size_t>(1) * 4 + point] = s2;
        m.w1[static_cast<std::size_t>(2) * 4 + point] = srej;
    };
    set_col(0, 2.0, 0.0, -1.0);  // correct accept
    set_col(1, 0.0, 2.0, -1.0);  // correct accept
    set_col(2, 2.0, 0.0, -1.0);  // error
    set_col(3, 0.0, 0.0, 1.0);   // abstain
    const auto metrics = evaluate(m, data, CostModel(0.2), CompSumParams(1.0));
    CHECK(metrics.abstention_loss == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(metrics.rejection_rate == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(metrics.accepted_accuracy.has_value());
    CHECK(*metrics.accepted_accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    SUBCASE("all points abstained reports absent accuracy") {
        auto rej = Model::linear_zero(4, 3);
        for (int p = 0; p < 4; ++p) rej.w1[static_cast<std::size_t>(2) * 4 + p] = 1.0;
        const auto all = evaluate(rej, data, CostModel(0.2), CompSumParams(1.0));
        CHECK(all.abstention_loss == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(all.rejection_rate == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_FALSE(all.accepted_accuracy.has_value());
    }
    SUBCASE("perfect acceptor scores zero") {
        auto good = Model::linear_zero(4, 3);
        auto set_good = [&](int point, int label) {
            good.w1[static_cast<std::size_t>(label - 1) * 4 + point] = 2.0;
        };
        set_good(0, 1);
        set_good(1, 2);
        set_good(2, 2);
        set_good(3, 1);
        const auto perfect = evaluate(good, data, CostModel(0.2), CompSumParams(1.0));
        CHECK(perfect.abstention_loss == 0.0);
    }
    SUBCASE("empty dataset is an error") {
        TabularDataset empty;
        empty.d = 4;
        empty.n = 2;
        CHECK_THROWS_AS(evaluate(m, empty, CostModel(0.2), CompSumParams(1.0)),
                        std::invalid_argument);
    }
}
