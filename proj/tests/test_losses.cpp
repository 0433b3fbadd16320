#include <doctest.h>

#include <cmath>

#include "abstain/common.hpp"
#include "abstain/losses.hpp"

using namespace abstain;

namespace {

// Independent oracle: direct textbook evaluation of ell_mu without the
// log-sum-exp path used by the implementation.
double ell_mu_direct(const std::vector<double>& s, int y, double mu) {
    double sum = 0.0;
    for (double v : s) sum += std::exp(v - s[static_cast<std::size_t>(y - 1)]);
    if (std::abs(mu - 1.0) < 1e-12) return std::log(sum);
    return (std::pow(sum, 1.0 - mu) - 1.0) / (1.0 - mu);
}

ScoreVector random_scores(Rng& rng, int n, double range = 5.0) {
    std::vector<double> s(static_cast<std::size_t>(n) + 1);
    for (auto& v : s) v = rng.uniform(-range, range);
    return ScoreVector(s, n);
}

// central finite differences of a scalar function of one score entry
template <typename F>
double central_diff(F&& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("domain types enforce their invariants") {
    CHECK_THROWS_AS(CostModel(0.0), std::invalid_argument);
    CHECK_THROWS_AS(CostModel(1.0), std::invalid_argument);
    CHECK_THROWS_AS(CostModel(-0.3), std::invalid_argument);
    CHECK(CostModel(0.5).c() == 0.5);

    CHECK_THROWS_AS(CompSumParams(-0.1), std::invalid_argument);
    CHECK(CompSumParams(1.0 + 1e-13).is_one());
    CHECK(CompSumParams(2.0 - 1e-13).is_two());
    CHECK(CompSumParams(1.5).mu() == 1.5);

    CHECK_THROWS_AS(ScoreVector({1.0, 2.0}, 2), std::invalid_argument);  // wrong length
    CHECK_THROWS_AS(ScoreVector({1.0, 2.0, 3.0}, 1), std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ScoreVector({1.0, inf, 3.0}, 2), std::invalid_argument);
}

TEST_CASE("margin functions decrease, dominate the 0-1 indicator and vanish") {
    for (auto phi : {MarginFunction::exponential(), MarginFunction::logistic()}) {
        Rng rng(11);
        for (int i = 0; i < 500; ++i) {
            const double t1 = rng.uniform(-20.0, 20.0);
            const double t2 = t1 + rng.uniform(1e-6, 5.0);
            CHECK(phi(t1) > phi(t2));
            const double t = rng.uniform(-30.0, 30.0);
            if (t <= 0.0) CHECK(phi(t) >= 1.0);
            CHECK(phi(t) >= 0.0);
        }
        CHECK(phi(50.0) < 1e-12);
        CHECK(phi(0.0) >= 1.0);
    }
}

TEST_CASE("predict_label follows argmax with abstention on rejection ties") {
    CHECK(predict_label(ScoreVector({2.0, 1.0, 0.5}, 2)) == 1);
    CHECK(predict_label(ScoreVector({1.0, 1.0, 1.0}, 2)) == 3);
    CHECK(predict_label(ScoreVector({0.3, 0.7, 0.5}, 2)) == 2);
    // smallest-index tie-break among true labels
    CHECK(predict_label(ScoreVector({0.7, 0.7, 0.1}, 2)) == 1);

    SUBCASE("scale invariance under positive scaling") {
        Rng rng(3);
        for (int i = 0; i < 1000; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n);
            const double alpha = rng.uniform(1e-3, 50.0);
            auto scaled = s.scores;
            for (auto& v : scaled) v *= alpha;
            CHECK(predict_label(ScoreVector(scaled, n)) == predict_label(s));
        }
    }
}

TEST_CASE("abstention_loss values and value set") {
    const CostModel c(0.2);
    CHECK(abstention_loss(ScoreVector({2.0, 1.0, 0.5}, 2), 1, c) == 0.0);
    CHECK(abstention_loss(ScoreVector({0.1, 0.1, 0.9}, 2), 1, c) == 0.2);
    CHECK(abstention_loss(ScoreVector({0.1, 0.9, 0.2}, 2), 1, c) == 1.0);
    CHECK_THROWS_AS(abstention_loss(ScoreVector({0.1, 0.9, 0.2}, 2), 3, c),
                    std::invalid_argument);
    CHECK_THROWS_AS(abstention_loss(ScoreVector({0.1, 0.9, 0.2}, 2), 0, c),
                    std::invalid_argument);

    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const int n = 2 + static_cast<int>(rng.index(4));
        const auto s = random_scores(rng, n);
        const double cost = rng.uniform(0.01, 0.99);
        const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        const double v = abstention_loss(s, y, CostModel(cost));
        CHECK((v == 0.0 || v == cost || v == 1.0));
    }
}

TEST_CASE("comp_sum_loss closed-form spot values") {
    CHECK(comp_sum_loss(ScoreVector({0, 0, 0}, 2), 1, CompSumParams(1)) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(comp_sum_loss(ScoreVector({0, 0, 0}, 2), 1, CompSumParams(2)) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(comp_sum_loss(ScoreVector({0, 0, 0}, 2), 1, CompSumParams(0)) ==
          doctest::Approx(2.0).epsilon(1e-12));
    // frozen from the analytic form 2(sqrt(1 + 2 e^{-1}) - 1)
    const double expected = 2.0 * (std::sqrt(1.0 + 2.0 * std::exp(-1.0)) - 1.0);
    CHECK(expected == doctest::Approx(0.63496404707379994).epsilon(1e-12));
    CHECK(comp_sum_loss(ScoreVector({1, 0, 0}, 2), 1, CompSumParams(0.5)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("comp_sum_loss agrees with the direct-evaluation oracle") {
    Rng rng(7);
    for (double mu : {0.0, 0.5, 1.0, 1.3, 1.7, 2.0, 2.5, 3.0}) {
        for (int i = 0; i < 300; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n, 4.0);
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
            CHECK(comp_sum_loss(s, y, CompSumParams(mu)) ==
                  doctest::Approx(ell_mu_direct(s.scores, y, mu)).epsilon(1e-9));
        }
    }
    SUBCASE("no intermediate overflow for |scores| <= 500") {
        const ScoreVector big({500.0, -500.0, 250.0}, 2);
        // mu >= 1 values stay finite for every label; mu < 1 is finite
        // whenever the true value is representable (top-score label).
        for (double mu : {1.0, 1.5, 2.0, 3.0})
            for (int y : {1, 2, 3})
                CHECK(std::isfinite(comp_sum_loss(big, y, CompSumParams(mu))));
        CHECK(std::isfinite(comp_sum_loss(big, 1, CompSumParams(0.0))));
        CHECK(comp_sum_loss(big, 1, CompSumParams(1.0)) ==
              doctest::Approx(std::log(1.0 + std::exp(-1000.0) + std::exp(-250.0)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("surrogate_L_mu spot values and definition") {
    const CostModel half(0.5);
    CHECK(surrogate_L_mu(ScoreVector({0, 0, 0}, 2), 1, half, CompSumParams(1)) ==
          doctest::Approx(1.5 * std::log(3.0)).epsilon(1e-12));
    CHECK(surrogate_L_mu(ScoreVector({0, 0, 0}, 2), 1, half, CompSumParams(2)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // frozen from the independent oracle: ell_1(y=1) + 0.8 ell_1(y=3)
    const ScoreVector s({3.0, 0.0, -3.0}, 2);
    const double z1 = std::log(1.0 + std::exp(-3.0) + std::exp(-6.0));
    const double z3 = std::log(std::exp(6.0) + std::exp(3.0) + 1.0);
    CHECK(z1 + 0.8 * z3 == doctest::Approx(4.8917023743413972).epsilon(1e-12));
    CHECK(surrogate_L_mu(s, 1, CostModel(0.2), CompSumParams(1)) ==
          doctest::Approx(z1 + 0.8 * z3).epsilon(1e-12));
}

TEST_CASE("generic_surrogate reproduces L_mu bit-exactly and handles degenerate bases") {
    const CostModel c(0.37);
    const CompSumParams one(1.0);
    BaseLoss ell1 = [&](const ScoreVector& s, int y) { return comp_sum_loss(s, y, one); };
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        const int n = 2 + static_cast<int>(rng.index(3));
        const auto s = random_scores(rng, n);
        const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        CHECK(generic_surrogate(ell1, s, y, c) == surrogate_L_mu(s, y, c, one));
    }
    BaseLoss zero = [](const ScoreVector&, int) { return 0.0; };
    CHECK(generic_surrogate(zero, ScoreVector({1, 2, 3}, 2), 1, c) == 0.0);
    BaseLoss ell2 = [](const ScoreVector& s, int y) {
        return comp_sum_loss(s, y, CompSumParams(2.0));
    };
    CHECK(generic_surrogate(ell2, ScoreVector({0, 0, 0}, 2), 1, CostModel(0.5)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two_stage_loss spot values") {
    const MarginFunction exp_phi = MarginFunction::exponential();
    const std::vector<double> correct_scores{1.0, 0.0};  // label 1 wins
    CHECK(two_stage_loss(correct_scores, 0.0, 1, CostModel(0.2), exp_phi) ==
          doctest::Approx(0.2 * std::exp(-1.0)).epsilon(1e-12));
    // wrong prediction, not abstaining: Phi(r - M) + c Phi(M - r)
    CHECK(two_stage_loss(correct_scores, 0.0, 2, CostModel(0.2), exp_phi) ==
          doctest::Approx(std::exp(1.0) + 0.2 * std::exp(-1.0)).epsilon(1e-12));
    // the wrong-prediction term vanishes as the rejection margin grows
    const double tail = two_stage_loss(correct_scores, 51.0, 2, CostModel(0.5), exp_phi);
    CHECK(tail - 0.5 * std::exp(50.0) < 1e-12);  // only the cost term remains
    CHECK(MarginFunction::exponential()(50.0) < 1e-12);
}

TEST_CASE("two_stage_loss upper-bounds the composite abstention loss") {
    for (auto kind : {MarginFunction::Kind::exponential, MarginFunction::Kind::logistic}) {
        const MarginFunction phi(kind);
        Rng rng(17);
        for (int i = 0; i < 5000; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            std::vector<double> pred(static_cast<std::size_t>(n));
            for (auto& v : pred) v = rng.uniform(-5.0, 5.0);
            const double r = rng.uniform(-5.0, 5.0);
            const double cost = rng.uniform(0.01, 0.99);
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
            int arg = 1;
            double best = pred[0];
            for (int k = 2; k <= n; ++k)
                if (pred[static_cast<std::size_t>(k - 1)] > best) {
                    best = pred[static_cast<std::size_t>(k - 1)];
                    arg = k;
                }
            const double abs_loss = r >= best ? cost : (arg == y ? 0.0 : 1.0);
            CHECK(two_stage_loss(pred, r, y, CostModel(cost), phi) >= abs_loss - 1e-12);
        }
    }
}

TEST_CASE("softmax spot values and stability") {
    const auto thirds = softmax(ScoreVector({0, 0, 0}, 2));
    for (double v : thirds) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto spiked = softmax(ScoreVector({1000.0, 0.0, 0.0}, 2));
    CHECK(spiked[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isfinite(spiked[1]));

    const auto mixed = softmax(ScoreVector({std::log(2.0), 0.0, 0.0}, 2));
    CHECK(mixed[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mixed[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(mixed[2] == doctest::Approx(0.25).epsilon(1e-12));

    Rng rng(19);
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_scores(rng, 2 + static_cast<int>(rng.index(5)), 100.0);
        const auto p = softmax(s);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(23);
    SUBCASE("grad_surrogate_L_mu over the acceptance mu set") {
        for (double mu : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
            const CompSumParams params(mu);
            for (int i = 0; i < 1000; ++i) {
                const int n = 2 + static_cast<int>(rng.index(3));
                const auto s = random_scores(rng, n);
                const double cost = rng.uniform(0.05, 0.95);
                const CostModel c(cost);
                const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
                const auto g = grad_surrogate_L_mu(s, y, c, params);
                const double f0 = surrogate_L_mu(s, y, c, params);
                double gsum = 0.0;
                for (int k = 0; k <= n; ++k) {
                    auto f = [&](double x) {
                        auto scores = s.scores;
                        scores[static_cast<std::size_t>(k)] = x;
                        return surrogate_L_mu(ScoreVector(scores, n), y, c, params);
                    };
                    const double fd = central_diff(f, s.scores[static_cast<std::size_t>(k)]);
                    const double scale = std::max(
                        {std::abs(fd), std::abs(g[static_cast<std::size_t>(k)]), 1e-4});
                    // 1e-9*|f| covers the oracle's own cancellation noise
                    CHECK(std::abs(g[static_cast<std::size_t>(k)] - fd) <=
                          1e-5 * scale + 1e-9 * std::abs(f0));
                    gsum += g[static_cast<std::size_t>(k)];
                }
                CHECK(std::abs(gsum) <= 1e-10 * std::max(1.0, std::abs(f0)));
            }
        }
    }
    SUBCASE("frozen gradient components") {
        const auto g = grad_surrogate_L_mu(ScoreVector({0, 0, 0}, 2), 1, CostModel(0.5),
                                           CompSumParams(1));
        CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
        const auto g2 = grad_comp_sum_loss(ScoreVector({0, 0, 0}, 2), 1, CompSumParams(2));
        CHECK(g2[0] == doctest::Approx(-2.0 / 9.0).epsilon(1e-12));
    }
    SUBCASE("grad_two_stage_loss") {
        for (auto kind : {MarginFunction::Kind::exponential, MarginFunction::Kind::logistic}) {
            const MarginFunction phi(kind);
            for (int i = 0; i < 1000; ++i) {
                const int n = 2 + static_cast<int>(rng.index(3));
                std::vector<double> pred(static_cast<std::size_t>(n));
                for (auto& v : pred) v = rng.uniform(-5.0, 5.0);
                const double r = rng.uniform(-5.0, 5.0);
                const double cost = rng.uniform(0.05, 0.95);
                const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
                const double g = grad_two_stage_loss(pred, r, y, CostModel(cost), phi);
                auto f = [&](double x) {
                    return two_stage_loss(pred, x, y, CostModel(cost), phi);
                };
                const double fd = central_diff(f, r);
                const double scale = std::max({std::abs(fd), std::abs(g), 1e-4});
                CHECK(std::abs(g - fd) <= 1e-5 * scale + 1e-9 * std::abs(f(r)));
            }
        }
        // frozen from the finite-difference oracle
        const MarginFunction exp_phi = MarginFunction::exponential();
        CHECK(grad_two_stage_loss(std::vector<double>{1.0, 0.0}, 0.0, 1, CostModel(0.2),
                                  exp_phi) ==
              doctest::Approx(0.2 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(grad_two_stage_loss(std::vector<double>{1.0, 0.0}, 1.0, 2, CostModel(0.5),
                                  exp_phi) == doctest::Approx(-0.5).epsilon(1e-12));
        // vanishing tail: correct prediction, rejector far below the max
        CHECK(std::abs(grad_two_stage_loss(std::vector<double>{1.0, 0.0}, -60.0, 1,
                                           CostModel(0.5), exp_phi)) < 1e-12);
    }
}

TEST_CASE("loss family structure") {
    Rng rng(29);
    SUBCASE("translation invariance") {
        for (int i = 0; i < 2000; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n);
            const double alpha = rng.uniform(-10.0, 10.0);
            auto shifted = s.scores;
            for (auto& v : shifted) v += alpha;
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
            const double mu = rng.uniform(0.0, 3.0);
            const double a = comp_sum_loss(ScoreVector(shifted, n), y, CompSumParams(mu));
            const double b = comp_sum_loss(s, y, CompSumParams(mu));
            CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
        }
    }
    SUBCASE("monotone non-increasing in mu") {
        for (int i = 0; i < 2000; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n);
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
            double mu1 = rng.uniform(0.0, 4.0), mu2 = rng.uniform(0.0, 4.0);
            if (mu1 > mu2) std::swap(mu1, mu2);
            CHECK(comp_sum_loss(s, y, CompSumParams(mu1)) >=
                  comp_sum_loss(s, y, CompSumParams(mu2)) - 1e-12);
        }
    }
    SUBCASE("continuity at the canonicalized points") {
        // |d ell/d mu| at mu=1 equals z^2/2, so the 1e-5 budget at a
        // 1e-6 perturbation needs moderate scores.
        for (int i = 0; i < 500; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n, 1.0);
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
            for (double at : {1.0, 2.0}) {
                const double center = comp_sum_loss(s, y, CompSumParams(at));
                for (double eps : {-1e-6, 1e-6}) {
                    CHECK(std::abs(comp_sum_loss(s, y, CompSumParams(at + eps)) - center) <=
                          1e-5);
                }
            }
        }
    }
    SUBCASE("nonnegativity") {
        for (int i = 0; i < 2000; ++i) {
            const int n = 2 + static_cast<int>(rng.index(4));
            const auto s = random_scores(rng, n);
            const int y = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
            CHECK(comp_sum_loss(s, y, CompSumParams(rng.uniform(0.0, 4.0))) >= 0.0);
        }
    }
}
