#include "abstain/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "abstain/common.hpp"

namespace abstain {

ScoreVector::ScoreVector(std::vector<double> s, int n_labels)
    : scores(std::move(s)), n(n_labels) {
    if (n < 2) throw std::invalid_argument("ScoreVector: n must be >= 2");
    if (scores.size() != static_cast<std::size_t>(n) + 1)
        throw std::invalid_argument("ScoreVector: expected n+1 scores");
    if (!all_finite(scores)) throw std::invalid_argument("ScoreVector: non-finite score");
}

CostModel::CostModel(double c) : c_(c) {
    if (!(c > 0.0 && c < 1.0))
        throw std::invalid_argument("CostModel: c must lie in (0, 1)");
}

CompSumParams::CompSumParams(double mu) : mu_(mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("CompSumParams: mu must be >= 0");
    if (std::abs(mu_ - 1.0) <= 1e-12) mu_ = 1.0;
    if (std::abs(mu_ - 2.0) <= 1e-12) mu_ = 2.0;
}

double MarginFunction::operator()(double t) const {
    if (kind_ == Kind::exponential) return std::exp(-t);
    // log2(1 + e^{-t}) without overflow on either tail
    const double sp = t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    return sp / M_LN2;
}

double MarginFunction::derivative(double t) const {
    if (kind_ == Kind::exponential) return -std::exp(-t);
    // -1 / ((1 + e^{t}) ln 2)
    if (t > 500.0) return 0.0;
    return -1.0 / ((1.0 + std::exp(t)) * M_LN2);
}

int predict_label(const ScoreVector& s) {
    double best = s[1];
    int arg = 1;
    for (int y = 2; y <= s.n; ++y) {
        if (s[y] > best) {
            best = s[y];
            arg = y;
        }
    }
    return s[s.n + 1] >= best ? s.n + 1 : arg;
}

double abstention_loss(const ScoreVector& s, int y, const CostModel& cost) {
    if (y < 1 || y > s.n) throw std::invalid_argument("abstention_loss: label out of range");
    const int pred = predict_label(s);
    if (pred == s.n + 1) return cost.c();
    return pred == y ? 0.0 : 1.0;
}

double comp_sum_loss_over(std::span<const double> scores, std::size_t y_index,
                          const CompSumParams& params) {
    const double z = logsumexp(scores) - scores[y_index];  // logsumexp(scores - scores[y]) >= 0
    if (params.is_one()) return z;
    const double mu = params.mu();
    return std::expm1((1.0 - mu) * z) / (1.0 - mu);
}

double comp_sum_loss(const ScoreVector& s, int y, const CompSumParams& params) {
    if (y < 1 || y > s.n + 1) throw std::invalid_argument("comp_sum_loss: label out of range");
    return comp_sum_loss_over(s.scores, static_cast<std::size_t>(y - 1), params);
}

double surrogate_L_mu(const ScoreVector& s, int y, const CostModel& cost,
                      const CompSumParams& params) {
    if (y < 1 || y > s.n) throw std::invalid_argument("surrogate_L_mu: label out of range");
    return comp_sum_loss(s, y, params) + (1.0 - cost.c()) * comp_sum_loss(s, s.n + 1, params);
}

double generic_surrogate(const BaseLoss& base, const ScoreVector& s, int y,
                         const CostModel& cost) {
    if (y < 1 || y > s.n) throw std::invalid_argument("generic_surrogate: label out of range");
    return base(s, y) + (1.0 - cost.c()) * base(s, s.n + 1);
}

namespace {

// smallest-index argmax plus the max value
std::pair<int, double> top_label(std::span<const double> scores) {
    int arg = 1;
    double best = scores[0];
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > best) {
            best = scores[i];
            arg = static_cast<int>(i) + 1;
        }
    }
    return {arg, best};
}

}  // namespace

double two_stage_loss(std::span<const double> predictor_scores, double rejector_score,
                      int y, const CostModel& cost, const MarginFunction& phi) {
    if (predictor_scores.size() < 2)
        throw std::invalid_argument("two_stage_loss: need at least 2 predictor scores");
    if (y < 1 || y > static_cast<int>(predictor_scores.size()))
        throw std::invalid_argument("two_stage_loss: label out of range");
    const auto [arg, m] = top_label(predictor_scores);
    const double wrong = arg != y ? 1.0 : 0.0;
    return wrong * phi(rejector_score - m) + cost.c() * phi(m - rejector_score);
}

std::vector<double> softmax(std::span<const double> scores) {
    double m = scores[0];
    for (double v : scores) m = std::max(m, v);
    std::vector<double> out(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - m);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

std::vector<double> softmax(const ScoreVector& s) { return softmax(std::span<const double>(s.scores)); }

std::vector<double> grad_comp_sum_loss_over(std::span<const double> scores,
                                            std::size_t y_index, const CompSumParams& params) {
    // With z = logsumexp(scores) - scores[y] and sigma = softmax(scores):
    //   d ell_mu / d scores_k = e^{(1-mu) z} (sigma_k - 1_{k=y}).
    const double z = logsumexp(scores) - scores[y_index];
    const double g = params.is_one() ? 1.0 : std::exp((1.0 - params.mu()) * z);
    auto sig = softmax(scores);
    for (auto& v : sig) v *= g;
    sig[y_index] -= g;
    return sig;
}

std::vector<double> grad_comp_sum_loss(const ScoreVector& s, int y,
                                       const CompSumParams& params) {
    return grad_comp_sum_loss_over(s.scores, static_cast<std::size_t>(y - 1), params);
}

std::vector<double> grad_surrogate_L_mu(const ScoreVector& s, int y, const CostModel& cost,
                                        const CompSumParams& params) {
    auto g = grad_comp_sum_loss(s, y, params);
    const auto g_rej = grad_comp_sum_loss(s, s.n + 1, params);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += (1.0 - cost.c()) * g_rej[k];
    return g;
}

double grad_two_stage_loss(std::span<const double> predictor_scores, double rejector_score,
                           int y, const CostModel& cost, const MarginFunction& phi) {
    const auto [arg, m] = top_label(predictor_scores);
    const double wrong = arg != y ? 1.0 : 0.0;
    return wrong * phi.derivative(rejector_score - m) -
           cost.c() * phi.derivative(m - rejector_score);
}

}  // namespace abstain
