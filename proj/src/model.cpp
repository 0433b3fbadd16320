#include "abstain/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "abstain/common.hpp"
#include "abstain/dataset.hpp"

namespace abstain {

double TabularDataset::total_weight() const {
    if (weights.empty()) return static_cast<double>(m);
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

void TabularDataset::validate() const {
    if (m < 1) throw std::invalid_argument("TabularDataset: empty dataset");
    if (d < 1) throw std::invalid_argument("TabularDataset: no features");
    if (n < 2) throw std::invalid_argument("TabularDataset: need n >= 2");
    if (features.size() != static_cast<std::size_t>(m) * d)
        throw std::invalid_argument("TabularDataset: feature shape mismatch");
    if (labels.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("TabularDataset: label count mismatch");
    if (!weights.empty() && weights.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("TabularDataset: weight count mismatch");
    if (!all_finite(features)) throw std::invalid_argument("TabularDataset: non-finite feature");
    for (int y : labels)
        if (y < 1 || y > n) throw std::invalid_argument("TabularDataset: label out of range");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("TabularDataset: bad weight");
    if (!(total_weight() > 0.0))
        throw std::invalid_argument("TabularDataset: total weight must be positive");
}

Model Model::linear_zero(int input_dim, int outputs, double clamp) {
    if (input_dim < 1 || outputs < 1)
        throw std::invalid_argument("Model: dimensions must be positive");
    Model m;
    m.kind = Kind::linear;
    m.input_dim = input_dim;
    m.output_count = outputs;
    m.clamp = clamp;
    m.w1.assign(static_cast<std::size_t>(outputs) * input_dim, 0.0);
    m.b1.assign(static_cast<std::size_t>(outputs), 0.0);
    return m;
}

Model Model::mlp_seeded(int input_dim, int outputs, int width, double clamp,
                        std::uint64_t seed) {
    if (input_dim < 1 || outputs < 1 || width < 1)
        throw std::invalid_argument("Model: dimensions must be positive");
    Model m;
    m.kind = Kind::mlp;
    m.input_dim = input_dim;
    m.output_count = outputs;
    m.hidden_width = width;
    m.clamp = clamp;
    m.seed = seed;
    m.w1.resize(static_cast<std::size_t>(width) * input_dim);
    m.b1.assign(static_cast<std::size_t>(width), 0.0);
    m.w2.resize(static_cast<std::size_t>(outputs) * width);
    m.b2.assign(static_cast<std::size_t>(outputs), 0.0);
    Rng rng(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (auto& v : m.w1) v = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(width));
    for (auto& v : m.w2) v = rng.uniform(-bound2, bound2);
    return m;
}

std::size_t Model::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

std::uint64_t Model::parameter_hash() const {
    std::string bytes;
    bytes.reserve(parameter_count() * sizeof(double));
    auto append = [&bytes](const std::vector<double>& v) {
        bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    };
    append(w1);
    append(b1);
    append(w2);
    append(b2);
    return fnv1a64(bytes);
}

void Model::scale_weights(double alpha) {
    for (auto* block : {&w1, &b1, &w2, &b2})
        for (auto& v : *block) v *= alpha;
}

void Model::forward_raw(std::span<const double> x, std::vector<double>& scores,
                        std::vector<double>* hidden) const {
    if (static_cast<int>(x.size()) != input_dim)
        throw std::invalid_argument("Model: feature dimension mismatch");
    if (kind == Kind::linear) {
        scores.assign(static_cast<std::size_t>(output_count), 0.0);
        for (int o = 0; o < output_count; ++o) {
            double s = b1[static_cast<std::size_t>(o)];
            const double* row = w1.data() + static_cast<std::size_t>(o) * input_dim;
            for (int j = 0; j < input_dim; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
            scores[static_cast<std::size_t>(o)] = s;
        }
        if (hidden) hidden->clear();
        return;
    }
    std::vector<double> local;
    std::vector<double>& h = hidden ? *hidden : local;
    h.assign(static_cast<std::size_t>(hidden_width), 0.0);
    for (int k = 0; k < hidden_width; ++k) {
        double s = b1[static_cast<std::size_t>(k)];
        const double* row = w1.data() + static_cast<std::size_t>(k) * input_dim;
        for (int j = 0; j < input_dim; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        h[static_cast<std::size_t>(k)] = std::max(s, 0.0);  // rectifier
    }
    scores.assign(static_cast<std::size_t>(output_count), 0.0);
    for (int o = 0; o < output_count; ++o) {
        double s = b2[static_cast<std::size_t>(o)];
        const double* row = w2.data() + static_cast<std::size_t>(o) * hidden_width;
        for (int k = 0; k < hidden_width; ++k) s += row[k] * h[static_cast<std::size_t>(k)];
        scores[static_cast<std::size_t>(o)] = s;
    }
}

std::vector<double> forward(const Model& m, std::span<const double> x) {
    std::vector<double> scores;
    m.forward_raw(x, scores);
    if (m.clamp > 0.0)
        for (auto& s : scores) s = std::clamp(s, -m.clamp, m.clamp);
    return scores;
}

void backprop(const Model& m, std::span<const double> x,
              std::span<const double> raw_scores, std::span<const double> hidden,
              std::span<const double> dloss_dscores, double scale, std::span<double> grad) {
    const int out = m.output_count;
    std::vector<double> ds(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
        const bool clipped =
            m.clamp > 0.0 && std::abs(raw_scores[static_cast<std::size_t>(o)]) > m.clamp;
        ds[static_cast<std::size_t>(o)] =
            clipped ? 0.0 : scale * dloss_dscores[static_cast<std::size_t>(o)];
    }
    if (m.kind == Model::Kind::linear) {
        double* gw = grad.data();
        double* gb = grad.data() + m.w1.size();
        for (int o = 0; o < out; ++o) {
            const double g = ds[static_cast<std::size_t>(o)];
            if (g == 0.0) continue;
            double* row = gw + static_cast<std::size_t>(o) * m.input_dim;
            for (int j = 0; j < m.input_dim; ++j) row[j] += g * x[static_cast<std::size_t>(j)];
            gb[o] += g;
        }
        return;
    }
    double* gw1 = grad.data();
    double* gb1 = gw1 + m.w1.size();
    double* gw2 = gb1 + m.b1.size();
    double* gb2 = gw2 + m.w2.size();
    std::vector<double> dh(static_cast<std::size_t>(m.hidden_width), 0.0);
    for (int o = 0; o < out; ++o) {
        const double g = ds[static_cast<std::size_t>(o)];
        if (g == 0.0) continue;
        double* row = gw2 + static_cast<std::size_t>(o) * m.hidden_width;
        const double* w2row = m.w2.data() + static_cast<std::size_t>(o) * m.hidden_width;
        for (int k = 0; k < m.hidden_width; ++k) {
            row[k] += g * hidden[static_cast<std::size_t>(k)];
            dh[static_cast<std::size_t>(k)] += g * w2row[k];
        }
        gb2[o] += g;
    }
    for (int k = 0; k < m.hidden_width; ++k) {
        if (hidden[static_cast<std::size_t>(k)] <= 0.0) continue;  // rectifier gate
        const double g = dh[static_cast<std::size_t>(k)];
        if (g == 0.0) continue;
        double* row = gw1 + static_cast<std::size_t>(k) * m.input_dim;
        for (int j = 0; j < m.input_dim; ++j) row[j] += g * x[static_cast<std::size_t>(j)];
        gb1[k] += g;
    }
}

void apply_gradient(Model& m, std::span<const double> grad, double lr, double l2) {
    std::size_t off = 0;
    auto step = [&](std::vector<double>& block, bool weight_block) {
        for (auto& v : block) {
            double g = grad[off++];
            if (weight_block && l2 > 0.0) g += l2 * v;
            v -= lr * g;
        }
    };
    step(m.w1, true);
    step(m.b1, false);
    step(m.w2, true);
    step(m.b2, false);
}

}  // namespace abstain
