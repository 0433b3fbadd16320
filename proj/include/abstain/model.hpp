#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace abstain {

/// Parametric scorer over feature vectors: either linear or a one
/// hidden-layer rectifier MLP. output_count is n+1 for single-stage
/// scorers, n for two-stage predictors and 1 for rejectors. A positive
/// clamp bounds every output score to [-clamp, +clamp].
struct Model {
    enum class Kind { linear, mlp };

    Kind kind = Kind::linear;
    int input_dim = 0;
    int output_count = 0;
    int hidden_width = 0;
    double clamp = 0.0;

    // linear: w1 is output_count x input_dim, b1 has output_count entries.
    // mlp: w1 hidden x input, b1 hidden, w2 output x hidden, b2 output.
    std::vector<double> w1, b1, w2, b2;

    // training provenance, carried through persistence
    std::string loss_tag;  // e.g. "L_mu", "ell_mu", "two_stage"
    double mu = 0.0;
    std::string phi_tag;
    double cost = 0.0;
    std::uint64_t seed = 0;

    static Model linear_zero(int input_dim, int outputs, double clamp = 0.0);
    static Model mlp_seeded(int input_dim, int outputs, int width, double clamp,
                            std::uint64_t seed);

    std::size_t parameter_count() const;
    std::uint64_t parameter_hash() const;
    void scale_weights(double alpha);

    /// Raw (unclamped) scores; training needs these for the clamp mask.
    void forward_raw(std::span<const double> x, std::vector<double>& scores,
                     std::vector<double>* hidden = nullptr) const;
};

/// Deterministic clamped scores of the model at x.
std::vector<double> forward(const Model& m, std::span<const double> x);

/// Accumulates d(loss)/d(params) into grad (laid out w1|b1|w2|b2) given
/// d(loss)/d(clamped scores). Scores outside the clamp contribute zero.
void backprop(const Model& m, std::span<const double> x,
              std::span<const double> raw_scores, std::span<const double> hidden,
              std::span<const double> dloss_dscores, double scale, std::span<double> grad);

void apply_gradient(Model& m, std::span<const double> grad, double lr, double l2);

}  // namespace abstain
