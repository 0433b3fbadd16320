#pragma once

#include <cstdint>

#include "abstain/dataset.hpp"
#include "abstain/distribution.hpp"

namespace abstain {

/// Synthetic problem recipes. separable_margin builds deterministic
/// labels that a linear scorer separates with certified margin γ;
/// label_noise flips each deterministic label with probability ρ inside
/// the conditional vectors; chow_stress places max_y p within ±0.05 of
/// 1−c on exactly half the atoms.
struct SyntheticRecipe {
    enum class Kind { separable_margin, label_noise, chow_stress };
    Kind kind = Kind::separable_margin;
    int n = 3;
    int d = 2;
    double c = 0.2;
    double margin = 0.5;   // separable_margin
    double noise = 0.1;    // label_noise, in [0, 0.5]
    int atom_count = 60;
    std::uint64_t seed = 7;

    void validate() const;
};

struct GeneratedProblem {
    DiscreteProblem problem;
    double certified_margin = 0.0;  // separable kinds only
};

GeneratedProblem generate(const SyntheticRecipe& recipe);

/// i.i.d. sample of size m: atom by weight, label by its conditional.
TabularDataset sample_from_problem(const DiscreteProblem& problem, int m, std::uint64_t seed);

/// Exact weighted expansion: one example per (atom, label) pair with
/// weight w·p(y|x). Training on it minimizes the exact expected risk.
TabularDataset expand_problem_to_dataset(const DiscreteProblem& problem);

}  // namespace abstain
