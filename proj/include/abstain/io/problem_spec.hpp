#pragma once

#include <string>

#include "abstain/distribution.hpp"

namespace abstain {

/// Line-oriented problem files: first non-comment line "n=<int> c=<real>",
/// then one atom per line "<weight> <p1> ... <pn> [| <f1> ... <fd>]".
/// '#' starts a comment. Probability and weight sums may be off by at
/// most 1e-9 before exact renormalization.
DiscreteProblem load_problem_spec(const std::string& path);

void save_problem_spec(const std::string& path, const DiscreteProblem& problem);

}  // namespace abstain
