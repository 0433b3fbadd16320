#pragma once

#include <functional>

#include "abstain/distribution.hpp"
#include "abstain/model.hpp"
#include "abstain/train.hpp"

namespace abstain {

/// Exact expected abstention loss of a decision rule on a finite
/// problem: Σ_atoms w · (1 − p⁺[decision(atom)]).
inline double problem_abstention_risk(const DiscreteProblem& problem,
                                      const std::function<int(const DiscreteProblem::Atom&)>& decide) {
    double risk = 0.0;
    for (const auto& atom : problem.atoms())
        risk += atom.weight * conditional_risk_abstention(decide(atom), atom.dist);
    return risk;
}

inline int single_stage_decision(const Model& model, const DiscreteProblem::Atom& atom) {
    const auto scores = forward(model, *atom.features);
    ScoreVector s(scores, atom.dist.n());
    return predict_label(s);
}

inline double problem_abstention_risk_single(const Model& model,
                                             const DiscreteProblem& problem) {
    return problem_abstention_risk(
        problem, [&](const DiscreteProblem::Atom& a) { return single_stage_decision(model, a); });
}

inline double problem_abstention_risk_two_stage(const Model& predictor, const Model& rejector,
                                                const DiscreteProblem& problem) {
    return problem_abstention_risk(problem, [&](const DiscreteProblem::Atom& a) {
        return two_stage_decision(predictor, rejector, *a.features);
    });
}

/// Exact expected L_μ risk of a single-stage model.
inline double problem_surrogate_risk_single(const Model& model, const DiscreteProblem& problem,
                                            const CompSumParams& params) {
    double risk = 0.0;
    for (const auto& atom : problem.atoms()) {
        ScoreVector s(forward(model, *atom.features), atom.dist.n());
        risk += atom.weight * conditional_risk_surrogate(s, atom.dist, params);
    }
    return risk;
}

/// Exact Bayes abstention risk: Σ w·(1 − p⁺[chow]).
inline double problem_bayes_abstention_risk(const DiscreteProblem& problem) {
    return problem_abstention_risk(
        problem, [](const DiscreteProblem::Atom& a) { return chow_decision(a.dist); });
}

/// Probability mass of atoms where the rule agrees with the Chow
/// decision.
inline double chow_agreement_mass(const DiscreteProblem& problem,
                                  const std::function<int(const DiscreteProblem::Atom&)>& decide) {
    double mass = 0.0;
    for (const auto& atom : problem.atoms())
        if (decide(atom) == chow_decision(atom.dist)) mass += atom.weight;
    return mass;
}

}  // namespace abstain
