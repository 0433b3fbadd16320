#include "abstain/distribution.hpp"

#include <cmath>
#include <stdexcept>

#include "abstain/common.hpp"

namespace abstain {

ConditionalDistribution::ConditionalDistribution(std::vector<double> p, CostModel cost)
    : p_(std::move(p)), cost_(cost) {
    if (p_.size() < 2)
        throw std::invalid_argument("ConditionalDistribution: need n >= 2 labels");
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("ConditionalDistribution: negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("ConditionalDistribution: entries must sum to 1");
}

bool ConditionalDistribution::deterministic(double tol) const {
    for (double v : p_)
        if (std::min(v, std::abs(1.0 - v)) > tol) return false;
    return true;
}

DiscreteProblem::DiscreteProblem(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("DiscreteProblem: no atoms");
    const int n0 = atoms_.front().dist.n();
    const double c0 = atoms_.front().dist.c();
    const bool feat = atoms_.front().features.has_value();
    double wsum = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.weight > 0.0)) throw std::invalid_argument("DiscreteProblem: weight must be > 0");
        if (a.dist.n() != n0) throw std::invalid_argument("DiscreteProblem: atoms must share n");
        if (a.dist.c() != c0) throw std::invalid_argument("DiscreteProblem: atoms must share c");
        if (a.features.has_value() != feat)
            throw std::invalid_argument("DiscreteProblem: inconsistent feature presence");
        if (feat && a.features->size() != atoms_.front().features->size())
            throw std::invalid_argument("DiscreteProblem: inconsistent feature dimension");
        wsum += a.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("DiscreteProblem: weights must sum to 1");
}

int DiscreteProblem::feature_dim() const {
    return has_features() ? static_cast<int>(atoms_.front().features->size()) : 0;
}

double conditional_risk_abstention(int decision, const ConditionalDistribution& dist) {
    if (decision < 1 || decision > dist.n() + 1)
        throw std::invalid_argument("conditional_risk_abstention: decision out of range");
    return 1.0 - dist.p_plus(decision);
}

int chow_decision(const ConditionalDistribution& dist) {
    int arg = 1;
    double best = dist.p_plus(1);
    for (int y = 2; y <= dist.n(); ++y) {
        if (dist.p_plus(y) > best) {
            best = dist.p_plus(y);
            arg = y;
        }
    }
    return 1.0 - dist.c() >= best ? dist.n() + 1 : arg;
}

double abstention_calibration_gap(int decision, const ConditionalDistribution& dist) {
    return dist.p_plus(chow_decision(dist)) - dist.p_plus(decision);
}

double conditional_risk_surrogate(const ScoreVector& s, const ConditionalDistribution& dist,
                                  const CompSumParams& params) {
    if (s.n != dist.n())
        throw std::invalid_argument("conditional_risk_surrogate: n mismatch");
    double risk = 0.0;
    for (int y = 1; y <= dist.n() + 1; ++y) risk += dist.p_plus(y) * comp_sum_loss(s, y, params);
    return risk;
}

}  // namespace abstain
