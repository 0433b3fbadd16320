#include "abstain/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "abstain/common.hpp"

namespace abstain {

void SyntheticRecipe::validate() const {
    if (n < 2) throw std::invalid_argument("SyntheticRecipe: n must be >= 2");
    if (d < 1) throw std::invalid_argument("SyntheticRecipe: d must be >= 1");
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("SyntheticRecipe: c must be in (0,1)");
    if (atom_count < n) throw std::invalid_argument("SyntheticRecipe: need at least n atoms");
    if (kind == Kind::separable_margin && !(margin > 0.0))
        throw std::invalid_argument("SyntheticRecipe: margin must be > 0");
    if (kind == Kind::label_noise && !(noise >= 0.0 && noise <= 0.5))
        throw std::invalid_argument("SyntheticRecipe: noise must lie in [0, 0.5]");
}

namespace {

constexpr double kFeatureRadiusLimit = 100.0;

// Unit anchor directions, one per class. d >= 2 spreads them on a
// circle in the first two coordinates.
std::vector<std::vector<double>> class_anchors(int n, int d) {
    std::vector<std::vector<double>> anchors(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(d), 0.0));
    if (d == 1) {
        if (n != 2)
            throw std::invalid_argument("generate: d=1 supports only n=2 separable classes");
        anchors[0][0] = 1.0;
        anchors[1][0] = -1.0;
        return anchors;
    }
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * k / n;
        anchors[static_cast<std::size_t>(k)][0] = std::cos(a);
        anchors[static_cast<std::size_t>(k)][1] = std::sin(a);
    }
    return anchors;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct SeparableAtoms {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;  // 1..n
    double certified_margin;
};

// Atoms clustered around scaled anchors; the anchor matrix itself is
// the separator whose minimum margin gets certified.
SeparableAtoms separable_atoms(const SyntheticRecipe& r) {
    const auto anchors = class_anchors(r.n, r.d);
    double min_sep = 2.0;  // min over pairs of (1 - <a_i, a_j>)
    for (int i = 0; i < r.n; ++i)
        for (int j = i + 1; j < r.n; ++j)
            min_sep = std::min(min_sep, 1.0 - dot(anchors[static_cast<std::size_t>(i)],
                                                  anchors[static_cast<std::size_t>(j)]));
    const double jitter = 0.2;
    // rho * min_sep - 2 * jitter >= margin, with headroom
    const double rho = (r.margin + 2.0 * jitter) / min_sep * 1.1;
    if (rho + jitter > kFeatureRadiusLimit)
        throw std::invalid_argument("generate: margin infeasible for this class geometry");

    SeparableAtoms out;
    out.certified_margin = 0.0;
    Rng rng(r.seed);
    for (int a = 0; a < r.atom_count; ++a) {
        const int label = a % r.n + 1;
        std::vector<double> x(static_cast<std::size_t>(r.d), 0.0);
        for (int j = 0; j < r.d; ++j)
            x[static_cast<std::size_t>(j)] =
                rho * anchors[static_cast<std::size_t>(label - 1)][static_cast<std::size_t>(j)] +
                rng.uniform(-jitter, jitter);
        out.features.push_back(std::move(x));
        out.labels.push_back(label);
    }
    // certify: solve nothing fancier than the constructed separator,
    // then measure its worst margin
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.features.size(); ++i) {
        const double own = dot(anchors[static_cast<std::size_t>(out.labels[i] - 1)], out.features[i]);
        for (int k = 1; k <= r.n; ++k) {
            if (k == out.labels[i]) continue;
            worst = std::min(worst, own - dot(anchors[static_cast<std::size_t>(k - 1)],
                                              out.features[i]));
        }
    }
    out.certified_margin = worst;
    if (worst < r.margin)
        throw std::invalid_argument("generate: constructed margin fell short of gamma");
    return out;
}

std::vector<double> noisy_conditional(int label, int n, double rho) {
    std::vector<double> p(static_cast<std::size_t>(n), n > 1 ? rho / (n - 1) : 0.0);
    p[static_cast<std::size_t>(label - 1)] = 1.0 - rho;
    return p;
}

}  // namespace

GeneratedProblem generate(const SyntheticRecipe& recipe) {
    recipe.validate();
    std::vector<DiscreteProblem::Atom> atoms;
    const double w = 1.0 / recipe.atom_count;
    const CostModel cost(recipe.c);

    if (recipe.kind == SyntheticRecipe::Kind::separable_margin ||
        recipe.kind == SyntheticRecipe::Kind::label_noise) {
        const double rho =
            recipe.kind == SyntheticRecipe::Kind::separable_margin ? 0.0 : recipe.noise;
        SyntheticRecipe base = recipe;
        if (base.kind == SyntheticRecipe::Kind::label_noise) {
            base.kind = SyntheticRecipe::Kind::separable_margin;
            if (!(base.margin > 0.0)) base.margin = 0.5;
        }
        auto sep = separable_atoms(base);
        for (int a = 0; a < recipe.atom_count; ++a) {
            atoms.push_back({w,
                             ConditionalDistribution(
                                 noisy_conditional(sep.labels[static_cast<std::size_t>(a)],
                                                   recipe.n, rho),
                                 cost),
                             sep.features[static_cast<std::size_t>(a)]});
        }
        GeneratedProblem out{DiscreteProblem(std::move(atoms)), sep.certified_margin};
        return out;
    }

    // chow_stress: half the atoms sit within ±0.05 of the 1−c boundary;
    // feasibility needs max p ≥ 1/n even at the low end of the window.
    const double boundary = 1.0 - recipe.c;
    if (boundary - 0.05 < 1.0 / recipe.n + 1e-9)
        throw std::invalid_argument(
            "generate: chow_stress infeasible, 1-c-0.05 must exceed 1/n");
    if (boundary + 0.05 > 1.0 - 1e-9)
        throw std::invalid_argument("generate: chow_stress infeasible, 1-c+0.05 must stay below 1");
    Rng rng(recipe.seed);
    for (int a = 0; a < recipe.atom_count; ++a) {
        const bool near = a % 2 == 0;  // exactly half when atom_count is even
        double top;
        if (near) {
            const double delta = rng.uniform(0.02, 0.05);
            top = boundary + (rng.coin() ? delta : -delta);
        } else {
            top = rng.coin() ? std::min(boundary + rng.uniform(0.15, 0.25), 0.98)
                             : std::max(boundary - rng.uniform(0.15, 0.25), 1.0 / recipe.n + 0.02);
        }
        const int label = static_cast<int>(rng.index(static_cast<std::size_t>(recipe.n))) + 1;
        std::vector<double> p(static_cast<std::size_t>(recipe.n), 0.0);
        // remaining mass spread so no other label challenges the top
        const double rest = (1.0 - top) / (recipe.n - 1);
        for (int y = 1; y <= recipe.n; ++y)
            p[static_cast<std::size_t>(y - 1)] = y == label ? top : rest;
        if (rest >= top)
            throw std::invalid_argument("generate: chow_stress produced a non-strict argmax");
        // distinct, well-scaled features: atoms spread on a circle
        std::vector<double> x(static_cast<std::size_t>(recipe.d), 0.0);
        const double angle = 2.0 * M_PI * a / recipe.atom_count;
        x[0] = 3.0 * std::cos(angle) + rng.uniform(-0.05, 0.05);
        if (recipe.d > 1) x[1] = 3.0 * std::sin(angle) + rng.uniform(-0.05, 0.05);
        for (int j = 2; j < recipe.d; ++j)
            x[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
        atoms.push_back({w, ConditionalDistribution(std::move(p), cost), std::move(x)});
    }
    return {DiscreteProblem(std::move(atoms)), 0.0};
}

TabularDataset sample_from_problem(const DiscreteProblem& problem, int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_from_problem: m must be >= 1");
    if (!problem.has_features())
        throw std::invalid_argument("sample_from_problem: problem has no features");
    Rng rng(seed);
    TabularDataset data;
    data.m = m;
    data.d = problem.feature_dim();
    data.n = problem.n();
    data.features.reserve(static_cast<std::size_t>(m) * data.d);
    data.labels.reserve(static_cast<std::size_t>(m));
    const auto& atoms = problem.atoms();
    for (int i = 0; i < m; ++i) {
        double u = rng.uniform();
        std::size_t a = 0;
        for (; a + 1 < atoms.size(); ++a) {
            if (u < atoms[a].weight) break;
            u -= atoms[a].weight;
        }
        const auto& atom = atoms[a];
        data.features.insert(data.features.end(), atom.features->begin(),
                             atom.features->end());
        double v = rng.uniform();
        int label = atom.dist.n();
        for (int y = 1; y <= atom.dist.n(); ++y) {
            const double py = atom.dist.p()[static_cast<std::size_t>(y - 1)];
            if (v < py) {
                label = y;
                break;
            }
            v -= py;
        }
        data.labels.push_back(label);
    }
    data.validate();
    return data;
}

TabularDataset expand_problem_to_dataset(const DiscreteProblem& problem) {
    if (!problem.has_features())
        throw std::invalid_argument("expand_problem_to_dataset: problem has no features");
    TabularDataset data;
    data.d = problem.feature_dim();
    data.n = problem.n();
    for (const auto& atom : problem.atoms()) {
        for (int y = 1; y <= data.n; ++y) {
            const double py = atom.dist.p()[static_cast<std::size_t>(y - 1)];
            if (py <= 0.0) continue;
            data.features.insert(data.features.end(), atom.features->begin(),
                                 atom.features->end());
            data.labels.push_back(y);
            data.weights.push_back(atom.weight * py);
            data.m += 1;
        }
    }
    data.validate();
    return data;
}

}  // namespace abstain
