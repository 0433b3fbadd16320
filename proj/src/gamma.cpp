#include "abstain/gamma.hpp"

#include <cmath>
#include <stdexcept>

namespace abstain {

GammaTransform GammaTransform::sqrt(double k) {
    GammaTransform g;
    g.kind = Kind::sqrt_k;
    g.k = k;
    return g;
}

GammaTransform GammaTransform::linear(double k) {
    GammaTransform g;
    g.kind = Kind::linear_k;
    g.k = k;
    return g;
}

double GammaTransform::operator()(double t) const {
    switch (kind) {
        case Kind::sqrt_k:
            return std::sqrt(k * t);
        case Kind::linear_k:
            return k * t;
        case Kind::composed: {
            const double inner_t = t / inner;
            const double base =
                base_kind == Kind::sqrt_k ? std::sqrt(k * inner_t) : k * inner_t;
            return outer * base;
        }
    }
    return 0.0;
}

bool GammaTransform::is_linear() const {
    return kind == Kind::linear_k || (kind == Kind::composed && base_kind == Kind::linear_k);
}

std::string GammaTransform::describe() const {
    switch (kind) {
        case Kind::sqrt_k:
            return "sqrt(" + std::to_string(k) + "*t)";
        case Kind::linear_k:
            return std::to_string(k) + "*t";
        case Kind::composed:
            return std::to_string(outer) + "*base(t/" + std::to_string(inner) + ")";
    }
    return "";
}

void GammaTransform::validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("GammaTransform: constant must be > 0");
    const auto& g = *this;
    if (std::abs(g(0.0)) > 1e-12) throw std::invalid_argument("GammaTransform: Gamma(0) != 0");
    constexpr int kGrid = 1000;
    double prev = 0.0, prev_diff = 0.0;
    const double step = 10.0 / kGrid;
    for (int i = 1; i <= kGrid; ++i) {
        const double v = g(i * step);
        const double diff = v - prev;
        if (diff < -1e-12) throw std::invalid_argument("GammaTransform: not non-decreasing");
        if (i > 1 && diff > prev_diff + 1e-12)
            throw std::invalid_argument("GammaTransform: not concave");
        prev = v;
        prev_diff = diff;
    }
}

double gamma_mu(double t, double mu, double cost, int n) {
    if (t < 0.0) throw std::invalid_argument("gamma_mu: t must be >= 0");
    if (mu < 1.0) return std::sqrt((2.0 - cost) * std::pow(2.0, mu) * (2.0 - mu) * t);
    if (mu < 2.0) return std::sqrt(2.0 * (2.0 - cost) * std::pow(n + 1, mu - 1.0) * t);
    return (mu - 1.0) * std::pow(n + 1, mu - 1.0) * t;
}

GammaTransform gamma_mu_transform(double mu, double cost, int n) {
    if (mu < 1.0) return GammaTransform::sqrt((2.0 - cost) * std::pow(2.0, mu) * (2.0 - mu));
    if (mu < 2.0) return GammaTransform::sqrt(2.0 * (2.0 - cost) * std::pow(n + 1, mu - 1.0));
    return GammaTransform::linear((mu - 1.0) * std::pow(n + 1, mu - 1.0));
}

GammaTransform transform_bound(const GammaTransform& gamma, double cost) {
    const double s = 2.0 - cost;
    GammaTransform out = gamma;
    switch (gamma.kind) {
        case GammaTransform::Kind::sqrt_k:
            out.k = gamma.k * s;
            break;
        case GammaTransform::Kind::linear_k:
            break;  // (2-c)*k*(t/(2-c)) = k*t
        case GammaTransform::Kind::composed:
            out.outer = gamma.outer * s;
            out.inner = gamma.inner * s;
            break;
    }
    out.validate();
    return out;
}

}  // namespace abstain
