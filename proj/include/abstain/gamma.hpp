#pragma once

#include <string>

namespace abstain {

/// Concave non-decreasing transform with Γ(0)=0, as appears on the
/// right-hand side of every consistency bound. sqrt_k is Γ(t)=√(k·t),
/// linear_k is Γ(t)=k·t; composed wraps either with outer/inner scales,
/// Γ(t) = outer·base(t/inner).
struct GammaTransform {
    enum class Kind { sqrt_k, linear_k, composed };

    Kind kind = Kind::sqrt_k;
    double k = 1.0;
    Kind base_kind = Kind::sqrt_k;  // for composed
    double outer = 1.0, inner = 1.0;

    static GammaTransform sqrt(double k);
    static GammaTransform linear(double k);

    double operator()(double t) const;
    bool is_linear() const;
    std::string describe() const;

    /// Γ(0)=0, non-decreasing and concave, checked on a 1000-point grid
    /// over [0, 10]. Throws on violation.
    void validate() const;
};

/// The Γ_μ of the cross-entropy score-based consistency bound:
///   μ∈[0,1):  √((2−c)·2^μ·(2−μ)·t)
///   μ∈[1,2):  √(2(2−c)(n+1)^{μ−1}·t)
///   μ≥2:      (μ−1)(n+1)^{μ−1}·t
double gamma_mu(double t, double mu, double cost, int n);

/// Same as gamma_mu but returned as a transform object.
GammaTransform gamma_mu_transform(double mu, double cost, int n);

/// t ↦ (2−c)·Γ(t/(2−c)): lifts a standard-classification bound to the
/// abstention surrogate. sqrt_k maps to sqrt_{k(2−c)}; linear is a
/// fixed point.
GammaTransform transform_bound(const GammaTransform& gamma, double cost);

}  // namespace abstain
