#pragma once

#include "gnlab/space.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace gnlab {

/// Nonincreasing right-continuous step function on [0, ∞): value values[i] on
/// [breaks[i], breaks[i+1]) and 0 from breaks.back() on. breaks[0] == 0 and the
/// values are strictly decreasing and positive (equal levels are merged, so each
/// gap is the measure of one level set).
struct StepFunction {
  std::vector<double> breaks;  ///< size k+1
  std::vector<double> values;  ///< size k
  double domain_end = 0.0;     ///< μ(M)

  double operator()(double t) const;
  /// ∫₀ᵗ (f*)^q ds, exact per piece.
  double integral_power(double t, double q = 1.0) const;
  double support_end() const { return breaks.back(); }
  /// CSV rows "t_start,t_end,value".
  std::string to_csv() const;
};

/// μ({x : |f(x)| > λ}).
double distribution(const Space& space, const VertexFunction& f, double lambda);

/// f* built by sorting |f| weighted by μ.
StepFunction decreasing_rearrangement(const Space& space, const VertexFunction& f);
/// Rearrangement of |f| from raw values and weights (no Space needed).
StepFunction decreasing_rearrangement(const VertexFunction& f, const VertexFunction& measure);

/// f**(t) = (1/t)∫₀ᵗ f*. Throws std::domain_error for t <= 0.
double double_star(const StepFunction& sf, double t);

struct QStarPowers {
  double star = 0.0;         ///< |f|^{q*}(t) = (f*(t))^q
  double double_star = 0.0;  ///< |f|^{q**1/q}(t) = ((1/t)∫₀ᵗ (f*)^q)^{1/q}
};

QStarPowers qstar_powers(const StepFunction& sf, double q, double t);
QStarPowers qstar_powers(const Space& space, const VertexFunction& f, double q, double t);

enum class LorentzVariant {
  double_star,  ///< (∫ (t^{1/p} f**(t))^r dt/t)^{1/r}
  star,         ///< (∫ (t^{1/p} f*(t))^r dt/t)^{1/r}
};

/// ‖f‖_{L(p,r)} over [0, μ(M)]; r = ∞ gives sup_t t^{1/p} f*(t). Requires
/// p > 1; p = ∞ only with r = ∞.
double lorentz_norm(const StepFunction& sf, double p, double r,
                    LorentzVariant variant = LorentzVariant::double_star);
double lorentz_norm(const Space& space, const VertexFunction& f, double p, double r,
                    LorentzVariant variant = LorentzVariant::double_star);

/// (∫₀ˢ (f*)^q du)^{1/q}. Equal to K(f, s; L₁, L_∞) for q = 1; for q > 1 it is
/// the standard equivalent of K(f, s^{1/q}; L_q, L_∞), not the exact value.
double k_functional_Lq_Linf(const Space& space, const VertexFunction& f, double q, double s);
double k_functional_Lq_Linf(const StepFunction& sf, double q, double s);

}  // namespace gnlab
