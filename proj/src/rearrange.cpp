#include "gnlab/rearrange.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gnlab {

double StepFunction::operator()(double t) const {
  if (t < 0.0) throw std::domain_error("StepFunction: negative argument");
  // First break strictly greater than t.
  auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  if (it == breaks.end()) return 0.0;
  return values[static_cast<std::size_t>(it - breaks.begin()) - 1];
}

double StepFunction::integral_power(double t, double q) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (t <= breaks[i]) break;
    const double hi = std::min(t, breaks[i + 1]);
    acc += std::pow(values[i], q) * (hi - breaks[i]);
  }
  return acc;
}

std::string StepFunction::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "t_start,t_end,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << breaks[i] << ',' << breaks[i + 1] << ',' << values[i] << '\n';
  return out.str();
}

double distribution(const Space& space, const VertexFunction& f, double lambda) {
  double acc = 0.0;
  for (Index x = 0; x < f.size(); ++x)
    if (std::abs(f[x]) > lambda) acc += space.measure()[x];
  return acc;
}

StepFunction decreasing_rearrangement(const VertexFunction& f, const VertexFunction& measure) {
  std::vector<Index> idx(static_cast<std::size_t>(f.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double fa = std::abs(f[a]), fb = std::abs(f[b]);
    return fa != fb ? fa > fb : a < b;
  });
  StepFunction sf;
  sf.domain_end = measure.sum();
  sf.breaks.push_back(0.0);
  double t = 0.0;
  for (Index x : idx) {
    const double v = std::abs(f[x]);
    if (v == 0.0) break;
    t += measure[x];
    if (!sf.values.empty() && sf.values.back() == v) {
      sf.breaks.back() = t;
    } else {
      sf.values.push_back(v);
      sf.breaks.push_back(t);
    }
  }
  return sf;
}

StepFunction decreasing_rearrangement(const Space& space, const VertexFunction& f) {
  return decreasing_rearrangement(f, space.measure());
}

double double_star(const StepFunction& sf, double t) {
  if (!(t > 0.0)) throw std::domain_error("double_star: t must be > 0");
  return sf.integral_power(t, 1.0) / t;
}

QStarPowers qstar_powers(const StepFunction& sf, double q, double t) {
  if (!(q >= 1.0)) throw std::domain_error("qstar_powers: q must be >= 1");
  if (!(t > 0.0)) throw std::domain_error("qstar_powers: t must be > 0");
  return {std::pow(sf(t), q), std::pow(sf.integral_power(t, q) / t, 1.0 / q)};
}

QStarPowers qstar_powers(const Space& space, const VertexFunction& f, double q, double t) {
  return qstar_powers(decreasing_rearrangement(space, f), q, t);
}

double lorentz_norm(const StepFunction& sf, double p, double r, LorentzVariant variant) {
  if (!(p > 1.0)) throw std::domain_error("lorentz_norm: p must be > 1");
  if (!(r >= 1.0)) throw std::domain_error("lorentz_norm: r must be >= 1");
  if (std::isinf(p) && !std::isinf(r)) throw std::domain_error("lorentz_norm: p = inf requires r = inf");
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const std::size_t k = sf.values.size();
  if (k == 0) return 0.0;

  if (std::isinf(r)) {
    // sup over [t_{i-1}, t_i) of t^{1/p} v_i is approached at t_i.
    double sup = 0.0;
    for (std::size_t i = 0; i < k; ++i) sup = std::max(sup, std::pow(sf.breaks[i + 1], inv_p) * sf.values[i]);
    return sup;
  }

  const double a = r * inv_p;  // exponent of t in (t^{1/p} g)^r
  double total = 0.0;
  if (variant == LorentzVariant::star) {
    for (std::size_t i = 0; i < k; ++i)
      total += std::pow(sf.values[i], r) * (std::pow(sf.breaks[i + 1], a) - std::pow(sf.breaks[i], a)) / a;
    return std::pow(total, 1.0 / r);
  }

  // f**(t) = (c + v t)/t on piece i with c = A_{i-1} - v t_{i-1}; on the first
  // piece c = 0 and the integral is closed-form. Past the support f** = ‖f‖₁/t.
  double cumulative = sf.values[0] * sf.breaks[1];
  total = std::pow(sf.values[0], r) * std::pow(sf.breaks[1], a) / a;
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  for (std::size_t i = 1; i < k; ++i) {
    const double lo = sf.breaks[i], hi = sf.breaks[i + 1], v = sf.values[i];
    const double c = cumulative - v * lo;
    auto integrand = [&](double t) { return std::pow((c + v * t) / t, r) * std::pow(t, a - 1.0); };
    total += gk.integrate(integrand, lo, hi, 15, 1e-10);
    cumulative += v * (hi - lo);
  }
  const double end = sf.domain_end;
  if (end > sf.breaks[k]) {
    // ∫ (A/t)^r t^{a-1} dt with exponent a - r - 1.
    const double e = a - r;
    const double A = cumulative;
    total += std::abs(e) < 1e-14 ? std::pow(A, r) * std::log(end / sf.breaks[k])
                                  : std::pow(A, r) * (std::pow(end, e) - std::pow(sf.breaks[k], e)) / e;
  }
  return std::pow(total, 1.0 / r);
}

double lorentz_norm(const Space& space, const VertexFunction& f, double p, double r, LorentzVariant variant) {
  return lorentz_norm(decreasing_rearrangement(space, f), p, r, variant);
}

double k_functional_Lq_Linf(const StepFunction& sf, double q, double s) {
  if (!(s > 0.0)) throw std::domain_error("k_functional: s must be > 0");
  if (!(q >= 1.0)) throw std::domain_error("k_functional: q must be >= 1");
  return std::pow(sf.integral_power(s, q), 1.0 / q);
}

double k_functional_Lq_Linf(const Space& space, const VertexFunction& f, double q, double s) {
  return k_functional_Lq_Linf(decreasing_rearrangement(space, f), q, s);
}

}  // namespace gnlab
