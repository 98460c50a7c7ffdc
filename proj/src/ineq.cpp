#include "gnlab/ineq.hpp"

#include "gnlab/funcnorms.hpp"
#include "gnlab/rearrange.hpp"

#include "json.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gnlab {

namespace {

using json = nlohmann::ordered_json;

// lhs/rhs with the 0/0 rule; empty for a skipped pair.
std::optional<double> ratio_of(double lhs, double rhs) {
  if (std::abs(lhs) <= CheckReport::kZero && std::abs(rhs) <= CheckReport::kZero) return std::nullopt;
  if (std::abs(rhs) <= CheckReport::kZero) return kInf;
  return lhs / rhs;
}

// Largest ratio among offered pairs, for one report sample per reduction.
class Worst {
 public:
  void offer(double lhs, double rhs, Coordinates at) {
    const auto r = ratio_of(lhs, rhs);
    if (!r) {
      ++skipped_;
      return;
    }
    if (!have_ || *r > ratio_) {
      have_ = true;
      ratio_ = *r;
      lhs_ = lhs;
      rhs_ = rhs;
      at_ = std::move(at);
    }
  }
  void emit(CheckReport& rep, const std::string& f_id) const {
    rep.skip(skipped_);
    if (have_) rep.add(f_id, at_, lhs_, rhs_);
  }

 private:
  bool have_ = false;
  int skipped_ = 0;
  double ratio_ = 0.0, lhs_ = 0.0, rhs_ = 0.0;
  Coordinates at_;
};

json value_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json params_json(const Params& params) {
  json j = json::object();
  for (const auto& [k, v] : params)
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>)
            j[k] = value_json(x);
          else
            j[k] = x;
        },
        v);
  return j;
}

json sample_json(const Sample& s) {
  json at = json::object();
  for (const auto& [k, v] : s.at) at[k] = value_json(v);
  return json{{"f_id", s.f_id}, {"at", at}, {"lhs", value_json(s.lhs)}, {"rhs", value_json(s.rhs)},
              {"ratio", value_json(s.ratio)}};
}

// (|f|^{q**})^{1/q}(s) = ((1/s)∫₀ˢ (f*)^q)^{1/q} evaluated in O(log k).
class QDoubleStar {
 public:
  QDoubleStar(const StepFunction& sf, double q) : sf_(sf), q_(q) {
    cumulative_.push_back(0.0);
    for (std::size_t i = 0; i < sf.values.size(); ++i)
      cumulative_.push_back(cumulative_.back() + std::pow(sf.values[i], q) * (sf.breaks[i + 1] - sf.breaks[i]));
  }
  double operator()(double s) const {
    const auto it = std::upper_bound(sf_.breaks.begin(), sf_.breaks.end(), s);
    const auto i = static_cast<std::size_t>(it - sf_.breaks.begin()) - 1;
    double acc = cumulative_[i];
    if (i < sf_.values.size()) acc += std::pow(sf_.values[i], q_) * (s - sf_.breaks[i]);
    return std::pow(acc / s, 1.0 / q_);
  }

 private:
  const StepFunction& sf_;
  double q_;
  std::vector<double> cumulative_;
};

double q_double_star(const StepFunction& sf, double q, double s) { return qstar_powers(sf, q, s).double_star; }

void require_q(double q, const char* who) {
  if (!(q >= 1.0)) throw std::domain_error(std::string(who) + ": q must be >= 1");
}

void require_grid(const std::vector<double>& grid, const char* who) {
  if (grid.empty()) throw std::domain_error(std::string(who) + ": empty grid");
  for (double s : grid)
    if (!(s > 0.0)) throw std::domain_error(std::string(who) + ": grid points must be > 0");
}

double endpoint_norm(const Semigroup& sg, const VertexFunction& f, double alpha, EndpointNorm norm) {
  return norm == EndpointNorm::besov ? besov_norm(sg, f, alpha).value
                                     : morrey_norm(sg.space(), f, alpha, sg.space().diameter()).value;
}

std::string grid_note(const char* what, const std::vector<double>& grid) {
  std::ostringstream out;
  out.precision(6);
  out << what << " in [" << grid.front() << ", " << grid.back() << "], " << grid.size() << " points";
  return out.str();
}

// Shared body of the three symmetrization checkers: `endpoint(s)` is the
// endpoint factor at s before the power 1/(1+|α|).
template <class Endpoint>
void symmetrization_samples(CheckReport& rep, const Space& space, const std::string& f_id, const VertexFunction& f,
                            double q, double alpha, const std::vector<double>& s_grid, GradientMode mode,
                            Endpoint endpoint) {
  const double a = std::abs(alpha);
  const StepFunction sf = decreasing_rearrangement(space, f);
  const StepFunction sg = decreasing_rearrangement(space, gradient_modulus(space, f, mode));
  for (double s : s_grid) {
    const double lhs = q_double_star(sf, q, s);
    const double rhs = std::pow(q_double_star(sg, q, s), a / (1.0 + a)) * std::pow(endpoint(s), 1.0 / (1.0 + a));
    rep.add(f_id, {{"s", s}}, lhs, rhs);
  }
}

}  // namespace

void CheckReport::add(const std::string& f_id, Coordinates at, double lhs, double rhs) {
  const auto r = ratio_of(lhs, rhs);
  if (!r) {
    ++n_skipped;
    return;
  }
  samples.push_back({f_id, std::move(at), lhs, rhs, *r});
  if (!std::isfinite(*r)) diverges = true;
  if (!witness || *r > constant) {
    constant = *r;
    witness = samples.back();
  }
}

std::string CheckReport::to_json(const std::string& config_json) const {
  json j;
  j["name"] = name;
  j["version"] = kVersion;
  j["config"] = json::parse(config_json);
  j["params"] = params_json(params);
  j["constant"] = value_json(constant);
  j["diverges"] = diverges;
  j["witness"] = witness ? sample_json(*witness) : json(nullptr);
  j["n_samples"] = samples.size();
  j["n_skipped"] = n_skipped;
  j["range_note"] = range_note;
  j["findings"] = params_json(findings);
  json rows = json::array();
  for (const Sample& s : samples) rows.push_back(sample_json(s));
  j["samples"] = std::move(rows);
  return j.dump(1) + "\n";
}

std::string CheckReport::samples_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "f_id";
  if (!samples.empty())
    for (const auto& c : samples.front().at) out << ',' << c.first;
  out << ",lhs,rhs,ratio\n";
  for (const Sample& s : samples) {
    out << s.f_id;
    for (const auto& c : s.at) out << ',' << c.second;
    out << ',' << s.lhs << ',' << s.rhs << ',' << s.ratio << '\n';
  }
  return out.str();
}

ExponentSet exponents(double p, double l, std::optional<double> nu) {
  if (!(p >= 1.0 && p < l && std::isfinite(l)))
    throw std::domain_error("exponents: need 1 <= p < l < inf");
  ExponentSet e;
  e.p = p;
  e.l = l;
  e.theta = p / l;
  e.alpha = p / (p - l);
  if (nu) {
    if (!(*nu > p)) throw std::domain_error("exponents: need nu > p");
    e.nu = nu;
    e.p_star = 1.0 / (1.0 / p - 1.0 / *nu);
  }
  return e;
}

std::vector<double> default_s_grid(const Space& space, int points) {
  if (points < 1) throw std::domain_error("default_s_grid: points must be >= 1");
  const double lo = space.min_measure(), hi = space.total_measure();
  if (points == 1) return {hi};
  std::vector<double> grid;
  for (int i = 0; i < points; ++i)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  grid.back() = hi;
  return grid;
}

CheckReport check_doubling(const Space& space, int r_max) {
  if (r_max < 1) throw std::domain_error("check_doubling: r_max must be >= 1");
  CheckReport rep;
  rep.name = "doubling";
  rep.params = {{"r_max", double(r_max)}};
  rep.range_note = "r in [1, " + std::to_string(r_max) + "], radii clamped at the diameter " +
                   std::to_string(space.diameter());
  std::vector<double> per_radius;
  for (int r = 1; r <= r_max; ++r) {
    double best = 0.0, lhs = 0.0, rhs = 1.0;
    Index at = 0;
    for (Index x = 0; x < space.size(); ++x) {
      const double big = space.ball_measure(x, 2 * r), small = space.ball_measure(x, r);
      if (big / small > best) {
        best = big / small;
        lhs = big;
        rhs = small;
        at = x;
      }
    }
    per_radius.push_back(best);
    rep.add("", {{"r", double(r)}, {"x", double(at)}}, lhs, rhs);
  }
  double growth = 0.0;
  int growth_radius = 0;
  for (int r = 1; 2 * r <= r_max && 4 * r <= space.diameter(); ++r) {
    const double g = per_radius[static_cast<std::size_t>(2 * r - 1)] / per_radius[static_cast<std::size_t>(r - 1)];
    if (g > growth) {
      growth = g;
      growth_radius = r;
    }
  }
  if (growth_radius > 0) {
    rep.findings = {{"growth_over_octave", growth}, {"growth_radius", double(growth_radius)}};
    if (growth > 2.0) rep.diverges = true;
  }
  return rep;
}

PoincareEigen poincare_eigen_constant(const Space& space, int r_max, Index ball_cap) {
  if (r_max < 1) throw std::domain_error("poincare_eigen_constant: r_max must be >= 1");
  PoincareEigen out;
  const int r_hi = std::min(r_max, space.diameter());
  std::vector<Index> local(static_cast<std::size_t>(space.size()), -1);
  const VertexFunction& mu = space.measure();
  for (Index x = 0; x < space.size(); ++x)
    for (int r = 1; r <= r_hi; ++r) {
      const auto ball = space.ball(x, r);
      const auto m = static_cast<Index>(ball.size());
      if (m > ball_cap) {
        ++out.capped;
        continue;
      }
      ++out.balls;
      for (Index i = 0; i < m; ++i) local[static_cast<std::size_t>(ball[static_cast<std::size_t>(i)])] = i;
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
      for (Index i = 0; i < m; ++i) {
        const Index u = ball[static_cast<std::size_t>(i)];
        for (const Neighbor& nb : space.neighbors(u)) {
          const Index j = local[static_cast<std::size_t>(nb.vertex)];
          if (j <= i) continue;
          const double w = (mu[u] + mu[nb.vertex]) * nb.weight;
          L(i, i) += w;
          L(j, j) += w;
          L(i, j) -= w;
          L(j, i) -= w;
        }
      }
      Eigen::VectorXd inv_sqrt(m);
      for (Index i = 0; i < m; ++i) inv_sqrt[i] = 1.0 / std::sqrt(mu[ball[static_cast<std::size_t>(i)]]);
      const Eigen::MatrixXd S = inv_sqrt.asDiagonal() * L * inv_sqrt.asDiagonal();
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      const double c = 1.0 / (r * std::sqrt(es.eigenvalues()[1]));
      if (c > out.constant) {
        out.constant = c;
        out.center = x;
        out.radius = r;
      }
      for (Index v : ball) local[static_cast<std::size_t>(v)] = -1;
    }
  return out;
}

CheckReport check_poincare(const Space& space, const Corpus& corpus, const PoincareOptions& opt) {
  require_q(opt.q, "check_poincare");
  if (opt.r_max < 1) throw std::domain_error("check_poincare: r_max must be >= 1");
  CheckReport rep;
  rep.name = "poincare";
  rep.params = {{"q", opt.q}, {"r_max", double(opt.r_max)}, {"gradient", std::string(to_string(opt.mode))}};
  const int r_hi = std::min(opt.r_max, space.diameter());
  rep.range_note = "all centers, r in [1, " + std::to_string(r_hi) + "]; gradient on edges inside the ball";
  const VertexFunction& mu = space.measure();
  std::vector<Index> stamp(static_cast<std::size_t>(space.size()), -1);
  Index ball_id = 0;
  for (const auto& fn : corpus.functions) {
    const VertexFunction& f = fn.values;
    for (int r = 1; r <= r_hi; ++r) {
      Worst worst;
      for (Index x = 0; x < space.size(); ++x, ++ball_id) {
        const auto ball = space.ball(x, r);
        const double mb = space.ball_measure(x, r);
        double fb = 0.0;
        for (Index z : ball) {
          fb += mu[z] * f[z];
          stamp[static_cast<std::size_t>(z)] = ball_id;
        }
        fb /= mb;
        double osc = 0.0, grad = 0.0;
        for (Index z : ball) {
          osc += mu[z] * std::pow(std::abs(f[z] - fb), opt.q);
          double g = 0.0;
          for (const Neighbor& nb : space.neighbors(z)) {
            if (stamp[static_cast<std::size_t>(nb.vertex)] != ball_id) continue;
            const double d = f[nb.vertex] - f[z];
            g = opt.mode == GradientMode::l2 ? g + nb.weight * d * d : std::max(g, std::sqrt(nb.weight) * std::abs(d));
          }
          if (opt.mode == GradientMode::l2) g = std::sqrt(g);
          grad += mu[z] * std::pow(g, opt.q);
        }
        worst.offer(std::pow(osc / mb, 1.0 / opt.q), r * std::pow(grad / mb, 1.0 / opt.q),
                    {{"r", double(r)}, {"x", double(x)}});
      }
      worst.emit(rep, fn.id);
    }
  }
  if (opt.eigen && opt.q == 2.0 && opt.mode == GradientMode::l2) {
    const PoincareEigen e = poincare_eigen_constant(space, opt.r_max, opt.ball_cap);
    rep.findings = {{"eigen_constant", e.constant},
                    {"eigen_center", double(e.center)},
                    {"eigen_radius", double(e.radius)},
                    {"eigen_balls", double(e.balls)},
                    {"eigen_capped", double(e.capped)}};
  }
  return rep;
}

CheckReport check_pseudo_poincare_heat(const Semigroup& sg, const Corpus& corpus, double q, GradientMode mode) {
  require_q(q, "check_pseudo_poincare_heat");
  CheckReport rep;
  rep.name = std::isinf(q) ? "pseudo_poincare_heat_inf" : "pseudo_poincare_heat";
  rep.params = {{"q", q}, {"gradient", std::string(to_string(mode))}};
  const auto& grid = sg.t_grid();
  rep.range_note = grid_note("t", grid);
  const Space& space = sg.space();
  for (const auto& fn : corpus.functions) {
    const double grad = lp_norm(space, gradient_modulus(space, fn.values, mode), q);
    const Eigen::MatrixXd P = sg.apply_many(fn.values, grid);
    for (std::size_t j = 0; j < grid.size(); ++j)
      rep.add(fn.id, {{"t", grid[j]}}, lp_norm(space, fn.values - P.col(static_cast<Index>(j)), q),
              std::sqrt(grid[j]) * grad);
  }
  return rep;
}

CheckReport check_pseudo_poincare_avg(const Space& space, const Corpus& corpus, double q, int r_max,
                                      GradientMode mode) {
  require_q(q, "check_pseudo_poincare_avg");
  if (r_max < 1) throw std::domain_error("check_pseudo_poincare_avg: r_max must be >= 1");
  CheckReport rep;
  rep.name = "pseudo_poincare_avg";
  rep.params = {{"q", q}, {"r_max", double(r_max)}, {"gradient", std::string(to_string(mode))}};
  const int r_hi = std::min(r_max, space.diameter());
  rep.range_note = "r in [1, " + std::to_string(r_hi) + "]";
  for (const auto& fn : corpus.functions) {
    const double grad = lp_norm(space, gradient_modulus(space, fn.values, mode), q);
    for (int r = 1; r <= r_hi; ++r) {
      VertexFunction avg(space.size());
      for (Index x = 0; x < space.size(); ++x) avg[x] = space.ball_average(fn.values, x, r);
      rep.add(fn.id, {{"r", double(r)}}, lp_norm(space, fn.values - avg, q), r * grad);
    }
  }
  return rep;
}

CheckReport check_rearranged_pseudo_poincare(const Semigroup& sg, const Corpus& corpus, double q,
                                             const std::vector<double>& s_grid, GradientMode mode) {
  require_q(q, "check_rearranged_pseudo_poincare");
  require_grid(s_grid, "check_rearranged_pseudo_poincare");
  CheckReport rep;
  rep.name = "rearranged_pseudo_poincare";
  rep.params = {{"q", q}, {"gradient", std::string(to_string(mode))}};
  const auto& grid = sg.t_grid();
  rep.range_note = grid_note("t", grid) + "; " + grid_note("s", s_grid) + "; worst s per (f, t)";
  const Space& space = sg.space();
  for (const auto& fn : corpus.functions) {
    const StepFunction sgrad = decreasing_rearrangement(space, gradient_modulus(space, fn.values, mode));
    std::vector<double> grad_s;
    for (double s : s_grid) grad_s.push_back(q_double_star(sgrad, q, s));
    const Eigen::MatrixXd P = sg.apply_many(fn.values, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const StepFunction sd = decreasing_rearrangement(space, fn.values - P.col(static_cast<Index>(j)));
      Worst worst;
      for (std::size_t i = 0; i < s_grid.size(); ++i)
        worst.offer(q_double_star(sd, q, s_grid[i]), std::sqrt(grid[j]) * grad_s[i],
                    {{"t", grid[j]}, {"s", s_grid[i]}});
      worst.emit(rep, fn.id);
    }
  }
  return rep;
}

CheckReport check_symmetrization_besov(const Semigroup& sg, const Corpus& corpus, double q, double alpha,
                                       const std::vector<double>& s_grid, GradientMode mode) {
  require_q(q, "check_symmetrization_besov");
  require_grid(s_grid, "check_symmetrization_besov");
  if (!(alpha < 0.0)) throw std::domain_error("check_symmetrization_besov: alpha must be < 0");
  CheckReport rep;
  rep.name = "symmetrization_besov";
  rep.params = {{"q", q}, {"alpha", alpha}, {"gradient", std::string(to_string(mode))}};
  rep.range_note = grid_note("s", s_grid) + "; Besov seminorm over " + grid_note("t", sg.t_grid());
  for (const auto& fn : corpus.functions) {
    const double n = besov_norm(sg, fn.values, alpha).value;
    if (n <= CheckReport::kZero) {
      rep.skip(static_cast<int>(s_grid.size()));
      continue;
    }
    symmetrization_samples(rep, sg.space(), fn.id, fn.values, q, alpha, s_grid, mode, [&](double) { return n; });
  }
  return rep;
}

CheckReport check_symmetrization_morrey(const Space& space, const Corpus& corpus, double q, double alpha,
                                        const std::vector<double>& s_grid, GradientMode mode) {
  require_q(q, "check_symmetrization_morrey");
  require_grid(s_grid, "check_symmetrization_morrey");
  if (!(alpha < 0.0)) throw std::domain_error("check_symmetrization_morrey: alpha must be < 0");
  CheckReport rep;
  rep.name = "symmetrization_morrey";
  rep.params = {{"q", q}, {"alpha", alpha}, {"gradient", std::string(to_string(mode))}};
  rep.range_note = grid_note("s", s_grid) + "; Morrey radii up to " + std::to_string(space.diameter());
  for (const auto& fn : corpus.functions) {
    const double n = morrey_norm(space, fn.values, alpha, space.diameter()).value;
    if (n <= CheckReport::kZero) {
      rep.skip(static_cast<int>(s_grid.size()));
      continue;
    }
    symmetrization_samples(rep, space, fn.id, fn.values, q, alpha, s_grid, mode, [&](double) { return n; });
  }
  return rep;
}

CheckReport check_symmetrization_triebel(const Semigroup& sg, const Corpus& corpus, double q, double alpha,
                                         const std::vector<double>& s_grid, GradientMode mode) {
  require_q(q, "check_symmetrization_triebel");
  require_grid(s_grid, "check_symmetrization_triebel");
  if (!(alpha < 0.0)) throw std::domain_error("check_symmetrization_triebel: alpha must be < 0");
  CheckReport rep;
  rep.name = "symmetrization_triebel";
  rep.params = {{"q", q}, {"alpha", alpha}, {"gradient", std::string(to_string(mode))}};
  rep.range_note = grid_note("s", s_grid) + "; pointwise supremum over " + grid_note("t", sg.t_grid());
  for (const auto& fn : corpus.functions) {
    const VertexFunction sup = triebel_sup(sg, fn.values, alpha);
    if (sup.maxCoeff() <= CheckReport::kZero) {
      rep.skip(static_cast<int>(s_grid.size()));
      continue;
    }
    const StepFunction ssup = decreasing_rearrangement(sg.space(), sup);
    symmetrization_samples(rep, sg.space(), fn.id, fn.values, q, alpha, s_grid, mode,
                           [&](double s) { return q_double_star(ssup, q, s); });
  }
  return rep;
}

const char* to_string(EndpointNorm n) { return n == EndpointNorm::besov ? "besov" : "morrey"; }
const char* to_string(GnVariant v) { return v == GnVariant::global ? "global" : "local"; }

CheckReport check_gn(const Semigroup& sg, const Corpus& corpus, double p, double l, EndpointNorm norm,
                     GnVariant variant, GradientMode mode) {
  const ExponentSet ex = exponents(p, l);
  CheckReport rep;
  rep.name = std::string("gn_") + to_string(norm) + (variant == GnVariant::local ? "_local" : "");
  rep.params = {{"p", p},         {"l", l},
                {"theta", ex.theta}, {"alpha", ex.alpha},
                {"norm", std::string(to_string(norm))}, {"variant", std::string(to_string(variant))},
                {"gradient", std::string(to_string(mode))}};
  rep.range_note = norm == EndpointNorm::besov ? "Besov seminorm over " + grid_note("t", sg.t_grid())
                                               : "Morrey radii up to " + std::to_string(sg.space().diameter());
  const Space& space = sg.space();
  for (const auto& fn : corpus.functions) {
    const double n = endpoint_norm(sg, fn.values, ex.alpha, norm);
    if (n <= CheckReport::kZero) {
      rep.skip();
      continue;
    }
    double a = lp_norm(space, gradient_modulus(space, fn.values, mode), p);
    if (variant == GnVariant::local) a += lp_norm(space, fn.values, p);
    rep.add(fn.id, {}, lp_norm(space, fn.values, l), std::pow(a, ex.theta) * std::pow(n, 1.0 - ex.theta));
  }
  return rep;
}

double weak_lebesgue_norm(const Space& space, const VertexFunction& f, double l) {
  if (!(l >= 1.0)) throw std::domain_error("weak_lebesgue_norm: l must be >= 1");
  const StepFunction sf = decreasing_rearrangement(space, f);
  double sup = 0.0;
  for (std::size_t i = 0; i < sf.values.size(); ++i)
    sup = std::max(sup, sf.values[i] * std::pow(sf.breaks[i + 1], 1.0 / l));
  return sup;
}

CheckReport check_gn_weak(const Semigroup& sg, const Corpus& corpus, double q, double l, EndpointNorm norm,
                          GradientMode mode) {
  const ExponentSet ex = exponents(q, l);
  CheckReport rep;
  rep.name = std::string("gn_weak_") + to_string(norm);
  rep.params = {{"q", q}, {"l", l}, {"alpha", ex.alpha}, {"norm", std::string(to_string(norm))},
                {"gradient", std::string(to_string(mode))}};
  rep.range_note = "sup over all levels of |f|";
  const Space& space = sg.space();
  for (const auto& fn : corpus.functions) {
    const double n = endpoint_norm(sg, fn.values, ex.alpha, norm);
    if (n <= CheckReport::kZero) {
      rep.skip();
      continue;
    }
    const double a = lp_norm(space, gradient_modulus(space, fn.values, mode), q);
    rep.add(fn.id, {}, weak_lebesgue_norm(space, fn.values, l), std::pow(a, q / l) * std::pow(n, 1.0 - q / l));
  }
  return rep;
}

CheckReport check_sobolev_recovery(const Semigroup& sg, const Corpus& corpus, double q, double nu, double t_lo,
                                   double t_hi, GradientMode mode) {
  require_q(q, "check_sobolev_recovery");
  if (!(nu > q)) throw std::domain_error("check_sobolev_recovery: need nu > q");
  if (!(t_lo > 0.0 && t_hi >= t_lo)) throw std::domain_error("check_sobolev_recovery: need 0 < t_lo <= t_hi");
  if (!sg.is_dense()) throw std::domain_error("check_sobolev_recovery: needs the dense kernel");
  const double q_star = 1.0 / (1.0 / q - 1.0 / nu);
  CheckReport rep;
  rep.name = "sobolev_recovery";
  rep.params = {{"q", q}, {"nu", nu}, {"q_star", q_star}, {"gradient", std::string(to_string(mode))}};
  const std::vector<double> times = doubling_grid(t_lo, t_hi);
  rep.range_note = grid_note("kernel t", times) + "; functions with nonzero mean skipped";

  double kernel_constant = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (double t : times) {
    const double v = heat_q_to_inf_norm(sg, q, t);
    kernel_constant = std::max(kernel_constant, std::pow(t, nu / (2.0 * q)) * v);
    const double x = std::log(t), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const auto k = static_cast<double>(times.size());
  const double slope = times.size() > 1 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : 0.0;
  rep.findings = {{"kernel_constant", kernel_constant}, {"kernel_slope", slope}, {"kernel_points", k}};

  const Space& space = sg.space();
  for (const auto& fn : corpus.functions) {
    const double scale = std::max(1.0, fn.values.cwiseAbs().maxCoeff());
    if (std::abs(mean(space, fn.values)) > 1e-10 * scale) {
      rep.skip();
      continue;
    }
    rep.add(fn.id, {}, lp_norm(space, fn.values, q_star),
            lp_norm(space, gradient_modulus(space, fn.values, mode), q));
  }
  return rep;
}

CheckReport check_oscillation(const Space& space, const Corpus& corpus, double q, double sigma,
                              const std::vector<double>& t_grid, GradientMode mode) {
  require_q(q, "check_oscillation");
  require_grid(t_grid, "check_oscillation");
  if (!(sigma > 0.0)) throw std::domain_error("check_oscillation: sigma must be > 0");
  CheckReport rep;
  rep.name = "oscillation";
  rep.params = {{"q", q}, {"sigma", sigma}, {"gradient", std::string(to_string(mode))}};
  rep.range_note = grid_note("t", t_grid);
  for (const auto& fn : corpus.functions) {
    const StepFunction sf = decreasing_rearrangement(space, fn.values);
    const StepFunction sgrad = decreasing_rearrangement(space, gradient_modulus(space, fn.values, mode));
    for (double t : t_grid)
      rep.add(fn.id, {{"t", t}}, double_star(sf, t) - sf(t),
              std::pow(t, 1.0 / sigma) * q_double_star(sgrad, q, t));
  }
  return rep;
}

LorentzExponents lorentz_exponents(double theta, double p, double l, double m0, double m1, double sigma, double q) {
  LorentzExponents e{theta, p, l, m0, m1, sigma, q, 0.0, 0.0, 0.0};
  e.p_star = 1.0 / (1.0 / p - 1.0 / sigma);
  e.r = 1.0 / ((1.0 - theta) / e.p_star + theta / l);
  e.m = 1.0 / ((1.0 - theta) / m0 + theta / m1);
  validate_lorentz_exponents(e);
  return e;
}

void validate_lorentz_exponents(const LorentzExponents& e) {
  std::vector<std::string> failed;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  if (!(e.theta >= 0.0 && e.theta <= 1.0)) failed.push_back("0 <= theta <= 1");
  if (!(e.q >= 1.0)) failed.push_back("q >= 1");
  if (!(e.q < e.p && e.p < e.sigma)) failed.push_back("q < p < sigma");
  if (!(e.m0 >= e.q && e.m0 >= 1.0)) failed.push_back("m0 >= max(q, 1)");
  if (!(e.m1 >= 1.0)) failed.push_back("m1 >= 1");
  if (!(e.l > 1.0)) failed.push_back("l > 1");
  if (!close(1.0 / e.p_star, 1.0 / e.p - 1.0 / e.sigma)) failed.push_back("1/p* = 1/p - 1/sigma");
  if (!close(1.0 / e.r, (1.0 - e.theta) / e.p_star + e.theta / e.l)) failed.push_back("1/r = (1-theta)/p* + theta/l");
  if (!close(1.0 / e.m, (1.0 - e.theta) / e.m0 + e.theta / e.m1)) failed.push_back("1/m = (1-theta)/m0 + theta/m1");
  if (failed.empty()) return;
  std::string msg = "lorentz exponents violate:";
  for (const auto& f : failed) msg += " [" + f + "]";
  throw std::domain_error(msg);
}

CheckReport check_lorentz_gn(const Space& space, const Corpus& corpus, const LorentzExponents& e, GradientMode mode) {
  validate_lorentz_exponents(e);
  CheckReport rep;
  rep.name = "lorentz_gn";
  rep.params = {{"theta", e.theta}, {"p", e.p},         {"l", e.l},
                {"m0", e.m0},       {"m1", e.m1},       {"sigma", e.sigma},
                {"q", e.q},         {"p_star", e.p_star}, {"r", e.r},
                {"m", e.m},         {"gradient", std::string(to_string(mode))}};
  rep.range_note = "Lorentz integrals over [0, mu(M)]";
  double embedding = 0.0;
  for (const auto& fn : corpus.functions) {
    const VertexFunction grad = gradient_modulus(space, fn.values, mode);
    const double g = lorentz_norm(space, grad, e.p, e.m0, LorentzVariant::star);
    const double f1 = e.theta > 0.0 ? lorentz_norm(space, fn.values, e.l, e.m1) : 1.0;
    const double lhs = lorentz_norm(space, fn.values, e.r, e.m);
    rep.add(fn.id, {}, lhs, std::pow(g, 1.0 - e.theta) * std::pow(f1, e.theta));
    if (e.theta == 0.0 && lhs > CheckReport::kZero)
      embedding = std::max(embedding, lorentz_norm(space, fn.values, e.p_star, e.p_star) / lhs);
  }
  if (e.theta == 0.0) rep.findings = {{"embedding_constant", embedding}};
  return rep;
}

CheckReport check_nonlinear_gn(const Semigroup& sg, const Corpus& corpus, double p, EndpointNorm norm) {
  if (!(p >= 2.0)) throw std::domain_error("check_nonlinear_gn: p must be >= 2");
  const Space& space = sg.space();
  CheckReport rep;
  rep.name = std::string("nonlinear_gn_") + to_string(norm);
  rep.params = {{"p", p}, {"norm", std::string(to_string(norm))}, {"gradient", std::string("l2")}};
  rep.range_note = norm == EndpointNorm::besov ? "Besov seminorm at alpha = -1 over " + grid_note("t", sg.t_grid())
                                               : "Morrey norm at alpha = -1, radii up to " +
                                                     std::to_string(space.diameter());
  const VertexFunction& mu = space.measure();
  for (const auto& fn : corpus.functions) {
    const VertexFunction g = gradient_modulus(space, fn.values, GradientMode::l2);
    const VertexFunction h = hessian_modulus(space, fn.values);
    const double n = endpoint_norm(sg, fn.values, -1.0, norm);
    const double lhs = (g.array().pow(p + 1.0) * mu.array()).sum();
    const double rhs = n * (h.array().square() * g.array().pow(p - 2.0) * mu.array()).sum();
    rep.add(fn.id, {}, lhs, rhs);
  }
  return rep;
}

CheckReport check_nonlinear_gn_chain(const Space& space, const Corpus& corpus, double p, double q) {
  if (!(p >= 2.0)) throw std::domain_error("check_nonlinear_gn_chain: p must be >= 2");
  require_q(q, "check_nonlinear_gn_chain");
  CheckReport rep;
  rep.name = "nonlinear_gn_chain";
  rep.params = {{"p", p}, {"q", q}, {"gradient", std::string("l2")}};
  rep.range_note = "one sample per (f, step); integrals over [0, mu(M)]";
  const VertexFunction& mu = space.measure();
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  constexpr double kSlack = 1e-8;
  bool holds = true;
  for (const auto& fn : corpus.functions) {
    const VertexFunction& f = fn.values;
    const VertexFunction g = gradient_modulus(space, f, GradientMode::l2);
    const VertexFunction h = hessian_modulus(space, f);
    const VertexFunction u = g.array().pow(p / 2.0);
    const VertexFunction v = g.array().pow((p - 2.0) / 2.0) * h.array();
    const VertexFunction w = f.cwiseAbs();

    const double s0 = (u.array() * v.array() * w.array() * mu.array()).sum();
    const StepFunction suvw = decreasing_rearrangement(space, VertexFunction(u.array() * v.array() * w.array()));
    const double s1 = suvw.integral_power(suvw.support_end(), 1.0);

    const StepFunction sg = decreasing_rearrangement(space, g);
    const StepFunction sf = decreasing_rearrangement(space, f);
    const StepFunction sv = decreasing_rearrangement(space, v);
    // (|∇f|^{p/2})* = (|∇f|*)^{p/2}, so every factor is read off sg, sv, sf.
    std::vector<double> breaks;
    for (const auto* s : {&sg, &sf, &sv}) breaks.insert(breaks.end(), s->breaks.begin(), s->breaks.end());
    breaks.push_back(space.total_measure());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const QDoubleStar qg(sg, q), qf(sf, q);
    auto X = [&](double s) { return std::pow(qg(s), p / 2.0) * qf(s); };
    double s2 = 0.0, s3 = 0.0, x2 = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double a = breaks[i], b = breaks[i + 1];
      const double mid = 0.5 * (a + b);
      const double vv = sv(mid);
      s2 += std::pow(sg(mid), p / 2.0) * vv * sf(mid) * (b - a);
      if (vv > 0.0) s3 += vv * gk.integrate(X, a, b, 15, 1e-13);
      x2 += gk.integrate([&](double s) { return X(s) * X(s); }, a, b, 15, 1e-13);
    }
    const double s4 = std::sqrt(x2) * std::sqrt((v.array().square() * mu.array()).sum());
    const double steps[] = {s0, s1, s2, s3, s4};
    for (int k = 0; k < 4; ++k) {
      rep.add(fn.id, {{"step", double(k)}}, steps[k], steps[k + 1]);
      const auto r = ratio_of(steps[k], steps[k + 1]);
      if (r && !(*r <= 1.0 + kSlack)) holds = false;
    }
  }
  rep.findings = {{"chain_holds", holds}, {"slack", kSlack}};
  return rep;
}

CheckReport check_G_implies_pseudo(const Semigroup& sg, const Corpus& corpus, double p, GradientMode mode) {
  if (!(p > 1.0)) throw std::domain_error("check_G_implies_pseudo: p must lie in (1, inf]");
  const double pc = std::isinf(p) ? 1.0 : p / (p - 1.0);
  CheckReport rep;
  rep.name = "G_implies_pseudo";
  rep.params = {{"p", p}, {"p_conjugate", pc}, {"gradient", std::string(to_string(mode))}};
  const auto& grid = sg.t_grid();
  const Space& space = sg.space();

  std::vector<double> fine;
  const double lo = grid.front() / 16.0, hi = grid.back();
  for (int j = 0; lo * std::pow(2.0, j / 8.0) <= hi * (1 + 1e-12); ++j) fine.push_back(lo * std::pow(2.0, j / 8.0));
  rep.range_note = grid_note("t", grid) + "; " + grid_note("s", fine);

  double gradient_constant = 0.0, witness_s = 0.0;
  for (const auto& fn : corpus.functions) {
    const double grad = lp_norm(space, gradient_modulus(space, fn.values, mode), pc);
    const Eigen::MatrixXd P = sg.apply_many(fn.values, grid);
    for (std::size_t j = 0; j < grid.size(); ++j)
      rep.add(fn.id, {{"t", grid[j]}}, lp_norm(space, fn.values - P.col(static_cast<Index>(j)), pc),
              std::sqrt(grid[j]) * grad);
    if (grad <= CheckReport::kZero) continue;
    const Eigen::MatrixXd Ps = sg.apply_many(fn.values, fine);
    for (std::size_t j = 0; j < fine.size(); ++j) {
      const double v =
          std::sqrt(fine[j]) * lp_norm(space, apply_laplacian(space, Ps.col(static_cast<Index>(j))), pc) / grad;
      if (v > gradient_constant) {
        gradient_constant = v;
        witness_s = fine[j];
      }
    }
  }
  rep.findings = {{"gradient_constant", gradient_constant},
                  {"gradient_witness_s", witness_s},
                  {"chain_holds", rep.constant <= 2.0 * gradient_constant * (1.0 + 1e-6)}};
  return rep;
}

CheckReport kprime_check(const Space& space, const Corpus& corpus, double q, const std::vector<double>& t_grid,
                         const KPrimeSolveOptions& options) {
  const EquivalenceReport eq = equivalence_report(space, corpus, q, t_grid, options);
  CheckReport rep;
  rep.name = "kprime_equivalence";
  rep.params = {{"q", q}, {"gradient", std::string("max")}, {"lambda_points", double(options.lambda_points)}};
  rep.range_note = grid_note("t", t_grid) + "; lhs = solver value, rhs = rearrangement lower bound";
  for (const auto& row : eq.rows) rep.add(row.f_id, {{"t", row.t}, {"upper", row.upper}}, row.solver, row.lower);
  rep.n_skipped += eq.n_skipped;
  rep.findings = {{"min_ratio", eq.min_ratio},      {"median_ratio", eq.median_ratio},
                  {"max_ratio", eq.max_ratio},      {"ratios_ok", eq.ratios_ok},
                  {"all_converged", eq.all_converged}};
  return rep;
}

}  // namespace gnlab
