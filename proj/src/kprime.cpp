#include "gnlab/kprime.hpp"

#include "gnlab/funcnorms.hpp"
#include "gnlab/rearrange.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace gnlab {

namespace {

// (Kg)_e = √w_xy (g(y) - g(x)) for every directed edge e = x→y, grouped by source,
// so block x of a dual vector holds the edges leaving x.
class EdgeDifferences {
 public:
  explicit EdgeDifferences(const Space& sp) {
    offset_.push_back(0);
    for (Index x = 0; x < sp.size(); ++x) {
      for (const Neighbor& nb : sp.neighbors(x)) {
        src_.push_back(x);
        dst_.push_back(nb.vertex);
        sqrt_w_.push_back(std::sqrt(nb.weight));
      }
      offset_.push_back(static_cast<Index>(dst_.size()));
    }
  }

  Index vertices() const { return static_cast<Index>(offset_.size()) - 1; }
  Index edges() const { return static_cast<Index>(dst_.size()); }
  Index block_begin(Index x) const { return offset_[static_cast<std::size_t>(x)]; }
  Index block_end(Index x) const { return offset_[static_cast<std::size_t>(x) + 1]; }
  double sqrt_weight(Index e) const { return sqrt_w_[static_cast<std::size_t>(e)]; }
  Index target(Index e) const { return dst_[static_cast<std::size_t>(e)]; }

  void apply(const Eigen::VectorXd& g, Eigen::VectorXd& out) const {
    out.resize(edges());
    for (Index e = 0; e < edges(); ++e) {
      const auto k = static_cast<std::size_t>(e);
      out[e] = sqrt_w_[k] * (g[dst_[k]] - g[src_[k]]);
    }
  }

  void adjoint(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
    out.setZero(vertices());
    for (Index e = 0; e < edges(); ++e) {
      const auto k = static_cast<std::size_t>(e);
      const double v = sqrt_w_[k] * y[e];
      out[dst_[k]] += v;
      out[src_[k]] -= v;
    }
  }

  /// Per-vertex max of |z_e| over the block.
  Eigen::VectorXd block_max(const Eigen::VectorXd& z) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(vertices());
    for (Index x = 0; x < vertices(); ++x)
      for (Index e = block_begin(x); e < block_end(x); ++e) a[x] = std::max(a[x], std::abs(z[e]));
    return a;
  }

 private:
  std::vector<Index> offset_;
  std::vector<Index> src_;
  std::vector<Index> dst_;
  std::vector<double> sqrt_w_;
};

double weighted_q_norm(const Eigen::VectorXd& a, const VertexFunction& mu, double q) {
  if (q == 1.0) return a.dot(mu);
  if (q == 2.0) return std::sqrt(a.cwiseAbs2().dot(mu));
  return std::pow((a.array().pow(q) * mu.array()).sum(), 1.0 / q);
}

// Euclidean projection of z[begin, end) onto {‖·‖₁ <= radius} (Michelot's
// iteration: shrink the active set until the threshold stabilizes).
void project_l1(Eigen::VectorXd& z, Index begin, Index end, double radius, std::vector<double>& scratch) {
  double total = 0.0;
  for (Index i = begin; i < end; ++i) total += std::abs(z[i]);
  if (total <= radius) return;
  if (radius <= 0.0) {
    for (Index i = begin; i < end; ++i) z[i] = 0.0;
    return;
  }
  scratch.clear();
  for (Index i = begin; i < end; ++i) scratch.push_back(std::abs(z[i]));
  double theta = (total - radius) / static_cast<double>(scratch.size());
  while (true) {
    double sum = 0.0;
    std::size_t kept = 0;
    for (double v : scratch)
      if (v > theta) {
        scratch[kept++] = v;
        sum += v;
      }
    const bool stable = kept == scratch.size();
    scratch.resize(kept);
    const double next = (sum - radius) / static_cast<double>(kept);
    if (stable || next == theta) {
      theta = next;
      break;
    }
    theta = next;
  }
  theta = std::max(theta, 0.0);
  for (Index i = begin; i < end; ++i) z[i] = std::copysign(std::max(std::abs(z[i]) - theta, 0.0), z[i]);
}

// Euclidean projection onto {y : Σ_x ‖y_x‖₁²/μ(x) <= 1}, the dual unit ball of
// z ↦ (Σ_x μ(x)‖z_x‖_∞²)^{1/2}. Outside the ball the projection is the blockwise
// prox of (ρ/2μ(x))‖·‖₁² with one multiplier ρ > 0 making the constraint tight.
class MixedBallProjection {
 public:
  MixedBallProjection(const EdgeDifferences& K, const VertexFunction& mu) : K_(K), mu_(mu) {}

  void operator()(Eigen::VectorXd& y) {
    const Index n = K_.vertices();
    sorted_.resize(static_cast<std::size_t>(y.size()));
    double norm2 = 0.0;
    for (Index x = 0; x < n; ++x) {
      const auto b = sorted_.begin() + K_.block_begin(x), e = sorted_.begin() + K_.block_end(x);
      double l1 = 0.0;
      for (Index i = K_.block_begin(x); i < K_.block_end(x); ++i) {
        sorted_[static_cast<std::size_t>(i)] = std::abs(y[i]);
        l1 += std::abs(y[i]);
      }
      std::sort(b, e, std::greater<>());
      norm2 += l1 * l1 / mu_[x];
    }
    if (norm2 <= 1.0) return;
    auto excess = [&](double rho) {
      double total = -1.0;
      for (Index x = 0; x < n; ++x) {
        const double l1 = threshold(x, rho).second;
        total += l1 * l1 / mu_[x];
      }
      return total;
    };
    double hi = 1.0, f_hi = excess(hi);
    while (f_hi > 0.0) {
      hi *= 4.0;
      f_hi = excess(hi);
    }
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(excess, 0.0, hi, norm2 - 1.0, f_hi,
                                                        boost::math::tools::eps_tolerance<double>(50), iters);
    // The upper end of the bracket is feasible because the excess decreases in ρ.
    for (Index x = 0; x < n; ++x) {
      const double theta = threshold(x, root.second).first;
      for (Index i = K_.block_begin(x); i < K_.block_end(x); ++i)
        y[i] = std::copysign(std::max(std::abs(y[i]) - theta, 0.0), y[i]);
    }
  }

 private:
  // (θ, ‖soft(y_x, θ)‖₁) for the block prox at multiplier ρ.
  std::pair<double, double> threshold(Index x, double rho) const {
    const double c = rho / mu_[x];
    double sum = 0.0, theta = 0.0;
    int k = 0;
    for (Index i = K_.block_begin(x); i < K_.block_end(x); ++i) {
      const double a = sorted_[static_cast<std::size_t>(i)];
      const double s = sum + a;
      const double th = c * s / (1.0 + c * (k + 1));
      if (a <= th) break;
      sum = s;
      theta = th;
      ++k;
    }
    return {theta, sum - k * theta};
  }

  const EdgeDifferences& K_;
  const VertexFunction& mu_;
  std::vector<double> sorted_;
};

struct SolverState {
  VertexFunction g;
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
};

struct PdhgResult {
  double best = 0.0;
  VertexFunction g;
  int iterations = 0;
  bool converged = false;
};

// Shared primal-dual loop over A = [K; K] with diagonal (column-sum) primal steps
// and a scalar dual step σ. `dual_step` updates (y1, y2) from the extrapolated Kḡ.
template <class DualStep, class Objective>
PdhgResult pdhg(const EdgeDifferences& K, const KPrimeSolveOptions& opt, SolverState& st, DualStep dual_step,
                Objective objective) {
  const Index n = K.vertices();
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  double max_sw = 0.0;
  for (Index x = 0; x < n; ++x)
    for (Index e = K.block_begin(x); e < K.block_end(x); ++e) {
      tau[x] += 2.0 * K.sqrt_weight(e);
      tau[K.target(e)] += 2.0 * K.sqrt_weight(e);
      max_sw = std::max(max_sw, K.sqrt_weight(e));
    }
  tau = opt.step_balance * tau.cwiseInverse();
  const double sigma = 1.0 / (opt.step_balance * 2.0 * max_sw);

  constexpr int kCheckEvery = 10;
  PdhgResult out;
  out.best = objective(st.g);
  out.g = st.g;
  std::vector<double> history{out.best};
  const std::size_t lag = static_cast<std::size_t>(std::max(1, opt.window / kCheckEvery));
  VertexFunction g_bar = st.g, g_next(n), grad(n);
  Eigen::VectorXd Kg;
  int k = 0;
  while (k < opt.max_iterations) {
    K.apply(g_bar, Kg);
    dual_step(Kg, st.y1, st.y2, sigma);
    K.adjoint(st.y1 + st.y2, grad);
    g_next = st.g - tau.cwiseProduct(grad);
    g_bar = 2.0 * g_next - st.g;
    st.g.swap(g_next);
    ++k;
    if (k % kCheckEvery == 0) {
      const double v = objective(st.g);
      if (v < out.best) {
        out.best = v;
        out.g = st.g;
      }
      history.push_back(out.best);
      if (history.size() > lag) {
        const double before = history[history.size() - 1 - lag];
        if (before - out.best <= opt.tolerance * std::max(out.best, 1e-300)) {
          out.converged = true;
          break;
        }
      }
    }
  }
  out.iterations = k;
  return out;
}

}  // namespace

double kprime_objective(const Space& space, const VertexFunction& f, const VertexFunction& g, double q,
                        double weight, GradientMode mode) {
  const double h = lp_norm(space, gradient_modulus(space, f - g, mode), q);
  const VertexFunction gg = gradient_modulus(space, g, mode);
  return h + weight * (gg.size() ? gg.maxCoeff() : 0.0);
}

double kprime_lower(const Space& space, const VertexFunction& f, double q, double t, GradientMode mode) {
  if (!(q >= 1.0)) throw std::domain_error("kprime_lower: q must be >= 1");
  if (!(t > 0.0)) throw std::domain_error("kprime_lower: t must be > 0");
  const StepFunction grad = decreasing_rearrangement(space, gradient_modulus(space, f, mode));
  return std::pow(t, 1.0 / q) * qstar_powers(grad, q, t).double_star;
}

double lipschitz_constant(const Space& space, const VertexFunction& f) {
  double lip = 0.0;
  for (const Edge& e : space.edges()) lip = std::max(lip, std::abs(f[e.u] - f[e.v]));
  return lip;
}

Decomposition lipschitz_envelope_decomposition(const Space& space, const VertexFunction& f, double lambda,
                                               double q, double weight, GradientMode mode) {
  if (!(lambda >= 0.0)) throw std::domain_error("lipschitz_envelope_decomposition: lambda must be >= 0");
  const Index n = space.size();
  // Multi-source Dijkstra with unit hop lengths scaled by λ; the sign flip turns
  // the sup-convolution into an inf-convolution.
  auto inf_convolution = [&](const VertexFunction& v) {
    VertexFunction best = v;
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (Index x = 0; x < n; ++x) heap.emplace(v[x], x);
    while (!heap.empty()) {
      const auto [d, x] = heap.top();
      heap.pop();
      if (d > best[x]) continue;
      for (const Neighbor& nb : space.neighbors(x))
        if (d + lambda < best[nb.vertex]) {
          best[nb.vertex] = d + lambda;
          heap.emplace(best[nb.vertex], nb.vertex);
        }
    }
    return best;
  };
  const VertexFunction lower_env = inf_convolution(f);
  const VertexFunction upper_env = -inf_convolution(-f);
  Decomposition dec;
  dec.lambda = lambda;
  dec.g = 0.5 * (lower_env + upper_env);
  dec.h = f - dec.g;
  dec.value = kprime_objective(space, f, dec.g, q, weight, mode);
  return dec;
}

std::vector<double> default_lambda_grid(const Space& space, const VertexFunction& f, int points) {
  if (points < 2) throw std::domain_error("default_lambda_grid: need at least two points");
  const double lip = lipschitz_constant(space, f);
  std::vector<double> grid{0.0};
  if (lip == 0.0) return grid;
  for (int i = 0; i < points; ++i) grid.push_back(lip * std::pow(10.0, -3.0 + 3.0 * i / (points - 1)));
  return grid;
}

UpperBound kprime_upper(const Space& space, const VertexFunction& f, double q, double t,
                        const std::vector<double>& lambda_grid, GradientMode mode) {
  if (lambda_grid.empty()) throw std::domain_error("kprime_upper: empty lambda grid");
  if (!(t > 0.0)) throw std::domain_error("kprime_upper: t must be > 0");
  const double weight = std::pow(t, 1.0 / q);
  UpperBound out;
  bool first = true;
  for (double lambda : lambda_grid) {
    Decomposition d = lipschitz_envelope_decomposition(space, f, lambda, q, weight, mode);
    if (first || d.value < out.value) {
      out.value = d.value;
      out.lambda = lambda;
      out.best = std::move(d);
      first = false;
    }
  }
  return out;
}

KPrimeSolution kprime_convex_solve(const Space& space, const VertexFunction& f, double q, double t,
                                   const KPrimeSolveOptions& options) {
  if (q != 1.0 && q != 2.0) throw std::domain_error("kprime_convex_solve: q must be 1 or 2");
  if (!(t > 0.0)) throw std::domain_error("kprime_convex_solve: t must be > 0");
  const VertexFunction& mu = space.measure();
  const double weight = std::pow(t, 1.0 / q);

  KPrimeSolution sol;
  sol.lower = kprime_lower(space, f, q, t);
  const UpperBound up = kprime_upper(space, f, q, t, default_lambda_grid(space, f, options.lambda_points));
  sol.upper = up.value;

  const EdgeDifferences K(space);
  Eigen::VectorXd Kf;
  K.apply(f, Kf);
  const double scale = Kf.size() ? Kf.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) {
    sol.value = 0.0;
    sol.g = f;
    sol.converged = true;
    return sol;
  }
  // Work with f/scale so ‖|∇f|‖_∞ = 1; the problem is 1-homogeneous in f.
  Kf /= scale;
  const VertexFunction fn = f / scale;
  Eigen::VectorXd Kg;
  auto objective = [&](const VertexFunction& g) {
    K.apply(g, Kg);
    const double grad_g = Kg.size() ? Kg.cwiseAbs().maxCoeff() : 0.0;
    return weighted_q_norm(K.block_max(Kf - Kg), mu, q) + weight * grad_g;
  };

  std::vector<double> scratch;
  SolverState st{up.best.g / scale, Eigen::VectorXd::Zero(K.edges()), Eigen::VectorXd::Zero(K.edges())};
  double best = objective(st.g);
  VertexFunction best_g = st.g;
  sol.converged = true;

  // Dual of the first term: blockwise ℓ1 balls of radius μ(x) for q = 1, the
  // mixed ball Σ_x ‖y_x‖₁²/μ(x) <= 1 for q = 2. Dual of weight·‖v‖_∞: the global
  // ℓ1 ball of radius weight.
  MixedBallProjection project_mixed(K, mu);
  auto dual_step = [&](const Eigen::VectorXd& Kgb, Eigen::VectorXd& y1, Eigen::VectorXd& y2, double sigma) {
    y1 += sigma * (Kgb - Kf);
    if (q == 1.0)
      for (Index x = 0; x < K.vertices(); ++x) project_l1(y1, K.block_begin(x), K.block_end(x), mu[x], scratch);
    else
      project_mixed(y1);
    y2 += sigma * Kgb;
    project_l1(y2, 0, K.edges(), weight, scratch);
  };
  const PdhgResult r = pdhg(K, options, st, dual_step, objective);
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  if (r.best < best) {
    best = r.best;
    best_g = r.g;
  }

  const double solver_value = best * scale;
  if (solver_value <= up.value) {
    sol.value = solver_value;
    sol.g = best_g * scale;
  } else {
    sol.value = up.value;
    sol.g = up.best.g;
  }
  K.apply(sol.g, Kg);
  sol.lambda = Kg.size() ? Kg.cwiseAbs().maxCoeff() : 0.0;
  sol.gap = sol.value - sol.lower;
  return sol;
}

EquivalenceReport equivalence_report(const Space& space, const Corpus& corpus, double q,
                                     const std::vector<double>& t_grid, const KPrimeSolveOptions& options) {
  EquivalenceReport rep;
  std::vector<double> ratios;
  for (const auto& fn : corpus.functions) {
    for (double t : t_grid) {
      const KPrimeSolution s = kprime_convex_solve(space, fn.values, q, t, options);
      if (s.lower <= 0.0 && s.value <= 0.0) {
        ++rep.n_skipped;
        continue;
      }
      EquivalenceRow row{fn.id, t, s.lower, s.value, s.upper, s.lower > 0.0 ? s.value / s.lower : kInf, s.converged};
      rep.ratios_ok = rep.ratios_ok && row.ratio >= 1.0 - 1e-6;
      rep.all_converged = rep.all_converged && s.converged;
      ratios.push_back(row.ratio);
      rep.rows.push_back(std::move(row));
    }
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    rep.min_ratio = ratios.front();
    rep.max_ratio = ratios.back();
    const std::size_t m = ratios.size() / 2;
    rep.median_ratio = ratios.size() % 2 ? ratios[m] : 0.5 * (ratios[m - 1] + ratios[m]);
  }
  return rep;
}

std::string EquivalenceReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "f_id,t,lower,solver,upper,ratio\n";
  for (const auto& r : rows)
    out << r.f_id << ',' << r.t << ',' << r.lower << ',' << r.solver << ',' << r.upper << ',' << r.ratio << '\n';
  return out.str();
}

}  // namespace gnlab
