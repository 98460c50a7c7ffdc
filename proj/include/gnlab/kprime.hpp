#pragma once

#include "gnlab/corpus.hpp"
#include "gnlab/space.hpp"

#include <string>
#include <vector>

namespace gnlab {

// K′(f, s) = inf over f = h + g of ‖|∇h|‖_q + s·‖|∇g|‖_∞. Everything here is
// evaluated at s = t^{1/q}, the parametrization under which
// t^{1/q}(|∇f|^{q**})^{1/q}(t) <= K′(f, t^{1/q}).

/// ‖|∇(f - g)|‖_q + weight·‖|∇g|‖_∞.
double kprime_objective(const Space& space, const VertexFunction& f, const VertexFunction& g, double q,
                        double weight, GradientMode mode = GradientMode::max);

/// t^{1/q}·(|∇f|^{q**})^{1/q}(t). Throws std::domain_error for t <= 0 or q < 1.
double kprime_lower(const Space& space, const VertexFunction& f, double q, double t,
                    GradientMode mode = GradientMode::max);

struct Decomposition {
  VertexFunction h;
  VertexFunction g;
  double lambda = 0.0;
  double value = 0.0;  ///< ‖|∇h|‖_q + weight·‖|∇g|‖_∞
};

/// max over edges of |f(y) - f(x)|: the Lipschitz constant for the hop metric.
double lipschitz_constant(const Space& space, const VertexFunction& f);

/// g = (g⁻ + g⁺)/2 with g⁻(x) = min_y f(y) + λd(x,y) and g⁺(x) = max_y f(y) - λd(x,y)
/// (λ-Lipschitz, computed by multi-source Dijkstra), h = f - g. Throws
/// std::domain_error for λ < 0.
Decomposition lipschitz_envelope_decomposition(const Space& space, const VertexFunction& f, double lambda,
                                               double q, double weight, GradientMode mode = GradientMode::max);

/// {0} ∪ `points` log-spaced values in [Lip(f)·10⁻³, Lip(f)].
std::vector<double> default_lambda_grid(const Space& space, const VertexFunction& f, int points = 32);

struct UpperBound {
  double value = 0.0;
  double lambda = 0.0;
  Decomposition best;
};

/// Min over the grid of the envelope value at weight t^{1/q}. Throws
/// std::domain_error on an empty grid.
UpperBound kprime_upper(const Space& space, const VertexFunction& f, double q, double t,
                        const std::vector<double>& lambda_grid, GradientMode mode = GradientMode::max);

struct KPrimeSolveOptions {
  int max_iterations = 10000;
  /// Stop once the best objective falls by less than this (relative) over a
  /// window of `window` iterations.
  double tolerance = 1e-8;
  int window = 500;
  /// Envelope grid size for the upper bound and the warm start.
  int lambda_points = 32;
  /// Primal/dual step balance; f is normalized to ‖|∇f|‖_∞ = 1 first.
  double step_balance = 0.3;
};

struct KPrimeSolution {
  double value = 0.0;  ///< min(solver objective, envelope upper bound)
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;  ///< value - lower
  bool converged = false;
  int iterations = 0;
  double lambda = 0.0;  ///< ‖|∇g|‖_∞ of the returned g
  VertexFunction g;
};

/// Convex minimization over g of ‖|∇(f-g)|‖_q + t^{1/q}‖|∇g|‖_∞ with max
/// aggregation, by one primal-dual (Chambolle–Pock) solve on the joint problem,
/// warm-started from the best envelope decomposition. The returned value never
/// exceeds the envelope upper bound. Throws std::domain_error for q ∉ {1, 2} or
/// t <= 0.
KPrimeSolution kprime_convex_solve(const Space& space, const VertexFunction& f, double q, double t,
                                   const KPrimeSolveOptions& options = {});

struct EquivalenceRow {
  std::string f_id;
  double t = 0.0;
  double lower = 0.0;
  double solver = 0.0;
  double upper = 0.0;
  double ratio = 0.0;
  bool converged = false;
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  int n_skipped = 0;
  double min_ratio = 0.0;
  double median_ratio = 0.0;
  double max_ratio = 0.0;
  /// Every ratio >= 1 - 1e-6.
  bool ratios_ok = true;
  bool all_converged = true;

  /// CSV rows "f_id,t,lower,solver,upper,ratio".
  std::string to_csv() const;
};

/// ratio = solver/lower for every corpus function and grid time; 0/0 samples
/// (lower = 0 and solver = 0) are skipped and counted.
EquivalenceReport equivalence_report(const Space& space, const Corpus& corpus, double q,
                                     const std::vector<double>& t_grid, const KPrimeSolveOptions& options = {});

}  // namespace gnlab
