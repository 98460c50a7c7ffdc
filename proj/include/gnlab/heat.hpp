#pragma once

#include "gnlab/space.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gnlab {

/// Δ as a sparse matrix: (Δf)(x) = (1/μ(x)) Σ_{y~x} w_xy (f(y) - f(x)).
Eigen::SparseMatrix<double> laplacian(const Space& space);
VertexFunction apply_laplacian(const Space& space, const VertexFunction& f);

struct SemigroupOptions {
  Index dense_cap = 4096;
  double t_min = 1.0 / 16.0;
  /// Defaults to the first grid point >= diameter².
  std::optional<double> t_max;
  /// Overrides t_max: the grid gets exactly this many points.
  std::optional<int> t_points;
  double krylov_tol = 1e-10;
};

/// Doubling-closed grid t_j = t_min·2^j, j = 0..J.
std::vector<double> doubling_grid(double t_min, double t_max);

/// The heat semigroup P_t = e^{tΔ} of a Space.
///
/// Below dense_cap the generator is diagonalized once: Δ = Φ Λ Φ^{-1} with
/// μ-orthonormal eigenvector columns Φ and eigenvalues sorted descending,
/// λ_0 = 0 with the exact constant eigenvector. Kernels use the convention
/// P_t f(x) = Σ_y p_t(x,y) f(y) μ(y). Above the cap only apply() works, through a
/// Lanczos approximation of e^{tS} on the symmetrized generator.
class Semigroup {
 public:
  explicit Semigroup(std::shared_ptr<const Space> space, SemigroupOptions options = {});

  const Space& space() const noexcept { return *space_; }
  std::shared_ptr<const Space> space_ptr() const noexcept { return space_; }
  const SemigroupOptions& options() const noexcept { return options_; }
  bool is_dense() const noexcept { return dense_; }
  const std::vector<double>& t_grid() const noexcept { return t_grid_; }

  const Eigen::VectorXd& eigenvalues() const;
  const Eigen::MatrixXd& eigenvectors() const;
  /// Spectral gap |λ_1|.
  double spectral_gap() const;

  VertexFunction apply(const VertexFunction& f, double t) const;
  /// Batched: column j of the result is P_{times[j]} f.
  Eigen::MatrixXd apply_many(const VertexFunction& f, const std::vector<double>& times) const;
  /// (I + Δ/(2κ))^steps f with κ = max_x Σ_y w_xy/μ(x), so the step has spectrum
  /// in [0, 1]; approximates P_{steps/(2κ)} f. Cross-checks only.
  VertexFunction apply_lazy_walk(const VertexFunction& f, int steps) const;
  /// κ above: the largest row sum of -Δ off the diagonal.
  double generator_bound() const;

  /// Φᵀ M f, the coefficients of f in the eigenbasis (dense only).
  Eigen::VectorXd coefficients(const VertexFunction& f) const;
  VertexFunction synthesize(const Eigen::VectorXd& coefficients) const;

  /// p_t(x, y) (dense only).
  Eigen::MatrixXd kernel(double t) const;
  /// p_t(x, x); max_{x,y} p_t(x,y) equals its maximum by Cauchy–Schwarz.
  Eigen::VectorXd kernel_diagonal(double t) const;

 private:
  void require_dense(const char* what) const;
  VertexFunction krylov_expmv(const VertexFunction& f, double t) const;

  std::shared_ptr<const Space> space_;
  SemigroupOptions options_;
  bool dense_ = false;
  std::vector<double> t_grid_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::SparseMatrix<double> symmetric_;  // M^{1/2} Δ M^{-1/2}
  Eigen::VectorXd sqrt_mu_;
};

/// max over rows of ‖p_t(x,·)‖_{q'} in L_{q'}(μ), i.e. ‖P_t‖_{q→∞}.
double heat_q_to_inf_norm(const Semigroup& sg, double q, double t);

struct GaussianFitRow {
  double c = 0.0;
  double constant = 0.0;
};

struct GaussianFit {
  double constant = 0.0;  ///< C at the selected c
  double c = 0.0;
  std::vector<GaussianFitRow> by_c;
  std::vector<std::pair<double, double>> per_t;  ///< (t, max) at the selected c
};

/// C(c) = max over x, y, t of p_t(x,y) μ(B(y,⌈√t⌉)) e^{c d²(x,y)/t}; returns the
/// pair minimizing C together with the whole C(c) table.
GaussianFit fit_gaussian_bound(const Semigroup& sg, const std::vector<double>& times,
                               const std::vector<double>& c_grid);

struct KernelGradientBound {
  double constant = 0.0;
  Index x = 0;
  Index y = 0;
  double t = 0.0;
};

/// max over y, t, x of |∇_x p_t(·,y)|(x)·√t·μ(B(y,⌈√t⌉)).
KernelGradientBound kernel_gradient_bound(const Semigroup& sg, const std::vector<double>& times,
                                          GradientMode mode = GradientMode::l2);

struct GradNormBracket {
  double upper = 0.0;
  double lower = 0.0;
  std::vector<std::pair<double, double>> upper_per_t;  ///< (t, √t·UB(t))
};

/// Two-sided bracket of sup_t √t ‖|∇P_t|‖_{p→p}. upper uses exact row/column
/// bounds at p = 1, ∞, the spectral value at p = 2 and Riesz–Thorin in between;
/// lower is the best ratio over the supplied functions.
GradNormBracket grad_semigroup_norm(const Semigroup& sg, double p, const std::vector<double>& times,
                                    const std::vector<VertexFunction>& functions,
                                    GradientMode mode = GradientMode::l2);

/// √t ‖|∇P_t|‖_{2→2} for l2-aggregated gradients, via power iteration.
double grad_semigroup_l2_norm(const Semigroup& sg, double t, int iterations = 300);

/// CSV "t,x,y,value" of p_t over the given times.
std::string kernel_csv(const Semigroup& sg, const std::vector<double>& times);

}  // namespace gnlab
