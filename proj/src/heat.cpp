#include "gnlab/heat.hpp"

#include "gnlab/funcnorms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gnlab {

Eigen::SparseMatrix<double> laplacian(const Space& space) {
  const Index n = space.size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) + 2 * space.edges().size());
  for (Index x = 0; x < n; ++x) {
    double diag = 0.0;
    const double inv_mu = 1.0 / space.measure()[x];
    for (const Neighbor& nb : space.neighbors(x)) {
      trips.emplace_back(x, nb.vertex, nb.weight * inv_mu);
      diag -= nb.weight * inv_mu;
    }
    trips.emplace_back(x, x, diag);
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

VertexFunction apply_laplacian(const Space& space, const VertexFunction& f) {
  VertexFunction out(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (const Neighbor& nb : space.neighbors(x)) acc += nb.weight * (f[nb.vertex] - f[x]);
    out[x] = acc / space.measure()[x];
  }
  return out;
}

std::vector<double> doubling_grid(double t_min, double t_max) {
  if (!(t_min > 0.0) || !(t_max >= t_min)) throw std::domain_error("doubling_grid: need 0 < t_min <= t_max");
  std::vector<double> grid{t_min};
  while (grid.back() < t_max) grid.push_back(grid.back() * 2.0);
  return grid;
}

Semigroup::Semigroup(std::shared_ptr<const Space> space, SemigroupOptions options)
    : space_(std::move(space)), options_(options) {
  const Space& sp = *space_;
  const Index n = sp.size();
  if (options_.t_points) {
    if (*options_.t_points < 2) throw std::domain_error("Semigroup: need at least two grid points");
    t_grid_.clear();
    for (int j = 0; j < *options_.t_points; ++j) t_grid_.push_back(std::ldexp(options_.t_min, j));
  } else {
    const double diam2 = static_cast<double>(sp.diameter()) * sp.diameter();
    t_grid_ = doubling_grid(options_.t_min, options_.t_max.value_or(diam2));
  }

  sqrt_mu_ = sp.measure().cwiseSqrt();
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (Index x = 0; x < n; ++x) {
      double diag = 0.0;
      for (const Neighbor& nb : sp.neighbors(x)) {
        trips.emplace_back(x, nb.vertex, nb.weight / (sqrt_mu_[x] * sqrt_mu_[nb.vertex]));
        diag -= nb.weight;
      }
      trips.emplace_back(x, x, diag / sp.measure()[x]);
    }
    symmetric_.resize(n, n);
    symmetric_.setFromTriplets(trips.begin(), trips.end());
  }

  dense_ = n <= options_.dense_cap;
  if (!dense_) return;

  const Eigen::MatrixXd generator(symmetric_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(generator);
  if (es.info() != Eigen::Success) throw std::runtime_error("Semigroup: eigensolver failed");
  // Ascending from the solver; store descending so index 0 is the zero mode.
  eigenvalues_ = es.eigenvalues().reverse();
  eigenvectors_ = es.eigenvectors().rowwise().reverse();
  eigenvalues_[0] = 0.0;
  eigenvalues_ = eigenvalues_.cwiseMin(0.0);
  eigenvectors_.col(0) = sqrt_mu_ / std::sqrt(sp.total_measure());
  // U -> Φ = M^{-1/2} U.
  eigenvectors_ = sqrt_mu_.cwiseInverse().asDiagonal() * eigenvectors_;
}

void Semigroup::require_dense(const char* what) const {
  if (!dense_)
    throw std::domain_error(std::string(what) + ": vertex count " + std::to_string(space_->size()) +
                            " exceeds dense_cap " + std::to_string(options_.dense_cap));
}

const Eigen::VectorXd& Semigroup::eigenvalues() const {
  require_dense("eigenvalues");
  return eigenvalues_;
}

const Eigen::MatrixXd& Semigroup::eigenvectors() const {
  require_dense("eigenvectors");
  return eigenvectors_;
}

double Semigroup::spectral_gap() const { return -eigenvalues()[1]; }

Eigen::VectorXd Semigroup::coefficients(const VertexFunction& f) const {
  require_dense("coefficients");
  return eigenvectors_.transpose() * space_->measure().cwiseProduct(f);
}

VertexFunction Semigroup::synthesize(const Eigen::VectorXd& c) const {
  require_dense("synthesize");
  return eigenvectors_ * c;
}

VertexFunction Semigroup::apply(const VertexFunction& f, double t) const {
  if (!(t >= 0.0)) throw std::domain_error("apply_Pt: t must be >= 0");
  if (t == 0.0) return f;
  if (!dense_) return krylov_expmv(f, t);
  const Eigen::VectorXd c = coefficients(f);
  return synthesize((eigenvalues_.array() * t).exp().matrix().cwiseProduct(c));
}

Eigen::MatrixXd Semigroup::apply_many(const VertexFunction& f, const std::vector<double>& times) const {
  Eigen::MatrixXd out(space_->size(), static_cast<Index>(times.size()));
  if (!dense_) {
    for (std::size_t j = 0; j < times.size(); ++j) out.col(static_cast<Index>(j)) = apply(f, times[j]);
    return out;
  }
  const Eigen::VectorXd c = coefficients(f);
  Eigen::MatrixXd coeffs(c.size(), static_cast<Index>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] >= 0.0)) throw std::domain_error("apply_Pt: t must be >= 0");
    coeffs.col(static_cast<Index>(j)) = (eigenvalues_.array() * times[j]).exp().matrix().cwiseProduct(c);
  }
  out.noalias() = eigenvectors_ * coeffs;
  return out;
}

double Semigroup::generator_bound() const {
  const Space& sp = *space_;
  double kappa = 0.0;
  for (Index x = 0; x < sp.size(); ++x) {
    double row = 0.0;
    for (const Neighbor& nb : sp.neighbors(x)) row += nb.weight;
    kappa = std::max(kappa, row / sp.measure()[x]);
  }
  return kappa;
}

VertexFunction Semigroup::apply_lazy_walk(const VertexFunction& f, int steps) const {
  const double h = 0.5 / generator_bound();
  VertexFunction g = f;
  for (int k = 0; k < steps; ++k) g += h * apply_laplacian(*space_, g);
  return g;
}

Eigen::MatrixXd Semigroup::kernel(double t) const {
  require_dense("heat_kernel");
  if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be > 0");
  const Eigen::VectorXd e = (eigenvalues_.array() * t).exp();
  Eigen::MatrixXd scaled = eigenvectors_ * e.asDiagonal();
  Eigen::MatrixXd K(space_->size(), space_->size());
  K.noalias() = scaled * eigenvectors_.transpose();
  return K;
}

Eigen::VectorXd Semigroup::kernel_diagonal(double t) const {
  require_dense("heat_kernel");
  if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be > 0");
  const Eigen::VectorXd e = (eigenvalues_.array() * t).exp();
  return eigenvectors_.array().square().matrix() * e;
}

VertexFunction Semigroup::krylov_expmv(const VertexFunction& f, double t) const {
  // e^{tΔ} f = M^{-1/2} e^{tS} M^{1/2} f, with S symmetric. Lanczos with full
  // reorthogonalization and adaptive substeps sized by the a-posteriori estimate
  // β_0 β_m |[e^{dt T_m}]_{m,0}|.
  constexpr int kMaxDim = 40;
  Eigen::VectorXd v = sqrt_mu_.cwiseProduct(f);
  const double v_norm0 = v.norm();
  if (v_norm0 == 0.0) return VertexFunction::Zero(f.size());
  const Index n = v.size();
  double remaining = t;
  double dt = t;
  Eigen::MatrixXd V(n, kMaxDim + 1);
  while (remaining > 0.0) {
    dt = std::min(dt, remaining);
    const double beta0 = v.norm();
    if (beta0 == 0.0) break;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(kMaxDim, kMaxDim);
    V.col(0) = v / beta0;
    int m = kMaxDim;
    double beta_last = 0.0;
    for (int j = 0; j < kMaxDim; ++j) {
      Eigen::VectorXd w = symmetric_ * V.col(j);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd h = V.leftCols(j + 1).transpose() * w;
        w.noalias() -= V.leftCols(j + 1) * h;
        if (pass == 0) T(j, j) = h(j);
      }
      if (j > 0) T(j - 1, j) = T(j, j - 1);
      const double beta = w.norm();
      if (j + 1 < kMaxDim) T(j + 1, j) = beta;
      beta_last = beta;
      if (beta <= 1e-13 * beta0) {
        m = j + 1;
        beta_last = 0.0;
        break;
      }
      V.col(j + 1) = w / beta;
    }
    while (true) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
      const Eigen::VectorXd y =
          es.eigenvectors() * (es.eigenvalues().array() * dt).exp().matrix().cwiseProduct(
                                  es.eigenvectors().row(0).transpose());
      const double err = beta0 * beta_last * std::abs(y(m - 1));
      if (err <= options_.krylov_tol * v_norm0 * std::max(dt / t, 1e-3) || dt < 1e-12 * t) {
        v = beta0 * (V.leftCols(m) * y);
        remaining -= dt;
        if (err < 1e-3 * options_.krylov_tol * v_norm0) dt *= 2.0;
        break;
      }
      dt *= 0.5;
    }
  }
  return sqrt_mu_.cwiseInverse().cwiseProduct(v);
}

double heat_q_to_inf_norm(const Semigroup& sg, double q, double t) {
  if (!(q >= 1.0)) throw std::domain_error("heat_q_to_inf_norm: q must be >= 1");
  if (q == 1.0) return sg.kernel_diagonal(t).maxCoeff();
  const Eigen::MatrixXd K = sg.kernel(t);
  const double qp = std::isinf(q) ? 1.0 : q / (q - 1.0);
  const Eigen::VectorXd& mu = sg.space().measure();
  double best = 0.0;
  for (Index x = 0; x < K.rows(); ++x) {
    const double row = std::pow((K.row(x).transpose().array().abs().pow(qp) * mu.array()).sum(), 1.0 / qp);
    best = std::max(best, row);
  }
  return best;
}

namespace {

int ceil_sqrt_radius(double t) { return static_cast<int>(std::ceil(std::sqrt(t) - 1e-12)); }

}  // namespace

GaussianFit fit_gaussian_bound(const Semigroup& sg, const std::vector<double>& times,
                               const std::vector<double>& c_grid) {
  if (times.empty()) throw std::domain_error("fit_gaussian_bound: empty t range");
  if (c_grid.empty()) throw std::domain_error("fit_gaussian_bound: empty c grid");
  const Space& sp = sg.space();
  const Index n = sp.size();
  GaussianFit fit;
  std::vector<std::vector<double>> per_t(c_grid.size(), std::vector<double>(times.size(), 0.0));
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    const Eigen::MatrixXd K = sg.kernel(t);
    const int r = ceil_sqrt_radius(t);
    for (Index y = 0; y < n; ++y) {
      const double vol = sp.ball_measure(y, r);
      for (Index x = 0; x < n; ++x) {
        const double base = K(x, y) * vol;
        const double d = sp.distance(x, y);
        for (std::size_t k = 0; k < c_grid.size(); ++k) {
          const double val = base * std::exp(c_grid[k] * d * d / t);
          per_t[k][j] = std::max(per_t[k][j], val);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 0; k < c_grid.size(); ++k) {
    const double C = *std::max_element(per_t[k].begin(), per_t[k].end());
    fit.by_c.push_back({c_grid[k], C});
    if (std::isfinite(C) && C < fit.by_c[best].constant) best = k;
  }
  fit.c = fit.by_c[best].c;
  fit.constant = fit.by_c[best].constant;
  for (std::size_t j = 0; j < times.size(); ++j) fit.per_t.emplace_back(times[j], per_t[best][j]);
  return fit;
}

KernelGradientBound kernel_gradient_bound(const Semigroup& sg, const std::vector<double>& times, GradientMode mode) {
  const Space& sp = sg.space();
  KernelGradientBound out;
  for (double t : times) {
    const Eigen::MatrixXd K = sg.kernel(t);
    const int r = ceil_sqrt_radius(t);
    for (Index y = 0; y < sp.size(); ++y) {
      const VertexFunction g = gradient_modulus(sp, K.col(y), mode);
      Index x = 0;
      const double val = g.maxCoeff(&x) * std::sqrt(t) * sp.ball_measure(y, r);
      if (val > out.constant) out = {val, x, y, t};
    }
  }
  return out;
}

double grad_semigroup_l2_norm(const Semigroup& sg, double t, int iterations) {
  // Power iteration on c ↦ E Φᵀ A Φ E c where ‖|∇g|‖₂² = gᵀ A g and E = e^{tΛ};
  // f = Φ c has ‖f‖_{L₂(μ)} = ‖c‖.
  const Space& sp = sg.space();
  const Eigen::MatrixXd& phi = sg.eigenvectors();
  const Eigen::VectorXd e = (sg.eigenvalues().array() * t).exp();
  auto apply_A = [&](const VertexFunction& g) {
    VertexFunction out = VertexFunction::Zero(g.size());
    for (const Edge& ed : sp.edges()) {
      const double k = ed.weight * (sp.measure()[ed.u] + sp.measure()[ed.v]) * (g[ed.u] - g[ed.v]);
      out[ed.u] += k;
      out[ed.v] -= k;
    }
    return out;
  };
  Eigen::VectorXd c = Eigen::VectorXd::Ones(e.size());
  c[0] = 0.0;  // constants are in the kernel
  c.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const VertexFunction g = phi * e.cwiseProduct(c);
    Eigen::VectorXd next = e.cwiseProduct(phi.transpose() * apply_A(g));
    rayleigh = c.dot(next);
    const double nn = next.norm();
    if (nn == 0.0) return 0.0;
    next /= nn;
    if ((next - c).norm() < 1e-13) {
      c = next;
      break;
    }
    c = next;
  }
  const VertexFunction g = phi * e.cwiseProduct(c);
  rayleigh = std::max(rayleigh, g.dot(apply_A(g)));
  return std::sqrt(t) * std::sqrt(std::max(rayleigh, 0.0));
}

GradNormBracket grad_semigroup_norm(const Semigroup& sg, double p, const std::vector<double>& times,
                                    const std::vector<VertexFunction>& functions, GradientMode mode) {
  if (!(p > 1.0)) throw std::domain_error("grad_semigroup_norm: p must be > 1");
  const Space& sp = sg.space();
  const Index n = sp.size();
  const Eigen::VectorXd& mu = sp.measure();
  GradNormBracket out;

  // With μ ≡ m the gradient form is 2m·(-Λ) in the eigenbasis, so
  // ‖|∇P_t|‖²_{2→2} = max_i 2m|λ_i| e^{2λ_i t} (l2 aggregation).
  const bool constant_measure = mu.maxCoeff() == mu.minCoeff() && mode == GradientMode::l2;
  auto closed_form_l2 = [&](double t) {
    const Eigen::VectorXd& lam = sg.eigenvalues();
    return std::sqrt((2.0 * mu[0] * lam.array().abs() * (2.0 * lam.array() * t).exp()).maxCoeff());
  };

  for (double t : times) {
    const Eigen::MatrixXd K = sg.kernel(t);
    // p = ∞: row bound on the kernel differences.
    auto ub_inf = [&]() {
      double best = 0.0;
      for (Index x = 0; x < n; ++x) {
        double agg = 0.0;
        for (const Neighbor& nb : sp.neighbors(x)) {
          const double l1 = ((K.row(nb.vertex) - K.row(x)).array().abs() * mu.transpose().array()).sum();
          if (mode == GradientMode::l2)
            agg += nb.weight * l1 * l1;
          else
            agg = std::max(agg, std::sqrt(nb.weight) * l1);
        }
        best = std::max(best, mode == GradientMode::l2 ? std::sqrt(agg) : agg);
      }
      return best;
    };
    // p = 1: column bound max_z Σ_x μ(x) |∇ p_t(·,z)|(x).
    auto ub_one = [&]() {
      double best = 0.0;
      for (Index z = 0; z < n; ++z) best = std::max(best, gradient_modulus(sp, K.col(z), mode).dot(mu));
      return best;
    };
    const double ub2 = constant_measure ? closed_form_l2(t) : grad_semigroup_l2_norm(sg, t) / std::sqrt(t);
    double ub = 0.0;
    if (std::isinf(p)) {
      ub = ub_inf();
    } else if (p == 2.0) {
      ub = ub2;
    } else if (p > 2.0) {
      const double theta = 2.0 / p;
      ub = std::pow(ub2, theta) * std::pow(ub_inf(), 1.0 - theta);
    } else {
      const double theta = 2.0 - 2.0 / p;  // weight on the p = 2 endpoint
      ub = std::pow(ub2, theta) * std::pow(ub_one(), 1.0 - theta);
    }
    out.upper_per_t.emplace_back(t, std::sqrt(t) * ub);
    out.upper = std::max(out.upper, std::sqrt(t) * ub);
  }

  for (const VertexFunction& f : functions) {
    const double fn = lp_norm(sp, f, p);
    if (fn == 0.0) continue;
    const Eigen::MatrixXd P = sg.apply_many(f, times);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double num = lp_norm(sp, gradient_modulus(sp, P.col(static_cast<Index>(j)), mode), p);
      out.lower = std::max(out.lower, std::sqrt(times[j]) * num / fn);
    }
  }
  return out;
}

std::string kernel_csv(const Semigroup& sg, const std::vector<double>& times) {
  std::ostringstream out;
  out.precision(17);
  out << "t,x,y,value\n";
  const auto& ids = sg.space().ids();
  for (double t : times) {
    const Eigen::MatrixXd K = sg.kernel(t);
    for (Index x = 0; x < K.rows(); ++x)
      for (Index y = 0; y < K.cols(); ++y) out << t << ',' << ids[x] << ',' << ids[y] << ',' << K(x, y) << '\n';
  }
  return out.str();
}

}  // namespace gnlab
