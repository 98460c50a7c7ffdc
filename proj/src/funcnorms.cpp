#include "gnlab/funcnorms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gnlab {

double lp_norm(const Space& space, const VertexFunction& f, double p) {
  if (!(p >= 1.0)) throw std::domain_error("lp_norm: p must be >= 1");
  if (std::isinf(p)) return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (p == 1.0) return f.cwiseAbs().dot(space.measure());
  if (p == 2.0) return std::sqrt(f.cwiseAbs2().dot(space.measure()));
  return std::pow((f.array().abs().pow(p) * space.measure().array()).sum(), 1.0 / p);
}

double mean(const Space& space, const VertexFunction& f) {
  return f.dot(space.measure()) / space.total_measure();
}

VertexFunction gradient_modulus(const Space& space, const VertexFunction& f, GradientMode mode) {
  VertexFunction g(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (const Neighbor& nb : space.neighbors(x)) {
      const double d = f[nb.vertex] - f[x];
      if (mode == GradientMode::l2)
        acc += nb.weight * d * d;
      else
        acc = std::max(acc, std::sqrt(nb.weight) * std::abs(d));
    }
    g[x] = mode == GradientMode::l2 ? std::sqrt(acc) : acc;
  }
  return g;
}

double sobolev_norm(const Space& space, const VertexFunction& f, double p, GradientMode mode, bool homogeneous) {
  const double grad = lp_norm(space, gradient_modulus(space, f, mode), p);
  return homogeneous ? grad : lp_norm(space, f, p) + grad;
}

BesovValue besov_norm(const Semigroup& sg, const VertexFunction& f, double alpha, BesovMode mode) {
  if (!(alpha < 0.0)) throw std::domain_error("besov_norm: alpha must be < 0");
  const auto& grid = sg.t_grid();
  BesovValue out;
  if (mode == BesovMode::raw) {
    const double m = mean(sg.space(), f);
    if (std::abs(m) > 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff()))
      throw std::domain_error("besov_norm: raw mode requires a mean-zero function (raw norm diverges otherwise)");
    const Eigen::MatrixXd P = sg.apply_many(f, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = std::pow(grid[j], -alpha / 2.0) * P.col(static_cast<Index>(j)).cwiseAbs().maxCoeff();
      if (v > out.value) out = {v, grid[j]};
    }
    return out;
  }
  // P_t(f - P_t f) = P_t f - P_{2t} f.
  std::vector<double> times(grid);
  for (double t : grid) times.push_back(2.0 * t);
  const Eigen::MatrixXd P = sg.apply_many(f, times);
  const auto n = static_cast<Index>(grid.size());
  for (Index j = 0; j < n; ++j) {
    const double v = std::pow(grid[j], -alpha / 2.0) * (P.col(j) - P.col(n + j)).cwiseAbs().maxCoeff();
    if (v > out.value) out = {v, grid[j]};
  }
  return out;
}

MorreyValue morrey_norm(const Space& space, const VertexFunction& f, double alpha, int r_max) {
  if (r_max < 1 || r_max > space.diameter()) throw std::domain_error("morrey_norm: r_max must lie in [1, diameter]");
  MorreyValue out;
  const VertexFunction fm = f.cwiseProduct(space.measure());
  for (Index x = 0; x < space.size(); ++x) {
    const auto order = space.ball(x, r_max);
    double acc = 0.0;
    std::size_t k = 0;
    for (int r = 1; r <= r_max; ++r) {
      const std::size_t len = space.ball(x, r).size();
      for (; k < len; ++k) acc += fm[order[k]];
      const double v = std::pow(static_cast<double>(r), -alpha) * std::abs(acc / space.ball_measure(x, r));
      if (v > out.value) out = {v, x, r};
    }
  }
  return out;
}

VertexFunction maximal_function(const Space& space, const VertexFunction& f) {
  VertexFunction out(space.size());
  const VertexFunction fm = f.cwiseAbs().cwiseProduct(space.measure());
  const int diam = space.diameter();
  for (Index x = 0; x < space.size(); ++x) {
    const auto order = space.ball(x, diam);
    double acc = 0.0, best = 0.0;
    std::size_t k = 0;
    for (int r = 0; r <= diam; ++r) {
      const std::size_t len = space.ball(x, r).size();
      for (; k < len; ++k) acc += fm[order[k]];
      best = std::max(best, acc / space.ball_measure(x, r));
    }
    out[x] = best;
  }
  return out;
}

VertexFunction hessian_modulus(const Space& space, const VertexFunction& f) {
  if (!space.grid()) throw std::invalid_argument("hessian_modulus: space carries no grid coordinates");
  const GridInfo& grid = *space.grid();
  const int d = static_cast<int>(grid.dims.size());
  VertexFunction out(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto fwd = grid.shift(x, i, +1);
      const auto bwd = grid.shift(x, i, -1);
      if (fwd && bwd) {
        const double dii = f[*fwd] - 2.0 * f[x] + f[*bwd];
        acc += dii * dii;
      }
      if (!fwd) continue;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        const auto fj = grid.shift(x, j, +1);
        if (!fj) continue;
        const auto fij = grid.shift(*fwd, j, +1);
        if (!fij) continue;
        const double dij = f[*fij] - f[*fwd] - f[*fj] + f[x];
        acc += dij * dij;
      }
    }
    out[x] = std::sqrt(acc);
  }
  return out;
}

VertexFunction triebel_sup(const Semigroup& sg, const VertexFunction& f, double alpha) {
  if (!(alpha < 0.0)) throw std::domain_error("triebel_sup: alpha must be < 0");
  const auto& grid = sg.t_grid();
  const Eigen::MatrixXd P = sg.apply_many(f, grid);
  VertexFunction out = VertexFunction::Zero(f.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    out = out.cwiseMax(std::pow(grid[j], -alpha / 2.0) * P.col(static_cast<Index>(j)).cwiseAbs());
  return out;
}

std::string vertex_function_csv(const Space& space, const VertexFunction& f) {
  std::ostringstream out;
  out.precision(17);
  out << "vertex_id,value\n";
  for (Index x = 0; x < space.size(); ++x) out << space.ids()[x] << ',' << f[x] << '\n';
  return out.str();
}

}  // namespace gnlab
