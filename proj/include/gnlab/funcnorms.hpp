#pragma once

#include "gnlab/heat.hpp"
#include "gnlab/space.hpp"

#include <string>

namespace gnlab {

/// ‖f‖_{L_p(μ)}, p in [1, ∞].
double lp_norm(const Space& space, const VertexFunction& f, double p);
double mean(const Space& space, const VertexFunction& f);

VertexFunction gradient_modulus(const Space& space, const VertexFunction& f,
                                GradientMode mode = GradientMode::l2);

/// ‖f‖_p + ‖|∇f|‖_p, or only ‖|∇f|‖_p when homogeneous.
double sobolev_norm(const Space& space, const VertexFunction& f, double p,
                    GradientMode mode = GradientMode::l2, bool homogeneous = false);

enum class BesovMode {
  seminorm,  ///< sup_t t^{-α/2} ‖P_t(f - P_t f)‖_∞, finite for every f
  raw,       ///< sup_t t^{-α/2} ‖P_t f‖_∞, requires mean(f) = 0
};

struct BesovValue {
  double value = 0.0;
  double argmax_t = 0.0;
};

/// Max over the semigroup's t-grid. Throws std::domain_error for α >= 0 or for
/// raw mode with |mean(f)| > 1e-10.
BesovValue besov_norm(const Semigroup& sg, const VertexFunction& f, double alpha,
                      BesovMode mode = BesovMode::seminorm);

struct MorreyValue {
  double value = 0.0;
  Index vertex = 0;
  int radius = 1;
};

/// max over x and integer r in [1, r_max] of r^{-α}|f_{B(x,r)}|.
MorreyValue morrey_norm(const Space& space, const VertexFunction& f, double alpha, int r_max);

/// Mf(x) = max over r in [0, diameter] of the ball average of |f|.
VertexFunction maximal_function(const Space& space, const VertexFunction& f);

/// Frobenius norm of the coordinate-stencil Hessian on grid/torus spaces.
/// Throws std::invalid_argument for spaces without coordinates.
VertexFunction hessian_modulus(const Space& space, const VertexFunction& f);

/// Pointwise max over the t-grid of t^{-α/2}|P_t f(x)|.
VertexFunction triebel_sup(const Semigroup& sg, const VertexFunction& f, double alpha);

/// CSV rows "vertex_id,value".
std::string vertex_function_csv(const Space& space, const VertexFunction& f);

}  // namespace gnlab
