#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace gnlab {

using Index = Eigen::Index;

/// A real-valued function on the vertices of a Space, indexed like the Space.
using VertexFunction = Eigen::VectorXd;

/// How the per-edge differences around a vertex are aggregated into |∇f|(x).
enum class GradientMode {
  l2,   ///< (Σ_{y~x} w_xy (f(y)-f(x))²)^{1/2}
  max,  ///< max_{y~x} w_xy^{1/2} |f(y)-f(x)|
};

inline const char* to_string(GradientMode m) { return m == GradientMode::l2 ? "l2" : "max"; }

/// Malformed input (graph files, builtin descriptors, CLI values).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr const char* kVersion = "gnlab 0.3.0";

}  // namespace gnlab
