#pragma once

#include "gnlab/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gnlab {

struct Edge {
  Index u = 0;
  Index v = 0;
  double weight = 1.0;
};

struct Neighbor {
  Index vertex = 0;
  double weight = 1.0;
};

/// Coordinate metadata carried by grid:/torus: builtins. Vertex index is
/// row-major in the coordinates (last axis fastest).
struct GridInfo {
  std::vector<int> dims;
  bool periodic = false;

  std::vector<int> coords(Index x) const;
  Index index(std::span<const int> c) const;
  /// Vertex reached from x by moving `delta` along `axis`; empty when it leaves a
  /// non-periodic grid.
  std::optional<Index> shift(Index x, int axis, int delta) const;
};

/// Finite connected weighted graph with vertex measures and hop-count metric.
///
/// The ball table is computed once at construction: for every vertex the BFS
/// order (vertices sorted by distance, ties by index) with per-radius offsets, so
/// B(x, r) is a prefix of that order. Immutable afterwards.
class Space {
 public:
  /// Validates and builds. Throws InputError on nonpositive measure or weight,
  /// self-loops, duplicate edges, out-of-range endpoints or a disconnected graph.
  Space(std::vector<std::string> ids, VertexFunction measure, std::vector<Edge> edges,
        std::optional<GridInfo> grid = std::nullopt, std::string description = {});

  Index size() const noexcept { return static_cast<Index>(ids_.size()); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const VertexFunction& measure() const noexcept { return measure_; }
  double total_measure() const noexcept { return total_measure_; }
  double min_measure() const noexcept { return measure_.minCoeff(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(Index x) const;
  int degree(Index x) const { return static_cast<int>(neighbors(x).size()); }
  int max_degree() const noexcept { return max_degree_; }
  double max_weight() const noexcept { return max_weight_; }
  const std::optional<GridInfo>& grid() const noexcept { return grid_; }
  const std::string& description() const noexcept { return description_; }

  int diameter() const noexcept { return diameter_; }
  int distance(Index x, Index y) const;
  /// Vertices of B(x, r) = {y : d(x,y) <= r}; r is clamped to [0, diameter].
  std::span<const std::int32_t> ball(Index x, int r) const;
  double ball_measure(Index x, int r) const;
  Index ball_size(Index x, int r) const { return static_cast<Index>(ball(x, r).size()); }
  /// μ-weighted average of f over B(x, r).
  double ball_average(const VertexFunction& f, Index x, int r) const;

  std::optional<Index> find(std::string_view id) const;

 private:
  int clamp_radius(int r) const;

  std::vector<std::string> ids_;
  VertexFunction measure_;
  std::vector<Edge> edges_;
  std::vector<Index> adj_offset_;
  std::vector<Neighbor> adj_;
  std::optional<GridInfo> grid_;
  std::string description_;
  double total_measure_ = 0.0;
  int max_degree_ = 0;
  double max_weight_ = 0.0;
  int diameter_ = 0;
  std::vector<std::uint16_t> dist_;     // n*n
  std::vector<std::int32_t> order_;     // n*n, BFS order per source
  std::vector<std::int32_t> offsets_;   // n*(diameter+1): ball sizes
  std::vector<double> ball_measure_;    // n*(diameter+1)
};

/// Upper bound on vertex count for builtin descriptors and files.
inline constexpr Index kDefaultMaxVertices = 8192;

Space build_from_file(const std::filesystem::path& path, Index max_vertices = kDefaultMaxVertices);
Space parse_graph_text(std::string_view text, std::string description = "<text>",
                       Index max_vertices = kDefaultMaxVertices);

/// cycle:n, grid:n1x…xnd, torus:n1x…xnd, tree:depth, dumbbell:clique,bridge,
/// heisenberg:R. Unit weights and counting measure throughout.
Space build_builtin(std::string_view descriptor, Index max_vertices = kDefaultMaxVertices);

/// Serializes to the line-oriented graph text format (round-trips through
/// parse_graph_text).
std::string to_graph_text(const Space& space);

struct DoublingResult {
  double constant = 1.0;
  Index vertex = 0;
  int radius = 1;
  /// per_radius[r-1] = max_x μ(B(x,2r))/μ(B(x,r)).
  std::vector<double> per_radius;
};

/// Exact max over x and 1 <= r <= r_max of μ(B(x,2r))/μ(B(x,r)), radii clamped
/// at the diameter.
DoublingResult doubling_constant(const Space& space, int r_max);

struct GrowthFit {
  double sigma = 0.0;
  double c = 0.0;
  double residual = 0.0;  ///< RMS of the log-space fit
};

/// Least-squares fit of log inf_x μ(B(x,r)) = σ log r + log c over r in
/// [r_lo, r_hi]. Throws std::domain_error when fewer than two radii are usable.
GrowthFit growth_exponent(const Space& space, int r_lo, int r_hi);

}  // namespace gnlab
