#include "gnlab/space.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gnlab {

std::vector<int> GridInfo::coords(Index x) const {
  std::vector<int> c(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    c[k] = static_cast<int>(x % dims[k]);
    x /= dims[k];
  }
  return c;
}

Index GridInfo::index(std::span<const int> c) const {
  Index x = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) x = x * dims[k] + c[k];
  return x;
}

std::optional<Index> GridInfo::shift(Index x, int axis, int delta) const {
  auto c = coords(x);
  int v = c[axis] + delta;
  const int n = dims[axis];
  if (periodic) {
    v = ((v % n) + n) % n;
  } else if (v < 0 || v >= n) {
    return std::nullopt;
  }
  c[axis] = v;
  return index(c);
}

Space::Space(std::vector<std::string> ids, VertexFunction measure, std::vector<Edge> edges,
             std::optional<GridInfo> grid, std::string description)
    : ids_(std::move(ids)),
      measure_(std::move(measure)),
      edges_(std::move(edges)),
      grid_(std::move(grid)),
      description_(std::move(description)) {
  const Index n = size();
  if (n < 2) throw InputError("a space needs at least two vertices");
  if (measure_.size() != n) throw InputError("measure vector does not match vertex count");
  for (Index x = 0; x < n; ++x) {
    if (!(measure_[x] > 0.0) || !std::isfinite(measure_[x]))
      throw InputError("nonpositive measure at vertex '" + ids_[x] + "'");
  }
  total_measure_ = measure_.sum();

  std::set<std::pair<Index, Index>> seen;
  std::vector<std::vector<Neighbor>> adj(n);
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) throw InputError("edge endpoint out of range");
    if (e.u == e.v) throw InputError("self-loop at vertex '" + ids_[e.u] + "'");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw InputError("nonpositive weight on edge " + ids_[e.u] + "-" + ids_[e.v]);
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second)
      throw InputError("duplicate edge " + ids_[e.u] + "-" + ids_[e.v]);
    adj[e.u].push_back({e.v, e.weight});
    adj[e.v].push_back({e.u, e.weight});
    max_weight_ = std::max(max_weight_, e.weight);
  }
  adj_offset_.assign(n + 1, 0);
  for (Index x = 0; x < n; ++x) {
    std::sort(adj[x].begin(), adj[x].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
    adj_offset_[x + 1] = adj_offset_[x] + static_cast<Index>(adj[x].size());
    max_degree_ = std::max(max_degree_, static_cast<int>(adj[x].size()));
  }
  adj_.reserve(adj_offset_[n]);
  for (auto& a : adj) adj_.insert(adj_.end(), a.begin(), a.end());

  // All-source BFS.
  const auto un = static_cast<std::size_t>(n);
  dist_.assign(un * un, std::numeric_limits<std::uint16_t>::max());
  order_.resize(un * un);
  for (Index s = 0; s < n; ++s) {
    std::uint16_t* d = dist_.data() + s * un;
    std::int32_t* q = order_.data() + s * un;
    std::size_t head = 0, tail = 0;
    d[s] = 0;
    q[tail++] = static_cast<std::int32_t>(s);
    while (head < tail) {
      const Index x = q[head++];
      for (const Neighbor& nb : neighbors(x)) {
        if (d[nb.vertex] == std::numeric_limits<std::uint16_t>::max()) {
          if (d[x] + 1 >= std::numeric_limits<std::uint16_t>::max())
            throw InputError("graph diameter too large");
          d[nb.vertex] = static_cast<std::uint16_t>(d[x] + 1);
          q[tail++] = static_cast<std::int32_t>(nb.vertex);
        }
      }
    }
    if (tail != un) throw InputError("graph is disconnected");
    diameter_ = std::max(diameter_, static_cast<int>(d[q[tail - 1]]));
  }
  // BFS already yields vertices by nondecreasing distance; make ties index-ordered
  // so ball prefixes are canonical.
  for (Index s = 0; s < n; ++s) {
    std::int32_t* q = order_.data() + s * un;
    const std::uint16_t* d = dist_.data() + s * un;
    std::stable_sort(q, q + un, [d](std::int32_t a, std::int32_t b) {
      return d[a] != d[b] ? d[a] < d[b] : a < b;
    });
  }

  const auto radii = static_cast<std::size_t>(diameter_ + 1);
  offsets_.assign(un * radii, 0);
  ball_measure_.assign(un * radii, 0.0);
  for (Index s = 0; s < n; ++s) {
    const std::int32_t* q = order_.data() + s * un;
    const std::uint16_t* d = dist_.data() + s * un;
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t r = 0; r < radii; ++r) {
      while (k < un && d[q[k]] <= r) acc += measure_[q[k++]];
      offsets_[s * radii + r] = static_cast<std::int32_t>(k);
      ball_measure_[s * radii + r] = acc;
    }
  }
}

std::span<const Neighbor> Space::neighbors(Index x) const {
  return {adj_.data() + adj_offset_[x], static_cast<std::size_t>(adj_offset_[x + 1] - adj_offset_[x])};
}

int Space::distance(Index x, Index y) const {
  return dist_[static_cast<std::size_t>(x * size() + y)];
}

int Space::clamp_radius(int r) const { return std::clamp(r, 0, diameter_); }

std::span<const std::int32_t> Space::ball(Index x, int r) const {
  const auto un = static_cast<std::size_t>(size());
  const std::size_t len = offsets_[x * (diameter_ + 1) + clamp_radius(r)];
  return {order_.data() + x * un, len};
}

double Space::ball_measure(Index x, int r) const {
  return ball_measure_[x * (diameter_ + 1) + clamp_radius(r)];
}

double Space::ball_average(const VertexFunction& f, Index x, int r) const {
  const auto un = static_cast<std::size_t>(size());
  const std::size_t len = offsets_[x * (diameter_ + 1) + clamp_radius(r)];
  const std::int32_t* q = order_.data() + x * un;
  double acc = 0.0;
  for (std::size_t k = 0; k < len; ++k) acc += f[q[k]] * measure_[q[k]];
  return acc / ball_measure(x, r);
}

std::optional<Index> Space::find(std::string_view id) const {
  for (Index x = 0; x < size(); ++x)
    if (ids_[x] == id) return x;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

double parse_positive_real(const std::string& tok, int line, const char* what) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw InputError(std::string("malformed ") + what + " '" + tok + "'", line);
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + " must be > 0", line);
  return v;
}

}  // namespace

Space parse_graph_text(std::string_view text, std::string description, Index max_vertices) {
  struct PendingEdge {
    std::string a, b;
    double w;
    int line;
  };
  std::vector<std::string> ids;
  std::vector<double> measures;
  std::unordered_map<std::string, Index> index_of;
  std::vector<PendingEdge> pending;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream ls(raw);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (kind == "v") {
      if (toks.size() != 2) throw InputError("vertex line needs 'v <id> <measure>'", line);
      if (index_of.count(toks[0])) throw InputError("duplicate vertex '" + toks[0] + "'", line);
      index_of.emplace(toks[0], static_cast<Index>(ids.size()));
      ids.push_back(toks[0]);
      measures.push_back(parse_positive_real(toks[1], line, "measure"));
      if (static_cast<Index>(ids.size()) > max_vertices)
        throw InputError("vertex count exceeds cap " + std::to_string(max_vertices), line);
    } else if (kind == "e") {
      if (toks.size() != 3) throw InputError("edge line needs 'e <id1> <id2> <weight>'", line);
      pending.push_back({toks[0], toks[1], parse_positive_real(toks[2], line, "weight"), line});
    } else {
      throw InputError("unknown line kind '" + kind + "'", line);
    }
  }

  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> seen;
  for (const auto& pe : pending) {
    auto ia = index_of.find(pe.a);
    auto ib = index_of.find(pe.b);
    if (ia == index_of.end()) throw InputError("edge references unknown vertex '" + pe.a + "'", pe.line);
    if (ib == index_of.end()) throw InputError("edge references unknown vertex '" + pe.b + "'", pe.line);
    if (ia->second == ib->second) throw InputError("self-loop", pe.line);
    if (!seen.emplace(std::min(ia->second, ib->second), std::max(ia->second, ib->second)).second)
      throw InputError("duplicate edge " + pe.a + "-" + pe.b, pe.line);
    edges.push_back({ia->second, ib->second, pe.w});
  }
  VertexFunction mu = Eigen::Map<const VertexFunction>(measures.data(), static_cast<Index>(measures.size()));
  return Space(std::move(ids), std::move(mu), std::move(edges), std::nullopt, std::move(description));
}

Space build_from_file(const std::filesystem::path& path, Index max_vertices) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph_text(ss.str(), "file:" + path.string(), max_vertices);
}

std::string to_graph_text(const Space& space) {
  std::ostringstream out;
  out.precision(17);
  out << "# " << space.description() << "\n";
  for (Index x = 0; x < space.size(); ++x) out << "v " << space.ids()[x] << ' ' << space.measure()[x] << "\n";
  for (const Edge& e : space.edges())
    out << "e " << space.ids()[e.u] << ' ' << space.ids()[e.v] << ' ' << e.weight << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

std::vector<int> parse_int_list(std::string_view s, char sep, std::string_view descriptor) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    const std::string_view tok = s.substr(pos, next == std::string_view::npos ? s.size() - pos : next - pos);
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
      throw InputError("malformed builtin descriptor '" + std::string(descriptor) + "'");
    out.push_back(v);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

void check_cap(Index n, Index cap, std::string_view descriptor) {
  if (n > cap)
    throw InputError("builtin '" + std::string(descriptor) + "' has " + std::to_string(n) +
                     " vertices, over the cap of " + std::to_string(cap));
}

Space unit_space(std::vector<std::string> ids, std::vector<Edge> edges, std::string description,
                 std::optional<GridInfo> grid = std::nullopt) {
  VertexFunction mu = VertexFunction::Ones(static_cast<Index>(ids.size()));
  return Space(std::move(ids), std::move(mu), std::move(edges), std::move(grid), std::move(description));
}

Space make_lattice(const std::vector<int>& dims, bool periodic, Index cap, std::string_view descriptor) {
  Index n = 1;
  for (int d : dims) {
    if (d < (periodic ? 3 : 1)) throw InputError("side length too small in '" + std::string(descriptor) + "'");
    n *= d;
    check_cap(n, cap, descriptor);
  }
  GridInfo grid{dims, periodic};
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  std::vector<Edge> edges;
  for (Index x = 0; x < n; ++x) {
    auto c = grid.coords(x);
    std::string id;
    for (std::size_t k = 0; k < c.size(); ++k) id += (k ? "," : "") + std::to_string(c[k]);
    ids[x] = id;
    for (int axis = 0; axis < static_cast<int>(dims.size()); ++axis) {
      if (auto y = grid.shift(x, axis, +1))
        edges.push_back({x, *y, 1.0});
    }
  }
  if (n == 1) throw InputError("lattice needs at least two vertices");
  return unit_space(std::move(ids), std::move(edges), std::string(descriptor), grid);
}

Space make_heisenberg(int radius, Index cap, std::string_view descriptor) {
  using Elem = std::array<long, 3>;
  auto mul = [](const Elem& g, const Elem& s) {
    return Elem{g[0] + s[0], g[1] + s[1], g[2] + s[2] + g[0] * s[1]};
  };
  const std::array<Elem, 4> gens{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}};
  std::map<Elem, Index> index_of;
  std::vector<Elem> elems{{0, 0, 0}};
  index_of[{0, 0, 0}] = 0;
  std::size_t frontier_begin = 0;
  for (int r = 0; r < radius; ++r) {
    const std::size_t frontier_end = elems.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
      for (const auto& s : gens) {
        Elem h = mul(elems[i], s);
        if (!index_of.count(h)) {
          index_of[h] = static_cast<Index>(elems.size());
          elems.push_back(h);
          check_cap(static_cast<Index>(elems.size()), cap, descriptor);
        }
      }
    }
    frontier_begin = frontier_end;
  }
  std::vector<std::string> ids;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    const auto& g = elems[i];
    ids.push_back(std::to_string(g[0]) + ":" + std::to_string(g[1]) + ":" + std::to_string(g[2]));
    for (std::size_t k : {0u, 2u}) {  // right multiplication by x and y; inverses give the same edges
      auto it = index_of.find(mul(g, gens[k]));
      if (it != index_of.end()) edges.push_back({static_cast<Index>(i), it->second, 1.0});
    }
  }
  return unit_space(std::move(ids), std::move(edges), std::string(descriptor));
}

}  // namespace

Space build_builtin(std::string_view descriptor, Index max_vertices) {
  const std::size_t colon = descriptor.find(':');
  if (colon == std::string_view::npos) throw InputError("malformed builtin descriptor '" + std::string(descriptor) + "'");
  const std::string_view kind = descriptor.substr(0, colon);
  const std::string_view arg = descriptor.substr(colon + 1);

  if (kind == "cycle") {
    const auto v = parse_int_list(arg, ',', descriptor);
    if (v.size() != 1 || v[0] < 3) throw InputError("cycle:n needs n >= 3");
    check_cap(v[0], max_vertices, descriptor);
    std::vector<std::string> ids;
    std::vector<Edge> edges;
    for (int i = 0; i < v[0]; ++i) {
      ids.push_back(std::to_string(i));
      edges.push_back({i, (i + 1) % v[0], 1.0});
    }
    return unit_space(std::move(ids), std::move(edges), std::string(descriptor));
  }
  if (kind == "grid" || kind == "torus") {
    return make_lattice(parse_int_list(arg, 'x', descriptor), kind == "torus", max_vertices, descriptor);
  }
  if (kind == "tree") {
    const auto v = parse_int_list(arg, ',', descriptor);
    if (v.size() != 1 || v[0] < 1 || v[0] > 30) throw InputError("tree:depth needs 1 <= depth <= 30");
    const Index n = (Index{1} << (v[0] + 1)) - 1;
    check_cap(n, max_vertices, descriptor);
    std::vector<std::string> ids;
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
      ids.push_back(std::to_string(i));
      if (i > 0) edges.push_back({(i - 1) / 2, i, 1.0});
    }
    return unit_space(std::move(ids), std::move(edges), std::string(descriptor));
  }
  if (kind == "dumbbell") {
    const auto v = parse_int_list(arg, ',', descriptor);
    if (v.size() != 2 || v[0] < 2 || v[1] < 1) throw InputError("dumbbell:clique_size,bridge_len needs clique >= 2, bridge >= 1");
    const int m = v[0], len = v[1];
    const Index n = 2 * Index{m} + len - 1;
    check_cap(n, max_vertices, descriptor);
    std::vector<std::string> ids;
    std::vector<Edge> edges;
    // Clique A: 0..m-1, clique B: m..2m-1, bridge interior: 2m..2m+len-2.
    // The bridge joins vertex 0 of A to vertex m of B with `len` edges.
    for (int side = 0; side < 2; ++side) {
      for (int i = 0; i < m; ++i) {
        ids.push_back((side ? "b" : "a") + std::to_string(i));
        for (int j = 0; j < i; ++j) edges.push_back({side * m + j, side * m + i, 1.0});
      }
    }
    Index prev = 0;
    for (int k = 1; k < len; ++k) {
      ids.push_back("p" + std::to_string(k));
      const Index cur = 2 * Index{m} + k - 1;
      edges.push_back({prev, cur, 1.0});
      prev = cur;
    }
    edges.push_back({prev, m, 1.0});
    return unit_space(std::move(ids), std::move(edges), std::string(descriptor));
  }
  if (kind == "heisenberg") {
    const auto v = parse_int_list(arg, ',', descriptor);
    if (v.size() != 1 || v[0] < 1) throw InputError("heisenberg:R needs R >= 1");
    return make_heisenberg(v[0], max_vertices, descriptor);
  }
  throw InputError("unknown builtin kind '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------
// Geometry estimators

DoublingResult doubling_constant(const Space& space, int r_max) {
  if (r_max < 1 || r_max > space.diameter())
    throw std::domain_error("doubling_constant: r_max must lie in [1, diameter]");
  DoublingResult res;
  res.per_radius.assign(static_cast<std::size_t>(r_max), 0.0);
  res.constant = 0.0;
  for (int r = 1; r <= r_max; ++r) {
    for (Index x = 0; x < space.size(); ++x) {
      const double ratio = space.ball_measure(x, 2 * r) / space.ball_measure(x, r);
      res.per_radius[r - 1] = std::max(res.per_radius[r - 1], ratio);
      if (ratio > res.constant) {
        res.constant = ratio;
        res.vertex = x;
        res.radius = r;
      }
    }
  }
  return res;
}

GrowthFit growth_exponent(const Space& space, int r_lo, int r_hi) {
  r_lo = std::max(r_lo, 1);
  r_hi = std::min(r_hi, space.diameter());
  if (r_hi - r_lo + 1 < 2) throw std::domain_error("growth_exponent: degenerate fit (fewer than two radii)");
  const int m = r_hi - r_lo + 1;
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (int r = r_lo; r <= r_hi; ++r) {
    double inf = std::numeric_limits<double>::infinity();
    for (Index x = 0; x < space.size(); ++x) inf = std::min(inf, space.ball_measure(x, r));
    A(r - r_lo, 0) = std::log(static_cast<double>(r));
    A(r - r_lo, 1) = 1.0;
    b(r - r_lo) = std::log(inf);
  }
  const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
  GrowthFit fit;
  fit.sigma = sol(0);
  fit.c = std::exp(sol(1));
  fit.residual = std::sqrt((A * sol - b).squaredNorm() / m);
  return fit;
}

}  // namespace gnlab
