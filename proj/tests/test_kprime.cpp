#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gnlab/corpus.hpp"
#include "gnlab/funcnorms.hpp"
#include "gnlab/kprime.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace gnlab;

namespace {

Space path3() { return parse_graph_text("v a 1\nv b 1\nv c 1\ne a b 1\ne b c 1\n"); }
Space k2() { return parse_graph_text("v a 1\nv b 1\ne a b 1\n"); }
std::shared_ptr<const Space> shared(Space s) { return std::make_shared<Space>(std::move(s)); }
VertexFunction vec(std::initializer_list<double> v) {
  VertexFunction f(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) f[i++] = x;
  return f;
}

Space from_json(const nlohmann::json& c) {
  const Index n = c["n"].get<Index>();
  std::vector<std::string> ids;
  VertexFunction mu(n);
  for (Index i = 0; i < n; ++i) {
    ids.push_back(std::to_string(i));
    mu[i] = c["measure"][static_cast<std::size_t>(i)].get<double>();
  }
  std::vector<Edge> edges;
  for (const auto& e : c["edges"]) edges.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()});
  return Space(std::move(ids), std::move(mu), std::move(edges));
}

// Exhaustive search over g with g(0) = 0 (K′ is invariant under constants) on a
// square grid of pitch 1e-3·range(f) for the remaining two coordinates. The
// objective is evaluated directly from the edge list.
double grid_search_3(const Space& s, const VertexFunction& f, double q, double t) {
  const double range = f.maxCoeff() - f.minCoeff();
  const double pitch = 1e-3 * range, span = 2.0 * range;
  const int steps = static_cast<int>(std::lround(2 * span / pitch));
  const double weight = std::pow(t, 1.0 / q);
  std::vector<double> sw;
  for (const Edge& e : s.edges()) sw.push_back(std::sqrt(e.weight));
  double best = kInf;
  double g[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i <= steps; ++i) {
    g[1] = -span + i * pitch;
    for (int j = 0; j <= steps; ++j) {
      g[2] = -span + j * pitch;
      double grad_h[3] = {0.0, 0.0, 0.0}, grad_g = 0.0;
      for (std::size_t k = 0; k < sw.size(); ++k) {
        const Edge& e = s.edges()[k];
        const double dh = sw[k] * std::abs(f[e.v] - g[e.v] - f[e.u] + g[e.u]);
        grad_h[e.u] = std::max(grad_h[e.u], dh);
        grad_h[e.v] = std::max(grad_h[e.v], dh);
        grad_g = std::max(grad_g, sw[k] * std::abs(g[e.v] - g[e.u]));
      }
      double norm = 0.0;
      for (Index x = 0; x < 3; ++x) norm += s.measure()[x] * (q == 1.0 ? grad_h[x] : grad_h[x] * grad_h[x]);
      best = std::min(best, (q == 1.0 ? norm : std::sqrt(norm)) + weight * grad_g);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("lower bound") {
  const Space s = path3();
  CHECK(kprime_lower(s, vec({4, 4, 4}), 1.0, 2.0) == 0.0);
  CHECK(kprime_lower(s, vec({3, 1, 2}), 1.0, 2.0) == doctest::Approx(4.0).epsilon(1e-14));
  // q = 2, t = 1: the decreasing rearrangement of |∇f|² averaged over the first unit.
  CHECK(kprime_lower(s, vec({3, 1, 2}), 2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(kprime_lower(s, vec({3, 1, 2}), 1.0, 0.0), std::domain_error);
}

TEST_CASE("envelope decomposition") {
  const Space s = path3();
  const VertexFunction f = vec({3, 1, 2});
  const double lip = lipschitz_constant(s, f);
  CHECK(lip == 2.0);

  const Decomposition top = lipschitz_envelope_decomposition(s, f, lip, 1.0, 2.0);
  CHECK(top.g == f);
  CHECK(top.h.norm() == 0.0);
  CHECK(top.value == doctest::Approx(2.0 * 2.0));

  const Decomposition flat = lipschitz_envelope_decomposition(s, f, 0.0, 2.0, 5.0);
  CHECK((flat.g.array() == 2.0).all());
  CHECK(flat.value == doctest::Approx(lp_norm(s, gradient_modulus(s, f, GradientMode::max), 2.0)));

  // λ = 1: g⁻ = (2,1,2), g⁺ = (3,2,2).
  const Decomposition mid = lipschitz_envelope_decomposition(s, f, 1.0, 1.0, 1.0);
  CHECK(mid.g == vec({2.5, 1.5, 2.0}));
  CHECK(mid.h == vec({0.5, -0.5, 0.0}));
  CHECK(mid.value == doctest::Approx(1.0 + 1.0 + 0.5 + 1.0));
  CHECK_THROWS_AS(lipschitz_envelope_decomposition(s, f, -1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("envelope against a brute-force oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (const char* d : {"cycle:7", "grid:3x4", "tree:3", "heisenberg:2"}) {
    const Space s = build_builtin(d);
    const Index n = s.size();
    VertexFunction f(n);
    for (Index i = 0; i < n; ++i) f[i] = z(rng);
    for (double lambda : {0.0, 0.1, 0.7, 3.0}) {
      const Decomposition dec = lipschitz_envelope_decomposition(s, f, lambda, 1.0, 1.0);
      for (Index x = 0; x < n; ++x) {
        double lo = kInf, hi = -kInf;
        for (Index y = 0; y < n; ++y) {
          lo = std::min(lo, f[y] + lambda * s.distance(x, y));
          hi = std::max(hi, f[y] - lambda * s.distance(x, y));
        }
        CHECK(dec.g[x] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-14));
      }
      CHECK((dec.h + dec.g - f).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(gradient_modulus(s, dec.g, GradientMode::max).maxCoeff() <= lambda * (1 + 1e-12));
    }
  }
}

TEST_CASE("upper bound") {
  const Space two = k2();
  CHECK(kprime_upper(two, vec({5, 5}), 1.0, 1.0, {0.0}).value == 0.0);
  // f = (1,0), q = 1, t = 0.25: λ = 0 costs ‖∇f‖₁ = 2, λ = ½ costs 1 + 0.125,
  // λ = 1 costs t·1 = 0.25.
  const UpperBound ub = kprime_upper(two, vec({1, 0}), 1.0, 0.25, {0.0, 0.5, 1.0});
  CHECK(ub.value == doctest::Approx(0.25));
  CHECK(ub.lambda == 1.0);
  CHECK(kprime_upper(two, vec({1, 0}), 1.0, 0.25, {0.0}).value == doctest::Approx(2.0));
  CHECK(kprime_upper(two, vec({1, 0}), 1.0, 0.25, {0.5}).value == doctest::Approx(1.125));
  CHECK_THROWS_AS(kprime_upper(two, vec({1, 0}), 1.0, 1.0, {}), std::domain_error);

  // Enlarging the grid never increases the value.
  const Space c = build_builtin("cycle:10");
  const Semigroup sg(shared(build_builtin("cycle:10")));
  for (const auto& fn : generate_corpus(sg, {.seed = 3, .count = 6}).functions) {
    const auto grid = default_lambda_grid(c, fn.values);
    CHECK(grid.size() == 33);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == doctest::Approx(lipschitz_constant(c, fn.values)));
    std::vector<double> half;
    for (std::size_t i = 0; i < grid.size(); i += 2) half.push_back(grid[i]);
    CHECK(kprime_upper(c, fn.values, 2.0, 1.5, grid).value <= kprime_upper(c, fn.values, 2.0, 1.5, half).value);
  }
}

TEST_CASE("solver on two vertices") {
  const Space two = k2();
  CHECK(kprime_convex_solve(two, vec({2, 2}), 1.0, 1.0).value == 0.0);
  // Brute force over g = (a, b) on a 1e-3 grid.
  const VertexFunction f = vec({1, 0});
  double brute = kInf;
  for (int i = -2000; i <= 2000; ++i)
    for (int j = -2000; j <= 2000; j += 50) {
      const VertexFunction g = vec({i * 1e-3, j * 1e-3});
      brute = std::min(brute, kprime_objective(two, f, g, 1.0, 1.0));
    }
  const KPrimeSolution sol = kprime_convex_solve(two, f, 1.0, 1.0);
  CHECK(sol.value == doctest::Approx(brute).epsilon(1e-4));
  CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(sol.converged);
  CHECK(sol.value <= kprime_upper(two, f, 1.0, 1.0, default_lambda_grid(two, f)).value);
  CHECK_THROWS_AS(kprime_convex_solve(two, f, 1.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(kprime_convex_solve(two, f, 1.0, -1.0), std::domain_error);
}

TEST_CASE("solver against exhaustive grid search on three vertices") {
  const Space path3_space = path3();
  const Space tri = parse_graph_text("v a 1\nv b 2\nv c 0.5\ne a b 1\ne b c 2\ne a c 0.5\n");
  for (const Space* s : {&path3_space, &tri}) {
    for (const VertexFunction& f : {vec({3, 1, 2}), vec({0.3, -1.2, 0.8})})
      for (double q : {1.0, 2.0})
        for (double t : {0.5, 3.0}) {
          const double brute = grid_search_3(*s, f, q, t);
          const KPrimeSolution sol = kprime_convex_solve(*s, f, q, t);
          CAPTURE(q);
          CAPTURE(t);
          CHECK(sol.value == doctest::Approx(brute).epsilon(1e-2));
          CHECK(sol.converged);
        }
  }
}

TEST_CASE("solver against exact programs on all connected graphs up to six vertices") {
  std::ifstream in(std::string(GNLAB_TEST_DATA) + "/kprime_small_graphs.json");
  REQUIRE(in);
  const nlohmann::json cases = nlohmann::json::parse(in);
  REQUIRE(cases.size() == 1136);
  double worst = 0.0;
  int unconverged = 0;
  for (const auto& c : cases) {
    const Space s = from_json(c);
    VertexFunction f(s.size());
    for (Index i = 0; i < s.size(); ++i) f[i] = c["f"][static_cast<std::size_t>(i)].get<double>();
    const double q = c["q"], t = c["t"], want = c["value"];
    const KPrimeSolution sol = kprime_convex_solve(s, f, q, t);
    const double err = std::abs(sol.value - want) / std::max(1.0, want);
    worst = std::max(worst, err);
    unconverged += !sol.converged;
    CAPTURE(c["atlas_index"].get<int>());
    CHECK(err <= 1e-2);
    CHECK(sol.lower <= want * (1 + 1e-9) + 1e-12);
  }
  MESSAGE("worst relative deviation " << worst << ", unconverged " << unconverged);
  CHECK(worst <= 1e-3);
}

TEST_CASE("sandwich, scaling and subadditivity") {
  const auto torus = shared(build_builtin("torus:8x8"));
  const Semigroup sg(torus);
  const Corpus c = generate_corpus(sg, {.seed = 21, .count = 10});
  for (double q : {1.0, 2.0})
    for (double t : {0.5, 4.0, 32.0})
      for (std::size_t i = 0; i < c.size(); ++i) {
        const VertexFunction& f = c.functions[i].values;
        const VertexFunction& g = c.functions[(i + 3) % c.size()].values;
        CAPTURE(c.functions[i].id);
        CAPTURE(q);
        CAPTURE(t);
        const KPrimeSolution sol = kprime_convex_solve(*torus, f, q, t);
        const double upper = kprime_upper(*torus, f, q, t, default_lambda_grid(*torus, f)).value;
        CHECK(sol.lower <= sol.value * (1 + 1e-6));
        CHECK(sol.value <= upper * (1 + 1e-6));
        CHECK(sol.upper == doctest::Approx(upper).epsilon(1e-12));
        CHECK(sol.gap == doctest::Approx(sol.value - sol.lower).epsilon(1e-12));

        const double c3 = 3.7;
        CHECK(kprime_lower(*torus, c3 * f, q, t) == doctest::Approx(c3 * sol.lower).epsilon(1e-8));
        CHECK(kprime_upper(*torus, c3 * f, q, t, default_lambda_grid(*torus, c3 * f)).value ==
              doctest::Approx(c3 * upper).epsilon(1e-8));
        CHECK(kprime_convex_solve(*torus, c3 * f, q, t).value == doctest::Approx(c3 * sol.value).epsilon(1e-8));

        const double sum = kprime_convex_solve(*torus, f + g, q, t).value;
        const double parts = sol.value + kprime_convex_solve(*torus, g, q, t).value;
        CHECK(sum <= parts * (1 + 1e-6));
      }
}

TEST_CASE("equivalence report") {
  const auto torus = shared(build_builtin("torus:6x6"));
  const Semigroup sg(torus);
  Corpus c = generate_corpus(sg, {.seed = 2, .count = 4});
  c.functions.push_back({"constant", CorpusKind::rademacher, VertexFunction::Constant(36, 1.5)});
  const EquivalenceReport r = equivalence_report(*torus, c, 1.0, {0.5, 2.0, 8.0});
  CHECK(r.n_skipped == 3);
  CHECK(r.rows.size() == 12);
  CHECK(r.ratios_ok);
  CHECK(r.all_converged);
  CHECK(r.min_ratio >= 1.0 - 1e-6);
  CHECK(r.min_ratio <= r.median_ratio);
  CHECK(r.median_ratio <= r.max_ratio);
  CHECK(std::isfinite(r.max_ratio));
  for (const auto& row : r.rows) CHECK(row.ratio == doctest::Approx(row.solver / row.lower).epsilon(1e-14));
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("f_id,t,lower,solver,upper,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}
