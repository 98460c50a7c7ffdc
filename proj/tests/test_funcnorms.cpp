#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gnlab/corpus.hpp"
#include "gnlab/funcnorms.hpp"

#include <cmath>

using namespace gnlab;

namespace {

Space path3() { return parse_graph_text("v a 1\nv b 1\nv c 1\ne a b 1\ne b c 1\n"); }
std::shared_ptr<const Space> shared(Space s) { return std::make_shared<Space>(std::move(s)); }
VertexFunction vec(std::initializer_list<double> v) {
  VertexFunction f(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) f[i++] = x;
  return f;
}

}  // namespace

TEST_CASE("gradient modulus") {
  const Space s = path3();
  const VertexFunction l2 = gradient_modulus(s, vec({3, 1, 2}), GradientMode::l2);
  CHECK(l2[0] == doctest::Approx(2.0));
  CHECK(l2[1] == doctest::Approx(std::sqrt(5.0)));
  CHECK(l2[2] == doctest::Approx(1.0));
  CHECK(gradient_modulus(s, vec({3, 1, 2}), GradientMode::max) == vec({2, 2, 1}));
  CHECK(gradient_modulus(s, vec({7, 7, 7})).norm() == 0.0);

  // max <= l2 <= √deg_max · max on a corpus.
  auto torus = shared(build_builtin("torus:8x8"));
  const Semigroup sg(torus);
  for (const auto& fn : generate_corpus(sg, {.seed = 5, .count = 15}).functions) {
    const VertexFunction a = gradient_modulus(*torus, fn.values, GradientMode::max);
    const VertexFunction b = gradient_modulus(*torus, fn.values, GradientMode::l2);
    CHECK((a.array() <= b.array()).all());
    CHECK((b.array() <= std::sqrt(double(torus->max_degree())) * a.array() * (1 + 1e-15)).all());
  }
}

TEST_CASE("sobolev norm") {
  const Space s = path3();
  CHECK(sobolev_norm(s, vec({3, 3, 3}), 2.0, GradientMode::l2, true) == 0.0);
  CHECK(sobolev_norm(s, vec({3, 1, 2}), 1.0, GradientMode::l2, true) == doctest::Approx(3.0 + std::sqrt(5.0)));
  CHECK(sobolev_norm(s, vec({3, 1, 2}), kInf) == doctest::Approx(3.0 + std::sqrt(5.0)));
  CHECK(sobolev_norm(s, vec({3, 1, 2}), 1.0) == doctest::Approx(6.0 + 3.0 + std::sqrt(5.0)));
  CHECK(lp_norm(s, vec({3, 1, 2}), 2.0) == doctest::Approx(std::sqrt(14.0)));
  CHECK_THROWS_AS(lp_norm(s, vec({3, 1, 2}), 0.5), std::domain_error);
}

TEST_CASE("besov norm") {
  const Semigroup k2(shared(parse_graph_text("v a 1\nv b 1\ne a b 1\n")));
  CHECK(besov_norm(k2, vec({2, 2}), -1.0).value == 0.0);
  // P_t f = e^{-2t} f for f = (1,-1).
  double want = 0.0, want_raw = 0.0;
  for (double t : k2.t_grid()) {
    want = std::max(want, std::sqrt(t) * (std::exp(-2 * t) - std::exp(-4 * t)));
    want_raw = std::max(want_raw, std::sqrt(t) * std::exp(-2 * t));
  }
  CHECK(besov_norm(k2, vec({1, -1}), -1.0).value == doctest::Approx(want).epsilon(1e-14));
  CHECK(besov_norm(k2, vec({1, -1}), -1.0, BesovMode::raw).value == doctest::Approx(want_raw).epsilon(1e-14));
  CHECK_THROWS_AS(besov_norm(k2, vec({1, 0}), -1.0, BesovMode::raw), std::domain_error);
  CHECK_THROWS_AS(besov_norm(k2, vec({1, -1}), 0.0), std::domain_error);

  // Seminorm axioms and the two-sided comparison with the raw norm.
  auto torus = shared(build_builtin("torus:8x8"));
  const Semigroup sg(torus);
  const Corpus c = generate_corpus(sg, {.seed = 9, .count = 12});
  for (double alpha : {-1.0, -2.0, -0.5}) {
    const double up = 1.0 + std::pow(2.0, alpha / 2), down = 1.0 - std::pow(2.0, alpha / 2);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const VertexFunction& f = c.functions[i].values;
      const VertexFunction& g = c.functions[(i + 1) % c.size()].values;
      const double nf = besov_norm(sg, f, alpha).value;
      CHECK(besov_norm(sg, -2.5 * f, alpha).value == doctest::Approx(2.5 * nf).epsilon(1e-10));
      CHECK(besov_norm(sg, f + g, alpha).value <= nf + besov_norm(sg, g, alpha).value + 1e-10);
      const double raw = besov_norm(sg, f, alpha, BesovMode::raw).value;
      CHECK(nf <= up * raw + 1e-9);
      CHECK(raw <= nf / down + 1e-9);
    }
  }
}

TEST_CASE("morrey norm") {
  const Space s = path3();
  CHECK(morrey_norm(s, VertexFunction::Zero(3), -1.0, 2).value == 0.0);
  const MorreyValue m = morrey_norm(s, vec({3, 1, 2}), -1.0, 2);
  CHECK(m.value == doctest::Approx(4.0));
  CHECK(m.radius == 2);
  CHECK(morrey_norm(s, vec({3, 1, 2}), -1.0, 1).value == doctest::Approx(2.0));
  CHECK_THROWS_AS(morrey_norm(s, vec({3, 1, 2}), -1.0, 3), std::domain_error);

  // Bounded by r_max^{-α} max Mf.
  auto torus = shared(build_builtin("torus:8x8"));
  const Semigroup sg(torus);
  for (const auto& fn : generate_corpus(sg, {.seed = 2, .count = 10}).functions) {
    const double mv = morrey_norm(*torus, fn.values, -1.0, 4).value;
    CHECK(mv <= 4.0 * maximal_function(*torus, fn.values).maxCoeff() + 1e-12);
  }
}

TEST_CASE("maximal function") {
  const Space s = path3();
  CHECK(maximal_function(s, vec({2, 2, 2})) == vec({2, 2, 2}));
  const VertexFunction m = maximal_function(s, vec({3, 0, 0}));
  CHECK(m[0] == doctest::Approx(3.0));
  CHECK(m[1] == doctest::Approx(1.0));
  CHECK(m[2] == doctest::Approx(1.0));
  const VertexFunction f = vec({-1, 4, 0.5});
  CHECK((maximal_function(s, f).array() >= f.cwiseAbs().array()).all());
}

TEST_CASE("hessian modulus") {
  const Space g5 = build_builtin("grid:5");
  const VertexFunction h = hessian_modulus(g5, vec({0, 1, 4, 9, 16}));
  CHECK(h == vec({0, 2, 2, 2, 0}));
  CHECK(hessian_modulus(g5, VertexFunction::Constant(5, 3.0)).norm() == 0.0);
  CHECK_THROWS_AS(hessian_modulus(path3(), vec({1, 2, 3})), std::invalid_argument);

  // Indicator of the origin on torus:4x4, against an explicit stencil.
  const Space t = build_builtin("torus:4x4");
  VertexFunction f = VertexFunction::Zero(16);
  f[0] = 1.0;
  auto at = [&](int i, int j) { return f[((i + 4) % 4) * 4 + (j + 4) % 4]; };
  const VertexFunction got = hessian_modulus(t, f);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double d00 = at(i + 1, j) - 2 * at(i, j) + at(i - 1, j);
      const double d11 = at(i, j + 1) - 2 * at(i, j) + at(i, j - 1);
      const double d01 = at(i + 1, j + 1) - at(i + 1, j) - at(i, j + 1) + at(i, j);
      CHECK(got[i * 4 + j] == doctest::Approx(std::sqrt(d00 * d00 + d11 * d11 + 2 * d01 * d01)));
    }
  CHECK(got[0] == doctest::Approx(std::sqrt(4 + 4 + 2.0)));
}

TEST_CASE("triebel supremum") {
  const Semigroup k2(shared(parse_graph_text("v a 1\nv b 1\ne a b 1\n")));
  CHECK(triebel_sup(k2, VertexFunction::Zero(2), -1.0).norm() == 0.0);
  const VertexFunction ts = triebel_sup(k2, vec({1, -1}), -1.0);
  CHECK(ts[0] == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(ts[1] == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-14));

  const Semigroup sg(shared(build_builtin("cycle:12")));
  const VertexFunction f = generate_corpus(sg, {.seed = 1, .count = 1}).functions[0].values;
  const double t0 = sg.t_grid().front();
  CHECK((triebel_sup(sg, f, -1.0).array() >= std::sqrt(t0) * sg.apply(f, t0).cwiseAbs().array() - 1e-15).all());
}

TEST_CASE("vertex function csv") {
  CHECK(vertex_function_csv(path3(), vec({1, 0.5, -2})) == "vertex_id,value\na,1\nb,0.5\nc,-2\n");
}
