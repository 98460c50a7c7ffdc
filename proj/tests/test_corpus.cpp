#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gnlab/corpus.hpp"
#include "gnlab/funcnorms.hpp"

#include <cmath>
#include <set>

using namespace gnlab;

namespace {

std::shared_ptr<const Space> shared(const char* d) { return std::make_shared<Space>(build_builtin(d)); }

}  // namespace

TEST_CASE("splitmix64 reference values") {
  // First outputs for state 0 from the published reference implementation.
  SplitMix64 g(0);
  CHECK(g.next() == 0xE220A8397B1DCDAFULL);
  CHECK(g.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(g.next() == 0x06C45D188009454FULL);
  SplitMix64 u(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(std::isfinite(u.normal()));
    CHECK(u.below(7) < 7);
  }
}

TEST_CASE("kind parsing") {
  CHECK(parse_corpus_kinds("rademacher,eigenvector") ==
        std::vector<CorpusKind>{CorpusKind::rademacher, CorpusKind::eigenvector});
  CHECK_THROWS_AS(parse_corpus_kinds("rademacher,zebra"), InputError);
  CHECK_THROWS_AS(parse_corpus_kinds(""), InputError);
  for (auto k : {CorpusKind::smoothed_noise, CorpusKind::ball_indicator, CorpusKind::distance_bump,
                 CorpusKind::eigenvector, CorpusKind::rademacher})
    CHECK(parse_corpus_kind(to_string(k)) == k);
}

TEST_CASE("determinism and stream independence") {
  const Semigroup sg(shared("torus:6x6"));
  const CorpusOptions opt{.seed = 123, .count = 10};
  const Corpus a = generate_corpus(sg, opt), b = generate_corpus(sg, opt);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.functions[i].id == b.functions[i].id);
    CHECK(a.functions[i].values == b.functions[i].values);
  }
  CHECK(a.to_csv(sg.space()) == b.to_csv(sg.space()));
  // Function i only depends on stream i.
  CorpusOptions longer = opt;
  longer.count = 25;
  const Corpus c = generate_corpus(sg, longer);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(c.functions[i].values == a.functions[i].values);
  CorpusOptions other = opt;
  other.seed = 124;
  CHECK(generate_corpus(sg, other).functions[0].values != a.functions[0].values);
}

TEST_CASE("rademacher with fixed seed") {
  const Semigroup sg(shared("cycle:8"));
  const CorpusOptions opt{.seed = 7, .count = 1, .kinds = {CorpusKind::rademacher}, .mean_zero = false};
  const VertexFunction f = generate_corpus(sg, opt).functions[0].values;
  CHECK((f.array().abs() == 1.0).all());
  CHECK(generate_corpus(sg, opt).functions[0].values == f);
}

TEST_CASE("normalization and coverage") {
  const Semigroup sg(shared("torus:8x8"));
  const Corpus c = generate_corpus(sg, {.seed = 1, .count = 30});
  std::set<CorpusKind> kinds;
  for (const auto& fn : c.functions) {
    kinds.insert(fn.kind);
    CHECK(std::abs(mean(sg.space(), fn.values)) <= 1e-12);
    CHECK(fn.values.maxCoeff() - fn.values.minCoeff() > 1e-9);
  }
  CHECK(kinds.size() == 5);
  CHECK(c.functions[3].id == "eigenvector_3");

  const Corpus s = generate_corpus(sg, {.seed = 1, .count = 10, .sup_norm_one = true});
  for (const auto& fn : s.functions) {
    CHECK(std::abs(mean(sg.space(), fn.values)) <= 1e-12);
    CHECK(fn.values.cwiseAbs().maxCoeff() <= 2.0);
  }
  const Corpus r = generate_corpus(sg, {.seed = 1, .count = 10, .mean_zero = false, .sup_norm_one = true});
  for (const auto& fn : r.functions) CHECK(fn.values.cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  // Ball indicators are mean-removed.
  const Corpus b = generate_corpus(sg, {.seed = 4, .count = 5, .kinds = {CorpusKind::ball_indicator}});
  for (const auto& fn : b.functions) CHECK(std::abs(fn.values.sum()) <= 1e-12 * 64);

  CHECK_THROWS_AS(generate_corpus(sg, {.count = 0}), std::domain_error);
}

TEST_CASE("eigenvector kind needs the dense path") {
  SemigroupOptions o;
  o.dense_cap = 8;
  const Semigroup sg(shared("cycle:16"), o);
  CHECK_THROWS_AS(generate_corpus(sg, {.count = 1, .kinds = {CorpusKind::eigenvector}}), std::domain_error);
  CHECK(generate_corpus(sg, {.count = 3, .kinds = {CorpusKind::smoothed_noise}}).size() == 3);
}

TEST_CASE("eigenvector kind is a Laplacian eigenvector") {
  const Semigroup sg(shared("torus:6x6"));
  for (const auto& fn : generate_corpus(sg, {.seed = 8, .count = 5, .kinds = {CorpusKind::eigenvector}}).functions) {
    const VertexFunction d = apply_laplacian(sg.space(), fn.values);
    const double lam = d.dot(fn.values) / fn.values.squaredNorm();
    CHECK(lam < -1e-9);
    CHECK((d - lam * fn.values).norm() <= 1e-9 * fn.values.norm());
  }
}

TEST_CASE("distance bump") {
  const Space c8 = build_builtin("cycle:8");
  VertexFunction want(8);
  want << 2, 1, 0, 0, 0, 0, 0, 1;
  CHECK(distance_bump(c8, 0, 2) == want);
  CHECK(ball_indicator(c8, 0, 1).sum() == 3.0);
}

TEST_CASE("csv") {
  const Semigroup sg(shared("cycle:3"));
  const Corpus c = generate_corpus(sg, {.seed = 1, .count = 1, .kinds = {CorpusKind::rademacher}, .mean_zero = false});
  const std::string csv = c.to_csv(sg.space());
  CHECK(csv.rfind("function_id,vertex_id,value\nrademacher_0,0,", 0) == 0);
}
