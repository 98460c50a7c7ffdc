#pragma once

#include "gnlab/heat.hpp"
#include "gnlab/space.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gnlab {

/// SplitMix64. Stream i of a corpus with seed s starts from state
/// mix(s ^ mix(i + 1)), where mix is the SplitMix64 output finalizer; every draw
/// adds 0x9E3779B97F4A7C15 to the state and returns mix(state).
/// uniform() = (next() >> 11)·2⁻⁵³; normal() is Box–Muller on
/// (1 - uniform(), uniform()) keeping only the cosine branch.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index);
  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t next();
  double uniform();
  double normal();
  /// Uniform integer in [0, n) by modulo reduction.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

enum class CorpusKind { smoothed_noise, ball_indicator, distance_bump, eigenvector, rademacher };

const char* to_string(CorpusKind kind);
CorpusKind parse_corpus_kind(std::string_view name);
/// Comma-separated kind list, e.g. "smoothed_noise,rademacher".
std::vector<CorpusKind> parse_corpus_kinds(std::string_view csv);

struct CorpusOptions {
  std::uint64_t seed = 7;
  int count = 20;
  std::vector<CorpusKind> kinds{CorpusKind::smoothed_noise, CorpusKind::ball_indicator,
                                CorpusKind::distance_bump, CorpusKind::eigenvector,
                                CorpusKind::rademacher};
  bool mean_zero = true;
  bool sup_norm_one = false;
  double smoothing_time = 1.0;
  /// Eigenvector kind draws i uniformly from [1, min(n-1, eigen_band)].
  int eigen_band = 32;
};

struct CorpusFunction {
  std::string id;
  CorpusKind kind = CorpusKind::rademacher;
  VertexFunction values;
};

struct Corpus {
  CorpusOptions options;
  std::vector<CorpusFunction> functions;

  std::size_t size() const { return functions.size(); }
  /// CSV rows "function_id,vertex_id,value".
  std::string to_csv(const Space& space) const;
};

/// Function i has kind kinds[i % kinds.size()] and draws from stream i, so any
/// single function can be regenerated on its own. Constant draws are discarded
/// and redrawn from the same stream.
Corpus generate_corpus(const Semigroup& sg, const CorpusOptions& options);

/// max(0, r - d(x, ·)).
VertexFunction distance_bump(const Space& space, Index center, int radius);
VertexFunction ball_indicator(const Space& space, Index center, int radius);

}  // namespace gnlab
