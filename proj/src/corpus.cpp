#include "gnlab/corpus.hpp"

#include "gnlab/funcnorms.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gnlab {

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SplitMix64 SplitMix64::stream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix(seed ^ mix(index + 1)));
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix(state_);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::below(std::uint64_t n) { return next() % n; }

const char* to_string(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::smoothed_noise: return "smoothed_noise";
    case CorpusKind::ball_indicator: return "ball_indicator";
    case CorpusKind::distance_bump: return "distance_bump";
    case CorpusKind::eigenvector: return "eigenvector";
    case CorpusKind::rademacher: return "rademacher";
  }
  return "?";
}

CorpusKind parse_corpus_kind(std::string_view name) {
  for (auto k : {CorpusKind::smoothed_noise, CorpusKind::ball_indicator, CorpusKind::distance_bump,
                 CorpusKind::eigenvector, CorpusKind::rademacher})
    if (name == to_string(k)) return k;
  throw InputError("unknown corpus kind '" + std::string(name) + "'");
}

std::vector<CorpusKind> parse_corpus_kinds(std::string_view csv) {
  std::vector<CorpusKind> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t next = csv.find(',', pos);
    const auto tok = csv.substr(pos, next == std::string_view::npos ? csv.size() - pos : next - pos);
    if (!tok.empty()) out.push_back(parse_corpus_kind(tok));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (out.empty()) throw InputError("empty corpus kind list");
  return out;
}

VertexFunction distance_bump(const Space& space, Index center, int radius) {
  VertexFunction f(space.size());
  for (Index y = 0; y < space.size(); ++y) f[y] = std::max(0, radius - space.distance(center, y));
  return f;
}

VertexFunction ball_indicator(const Space& space, Index center, int radius) {
  VertexFunction f = VertexFunction::Zero(space.size());
  for (auto y : space.ball(center, radius)) f[y] = 1.0;
  return f;
}

namespace {

VertexFunction draw(const Semigroup& sg, CorpusKind kind, SplitMix64& rng, const CorpusOptions& opt) {
  const Space& sp = sg.space();
  const Index n = sp.size();
  const auto half_diam = static_cast<std::uint64_t>(std::max(1, sp.diameter() / 2));
  switch (kind) {
    case CorpusKind::smoothed_noise: {
      VertexFunction f(n);
      for (Index x = 0; x < n; ++x) f[x] = rng.normal();
      return sg.apply(f, opt.smoothing_time);
    }
    case CorpusKind::ball_indicator: {
      const auto x = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      const int r = 1 + static_cast<int>(rng.below(half_diam));
      return ball_indicator(sp, x, r);
    }
    case CorpusKind::distance_bump: {
      const auto x = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      const int r = 1 + static_cast<int>(rng.below(half_diam));
      return distance_bump(sp, x, r);
    }
    case CorpusKind::eigenvector: {
      if (!sg.is_dense()) throw std::domain_error("corpus: eigenvector kind needs a dense semigroup");
      const auto band = static_cast<std::uint64_t>(std::min<Index>(n - 1, std::max(1, opt.eigen_band)));
      const auto i = static_cast<Index>(1 + rng.below(band));
      return sg.eigenvectors().col(i);
    }
    case CorpusKind::rademacher: {
      VertexFunction f(n);
      for (Index x = 0; x < n; ++x) f[x] = (rng.next() >> 63) ? 1.0 : -1.0;
      return f;
    }
  }
  throw std::logic_error("unreachable corpus kind");
}

}  // namespace

Corpus generate_corpus(const Semigroup& sg, const CorpusOptions& options) {
  if (options.count < 1) throw std::domain_error("corpus: count must be >= 1");
  if (options.kinds.empty()) throw std::domain_error("corpus: no kinds requested");
  const Space& sp = sg.space();
  Corpus corpus;
  corpus.options = options;
  for (int i = 0; i < options.count; ++i) {
    const CorpusKind kind = options.kinds[static_cast<std::size_t>(i) % options.kinds.size()];
    SplitMix64 rng = SplitMix64::stream(options.seed, static_cast<std::uint64_t>(i));
    VertexFunction f;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 100) throw std::runtime_error("corpus: could not draw a nonconstant function");
      f = draw(sg, kind, rng, options);
      if (options.mean_zero) f.array() -= mean(sp, f);
      const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
      if (f.maxCoeff() - f.minCoeff() <= 1e-12 * scale) continue;
      break;
    }
    if (options.sup_norm_one) {
      f /= f.cwiseAbs().maxCoeff();
      if (options.mean_zero) f.array() -= mean(sp, f);
    }
    corpus.functions.push_back({std::string(to_string(kind)) + "_" + std::to_string(i), kind, std::move(f)});
  }
  return corpus;
}

std::string Corpus::to_csv(const Space& space) const {
  std::ostringstream out;
  out.precision(17);
  out << "function_id,vertex_id,value\n";
  for (const auto& fn : functions)
    for (Index x = 0; x < space.size(); ++x) out << fn.id << ',' << space.ids()[x] << ',' << fn.values[x] << '\n';
  return out.str();
}

}  // namespace gnlab
