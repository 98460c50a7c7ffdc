// Acceptance run: one PASS/FAIL line per criterion with its pinned tolerances
// and time limit. Exit status is 0 exactly when the failing criteria equal the
// --expect-fail set, so an unexpected failure or an unexpected pass both fail.

#include "gnlab/cli.hpp"
#include "gnlab/corpus.hpp"
#include "gnlab/funcnorms.hpp"
#include "gnlab/heat.hpp"
#include "gnlab/ineq.hpp"
#include "gnlab/kprime.hpp"
#include "gnlab/rearrange.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace gnlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  std::function<Outcome()> run;
};

// Collects failed conditions; the outcome passes when none failed.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  template <class T>
  void note(const std::string& key, const T& value) {
    std::ostringstream s;
    s << std::setprecision(6) << key << '=' << value;
    notes_.push_back(s.str());
  }
  Outcome outcome() const {
    std::string detail;
    for (const auto& n : notes_) detail += (detail.empty() ? "" : " ") + n;
    for (const auto& f : failures_) detail += " | violated: " + f;
    return {failures_.empty(), detail};
  }

 private:
  std::vector<std::string> notes_, failures_;
};

std::shared_ptr<const Space> shared(Space s) { return std::make_shared<Space>(std::move(s)); }

Corpus corpus_of(const Semigroup& sg, int count, std::uint64_t seed = 7) {
  CorpusOptions o;
  o.seed = seed;
  o.count = count;
  return generate_corpus(sg, o);
}

// Connected random graph: a random recursive tree plus extra edges. Measures are
// dyadic so every partial sum is exact regardless of order.
Space random_graph(SplitMix64& rng, Index n) {
  std::vector<std::string> ids;
  VertexFunction mu(n);
  for (Index i = 0; i < n; ++i) {
    ids.push_back("v" + std::to_string(i));
    mu[i] = static_cast<double>(1 + rng.below(32)) / 8.0;
  }
  std::set<std::pair<Index, Index>> seen;
  std::vector<Edge> edges;
  auto add = [&](Index u, Index v) {
    if (u == v || !seen.insert({std::min(u, v), std::max(u, v)}).second) return;
    edges.push_back({u, v, 0.5 + 1.5 * rng.uniform()});
  };
  for (Index i = 1; i < n; ++i) add(static_cast<Index>(rng.below(static_cast<std::uint64_t>(i))), i);
  const auto extra = rng.below(static_cast<std::uint64_t>(n));
  for (std::uint64_t k = 0; k < extra; ++k)
    add(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))), static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  return Space(std::move(ids), std::move(mu), std::move(edges));
}

Outcome rearrangement_oracle() {
  Verdict v;
  int mismatches = 0;
  double worst_mass = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    SplitMix64 rng = SplitMix64::stream(2024, static_cast<std::uint64_t>(trial));
    const auto n = static_cast<Index>(2 + rng.below(49));
    const Space s = random_graph(rng, n);
    VertexFunction f(n);
    // Every third trial draws from a small integer set so levels tie.
    for (Index i = 0; i < n; ++i)
      f[i] = trial % 3 == 0 ? static_cast<double>(static_cast<int>(rng.below(7)) - 3) : rng.normal();

    std::vector<std::pair<double, double>> level;
    for (Index i = 0; i < n; ++i)
      if (f[i] != 0.0) level.emplace_back(std::abs(f[i]), s.measure()[i]);
    std::sort(level.begin(), level.end(), [](auto a, auto b) { return a.first > b.first; });
    std::vector<double> values, breaks{0.0};
    for (const auto& [val, m] : level) {
      if (!values.empty() && values.back() == val) {
        breaks.back() += m;
      } else {
        values.push_back(val);
        breaks.push_back(breaks.back() + m);
      }
    }
    const StepFunction sf = decreasing_rearrangement(s, f);
    if (sf.values != values || sf.breaks != breaks) ++mismatches;
    const double l1 = lp_norm(s, f, 1.0);
    worst_mass = std::max(worst_mass, std::abs(sf.integral_power(sf.support_end(), 1.0) - l1) / std::max(1.0, l1));
  }
  v.note("pairs", 500);
  v.note("mismatches", mismatches);
  v.note("max_mass_error", worst_mass);
  v.require(mismatches == 0, "f* equals the sort oracle exactly");
  v.require(worst_mass <= 1e-12, "|∫f* - ‖f‖₁| <= 1e-12");
  return v.outcome();
}

Outcome besov_constants() {
  Verdict v;
  const auto s = shared(build_builtin("torus:16x16"));
  const Semigroup sg(s);
  const Corpus c = corpus_of(sg, 30);
  double worst_a = -kInf, worst_b = -kInf;
  for (double alpha : {-1.0, -2.0}) {
    const double k = std::pow(2.0, alpha / 2.0);
    for (const auto& fn : c.functions) {
      const double semi = besov_norm(sg, fn.values, alpha).value;
      const double raw = besov_norm(sg, fn.values, alpha, BesovMode::raw).value;
      worst_a = std::max(worst_a, semi - ((1 + k) * raw + 1e-9));
      worst_b = std::max(worst_b, raw - (semi / (1 - k) + 1e-9));
    }
  }
  v.note("functions", c.size());
  v.note("max_excess_seminorm", worst_a);
  v.note("max_excess_raw", worst_b);
  v.require(worst_a <= 0.0, "seminorm <= (1+2^{α/2})·raw + 1e-9");
  v.require(worst_b <= 0.0, "raw <= seminorm/(1-2^{α/2}) + 1e-9");
  return v.outcome();
}

Outcome semigroup_sanity() {
  Verdict v;
  const auto s = shared(build_builtin("torus:16x16"));
  const Semigroup sg(s);
  const Eigen::VectorXd& mu = s->measure();
  double mass = 0.0, neg = 0.0, asym = 0.0, law = 0.0;
  const auto& grid = sg.t_grid();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Eigen::MatrixXd K = sg.kernel(grid[j]);
    mass = std::max(mass, (K * mu - Eigen::VectorXd::Ones(s->size())).cwiseAbs().maxCoeff());
    neg = std::max(neg, -K.minCoeff());
    asym = std::max(asym, (K - K.transpose()).cwiseAbs().maxCoeff());
    if (j + 1 < grid.size()) {
      // t_{j+1} = 2 t_j on the doubling grid.
      const Eigen::MatrixXd KK = K * mu.asDiagonal() * K;
      law = std::max(law, (KK - sg.kernel(grid[j + 1])).cwiseAbs().maxCoeff());
    }
  }
  v.note("times", grid.size());
  v.note("mass", mass);
  v.note("negativity", neg);
  v.note("asymmetry", asym);
  v.note("semigroup_law", law);
  v.require(mass <= 1e-8, "Σ_y p_t(x,y)μ(y) = 1 within 1e-8");
  v.require(neg <= 1e-8, "p_t >= -1e-8");
  v.require(asym <= 1e-8, "p_t(x,y) = p_t(y,x) within 1e-8");
  v.require(law <= 1e-8, "P_t P_t = P_2t within 1e-8");
  return v.outcome();
}

Outcome kprime_equivalence() {
  Verdict v;
  const auto s = shared(build_builtin("torus:16x16"));
  const Semigroup sg(s);
  const Corpus c = corpus_of(sg, 20);
  std::vector<double> times(sg.t_grid().begin(), sg.t_grid().begin() + 8);
  const EquivalenceReport base = equivalence_report(*s, c, 1.0, times);
  KPrimeSolveOptions fine;
  fine.lambda_points *= 2;
  const EquivalenceReport refined = equivalence_report(*s, c, 1.0, times, fine);
  int sandwich = 0;
  for (const auto& r : base.rows)
    if (!(r.lower <= r.solver * (1 + 1e-6) && r.solver <= r.upper * (1 + 1e-6))) ++sandwich;
  const double change = std::abs(refined.max_ratio - base.max_ratio) / base.max_ratio;

  std::ifstream in(std::string(GNLAB_TEST_DATA) + "/kprime_small_graphs.json");
  const auto cases = nlohmann::json::parse(in);
  double worst = 0.0;
  for (const auto& cs : cases) {
    const Index n = cs["n"].get<Index>();
    std::vector<std::string> ids;
    VertexFunction mu(n), f(n);
    for (Index i = 0; i < n; ++i) {
      ids.push_back(std::to_string(i));
      mu[i] = cs["measure"][static_cast<std::size_t>(i)].get<double>();
      f[i] = cs["f"][static_cast<std::size_t>(i)].get<double>();
    }
    std::vector<Edge> edges;
    for (const auto& e : cs["edges"]) edges.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()});
    const Space g(std::move(ids), std::move(mu), std::move(edges));
    const double exact = cs["value"].get<double>();
    const double got = kprime_convex_solve(g, f, cs["q"].get<double>(), cs["t"].get<double>()).value;
    worst = std::max(worst, std::abs(got - exact) / std::max(1.0, exact));
  }

  v.note("samples", base.rows.size());
  v.note("min_ratio", base.min_ratio);
  v.note("max_ratio", base.max_ratio);
  v.note("refined_max_ratio", refined.max_ratio);
  v.note("small_graph_cases", cases.size());
  v.note("small_graph_worst_error", worst);
  v.require(base.rows.size() == 160, "20 functions x 8 times");
  v.require(sandwich == 0, "lower <= solver <= upper (slack 1e-6)");
  v.require(base.min_ratio >= 1 - 1e-6, "solver/lower >= 1 - 1e-6");
  v.require(std::isfinite(base.max_ratio), "max ratio finite");
  v.require(change < 0.05, "max ratio moves < 5% under λ-grid x2");
  v.require(worst <= 1e-2, "small graphs within 1e-2 of the exact optimum");
  return v.outcome();
}

Outcome symmetrization() {
  Verdict v;
  double constants[2][2] = {};
  const char* spaces[] = {"torus:32x32", "torus:48x48"};
  for (int k = 0; k < 2; ++k) {
    const auto s = shared(build_builtin(spaces[k]));
    const Semigroup sg(s);
    const Corpus c = corpus_of(sg, 30);
    const auto grid = default_s_grid(*s, 32 << k);
    constants[k][0] = check_symmetrization_besov(sg, c, 1.0, -1.0, grid).constant;
    constants[k][1] = check_rearranged_pseudo_poincare(sg, c, 1.0, grid).constant;
  }
  const double growth = constants[1][0] / constants[0][0];
  v.note("constant_32", constants[0][0]);
  v.note("constant_48", constants[1][0]);
  v.note("growth", growth);
  v.note("step_constant_32", constants[0][1]);
  v.note("step_constant_48", constants[1][1]);
  v.require(std::isfinite(constants[0][0]) && std::isfinite(constants[1][0]), "constant finite");
  v.require(growth < 1.2, "constant grows < 20% under refinement");
  v.require(std::isfinite(constants[0][1]) && std::isfinite(constants[1][1]), "intermediate step constant finite");
  return v.outcome();
}

Outcome gn_wiring() {
  Verdict v;
  const ExponentSet e = exponents(1.0, 2.0);
  v.require(e.theta == 0.5 && e.alpha == -1.0, "exponents(1,2) = (1/2, -1) exactly");
  const auto s = shared(build_builtin("torus:32x32"));
  const Semigroup sg(s);
  const Corpus c = corpus_of(sg, 20);
  const CheckReport strong = check_gn(sg, c, 1.0, 2.0);
  const CheckReport weak = check_gn_weak(sg, c, 1.0, 2.0);
  bool dominated = strong.samples.size() == weak.samples.size();
  for (std::size_t i = 0; dominated && i < strong.samples.size(); ++i)
    dominated = strong.samples[i].lhs >= weak.samples[i].lhs * (1 - 1e-12);
  v.note("gn_constant", strong.constant);
  v.note("weak_constant", weak.constant);
  v.require(std::isfinite(strong.constant) && !strong.diverges, "GN constant finite");
  v.require(std::isfinite(weak.constant) && !weak.diverges, "weak-type constant finite");
  v.require(dominated, "strong >= weak per sample");
  return v.outcome();
}

Outcome sobolev_recovery() {
  Verdict v;
  const auto s = shared(build_builtin("torus:64x64"));
  const Semigroup sg(s);
  const Corpus c = corpus_of(sg, 20);
  const CheckReport r = check_sobolev_recovery(sg, c, 1.0, 2.0, 1.0, 256.0);
  double slope = 0.0;
  for (const auto& [k, x] : r.findings)
    if (k == "kernel_slope") slope = std::get<double>(x);
  v.note("kernel_slope", slope);
  v.note("constant", r.constant);
  v.note("samples", r.samples.size());
  v.require(std::abs(slope + 1.0) <= 0.15, "log-log kernel slope = -1 ± 0.15");
  v.require(!r.samples.empty() && std::isfinite(r.constant), "Sobolev constant with p* = 2 finite");
  return v.outcome();
}

Outcome negative_controls() {
  Verdict v;
  const Space tree = build_builtin("tree:10");
  const DoublingResult d = doubling_constant(tree, 6);
  const double at6 = d.per_radius[5];
  v.note("tree_ratio_r6", at6);
  v.require(at6 > 8.0, "tree:10 doubling ratio at r=6 > 8");
  std::vector<double> constants;
  for (int bridge : {8, 16, 32}) {
    const Space s = build_builtin("dumbbell:8," + std::to_string(bridge));
    constants.push_back(poincare_eigen_constant(s, s.diameter()).constant);
  }
  std::ostringstream list;
  list << constants[0] << ',' << constants[1] << ',' << constants[2];
  v.note("dumbbell_poincare", list.str());
  v.require(constants[0] < constants[1] && constants[1] < constants[2], "dumbbell Poincaré constants increase");
  return v.outcome();
}

Outcome lorentz_chain() {
  Verdict v;
  // Every perturbation of r away from its identity value must be rejected.
  int accepted = 0, total = 0;
  SplitMix64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const double theta = rng.uniform(), p = 1.1 + rng.uniform(), sigma = p + 0.1 + 3 * rng.uniform();
    const double l = 1.1 + 4 * rng.uniform(), m0 = p + rng.uniform(), m1 = 1 + 3 * rng.uniform();
    LorentzExponents e = lorentz_exponents(theta, p, l, m0, m1, sigma, 1.0);
    e.r *= 1 + (rng.uniform() < 0.5 ? -1 : 1) * (1e-9 + 0.5 * rng.uniform());
    ++total;
    try {
      validate_lorentz_exponents(e);
      ++accepted;
    } catch (const std::domain_error&) {
    }
  }
  v.note("perturbed_sets", total);
  v.note("accepted", accepted);
  v.require(accepted == 0, "validator rejects every violation of the r identity");

  const auto s = shared(build_builtin("torus:32x32"));
  const double sigma = growth_exponent(*s, 1, s->diameter() / 4).sigma;
  const LorentzExponents e = lorentz_exponents(0.0, 1.5, 2.0, 1.5, 2.0, sigma, 1.0);
  v.require(e.m == e.p && e.m0 == e.p && std::abs(e.r - e.p_star) <= 1e-12 * e.p_star,
            "θ = 0 gives m₀ = m = p and r = p*");
  const Semigroup sg(s);
  const CheckReport r = check_lorentz_gn(*s, corpus_of(sg, 20), e);
  v.note("fitted_sigma", sigma);
  v.note("constant", r.constant);
  v.require(std::isfinite(r.constant) && !r.samples.empty(), "Lorentz constant finite");
  return v.outcome();
}

Outcome nonlinear_gn() {
  Verdict v;
  const auto s = shared(build_builtin("torus:32x32"));
  const Semigroup sg(s);
  const Corpus c = corpus_of(sg, 20);
  const CheckReport r = check_nonlinear_gn(sg, c, 2.0);
  const CheckReport chain = check_nonlinear_gn_chain(*s, c, 2.0);
  bool all_finite = r.samples.size() == c.size();
  for (const auto& x : r.samples) all_finite = all_finite && std::isfinite(x.ratio);
  double worst_step = 0.0;
  for (const auto& x : chain.samples) worst_step = std::max(worst_step, x.ratio);
  v.note("constant", r.constant);
  v.note("chain_samples", chain.samples.size());
  v.note("worst_step_ratio", worst_step);
  v.require(all_finite, "ratio finite for every sample");
  v.require(chain.samples.size() == 4 * c.size(), "four majorizations per function");
  v.require(worst_step <= 1 + 1e-8, "each majorization holds within 1e-8");
  return v.outcome();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_end_to_end() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / ("gnlab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const std::string out = (root / std::to_string(k)).string();
    const char* argv[] = {"gnlab", "check", "--space", "torus:32x32", "--suite", "core", "--seed", "7", "--out",
                          out.c_str()};
    std::ostringstream sink;
    codes[k] = run_cli(10, argv, sink, std::cerr);
  }
  int files = 0, differing = 0, invalid = 0;
  if (codes[0] == 0 && codes[1] == 0) {
    for (const auto& e : fs::directory_iterator(root / "0")) {
      const auto name = e.path().filename().string();
      if (e.path().extension() != ".json" || name == "metadata.json") continue;
      const std::string a = slurp(e.path());
      if (a != slurp(root / "1" / name)) ++differing;
      if (name == "summary.json") continue;
      ++files;
      const auto j = nlohmann::json::parse(a, nullptr, false);
      bool ok = !j.is_discarded();
      for (const char* key : {"name", "version", "config", "params", "constant", "diverges", "witness", "n_samples",
                              "n_skipped", "range_note", "findings", "samples"})
        ok = ok && j.contains(key);
      ok = ok && j["n_samples"] == j["samples"].size() && j["version"] == kVersion;
      if (!ok) ++invalid;
    }
  }
  fs::remove_all(root);
  v.note("reports", files);
  v.note("differing", differing);
  v.require(codes[0] == 0 && codes[1] == 0, "exit 0");
  v.require(files >= 6, "at least 6 reports");
  v.require(invalid == 0, "every report has the schema fields");
  v.require(differing == 0, "rerun is byte-identical");
  return v.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--expect-fail", expect_fail, "Criteria documented as unattainable");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "rearrangement oracle", 10, rearrangement_oracle},
      {2, "Besov seminorm/raw constants", 60, besov_constants},
      {3, "semigroup sanity", 30, semigroup_sanity},
      {4, "K-functional sandwich and equivalence", 300, kprime_equivalence},
      {5, "symmetrization under refinement", 600, symmetrization},
      {6, "GN exponents and constants", 300, gn_wiring},
      {7, "Sobolev recovery", 300, sobolev_recovery},
      {8, "negative controls", 120, negative_controls},
      {9, "Lorentz chain", 300, lorentz_chain},
      {10, "nonlinear GN and its chain", 300, nonlinear_gn},
      {11, "CLI end-to-end", 600, cli_end_to_end},
  };
  std::set<int> failed;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += " | violated: time limit";
    }
    if (!o.pass) failed.insert(c.id);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << " (" << std::fixed
              << std::setprecision(1) << secs << "s / " << c.limit_seconds << "s): " << std::defaultfloat
              << o.detail << std::endl;
  }
  std::set<int> expected;
  for (int id : expect_fail)
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  if (!expect_fail.empty())
    std::cout << "expected failures: " << expected.size() << ", actual failures: " << failed.size() << '\n';
  return failed == expected ? 0 : 1;
}
