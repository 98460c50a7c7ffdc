#pragma once

#include "gnlab/corpus.hpp"
#include "gnlab/heat.hpp"
#include "gnlab/kprime.hpp"
#include "gnlab/space.hpp"

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gnlab {

using ParamValue = std::variant<double, std::string, bool>;
using Params = std::vector<std::pair<std::string, ParamValue>>;
/// Sample coordinates such as {"t", 2.0} or {"x", 17}, in recording order.
using Coordinates = std::vector<std::pair<std::string, double>>;

struct Sample {
  std::string f_id;
  Coordinates at;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs/rhs; +∞ when rhs vanishes and lhs does not
};

/// Outcome of one inequality checker: the empirical best constant (largest
/// recorded lhs/rhs), the sample attaining it and the per-sample table.
struct CheckReport {
  /// |lhs| and |rhs| at or below this count as zero.
  static constexpr double kZero = 1e-12;

  std::string name;
  Params params;
  std::string range_note;
  double constant = 0.0;
  std::optional<Sample> witness;
  std::vector<Sample> samples;
  int n_skipped = 0;
  /// An infinite ratio was recorded or the checker detected unbounded growth.
  bool diverges = false;
  /// Derived scalars beyond the constant (oracle values, fitted slopes, flags).
  Params findings;

  /// Records lhs/rhs. 0/0 counts as skipped; lhs > 0 = rhs gives an infinite
  /// ratio and sets `diverges`.
  void add(const std::string& f_id, Coordinates at, double lhs, double rhs);
  /// Counts samples dropped without recording (0/0 inside a reduction).
  void skip(int count = 1) { n_skipped += count; }

  /// Schema: name, version, config, params, constant, diverges, witness,
  /// n_samples, n_skipped, range_note, findings, samples[]. Infinite values are
  /// written as null. `config_json` must be a JSON object (the run
  /// configuration) and is embedded verbatim.
  std::string to_json(const std::string& config_json = "{}") const;
  /// CSV "f_id,<coordinates...>,lhs,rhs,ratio"; coordinate columns come from the
  /// first sample.
  std::string samples_csv() const;
};

/// Exponents of the multiplicative inequalities: θ = p/l, α = p/(p-l) =
/// θ/(θ-1) and, given ν, the Sobolev exponent 1/p* = 1/p - 1/ν.
struct ExponentSet {
  double p = 1.0;
  double l = 2.0;
  double theta = 0.5;
  double alpha = -1.0;
  std::optional<double> nu;
  std::optional<double> p_star;
};

/// Throws std::domain_error unless 1 <= p < l < ∞ and (if given) ν > p.
ExponentSet exponents(double p, double l, std::optional<double> nu = std::nullopt);

/// 32 log-spaced points in [min μ, μ(M)].
std::vector<double> default_s_grid(const Space& space, int points = 32);

/// Doubling ratio max_x μ(B(x,2r))/μ(B(x,r)), one sample per r in [1, r_max].
/// Finding growth_over_octave = max C(2r)/C(r) over r with 2r <= r_max and
/// 4r <= diameter, C the per-radius ratio; above 2 the ratio is growing
/// exponentially before finite size saturates it, and divergence is flagged.
CheckReport check_doubling(const Space& space, int r_max);

struct PoincareEigen {
  double constant = 0.0;  ///< max over balls of 1/(r√λ₁(B))
  Index center = 0;
  int radius = 1;
  int balls = 0;
  int capped = 0;  ///< balls above the size cap, not solved
};

/// Exact (P_2) constant with l2 gradients restricted to the ball: for each ball
/// the best constant is 1/(r√λ₁) with λ₁ the first nonzero eigenvalue of
/// Σ_{xy ⊂ B} (μ(x)+μ(y)) w_xy (v_x - v_y)² against Σ_B μ v².
PoincareEigen poincare_eigen_constant(const Space& space, int r_max, Index ball_cap = 512);

struct PoincareOptions {
  double q = 2.0;
  int r_max = 4;
  GradientMode mode = GradientMode::l2;
  /// Adds the exact eigenvalue constant (q = 2 with l2 gradients only).
  bool eigen = true;
  Index ball_cap = 512;
};

/// (avg_B |f - f_B|^q)^{1/q} against r (avg_B |∇_B f|^q)^{1/q} with the gradient
/// restricted to edges inside B, over all centers and r <= r_max. One sample per
/// (f, r): the worst center.
CheckReport check_poincare(const Space& space, const Corpus& corpus, const PoincareOptions& options = {});

/// ‖f - P_t f‖_q against √t ‖|∇f|‖_q over the semigroup's t-grid; q may be ∞.
CheckReport check_pseudo_poincare_heat(const Semigroup& sg, const Corpus& corpus, double q,
                                       GradientMode mode = GradientMode::l2);

/// ‖f - f_{B(·,r)}‖_q against r ‖|∇f|‖_q for r in [1, r_max].
CheckReport check_pseudo_poincare_avg(const Space& space, const Corpus& corpus, double q, int r_max,
                                      GradientMode mode = GradientMode::l2);

/// |f - P_t f|^{q**1/q}(s) against √t |∇f|^{q**1/q}(s); one sample per (f, t),
/// the worst s.
CheckReport check_rearranged_pseudo_poincare(const Semigroup& sg, const Corpus& corpus, double q,
                                             const std::vector<double>& s_grid,
                                             GradientMode mode = GradientMode::l2);

/// |f|^{q**1/q}(s) against (|∇f|^{q**1/q}(s))^{|α|/(1+|α|)} N^{1/(1+|α|)} with N the
/// Besov seminorm at α. Throws std::domain_error for α >= 0.
CheckReport check_symmetrization_besov(const Semigroup& sg, const Corpus& corpus, double q, double alpha,
                                       const std::vector<double>& s_grid, GradientMode mode = GradientMode::l2);

/// As above with N the Morrey norm over all radii up to the diameter.
CheckReport check_symmetrization_morrey(const Space& space, const Corpus& corpus, double q, double alpha,
                                        const std::vector<double>& s_grid, GradientMode mode = GradientMode::l2);

/// As above with N replaced by ((sup_t t^{-α/2}|P_t f|)^{q**1/q}(s)).
CheckReport check_symmetrization_triebel(const Semigroup& sg, const Corpus& corpus, double q, double alpha,
                                         const std::vector<double>& s_grid,
                                         GradientMode mode = GradientMode::l2);

enum class EndpointNorm { besov, morrey };
enum class GnVariant {
  global,  ///< A = ‖|∇f|‖_p
  local,   ///< A = ‖f‖_p + ‖|∇f|‖_p
};

const char* to_string(EndpointNorm n);
const char* to_string(GnVariant v);

/// ‖f‖_l against A^θ N^{1-θ} with θ = p/l and N the endpoint norm at α = p/(p-l).
CheckReport check_gn(const Semigroup& sg, const Corpus& corpus, double p, double l,
                     EndpointNorm norm = EndpointNorm::besov, GnVariant variant = GnVariant::global,
                     GradientMode mode = GradientMode::l2);

/// sup_λ λ μ(|f| > λ)^{1/l} against ‖|∇f|‖_q^{q/l} N^{1-q/l}, N at α = q/(q-l).
CheckReport check_gn_weak(const Semigroup& sg, const Corpus& corpus, double q, double l,
                          EndpointNorm norm = EndpointNorm::besov, GradientMode mode = GradientMode::l2);

/// sup_λ λ μ(|f| > λ)^{1/l}, attained at a level of |f|.
double weak_lebesgue_norm(const Space& space, const VertexFunction& f, double l);

/// ‖f‖_{q*} against ‖|∇f|‖_q with 1/q* = 1/q - 1/ν. Findings: the kernel bound
/// max t^{ν/(2q)}‖P_t‖_{q→∞} and the log-log slope of ‖P_t‖_{q→∞} over the
/// doubling grid in [t_lo, t_hi]. Throws std::domain_error for ν <= q or a
/// non-dense semigroup.
CheckReport check_sobolev_recovery(const Semigroup& sg, const Corpus& corpus, double q, double nu, double t_lo,
                                   double t_hi, GradientMode mode = GradientMode::l2);

/// f**(t) - f*(t) against t^{1/σ} |∇f|^{q**1/q}(t).
CheckReport check_oscillation(const Space& space, const Corpus& corpus, double q, double sigma,
                              const std::vector<double>& t_grid, GradientMode mode = GradientMode::l2);

/// Parameters of the Lorentz Gagliardo–Nirenberg inequality
/// ‖f‖_{L(r,m)} <= C ‖|∇f|‖_{L(p,m₀)}^{1-θ} ‖f‖_{L(l,m₁)}^θ.
struct LorentzExponents {
  double theta = 0.0;
  double p = 1.5;
  double l = 2.0;
  double m0 = 1.5;
  double m1 = 2.0;
  double sigma = 2.0;
  double q = 1.0;
  double p_star = 6.0;  ///< 1/p* = 1/p - 1/σ
  double r = 6.0;       ///< 1/r = (1-θ)/p* + θ/l
  double m = 1.5;       ///< 1/m = (1-θ)/m₀ + θ/m₁
};

/// Derives p*, r and m from the free parameters, then validates.
LorentzExponents lorentz_exponents(double theta, double p, double l, double m0, double m1, double sigma,
                                   double q);
/// Throws std::domain_error naming every violated relation: 0 <= θ <= 1,
/// q < p < σ, m₀ >= q, m₀, m₁ >= 1, l > 1, and the identities for p*, r and m
/// (relative tolerance 1e-12).
void validate_lorentz_exponents(const LorentzExponents& e);

/// ‖f‖_{L(r,m)} against ‖|∇f|‖_{L(p,m₀)}^{1-θ}‖f‖_{L(l,m₁)}^θ, with f** on the
/// left and f* for the gradient. At θ = 0 the finding embedding_constant is the
/// largest ‖f‖_{L(p*,p*)}/‖f‖_{L(p*,p)}.
CheckReport check_lorentz_gn(const Space& space, const Corpus& corpus, const LorentzExponents& e,
                             GradientMode mode = GradientMode::l2);

/// ∫|∇f|^{p+1} against N ∫|∇²f|²|∇f|^{p-2} with N the α = -1 endpoint norm, on
/// grid or torus spaces. Throws std::domain_error for p < 2.
CheckReport check_nonlinear_gn(const Semigroup& sg, const Corpus& corpus, double p,
                               EndpointNorm norm = EndpointNorm::besov);

/// The constant-free majorizations behind the nonlinear inequality, with
/// u = |∇f|^{p/2}, v = |∇f|^{(p-2)/2}|∇²f|, w = |f|:
///   step 0: ∫ uvw dμ          <= ∫₀^∞ (uvw)*        (an identity)
///   step 1: ∫₀^∞ (uvw)*       <= ∫₀^∞ u* v* w*
///   step 2: ∫₀^∞ u* v* w*     <= ∫₀^∞ X v*, X = (|∇f|^{q**})^{p/(2q)} (|f|^{q**})^{1/q}
///   step 3: ∫₀^∞ X v*         <= (∫₀^{μ(M)} X²)^{1/2} (∫ v² dμ)^{1/2}
/// Each is one sample (lhs, rhs); the finding chain_holds records every ratio
/// <= 1 + 1e-8.
CheckReport check_nonlinear_gn_chain(const Space& space, const Corpus& corpus, double p, double q = 1.0);

/// With p' the conjugate of p in (1, ∞]: samples ‖f - P_t f‖_{p'} against
/// √t ‖|∇f|‖_{p'} over the t-grid; findings gradient_constant = max √s
/// ‖ΔP_s f‖_{p'}/‖|∇f|‖_{p'} over a grid of 8 points per octave covering
/// [t_min/16, t_max], and chain_holds: constant <= 2·gradient_constant·(1 + 1e-6).
CheckReport check_G_implies_pseudo(const Semigroup& sg, const Corpus& corpus, double p,
                                   GradientMode mode = GradientMode::l2);

/// The K′ equivalence table as a report: samples solver/lower per (f, t).
CheckReport kprime_check(const Space& space, const Corpus& corpus, double q, const std::vector<double>& t_grid,
                         const KPrimeSolveOptions& options = {});

}  // namespace gnlab
