#include "gnlab/cli.hpp"

#include "gnlab/funcnorms.hpp"
#include "gnlab/rearrange.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace gnlab {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key) && !j[key].is_null()) v = j[key].get<T>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::domain_error(message);
}

SemigroupOptions semigroup_options(const RunConfig& c) {
  SemigroupOptions o;
  o.dense_cap = c.dense_cap;
  if (c.t_min) o.t_min = *c.t_min;
  o.t_max = c.t_max;
  o.t_points = c.t_points;
  return o;
}

Space build_space(const RunConfig& c) {
  return c.file.empty() ? build_builtin(c.space) : build_from_file(c.file);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// The options shared by every subcommand.
void add_space_options(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--space,--builtin", c.space, "Builtin space descriptor, e.g. torus:32x32");
  cmd.add_option("--file", c.file, "Graph text file");
  cmd.add_option("--rmax", c.r_max, "Largest radius");
  cmd.add_option("--dense-cap", c.dense_cap, "Largest vertex count for the dense eigensolver");
}

void add_run_options(CLI::App& cmd, RunConfig& c) {
  add_space_options(cmd, c);
  cmd.add_option("--suite", c.suite, "Checker suite");
  cmd.add_option("--seed", c.seed, "Corpus seed");
  cmd.add_option("--q", c.q);
  cmd.add_option("--p", c.p);
  cmd.add_option("--l", c.l);
  cmd.add_option("--alpha", c.alpha);
  cmd.add_option("--nu", c.nu);
  cmd.add_option("--sigma", c.sigma);
  cmd.add_option("--tmin", c.t_min, "Smallest semigroup time");
  cmd.add_option("--tmax", c.t_max, "Largest semigroup time");
  cmd.add_option("--tpoints", c.t_points, "Number of semigroup times");
  cmd.add_option("--spoints", c.s_points, "Number of rearrangement abscissae");
  cmd.add_option("--corpus-size", c.corpus_size, "Number of test functions");
  cmd.add_option("--kinds", c.kinds, "Comma-separated corpus kinds");
  cmd.add_option("--format", c.format, "json, csv or both");
}

int cmd_space(const RunConfig& c, const std::string& out_dir, std::ostream& out) {
  if (c.space.empty() == c.file.empty()) throw std::domain_error("give exactly one of --space and --file");
  require(c.r_max >= 1, "--rmax must be >= 1");
  const Space space = build_space(c);
  const DoublingResult d = doubling_constant(space, c.r_max);
  json j;
  j["version"] = kVersion;
  j["space"] = c.file.empty() ? c.space : c.file;
  j["n"] = space.size();
  j["edges"] = space.edges().size();
  j["diameter"] = space.diameter();
  j["total_measure"] = space.total_measure();
  j["r_max"] = c.r_max;
  j["doubling"] = {{"constant", d.constant}, {"vertex", space.ids()[static_cast<std::size_t>(d.vertex)]},
                   {"radius", d.radius}, {"per_radius", d.per_radius}};
  if (space.diameter() >= 2) {
    const int r_hi = std::max(2, space.diameter() / 4);
    const GrowthFit g = growth_exponent(space, 1, r_hi);
    j["growth"] = {{"r_lo", 1}, {"r_hi", r_hi}, {"sigma", g.sigma}, {"c", g.c}, {"residual", g.residual}};
  } else {
    j["growth"] = nullptr;
  }
  const std::string text = j.dump(1) + "\n";
  out << text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "space.json", text);
  }
  return 0;
}

int cmd_check(const RunConfig& c, const std::string& out_dir, int jobs, std::ostream& out) {
  c.validate();
  require(jobs >= 1, "--jobs must be >= 1");
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const RunContext context(c);
  const std::vector<SuiteJob> suite = suite_jobs(context);
  const std::vector<CheckReport> reports = run_jobs(suite, jobs);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  const std::string config_json = c.to_json();
  json summary;
  summary["version"] = kVersion;
  summary["config"] = json::parse(config_json);
  summary["fitted_sigma"] = context.fitted_sigma;
  json rows = json::array();
  for (const CheckReport& r : reports) {
    if (c.format != "csv") write_file(fs::path(out_dir) / (r.name + ".json"), r.to_json(config_json));
    if (c.format != "json") write_file(fs::path(out_dir) / (r.name + ".csv"), r.samples_csv());
    rows.push_back({{"name", r.name},
                    {"constant", std::isfinite(r.constant) ? json(r.constant) : json(nullptr)},
                    {"diverges", r.diverges},
                    {"n_samples", r.samples.size()},
                    {"n_skipped", r.n_skipped}});
  }
  summary["reports"] = rows;
  write_file(fs::path(out_dir) / "summary.json", summary.dump(1) + "\n");
  const json meta = {{"started", started}, {"finished", utc_now()}, {"seconds", seconds}, {"jobs", jobs}};
  write_file(fs::path(out_dir) / "metadata.json", meta.dump(1) + "\n");

  for (const CheckReport& r : reports)
    out << std::left << std::setw(32) << r.name << " constant " << r.constant << (r.diverges ? "  diverges" : "")
        << '\n';
  out << reports.size() << " reports in " << out_dir << '\n';
  return 0;
}

int cmd_plotdata(const std::string& in_dir, const std::string& out_dir, std::ostream& out) {
  if (in_dir.empty() || !fs::is_directory(in_dir)) throw std::domain_error("report directory not found: " + in_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    const fs::path& p = entry.path();
    const auto stem = p.stem().string();
    if (p.extension() == ".json" && stem != "summary" && stem != "metadata" && stem != "space") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::domain_error("no reports in " + in_dir);

  const fs::path dest = out_dir.empty() ? fs::path(in_dir) / "plotdata" : fs::path(out_dir);
  fs::create_directories(dest);
  std::string config_text;
  int written = 0;
  for (const fs::path& p : files) {
    const json j = json::parse(read_file(p));
    if (!j.contains("samples") || !j.contains("config")) throw std::domain_error("not a report: " + p.string());
    if (config_text.empty()) config_text = j["config"].dump();
    // Ratio curves for samples indexed by t, in recording order.
    std::ostringstream csv;
    csv.precision(17);
    csv << "f_id,t,ratio\n";
    bool has_t = false;
    for (const auto& s : j["samples"]) {
      if (!s["at"].contains("t")) continue;
      has_t = true;
      csv << s["f_id"].get<std::string>() << ',' << s["at"]["t"].get<double>() << ',';
      if (s["ratio"].is_null())
        csv << "inf";
      else
        csv << s["ratio"].get<double>();
      csv << '\n';
    }
    if (has_t) {
      write_file(dest / (j["name"].get<std::string>() + "_ratio_vs_t.csv"), csv.str());
      ++written;
    }
  }

  const RunConfig c = RunConfig::from_json(config_text);
  const RunContext context(c);
  const Space& space = *context.space;
  std::ostringstream rear;
  rear.precision(17);
  rear << "f_id,t_start,t_end,f_star,f_double_star_end\n";
  for (const auto& fn : context.corpus.functions) {
    const StepFunction sf = decreasing_rearrangement(space, fn.values);
    for (std::size_t i = 0; i < sf.values.size(); ++i)
      rear << fn.id << ',' << sf.breaks[i] << ',' << sf.breaks[i + 1] << ',' << sf.values[i] << ','
           << double_star(sf, sf.breaks[i + 1]) << '\n';
  }
  write_file(dest / "rearrangement.csv", rear.str());
  ++written;

  if (context.semigroup.is_dense()) {
    std::ostringstream kern;
    kern.precision(17);
    kern << "t,max_kernel\n";
    for (double t : context.semigroup.t_grid()) kern << t << ',' << context.semigroup.kernel_diagonal(t).maxCoeff() << '\n';
    write_file(dest / "kernel_decay.csv", kern.str());
    ++written;
  }
  out << written << " series in " << dest.string() << '\n';
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  require(space.empty() != file.empty(), "give exactly one of --space and --file");
  const auto& names = suite_names();
  require(std::find(names.begin(), names.end(), suite) != names.end(), "unknown suite: " + suite);
  for (const auto& [name, v] : {std::pair{"q", q}, std::pair{"p", p}})
    require(!v || *v >= 1.0, std::string("--") + name + " must be >= 1");
  require(!l || *l > 1.0, "--l must be > 1");
  require(!alpha || *alpha < 0.0, "--alpha must be < 0");
  require(!nu || *nu > 0.0, "--nu must be > 0");
  require(!sigma || *sigma > 0.0, "--sigma must be > 0");
  require(!t_min || *t_min > 0.0, "--tmin must be > 0");
  require(!t_max || *t_max >= t_min.value_or(1.0 / 16.0), "--tmax must be >= --tmin");
  require(!t_points || *t_points >= 1, "--tpoints must be >= 1");
  require(s_points >= 1, "--spoints must be >= 1");
  require(r_max >= 1, "--rmax must be >= 1");
  require(dense_cap >= 1, "--dense-cap must be >= 1");
  require(corpus_size >= 1, "--corpus-size must be >= 1");
  require(format == "json" || format == "csv" || format == "both", "--format must be json, csv or both");
  parse_corpus_kinds(kinds);
}

std::string RunConfig::to_json() const {
  json j;
  j["space"] = space;
  j["file"] = file;
  j["suite"] = suite;
  j["seed"] = seed;
  j["q"] = optional_json(q);
  j["p"] = optional_json(p);
  j["l"] = optional_json(l);
  j["alpha"] = optional_json(alpha);
  j["nu"] = optional_json(nu);
  j["sigma"] = optional_json(sigma);
  j["t_min"] = optional_json(t_min);
  j["t_max"] = optional_json(t_max);
  j["t_points"] = optional_json(t_points);
  j["s_points"] = s_points;
  j["r_max"] = r_max;
  j["dense_cap"] = dense_cap;
  j["corpus_size"] = corpus_size;
  j["kinds"] = kinds;
  j["format"] = format;
  return j.dump();
}

RunConfig RunConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunConfig c;
  c.space = j.value("space", "");
  c.file = j.value("file", "");
  c.suite = j.value("suite", c.suite);
  c.seed = j.value("seed", c.seed);
  read_optional(j, "q", c.q);
  read_optional(j, "p", c.p);
  read_optional(j, "l", c.l);
  read_optional(j, "alpha", c.alpha);
  read_optional(j, "nu", c.nu);
  read_optional(j, "sigma", c.sigma);
  read_optional(j, "t_min", c.t_min);
  read_optional(j, "t_max", c.t_max);
  read_optional(j, "t_points", c.t_points);
  c.s_points = j.value("s_points", c.s_points);
  c.r_max = j.value("r_max", c.r_max);
  c.dense_cap = j.value("dense_cap", c.dense_cap);
  c.corpus_size = j.value("corpus_size", c.corpus_size);
  c.kinds = j.value("kinds", c.kinds);
  c.format = j.value("format", c.format);
  return c;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"hypotheses", "symmetrization", "gn",    "sobolev",
                                              "lorentz",    "nonlinear",      "kfunc", "core"};
  return names;
}

RunContext::RunContext(const RunConfig& c)
    : config(c),
      space(std::make_shared<Space>(build_space(c))),
      semigroup(space, semigroup_options(c)) {
  CorpusOptions o;
  o.seed = c.seed;
  o.count = c.corpus_size;
  o.kinds = parse_corpus_kinds(c.kinds);
  corpus = generate_corpus(semigroup, o);
  if (space->diameter() >= 2) fitted_sigma = growth_exponent(*space, 1, std::max(2, space->diameter() / 4)).sigma;
}

std::vector<SuiteJob> suite_jobs(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const Space& space = *ctx.space;
  const Semigroup& sg = ctx.semigroup;
  const Corpus& corpus = ctx.corpus;
  const std::vector<double> s_grid = default_s_grid(space, c.s_points);
  std::vector<SuiteJob> jobs;
  const std::string& suite = c.suite;
  auto in = [&](const char* name) { return suite == name || (suite == "core" && (std::string(name) == "hypotheses" || std::string(name) == "symmetrization" || std::string(name) == "gn")); };

  if (in("hypotheses")) {
    const double q = c.q.value_or(2.0);
    const int r_max = c.r_max;
    jobs.push_back({"doubling", [&space, r_max] { return check_doubling(space, r_max); }});
    jobs.push_back({"poincare", [&space, &corpus, q, r_max] {
                      PoincareOptions o;
                      o.q = q;
                      o.r_max = r_max;
                      return check_poincare(space, corpus, o);
                    }});
    jobs.push_back({"pseudo_poincare_heat", [&sg, &corpus, q] { return check_pseudo_poincare_heat(sg, corpus, q); }});
    jobs.push_back({"pseudo_poincare_heat_inf", [&sg, &corpus] { return check_pseudo_poincare_heat(sg, corpus, kInf); }});
    jobs.push_back({"pseudo_poincare_avg",
                    [&space, &corpus, q, r_max] { return check_pseudo_poincare_avg(space, corpus, q, r_max); }});
  }
  if (in("symmetrization")) {
    const double q = c.q.value_or(1.0), alpha = c.alpha.value_or(-1.0);
    jobs.push_back({"symmetrization_besov",
                    [&sg, &corpus, q, alpha, s_grid] { return check_symmetrization_besov(sg, corpus, q, alpha, s_grid); }});
    jobs.push_back({"rearranged_pseudo_poincare",
                    [&sg, &corpus, q, s_grid] { return check_rearranged_pseudo_poincare(sg, corpus, q, s_grid); }});
    jobs.push_back({"symmetrization_morrey", [&space, &corpus, q, alpha, s_grid] {
                      return check_symmetrization_morrey(space, corpus, q, alpha, s_grid);
                    }});
    jobs.push_back({"symmetrization_triebel", [&sg, &corpus, q, alpha, s_grid] {
                      return check_symmetrization_triebel(sg, corpus, q, alpha, s_grid);
                    }});
  }
  if (in("gn")) {
    const double p = c.p.value_or(c.q.value_or(1.0)), l = c.l.value_or(2.0);
    exponents(p, l);
    jobs.push_back({"gn_besov", [&sg, &corpus, p, l] { return check_gn(sg, corpus, p, l); }});
    jobs.push_back({"gn_weak_besov", [&sg, &corpus, p, l] { return check_gn_weak(sg, corpus, p, l); }});
    jobs.push_back({"gn_morrey", [&sg, &corpus, p, l] { return check_gn(sg, corpus, p, l, EndpointNorm::morrey); }});
    jobs.push_back({"gn_besov_local",
                    [&sg, &corpus, p, l] { return check_gn(sg, corpus, p, l, EndpointNorm::besov, GnVariant::local); }});
  }
  if (suite == "sobolev") {
    const double q = c.q.value_or(1.0), nu = c.nu.value_or(2.0), p = c.p.value_or(2.0);
    require(nu > q, "sobolev suite needs --nu > --q");
    require(p > 1.0, "sobolev suite needs --p > 1");
    require(sg.is_dense(), "sobolev suite needs the dense kernel: raise --dense-cap");
    const double t_hi = sg.t_grid().back(), t_lo = std::min(1.0, t_hi);
    jobs.push_back({"sobolev_recovery", [&sg, &corpus, q, nu, t_lo, t_hi] {
                      return check_sobolev_recovery(sg, corpus, q, nu, t_lo, t_hi);
                    }});
    jobs.push_back({"G_implies_pseudo", [&sg, &corpus, p] { return check_G_implies_pseudo(sg, corpus, p); }});
  }
  if (suite == "lorentz") {
    const double q = c.q.value_or(1.0), sigma = c.sigma.value_or(ctx.fitted_sigma);
    const double p = c.p.value_or(1.5), l = c.l.value_or(2.0);
    const LorentzExponents e = lorentz_exponents(0.0, p, l, p, l, sigma, q);
    jobs.push_back({"oscillation", [&space, &corpus, q, sigma, s_grid] {
                      return check_oscillation(space, corpus, q, sigma, s_grid);
                    }});
    jobs.push_back({"lorentz_gn", [&space, &corpus, e] { return check_lorentz_gn(space, corpus, e); }});
  }
  if (suite == "nonlinear") {
    const double p = c.p.value_or(2.0), q = c.q.value_or(1.0);
    require(space.grid().has_value(), "nonlinear suite needs a grid or torus space");
    require(p >= 2.0, "nonlinear suite needs --p >= 2");
    jobs.push_back({"nonlinear_gn_besov", [&sg, &corpus, p] { return check_nonlinear_gn(sg, corpus, p); }});
    jobs.push_back({"nonlinear_gn_morrey",
                    [&sg, &corpus, p] { return check_nonlinear_gn(sg, corpus, p, EndpointNorm::morrey); }});
    jobs.push_back({"nonlinear_gn_chain",
                    [&space, &corpus, p, q] { return check_nonlinear_gn_chain(space, corpus, p, q); }});
  }
  if (suite == "kfunc") {
    const double q = c.q.value_or(1.0);
    require(q == 1.0 || q == 2.0, "kfunc suite needs --q 1 or 2");
    const std::vector<double> times = sg.t_grid();
    jobs.push_back({"kprime_equivalence", [&space, &corpus, q, times] { return kprime_check(space, corpus, q, times); }});
  }
  if (jobs.empty()) throw std::domain_error("unknown suite: " + suite);
  return jobs;
}

std::vector<CheckReport> run_jobs(const std::vector<SuiteJob>& jobs, int jobs_limit) {
  std::vector<CheckReport> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = jobs[i].run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs_limit)), jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Empirical constants of functional inequalities on finite metric measure spaces", "gnlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  RunConfig config;
  std::string space_out, check_out = "reports", plot_out, in_dir;
  int jobs = 1;

  CLI::App* space_cmd = app.add_subcommand("space", "Summarize a space: size, diameter, doubling, growth");
  add_space_options(*space_cmd, config);
  space_cmd->add_option("--out", space_out, "Also write space.json here");

  CLI::App* check_cmd = app.add_subcommand("check", "Run a checker suite and write reports");
  add_run_options(*check_cmd, config);
  check_cmd->add_option("--out", check_out, "Report directory")->capture_default_str();
  check_cmd->add_option("--jobs", jobs, "Concurrent checkers");

  CLI::App* plot_cmd = app.add_subcommand("plotdata", "Write CSV series from a report directory");
  plot_cmd->add_option("--in,--reports", in_dir, "Report directory")->required();
  plot_cmd->add_option("--out", plot_out, "Destination (default <in>/plotdata)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "gnlab: " << e.what() << '\n';
    return 2;
  }

  try {
    if (space_cmd->parsed()) return cmd_space(config, space_out, out);
    if (check_cmd->parsed()) return cmd_check(config, check_out, jobs, out);
    return cmd_plotdata(in_dir, plot_out, out);
  } catch (const InputError& e) {
    err << "gnlab: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "gnlab: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "gnlab: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "gnlab: internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gnlab
