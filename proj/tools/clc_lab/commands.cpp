#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "clc/error.hpp"
#include "clc/objectives.hpp"
#include "clc/optim.hpp"
#include "clc/report.hpp"
#include "clc/scenario.hpp"
#include "clc/scenario_io.hpp"
#include "clc/verify.hpp"

namespace clc::lab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kArtifactVersion = "1.0.0";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& primary) const {
    json j;
    j["version"] = kSchemaVersion;
    j["kind"] = "manifest";
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["artifact_version"] = kArtifactVersion;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["started"] = started;
    j["finished"] = utc_now();
    write_text_file(primary.string() + ".manifest.json", j.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  int langs = 2;
  int prompts = 8;
  int cands = 4;
  std::string translator = "bijective";
  double alpha = 1.0;
  std::vector<double> u;
  std::vector<double> v;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a, std::ostream& out) {
  GeneratorConfig c;
  c.n_langs = a.langs;
  c.n_prompts = a.prompts;
  c.n_candidates = a.cands;
  c.translator = TranslatorMode::parse(a.translator);
  c.alpha = a.alpha;
  c.u = a.u;
  c.v = a.v;
  c.seed = a.seed;
  const Scenario s = generate(c);
  save_scenario(s, a.out);

  Manifest m;
  m.command = "gen";
  m.config = {{"langs", a.langs},   {"prompts", a.prompts}, {"cands", a.cands},
              {"translator", c.translator.to_string()},     {"alpha", a.alpha},
              {"u", a.u},           {"v", a.v},             {"seed", a.seed}};
  m.seed = a.seed;
  m.outputs = {a.out};
  m.write(a.out);
  out << "wrote " << a.out << " (" << s.language_count() << " languages, "
      << s.alignment.tuples().size() << " aligned prompts)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string scenario;
  std::string policy = "ref";
  std::string format = "json";
  std::string out;
};

void require_policy_matches(const Scenario& s, const PolicySet& pi) {
  if (pi.size() != s.language_count()) {
    throw ValidationError("policy covers " + std::to_string(pi.size()) +
                          " languages, scenario has " + std::to_string(s.language_count()));
  }
  for (LangId m = 0; m < static_cast<LangId>(s.language_count()); ++m) {
    const auto& k = pi[static_cast<std::size_t>(m)];
    for (Id x : s.space(m).prompts) {
      if (!k.has_row(x)) {
        throw ValidationError("policy has no row for prompt " + std::to_string(x));
      }
      const auto& want = s.ref[static_cast<std::size_t>(m)].row(x).support();
      const auto& got = k.row(x).support();
      if (!std::equal(want.begin(), want.end(), got.begin(), got.end())) {
        throw ValidationError("policy row of prompt " + std::to_string(x) +
                              " is not over the prompt's candidates");
      }
    }
  }
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Scenario s = load_scenario(a.scenario);
  PolicySet pi;
  std::string method;
  Manifest m;
  m.inputs = {a.scenario};
  if (a.policy == "ref") {
    pi = s.ref;
    method = "ref";
  } else if (a.policy == "optimum") {
    pi = n_language_optimum(s).policy;
    method = "optimum";
  } else {
    PolicyFile f = load_policy(a.policy);
    require_policy_matches(s, f.policy);
    pi = std::move(f.policy);
    method = f.method;
    m.inputs.push_back(a.policy);
  }
  const MetricsReport r = evaluate(s, pi, fs::path(a.scenario).stem().string(), method);
  write_text_file(a.out, a.format == "json" ? metrics_to_json(r) : metrics_to_csv(r));

  m.command = "eval";
  m.config = {{"scenario", a.scenario}, {"policy", a.policy}, {"format", a.format}};
  m.seed = s.seed;
  m.outputs = {a.out};
  m.write(a.out);
  out << "CLC-All " << r.clc_all << ", consistent fraction " << r.consistent_fraction << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string scenario;
  std::string method = "dco";
  std::optional<double> step;
  int iters = 10000;
  double tol = 1e-9;
  int rollouts = 256;
  int batch = 32;
  std::string norm = "l1";
  std::uint64_t seed = 0;
  std::string out;
};

/// REINFORCE needs a smaller step than the backtracking DCO search starts from.
double default_step(Method m) { return m == Method::kDcoSubgradient ? 1.0 : 0.5; }

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  OptimizerConfig c;
  c.method = parse_method(a.method);
  c.step_size = a.step.value_or(default_step(c.method));
  c.max_iters = a.iters;
  c.tol = a.tol;
  c.rollouts = a.rollouts;
  c.batch = a.batch;
  c.norm = parse_norm(a.norm);
  c.seed = a.seed;
  c.validate();

  const Scenario s = load_scenario(a.scenario);
  const FitResult r = fit(s, c);
  save_policy(r.policy, to_string(c.method), a.out);
  const std::string trace_path = a.out + ".trace.csv";
  write_text_file(trace_path, r.trace.to_csv());

  Manifest m;
  m.command = "fit";
  m.config = {{"scenario", a.scenario},   {"method", std::string(to_string(c.method))},
              {"step", c.step_size},      {"iters", c.max_iters},
              {"tol", c.tol},             {"rollouts", c.rollouts},
              {"batch", c.batch},         {"norm", std::string(to_string(c.norm))},
              {"seed", c.seed},           {"status", std::string(to_string(r.status))},
              {"iterations", r.iterations}};
  m.seed = c.seed;
  m.inputs = {a.scenario};
  m.outputs = {a.out, trace_path};
  m.write(a.out);

  const auto& last = r.trace.rows.back();
  out << to_string(c.method) << ": " << to_string(r.status) << " after " << r.iterations
      << " iterations, loss " << last.loss << ", TV to optimum " << last.tv_to_optimum
      << ", samples " << last.samples << "\n";
  const bool failed = r.status == FitStatus::kDiverged ||
                      (c.method == Method::kDcoSubgradient && r.status != FitStatus::kConverged);
  if (failed) {
    err << "error: " << to_string(r.status) << ": " << r.diagnostic << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string scenario;
  bool suite = false;
  bool self_test = false;
};

int run_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<SuiteEntry> entries;
  if (a.suite) {
    entries = builtin_suite();
  } else {
    entries.push_back({fs::path(a.scenario).stem().string(), load_scenario(a.scenario)});
  }
  VerifyOptions opts;
  opts.self_test = a.self_test;
  int failures = 0;
  for (const auto& e : entries) {
    opts.seed = e.scenario.seed;
    for (const auto& c : verify_scenario(e.scenario, opts)) {
      out << e.name << " " << c.id << " " << to_string(c.status);
      if (!c.detail.empty()) out << " (" << c.detail << ")";
      out << "\n";
      if (c.status == CheckStatus::kFail) {
        ++failures;
        err << "check " << c.id << " failed on " << e.name << ": observed " << c.observed
            << ", threshold " << c.threshold << "\n";
      }
    }
  }
  out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
      << "\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_report(const ReportArgs& a, std::ostream& out) {
  std::vector<ReportRow> rows;
  for (const auto& in : a.inputs) {
    auto more = report_rows(read_text_file(in));
    rows.insert(rows.end(), more.begin(), more.end());
  }
  write_text_file(a.out, report_csv(rows));
  Manifest m;
  m.command = "report";
  m.config = {{"inputs", a.inputs}};
  m.inputs = a.inputs;
  m.outputs = {a.out};
  m.write(a.out);
  out << "wrote " << rows.size() << " rows to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crosslingual consistency lab on finite prompted models", "clc-lab"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic scenario");
  g->add_option("--langs", gen.langs, "Number of languages")->capture_default_str();
  g->add_option("--prompts", gen.prompts, "Aligned prompts per language")->capture_default_str();
  g->add_option("--cands", gen.cands, "Candidates per prompt")->capture_default_str();
  g->add_option("--translator", gen.translator, "bijective or noisy:<delta>")
      ->capture_default_str();
  g->add_option("--alpha", gen.alpha, "Dirichlet concentration of reference rows")
      ->capture_default_str();
  g->add_option("--u", gen.u, "Strength factors u, comma separated")->delimiter(',');
  g->add_option("--v", gen.v, "Strength factors v, comma separated")->delimiter(',');
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "Scenario file to write")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compute consistency metrics for a policy");
  e->add_option("--scenario", ev.scenario, "Scenario file")->required();
  e->add_option("--policy", ev.policy, "ref, optimum or a policy file")->capture_default_str();
  e->add_option("--format", ev.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  e->add_option("--out", ev.out, "Metrics file to write")->required();

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Fit a policy by DCO or on-policy REINFORCE");
  f->add_option("--scenario", fa.scenario, "Scenario file")->required();
  f->add_option("--method", fa.method, "dco or pco-reinforce")
      ->check(CLI::IsMember({"dco", "dco-subgradient", "pco-reinforce"}))
      ->capture_default_str();
  f->add_option("--step", fa.step, "Step size (default 1 for dco, 0.5 for pco-reinforce)");
  f->add_option("--iters", fa.iters, "Maximum iterations")->capture_default_str();
  f->add_option("--tol", fa.tol, "Policy-change tolerance in TV")->capture_default_str();
  f->add_option("--rollouts", fa.rollouts, "Samples per prompt per step")->capture_default_str();
  f->add_option("--batch", fa.batch, "Prompts per step")->capture_default_str();
  f->add_option("--norm", fa.norm, "DCO loss norm")
      ->check(CLI::IsMember({"l1", "l2"}))
      ->capture_default_str();
  f->add_option("--seed", fa.seed, "Sampling seed")->capture_default_str();
  f->add_option("--out", fa.out, "Policy file to write")->required();

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "Check the closed-form properties numerically");
  auto* vs = v->add_option("--scenario", va.scenario, "Scenario file");
  auto* vsuite = v->add_flag("--suite", va.suite, "Use the built-in seeded scenarios");
  vs->excludes(vsuite);
  v->add_flag("--self-test", va.self_test, "Corrupt the optimum; checks must fail");

  ReportArgs ra;
  auto* r = app.add_subcommand("report", "Merge metrics files into one long CSV");
  r->add_option("inputs", ra.inputs, "Metrics JSON files")->required();
  r->add_option("--out", ra.out, "CSV file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*g) return run_gen(gen, out);
    if (*e) return run_eval(ev, out);
    if (*f) return run_fit(fa, out, err);
    if (*v) {
      if (va.scenario.empty() && !va.suite) {
        err << "error: verify needs --scenario or --suite\n";
        return kExitInput;
      }
      return run_verify(va, out, err);
    }
    if (*r) return run_report(ra, out);
  } catch (const std::exception& ex) {
    // Every library error at this level is an input problem: unreadable or
    // invalid files, or flag values outside their domain.
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace clc::lab
