// Command-line front end. Exit codes: 0 success, 1 scientific failure
// (a bound is violated or a claim does not reproduce), 2 usage or I/O error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svamp/serialize.hpp"
#include "svamp/validation.hpp"

namespace fs = std::filesystem;
using namespace svamp;

namespace {

constexpr int kOk = 0;
constexpr int kScientificFailure = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_output_dir() {
  if (const char* env = std::getenv("SVAMP_OUTPUT_DIR"); env && *env) return env;
  return "svamp_out";
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  return in;
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path, e.what());
  }
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

json stamp(json j, const std::string& hash) {
  j["version"] = kVersion;
  j["config_hash"] = hash;
  return j;
}

// ---------------------------------------------------------------------------
// certify

struct CertifyArgs {
  std::vector<std::string> grid{"0"};
  std::string mode = "exact";
  std::string out;
};

int cmd_certify(const CertifyArgs& a) {
  std::vector<Rational> grid;
  for (const auto& g : a.grid) {
    Rational q;
    try {
      q = parse_rational(g);
    } catch (const std::invalid_argument&) {
      throw UsageError("grid value is not a number: " + g);
    }
    if (sgn(q) < 0) throw UsageError("grid values must be nonnegative: " + g);
    grid.push_back(q);
  }
  if (a.mode != "exact" && a.mode != "float") throw UsageError("--mode must be exact or float");
  const SolveMode mode = a.mode == "exact" ? SolveMode::kExact : SolveMode::kFloat;
  const auto dir = prepare_dir(a.out);
  json config{{"command", "certify"}, {"mode", a.mode}, {"grid", json::array()}};
  for (const auto& q : grid) config["grid"].push_back(to_string(q));
  const std::string hash = hex64(fnv1a(config.dump()));

  const auto f = build_bell_functional(build_ks_model());
  json summary = stamp({{"points", json::array()}}, hash);
  bool all_ok = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto p = build_lp(f, grid[i]);
    LpSolution sol;
    try {
      sol = solve_lp(p, mode);
    } catch (const std::runtime_error& e) {
      std::cerr << "certify: solver failure at delta_tilde " << to_string(grid[i]) << ": " << e.what() << '\n';
      return kUsageError;
    }
    const bool verified = verify_certificate(p, sol.dual);
    const Rational cap = target_bound_exact(grid[i]);
    const bool below = sol.exact_optimum ? *sol.exact_optimum <= cap : sol.optimum <= cap.get_d() + 1e-9;
    // A floating certificate is rounded from doubles and is not expected to
    // verify exactly; only exact mode is held to it.
    const bool ok = below && (mode == SolveMode::kFloat || verified);
    all_ok = all_ok && ok;
    json cert = stamp(to_json(sol.dual), hash);
    cert["optimum"] = sol.exact_optimum ? to_string(*sol.exact_optimum) : format_double(sol.optimum);
    cert["verified"] = verified;
    const std::string name = "certificate_" + std::to_string(i) + ".json";
    write_json(dir / name, cert);
    summary["points"].push_back({{"delta_tilde", to_string(grid[i])},
                                 {"optimum", cert["optimum"]},
                                 {"optimum_value", sol.optimum},
                                 {"target_bound", to_string(cap)},
                                 {"below_target_bound", below},
                                 {"attained", sol.exact_optimum ? json(*sol.exact_optimum == sol.dual.bound) : json(nullptr)},
                                 {"certificate_verified", verified},
                                 {"mode", sol.mode == SolveMode::kExact ? "exact" : "float"},
                                 {"file", name}});
    std::cout << "delta_tilde=" << to_string(grid[i]) << " optimum=" << cert["optimum"].get<std::string>()
              << " bound=" << to_string(cap) << " certificate=" << (verified ? "verified" : "unverified")
              << (ok ? "" : "  FAIL") << '\n';
  }
  write_json(dir / "certify_summary.json", summary);
  return all_ok ? kOk : kScientificFailure;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_path;
  std::optional<std::size_t> n, trials, save;
  std::optional<double> epsilon, delta, mu1, kappa;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> strategy, device;
  bool relaxed = false;
  std::string out;
};

Config load_config(const SimulateArgs& a) {
  Config c = a.config_path.empty() ? Config{} : config_from_json(read_json_file(a.config_path));
  if (a.n) c.params.n = *a.n;
  if (a.epsilon) c.params.epsilon = *a.epsilon;
  if (a.delta) c.params.delta = *a.delta;
  if (a.mu1) c.params.mu1 = *a.mu1;
  if (a.kappa) c.params.kappa = *a.kappa;
  if (a.seed) c.seed = *a.seed;
  if (a.trials) c.trials = *a.trials;
  if (a.workers) c.workers = *a.workers;
  if (a.strategy) c.source["strategy"] = *a.strategy;
  if (a.device) {
    try {
      c.device = json::parse(*a.device);
    } catch (const json::parse_error&) {
      c.device = {{"kind", "iid"}, {"behavior", *a.device}};
    }
  }
  if (a.relaxed) c.theorem_constraints = false;
  c.source.erase("epsilon");
  if (c.trials == 0) throw UsageError("trials must be at least 1");
  try {
    c.params.validate(c.theorem_constraints);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

int cmd_simulate(const SimulateArgs& a) {
  const Config c = load_config(a);
  const auto model = build_ks_model();
  const auto f = build_bell_functional(model);
  BehaviorCatalog catalog(model, f);
  const DeviceSpec device = device_from_json(c.device, catalog);
  const SourceSpec source = c.source_spec();
  const std::string hash = config_hash(c);
  const auto dir = prepare_dir(a.out);
  write_json(dir / "config.json", stamp(to_json(c), hash));
  RunOptions options;
  options.theorem_constraints = c.theorem_constraints;

  const std::size_t save = std::min(a.save.value_or(1), c.trials);
  for (std::size_t t = 0; t < save; ++t) {
    const auto run = run_protocol(device, source, c.params, f, derive_seed(c.seed, t), options);
    const std::string stem = "trial_" + std::to_string(t);
    auto out = open_out(dir / (stem + ".jsonl"));
    write_transcript(out, make_header(run, c), run.rounds);
    if (run.accepted()) open_out(dir / (stem + ".bits.hex")) << bits_to_hex(run.output) << '\n';
  }

  const auto stats = monte_carlo(device, source, c.params, f, c.trials, c.seed, options, c.workers);
  {
    auto csv = open_out(dir / "campaign.csv");
    write_campaign_csv(csv, stats, hash);
  }
  json summary = stamp(to_json(stats), hash);
  summary["setting_map"] = c.params.map;
  summary["white_noise_tolerance"] = white_noise_tolerance(c.params.delta, f, uniform_bits_measure());
  write_json(dir / "summary.json", summary);
  std::cout << "trials=" << stats.trials << " accepts=" << stats.accepts << " abort_bell=" << stats.abort_bell
            << " abort_tomography=" << stats.abort_tomography << " accept_rate=" << stats.accept_rate << " ci95=["
            << stats.ci_low << ", " << stats.ci_high << "]\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// report, extract, replay

Transcript load_transcript(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_transcript(in);
  } catch (const FormatError& e) {
    throw FormatError(path, e.what());
  }
}

int cmd_report(const std::string& path, const std::string& out_dir) {
  const auto t = load_transcript(path);
  const auto& h = t.header;
  json report{{"transcript", path},
              {"verdict", to_string(h.eval.verdict)},
              {"L_n", h.eval.l_n},
              {"S_n", h.eval.s_n},
              {"setting_map", h.setting_map},
              {"selection_rule", to_string(h.params.extractor.rule)}};
  const auto f = build_bell_functional(build_ks_model());
  const auto window = mu1_window(h.params.epsilon, h.params.kappa, ideal_quantum_box(build_ks_model()));
  report["mu1_window"] = {{"lower", window.lower},
                          {"upper_uniform", window.upper_uniform},
                          {"upper_worst_case", window.upper_worst_case},
                          {"contains_mu1", window.contains(h.params.mu1)}};
  report["white_noise_tolerance"] = white_noise_tolerance(h.params.delta, f, uniform_bits_measure());
  report["white_noise_tolerance_uniform_settings"] =
      white_noise_tolerance(h.params.delta, f, SettingMeasure::uniform());
  if (h.eval.verdict == Verdict::kAccept) {
    try {
      const auto sr = security_report(h.params);
      report["security"] = to_json(sr);
      report["guarantee_vacuous"] = !(sr.delta1 < 1.0);
      report["guarantee_note"] =
          "with probability at least 1 - sqrt(delta1/q_acc) over accepted transcripts, "
          "max_x q(x|...,ACC) <= sqrt(delta1/q_acc)";
    } catch (const std::invalid_argument& e) {
      report["security"] = nullptr;
      report["security_note"] = std::string("parameters outside the admissible range: ") + e.what();
    }
  } else {
    report["security"] = nullptr;
    report["security_note"] = "run aborted; no entropy claim is made";
  }
  report = stamp(report, h.config_hash);
  const auto dir = prepare_dir(out_dir);
  write_json(dir / (fs::path(path).stem().string() + ".report.json"), report);
  std::cout << report.dump(2) << '\n';
  return kOk;
}

int cmd_extract(const std::string& path, const std::string& out_dir) {
  const auto t = load_transcript(path);
  const auto& h = t.header;
  if (h.eval.verdict != Verdict::kAccept) {
    std::cerr << "extract: run was not accepted (" << to_string(h.eval.verdict) << "); nothing to extract\n";
    return kScientificFailure;
  }
  const Config c = config_from_json(h.config);
  SVSource source(c.source_spec(), h.source_seed);
  for (std::size_t i = 0; i < t.rounds.size(); ++i)
    if (source.next_setting() != t.rounds[i].u) {
      std::cerr << "extract: source seed does not regenerate the settings of round " << i << '\n';
      return kScientificFailure;
    }
  Bits tb;
  for (int b : source.next_bits(h.params.n)) tb.push_back(static_cast<std::uint8_t>(b));
  const auto xs = transcript_to_source(t.rounds, true, h.params.extractor.rule);
  ExtractorConfig cfg = h.params.extractor;
  const std::size_t L = cfg.L ? cfg.L : std::min(xs.bits.size(), tb.size());
  cfg.m = std::min(cfg.m, L);
  const Bits out = extract(xs.bits, tb, cfg);

  const double rate_t = sv_min_entropy_rate(h.params.epsilon);
  const auto honest = rate_condition(xs.honest_rate, rate_t, cfg.m, L, c.xi);
  json sidecar{{"m", cfg.m},
               {"L", L},
               {"rule", to_string(cfg.rule)},
               {"mode", to_string(cfg.mode)},
               {"rounds_selected", xs.rounds_selected},
               {"xi", c.xi},
               {"rates", {{"x_honest", xs.honest_rate}, {"t", rate_t}}},
               {"validity_condition", {{"lhs", honest.lhs}, {"rhs", honest.rhs}}},
               {"validity_condition_met", honest.met}};
  try {
    const auto sr = security_report(h.params);
    const double certified = sr.min_entropy_bits / static_cast<double>(4 * h.params.n);
    const auto adv = rate_condition(certified, rate_t, cfg.m, L, c.xi);
    sidecar["rates"]["x_certified"] = certified;
    sidecar["validity_condition_met_certified"] = adv.met;
  } catch (const std::invalid_argument&) {
    sidecar["rates"]["x_certified"] = nullptr;
  }
  sidecar = stamp(sidecar, h.config_hash);
  const auto dir = prepare_dir(out_dir);
  const std::string stem = fs::path(path).stem().string();
  open_out(dir / (stem + ".extract.hex")) << bits_to_hex(out) << '\n';
  write_json(dir / (stem + ".extract.json"), sidecar);
  std::cout << bits_to_hex(out) << '\n';
  return kOk;
}

int cmd_replay(const std::string& path) {
  const auto t = load_transcript(path);
  const auto& h = t.header;
  const auto f = build_bell_functional(build_ks_model());
  const auto e = evaluate(t.rounds, f, h.params.delta, h.params.mu1);
  const bool same = e == h.eval;
  std::cout << "L_n=" << format_double(e.l_n) << " S_n=" << format_double(e.s_n) << " verdict=" << to_string(e.verdict)
            << (same ? "  (matches stored)" : "  (MISMATCH with stored)") << '\n';
  return same ? kOk : kScientificFailure;
}

// ---------------------------------------------------------------------------
// verify-bounds

int cmd_verify_bounds(std::size_t trials, std::uint64_t seed, const std::string& out_dir) {
  if (trials == 0) throw UsageError("trials must be at least 1");
  const auto rows = run_bound_checks(trials, seed);
  const std::string hash = hex64(fnv1a(json{{"command", "verify-bounds"}, {"trials", trials}, {"seed", seed}}.dump()));
  const auto dir = prepare_dir(out_dir);
  std::ostringstream csv;
  csv << "# svamp " << kVersion << " config_hash=" << hash << '\n';
  csv << "check,generator,n,parameter,trials,empirical,bound,slack,pass\n";
  bool all = true;
  for (const auto& r : rows) {
    csv << r.check << ',' << r.generator << ',' << r.n << ',' << format_double(r.parameter) << ',' << r.trials << ','
        << format_double(r.empirical) << ',' << format_double(r.bound) << ',' << format_double(r.slack) << ','
        << (r.pass ? "pass" : "fail") << '\n';
    all = all && r.pass;
  }
  open_out(dir / "verify_bounds.csv") << csv.str();
  std::cout << csv.str();
  return all ? kOk : kScientificFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Device-independent randomness amplification toolkit"};
  app.require_subcommand(1);
  std::string out = default_output_dir();
  app.add_option("-o,--output-dir", out, "Output directory (default: $SVAMP_OUTPUT_DIR or ./svamp_out)");

  CertifyArgs certify;
  auto* c = app.add_subcommand("certify", "Solve the no-signaling LP and emit dual certificates");
  c->add_option("--delta-grid", certify.grid, "Bell caps delta_tilde (decimals or p/q)")->delimiter(',');
  c->add_option("--mode", certify.mode, "exact or float");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the protocol or a Monte Carlo campaign");
  s->add_option("--config", sim.config_path, "JSON configuration file");
  s->add_option("-n,--rounds", sim.n, "Rounds per run");
  s->add_option("--epsilon", sim.epsilon, "SV source parameter");
  s->add_option("--delta", sim.delta, "Bell test threshold");
  s->add_option("--mu1", sim.mu1, "Tomography threshold");
  s->add_option("--kappa", sim.kappa, "Randomness floor parameter");
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--trials", sim.trials, "Campaign size");
  s->add_option("--workers", sim.workers, "Worker threads");
  s->add_option("--source-strategy", sim.strategy, "unbiased, constant_bias, avoid_target, bias_toward_pattern");
  s->add_option("--device", sim.device, "Behavior name (ideal, uniform, attack) or device JSON");
  s->add_option("--save-transcripts", sim.save, "Number of trial transcripts to write (default 1)");
  s->add_flag("--relaxed", sim.relaxed, "Skip the admissible-parameter constraints");

  std::string transcript;
  auto* r = app.add_subcommand("report", "Security report for a transcript");
  r->add_option("transcript", transcript, "Transcript file")->required();
  auto* e = app.add_subcommand("extract", "Extract output bits from an accepted transcript");
  e->add_option("transcript", transcript, "Transcript file")->required();
  auto* p = app.add_subcommand("replay", "Recompute L_n, S_n and the verdict of a transcript");
  p->add_option("transcript", transcript, "Transcript file")->required();

  std::size_t vb_trials = 10000;
  std::uint64_t vb_seed = 1;
  auto* v = app.add_subcommand("verify-bounds", "Empirical checks of the concentration bounds");
  v->add_option("--trials", vb_trials, "Trials per row");
  v->add_option("--seed", vb_seed, "Master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    certify.out = out;
    sim.out = out;
    if (*c) return cmd_certify(certify);
    if (*s) return cmd_simulate(sim);
    if (*r) return cmd_report(transcript, out);
    if (*e) return cmd_extract(transcript, out);
    if (*p) return cmd_replay(transcript);
    if (*v) return cmd_verify_bounds(vb_trials, vb_seed, out);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsageError;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
