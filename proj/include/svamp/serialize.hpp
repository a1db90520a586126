#pragma once

// JSON, JSON Lines and CSV formats shared by the command-line tool and the
// tests. Every emitted file carries the artifact version and the FNV-1a hash
// of the canonical configuration it was produced from.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "svamp/boxes.hpp"
#include "svamp/extractor.hpp"
#include "svamp/ks_bell.hpp"
#include "svamp/ns_certify.hpp"
#include "svamp/protocol.hpp"
#include "svamp/rational.hpp"
#include "svamp/sv_source.hpp"

namespace svamp {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Malformed input. `where` names the file position or key path.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& where, const std::string& what) : std::runtime_error(where + ": " + what) {}
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) { return json(v).dump(); }

// ---------------------------------------------------------------------------
// Model and functional

inline json to_json(const KSModel& m) {
  json j;
  j["vectors"] = json::array();
  for (const auto& v : m.vectors()) j["vectors"].push_back(v);
  j["bases"] = json::array();
  for (const auto& b : m.bases()) j["bases"].push_back(b);
  return j;
}

/// Tuples in table order, each as [u1, u2, x1, x2].
inline json to_json(const BellFunctional& f) {
  json j;
  j["tuple_order"] = "u1,u2,x1,x2";
  j["size"] = f.size();
  j["tuples"] = json::array();
  for (const auto& t : f.tuples()) j["tuples"].push_back({t.u.alice, t.u.bob, t.x.alice, t.x.bob});
  const auto& tg = f.target();
  j["target"] = {tg.u.alice, tg.u.bob, tg.x.alice, tg.x.bob};
  return j;
}

inline BellFunctional bell_functional_from_json(const json& j) {
  try {
    auto tuple = [](const json& a) {
      if (!a.is_array() || a.size() != 4) throw FormatError("bell functional", "tuples need 4 entries");
      return BellTuple{{a[2].get<int>(), a[3].get<int>()}, {a[0].get<int>(), a[1].get<int>()}};
    };
    std::vector<BellTuple> tuples;
    for (const auto& a : j.at("tuples")) tuples.push_back(tuple(a));
    return BellFunctional::from_tuples(tuples, tuple(j.at("target")));
  } catch (const json::exception& e) {
    throw FormatError("bell functional", e.what());
  }
}

// ---------------------------------------------------------------------------
// Behaviors

inline json to_json(const Behavior& b, json meta = json::object()) {
  return {{"settings", kNumSettings}, {"outcomes", kNumOutcomes}, {"table", b.table()}, {"meta", std::move(meta)}};
}

/// Exact tables are written as rational strings.
inline json to_json(const ExactBehavior& b, json meta = json::object()) {
  json table = json::array();
  for (const auto& q : b.table()) table.push_back(to_string(q));
  return {{"settings", kNumSettings}, {"outcomes", kNumOutcomes}, {"table", table}, {"meta", std::move(meta)}};
}

/// Accepts numbers or rational strings in the table.
inline Behavior behavior_from_json(const json& j) {
  try {
    if (j.at("settings").get<int>() != kNumSettings || j.at("outcomes").get<int>() != kNumOutcomes)
      throw FormatError("behavior", "expected 9 settings and 4 outcomes");
    const auto& t = j.at("table");
    if (!t.is_array() || t.size() != kTableSize) throw FormatError("behavior", "table must have 1296 entries");
    std::vector<double> v(kTableSize);
    for (std::size_t k = 0; k < kTableSize; ++k)
      v[k] = t[k].is_string() ? to_double(parse_rational(t[k].get<std::string>())) : t[k].get<double>();
    return Behavior(std::move(v));
  } catch (const json::exception& e) {
    throw FormatError("behavior", e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("behavior", e.what());
  }
}

/// Named behaviors for device specs: "ideal", "uniform", "attack" (the
/// zero-Bell box with P(x*|u*) = 0), {"name": "depolarized", "eta": e}
/// (ideal box mixed with white noise), or an inline behavior object.
class BehaviorCatalog {
 public:
  explicit BehaviorCatalog(const KSModel& model, const BellFunctional& f) : model_(model), f_(f) {}

  BehaviorPtr resolve(const json& j) {
    if (j.is_string()) return named(j.get<std::string>());
    if (j.is_object() && j.contains("table")) return std::make_shared<const Behavior>(behavior_from_json(j));
    if (j.is_object() && j.value("name", "") == "depolarized") {
      if (!j.contains("eta") || !j["eta"].is_number()) throw FormatError("device.behavior", "depolarized needs eta");
      const double eta = j["eta"].get<double>();
      if (!(eta >= 0.0 && eta <= 1.0)) throw FormatError("device.behavior", "eta must lie in [0, 1]");
      return std::make_shared<const Behavior>(depolarize(*named("ideal"), eta));
    }
    throw FormatError("device.behavior", "unrecognized behavior " + j.dump());
  }

  BehaviorPtr named(const std::string& name) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    BehaviorPtr b;
    if (name == "ideal") {
      b = std::make_shared<const Behavior>(ideal_quantum_box(model_));
    } else if (name == "uniform") {
      b = std::make_shared<const Behavior>(uniform_box());
    } else if (name == "attack") {
      b = std::make_shared<const Behavior>(attack_box(f_));
    } else {
      throw FormatError("device.behavior", "unknown behavior name " + name);
    }
    cache_[name] = b;
    return b;
  }

 private:
  const KSModel& model_;
  const BellFunctional& f_;
  std::map<std::string, BehaviorPtr> cache_;
};

inline DeviceSpec device_from_json(const json& j, BehaviorCatalog& catalog) {
  try {
    const std::string kind = j.value("kind", "iid");
    if (kind == "iid") return DeviceSpec::iid(catalog.resolve(j.at("behavior")));
    if (kind == "switch_after")
      return DeviceSpec::switch_after(j.at("switch_round").get<std::size_t>(), catalog.resolve(j.at("first")),
                                      catalog.resolve(j.at("second")));
    if (kind == "history_trigger") {
      std::vector<SettingPair> pattern;
      for (const auto& u : j.at("pattern")) pattern.push_back({u.at(0).get<int>(), u.at(1).get<int>()});
      return DeviceSpec::history_trigger(std::move(pattern), catalog.resolve(j.at("first")),
                                         catalog.resolve(j.at("second")));
    }
    throw FormatError("device.kind", "unknown device kind " + kind);
  } catch (const json::exception& e) {
    throw FormatError("device", e.what());
  }
}

// ---------------------------------------------------------------------------
// Sources

inline json to_json(const SourceSpec& s) {
  json j{{"epsilon", s.epsilon}, {"strategy", to_string(s.strategy)}};
  switch (s.strategy) {
    case StrategyKind::kConstantBias: j["signs"] = s.signs; break;
    case StrategyKind::kBiasTowardPattern: j["pattern"] = s.pattern; break;
    case StrategyKind::kAvoidTarget: j["target"] = {s.target.alice, s.target.bob}; break;
    case StrategyKind::kUnbiased: break;
  }
  return j;
}

inline SourceSpec source_from_json(const json& j) {
  try {
    SourceSpec s;
    s.epsilon = j.value("epsilon", 0.0);
    s.strategy = strategy_kind_from_string(j.value("strategy", std::string("unbiased")));
    if (j.contains("signs")) s.signs = j["signs"].get<std::vector<int>>();
    if (j.contains("pattern")) s.pattern = j["pattern"].get<std::vector<std::uint8_t>>();
    if (j.contains("target")) s.target = {j["target"].at(0).get<int>(), j["target"].at(1).get<int>()};
    return s;
  } catch (const json::exception& e) {
    throw FormatError("source", e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("source", e.what());
  }
}

// ---------------------------------------------------------------------------
// Protocol parameters

inline std::string to_string(ExtractorMode m) { return m == ExtractorMode::kInnerProduct ? "inner_product" : "passthrough"; }
inline ExtractorMode extractor_mode_from_string(const std::string& s) {
  if (s == "inner_product") return ExtractorMode::kInnerProduct;
  if (s == "passthrough") return ExtractorMode::kPassthrough;
  throw std::invalid_argument("unknown extractor mode: " + s);
}

inline json to_json(const ExtractorConfig& c) {
  return {{"mode", to_string(c.mode)}, {"m", c.m}, {"L", c.L}, {"rule", to_string(c.rule)}};
}

inline ExtractorConfig extractor_from_json(const json& j) {
  try {
    ExtractorConfig c;
    c.mode = extractor_mode_from_string(j.value("mode", std::string("inner_product")));
    c.m = j.value("m", c.m);
    c.L = j.value("L", c.L);
    c.rule = selection_rule_from_string(j.value("rule", std::string("target_rounds")));
    return c;
  } catch (const json::exception& e) {
    throw FormatError("extractor", e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("extractor", e.what());
  }
}

inline json to_json(const ProtocolParams& p) {
  return {{"n", p.n},         {"epsilon", p.epsilon}, {"delta", p.delta},
          {"mu1", p.mu1},     {"kappa", p.kappa},     {"map", p.map},
          {"extractor", to_json(p.extractor)}};
}

inline ProtocolParams params_from_json(const json& j) {
  try {
    ProtocolParams p;
    p.n = j.value("n", p.n);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.delta = j.value("delta", p.delta);
    p.mu1 = j.value("mu1", p.mu1);
    p.kappa = j.value("kappa", p.kappa);
    p.map = j.value("map", p.map);
    if (j.contains("extractor")) p.extractor = extractor_from_json(j["extractor"]);
    return p;
  } catch (const json::exception& e) {
    throw FormatError("params", e.what());
  }
}

/// The full run configuration. Devices are kept as JSON and resolved
/// through a BehaviorCatalog when a run starts.
struct Config {
  ProtocolParams params;
  json device = {{"kind", "iid"}, {"behavior", "ideal"}};
  json source = {{"strategy", "unbiased"}};
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  unsigned workers = 1;
  bool theorem_constraints = true;
  double xi = 1e-3;  // target extractor error recorded in rate reports

  SourceSpec source_spec() const {
    SourceSpec s = source_from_json(source);
    s.epsilon = params.epsilon;
    return s;
  }
};

inline json to_json(const Config& c) {
  json src = c.source;
  src["epsilon"] = c.params.epsilon;
  return {{"params", to_json(c.params)},
          {"device", c.device},
          {"source", src},
          {"seed", c.seed},
          {"trials", c.trials},
          {"workers", c.workers},
          {"theorem_constraints", c.theorem_constraints},
          {"xi", c.xi}};
}

/// The source epsilon, when present, must agree with params.epsilon.
/// "version" and "config_hash" stamps are accepted and ignored, so an
/// emitted config.json reads back unchanged.
inline Config config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config", "expected a JSON object");
  static const std::vector<std::string> known{"params", "device", "source", "seed", "trials", "workers",
                                              "theorem_constraints", "xi", "version", "config_hash"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw FormatError("config", "unknown key " + key);
  Config c;
  try {
    if (j.contains("params")) c.params = params_from_json(j["params"]);
    if (j.contains("device")) c.device = j["device"];
    if (j.contains("source")) c.source = j["source"];
    c.seed = j.value("seed", c.seed);
    c.trials = j.value("trials", c.trials);
    c.workers = j.value("workers", c.workers);
    c.theorem_constraints = j.value("theorem_constraints", c.theorem_constraints);
    c.xi = j.value("xi", c.xi);
  } catch (const json::exception& e) {
    throw FormatError("config", e.what());
  }
  if (c.source.contains("epsilon") && c.source["epsilon"].get<double>() != c.params.epsilon)
    throw FormatError("config.source.epsilon", "disagrees with params.epsilon");
  source_from_json(c.source);
  return c;
}

inline std::string config_hash(const Config& c) { return hex64(fnv1a(to_json(c).dump())); }

// ---------------------------------------------------------------------------
// Certificates

inline std::string to_string(ObjectiveSense s) { return s == ObjectiveSense::kMaximize ? "maximize" : "minimize"; }

/// Multipliers are sparse [index, "p/q"] pairs; equality indices refer to
/// the rows of build_lp in order.
inline json to_json(const DualCertificate& d) {
  auto sparse = [](const std::vector<Rational>& v) {
    json a = json::array();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (sgn(v[i]) != 0) a.push_back({i, to_string(v[i])});
    return a;
  };
  return {{"delta_tilde", to_string(d.delta_tilde)},
          {"sense", to_string(d.sense)},
          {"bound", to_string(d.bound)},
          {"multipliers",
           {{"equality", sparse(d.equality_multipliers)},
            {"equality_count", d.equality_multipliers.size()},
            {"bell", to_string(d.bell_multiplier)},
            {"positivity", sparse(d.positivity_multipliers)},
            {"positivity_count", d.positivity_multipliers.size()}}}};
}

inline DualCertificate certificate_from_json(const json& j) {
  try {
    DualCertificate d;
    d.delta_tilde = parse_rational(j.at("delta_tilde").get<std::string>());
    d.sense = j.value("sense", std::string("maximize")) == "maximize" ? ObjectiveSense::kMaximize
                                                                     : ObjectiveSense::kMinimize;
    d.bound = parse_rational(j.at("bound").get<std::string>());
    const auto& m = j.at("multipliers");
    auto dense = [](const json& a, std::size_t n) {
      std::vector<Rational> v(n, Rational(0));
      for (const auto& e : a) v.at(e.at(0).get<std::size_t>()) = parse_rational(e.at(1).get<std::string>());
      return v;
    };
    d.equality_multipliers = dense(m.at("equality"), m.at("equality_count").get<std::size_t>());
    d.bell_multiplier = parse_rational(m.at("bell").get<std::string>());
    d.positivity_multipliers = dense(m.at("positivity"), m.at("positivity_count").get<std::size_t>());
    return d;
  } catch (const json::exception& e) {
    throw FormatError("certificate", e.what());
  } catch (const std::out_of_range& e) {
    throw FormatError("certificate", e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("certificate", e.what());
  }
}

// ---------------------------------------------------------------------------
// Transcripts

struct TranscriptHeader {
  std::string version = kVersion;
  std::string config_hash;
  json config;
  ProtocolParams params;
  std::uint64_t master_seed = 0;
  std::uint64_t device_seed = 0;
  std::uint64_t source_seed = 0;
  Evaluation eval;
  std::string setting_map = SettingMap{}.name;
};

inline json to_json(const TranscriptHeader& h) {
  return {{"type", "header"},
          {"version", h.version},
          {"config_hash", h.config_hash},
          {"config", h.config},
          {"params", to_json(h.params)},
          {"setting_map", h.setting_map},
          {"seeds", {{"master", h.master_seed}, {"device", h.device_seed}, {"source", h.source_seed}}},
          {"result",
           {{"bell_count", h.eval.bell_count},
            {"target_count", h.eval.target_count},
            {"L_n", h.eval.l_n},
            {"S_n", h.eval.s_n},
            {"verdict", to_string(h.eval.verdict)}}}};
}

inline TranscriptHeader make_header(const ProtocolRun& run, const Config& config) {
  TranscriptHeader h;
  h.config_hash = config_hash(config);
  h.config = to_json(config);
  h.params = run.params;
  h.master_seed = run.master_seed;
  h.device_seed = run.device_seed;
  h.source_seed = run.source_seed;
  h.eval = run.eval;
  return h;
}

inline void write_transcript(std::ostream& out, const TranscriptHeader& h, const std::vector<Round>& rounds) {
  out << to_json(h).dump() << '\n';
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& r = rounds[i];
    out << R"({"i":)" << i << R"(,"u":[)" << r.u.alice << ',' << r.u.bob << R"(],"x":[)" << r.x.alice << ','
        << r.x.bob << "]}\n";
  }
}

struct Transcript {
  TranscriptHeader header;
  std::vector<Round> rounds;
};

/// Errors name the offending line (1-based).
inline Transcript read_transcript(std::istream& in) {
  Transcript t;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return "line " + std::to_string(line_no); };
  if (!std::getline(in, line)) throw FormatError("line 1", "empty transcript");
  ++line_no;
  try {
    const json h = json::parse(line);
    if (h.value("type", "") != "header") throw FormatError(where(), "first record must be the header");
    t.header.version = h.at("version").get<std::string>();
    t.header.config_hash = h.at("config_hash").get<std::string>();
    t.header.config = h.at("config");
    t.header.params = params_from_json(h.at("params"));
    t.header.setting_map = h.at("setting_map").get<std::string>();
    const auto& s = h.at("seeds");
    t.header.master_seed = s.at("master").get<std::uint64_t>();
    t.header.device_seed = s.at("device").get<std::uint64_t>();
    t.header.source_seed = s.at("source").get<std::uint64_t>();
    const auto& r = h.at("result");
    t.header.eval.bell_count = r.at("bell_count").get<std::size_t>();
    t.header.eval.target_count = r.at("target_count").get<std::size_t>();
    t.header.eval.l_n = r.at("L_n").get<double>();
    t.header.eval.s_n = r.at("S_n").get<double>();
    t.header.eval.verdict = verdict_from_string(r.at("verdict").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(where(), e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(where(), e.what());
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json r = json::parse(line);
      if (r.at("i").get<std::size_t>() != t.rounds.size()) throw FormatError(where(), "round index out of sequence");
      const Round round{{r.at("u").at(0).get<int>(), r.at("u").at(1).get<int>()},
                        {r.at("x").at(0).get<int>(), r.at("x").at(1).get<int>()}};
      if (!valid_setting(round.u) || !valid_outcome(round.x)) throw FormatError(where(), "round out of range");
      t.rounds.push_back(round);
    } catch (const json::exception& e) {
      throw FormatError(where(), e.what());
    }
  }
  if (t.rounds.size() != t.header.params.n)
    throw FormatError("line " + std::to_string(line_no), "transcript has " + std::to_string(t.rounds.size()) +
                                                             " rounds, header declares " +
                                                             std::to_string(t.header.params.n));
  return t;
}

// ---------------------------------------------------------------------------
// Campaign summary and reports

inline void write_campaign_csv(std::ostream& out, const CampaignStats& stats, const std::string& hash) {
  out << "# svamp " << kVersion << " config_hash=" << hash << '\n';
  out << "trial,Ln,Sn,verdict,seed\n";
  for (const auto& r : stats.records)
    out << r.trial << ',' << format_double(r.eval.l_n) << ',' << format_double(r.eval.s_n) << ','
        << to_string(r.eval.verdict) << ',' << r.seed << '\n';
}

inline json to_json(const CampaignStats& s) {
  return {{"trials", s.trials},
          {"accepts", s.accepts},
          {"abort_bell", s.abort_bell},
          {"abort_tomography", s.abort_tomography},
          {"accept_rate", s.accept_rate},
          {"accept_rate_ci95", {s.ci_low, s.ci_high}},
          {"mean_L_n", s.mean_l_n},
          {"mean_S_n", s.mean_s_n}};
}

inline json to_json(const SecurityReport& r) {
  json j{{"n", r.n},
         {"epsilon", r.epsilon},
         {"delta", r.delta},
         {"mu1", r.mu1},
         {"kappa", r.kappa},
         {"delta_max", r.delta_max},
         {"mu2", r.mu2},
         {"mu3", r.mu3},
         {"mu4", r.mu4},
         {"gamma_bell_branch", r.gamma_bell},
         {"gamma", r.gamma},
         {"eps_az1", r.eps_az1},
         {"eps_az2", r.eps_az2},
         {"gamma_power", r.gamma_power},
         {"delta1", r.delta1},
         {"min_entropy_bits", r.min_entropy_bits},
         {"zeta", r.zeta}};
  j["chernoff_accept"] = r.chernoff_accept ? json(*r.chernoff_accept) : json(nullptr);
  return j;
}

inline std::string bits_to_hex(const Bits& bits) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t k = 0; k < 4; ++k) nibble = (nibble << 1) | (i + k < bits.size() ? bits[i + k] : 0u);
    out.push_back(digits[nibble]);
  }
  return out;
}

}  // namespace svamp
