#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "svamp/serialize.hpp"

using namespace svamp;

namespace {

const KSModel& model() {
  static const KSModel m = build_ks_model();
  return m;
}
const BellFunctional& functional() {
  static const BellFunctional f = build_bell_functional(model());
  return f;
}

ProtocolRun small_run(std::uint64_t seed, const Config& c) {
  BehaviorCatalog catalog(model(), functional());
  RunOptions o;
  o.theorem_constraints = false;
  return run_protocol(device_from_json(c.device, catalog), c.source_spec(), c.params, functional(), seed, o);
}

Config small_config() {
  Config c;
  c.params.n = 200;
  c.params.delta = 1e-3;
  c.params.mu1 = 2e-3;
  c.params.kappa = 1e-4;
  c.theorem_constraints = false;
  return c;
}

}  // namespace

TEST(Serialize, BellFunctionalRoundTrip) {
  const json j = to_json(functional());
  EXPECT_EQ(j["size"].get<std::size_t>(), 504u);
  EXPECT_EQ(j["tuple_order"], "u1,u2,x1,x2");
  const auto back = bell_functional_from_json(j);
  EXPECT_EQ(back.size(), functional().size());
  EXPECT_EQ(to_json(back), j);
}

TEST(Serialize, BehaviorRoundTripIsExactForDoubles) {
  const auto b = depolarize(ideal_quantum_box(model()), 0.37);
  const auto back = behavior_from_json(json::parse(to_json(b).dump()));
  EXPECT_EQ(back.table(), b.table());
}

TEST(Serialize, ExactBehaviorStringsParseAsRationals) {
  const auto e = ideal_quantum_box_exact(model());
  const json j = to_json(e);
  EXPECT_TRUE(j["table"][0].is_string());
  const auto b = behavior_from_json(j);
  EXPECT_EQ(b.table(), to_double(e).table());
}

TEST(Serialize, BehaviorRejectsWrongShape) {
  json j = to_json(uniform_box());
  j["table"].erase(0);
  EXPECT_THROW(behavior_from_json(j), FormatError);
}

TEST(Serialize, CatalogResolvesNamesAndDepolarized) {
  BehaviorCatalog catalog(model(), functional());
  const auto ideal = catalog.resolve("ideal");
  EXPECT_EQ(ideal.get(), catalog.resolve("ideal").get());
  const auto half = catalog.resolve(json{{"name", "depolarized"}, {"eta", 0.5}});
  EXPECT_EQ(half->table(), depolarize(*ideal, 0.5).table());
  EXPECT_THROW(catalog.resolve("nonexistent"), FormatError);
  EXPECT_THROW(catalog.resolve(json{{"name", "depolarized"}, {"eta", 2.0}}), FormatError);
}

TEST(Serialize, CertificateRoundTripStillVerifies) {
  const auto p = build_lp(functional(), Rational(1, 20));
  const auto sol = solve_lp(p, SolveMode::kExact);
  const auto back = certificate_from_json(json::parse(to_json(sol.dual).dump()));
  EXPECT_EQ(back.bound, sol.dual.bound);
  EXPECT_EQ(back.equality_multipliers, sol.dual.equality_multipliers);
  EXPECT_EQ(back.positivity_multipliers, sol.dual.positivity_multipliers);
  EXPECT_TRUE(verify_certificate(p, back));
}

TEST(Serialize, CertificateFixtureVerifies) {
  std::ifstream in(std::string(SVAMP_FIXTURE_DIR) + "/certificate_delta0.json");
  ASSERT_TRUE(in) << "fixture missing";
  const auto d = certificate_from_json(json::parse(in));
  EXPECT_EQ(d.delta_tilde, 0);
  EXPECT_EQ(d.bound, Rational(3, 4));
  EXPECT_TRUE(verify_certificate(build_lp(functional(), Rational(0)), d));
}

TEST(Serialize, CertificateRejectsGarbage) {
  EXPECT_THROW(certificate_from_json(json{{"bound", "1/2"}}), FormatError);
  json j = to_json(solve_lp(build_lp(functional(), Rational(0))).dual);
  j["bound"] = "not a number";
  EXPECT_THROW(certificate_from_json(j), FormatError);
}

TEST(Serialize, ConfigRoundTripAndStableHash) {
  Config c = small_config();
  c.seed = 99;
  c.trials = 7;
  c.device = {{"kind", "switch_after"}, {"switch_round", 10}, {"first", "ideal"}, {"second", "attack"}};
  const auto back = config_from_json(json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c), config_hash(c));
  Config d = c;
  d.seed = 100;
  EXPECT_NE(config_hash(d), config_hash(c));
}

TEST(Serialize, ConfigRejectsUnknownKeysAndEpsilonMismatch) {
  json j = to_json(small_config());
  j["colour"] = "blue";
  EXPECT_THROW(config_from_json(j), FormatError);
  json k = to_json(small_config());
  k["source"]["epsilon"] = 0.3;
  EXPECT_THROW(config_from_json(k), FormatError);
}

TEST(Serialize, TranscriptRoundTrip) {
  const Config c = small_config();
  const auto run = small_run(5, c);
  std::stringstream ss;
  write_transcript(ss, make_header(run, c), run.rounds);
  const auto t = read_transcript(ss);
  EXPECT_EQ(t.header.eval, run.eval);
  EXPECT_EQ(t.header.config_hash, config_hash(c));
  EXPECT_EQ(t.header.source_seed, run.source_seed);
  ASSERT_EQ(t.rounds.size(), run.rounds.size());
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    EXPECT_EQ(t.rounds[i].u, run.rounds[i].u);
    EXPECT_EQ(t.rounds[i].x, run.rounds[i].x);
  }
  EXPECT_EQ(evaluate(t.rounds, functional(), t.header.params.delta, t.header.params.mu1), run.eval);
}

TEST(Serialize, TranscriptErrorsNameTheLine) {
  const Config c = small_config();
  const auto run = small_run(6, c);
  std::stringstream ss;
  write_transcript(ss, make_header(run, c), run.rounds);
  std::string text = ss.str();
  // Corrupt round 3, which sits on line 5.
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) pos = text.find('\n', pos) + 1;
  text.replace(pos, 5, "{{{{{");
  std::stringstream bad(text);
  try {
    read_transcript(bad);
    FAIL() << "malformed line accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(Serialize, TranscriptRejectsOutOfRangeAndTruncation) {
  const Config c = small_config();
  const auto run = small_run(7, c);
  std::stringstream ss;
  write_transcript(ss, make_header(run, c), run.rounds);
  const std::string text = ss.str();

  std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  std::stringstream t1(truncated);
  EXPECT_THROW(read_transcript(t1), FormatError);

  std::string out_of_range = text;
  const auto pos = out_of_range.find("\"u\":[");
  out_of_range.replace(pos + 5, 1, "0");
  std::stringstream t2(out_of_range);
  EXPECT_THROW(read_transcript(t2), FormatError);

  std::stringstream empty;
  EXPECT_THROW(read_transcript(empty), FormatError);
}

TEST(Serialize, CampaignCsvCarriesVersionAndHash) {
  Config c = small_config();
  BehaviorCatalog catalog(model(), functional());
  RunOptions o;
  o.theorem_constraints = false;
  const auto stats =
      monte_carlo(device_from_json(c.device, catalog), c.source_spec(), c.params, functional(), 3, 11, o, 1);
  std::stringstream ss;
  write_campaign_csv(ss, stats, config_hash(c));
  std::string first, second;
  std::getline(ss, first);
  std::getline(ss, second);
  EXPECT_EQ(first, "# svamp " + std::string(kVersion) + " config_hash=" + config_hash(c));
  EXPECT_EQ(second, "trial,Ln,Sn,verdict,seed");
  int lines = 0;
  for (std::string l; std::getline(ss, l);) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(Serialize, BitsToHex) {
  EXPECT_EQ(bits_to_hex({1, 0, 1, 0, 1, 1, 1, 1}), "af");
  EXPECT_EQ(bits_to_hex({1}), "8");
}
