#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "latstruct/csv.hpp"
#include "latstruct/harness.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/stats.hpp"

using namespace latstruct;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  // Minimal RFC 4180 reader for round-trip checks (handles quoted fields).
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
      ++i;
    } else {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("csv writer follows rfc 4180") {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.row({"plain", "with,comma", "with\"quote", "multi\nline"});
  std::string text = out.str();
  CHECK(text ==
        "plain,\"with,comma\",\"with\"\"quote\",\"multi\nline\"\r\n");
  auto rows = parse_csv(text);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][1] == "with,comma");
  CHECK(rows[0][2] == "with\"quote");
  CHECK(rows[0][3] == "multi\nline");
}

TEST_CASE("gradcheck: all exact layers pass, surrogates are skipped") {
  GradcheckConfig config;
  config.common.seed = 1;
  config.points = 5;  // the CLI default is 20; keep the unit test snappy
  GradcheckResult result = run_gradcheck_checks(config);
  CHECK(result.all_pass);

  int exact = 0, skipped = 0;
  std::set<std::string> names;
  for (const GradcheckRow& row : result.rows) {
    names.insert(row.name);
    if (row.status == "skipped_by_design") {
      ++skipped;
    } else {
      CHECK(row.status == "pass");
      CHECK(row.max_rel_err < config.tolerance);
      ++exact;
    }
  }
  CHECK(exact >= 10);
  CHECK(skipped == 7);
  for (const char* name :
       {"ste", "softmax_st", "spigot", "linear_interp", "imle", "round_ste",
        "vq_quantize"})
    CHECK(names.count(name) == 1);
}

TEST_CASE("gradcheck report bytes are reproducible") {
  GradcheckConfig config;
  config.common.seed = 3;
  config.points = 3;
  config.common.out_path = "gradcheck_a.json";
  CHECK(cmd_gradcheck(config) == kExitOk);
  config.common.out_path = "gradcheck_b.json";
  CHECK(cmd_gradcheck(config) == kExitOk);
  CHECK(slurp("gradcheck_a.json") == slurp("gradcheck_b.json"));

  nlohmann::json j = nlohmann::json::parse(slurp("gradcheck_a.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["all_pass"] == true);
  std::remove("gradcheck_a.json");
  std::remove("gradcheck_b.json");
}

TEST_CASE("estimator bench table") {
  EstimatorsConfig config;
  config.common.seed = 5;
  config.k = 5;
  config.samples = 800;
  config.replicates = 8;
  EstimatorsResult result = run_estimator_bench(config);

  const EstimatorsRow* explicit_row = nullptr;
  const EstimatorsRow* sfe_row = nullptr;
  const EstimatorsRow* critic_row = nullptr;
  for (const EstimatorsRow& row : result.rows) {
    if (row.name == "explicit") explicit_row = &row;
    if (row.name == "sfe") sfe_row = &row;
    if (row.name == "sfe_self_critic") critic_row = &row;
  }
  REQUIRE(explicit_row);
  REQUIRE(sfe_row);
  REQUIRE(critic_row);

  CHECK(explicit_row->bias <= 1e-12);
  CHECK(explicit_row->variance == 0.0);
  CHECK(explicit_row->decoder_calls == 5.0);

  CHECK(critic_row->variance < sfe_row->variance);

  // Unbiased estimators sit within 3 standard errors of the explicit
  // gradient.
  for (const EstimatorsRow& row : result.rows) {
    if (row.name == "sfe" || row.name == "sfe_ema" ||
        row.name == "sfe_self_critic" || row.name == "sfe_sample_critic" ||
        row.name == "sum_and_sample_m2")
      CHECK(row.bias <= 3.0 * row.bias_se);
  }

  // CSV emission parses back with one row per estimator.
  config.common.out_path = "estimators.csv";
  config.timings = false;  // keep the bytes deterministic
  CHECK(cmd_estimators(config) == kExitOk);
  auto rows = parse_csv(slurp("estimators.csv"));
  REQUIRE(rows.size() == result.rows.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"estimator", "bias", "bias_se",
                                            "variance", "decoder_calls"});
  std::string first = slurp("estimators.csv");
  CHECK(cmd_estimators(config) == kExitOk);
  CHECK(slurp("estimators.csv") == first);
  std::remove("estimators.csv");
}

TEST_CASE("communication game learns with explicit marginalization") {
  GameConfig config;
  config.common.seed = 0;
  config.images = 2;
  config.codes = 4;
  config.feature_dim = 8;
  config.estimator = "explicit";
  config.steps = 600;
  config.eval_every = 50;
  GameResult result = play_game(config);
  CHECK_FALSE(result.diverged);
  REQUIRE(!result.rows.empty());
  CHECK(result.final_success >= 0.95);
  for (const GameRow& row : result.rows)
    CHECK(row.decoder_calls == doctest::Approx(4.0));

  // CSV emission round trip.
  config.common.out_path = "game.csv";
  CHECK(cmd_game(config) == kExitOk);
  auto rows = parse_csv(slurp("game.csv"));
  REQUIRE(rows.size() == result.rows.size() + 1);
  CHECK(rows[0][0] == "step");
  std::remove("game.csv");

  GameConfig bad = config;
  bad.estimator = "nope";
  CHECK_THROWS_AS(play_game(bad), std::invalid_argument);
}

TEST_CASE("treeskew output") {
  TreeSkewConfig config;
  config.leaves = 3;
  config.p_shift = 0.5;
  config.common.out_path = "treeskew.csv";
  CHECK(cmd_treeskew(config) == kExitOk);
  auto rows = parse_csv(slurp("treeskew.csv"));
  REQUIRE(rows.size() == 3);
  double total = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    total += std::stod(rows[i][2]);
  CHECK(std::fabs(total - 1.0) < 1e-12);

  // Bitwise reproducibility.
  std::string first = slurp("treeskew.csv");
  CHECK(cmd_treeskew(config) == kExitOk);
  CHECK(slurp("treeskew.csv") == first);
  std::remove("treeskew.csv");
}

TEST_CASE("match subcommand") {
  MatchConfig config;
  config.common.seed = 9;
  config.size = 4;
  config.gamma = 0.5;
  MatchResult result = run_match(config);

  // Row and column sums of the Sinkhorn matrix.
  for (int i = 0; i < 4; ++i) {
    double rs = 0.0, cs = 0.0;
    for (int j = 0; j < 4; ++j) {
      rs += result.sinkhorn_matrix.at(i, j);
      cs += result.sinkhorn_matrix.at(j, i);
    }
    CHECK(std::fabs(rs - 1.0) < 1e-7);
    CHECK(std::fabs(cs - 1.0) < 1e-7);
  }
  CHECK(result.sparsemap_support <= 17);  // m^2 + 1

  // Identical embedding lists with distinct rows: both relaxations
  // near-identity, hard matching exactly the identity.
  nlohmann::json emb;
  Rng rng(10);
  std::vector<Vec> a(3, Vec(6));
  for (auto& row : a)
    for (double& x : row) x = 2.0 * rng.gaussian();
  emb["a"] = a;
  emb["b"] = a;
  {
    std::ofstream out("embeddings.json");
    out << emb.dump();
  }
  MatchConfig same;
  same.gamma = 0.05;
  same.embeddings_path = "embeddings.json";
  MatchResult ident = run_match(same);
  for (int i = 0; i < 3; ++i) {
    CHECK(ident.hard_permutation[i] == i);
    for (int j = 0; j < 3; ++j) {
      double target = i == j ? 1.0 : 0.0;
      CHECK(std::fabs(ident.sinkhorn_matrix.at(i, j) - target) < 0.05);
      CHECK(std::fabs(ident.sparsemap_matrix.at(i, j) - target) < 1e-6);
    }
  }
  std::remove("embeddings.json");

  // JSON emission parses and is reproducible.
  config.common.out_path = "match.json";
  CHECK(cmd_match(config) == kExitOk);
  nlohmann::json j = nlohmann::json::parse(slurp("match.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["sinkhorn_converged"] == true);
  std::string first = slurp("match.json");
  CHECK(cmd_match(config) == kExitOk);
  CHECK(slurp("match.json") == first);
  std::remove("match.json");

  // Ragged embeddings are a config error.
  nlohmann::json bad;
  bad["a"] = std::vector<Vec>{{1.0, 2.0}, {3.0}};
  bad["b"] = std::vector<Vec>{{1.0, 2.0}, {3.0, 4.0}};
  {
    std::ofstream out("bad.json");
    out << bad.dump();
  }
  MatchConfig broken;
  broken.embeddings_path = "bad.json";
  CHECK_THROWS_AS(run_match(broken), std::invalid_argument);
  std::remove("bad.json");
}

TEST_CASE("spearman helper") {
  CHECK(spearman_rho({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(std::fabs(spearman_rho({1, 2, 3, 4, 5},
                               {3, 1, 4, 1, 5})) < 0.9);
}
