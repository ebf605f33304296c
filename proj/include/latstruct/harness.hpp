#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latstruct/tensor.hpp"

namespace latstruct {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

struct CommonConfig {
  std::uint64_t seed = 0;
  std::string out_path;          // empty writes to stdout
  std::string format = "json";   // "json" or "csv"
  int jobs = 1;
};

// ---------------------------------------------------------------------------
// gradcheck: finite-difference checks for every exact layer; surrogate layers
// listed as skipped-by-design.

struct GradcheckConfig {
  CommonConfig common;
  int points = 20;
  double tolerance = 1e-4;
};

struct GradcheckRow {
  std::string name;
  std::string status;  // "pass" | "fail" | "skipped_by_design"
  double max_rel_err = 0.0;
  int points = 0;
};

struct GradcheckResult {
  std::vector<GradcheckRow> rows;
  bool all_pass = true;
};

GradcheckResult run_gradcheck_checks(const GradcheckConfig& config);
int cmd_gradcheck(const GradcheckConfig& config);

// ---------------------------------------------------------------------------
// estimators: bias / variance / decoder-call / wall-time table on an
// enumerable test problem.

struct EstimatorsConfig {
  CommonConfig common;
  std::string problem = "one_of_k";  // "one_of_k" | "bit_vector"
  int k = 6;
  int d = 3;
  int samples = 2000;
  int replicates = 20;
  bool timings = true;
};

struct EstimatorsRow {
  std::string name;
  double bias = 0.0;       // ||mean gradient - explicit gradient||_inf
  double bias_se = 0.0;    // largest per-coordinate standard error
  double variance = 0.0;   // mean per-sample variance across replicates
  double decoder_calls = 0.0;
  double wall_ms = 0.0;
};

struct EstimatorsResult {
  std::vector<EstimatorsRow> rows;
  Vec explicit_gradient;
};

EstimatorsResult run_estimator_bench(const EstimatorsConfig& config);
int cmd_estimators(const EstimatorsConfig& config);

// ---------------------------------------------------------------------------
// game: single-token communication game with linear encoder/decoder over
// frozen random features.

struct GameConfig {
  CommonConfig common;
  int images = 4;
  int codes = 16;
  int feature_dim = 16;
  std::string estimator = "explicit";  // explicit|sparsemax|sfe|st_gumbel
  double lr = 0.1;
  int steps = 2000;
  int eval_every = 50;
  int samples = 4;  // per-step samples for the sampling estimators
};

struct GameRow {
  int step = 0;
  double loss = 0.0;
  double success = 0.0;
  double decoder_calls = 0.0;  // average per step since the last eval
};

struct GameResult {
  std::vector<GameRow> rows;
  double final_success = 0.0;
  bool diverged = false;
};

GameResult play_game(const GameConfig& config);
int cmd_game(const GameConfig& config);

// ---------------------------------------------------------------------------
// treeskew: exact shift-reduce tree distribution.

struct TreeSkewConfig {
  CommonConfig common;
  int leaves = 5;
  double p_shift = 0.5;
};

int cmd_treeskew(const TreeSkewConfig& config);

// ---------------------------------------------------------------------------
// match: relaxed bipartite matching (Sinkhorn vs SparseMAP vs hard matching).

struct MatchConfig {
  CommonConfig common;
  int size = 5;
  int embed_dim = 8;
  double gamma = 0.5;
  std::string embeddings_path;  // optional JSON {"a": [[..]], "b": [[..]]}
};

struct MatchResult {
  Tensor scores;
  Tensor sinkhorn_matrix;
  bool sinkhorn_converged = false;
  Tensor sparsemap_matrix;
  int sparsemap_support = 0;
  std::vector<int> hard_permutation;
};

MatchResult run_match(const MatchConfig& config);
int cmd_match(const MatchConfig& config);

}  // namespace latstruct
