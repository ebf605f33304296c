#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "latstruct/harness.hpp"

namespace {

void add_common(CLI::App* cmd, latstruct::CommonConfig& common) {
  cmd->add_option("--seed", common.seed, "64-bit RNG seed");
  cmd->add_option("--out", common.out_path, "output file (default stdout)");
  cmd->add_option("--format", common.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--jobs", common.jobs, "parallel independent replicates")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latstruct: oracles, relaxations and estimators for discrete "
               "latent structure"};
  app.require_subcommand(1);

  latstruct::GradcheckConfig gradcheck;
  CLI::App* cmd_gc = app.add_subcommand(
      "gradcheck", "finite-difference checks for every exact layer");
  add_common(cmd_gc, gradcheck.common);
  cmd_gc->add_option("--points", gradcheck.points, "random inputs per layer");
  cmd_gc->add_option("--tol", gradcheck.tolerance, "pass tolerance");

  latstruct::EstimatorsConfig estimators;
  estimators.common.format = "csv";
  CLI::App* cmd_est = app.add_subcommand(
      "estimators", "bias/variance/decoder-call table on an enumerable "
                    "problem");
  add_common(cmd_est, estimators.common);
  cmd_est->add_option("--problem", estimators.problem, "test problem")
      ->check(CLI::IsMember({"one_of_k", "bit_vector"}));
  cmd_est->add_option("--k", estimators.k, "one-of-K size");
  cmd_est->add_option("--d", estimators.d, "bit-vector size");
  cmd_est->add_option("--samples", estimators.samples, "samples per replicate");
  cmd_est->add_option("--replicates", estimators.replicates, "replicates");
  cmd_est->add_flag("--no-timings{false}", estimators.timings,
                    "omit the wall-time column");

  latstruct::GameConfig game;
  game.common.format = "csv";
  CLI::App* cmd_gm = app.add_subcommand(
      "game", "single-token communication game learning curves");
  add_common(cmd_gm, game.common);
  cmd_gm->add_option("--images", game.images, "images per trial (N)");
  cmd_gm->add_option("--codes", game.codes, "code vocabulary size (K)");
  cmd_gm->add_option("--feature-dim", game.feature_dim, "feature dimension");
  cmd_gm->add_option("--estimator", game.estimator, "training estimator")
      ->check(CLI::IsMember({"explicit", "sparsemax", "sfe", "st_gumbel"}));
  cmd_gm->add_option("--lr", game.lr, "SGD step size");
  cmd_gm->add_option("--steps", game.steps, "training steps");
  cmd_gm->add_option("--eval-every", game.eval_every, "evaluation period");
  cmd_gm->add_option("--samples", game.samples, "samples per step");

  latstruct::TreeSkewConfig treeskew;
  treeskew.common.format = "csv";
  CLI::App* cmd_ts = app.add_subcommand(
      "treeskew", "exact shift-reduce distribution over binary trees");
  add_common(cmd_ts, treeskew.common);
  cmd_ts->add_option("--leaves", treeskew.leaves, "leaf count N (<= 12)");
  cmd_ts->add_option("--p-shift", treeskew.p_shift,
                     "shift probability modulo admissibility");

  latstruct::MatchConfig match;
  CLI::App* cmd_mt = app.add_subcommand(
      "match", "relaxed bipartite matching: Sinkhorn vs SparseMAP vs hard");
  add_common(cmd_mt, match.common);
  cmd_mt->add_option("--size", match.size, "token count per side");
  cmd_mt->add_option("--embed-dim", match.embed_dim, "embedding dimension");
  cmd_mt->add_option("--gamma", match.gamma, "Sinkhorn temperature");
  cmd_mt->add_option("--embeddings", match.embeddings_path,
                     "JSON file with fields a, b (lists of equal-length rows)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gc->parsed()) return latstruct::cmd_gradcheck(gradcheck);
    if (cmd_est->parsed()) return latstruct::cmd_estimators(estimators);
    if (cmd_gm->parsed()) return latstruct::cmd_game(game);
    if (cmd_ts->parsed()) return latstruct::cmd_treeskew(treeskew);
    if (cmd_mt->parsed()) return latstruct::cmd_match(match);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return latstruct::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return latstruct::kExitCheckFailed;
  }
  return latstruct::kExitConfigError;
}
