#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "latstruct/csv.hpp"
#include "latstruct/estimators.hpp"
#include "latstruct/harness.hpp"
#include "latstruct/simplex.hpp"
#include "latstruct/stats.hpp"

namespace latstruct {

namespace {

// Player 1 sees image t among N frozen random feature vectors, emits a code
// from a vocabulary of K; player 2 scores every image against the code and
// answers with the argmax. Linear encoder W (K x d) and bilinear decoder
// V (d x K); communication succeeds when the answer is t. With everything
// linear and the features frozen, explicit marginalization is exact.
struct GameState {
  int n, k, d;
  std::vector<Vec> features;  // n rows of length d
  std::vector<Vec> enc;       // k rows of length d (encoder W)
  std::vector<Vec> dec;       // d rows of length k (decoder V)
};

GameState init_game(const GameConfig& config) {
  GameState st;
  st.n = config.images;
  st.k = config.codes;
  st.d = config.feature_dim;
  if (st.n < 2 || st.k < 2)
    throw std::invalid_argument("game: need at least 2 images and 2 codes");
  Rng rng(config.common.seed ^ 0x67e6c7a9u);
  double fscale = 1.0 / std::sqrt(static_cast<double>(st.d));
  st.features.assign(st.n, Vec(st.d));
  for (auto& row : st.features)
    for (double& x : row) x = rng.gaussian();
  st.enc.assign(st.k, Vec(st.d));
  for (auto& row : st.enc)
    for (double& x : row) x = fscale * rng.gaussian();
  st.dec.assign(st.d, Vec(st.k));
  for (auto& row : st.dec)
    for (double& x : row) x = fscale * rng.gaussian();
  return st;
}

Vec encoder_scores(const GameState& st, int target) {
  Vec s(st.k);
  for (int c = 0; c < st.k; ++c) s[c] = dot(st.enc[c], st.features[target]);
  return s;
}

// Listener scores u_i = <x_i, V z> for a (possibly relaxed) code z.
Vec listener_scores(const GameState& st, const Vec& code) {
  Vec vz(st.d, 0.0);
  for (int r = 0; r < st.d; ++r) vz[r] = dot(st.dec[r], code);
  Vec u(st.n);
  for (int i = 0; i < st.n; ++i) u[i] = dot(st.features[i], vz);
  return u;
}

struct Eval {
  double loss = 0.0;
  Vec grad_code;            // d loss / d z (length k)
  std::vector<Vec> grad_dec;  // d loss / d V (d rows of length k)
};

Eval eval_code(const GameState& st, const Vec& code, int target,
               bool want_grads) {
  Eval ev;
  Vec u = listener_scores(st, code);
  double lz = logsumexp(u);
  ev.loss = -u[target] + lz;
  if (!want_grads) return ev;
  Vec p = softmax(u);
  p[target] -= 1.0;  // d loss / d u
  // d loss / d z = V^T X^T (p - e_t)
  Vec xtp(st.d, 0.0);
  for (int i = 0; i < st.n; ++i)
    for (int r = 0; r < st.d; ++r) xtp[r] += st.features[i][r] * p[i];
  ev.grad_code.assign(st.k, 0.0);
  for (int r = 0; r < st.d; ++r)
    for (int c = 0; c < st.k; ++c) ev.grad_code[c] += st.dec[r][c] * xtp[r];
  // d loss / d V = X^T (p - e_t) z^T
  ev.grad_dec.assign(st.d, Vec(st.k, 0.0));
  for (int r = 0; r < st.d; ++r)
    for (int c = 0; c < st.k; ++c) ev.grad_dec[r][c] = xtp[r] * code[c];
  return ev;
}

Vec one_hot(int k, int idx) {
  Vec z(k, 0.0);
  z[idx] = 1.0;
  return z;
}

double eval_success(const GameState& st) {
  int correct = 0;
  for (int t = 0; t < st.n; ++t) {
    Vec s = encoder_scores(st, t);
    int code = 0;
    for (int c = 1; c < st.k; ++c)
      if (s[c] > s[code]) code = c;
    Vec u = listener_scores(st, one_hot(st.k, code));
    int answer = 0;
    for (int i = 1; i < st.n; ++i)
      if (u[i] > u[answer]) answer = i;
    if (answer == t) ++correct;
  }
  return static_cast<double>(correct) / st.n;
}

struct StepGrads {
  Vec grad_scores;            // length k
  std::vector<Vec> grad_dec;  // d x k
  double loss = 0.0;
  long decoder_calls = 0;
};

StepGrads step_explicit(const GameState& st, const Vec& s, int target) {
  StepGrads out;
  Vec p = softmax(s);
  out.grad_scores.assign(st.k, 0.0);
  out.grad_dec.assign(st.d, Vec(st.k, 0.0));
  Vec losses(st.k);
  for (int c = 0; c < st.k; ++c) {
    Eval ev = eval_code(st, one_hot(st.k, c), target, true);
    losses[c] = ev.loss;
    out.loss += p[c] * ev.loss;
    for (int r = 0; r < st.d; ++r)
      for (int cc = 0; cc < st.k; ++cc)
        out.grad_dec[r][cc] += p[c] * ev.grad_dec[r][cc];
    ++out.decoder_calls;
  }
  double expected = out.loss;
  for (int c = 0; c < st.k; ++c)
    out.grad_scores[c] = p[c] * (losses[c] - expected);
  return out;
}

StepGrads step_sparsemax(const GameState& st, const Vec& s, int target) {
  StepGrads out;
  EntmaxSolution sol = sparsemax(s);
  out.grad_scores.assign(st.k, 0.0);
  out.grad_dec.assign(st.d, Vec(st.k, 0.0));
  Vec losses;
  for (int c : sol.support) {
    Eval ev = eval_code(st, one_hot(st.k, c), target, true);
    losses.push_back(ev.loss);
    out.loss += sol.probs[c] * ev.loss;
    for (int r = 0; r < st.d; ++r)
      for (int cc = 0; cc < st.k; ++cc)
        out.grad_dec[r][cc] += sol.probs[c] * ev.grad_dec[r][cc];
    ++out.decoder_calls;
  }
  double m = mean(losses);
  for (std::size_t i = 0; i < sol.support.size(); ++i)
    out.grad_scores[sol.support[i]] = losses[i] - m;
  return out;
}

StepGrads step_sfe(const GameState& st, const Vec& s, int target, int samples,
                   Rng& rng) {
  StepGrads out;
  Vec p = softmax(s);
  out.grad_scores.assign(st.k, 0.0);
  out.grad_dec.assign(st.d, Vec(st.k, 0.0));
  // Self-critic baseline: the greedy code.
  int map_code = 0;
  for (int c = 1; c < st.k; ++c)
    if (s[c] > s[map_code]) map_code = c;
  double baseline = eval_code(st, one_hot(st.k, map_code), target, false).loss;
  ++out.decoder_calls;
  for (int i = 0; i < samples; ++i) {
    int c = rng.categorical(p);
    Eval ev = eval_code(st, one_hot(st.k, c), target, true);
    ++out.decoder_calls;
    out.loss += ev.loss / samples;
    double w = (ev.loss - baseline) / samples;
    for (int cc = 0; cc < st.k; ++cc)
      out.grad_scores[cc] += w * ((cc == c ? 1.0 : 0.0) - p[cc]);
    for (int r = 0; r < st.d; ++r)
      for (int cc = 0; cc < st.k; ++cc)
        out.grad_dec[r][cc] += ev.grad_dec[r][cc] / samples;
  }
  return out;
}

StepGrads step_st_gumbel(const GameState& st, const Vec& s, int target,
                         int samples, Rng& rng) {
  StepGrads out;
  out.grad_scores.assign(st.k, 0.0);
  out.grad_dec.assign(st.d, Vec(st.k, 0.0));
  for (int i = 0; i < samples; ++i) {
    DiffStruct z = st_gumbel(s, 1.0, rng);
    Vec zv = to_vec(z.value);
    Eval ev = eval_code(st, zv, target, true);
    ++out.decoder_calls;
    out.loss += ev.loss / samples;
    Vec c = z.pullback(ev.grad_code);
    for (int cc = 0; cc < st.k; ++cc) out.grad_scores[cc] += c[cc] / samples;
    for (int r = 0; r < st.d; ++r)
      for (int cc = 0; cc < st.k; ++cc)
        out.grad_dec[r][cc] += ev.grad_dec[r][cc] / samples;
  }
  return out;
}

}  // namespace

GameResult play_game(const GameConfig& config) {
  GameState st = init_game(config);
  Rng rng(config.common.seed);

  GameResult result;
  double calls_window = 0.0;
  int window = 0;
  for (int step = 1; step <= config.steps; ++step) {
    int target = static_cast<int>(rng.next_u64() % st.n);
    Vec s = encoder_scores(st, target);

    StepGrads grads;
    if (config.estimator == "explicit") {
      grads = step_explicit(st, s, target);
    } else if (config.estimator == "sparsemax") {
      grads = step_sparsemax(st, s, target);
    } else if (config.estimator == "sfe") {
      grads = step_sfe(st, s, target, config.samples, rng);
    } else if (config.estimator == "st_gumbel") {
      grads = step_st_gumbel(st, s, target, config.samples, rng);
    } else {
      throw std::invalid_argument("game: unknown estimator '" +
                                  config.estimator + "'");
    }
    if (!std::isfinite(grads.loss)) {
      result.diverged = true;
      break;
    }

    // Plain stochastic gradient on the encoder and decoder.
    for (int c = 0; c < st.k; ++c)
      for (int r = 0; r < st.d; ++r)
        st.enc[c][r] -= config.lr * grads.grad_scores[c] * st.features[target][r];
    for (int r = 0; r < st.d; ++r)
      for (int c = 0; c < st.k; ++c)
        st.dec[r][c] -= config.lr * grads.grad_dec[r][c];

    calls_window += static_cast<double>(grads.decoder_calls);
    ++window;
    if (step % config.eval_every == 0 || step == config.steps) {
      GameRow row;
      row.step = step;
      row.loss = grads.loss;
      row.success = eval_success(st);
      row.decoder_calls = calls_window / window;
      result.rows.push_back(row);
      calls_window = 0.0;
      window = 0;
    }
  }
  if (!result.rows.empty()) result.final_success = result.rows.back().success;
  return result;
}

int cmd_game(const GameConfig& config) {
  GameResult result = play_game(config);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.row({"step", "loss", "success", "decoder_calls_per_step"});
  for (const GameRow& row : result.rows)
    csv.row({CsvWriter::num(static_cast<long>(row.step)),
             CsvWriter::num(row.loss), CsvWriter::num(row.success),
             CsvWriter::num(row.decoder_calls)});

  if (config.common.out_path.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream out(config.common.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "game: cannot open " << config.common.out_path << "\n";
      return kExitConfigError;
    }
    out << buf.str();
  }
  if (result.diverged) {
    std::cerr << "game: loss diverged (non-finite); aborted\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace latstruct
