#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "latstruct/csv.hpp"
#include "latstruct/estimators.hpp"
#include "latstruct/harness.hpp"
#include "latstruct/stats.hpp"

namespace latstruct {

namespace {

struct Problem {
  std::unique_ptr<StructDomain> domain;
  Vec scores;
  Vec w, a;  // g(z) = <w, z> + sin(<a, z>) + offset
  // The shipped problem is peaked: a large common offset that a good
  // control variate removes.
  double offset = 10.0;
};

Problem make_problem(const EstimatorsConfig& config) {
  Problem p;
  Rng rng(config.common.seed ^ 0x7f4a7c15u);
  if (config.problem == "one_of_k") {
    p.domain = std::make_unique<OneOfKDomain>(config.k);
  } else if (config.problem == "bit_vector") {
    p.domain = std::make_unique<BitVectorDomain>(config.d);
  } else {
    throw std::invalid_argument("estimators: unknown problem '" +
                                config.problem + "'");
  }
  const int n = p.domain->part_count();
  p.scores.resize(n);
  p.w.resize(n);
  p.a.resize(n);
  for (int i = 0; i < n; ++i) {
    p.scores[i] = rng.gaussian();
    p.w[i] = 2.0 * rng.gaussian();
    p.a[i] = rng.gaussian();
  }
  return p;
}

DownstreamFn make_decoder(const Problem& p) {
  Vec w = p.w, a = p.a;
  double offset = p.offset;
  DownstreamFn g;
  g.value = [w, a, offset](const Vec& z) {
    return dot(w, z) + std::sin(dot(a, z)) + offset;
  };
  g.grad = [w, a](const Vec& z) {
    double c = std::cos(dot(a, z));
    Vec out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] + c * a[i];
    return out;
  };
  return g;
}

struct ReplicateOut {
  Vec gradient;
  double variance = 0.0;
  double calls = 0.0;
};

using ReplicateFn = std::function<ReplicateOut(Rng&, const DownstreamFn&)>;

EstimatorsRow bench_one(const std::string& name, const Problem& problem,
                        const Vec& reference, int replicates, int jobs,
                        std::uint64_t seed, const ReplicateFn& fn) {
  std::vector<ReplicateOut> outs(replicates);
  std::vector<Rng> rngs;
  Rng master(seed);
  for (int r = 0; r < replicates; ++r) rngs.push_back(master.split());

  auto t0 = std::chrono::steady_clock::now();
  auto work = [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      DownstreamFn g = make_decoder(problem);
      outs[r] = fn(rngs[r], g);
    }
  };
  if (jobs <= 1) {
    work(0, replicates);
  } else {
    std::vector<std::thread> threads;
    int per = (replicates + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t) {
      int begin = t * per, end = std::min(replicates, begin + per);
      if (begin >= end) break;
      threads.emplace_back(work, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  auto t1 = std::chrono::steady_clock::now();

  const int p = static_cast<int>(reference.size());
  Vec mean_grad(p, 0.0);
  double variance = 0.0, calls = 0.0;
  for (const ReplicateOut& o : outs) {
    for (int j = 0; j < p; ++j) mean_grad[j] += o.gradient[j] / replicates;
    variance += o.variance / replicates;
    calls += o.calls / replicates;
  }
  // Standard error of the across-replicate mean, worst coordinate.
  double worst_se = 0.0;
  if (replicates > 1) {
    for (int j = 0; j < p; ++j) {
      double ss = 0.0;
      for (const ReplicateOut& o : outs) {
        double d = o.gradient[j] - mean_grad[j];
        ss += d * d;
      }
      worst_se = std::max(worst_se,
                          std::sqrt(ss / (replicates - 1) / replicates));
    }
  }

  EstimatorsRow row;
  row.name = name;
  row.bias = linf_norm(sub(mean_grad, reference));
  row.bias_se = worst_se;
  row.variance = variance;
  row.decoder_calls = calls;
  row.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

}  // namespace

EstimatorsResult run_estimator_bench(const EstimatorsConfig& config) {
  Problem problem = make_problem(config);
  const StructDomain& dom = *problem.domain;
  const Vec& s = problem.scores;
  const int S = config.samples;

  DownstreamFn g0 = make_decoder(problem);
  EstimatorReport exact = explicit_marginal(dom, s, g0);

  EstimatorsResult result;
  result.explicit_gradient = exact.gradient;

  auto add = [&](const std::string& name, const ReplicateFn& fn) {
    result.rows.push_back(bench_one(name, problem, exact.gradient,
                                    config.replicates, config.common.jobs,
                                    config.common.seed ^ std::hash<std::string>{}(name),
                                    fn));
  };

  add("explicit", [&](Rng&, const DownstreamFn& g) {
    EstimatorReport rep = explicit_marginal(dom, s, g);
    return ReplicateOut{rep.gradient, rep.variance,
                        static_cast<double>(rep.decoder_calls)};
  });

  auto add_sfe = [&](const std::string& name, BaselineConfig base) {
    add(name, [&, base](Rng& rng, const DownstreamFn& g) mutable {
      if (base.kind == BaselineConfig::Kind::kEma && !base.ema_initialized) {
        // Warm the running value on an independent batch, then freeze.
        BaselineConfig warm = base;
        Rng wrng = rng.split();
        EstimatorReport warmup = sfe_gradient(dom, s, g, 64, warm, wrng);
        base.ema_state = mean(warmup.per_sample_values);
        base.ema_initialized = true;
      }
      EstimatorReport rep = sfe_gradient(dom, s, g, S, base, rng);
      return ReplicateOut{rep.gradient, rep.variance,
                          static_cast<double>(rep.decoder_calls)};
    });
  };
  add_sfe("sfe", BaselineConfig{});
  add_sfe("sfe_ema",
          BaselineConfig{BaselineConfig::Kind::kEma, 0.0, 0.9, 0.0, false});
  add_sfe("sfe_self_critic",
          BaselineConfig{BaselineConfig::Kind::kSelfCritic, 0.0, 0.9, 0.0,
                         false});
  add_sfe("sfe_sample_critic",
          BaselineConfig{BaselineConfig::Kind::kSampleCritic, 0.0, 0.9, 0.0,
                         false});

  add("sum_and_sample_m2", [&](Rng& rng, const DownstreamFn& g) {
    Vec grad(dom.part_count(), 0.0);
    double var_acc = 0.0;
    long calls0 = g.call_count();
    for (int i = 0; i < S; ++i) {
      EstimatorReport rep = sum_and_sample(dom, s, g, 2, rng, 1);
      for (std::size_t j = 0; j < grad.size(); ++j)
        grad[j] += rep.gradient[j] / S;
      var_acc += rep.variance / S;
    }
    return ReplicateOut{grad, var_acc,
                        static_cast<double>(g.call_count() - calls0) / S};
  });

  add("st_gumbel", [&](Rng& rng, const DownstreamFn& g) {
    Vec grad(dom.part_count(), 0.0);
    long calls0 = g.call_count();
    for (int i = 0; i < S; ++i) {
      DiffStruct zst = st_gumbel(s, 1.0, rng);
      Vec zv = to_vec(zst.value);
      g(zv);
      Vec v = g.grad(zv);
      Vec c = zst.pullback(v);
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += c[j] / S;
    }
    return ReplicateOut{grad, 0.0,
                        static_cast<double>(g.call_count() - calls0) / 1.0 / S};
  });

  add("imle", [&](Rng& rng, const DownstreamFn& g) {
    Vec grad(dom.part_count(), 0.0);
    long calls0 = g.call_count();
    for (int i = 0; i < S; ++i) {
      DiffStruct z = imle(dom, s, 1.0, 1.0, rng);
      Vec zv = to_vec(z.value);
      g(zv);
      Vec v = g.grad(zv);
      Vec c = z.pullback(v);
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += c[j] / S;
    }
    return ReplicateOut{grad, 0.0,
                        static_cast<double>(g.call_count() - calls0) / S};
  });

  add("sparsemax_marginal", [&](Rng&, const DownstreamFn& g) {
    EstimatorReport rep = sparsemax_marginal(dom, s, g);
    return ReplicateOut{rep.gradient, rep.variance,
                        static_cast<double>(rep.decoder_calls)};
  });

  add("sparsemap_marginal", [&](Rng&, const DownstreamFn& g) {
    EstimatorReport rep = sparsemap_marginal(dom, s, g);
    return ReplicateOut{rep.gradient, rep.variance,
                        static_cast<double>(rep.decoder_calls)};
  });

  return result;
}

int cmd_estimators(const EstimatorsConfig& config) {
  EstimatorsResult result = run_estimator_bench(config);

  std::ostringstream buf;
  CsvWriter csv(buf);
  std::vector<std::string> header = {"estimator", "bias", "bias_se",
                                     "variance", "decoder_calls"};
  if (config.timings) header.push_back("wall_ms");
  csv.row(header);
  for (const EstimatorsRow& row : result.rows) {
    std::vector<std::string> cells = {
        row.name, CsvWriter::num(row.bias), CsvWriter::num(row.bias_se),
        CsvWriter::num(row.variance), CsvWriter::num(row.decoder_calls)};
    if (config.timings) cells.push_back(CsvWriter::num(row.wall_ms));
    csv.row(cells);
  }

  if (config.common.out_path.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream out(config.common.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "estimators: cannot open " << config.common.out_path
                << "\n";
      return kExitConfigError;
    }
    out << buf.str();
  }
  return kExitOk;
}

}  // namespace latstruct
