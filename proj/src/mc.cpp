#include "relsens/mc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "relsens/errors.hpp"

namespace relsens {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t stream) {
  return splitmix64(splitmix64(seed ^ (block + 1)) ^ (stream * 0x517CC1B727220A95ULL + 1));
}

template <class Fn>
void run_blocks(int n_blocks, Fn&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n_blocks)));
  std::vector<std::future<void>> futures;
  futures.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    futures.push_back(std::async(std::launch::async, [&body, t, workers, n_blocks]() {
      for (int b = t; b < n_blocks; b += workers) body(b);
    }));
  }
  for (auto& f : futures) f.get();
}

}  // namespace

int indicator(const SystemDefinition& system, const std::vector<double>& g) {
  if (static_cast<int>(g.size()) != system.m) {
    throw DimensionMismatchError("mc: indicator needs one value per component");
  }
  for (const auto& cut : system.cut_sets) {
    bool all_failed = true;
    for (int idx : cut) {
      if (g[static_cast<std::size_t>(idx)] > 0.0) {
        all_failed = false;
        break;
      }
    }
    if (all_failed) return 1;
  }
  return 0;
}

McEstimate crude_mc_probability(const ReliabilityProblem& problem, long long n_samples,
                                std::uint64_t seed) {
  if (n_samples < 1000) {
    throw InvalidArgumentError("mc: crude Monte Carlo needs at least 10^3 samples");
  }
  problem.validate();
  const int n = problem.n();
  const int m = problem.m();

  const int n_blocks = 256;
  const long long base = n_samples / n_blocks;
  const long long rem = n_samples % n_blocks;
  std::vector<long long> hits(n_blocks, 0);

  run_blocks(n_blocks, [&](int b) {
    std::mt19937_64 rng(block_seed(seed, static_cast<std::uint64_t>(b), 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    const long long count = base + (b < rem ? 1 : 0);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> g(static_cast<std::size_t>(m));
    long long h = 0;
    for (long long s = 0; s < count; ++s) {
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] =
            problem.inputs.marginals[static_cast<std::size_t>(i)].from_u(normal(rng));
      }
      for (int k = 0; k < m; ++k) {
        g[static_cast<std::size_t>(k)] =
            problem.limit_states[static_cast<std::size_t>(k)].evaluate_raw(x);
      }
      h += indicator(problem.system, g);
    }
    hits[static_cast<std::size_t>(b)] = h;
  });

  long long total = 0;
  for (long long h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(n_samples);
  McEstimate est;
  est.value = p;
  est.std_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n_samples));
  est.n_samples = n_samples;
  est.seed = seed;
  return est;
}

PickFreezeEstimates pick_freeze_indices(const ReliabilityProblem& problem, long long n_samples,
                                        std::uint64_t seed) {
  if (n_samples < 10'000) {
    throw InvalidArgumentError("mc: pick-freeze needs at least 10^4 base samples");
  }
  problem.validate();
  const int n = problem.n();
  const int m = problem.m();
  const int n_batches = 20;

  struct BatchSums {
    long long fail_a = 0;
    long long fail_b = 0;
    long long count = 0;
    std::vector<double> cov;   // sum y_B (y_Ci - y_A) per variable
    std::vector<double> diff2; // sum (y_A - y_Ci)^2 per variable
  };
  std::vector<BatchSums> batches(n_batches);
  for (auto& bs : batches) {
    bs.cov.assign(static_cast<std::size_t>(n), 0.0);
    bs.diff2.assign(static_cast<std::size_t>(n), 0.0);
  }

  const long long base = n_samples / n_batches;
  const long long rem = n_samples % n_batches;

  run_blocks(n_batches, [&](int b) {
    std::mt19937_64 rng_a(block_seed(seed, static_cast<std::uint64_t>(b), 1));
    std::mt19937_64 rng_b(block_seed(seed, static_cast<std::uint64_t>(b), 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    BatchSums& bs = batches[static_cast<std::size_t>(b)];
    bs.count = base + (b < rem ? 1 : 0);
    std::vector<double> xa(static_cast<std::size_t>(n)), xb(static_cast<std::size_t>(n)),
        xc(static_cast<std::size_t>(n));
    std::vector<double> g(static_cast<std::size_t>(m));
    const auto eval_indicator = [&](const std::vector<double>& x) {
      for (int k = 0; k < m; ++k) {
        g[static_cast<std::size_t>(k)] =
            problem.limit_states[static_cast<std::size_t>(k)].evaluate_raw(x);
      }
      return indicator(problem.system, g);
    };
    for (long long s = 0; s < bs.count; ++s) {
      for (int i = 0; i < n; ++i) {
        const auto& marg = problem.inputs.marginals[static_cast<std::size_t>(i)];
        xa[static_cast<std::size_t>(i)] = marg.from_u(normal(rng_a));
        xb[static_cast<std::size_t>(i)] = marg.from_u(normal(rng_b));
      }
      const int ya = eval_indicator(xa);
      const int yb = eval_indicator(xb);
      bs.fail_a += ya;
      bs.fail_b += yb;
      for (int i = 0; i < n; ++i) {
        xc = xa;
        xc[static_cast<std::size_t>(i)] = xb[static_cast<std::size_t>(i)];
        const int yc = eval_indicator(xc);
        bs.cov[static_cast<std::size_t>(i)] += static_cast<double>(yb * (yc - ya));
        const int d = ya - yc;
        bs.diff2[static_cast<std::size_t>(i)] += static_cast<double>(d * d);
      }
    }
  });

  long long fails = 0;
  long long count = 0;
  std::vector<double> cov(static_cast<std::size_t>(n), 0.0);
  std::vector<double> diff2(static_cast<std::size_t>(n), 0.0);
  for (const auto& bs : batches) {
    fails += bs.fail_a + bs.fail_b;
    count += bs.count;
    for (int i = 0; i < n; ++i) {
      cov[static_cast<std::size_t>(i)] += bs.cov[static_cast<std::size_t>(i)];
      diff2[static_cast<std::size_t>(i)] += bs.diff2[static_cast<std::size_t>(i)];
    }
  }
  const double p = static_cast<double>(fails) / static_cast<double>(2 * count);
  if (p <= 0.0 || p >= 1.0) {
    throw DegenerateVarianceError("mc: pick-freeze sampled no (or only) failures");
  }
  const double variance = p * (1.0 - p);

  PickFreezeEstimates out;
  out.p.value = p;
  out.p.std_error = std::sqrt(variance / static_cast<double>(2 * count));
  out.p.n_samples = 2 * count;
  out.p.seed = seed;
  out.evaluations = count * (n + 2);

  // Batch spread around the pooled estimate gives the standard errors.
  for (int i = 0; i < n; ++i) {
    const double s_full = cov[static_cast<std::size_t>(i)] / static_cast<double>(count) / variance;
    const double st_full =
        diff2[static_cast<std::size_t>(i)] / (2.0 * static_cast<double>(count)) / variance;
    double s_var = 0.0, st_var = 0.0;
    int used = 0;
    for (const auto& bs : batches) {
      if (bs.count == 0) continue;
      const double pb =
          static_cast<double>(bs.fail_a + bs.fail_b) / static_cast<double>(2 * bs.count);
      const double vb = std::max(pb * (1.0 - pb), 1e-300);
      const double sb = bs.cov[static_cast<std::size_t>(i)] / static_cast<double>(bs.count) / vb;
      const double stb =
          bs.diff2[static_cast<std::size_t>(i)] / (2.0 * static_cast<double>(bs.count)) / vb;
      s_var += (sb - s_full) * (sb - s_full);
      st_var += (stb - st_full) * (stb - st_full);
      ++used;
    }
    const double denom = static_cast<double>(used) * static_cast<double>(std::max(used - 1, 1));
    McEstimate si;
    si.value = s_full;
    si.std_error = std::sqrt(s_var / denom);
    si.n_samples = count;
    si.seed = seed;
    McEstimate sti;
    sti.value = st_full;
    sti.std_error = std::sqrt(st_var / denom);
    sti.n_samples = count;
    sti.seed = seed;
    out.first_order.push_back(si);
    out.total_effect.push_back(sti);
  }
  return out;
}

}  // namespace relsens
