#include "relsens/mvn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "relsens/errors.hpp"
#include "relsens/normal.hpp"

namespace relsens {

namespace {

constexpr double kDuplicateTol = 1e-12;  // corr within this of 1 collapses
constexpr double kPsdTol = -1e-10;       // eigenvalues below this are an error
constexpr double kJitterTrigger = 1e-8;  // jitter when min eigenvalue is below
constexpr double kJitter = 1e-10;
constexpr double kPivotTol = 1e-10;      // conditional variance treated as zero
constexpr double kDegenerateSlack = 1e-9;

const double kSqrtPrimes[] = {
    1.4142135623730951, 1.7320508075688772, 2.23606797749979,  2.6457513110645907,
    3.3166247903554,    3.605551275463989,  4.123105625617661, 4.358898943540674,
    4.795831523312719,  5.385164807134504,  5.5677643628300215, 6.082762530298219,
    6.4031242374328485, 6.557438524302,     6.855654600401044, 7.280109889280518,
    7.681145747868608,  7.810249675906654,  8.18535277187245,  8.426149773176359,
    8.54400374531753,   8.888194417315589,  9.1104335791443,   9.433981132056603,
    9.848857801796104,  10.04987562112089,  10.14889156509222, 10.344080432788601,
    10.44030650891055,  10.63014581273465,  11.269427669584644, 11.445523142259598,
    11.704699910719626, 11.789826122551595, 12.206555615733702, 12.288205727444508,
    12.529964086141668, 12.767145334803704, 12.922847983320086, 13.152946437965905,
    13.379088160259652, 13.45362404707371,  13.820274961085254, 13.892443989449804,
    14.035668847618199, 14.106735979665885, 14.52583904633395,  14.933184523068078,
    15.066519173319364, 15.132745950421556};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Symmetrize, check PSD within tolerance, jitter near-singular matrices.
Eigen::MatrixXd prepare_correlation(const Eigen::MatrixXd& corr) {
  Eigen::MatrixXd R = 0.5 * (corr + corr.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < kPsdTol) {
    throw NotPsdError("mvn: correlation matrix is not PSD (min eigenvalue " +
                      std::to_string(min_eig) + ")");
  }
  if (min_eig < kJitterTrigger) {
    R.diagonal().array() += kJitter;
    const Eigen::VectorXd s = R.diagonal().array().sqrt();
    R = (s.cwiseInverse() * s.cwiseInverse().transpose()).cwiseProduct(R);
  }
  return R;
}

// Lower Cholesky factor with Genz-Bretz greedy variable ordering (or a caller
// supplied ordering). Zero pivots (rank-deficient input) leave a zero column;
// those coordinates become deterministic indicators during integration.
struct OrderedCholesky {
  Eigen::MatrixXd L;
  Eigen::VectorXd b;
  std::vector<int> order;  // original index of each position
};

OrderedCholesky chol_reorder(Eigen::MatrixXd C, Eigen::VectorXd b,
                             const std::vector<int>* forced_order = nullptr) {
  const int d = static_cast<int>(b.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);

  if (forced_order) {
    // Apply the caller's permutation up front.
    Eigen::MatrixXd Cp(d, d);
    Eigen::VectorXd bp(d);
    for (int i = 0; i < d; ++i) {
      bp(i) = b((*forced_order)[static_cast<std::size_t>(i)]);
      for (int j = 0; j < d; ++j) {
        Cp(i, j) = C((*forced_order)[static_cast<std::size_t>(i)],
                     (*forced_order)[static_cast<std::size_t>(j)]);
      }
    }
    C = std::move(Cp);
    b = std::move(bp);
    order = *forced_order;
  }

  for (int k = 0; k < d; ++k) {
    if (!forced_order) {
      int best = -1;
      double best_e = 2.0;
      for (int i = k; i < d; ++i) {
        double var_i = C(i, i);
        double m_i = 0.0;
        for (int j = 0; j < k; ++j) {
          var_i -= L(i, j) * L(i, j);
          m_i += L(i, j) * y(j);
        }
        const double sd = std::sqrt(std::max(var_i, 1e-300));
        const double e_i = norm_cdf((b(i) - m_i) / sd);
        if (e_i < best_e) {
          best = i;
          best_e = e_i;
        }
      }
      if (best > k) {
        C.row(k).swap(C.row(best));
        C.col(k).swap(C.col(best));
        for (int j = 0; j < k; ++j) std::swap(L(k, j), L(best, j));
        std::swap(b(k), b(best));
        std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(best)]);
      }
    }
    double var_k = C(k, k);
    double m_k = 0.0;
    for (int j = 0; j < k; ++j) {
      var_k -= L(k, j) * L(k, j);
      m_k += L(k, j) * y(j);
    }
    if (var_k > kPivotTol) {
      const double lkk = std::sqrt(var_k);
      L(k, k) = lkk;
      for (int i = k + 1; i < d; ++i) {
        double s = C(i, k);
        for (int j = 0; j < k; ++j) s -= L(i, j) * L(k, j);
        L(i, k) = s / lkk;
      }
      const double z = (b(k) - m_k) / lkk;
      const double e = norm_cdf(z);
      y(k) = e > 1e-300 ? -norm_pdf(z) / e : -std::abs(z);
    } else {
      L(k, k) = 0.0;  // deterministic coordinate; column stays zero
      y(k) = 0.0;
    }
  }
  return {std::move(L), std::move(b), std::move(order)};
}

// Sequential-conditioning integrand at one point of the unit cube.
double integrand(const OrderedCholesky& oc, const double* w, double* z) {
  const int d = static_cast<int>(oc.b.size());
  double f = 1.0;
  int wi = 0;
  for (int k = 0; k < d; ++k) {
    double m = 0.0;
    for (int j = 0; j < k; ++j) m += oc.L(k, j) * z[j];
    const double lkk = oc.L(k, k);
    if (lkk > 0.0) {
      const double e = norm_cdf((oc.b(k) - m) / lkk);
      if (k < d - 1) {
        const double t = std::clamp(e * w[wi++], 1e-300, 1.0 - 1e-16);
        z[k] = norm_quantile(t);
      }
      f *= e;
      if (f <= 1e-300) return 0.0;
    } else {
      z[k] = 0.0;
      if (oc.b(k) - m < -kDegenerateSlack) return 0.0;
    }
  }
  return f;
}

void fill_point(long long i, int nw, const std::vector<double>& shift, double* w) {
  for (int j = 0; j < nw; ++j) {
    const double t = std::fmod(static_cast<double>(i) * kSqrtPrimes[j] + shift[static_cast<std::size_t>(j)], 1.0);
    w[j] = std::abs(2.0 * t - 1.0);  // baker fold
  }
}

std::vector<std::vector<double>> make_shifts(int reps, int nw, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> shifts(static_cast<std::size_t>(reps));
  for (auto& s : shifts) {
    s.resize(static_cast<std::size_t>(std::max(nw, 1)));
    for (auto& v : s) v = unif(rng);
  }
  return shifts;
}

// Replicate means evaluated in parallel; the reduction order is fixed by
// replicate index, so results do not depend on the thread schedule.
template <class PerPoint>
std::pair<double, double> replicate_loop(int reps, long long per_rep, int nw,
                                         const std::vector<std::vector<double>>& shifts,
                                         const PerPoint& per_point) {
  std::vector<double> means(static_cast<std::size_t>(reps), 0.0);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(reps)));
  std::vector<std::future<void>> futures;
  futures.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    futures.push_back(std::async(std::launch::async, [&, t]() {
      std::vector<double> w(static_cast<std::size_t>(std::max(nw, 1)));
      for (int r = t; r < reps; r += workers) {
        double acc = 0.0;
        for (long long i = 1; i <= per_rep; ++i) {
          fill_point(i, nw, shifts[static_cast<std::size_t>(r)], w.data());
          acc += per_point(w.data());
        }
        means[static_cast<std::size_t>(r)] = acc / static_cast<double>(per_rep);
      }
    }));
  }
  for (auto& f : futures) f.get();

  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(reps);
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  var /= static_cast<double>(reps - 1);
  return {mean, std::sqrt(var / static_cast<double>(reps))};
}

void check_shape(const MvnProblem& p) {
  if (p.dim() < 1) {
    throw InvalidArgumentError("mvn: dimension must be >= 1");
  }
  if (p.corr.rows() != p.dim() || p.corr.cols() != p.dim()) {
    throw DimensionMismatchError("mvn: correlation matrix shape does not match limits");
  }
  if (p.dim() > 50) {
    throw InvalidArgumentError("mvn: dimension > 50 not supported");
  }
}

}  // namespace

MvnProblem degenerate_reduce(const MvnProblem& problem) {
  const int d = problem.dim();
  // Union-find over coordinates joined by corr ~ 1.
  std::vector<int> parent(static_cast<std::size_t>(d));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  bool any = false;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (std::abs(problem.corr(i, j) - 1.0) < kDuplicateTol) {
        int a = find(i), b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        any = true;
      }
    }
  }
  if (!any) return problem;

  std::vector<int> reps;
  std::vector<int> group(static_cast<std::size_t>(d), -1);
  for (int i = 0; i < d; ++i) {
    const int r = find(i);
    if (r == i) {
      group[static_cast<std::size_t>(i)] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  const int dr = static_cast<int>(reps.size());
  MvnProblem out;
  out.upper = Eigen::VectorXd::Constant(dr, HUGE_VAL);
  out.corr.resize(dr, dr);
  for (int i = 0; i < d; ++i) {
    const int g = group[static_cast<std::size_t>(find(i))];
    out.upper(g) = std::min(out.upper(g), problem.upper(i));
  }
  for (int a = 0; a < dr; ++a) {
    for (int b = 0; b < dr; ++b) {
      out.corr(a, b) = problem.corr(reps[static_cast<std::size_t>(a)],
                                    reps[static_cast<std::size_t>(b)]);
    }
    out.corr(a, a) = 1.0;
  }
  return out;
}

MvnEstimate mvn_cdf(const MvnProblem& problem, const MvnOptions& opts) {
  check_shape(problem);
  MvnProblem p = degenerate_reduce(problem);
  const int d = p.dim();

  if (d == 1) {
    return {norm_cdf(p.upper(0)), 0.0, 0};
  }

  const Eigen::MatrixXd R = prepare_correlation(p.corr);
  const OrderedCholesky oc = chol_reorder(R, p.upper);

  const int reps = std::max(opts.replicates, 2);
  const long long per_rep = std::max<long long>(opts.n_samples / reps, 8);
  const int nw = d - 1;
  const auto shifts = make_shifts(reps, nw, opts.seed);

  const auto [mean, se] = replicate_loop(reps, per_rep, nw, shifts, [&](const double* w) {
    thread_local std::vector<double> z;
    z.resize(static_cast<std::size_t>(d));
    return integrand(oc, w, z.data());
  });

  MvnEstimate est;
  est.value = std::clamp(mean, 0.0, 1.0);
  est.std_error = se;
  est.samples_used = per_rep * reps;
  return est;
}

MvnEstimate mvn_cdf_difference(const MvnProblem& a, const MvnProblem& b,
                               const MvnOptions& opts) {
  check_shape(a);
  check_shape(b);
  if (a.dim() != b.dim()) {
    throw DimensionMismatchError("mvn: paired problems must share the dimension");
  }
  const int d = a.dim();
  if (d == 1) {
    return {norm_cdf(a.upper(0)) - norm_cdf(b.upper(0)), 0.0, 0};
  }

  // No duplicate collapsing here: the pairing needs one common coordinate
  // order, and exact duplicates are handled by the zero-pivot indicators.
  const Eigen::MatrixXd Ra = prepare_correlation(a.corr);
  const Eigen::MatrixXd Rb = prepare_correlation(b.corr);
  const OrderedCholesky oca = chol_reorder(Ra, a.upper);
  const OrderedCholesky ocb = chol_reorder(Rb, b.upper, &oca.order);

  const int reps = std::max(opts.replicates, 2);
  const long long per_rep = std::max<long long>(opts.n_samples / reps, 8);
  const int nw = d - 1;
  const auto shifts = make_shifts(reps, nw, opts.seed);

  const auto [mean, se] = replicate_loop(reps, per_rep, nw, shifts, [&](const double* w) {
    thread_local std::vector<double> z;
    z.resize(static_cast<std::size_t>(d));
    const double fa = integrand(oca, w, z.data());
    const double fb = integrand(ocb, w, z.data());
    return fa - fb;
  });

  MvnEstimate est;
  est.value = std::clamp(mean, -1.0, 1.0);
  est.std_error = se;
  est.samples_used = per_rep * reps;
  return est;
}

}  // namespace relsens
