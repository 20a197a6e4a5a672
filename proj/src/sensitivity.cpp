#include "relsens/sensitivity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <future>
#include <random>
#include <thread>

#include <Eigen/Dense>

#include "relsens/errors.hpp"
#include "relsens/normal.hpp"

namespace relsens {

namespace {

constexpr int kMaxCutSetsUnion = 20;     // 2^K - 1 terms in Eq.-20 style sums
constexpr int kMaxCutSetsDoubleSum = 8;  // (2^K - 1)^2 terms
constexpr int kMaxSubsetSize = 12;       // powerset recursion guard
constexpr int kGhNodes1 = 48;            // latent-factor quadrature sizes
constexpr int kGhNodes2 = 24;
constexpr double kGhSigmaFloor = 0.05;   // below this the conditional is too
                                         // spiky for smooth quadrature

std::uint64_t subset_key(const std::vector<int>& v) {
  std::uint64_t key = 0;
  for (int i : v) key |= (1ULL << i);
  return key;
}

std::vector<int> union_of_cuts(const std::vector<std::vector<int>>& cuts, unsigned mask) {
  std::vector<bool> in;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    if (mask & (1u << k)) {
      for (int idx : cuts[k]) {
        if (in.size() <= static_cast<std::size_t>(idx)) {
          in.resize(static_cast<std::size_t>(idx) + 1, false);
        }
        in[static_cast<std::size_t>(idx)] = true;
      }
    }
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

void append_problem(std::string& key, const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr) {
  const std::size_t at = key.size();
  key.resize(at + sizeof(double) * static_cast<std::size_t>(upper.size() + corr.size()) + 8);
  char* p = key.data() + at;
  const auto d = static_cast<std::int64_t>(upper.size());
  std::memcpy(p, &d, 8);
  p += 8;
  std::memcpy(p, upper.data(), sizeof(double) * static_cast<std::size_t>(upper.size()));
  p += sizeof(double) * static_cast<std::size_t>(upper.size());
  std::memcpy(p, corr.data(), sizeof(double) * static_cast<std::size_t>(corr.size()));
}

// Probability-normalized Gauss-Hermite rule: integrates f against the
// standard normal density. Golub-Welsch on the Jacobi matrix.
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussHermite gauss_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(static_cast<double>(i) / 2.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermite gh;
  gh.nodes = es.eigenvalues() * std::sqrt(2.0);  // physicists' -> probabilists'
  gh.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    gh.weights[i] = v0 * v0;  // already sums to 1 under the normal weight
  }
  return gh;
}

// Composite Gauss-Legendre against the normal density. Uniform panels keep
// localized features (the conditional-probability transition) resolved
// wherever they sit in the tail, which plain Gauss-Hermite does not.
GaussHermite composite_gl(double half_range, double panel_width) {
  static const double x10[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                0.8650633666889845, 0.9739065285171717};
  static const double w10[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                0.1494513491505806, 0.0666713443086881};
  const int panels = static_cast<int>(std::ceil(2.0 * half_range / panel_width));
  GaussHermite rule;
  rule.nodes.resize(panels * 10);
  rule.weights.resize(panels * 10);
  int at = 0;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = -half_range + 2.0 * half_range * p / panels;
    const double b = -half_range + 2.0 * half_range * (p + 1) / panels;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int k = 0; k < 10; ++k) {
      const double x = k < 5 ? -x10[4 - k] : x10[k - 5];
      const double w = k < 5 ? w10[4 - k] : w10[k - 5];
      const double t = mid + half * x;
      rule.nodes[at] = t;
      rule.weights[at] = half * w * norm_pdf(t);
      total += rule.weights[at];
      ++at;
    }
  }
  rule.weights /= total;  // normal weight integrates to one over the range
  return rule;
}

// S = N / (p (1 - p)) with first-order error propagation.
Estimate ratio_index(const Estimate& numerator, const Estimate& p) {
  const double d = p.value * (1.0 - p.value);
  if (d <= 0.0) {
    throw DegenerateVarianceError("sensitivity: p(1-p) vanishes; indices undefined");
  }
  const double se_d = std::abs(1.0 - 2.0 * p.value) * p.std_error;
  Estimate s;
  s.value = numerator.value / d;
  s.std_error =
      std::sqrt(std::pow(numerator.std_error / d, 2) + std::pow(s.value * se_d / d, 2));
  return s;
}

Eigen::MatrixXd two_block_diag(const Eigen::MatrixXd& R) {
  const int m = static_cast<int>(R.rows());
  Eigen::MatrixXd blockR = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  blockR.topLeftCorner(m, m) = R;
  blockR.bottomRightCorner(m, m) = R;
  return blockR;
}

Eigen::VectorXd stack_twice(const Eigen::VectorXd& b) {
  Eigen::VectorXd out(2 * b.size());
  out << b, b;
  return out;
}

std::vector<int> complement_of(const std::vector<int>& v, int n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (int i : v) {
    if (i < 0 || i >= n) {
      throw InvalidArgumentError("sensitivity: variable index out of range");
    }
    in[static_cast<std::size_t>(i)] = true;
  }
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

}  // namespace

SensitivityEngine::SensitivityEngine(LinearizedSystem ls, MvnOptions mvn_opts)
    : SensitivityEngine(std::move(ls), mvn_opts, {}) {}

SensitivityEngine::SensitivityEngine(LinearizedSystem ls, MvnOptions mvn_opts,
                                     std::vector<TermLinearization> terms)
    : ls_(std::move(ls)), mvn_(mvn_opts) {
  ls_.system.validate();
  if (ls_.system.m != ls_.m()) {
    throw DimensionMismatchError("sensitivity: system definition does not match linearization");
  }
  for (auto& t : terms) {
    if (t.A.cols() != ls_.n() || t.A.rows() != static_cast<int>(t.components.size()) ||
        t.B.size() != t.A.rows()) {
      throw DimensionMismatchError("sensitivity: malformed term linearization");
    }
    std::vector<int> key = t.components;
    terms_.emplace(std::move(key), std::move(t));
  }
}

void SensitivityEngine::block_of(const std::vector<int>& components, Eigen::MatrixXd& A,
                                 Eigen::VectorXd& B) const {
  const auto it = terms_.find(components);
  if (it != terms_.end()) {
    A = it->second.A;
    B = it->second.B;
    return;
  }
  const int d = static_cast<int>(components.size());
  A.resize(d, ls_.n());
  B.resize(d);
  for (int a = 0; a < d; ++a) {
    A.row(a) = ls_.A.row(components[static_cast<std::size_t>(a)]);
    B(a) = ls_.B(components[static_cast<std::size_t>(a)]);
  }
}

Estimate SensitivityEngine::mvn(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr) const {
  return mvn_budgeted(upper, corr, mvn_);
}

Estimate SensitivityEngine::mvn_budgeted(const Eigen::VectorXd& upper,
                                         const Eigen::MatrixXd& corr,
                                         const MvnOptions& opts) const {
  std::string key = "1";
  const auto tag = static_cast<std::int64_t>(opts.n_samples);
  key.append(reinterpret_cast<const char*>(&tag), 8);
  append_problem(key, upper, corr);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    const MvnEstimate est = mvn_cdf({upper, corr}, opts);
    it = cache_.emplace(std::move(key), est).first;
  }
  return {it->second.value, it->second.std_error};
}

Estimate SensitivityEngine::paired_difference(const Eigen::VectorXd& limits,
                                              const Eigen::MatrixXd& big,
                                              const Eigen::MatrixXd& base) const {
  std::string key = "2";
  append_problem(key, limits, big);
  append_problem(key, limits, base);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    const MvnEstimate est = mvn_cdf_difference({limits, big}, {limits, base}, mvn_);
    it = cache_.emplace(std::move(key), est).first;
  }
  return {it->second.value, it->second.std_error};
}

Estimate SensitivityEngine::series_probability() const {
  const Estimate phi = mvn(ls_.B, ls_.R);
  return {1.0 - phi.value, phi.std_error};
}

Estimate SensitivityEngine::parallel_probability() const { return mvn(-ls_.B, ls_.R); }

Estimate SensitivityEngine::system_probability() const {
  const int K = ls_.system.K();
  if (K > kMaxCutSetsUnion) {
    throw TooManyCutSetsError("sensitivity: inclusion-exclusion limited to K <= 20 cut sets");
  }
  double p = 0.0;
  double var = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  for (unsigned mask = 1; mask < (1u << K); ++mask) {
    const std::vector<int> idx = union_of_cuts(ls_.system.cut_sets, mask);
    block_of(idx, A, B);
    Eigen::MatrixXd r = A * A.transpose();
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    r.diagonal().setOnes();
    const Estimate term = mvn(-B, r);
    const int sign = (std::popcount(mask) % 2 == 1) ? 1 : -1;
    p += sign * term.value;
    var += term.std_error * term.std_error;
  }
  return {std::clamp(p, 0.0, 1.0), std::sqrt(var)};
}

Estimate SensitivityEngine::probability() const { return mode_probability(ls_.system.mode); }

Estimate SensitivityEngine::mode_probability(SystemMode mode) const {
  switch (mode) {
    case SystemMode::Component:
    case SystemMode::Series:
      return series_probability();
    case SystemMode::Parallel:
      return parallel_probability();
    case SystemMode::General:
      return system_probability();
  }
  throw InvalidArgumentError("sensitivity: unknown system mode");
}

Eigen::MatrixXd SensitivityEngine::cross_block(const std::vector<int>& v) const {
  const int m = ls_.m();
  if (v.empty()) return Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd Av(m, static_cast<int>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) {
    const int col = v[j];
    if (col < 0 || col >= ls_.n()) {
      throw InvalidArgumentError("sensitivity: variable index out of range");
    }
    Av.col(static_cast<int>(j)) = ls_.A.col(col);
  }
  return Av * Av.transpose();
}

Estimate SensitivityEngine::clamp_variance(Estimate e, const char* what) const {
  if (e.value < 0.0) {
    if (e.value < -3.0 * e.std_error - 1e-15) {
      throw InconsistencyError(std::string("sensitivity: ") + what +
                               " is negative beyond 3 std errors; raise the MVN budget");
    }
    e.value = 0.0;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Var(E[Z | U_cond]) for the series/parallel indicator. Two routes:
//
//  * latent-factor quadrature: given U_cond the component margins are
//    independent normals, so the conditional failure probability h(t) is an
//    m-variate normal probability and Var = E[(h - E h)^2] integrates over
//    the |cond|-dimensional latent with Gauss-Hermite. The centered square
//    makes the result second-order insensitive to inner MVN noise, which is
//    what resolves indices of order 1e-4 under near-singular correlations.
//
//  * stacked pairing: the 2m-variate form of Prop. 1 with the squared-mean
//    term evaluated as the same integral with the reference cross block
//    (zero, or the full R whose value is exactly the one-block probability),
//    estimated as one common-randomization difference.
// ---------------------------------------------------------------------------

bool SensitivityEngine::gh_applicable(const std::vector<int>& cond) const {
  if (cond.empty() || cond.size() > 2) return false;
  // The conditional probability transitions over a latent-space width of
  // sigma_i / ||a_{i,cond}||; the quadrature must resolve the narrowest one.
  const double width_needed = cond.size() == 1 ? 0.15 : 0.5;
  const auto widths_ok = [&](const Eigen::MatrixXd& A) {
    for (int i = 0; i < A.rows(); ++i) {
      double n2 = 0.0;
      for (int j : cond) n2 += A(i, j) * A(i, j);
      if (n2 < 1e-18) continue;  // row independent of the conditioned set
      const double width = std::sqrt(std::max(1.0 - n2, 0.0) / n2);
      if (width < width_needed) return false;
    }
    return true;
  };
  if (!widths_ok(ls_.A)) return false;
  for (const auto& [key, term] : terms_) {
    (void)key;
    if (!widths_ok(term.A)) return false;
  }
  return true;
}

namespace {

// Quadrature nodes over the conditioned latent space: composite
// Gauss-Legendre in one dimension, a Gauss-Hermite tensor in two.
std::vector<std::pair<Eigen::VectorXd, double>> latent_nodes(int dim) {
  std::vector<std::pair<Eigen::VectorXd, double>> out;
  if (dim == 1) {
    const GaussHermite rule = composite_gl(9.25, 0.5);
    for (int i = 0; i < rule.nodes.size(); ++i) {
      Eigen::VectorXd t(1);
      t[0] = rule.nodes[i];
      out.emplace_back(std::move(t), rule.weights[i]);
    }
    return out;
  }
  const GaussHermite gh = gauss_hermite(kGhNodes2);
  for (int a = 0; a < kGhNodes2; ++a) {
    for (int b = 0; b < kGhNodes2; ++b) {
      Eigen::VectorXd t(2);
      t[0] = gh.nodes[a];
      t[1] = gh.nodes[b];
      out.emplace_back(std::move(t), gh.weights[a] * gh.weights[b]);
    }
  }
  return out;
}

}  // namespace

// Conditional m-variate probability factors of one block given U_cond = t:
// limits (sign * (A_cond t - B))/sigma with the normalized residual
// correlation. `negate` false gives the safe-event probability (series).
Estimate SensitivityEngine::conditional_block_probability(
    const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const std::vector<int>& cond,
    const Eigen::VectorXd& t, bool failure, const MvnOptions& inner) const {
  const int m = static_cast<int>(B.size());
  Eigen::VectorXd shift = B;
  Eigen::VectorXd sigma(m);
  for (int i = 0; i < m; ++i) {
    double s2 = 1.0;
    double dot = 0.0;
    for (std::size_t j = 0; j < cond.size(); ++j) {
      const double a = A(i, cond[j]);
      s2 -= a * a;
      dot += a * t[static_cast<Eigen::Index>(j)];
    }
    sigma[i] = std::sqrt(std::max(s2, 1e-300));
    shift[i] = (B(i) - dot) / sigma[i];
  }
  Eigen::MatrixXd corr(m, m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < m; ++k) {
      double rv = 0.0;
      for (int j : cond) rv += A(i, j) * A(k, j);
      corr(i, k) = (A.row(i).dot(A.row(k)) - rv) / (sigma[i] * sigma[k]);
    }
    corr(i, i) = 1.0;
  }
  corr = corr.cwiseMax(-1.0).cwiseMin(1.0);
  const Eigen::VectorXd limits = failure ? (-shift).eval() : shift;
  return mvn_budgeted(limits, corr, inner);
}

Estimate SensitivityEngine::var_cond_gh(const std::vector<int>& cond, SystemMode mode) const {
  const bool failure = mode == SystemMode::Parallel;
  const auto nodes = latent_nodes(static_cast<int>(cond.size()));
  const int n_nodes = static_cast<int>(nodes.size());

  MvnOptions inner = mvn_;
  inner.n_samples = std::max<long long>(mvn_.n_samples / n_nodes, 24'000);
  inner.replicates = std::min(mvn_.replicates, 8);

  std::vector<double> h(static_cast<std::size_t>(n_nodes));
  std::vector<double> se(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    const Estimate hb = conditional_block_probability(ls_.A, ls_.B, cond,
                                                      nodes[static_cast<std::size_t>(i)].first,
                                                      failure, inner);
    h[static_cast<std::size_t>(i)] = hb.value;
    se[static_cast<std::size_t>(i)] = hb.std_error;
  }
  double mean = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    mean += nodes[static_cast<std::size_t>(i)].second * h[static_cast<std::size_t>(i)];
  }
  // Centered quadratic form: second-order insensitive to the inner noise.
  double value = 0.0;
  double var = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double c = h[static_cast<std::size_t>(i)] - mean;
    const double w = nodes[static_cast<std::size_t>(i)].second;
    value += w * c * c;
    const double dsens = 2.0 * w * c;
    var += dsens * dsens * se[static_cast<std::size_t>(i)] * se[static_cast<std::size_t>(i)];
  }
  return {value, std::sqrt(var)};
}

namespace {

const double kLatticeSqrtPrimes[] = {
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
    14.035668847618199, 14.106735979665885, 14.52583904633395,  14.933184523068078};

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// P(V in the intersection of half-lines a*V >= t) for a standard normal V;
// rows with |a| ~ 0 become feasibility checks.
struct IntervalBuilder {
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  bool feasible = true;

  void require_at_least(double a, double t) {  // a * V >= t
    if (std::abs(a) < 1e-14) {
      if (t > 0.0) feasible = false;
      return;
    }
    if (a > 0.0) {
      lo = std::max(lo, t / a);
    } else {
      hi = std::min(hi, t / a);
    }
  }

  double probability() const {
    if (!feasible || lo >= hi) return 0.0;
    return std::max(norm_cdf(hi) - norm_cdf(lo), 0.0);
  }
};

}  // namespace

Estimate SensitivityEngine::var_cond_leave_one_out(const std::vector<int>& cond,
                                                   SystemMode mode, bool sys) const {
  const std::vector<int> rest = complement_of(cond, ls_.n());
  if (rest.size() != 1) {
    throw InvalidArgumentError("sensitivity: leave-one-out route needs |cond| = n - 1");
  }
  const int vi = rest[0];
  const int nw = static_cast<int>(cond.size());
  const int m = ls_.m();

  // Pre-extract coefficients: per row, the V coefficient and the cond part.
  const auto coef_of = [&](const Eigen::MatrixXd& A, int row, Eigen::VectorXd& w_part) {
    w_part.resize(nw);
    for (int j = 0; j < nw; ++j) w_part[j] = A(row, cond[static_cast<std::size_t>(j)]);
    return A(row, vi);
  };

  struct Block {
    Eigen::MatrixXd W;   // rows x nw coefficients on the conditioned part
    Eigen::VectorXd c;   // coefficient on V per row
    Eigen::VectorXd B;
    int sign = 1;
  };
  std::vector<Block> blocks;
  if (sys) {
    const int K = ls_.system.K();
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    for (unsigned mask = 1; mask < (1u << K); ++mask) {
      block_of(union_of_cuts(ls_.system.cut_sets, mask), A, B);
      Block blk;
      blk.W.resize(A.rows(), nw);
      blk.c.resize(A.rows());
      blk.B = B;
      Eigen::VectorXd wp;
      for (int r = 0; r < A.rows(); ++r) {
        blk.c[r] = coef_of(A, r, wp);
        blk.W.row(r) = wp.transpose();
      }
      blk.sign = (std::popcount(mask) % 2 == 1) ? 1 : -1;
      blocks.push_back(std::move(blk));
    }
  } else {
    Block blk;
    blk.W.resize(m, nw);
    blk.c.resize(m);
    blk.B = ls_.B;
    Eigen::VectorXd wp;
    for (int r = 0; r < m; ++r) {
      blk.c[r] = coef_of(ls_.A, r, wp);
      blk.W.row(r) = wp.transpose();
    }
    blk.sign = 1;
    blocks.push_back(std::move(blk));
  }

  // Conditional failure probability given the conditioned coordinates: for
  // each parallel block, all rows need c V >= B - W w, an interval in V.
  // Series systems use the complement of the all-safe interval instead.
  const bool series_like = !sys && mode != SystemMode::Parallel;
  const auto h_of = [&](const Eigen::VectorXd& wvec) {
    if (series_like) {
      IntervalBuilder safe;  // all rows: c V <= B - W w
      for (int r = 0; r < blocks[0].c.size(); ++r) {
        const double t = blocks[0].B[r] - blocks[0].W.row(r).dot(wvec);
        safe.require_at_least(-blocks[0].c[r], -t);  // c V <= t
      }
      return 1.0 - safe.probability();
    }
    double h = 0.0;
    for (const auto& blk : blocks) {
      IntervalBuilder fail;
      for (int r = 0; r < blk.c.size(); ++r) {
        const double t = blk.B[r] - blk.W.row(r).dot(wvec);
        fail.require_at_least(blk.c[r], t);
      }
      h += blk.sign * fail.probability();
    }
    return h;
  };

  std::string key = "3";
  key.push_back(static_cast<char>(sys ? 'y' : 'n'));
  key.push_back(static_cast<char>('0' + static_cast<int>(mode)));
  const auto tag = static_cast<std::int64_t>(vi);
  key.append(reinterpret_cast<const char*>(&tag), 8);
  auto cached = cache_.find(key);
  if (cached != cache_.end()) {
    return {cached->second.value, cached->second.std_error};
  }

  // Precondition: rotate the conditioned space so the dominant constraint
  // direction is the first lattice coordinate. The integrand is then nearly
  // one-dimensional along an axis, which the lattice resolves at full rate.
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(nw, nw);
  for (const auto& blk : blocks) {
    for (int r = 0; r < blk.c.size(); ++r) {
      const Eigen::VectorXd row = blk.W.row(r).transpose();
      outer += row * row.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(outer);
  Eigen::MatrixXd Q(nw, nw);
  for (int j = 0; j < nw; ++j) Q.col(j) = es.eigenvectors().col(nw - 1 - j);

  // The integrand is closed form (no inner MVN), so points are two orders of
  // magnitude cheaper than elsewhere; spend four budgets on them.
  const int reps = std::max(mvn_.replicates, 2);
  const long long per_rep = std::max<long long>(4 * mvn_.n_samples / reps, 8);
  std::mt19937_64 rng(mix64(mvn_.seed ^ 0xC0FFEEULL));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> shifts(static_cast<std::size_t>(reps));
  for (auto& s : shifts) {
    s.resize(static_cast<std::size_t>(nw));
    for (auto& v : s) v = unif(rng);
  }

  std::vector<double> rep_var(static_cast<std::size_t>(reps));
  {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(reps)));
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      futures.push_back(std::async(std::launch::async, [&, t]() {
        Eigen::VectorXd zvec(nw);
        for (int r = t; r < reps; r += workers) {
          const auto& shift = shifts[static_cast<std::size_t>(r)];
          double s1 = 0.0, s2 = 0.0;
          for (long long i = 1; i <= per_rep; ++i) {
            for (int j = 0; j < nw; ++j) {
              const double tt = std::fmod(
                  static_cast<double>(i) * kLatticeSqrtPrimes[j] + shift[static_cast<std::size_t>(j)],
                  1.0);
              const double folded = std::abs(2.0 * tt - 1.0);
              zvec[j] = norm_quantile(std::clamp(folded, 1e-300, 1.0 - 1e-16));
            }
            const double h = h_of(Q * zvec);
            s1 += h;
            s2 += h * h;
          }
          const double mh = s1 / static_cast<double>(per_rep);
          rep_var[static_cast<std::size_t>(r)] = s2 / static_cast<double>(per_rep) - mh * mh;
        }
      }));
    }
    for (auto& f : futures) f.get();
  }
  double mean = 0.0;
  for (double v : rep_var) mean += v;
  mean /= static_cast<double>(reps);
  double var = 0.0;
  for (double v : rep_var) var += (v - mean) * (v - mean);
  var /= static_cast<double>(reps - 1);

  MvnEstimate store;
  store.value = mean;
  store.std_error = std::sqrt(var / static_cast<double>(reps));
  store.samples_used = per_rep * reps;
  cache_.emplace(std::move(key), store);
  return {store.value, store.std_error};
}

Estimate SensitivityEngine::var_cond_paired(const std::vector<int>& cond,
                                            SystemMode mode) const {
  const Eigen::MatrixXd rcond = cross_block(cond);
  const Eigen::MatrixXd blockR = two_block_diag(ls_.R);
  Eigen::VectorXd limits = stack_twice(ls_.B);
  if (mode == SystemMode::Parallel) limits = -limits;

  const int m = ls_.m();
  Eigen::MatrixXd big = blockR;
  big.topRightCorner(m, m) = rcond;
  big.bottomLeftCorner(m, m) = rcond.transpose();

  // Reference cross block with an exactly known value: zero (independent
  // replicas, squared mean) or the full R (duplicated replicas, one-block
  // probability). Pick the nearer one so the paired cliffs align.
  const bool near_full = (ls_.R - rcond).norm() < rcond.norm();
  Eigen::MatrixXd base = blockR;
  if (near_full) {
    base.topRightCorner(m, m) = ls_.R;
    base.bottomLeftCorner(m, m) = ls_.R;
  }
  const Estimate diff = paired_difference(limits, big, base);
  if (!near_full) {
    return diff;  // Phi(cross) - squared mean directly
  }
  // Phi(cross=R) equals the plain one-block probability q; the variance is
  // then q - q^2 + diff with q = 1 - p (series) or p (parallel).
  const Estimate p = mode == SystemMode::Parallel ? parallel_probability() : series_probability();
  const double q = mode == SystemMode::Parallel ? p.value : 1.0 - p.value;
  Estimate out;
  out.value = q * (1.0 - q) + diff.value;
  out.std_error = std::sqrt(diff.std_error * diff.std_error +
                            std::pow((1.0 - 2.0 * q) * p.std_error, 2));
  return out;
}

Estimate SensitivityEngine::var_cond_subset(const std::vector<int>& cond,
                                            SystemMode mode) const {
  for (int j : cond) {
    if (j < 0 || j >= ls_.n()) {
      throw InvalidArgumentError("sensitivity: variable index out of range");
    }
  }
  if (static_cast<int>(cond.size()) == ls_.n() - 1) {
    return var_cond_leave_one_out(cond, mode, false);
  }
  if (gh_applicable(cond)) {
    return var_cond_gh(cond, mode);
  }
  return var_cond_paired(cond, mode);
}

Estimate SensitivityEngine::var_cond_exp(const std::vector<int>& v, SystemMode mode) const {
  return clamp_variance(var_cond_subset(v, mode), "Var(E[Z|U_v])");
}

Estimate SensitivityEngine::var_cond_exp_complement(const std::vector<int>& v,
                                                    SystemMode mode) const {
  return clamp_variance(var_cond_subset(complement_of(v, ls_.n()), mode), "Var(E[Z|U_~v])");
}

Estimate SensitivityEngine::first_order_index(int i, SystemMode mode) const {
  return ratio_index(var_cond_exp({i}, mode), mode_probability(mode));
}

Estimate SensitivityEngine::total_effect_index(const std::vector<int>& v,
                                               SystemMode mode) const {
  const Estimate ratio = ratio_index(var_cond_exp_complement(v, mode), mode_probability(mode));
  return {1.0 - ratio.value, ratio.std_error};
}

Estimate SensitivityEngine::closed_index(const std::vector<int>& v, SystemMode mode) const {
  return ratio_index(var_cond_exp(v, mode), mode_probability(mode));
}

Estimate SensitivityEngine::variance_component(const std::vector<int>& v,
                                               SystemMode mode) const {
  if (static_cast<int>(v.size()) > kMaxSubsetSize) {
    throw SubsetTooLargeError("sensitivity: variance components limited to |v| <= 12");
  }
  const std::uint64_t key = subset_key(v);
  const int mode_tag = static_cast<int>(mode);
  auto it = vc_memo_.find({mode_tag, key});
  if (it != vc_memo_.end()) return it->second;

  Estimate total = var_cond_exp(v, mode);
  double value = total.value;
  double var = total.std_error * total.std_error;
  // Subtract the variance components of every proper non-empty subset.
  const std::size_t k = v.size();
  for (std::uint64_t sub = 1; sub + 1 < (1ULL << k); ++sub) {
    std::vector<int> w;
    for (std::size_t j = 0; j < k; ++j) {
      if (sub & (1ULL << j)) w.push_back(v[j]);
    }
    const Estimate vw = variance_component(w, mode);
    value -= vw.value;
    var += vw.std_error * vw.std_error;
  }
  const Estimate out{value, std::sqrt(var)};
  vc_memo_.emplace(std::make_pair(mode_tag, key), out);
  return out;
}

// ---------------------------------------------------------------------------
// General systems: the double sum over pairs of inclusion-exclusion blocks.
// ---------------------------------------------------------------------------

Estimate SensitivityEngine::sys_var_cond_gh(const std::vector<int>& cond) const {
  const int K = ls_.system.K();
  const unsigned top = 1u << K;
  const auto nodes = latent_nodes(static_cast<int>(cond.size()));
  const int n_nodes = static_cast<int>(nodes.size());

  std::vector<Eigen::MatrixXd> As(top);
  std::vector<Eigen::VectorXd> Bs(top);
  std::vector<int> signs(top);
  for (unsigned mask = 1; mask < top; ++mask) {
    block_of(union_of_cuts(ls_.system.cut_sets, mask), As[mask], Bs[mask]);
    signs[mask] = (std::popcount(mask) % 2 == 1) ? 1 : -1;
  }

  MvnOptions inner = mvn_;
  inner.n_samples =
      std::max<long long>(mvn_.n_samples / (static_cast<long long>(n_nodes)), 24'000);
  inner.replicates = std::min(mvn_.replicates, 8);

  std::vector<double> h(static_cast<std::size_t>(n_nodes), 0.0);
  std::vector<double> hvar(static_cast<std::size_t>(n_nodes), 0.0);
  for (int i = 0; i < n_nodes; ++i) {
    // Conditional system failure probability via inclusion-exclusion.
    for (unsigned mask = 1; mask < top; ++mask) {
      const Estimate block = conditional_block_probability(
          As[mask], Bs[mask], cond, nodes[static_cast<std::size_t>(i)].first, true, inner);
      h[static_cast<std::size_t>(i)] += signs[mask] * block.value;
      hvar[static_cast<std::size_t>(i)] += block.std_error * block.std_error;
    }
  }
  double mean = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    mean += nodes[static_cast<std::size_t>(i)].second * h[static_cast<std::size_t>(i)];
  }
  double value = 0.0;
  double var = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double c = h[static_cast<std::size_t>(i)] - mean;
    const double w = nodes[static_cast<std::size_t>(i)].second;
    value += w * c * c;
    const double dsens = 2.0 * w * c;
    var += dsens * dsens * hvar[static_cast<std::size_t>(i)];
  }
  return {value, std::sqrt(var)};
}

Estimate SensitivityEngine::sys_var_cond_paired(const std::vector<int>& cond,
                                                bool complement) const {
  const int K = ls_.system.K();
  const unsigned top = 1u << K;

  std::vector<Eigen::MatrixXd> As(top);
  std::vector<Eigen::VectorXd> Bs(top);
  for (unsigned mask = 1; mask < top; ++mask) {
    block_of(union_of_cuts(ls_.system.cut_sets, mask), As[mask], Bs[mask]);
  }
  const auto select_cols = [&](const Eigen::MatrixXd& A) {
    Eigen::MatrixXd Ac(A.rows(), static_cast<int>(cond.size()));
    for (std::size_t j = 0; j < cond.size(); ++j) Ac.col(static_cast<int>(j)) = A.col(cond[j]);
    return Ac;
  };

  double total = 0.0;
  double var = 0.0;
  for (unsigned z = 1; z < top; ++z) {
    for (unsigned w = z; w < top; ++w) {
      const Eigen::MatrixXd& Az = As[z];
      const Eigen::MatrixXd& Aw = As[w];
      const int dz = static_cast<int>(Az.rows());
      const int dw = static_cast<int>(Aw.rows());
      Eigen::VectorXd b(dz + dw);
      b << -Bs[z], -Bs[w];
      Eigen::MatrixXd cross;
      if (cond.empty()) {
        cross = Eigen::MatrixXd::Zero(dz, dw);
      } else {
        cross = select_cols(Az) * select_cols(Aw).transpose();
      }
      const Eigen::MatrixXd full_cross = Az * Aw.transpose();
      if (complement) cross = full_cross - cross;

      Eigen::MatrixXd big(dz + dw, dz + dw);
      big.setZero();
      big.topLeftCorner(dz, dz) = Az * Az.transpose();
      big.bottomRightCorner(dw, dw) = Aw * Aw.transpose();
      big.diagonal().setOnes();
      Eigen::MatrixXd base = big;
      big.topRightCorner(dz, dw) = cross;
      big.bottomLeftCorner(dw, dz) = cross.transpose();
      // Reference: zero cross (sums to p^2) for the direct flavor, full
      // cross (sums to p) for the complement flavor, so cliffs align.
      if (complement) {
        base.topRightCorner(dz, dw) = full_cross;
        base.bottomLeftCorner(dw, dz) = full_cross.transpose();
      }
      const Estimate term = paired_difference(b, big, base);
      const int sign = ((std::popcount(z) + std::popcount(w)) % 2 == 0) ? 1 : -1;
      const double mult = (z == w) ? 1.0 : 2.0;
      total += mult * sign * term.value;
      var += mult * mult * term.std_error * term.std_error;
    }
  }
  if (complement) {
    // Sum of the full-cross references is exactly p_sys, so the variance is
    // p (1 - p) plus the paired sum.
    const Estimate p = system_probability();
    total += p.value * (1.0 - p.value);
    var += std::pow((1.0 - 2.0 * p.value) * p.std_error, 2);
  }
  return {total, std::sqrt(var)};
}

Estimate SensitivityEngine::sys_var_cond_subset(const std::vector<int>& cond,
                                                bool complement_flavor) const {
  const int K = ls_.system.K();
  if (K > kMaxCutSetsDoubleSum) {
    throw TooManyCutSetsError("sensitivity: the double sum is limited to K <= 8 cut sets");
  }
  for (int j : cond) {
    if (j < 0 || j >= ls_.n()) {
      throw InvalidArgumentError("sensitivity: variable index out of range");
    }
  }
  if (static_cast<int>(cond.size()) == ls_.n() - 1) {
    return var_cond_leave_one_out(cond, ls_.system.mode, true);
  }
  if (gh_applicable(cond)) {
    return sys_var_cond_gh(cond);
  }
  return sys_var_cond_paired(cond, complement_flavor);
}

Estimate SensitivityEngine::sys_var_cond_exp(const std::vector<int>& v) const {
  return clamp_variance(sys_var_cond_subset(v, false), "Var(E[Z_sys|U_v])");
}

Estimate SensitivityEngine::sys_var_cond_exp_complement(const std::vector<int>& v) const {
  return clamp_variance(sys_var_cond_subset(complement_of(v, ls_.n()), true),
                        "Var(E[Z_sys|U_~v])");
}

Estimate SensitivityEngine::sys_first_order_index(int i) const {
  return ratio_index(sys_var_cond_exp({i}), system_probability());
}

Estimate SensitivityEngine::sys_total_effect_index(const std::vector<int>& v) const {
  const Estimate ratio = ratio_index(sys_var_cond_exp_complement(v), system_probability());
  return {1.0 - ratio.value, ratio.std_error};
}

Estimate SensitivityEngine::sys_closed_index(const std::vector<int>& v) const {
  return ratio_index(sys_var_cond_exp(v), system_probability());
}

Estimate SensitivityEngine::sys_variance_component(const std::vector<int>& v) const {
  if (static_cast<int>(v.size()) > kMaxSubsetSize) {
    throw SubsetTooLargeError("sensitivity: variance components limited to |v| <= 12");
  }
  const std::uint64_t key = subset_key(v);
  auto it = vc_memo_.find({100, key});
  if (it != vc_memo_.end()) return it->second;
  Estimate total = sys_var_cond_exp(v);
  double value = total.value;
  double var = total.std_error * total.std_error;
  const std::size_t k = v.size();
  for (std::uint64_t sub = 1; sub + 1 < (1ULL << k); ++sub) {
    std::vector<int> w;
    for (std::size_t j = 0; j < k; ++j) {
      if (sub & (1ULL << j)) w.push_back(v[j]);
    }
    const Estimate vw = sys_variance_component(w);
    value -= vw.value;
    var += vw.std_error * vw.std_error;
  }
  const Estimate out{value, std::sqrt(var)};
  vc_memo_.emplace(std::make_pair(100, key), out);
  return out;
}

Estimate SensitivityEngine::index_first_order(int i) const {
  if (ls_.system.mode == SystemMode::General) return sys_first_order_index(i);
  const SystemMode m =
      ls_.system.mode == SystemMode::Parallel ? SystemMode::Parallel : SystemMode::Series;
  return first_order_index(i, m);
}

Estimate SensitivityEngine::index_total_effect(const std::vector<int>& v) const {
  if (ls_.system.mode == SystemMode::General) return sys_total_effect_index(v);
  const SystemMode m =
      ls_.system.mode == SystemMode::Parallel ? SystemMode::Parallel : SystemMode::Series;
  return total_effect_index(v, m);
}

Estimate SensitivityEngine::index_closed(const std::vector<int>& v) const {
  if (ls_.system.mode == SystemMode::General) return sys_closed_index(v);
  const SystemMode m =
      ls_.system.mode == SystemMode::Parallel ? SystemMode::Parallel : SystemMode::Series;
  return closed_index(v, m);
}

Estimate SensitivityEngine::index_variance_component(const std::vector<int>& v) const {
  if (ls_.system.mode == SystemMode::General) return sys_variance_component(v);
  const SystemMode m =
      ls_.system.mode == SystemMode::Parallel ? SystemMode::Parallel : SystemMode::Series;
  return variance_component(v, m);
}

SensitivityReport build_sensitivity_report(const SensitivityEngine& engine,
                                           const std::vector<std::string>& variable_names,
                                           const std::vector<std::vector<int>>& closed_subsets) {
  SensitivityReport rep;
  rep.mode = engine.system().system.mode;
  rep.p_f = engine.probability();
  rep.variable_names = variable_names;
  const int n = static_cast<int>(variable_names.size());
  for (int i = 0; i < n; ++i) {
    rep.first_order.push_back(engine.index_first_order(i));
    rep.total_effect.push_back(engine.index_total_effect({i}));
  }
  for (const auto& v : closed_subsets) {
    rep.closed.emplace_back(v, engine.index_closed(v));
    rep.variance_components.emplace_back(v, engine.index_variance_component(v));
  }
  return rep;
}

}  // namespace relsens
