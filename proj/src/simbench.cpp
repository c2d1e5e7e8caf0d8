#include "rhoconcave/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/pareto.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/weibull.hpp>

#include "rhoconcave/entropy.hpp"

namespace rhoconcave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUnderflowScale = 1e-250;

template <class Dist>
TargetDensity from_boost(std::string name, Dist dist, double lo, double hi, ConcavityClass c) {
  TargetDensity t;
  t.name = std::move(name);
  t.lo = lo;
  t.hi = hi;
  t.concavity = c;
  t.pdf = [dist, lo, hi](double x) {
    if (!(x >= lo && x <= hi)) return 0.0;
    return boost::math::pdf(dist, x);
  };
  t.cdf = [dist, lo, hi](double x) {
    if (!(x > lo)) return 0.0;
    if (!(x < hi)) return 1.0;
    return boost::math::cdf(dist, x);
  };
  t.quantile = [dist](double u) { return boost::math::quantile(dist, u); };
  return t;
}

std::vector<double> pieces(const Support& support) {
  std::vector<double> b{support.lo};
  for (double x : support.breakpoints) {
    if (x > support.lo && x < support.hi) b.push_back(x);
  }
  b.push_back(support.hi);
  std::sort(b.begin() + 1, b.end() - 1);
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(ConcavityClass c) {
  return c == ConcavityClass::kLogConcave ? "log-concave" : "-1/2-concave";
}

std::string to_string(Metric metric) { return metric == Metric::kHellinger ? "hellinger" : "l1"; }

std::vector<double> TargetDensity::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);
  for (double& v : x) {
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    v = quantile(u);
  }
  return x;
}

TargetDensity make_target(const std::string& name) {
  namespace bm = boost::math;
  using C = ConcavityClass;
  if (name == "normal") return from_boost(name, bm::normal_distribution<>(0.0, 1.0), -kInf, kInf, C::kLogConcave);
  if (name == "laplace") return from_boost(name, bm::laplace_distribution<>(0.0, 1.0), -kInf, kInf, C::kLogConcave);
  if (name == "gamma3") return from_boost(name, bm::gamma_distribution<>(3.0, 1.0), 0.0, kInf, C::kLogConcave);
  if (name == "beta32") return from_boost(name, bm::beta_distribution<>(3.0, 2.0), 0.0, 1.0, C::kLogConcave);
  if (name == "weibull31") return from_boost(name, bm::weibull_distribution<>(3.0, 1.0), 0.0, kInf, C::kLogConcave);
  if (name == "lognormal") {
    return from_boost(name, bm::lognormal_distribution<>(0.0, 1.0), 0.0, kInf, C::kMinusHalfConcave);
  }
  if (name == "t3") return from_boost(name, bm::students_t_distribution<>(3.0), -kInf, kInf, C::kMinusHalfConcave);
  if (name == "t6") return from_boost(name, bm::students_t_distribution<>(6.0), -kInf, kInf, C::kMinusHalfConcave);
  if (name == "f36") return from_boost(name, bm::fisher_f_distribution<>(3.0, 6.0), 0.0, kInf, C::kMinusHalfConcave);
  if (name == "pareto5") return from_boost(name, bm::pareto_distribution<>(1.0, 5.0), 1.0, kInf, C::kMinusHalfConcave);
  throw std::invalid_argument("unknown target '" + name +
                              "'; expected one of normal, laplace, gamma3, beta32, weibull31, lognormal, t3, t6, "
                              "f36, pareto5");
}

const std::vector<std::string>& log_concave_targets() {
  static const std::vector<std::string> names{"normal", "laplace", "gamma3", "beta32", "weibull31"};
  return names;
}

const std::vector<std::string>& heavy_tail_targets() {
  static const std::vector<std::string> names{"lognormal", "t3", "t6", "f36", "pareto5"};
  return names;
}

double squared_hellinger(const RealFunction& f, const RealFunction& g, const Support& support, double abs_tol) {
  const auto b = pieces(support);
  const double affinity = integrate_pieces([&](double x) { return std::sqrt(f(x) * g(x)); }, b, abs_tol);
  return 1.0 - affinity;
}

double l1_distance(const RealFunction& f, const RealFunction& g, const Support& support, double abs_tol) {
  const auto b = pieces(support);
  return integrate_pieces([&](double x) { return std::abs(f(x) - g(x)); }, b, abs_tol);
}

double fisher_gap(const RealFunction& f0, const RealFunction& f, double alpha, const Support& support,
                  double abs_tol) {
  const EntropySpec spec(alpha);
  bool infinite = false;
  auto integrand = [&](double x) {
    const double a = f0(x), b = f(x);
    if (b <= 0.0) {
      // f₀ at underflow scale where f underflowed is a tail artifact
      if (a > kUnderflowScale) infinite = true;
      return 0.0;
    }
    const double y = chi_inverse(spec, -b);
    return y * a + psi_conjugate(spec, -a) + psi(spec, y);
  };
  const double v = integrate_pieces(integrand, pieces(support), abs_tol);
  return infinite ? kInf : v;
}

double fisher_gap(const TargetDensity& f0, const RealFunction& f, double alpha, double abs_tol) {
  Support support{f0.lo, f0.hi, {}};
  return fisher_gap(f0.pdf, f, alpha, support, abs_tol);
}

FitErrors fit_errors(const TargetDensity& target, const DensityEstimate& est, double abs_tol) {
  const Grid1D& grid = est.grid_1d();
  Support support{std::min(target.lo, grid.xi.front()), std::max(target.hi, grid.xi.back()), grid.xi};
  support.breakpoints.push_back(target.lo);
  support.breakpoints.push_back(target.hi);
  const RealFunction fhat = [&est](double x) { return eval_density(est, x); };
  return {squared_hellinger(target.pdf, fhat, support, abs_tol), l1_distance(target.pdf, fhat, support, abs_tol)};
}

std::uint64_t replicate_seed(std::uint64_t base_seed, const std::string& target, std::size_t n, std::size_t rep) {
  // FNV-1a over the name, then splitmix mixing of each field.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : target) h = (h ^ c) * 0x100000001b3ULL;
  std::uint64_t s = splitmix(base_seed);
  s = splitmix(s ^ h);
  s = splitmix(s ^ static_cast<std::uint64_t>(n));
  return splitmix(s ^ static_cast<std::uint64_t>(rep));
}

double ExperimentCell::mean(Metric metric) const {
  const auto& v = metric == Metric::kHellinger ? hellinger : l1;
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ExperimentCell::median(Metric metric) const {
  return median_of(metric == Metric::kHellinger ? hellinger : l1);
}

ExperimentTable run_experiment(const std::vector<std::string>& targets, const std::vector<std::size_t>& sizes,
                               std::size_t reps, const std::vector<double>& alphas, std::uint64_t base_seed,
                               const ExperimentOptions& options) {
  if (reps < 2) throw std::invalid_argument("an experiment needs at least two replications per cell");
  using Key = std::tuple<std::string, std::size_t, double>;
  std::vector<Key> keys;
  for (const auto& t : targets) {
    make_target(t);
    for (std::size_t n : sizes) {
      for (double a : alphas) keys.emplace_back(t, n, a);
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  struct Outcome {
    bool ok = false;
    FitErrors errors;
    std::string message;
  };
  const std::size_t jobs = keys.size() * reps;
  std::vector<Outcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::map<std::string, TargetDensity> cache;
    for (std::size_t j = next++; j < jobs; j = next++) {
      const auto& [name, n, alpha] = keys[j / reps];
      const std::size_t rep = j % reps;
      Outcome& out = outcomes[j];
      try {
        auto it = cache.find(name);
        if (it == cache.end()) it = cache.emplace(name, make_target(name)).first;
        const TargetDensity& target = it->second;
        const Sample sample = Sample::univariate(target.sample(n, replicate_seed(base_seed, name, n, rep)));
        const DensityEstimate est = fit(sample, alpha, options.fit);
        if (est.diagnostics().status != SolverStatus::kConverged) {
          out.message = "replicate " + std::to_string(rep) + ": " + to_string(est.diagnostics().status);
          continue;
        }
        out.errors = fit_errors(target, est, options.abs_tol);
        out.ok = true;
      } catch (const std::exception& e) {
        out.message = "replicate " + std::to_string(rep) + ": " + e.what();
      }
    }
  };
  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  ExperimentTable table;
  table.reps = reps;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    ExperimentCell cell;
    std::tie(cell.target, cell.n, cell.alpha) = keys[c];
    for (std::size_t r = 0; r < reps; ++r) {
      const Outcome& o = outcomes[c * reps + r];
      if (o.ok) {
        cell.hellinger.push_back(o.errors.hellinger);
        cell.l1.push_back(o.errors.l1);
      } else {
        ++cell.failures;
        cell.failure_messages.push_back(o.message);
      }
    }
    table.cells.push_back(std::move(cell));
  }
  return table;
}

std::vector<RateEstimate> estimate_rate(const ExperimentTable& table, Metric metric, bool use_median) {
  struct Obs {
    std::string target;
    double x, y;
  };
  std::map<double, std::vector<Obs>> by_alpha;
  for (const auto& cell : table.cells) {
    const double y = use_median ? cell.median(metric) : cell.mean(metric);
    if (!(y > 0.0) || !std::isfinite(y)) continue;
    by_alpha[cell.alpha].push_back({cell.target, std::log(static_cast<double>(cell.n)), std::log(y)});
  }
  std::vector<RateEstimate> out;
  for (const auto& [alpha, obs] : by_alpha) {
    std::map<std::string, std::pair<double, double>> sums;  // Σx, Σy per target
    std::map<std::string, std::size_t> counts;
    for (const Obs& o : obs) {
      sums[o.target].first += o.x;
      sums[o.target].second += o.y;
      ++counts[o.target];
    }
    double sxx = 0.0, sxy = 0.0;
    for (const Obs& o : obs) {
      const double k = static_cast<double>(counts[o.target]);
      const double dx = o.x - sums[o.target].first / k;
      const double dy = o.y - sums[o.target].second / k;
      sxx += dx * dx;
      sxy += dx * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("rate estimation needs at least two sample sizes");
    RateEstimate r;
    r.alpha = alpha;
    r.beta = sxy / sxx;
    r.observations = obs.size();
    double rss = 0.0;
    for (const Obs& o : obs) {
      const double k = static_cast<double>(counts[o.target]);
      const double e = (o.y - sums[o.target].second / k) - r.beta * (o.x - sums[o.target].first / k);
      rss += e * e;
    }
    const double dof = static_cast<double>(obs.size()) - static_cast<double>(counts.size()) - 1.0;
    r.std_err = dof > 0.0 ? std::sqrt(rss / dof / sxx) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(r);
  }
  return out;
}

}  // namespace rhoconcave
