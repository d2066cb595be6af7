#include "tunerisk/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"

namespace tunerisk {

namespace {

constexpr int kGridPoints = 257;

double sse(std::span<const MetaPoint> points, FunctionFamily family, double c) {
  double s = 0.0;
  for (const auto& pt : points) {
    const double r = pt.value - evaluate_family(family, c, pt.p);
    s += r * r;
  }
  return s;
}

// Per-point exact solutions bound the least-squares coefficient: below the
// smallest every residual has the same sign and shrinks as c grows, above the
// largest the reverse holds.
std::pair<double, double> coefficient_bounds(std::span<const MetaPoint> points,
                                             FunctionFamily family) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& pt : points) {
    double c = 0.0;
    switch (family) {
      case FunctionFamily::kLinear:
        c = pt.value / pt.p;
        break;
      case FunctionFamily::kPower:
        if (pt.p == 1.0) continue;  // 1^b carries no information on b
        c = std::log(pt.value) / std::log(pt.p);
        break;
      case FunctionFamily::kExpSqrt:
        c = std::exp(std::log(pt.value) / std::sqrt(pt.p));
        break;
      default:
        continue;
    }
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (!(lo <= hi)) {
    throw DataError(std::string("coefficient of ") + std::string(to_string(family)) +
                    " is not identifiable from the data (all p = 1)");
  }
  return {lo, hi};
}

}  // namespace

FunctionFamily parse_family(std::string_view text) {
  if (text == "a*p" || text == "a·p" || text == "linear") return FunctionFamily::kLinear;
  if (text == "p^b" || text == "power") return FunctionFamily::kPower;
  if (text == "c^sqrt(p)" || text == "c^√p" || text == "exp-sqrt") return FunctionFamily::kExpSqrt;
  if (text == "constant" || text == "a") return FunctionFamily::kConstant;
  if (text == "1/p" || text == "inverse") return FunctionFamily::kInverse;
  if (text == "sqrt(p)" || text == "√p" || text == "sqrt") return FunctionFamily::kSqrt;
  throw ConfigError("unknown function family '" + std::string(text) +
                    "' (expected a*p, p^b, c^sqrt(p), constant, 1/p, sqrt(p))");
}

std::string_view to_string(FunctionFamily family) {
  switch (family) {
    case FunctionFamily::kLinear: return "a*p";
    case FunctionFamily::kPower: return "p^b";
    case FunctionFamily::kExpSqrt: return "c^sqrt(p)";
    case FunctionFamily::kConstant: return "constant";
    case FunctionFamily::kInverse: return "1/p";
    case FunctionFamily::kSqrt: return "sqrt(p)";
  }
  return "?";
}

bool has_coefficient(FunctionFamily family) {
  return family != FunctionFamily::kInverse && family != FunctionFamily::kSqrt;
}

double evaluate_family(FunctionFamily family, double coefficient, double p) {
  switch (family) {
    case FunctionFamily::kLinear: return coefficient * p;
    case FunctionFamily::kPower: return std::pow(p, coefficient);
    case FunctionFamily::kExpSqrt: return std::pow(coefficient, std::sqrt(p));
    case FunctionFamily::kConstant: return coefficient;
    case FunctionFamily::kInverse: return 1.0 / p;
    case FunctionFamily::kSqrt: return std::sqrt(p);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

FitMetrics fit_metrics(std::span<const double> predictions, std::span<const double> observations,
                       bool log_metrics) {
  if (predictions.size() != observations.size()) {
    throw DataError("fit metrics need equally long predictions and observations");
  }
  if (observations.size() < 2) throw DataError("fit metrics need at least 2 points");
  const auto n = static_cast<double>(observations.size());

  auto r_squared = [n](std::span<const double> pred, std::span<const double> obs) {
    const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      ss_res += (pred[i] - obs[i]) * (pred[i] - obs[i]);
      ss_tot += (obs[i] - mean) * (obs[i] - mean);
    }
    if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
  };

  FitMetrics m;
  double sq = 0.0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const double r = predictions[i] - observations[i];
    sq += r * r;
  }
  m.rmse = std::sqrt(sq / n);
  m.r2 = r_squared(predictions, observations);

  if (log_metrics) {
    std::vector<double> lp(predictions.size());
    std::vector<double> lo(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
      if (!(predictions[i] > 0.0) || !(observations[i] > 0.0)) {
        throw DataError("logarithmic fit metrics need positive values (point " +
                        std::to_string(i) + ": prediction " + csv::number(predictions[i]) +
                        ", observation " + csv::number(observations[i]) + ")");
      }
      lp[i] = std::log(predictions[i]);
      lo[i] = std::log(observations[i]);
    }
    double lsq = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) lsq += (lp[i] - lo[i]) * (lp[i] - lo[i]);
    m.rmsle = std::sqrt(lsq / n);
    m.lr2 = r_squared(lp, lo);
  }
  return m;
}

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double rel_tol, double abs_tol, int max_iterations) {
  if (lo > hi) std::swap(lo, hi);
  if (lo == hi) return {lo, f(lo), 0};
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2
  double a = lo;
  double b = hi;
  double x = a + kGolden * (b - a);
  double w = x;
  double v = x;
  double fx = f(x);
  double fw = fx;
  double fv = fx;
  double d = 0.0;
  double e = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const double mid = 0.5 * (a + b);
    const double tol1 = rel_tol * std::fabs(x) + abs_tol;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - mid) <= tol2 - 0.5 * (b - a)) return {x, fx, it};

    bool golden = true;
    if (std::fabs(e) > tol1) {
      // Parabola through (v, fv), (w, fw), (x, fx).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_prev = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (mid >= x) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= mid) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = (std::fabs(d) >= tol1) ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  throw DataError("scalar minimization did not converge within " +
                  std::to_string(max_iterations) + " iterations (bracket [" + csv::number(a) +
                  ", " + csv::number(b) + "])");
}

FittedFunction fit_points(std::span<const MetaPoint> points, FunctionFamily family) {
  if (points.size() < 2) throw DataError("meta-feature fit needs at least 2 points");
  for (const auto& pt : points) {
    if (!(pt.p >= 1.0) || !std::isfinite(pt.value)) {
      throw DataError("meta-feature fit: invalid point (p = " + csv::number(pt.p) +
                      ", value = " + csv::number(pt.value) + ")");
    }
    if ((family == FunctionFamily::kPower || family == FunctionFamily::kExpSqrt) &&
        !(pt.value > 0.0)) {
      throw DataError(std::string("family ") + std::string(to_string(family)) +
                      " needs positive values (got " + csv::number(pt.value) + ")");
    }
  }

  FittedFunction fit;
  fit.family = family;
  fit.n_points = points.size();

  if (family == FunctionFamily::kConstant) {
    double sum = 0.0;
    for (const auto& pt : points) sum += pt.value;
    fit.coefficient = sum / static_cast<double>(points.size());
  } else if (has_coefficient(family)) {
    const auto [lo, hi] = coefficient_bounds(points, family);
    auto objective = [&](double c) { return sse(points, family, c); };
    if (hi - lo <= 1e-12 * std::max(1.0, std::fabs(lo))) {
      fit.coefficient = 0.5 * (lo + hi);
    } else {
      // Locate the basin on a grid first; more than one basin means the
      // scalar search could settle in the wrong one.
      std::vector<double> grid(kGridPoints);
      std::vector<double> values(kGridPoints);
      for (int k = 0; k < kGridPoints; ++k) {
        grid[k] = lo + (hi - lo) * k / (kGridPoints - 1);
        values[k] = objective(grid[k]);
      }
      std::vector<int> minima;
      for (int k = 0; k < kGridPoints; ++k) {
        const bool left = k == 0 || values[k] < values[k - 1];
        const bool right = k == kGridPoints - 1 || values[k] <= values[k + 1];
        if (left && right) minima.push_back(k);
      }
      if (minima.size() != 1) {
        std::ostringstream msg;
        msg << "least-squares objective of " << to_string(family) << " is not unimodal on ["
            << csv::number(lo) << ", " << csv::number(hi) << "]: " << minima.size()
            << " local minima near";
        for (int k : minima) msg << ' ' << csv::number(grid[k]);
        throw DataError(msg.str());
      }
      const int k = minima.front();
      const double a = grid[std::max(0, k - 1)];
      const double b = grid[std::min(kGridPoints - 1, k + 1)];
      fit.coefficient = minimize_scalar(objective, a, b, 1e-9).x;
    }
  }

  std::vector<double> pred;
  std::vector<double> obs;
  bool positive = true;
  for (const auto& pt : points) {
    pred.push_back(fit(pt.p));
    obs.push_back(pt.value);
    positive = positive && pred.back() > 0.0 && pt.value > 0.0;
  }
  fit.metrics = fit_metrics(pred, obs, positive);
  return fit;
}

std::string FittedFunction::describe() const {
  const std::string c = coefficient ? csv::number(*coefficient) : "";
  switch (family) {
    case FunctionFamily::kLinear: return c + "*p";
    case FunctionFamily::kPower: return "p^" + c;
    case FunctionFamily::kExpSqrt: return c + "^sqrt(p)";
    case FunctionFamily::kConstant: return c;
    case FunctionFamily::kInverse: return "1/p";
    case FunctionFamily::kSqrt: return "sqrt(p)";
  }
  return "?";
}

nlohmann::json FittedFunction::to_json() const {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
  };
  auto num = [](double v) -> nlohmann::json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  return {
      {"family", std::string(to_string(family))},
      {"function", describe()},
      {"coefficient", opt(coefficient)},
      {"n_points", n_points},
      {"rmse", num(metrics.rmse)},
      {"r2", num(metrics.r2)},
      {"rmsle", opt(metrics.rmsle)},
      {"lr2", opt(metrics.lr2)},
  };
}

FittedFunction fit_meta_function(const TopNSubset& top, std::string_view param,
                                 const MetaTable& meta, FunctionFamily family,
                                 const ConfigurationSpace& space, const MetaFitOptions& options) {
  const auto& d = space.at(param);
  if (!d.is_numeric()) {
    throw DataError("meta-feature fit needs a numeric parameter, '" + std::string(param) +
                    "' is " + std::string(to_string(d.kind())));
  }
  std::vector<MetaPoint> points;
  for (const auto& [dataset, entries] : top.entries) {
    auto it = meta.find(dataset);
    if (it == meta.end()) throw DataError("no metadata for dataset '" + dataset + "'");
    const auto p = static_cast<double>(it->second.n_features);
    for (const auto& e : entries) {
      double v = d.to_number(e.configuration.at(param));
      if (options.values_times_p) v *= p;
      points.push_back({p, v});
    }
  }
  return fit_points(points, family);
}

}  // namespace tunerisk
