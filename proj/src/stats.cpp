#include "bohmstab/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bohmstab/error.hpp"

namespace bohmstab {

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly there; the value is 1 to double precision
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
}

}  // namespace

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb)), 0};
}

TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs a non-empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double c = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - c, c - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n), 0};
}

TestResult chi_squared_gof(std::span<const double> observed, std::span<const double> expected, double min_expected) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw Error(ErrorCode::InvalidArgument, "chi-squared needs matching non-empty bins");
  }
  const double n_obs = std::accumulate(observed.begin(), observed.end(), 0.0);
  const double n_exp = std::accumulate(expected.begin(), expected.end(), 0.0);
  if (!(n_exp > 0.0)) throw Error(ErrorCode::InvalidArgument, "expected counts sum to zero");
  const double scale = n_obs / n_exp;

  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    o += observed[k];
    e += expected[k] * scale;
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (!exp.empty()) {
    obs.back() += o;
    exp.back() += e;
  } else {
    obs.push_back(o);
    exp.push_back(e);
  }
  if (exp.size() < 2) throw Error(ErrorCode::InvalidArgument, "too few populated bins for chi-squared");

  double stat = 0.0;
  for (std::size_t k = 0; k < exp.size(); ++k) stat += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
  const std::size_t dof = exp.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return {stat, boost::math::cdf(boost::math::complement(dist, stat)), dof};
}

TrendFit linear_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw Error(ErrorCode::InvalidArgument, "trend fit needs >= 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "trend fit needs distinct x values");
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.dof = x.size() - 2;
  fit.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
  if (fit.slope_stderr == 0.0) {
    fit.t_statistic = fit.slope < 0.0 ? -INFINITY : (fit.slope > 0.0 ? INFINITY : 0.0);
    fit.p_negative = fit.slope < 0.0 ? 0.0 : 1.0;
    return fit;
  }
  fit.t_statistic = fit.slope / fit.slope_stderr;
  const boost::math::students_t dist(static_cast<double>(fit.dof));
  fit.p_negative = boost::math::cdf(dist, fit.t_statistic);
  return fit;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw Error(ErrorCode::InvalidArgument, "variance needs two values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace bohmstab
