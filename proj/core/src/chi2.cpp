#include "plsim/chi2.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

void check_args(double x, double df, double nc) {
  if (!std::isfinite(x) || !(df > 0.0) || !std::isfinite(df) || !(nc >= 0.0) || !std::isfinite(nc)) {
    throw Error(ErrorCode::InvalidInput, "chi-square arguments must be finite with df > 0 and noncentrality >= 0",
                {{"x", x}, {"df", df}, {"noncentrality", nc}});
  }
}

// sum_j Pois(j; nc/2) * F(df + 2j), summed outward from the mode.
template <class F>
double poisson_mixture(double df, double nc, F central) {
  const double mu = 0.5 * nc;
  const auto mode = static_cast<long>(std::floor(mu));
  auto weight = [&](long j) {
    return std::exp(-mu + static_cast<double>(j) * std::log(mu) - std::lgamma(static_cast<double>(j) + 1.0));
  };
  double total = 0.0;
  for (long j = mode; j >= 0; --j) {
    const double term = weight(j) * central(df + 2.0 * static_cast<double>(j));
    total += term;
    if (term < 1e-14 && j < mode) break;
  }
  for (long j = mode + 1;; ++j) {
    const double w = weight(j);
    const double term = w * central(df + 2.0 * static_cast<double>(j));
    total += term;
    if (w < 1e-14 && term < 1e-14) break;
  }
  return std::min(1.0, std::max(0.0, total));
}

}  // namespace

double chi2_cdf(double x, double df, double nc) {
  check_args(x, df, nc);
  if (x <= 0.0) return 0.0;
  if (nc == 0.0) return boost::math::gamma_p(0.5 * df, 0.5 * x);
  return poisson_mixture(df, nc, [x](double d) { return boost::math::gamma_p(0.5 * d, 0.5 * x); });
}

double chi2_sf(double x, double df, double nc) {
  check_args(x, df, nc);
  if (x <= 0.0) return 1.0;
  if (nc == 0.0) return boost::math::gamma_q(0.5 * df, 0.5 * x);
  return poisson_mixture(df, nc, [x](double d) { return boost::math::gamma_q(0.5 * d, 0.5 * x); });
}

double chi2_quantile(double prob, double df, double nc) {
  if (!(prob >= 0.0 && prob < 1.0)) throw Error(ErrorCode::InvalidInput, "quantile level must be in [0, 1)");
  check_args(0.0, df, nc);
  if (prob == 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, df + nc);
  while (chi2_cdf(hi, df, nc) < prob) hi *= 2.0;
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, df, nc) < prob) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace plsim
