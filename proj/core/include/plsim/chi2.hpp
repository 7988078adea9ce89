#pragma once

namespace plsim {

/// CDF of the (noncentral) chi-square distribution with real df > 0.
/// Central case: regularized lower incomplete gamma P(df/2, x/2). Noncentral:
/// Poisson mixture of central CDFs, summed outward from the Poisson mode until
/// terms fall below 1e-14.
double chi2_cdf(double x, double df, double noncentrality = 0.0);

/// Upper tail 1 - chi2_cdf, computed without cancellation in the central case.
double chi2_sf(double x, double df, double noncentrality = 0.0);

/// Inverse of chi2_cdf by bisection to 1e-10.
double chi2_quantile(double prob, double df, double noncentrality = 0.0);

}  // namespace plsim
