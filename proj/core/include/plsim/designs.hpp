#pragma once

#include <cstdint>
#include <string>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/rng.hpp"

namespace plsim {

/// Sin link constants shared by the sin-link designs.
inline constexpr double kSinLinkA = 0.3912;
inline constexpr double kSinLinkB = 1.3409;

double sin_link(double u);

struct SimSample {
  Dataset data;
  Vector alpha;  // true index
  Vector beta;   // true linear coefficients
  double sigma = 0.0;
};

enum class Scenario { I, II, III };
Scenario parse_scenario(const std::string& text);
std::string to_string(Scenario s);

/// y = 4 {(z1 + z2 - 1)/sqrt 2}^2 + 4 + 0.2 e, z ~ U[0,1]^2.
SimSample gen_model41(Index n, RandomStream& rng);
SimSample gen_model41(Index n, std::uint64_t seed);

/// y = sin{((z1+z2+z3)/sqrt 3 - a) pi/(b-a)} + beta X + sigma e; X alternates
/// 0, 1, 0, ... starting with X = 0 in the first row.
SimSample gen_model42(Index n, double sigma, double beta, RandomStream& rng);
SimSample gen_model42(Index n, double sigma, double beta, std::uint64_t seed);

/// Index and linear covariates of the 8 + 12 dimensional selection design.
struct Covariates {
  Matrix z;
  Matrix x;
};
Covariates draw_example2_covariates(Scenario scenario, Index n, RandomStream& rng);

/// True coefficients of the selection design: alpha has 4 nonzeros out of 8,
/// beta has 6 out of 12.
Vector example2_alpha();
Vector example2_beta();

/// Sin-link response on the selection design's covariates.
SimSample gen_example2(Scenario scenario, Index n, double sigma, RandomStream& rng);
SimSample gen_example2(Scenario scenario, Index n, double sigma, std::uint64_t seed);

/// Scenario (i) with beta_3 = beta_4 = beta_5 = beta_7 = c1 (1-based).
SimSample gen_example3(Index n, double sigma, double c1, RandomStream& rng);

/// y = eta((z1+z2+z3)/sqrt 3) - 0.5 x1 + 0.3 x2 + sigma e with
/// eta(u) = c2 sin{pi (u - a)/(b - a)} + u; z and x uniform on [0, 1].
SimSample gen_example4(Index n, double sigma, double c2, RandomStream& rng);

}  // namespace plsim
