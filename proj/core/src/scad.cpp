#include "plsim/scad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plsim/errors.hpp"
#include "plsim/parametrization.hpp"
#include "plsim/profile_problem.hpp"

namespace plsim {

namespace {

double variance_of(const Vector& y) {
  if (y.size() < 2) return 1.0;
  return (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
}

constexpr double kAitkenTol = 0.05;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::vector<Index> support(const Vector& v, Index from = 0) {
  std::vector<Index> out;
  for (Index j = from; j < v.size(); ++j)
    if (v(j) != 0.0) out.push_back(j);
  return out;
}

}  // namespace

double scad_deriv(const ScadPenalty& pen, double theta) {
  if (theta <= pen.lambda) return pen.lambda;
  return std::max(pen.a * pen.lambda - theta, 0.0) / (pen.a - 1.0);
}

double scad_value(const ScadPenalty& pen, double theta) {
  const double l = pen.lambda;
  if (theta <= l) return l * theta;
  if (theta <= pen.a * l) return -(theta * theta - 2.0 * pen.a * l * theta + l * l) / (2.0 * (pen.a - 1.0));
  return l * l * (pen.a + 1.0) / 2.0;
}

PenaltyMode parse_penalty_mode(const std::string& text) {
  if (text == "both") return PenaltyMode::Both;
  if (text == "beta") return PenaltyMode::BetaOnly;
  if (text == "alpha") return PenaltyMode::AlphaOnly;
  throw Error(ErrorCode::InvalidInput, "unknown penalty mode '" + text + "' (expected both|beta|alpha)");
}

Criterion parse_criterion(const std::string& text) {
  if (text == "bic") return Criterion::Bic;
  if (text == "aic") return Criterion::Aic;
  throw Error(ErrorCode::InvalidInput, "unknown criterion '" + text + "' (expected bic|aic)");
}

PenaltyPlan lambda_plan(double base_lambda, const PlsimFit& unpenalized, PenaltyMode mode) {
  const Index p = unpenalized.zeta_hat.p();
  const Index q = unpenalized.zeta_hat.q();
  PenaltyPlan plan;
  plan.penalize_alpha = mode != PenaltyMode::BetaOnly;
  plan.penalize_beta = mode != PenaltyMode::AlphaOnly;
  plan.lambda1 = Vector::Zero(p);
  plan.lambda2 = Vector::Zero(q);
  const Vector& se = unpenalized.se;
  auto need = [&](Index k) {
    if (se.size() != p + q || !std::isfinite(se(k))) {
      throw Error(ErrorCode::NonFiniteSE, "unpenalized standard error is not finite", {{"coefficient", k}});
    }
    return se(k);
  };
  if (plan.penalize_alpha)
    for (Index j = 1; j < p; ++j) plan.lambda1(j) = base_lambda * need(j);
  if (plan.penalize_beta)
    for (Index k = 0; k < q; ++k) plan.lambda2(k) = base_lambda * need(p + k);
  return plan;
}

double penalized_objective(const ZetaParam& zeta, const Dataset& data, const PenaltyPlan& plan, Bandwidth h,
                           const Kernel& kernel) {
  const double n = static_cast<double>(data.n());
  double pen = 0.0;
  for (Index j = 0; j < plan.lambda1.size(); ++j)
    pen += scad_value({plan.a, plan.lambda1(j)}, std::abs(zeta.alpha()(j)));
  for (Index k = 0; k < plan.lambda2.size(); ++k)
    pen += scad_value({plan.a, plan.lambda2(k)}, std::abs(zeta.beta()(k)));
  return 0.5 * profile_objective(zeta, data, h, kernel) + n * pen;
}

PenalizedFit penalized_fit(const Dataset& data, const PenaltyPlan& plan, const ZetaParam& init, Bandwidth h,
                           const Kernel& kernel, const PenalizedOptions& options) {
  const Index p = data.p();
  const Index q = data.q();
  const double n = static_cast<double>(data.n());
  if (plan.lambda1.size() != p || plan.lambda2.size() != q || init.p() != p || init.q() != q) {
    throw Error(ErrorCode::InvalidInput, "penalty plan dimensions do not match the dataset");
  }
  const double thr = options.zero_threshold;

  BfgsOptions bopt;
  bopt.grad_tol = options.tol * n * std::max(variance_of(data.y()), 1e-300);
  bopt.step_tol = options.tol;
  bopt.max_iter = options.max_iter;

  Vector alpha = init.alpha();
  Vector beta = init.beta();
  for (Index j = 1; j < p; ++j)
    if (std::abs(alpha(j)) < thr) alpha(j) = 0.0;
  for (Index k = 0; k < q; ++k)
    if (std::abs(beta(k)) < thr) beta(k) = 0.0;
  alpha /= alpha.norm();

  PenalizedFit out;
  auto record = [&] {
    out.zeta = ZetaParam(IndexParam::normalized(alpha), beta);
    out.objective_trace.push_back(penalized_objective(out.zeta, data, plan, h, kernel));
  };
  record();
  std::vector<Vector> history;  // iterates before each LQA step

  for (int outer = 0; outer < options.max_outer; ++outer) {
    out.outer_iterations = outer + 1;
    std::vector<Index> active_alpha{0};
    for (Index j = 1; j < p; ++j)
      if (alpha(j) != 0.0) active_alpha.push_back(j);
    const std::vector<Index> active_beta = support(beta);

    QuadraticPenalty quad{Vector::Zero(p), Vector::Zero(q)};
    for (Index j : active_alpha) {
      const double t = std::abs(alpha(j));
      if (plan.lambda1(j) > 0.0 && t > 0.0) quad.alpha(j) = scad_deriv({plan.a, plan.lambda1(j)}, t) / t;
    }
    for (Index k : active_beta) {
      const double t = std::abs(beta(k));
      if (plan.lambda2(k) > 0.0) quad.beta(k) = scad_deriv({plan.a, plan.lambda2(k)}, t) / t;
    }

    const SphereChart chart = SphereChart::coordinates(p, active_alpha);
    const ProfileProblem problem(data, h.h, kernel, chart, BetaMap::coordinates(p, q, active_beta), quad);
    const BfgsResult opt = problem.minimize(chart.chart_of(alpha), bopt);
    const auto ev = problem.evaluate(opt.x, false);

    Vector new_alpha = ev.alpha;
    Vector new_beta = ev.beta;
    if (new_alpha(0) < 0.0) new_alpha = -new_alpha;
    Vector before(p + q);
    before << alpha, beta;
    Vector stacked(p + q);
    stacked << new_alpha, new_beta;
    // LQA only approaches zero geometrically. A penalized coefficient that is
    // shrinking monotonically and whose Aitken extrapolated limit is ~0 is
    // zeroed now rather than after dozens more iterations.
    for (Index j = 1; j < p + q; ++j) {
      const double lam = j < p ? plan.lambda1(j) : plan.lambda2(j - p);
      if (std::abs(stacked(j)) < thr) {
        stacked(j) = 0.0;
      } else if (lam > 0.0 && !history.empty()) {
        const double t0 = history.back()(j);
        const double t1 = before(j);
        const double r1 = t1 != 0.0 ? stacked(j) / t1 : 0.0;
        const double r0 = t0 != 0.0 ? t1 / t0 : 0.0;
        const double d1 = stacked(j) - t1;
        const double d0 = t1 - t0;
        if (r1 > 0.0 && r1 < 1.0 && r0 > 0.0 && r0 < 1.0 && d1 != d0 && std::abs(stacked(j)) < lam) {
          const double limit = stacked(j) - d1 * d1 / (d1 - d0);
          if (limit * stacked(j) <= 0.0 || std::abs(limit) < kAitkenTol * std::abs(stacked(j))) stacked(j) = 0.0;
        }
      }
    }
    new_alpha = stacked.head(p);
    new_beta = stacked.tail(q);
    new_alpha /= new_alpha.norm();

    const bool same_support = support(new_alpha, 1) == support(alpha, 1) && support(new_beta) == support(beta);
    Vector after(p + q);
    after << new_alpha, new_beta;
    const double change = inf_norm(after - before);
    history.push_back(before);
    alpha = std::move(new_alpha);
    beta = std::move(new_beta);
    record();
    if (same_support && change <= options.outer_tol * (1.0 + inf_norm(before))) {
      out.converged = true;
      break;
    }
  }

  out.q_value = profile_objective(out.zeta, data, h, kernel);
  out.mse = out.q_value / n;
  out.df = 0;
  for (Index j = 0; j < p; ++j) out.df += alpha(j) != 0.0 ? 1 : 0;
  for (Index k = 0; k < q; ++k) out.df += beta(k) != 0.0 ? 1 : 0;
  out.all_zero = support(alpha, 1).empty() && support(beta).empty();
  return out;
}

double information_criterion(Criterion criterion, double mse, Index n, Index df, Index p_plus_q, bool classic_aic) {
  const double nn = static_cast<double>(n);
  double c = std::log(nn);
  if (criterion == Criterion::Aic) c = classic_aic ? 2.0 : 2.0 * static_cast<double>(p_plus_q);
  return std::log(mse) + c * static_cast<double>(df) / nn;
}

ScadPath bic_search(const Dataset& data, const PlsimFit& unpenalized, const SearchOptions& options) {
  if (options.grid_size < 2) throw Error(ErrorCode::InvalidInput, "lambda grid needs at least 2 points");
  const Index p = data.p();
  const Index q = data.q();
  PenalizedOptions fit_opt = options.fit;
  fit_opt.zero_threshold = 1e-8 * (1.0 + inf_norm(unpenalized.zeta_hat.stacked()));

  auto plan_for = [&](double lambda) {
    PenaltyPlan plan = lambda_plan(lambda, unpenalized, options.mode);
    plan.a = options.a;
    return plan;
  };

  ScadPath path;
  path.mode = options.mode;
  path.criterion = options.criterion;

  // Smallest power of two (from 1) that zeroes everything.
  double lambda_max = 1.0;
  for (int k = 0; k <= 20; ++k) {
    lambda_max = std::ldexp(1.0, k);
    const PenalizedFit f =
        penalized_fit(data, plan_for(lambda_max), unpenalized.zeta_hat, unpenalized.h, unpenalized.kernel, fit_opt);
    if (f.all_zero) break;
  }
  path.lambda_max = lambda_max;

  auto score = [&](const ScadPathPoint& pt) { return options.criterion == Criterion::Bic ? pt.bic : pt.aic; };
  auto select = [&] {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.points.size(); ++k) {
      if (score(path.points[k]) < best) {
        best = score(path.points[k]);
        path.selected_index = k;
      }
    }
  };
  // Even grid on [lo, hi], warm-started left to right from `warm`.
  auto run_grid = [&](double lo, double hi, ZetaParam warm) {
    for (int g = 0; g < options.grid_size; ++g) {
      const double lambda = lo + (hi - lo) * g / (options.grid_size - 1);
      const auto same = std::find_if(path.points.begin(), path.points.end(),
                                     [&](const ScadPathPoint& pt) { return pt.lambda == lambda; });
      if (same != path.points.end()) {
        warm = same->fit.zeta;
        continue;
      }
      ScadPathPoint pt;
      pt.lambda = lambda;
      pt.fit = penalized_fit(data, plan_for(lambda), warm, unpenalized.h, unpenalized.kernel, fit_opt);
      pt.bic = information_criterion(Criterion::Bic, pt.fit.mse, data.n(), pt.fit.df, p + q);
      pt.aic = information_criterion(Criterion::Aic, pt.fit.mse, data.n(), pt.fit.df, p + q, options.classic_aic);
      warm = pt.fit.zeta;
      path.points.push_back(std::move(pt));
    }
    std::sort(path.points.begin(), path.points.end(),
              [](const ScadPathPoint& a, const ScadPathPoint& b) { return a.lambda < b.lambda; });
  };

  run_grid(0.0, lambda_max, unpenalized.zeta_hat);
  select();
  for (int round = 0; round < options.refine_rounds; ++round) {
    const std::size_t s = path.selected_index;
    const std::size_t lo = s > 0 ? s - 1 : s;
    const std::size_t hi = std::min(s + 1, path.points.size() - 1);
    if (lo == hi) break;
    run_grid(path.points[lo].lambda, path.points[hi].lambda, path.points[lo].fit.zeta);
    select();
  }

  const PenalizedFit& sel = path.selected();
  path.selected_alpha_support = support(sel.zeta.alpha());
  path.selected_beta_support = support(sel.zeta.beta());
  return path;
}

PlsimFit fit_submodel(const Dataset& data, const std::vector<Index>& alpha_support,
                      const std::vector<Index>& beta_support, Bandwidth h, const ZetaParam& init,
                      const FitOptions& options) {
  const Index p = data.p();
  const Index q = data.q();
  if (alpha_support.empty() || alpha_support.front() != 0) {
    throw Error(ErrorCode::InvalidInput, "alpha support must start with the first coefficient");
  }
  const auto pa = static_cast<Index>(alpha_support.size());
  const auto qb = static_cast<Index>(beta_support.size());
  Matrix z(data.n(), pa), x(data.n(), qb);
  Vector a0(pa), b0(qb);
  for (Index j = 0; j < pa; ++j) {
    z.col(j) = data.z().col(alpha_support[j]);
    a0(j) = init.alpha()(alpha_support[j]);
  }
  for (Index k = 0; k < qb; ++k) {
    x.col(k) = data.x().col(beta_support[k]);
    b0(k) = init.beta()(beta_support[k]);
  }
  if (!(a0.norm() > 0.0)) a0 = Vector::Unit(pa, 0);
  const Dataset sub(data.y(), std::move(z), std::move(x));
  FitOptions opt = options;
  opt.bandwidth = h;
  opt.init = ZetaParam(IndexParam::normalized(a0), b0);
  PlsimFit sf;
  try {
    sf = fit_plsim(sub, opt);
  } catch (const NoConvergenceError& e) {
    sf = e.best();
  }

  auto full_index = [&](Index k) { return k < pa ? alpha_support[k] : p + beta_support[k - pa]; };
  Vector alpha = Vector::Zero(p), beta = Vector::Zero(q);
  for (Index j = 0; j < pa; ++j) alpha(alpha_support[j]) = sf.zeta_hat.alpha()(j);
  for (Index k = 0; k < qb; ++k) beta(beta_support[k]) = sf.zeta_hat.beta()(k);
  PlsimFit out = sf;
  out.zeta_hat = ZetaParam(IndexParam::normalized(alpha), beta);
  out.dhat = Matrix::Zero(p + q, p + q);
  out.cov = Matrix::Zero(p + q, p + q);
  out.se = Vector::Zero(p + q);
  for (Index r = 0; r < pa + qb; ++r) {
    out.se(full_index(r)) = sf.se(r);
    for (Index c = 0; c < pa + qb; ++c) {
      out.dhat(full_index(r), full_index(c)) = sf.dhat(r, c);
      out.cov(full_index(r), full_index(c)) = sf.cov(r, c);
    }
  }
  out.n = data.n();
  return out;
}

}  // namespace plsim
