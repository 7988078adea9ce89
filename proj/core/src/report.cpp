#include "plsim/report.hpp"

#include <cmath>

namespace plsim {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

json mat(const Matrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

json named(const std::vector<std::string>& names, const Vector& v) {
  json out = json::object();
  for (Index i = 0; i < v.size(); ++i) out[names.at(i)] = num(v(i));
  return out;
}

json bandwidth_json(const Bandwidth& h) {
  return {{"h", num(h.h)}, {"source", h.source == Bandwidth::Source::Fixed ? "fixed" : "cv"}};
}

json support_names(const std::vector<Index>& idx, const std::vector<std::string>& names) {
  json out = json::array();
  for (Index i : idx) out.push_back(names.at(i));
  return out;
}

}  // namespace

std::string to_string(Criterion c) { return c == Criterion::Bic ? "bic" : "aic"; }

std::string to_string(PenaltyMode m) {
  switch (m) {
    case PenaltyMode::Both: return "both";
    case PenaltyMode::BetaOnly: return "beta";
    case PenaltyMode::AlphaOnly: return "alpha";
  }
  return "both";
}

std::string to_string(RkVariant v) { return v == RkVariant::Printed ? "printed" : "squared"; }

std::string to_string(GradientMode g) {
  switch (g) {
    case GradientMode::Exact: return "exact";
    case GradientMode::PlugIn: return "plugin";
    case GradientMode::FiniteDifference: return "fd";
  }
  return "exact";
}

json fit_to_json(const PlsimFit& fit, const Dataset& data, const ReportOptions& opt) {
  const Index p = data.p();
  const Index q = data.q();
  json j;
  j["n"] = fit.n;
  j["kernel"] = std::string(fit.kernel.name());
  j["bandwidth"] = bandwidth_json(fit.h);
  j["bandwidth_refit"] = fit.bandwidth_refit;
  j["alpha"] = named(data.z_names(), fit.zeta_hat.alpha());
  j["beta"] = named(data.x_names(), fit.zeta_hat.beta());
  j["se"] = {{"alpha", named(data.z_names(), fit.se.head(p))}, {"beta", named(data.x_names(), fit.se.tail(q))}};
  j["covariance_ok"] = fit.covariance_ok;
  j["cov"] = mat(fit.cov);
  j["dhat"] = mat(fit.dhat);
  j["sigma2"] = num(fit.sigma2_hat);
  j["q_value"] = num(fit.q_value);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = num(fit.gradient_norm);
  json trace = json::array();
  for (double v : fit.objective_trace) trace.push_back(num(v));
  j["objective_trace"] = std::move(trace);
  if (opt.include_curve) {
    json curve = json::array();
    for (const auto& s : fit.eta_curve) {
      curve.push_back({{"u", num(s.u)}, {"eta", num(s.eta)}, {"derivative", num(s.derivative)},
                       {"variance_constant", num(s.variance_constant)}});
    }
    j["link_curve"] = std::move(curve);
  }
  return j;
}

json path_to_json(const ScadPath& path, const PlsimFit& unpenalized, const Dataset& data, const ReportOptions& opt) {
  json j;
  j["criterion"] = to_string(path.criterion);
  j["penalize"] = to_string(path.mode);
  j["lambda_max"] = num(path.lambda_max);
  j["bandwidth"] = bandwidth_json(unpenalized.h);
  json pts = json::array();
  for (const auto& pt : path.points) {
    pts.push_back({{"lambda", num(pt.lambda)},
                   {"bic", num(pt.bic)},
                   {"aic", num(pt.aic)},
                   {"df", pt.fit.df},
                   {"mse", num(pt.fit.mse)},
                   {"converged", pt.fit.converged},
                   {"all_zero", pt.fit.all_zero},
                   {"alpha", vec(pt.fit.zeta.alpha())},
                   {"beta", vec(pt.fit.zeta.beta())}});
  }
  j["path"] = std::move(pts);
  const auto& sel = path.points.at(path.selected_index);
  j["selected"] = {{"lambda", num(sel.lambda)},
                   {"alpha", named(data.z_names(), sel.fit.zeta.alpha())},
                   {"beta", named(data.x_names(), sel.fit.zeta.beta())},
                   {"alpha_support", support_names(path.selected_alpha_support, data.z_names())},
                   {"beta_support", support_names(path.selected_beta_support, data.x_names())},
                   {"df", sel.fit.df},
                   {"objective_trace", sel.fit.objective_trace}};
  j["unpenalized"] = fit_to_json(unpenalized, data, ReportOptions{opt.deterministic, false});
  return j;
}

json test_to_json(const TestResult& r, const Dataset* data) {
  json j;
  j["method"] = to_string(r.method);
  j["statistic"] = num(r.statistic);
  j["df"] = num(r.df);
  j["noncentrality"] = num(r.noncentrality);
  j["p_value"] = num(r.p_value);
  j["bandwidth"] = num(r.bandwidth);
  j["kernel"] = std::string(r.kernel.name());
  j["n"] = r.n;
  j["rss_null"] = num(r.rss_null);
  j["rss_alt"] = num(r.rss_alt);
  auto zeta = [&](const ZetaParam& z) {
    if (data) return json{{"alpha", named(data->z_names(), z.alpha())}, {"beta", named(data->x_names(), z.beta())}};
    return json{{"alpha", vec(z.alpha())}, {"beta", vec(z.beta())}};
  };
  if (r.zeta_null) j["zeta_null"] = zeta(*r.zeta_null);
  j["zeta_alt"] = zeta(r.zeta_alt);
  j["warnings"] = r.warnings;
  return j;
}

json sim_to_json(const SimReport& rep, const ReportOptions& opt) {
  const SimDesign& d = rep.design;
  json j;
  json design = {{"example", d.example_id},
                 {"n", d.n},
                 {"sigma", num(d.sigma)},
                 {"reps", d.reps},
                 {"seed", d.seed},
                 {"level", num(d.level)},
                 {"kernel", std::string(d.fit.kernel.name())},
                 {"tol", num(d.fit.tol)},
                 {"max_iter", d.fit.max_iter},
                 {"gradient", to_string(d.fit.gradient)}};
  if (d.fit.bandwidth) design["bandwidth"] = num(d.fit.bandwidth->h);
  if (d.example_id == "1b") design["beta"] = num(d.beta);
  if (d.example_id.rfind('2', 0) == 0) {
    design["criterion"] = to_string(d.criterion);
    design["penalize"] = to_string(d.penalty);
    design["grid"] = d.grid_size;
    design["eval_draws"] = d.eval_draws;
    if (d.criterion == Criterion::Aic) design["aic_penalty"] = d.classic_aic ? "classic" : "printed";
  }
  if (!d.c_grid.empty()) design["c_grid"] = d.c_grid;
  if (d.example_id == "4") design["rk_variant"] = to_string(d.rk_variant);
  j["design"] = std::move(design);
  j["kind"] = rep.kind;
  j["seed"] = d.seed;

  if (!rep.params.empty()) {
    json ps = json::array();
    for (const auto& p : rep.params) {
      ps.push_back({{"name", p.name}, {"truth", num(p.truth)}, {"mean", num(p.mean)}, {"mse", num(p.mse)}});
    }
    j["parameters"] = std::move(ps);
  }
  if (!rep.selection.empty()) {
    json ss = json::array();
    for (const auto& s : rep.selection) {
      ss.push_back({{"method", s.method},
                    {"alpha", {{"mrme", num(s.mrme_alpha)}, {"C", num(s.c_alpha)}, {"I", num(s.i_alpha)}}},
                    {"beta", {{"mrme", num(s.mrme_beta)}, {"C", num(s.c_beta)}, {"I", num(s.i_beta)}}}});
    }
    j["selection"] = std::move(ss);
  }
  if (!rep.power.empty()) {
    json pw = json::array();
    for (const auto& p : rep.power) {
      json e = {{"c", num(p.c)}, {"rejection", num(p.rejection)}, {"valid", p.valid}};
      if (d.example_id == "3") {
        e["rejection_wald"] = num(p.rejection_wald);
        e["theoretical"] = num(p.theoretical);
      }
      pw.push_back(std::move(e));
    }
    j["power"] = std::move(pw);
  }
  j["attempted"] = rep.attempted;
  j["failures"] = rep.failures;
  j["failure_rate"] = num(rep.failure_rate);
  j["failure_messages"] = rep.failure_messages;
  if (!opt.deterministic) j["runtime_seconds"] = num(rep.runtime_seconds);
  return j;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

}  // namespace plsim
