// One line per acceptance criterion; exit status is the number of failures.
// Usage: plsim_acceptance <path-to-plsim-cli> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "plsim/chi2.hpp"
#include "plsim/designs.hpp"
#include "plsim/kernel.hpp"
#include "plsim/profile.hpp"
#include "plsim/rng.hpp"
#include "plsim/scad.hpp"
#include "plsim/simlab.hpp"
#include "plsim/smoother.hpp"

using namespace plsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Criterion 1: model 4.1 estimation table.
Verdict criterion1() {
  SimDesign d = default_design("1a");
  d.n = 200;
  d.reps = 200;
  d.threads = threads();
  const SimReport r = run_mc_estimation(d);
  const ParamSummary& a1 = r.params.at(0);
  const double ref = 4.46e-4;
  const bool ok_mean = std::abs(a1.mean - 0.7071) < 0.01;
  const bool ok_mse = a1.mse > ref / 2 && a1.mse < ref * 2;
  return {ok_mean && ok_mse, "mean(alpha1)=" + fmt(a1.mean, 6) + " mse=" + fmt(a1.mse) + " (target 4.46e-4, x2 band)" +
                                 " failures=" + std::to_string(r.failures)};
}

// Criterion 2: model 4.2 beta at n = 100.
Verdict criterion2() {
  SimDesign d = default_design("1b");
  d.n = 100;
  d.reps = 200;
  d.threads = threads();
  const SimReport r = run_mc_estimation(d);
  const ParamSummary& b = r.params.back();
  const double ref = 4.70e-4;
  const bool ok = std::abs(b.mean - 0.3) < 0.01 && b.mse > ref / 2 && b.mse < ref * 2;
  return {ok, "mean(beta)=" + fmt(b.mean, 6) + " mse=" + fmt(b.mse) + " (target 4.70e-4, x2 band) failures=" +
                  std::to_string(r.failures)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path workdir() {
  const fs::path d = fs::temp_directory_path() / "plsim_acceptance";
  fs::create_directories(d);
  return d;
}

// The simulate report shared by criteria 3 and 9.
fs::path selection_report(const std::string& cli, int nthreads, const std::string& tag, int& status) {
  const fs::path out = workdir() / ("sim_2i_seed7_" + tag + ".json");
  fs::remove(out);
  const std::string cmd = "\"" + cli + "\" simulate --example 2i --seed 7 --deterministic --threads " +
                          std::to_string(nthreads) + " --out \"" + out.string() + "\"";
  status = std::system(cmd.c_str());
  return out;
}

struct SharedSelection {
  bool ran = false;
  int status = -1;
  fs::path first;
};
SharedSelection g_sel;

void ensure_selection(const std::string& cli) {
  if (g_sel.ran) return;
  g_sel.first = selection_report(cli, 1, "t1a", g_sel.status);
  g_sel.ran = true;
}

// Criterion 3: scenario (i) selection counts from the 2i seed 7 report.
Verdict criterion3(const std::string& cli) {
  ensure_selection(cli);
  if (g_sel.status != 0 || !fs::exists(g_sel.first)) return {false, "simulate exited with " + std::to_string(g_sel.status)};
  const auto j = nlohmann::json::parse(slurp(g_sel.first));
  const auto& row = j.at("selection").at(0);
  const double ca = row["alpha"]["C"], ia = row["alpha"]["I"], cb = row["beta"]["C"], ib = row["beta"]["I"];
  const bool ok = row["method"] == "S-BIC" && ca >= 3.6 && ia <= 0.15 && cb >= 5.0 && ib <= 0.3;
  return {ok, "S-BIC C(alpha)=" + fmt(ca) + " I(alpha)=" + fmt(ia) + " C(beta)=" + fmt(cb) + " I(beta)=" + fmt(ib) +
                  " MRME(alpha)=" + fmt(row["alpha"]["mrme"].get<double>(), 3) +
                  " MRME(beta)=" + fmt(row["beta"]["mrme"].get<double>(), 3) +
                  " reps=" + std::to_string(j["attempted"].get<int>())};
}

// Criterion 4: T1 size and power on example 3.
Verdict criterion4() {
  SimDesign d = default_design("3");
  d.reps = 500;
  d.c_grid = {0.0, 0.05};
  d.threads = threads();
  const SimReport r = run_mc_power(d);
  const double size = r.power[0].rejection, power = r.power[1].rejection;
  const bool ok = size >= 0.03 && size <= 0.08 && power >= 0.90;
  return {ok, "size(c1=0)=" + fmt(size) + " power(c1=0.05)=" + fmt(power) + " wald size=" +
                  fmt(r.power[0].rejection_wald) + " wald power=" + fmt(r.power[1].rejection_wald) +
                  " failures=" + std::to_string(r.failures)};
}

// Criterion 5: T2 size and power on example 4.
Verdict criterion5() {
  SimDesign d = default_design("4");
  d.reps = 500;
  d.c_grid = {0.0, 0.075};
  d.threads = threads();
  const SimReport r = run_mc_power(d);
  const double size = r.power[0].rejection, power = r.power[1].rejection;
  const bool ok = size >= 0.03 && size <= 0.08 && power >= 0.90;
  return {ok, "size(c2=0)=" + fmt(size) + " power(c2=0.075)=" + fmt(power) + " (printed r_K) failures=" +
                  std::to_string(r.failures)};
}

double ks_distance(std::vector<double> t, double df) {
  std::sort(t.begin(), t.end());
  const double n = static_cast<double>(t.size());
  double d = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = chi2_cdf(std::max(t[i], 0.0), df);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Criterion 6: T1 null distribution against chi-square with 4 df.
Verdict criterion6() {
  SimDesign d = default_design("3");
  d.n = 400;
  d.reps = 500;
  d.c_grid = {0.0};
  d.threads = threads();
  const SimReport r = run_mc_power(d);
  const auto& stats = r.power[0].statistics;
  const double ks = ks_distance(stats, 4.0);
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= stats.size();
  return {ks < 0.08, "KS=" + fmt(ks) + " over " + std::to_string(stats.size()) + " draws, mean T1=" + fmt(mean) +
                         " (chi2_4 mean 4)"};
}

// Criterion 7: oracle property at n = 2000.
Verdict criterion7() {
  RandomStream rng(2026, 0);
  const SimSample s = gen_example2(Scenario::I, 2000, 0.1, rng);
  const PlsimFit full = fit_plsim(s.data);
  const ScadPath path = bic_search(s.data, full);
  std::vector<Index> ta, tb;
  for (Index j = 0; j < s.alpha.size(); ++j) if (s.alpha(j) != 0.0) ta.push_back(j);
  for (Index k = 0; k < s.beta.size(); ++k) if (s.beta(k) != 0.0) tb.push_back(k);
  const bool support = path.selected_alpha_support == ta && path.selected_beta_support == tb;
  const PlsimFit oracle = fit_submodel(s.data, ta, tb, full.h, full.zeta_hat);
  const Vector sel = path.selected().zeta.stacked();
  const Vector orc = oracle.zeta_hat.stacked();
  double worst = 0.0;
  bool within = true;
  for (Index k = 0; k < sel.size(); ++k) {
    if (sel(k) == 0.0) continue;
    const double z = std::abs(sel(k) - orc(k)) / oracle.se(k);
    worst = std::max(worst, z);
    if (!(z <= 2.0)) within = false;
  }
  return {support && within, std::string("support ") + (support ? "matches" : "differs") +
                                 ", max |selected - oracle|/se=" + fmt(worst, 3) +
                                 " lambda=" + fmt(path.points[path.selected_index].lambda, 4)};
}

// Criterion 8: deterministic numerical properties.
Verdict criterion8() {
  std::vector<std::string> bad;
  const Kernel tri;
  const Kernel kernels[] = {Kernel(KernelType::Triweight), Kernel(KernelType::Quartic),
                            Kernel(KernelType::Epanechnikov)};

  {  // degree-1 reproduction
    RandomStream rng(81, 0);
    Vector lambda(100);
    for (Index i = 0; i < 100; ++i) lambda(i) = rng.uniform();
    const Vector affine = (1.5 - 2.0 * lambda.array()).matrix();
    double worst = 0.0;
    for (const Kernel& k : kernels)
      for (double h : {0.1, 0.3, 0.8})
        for (double u : {0.05, 0.4, 0.61, 0.95}) {
          const LocalFit f = local_linear_fit(u, lambda, affine, Bandwidth::fixed(h), k);
          worst = std::max(worst, std::abs(f.a_hat - (1.5 - 2.0 * u)));
        }
    if (!(worst < 1e-10)) bad.push_back("reproduction " + fmt(worst));
  }
  {  // exact gradient vs central differences
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RandomStream rng(800 + seed, 0);
      const Index n = 100, p = 2 + seed % 4, q = seed % 3;
      Matrix z(n, p), x(n, q);
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) z(i, j) = rng.uniform();
        for (Index k = 0; k < q; ++k) x(i, k) = rng.normal();
      }
      const Vector a0 = Vector::Ones(p) / std::sqrt(double(p));
      Vector y = x * Vector::LinSpaced(q, 0.5, -0.5);
      const Vector idx = z * a0;
      for (Index i = 0; i < n; ++i) y(i) += std::sin(3.0 * idx(i)) + 0.1 * rng.normal();
      Vector dir(p);
      for (Index j = 0; j < p; ++j) dir(j) = a0(j) + 0.3 * rng.normal();
      dir(0) = std::abs(dir(0)) + 0.2;
      Vector b(q);
      for (Index k = 0; k < q; ++k) b(k) = 0.2 * rng.normal();
      const Dataset data(y, z, x);
      const ZetaParam zeta(IndexParam::normalized(dir), b);
      const Bandwidth h = Bandwidth::fixed(0.3);
      const Vector g = profile_gradient(zeta, data, h, tri);
      const Vector chart = zeta.index.chart();
      for (Index k = 0; k < g.size(); ++k) {
        Vector cp = chart, cm = chart, bp = b, bm = b;
        if (k < p - 1) cp(k) += 1e-5, cm(k) -= 1e-5;
        else bp(k - (p - 1)) += 1e-5, bm(k - (p - 1)) -= 1e-5;
        const double fd = (profile_objective(ZetaParam(chart_to_alpha(cp), bp), data, h, tri) -
                           profile_objective(ZetaParam(chart_to_alpha(cm), bm), data, h, tri)) / 2e-5;
        worst = std::max(worst, std::abs(g(k) - fd) / std::max(std::abs(fd), 1e-300));
      }
    }
    if (!(worst < 1e-4)) bad.push_back("gradient rel " + fmt(worst));
  }
  {  // kernel moments
    double worst = 0.0;
    for (const Kernel& k : kernels) {
      worst = std::max(worst, std::abs(integrate([&](double u) { return k(u); }, -1, 1) - 1.0));
      worst = std::max(worst, std::abs(integrate([&](double u) { return u * k(u); }, -1, 1)));
    }
    worst = std::max(worst, std::abs(integrate([&](double u) { return tri(u) * tri(u); }, -1, 1) - 350.0 / 429.0));
    if (!(worst < 1e-8)) bad.push_back("kernel moments " + fmt(worst));
  }
  {
    const double c = chi2_cdf(3.841459, 1.0);
    if (!(std::abs(c - 0.95) < 1e-6)) bad.push_back("chi2_cdf " + fmt(c, 10));
  }
  {  // SCAD derivative vs difference quotient away from the knots
    double worst = 0.0;
    for (double lambda : {0.2, 1.0, 3.0}) {
      const ScadPenalty pen{kScadA, lambda};
      for (int k = 1; k < 500; ++k) {
        const double t = 5.0 * lambda * k / 500.0;
        if (std::abs(t - lambda) < 1e-3 || std::abs(t - kScadA * lambda) < 1e-3) continue;
        const double fd = (scad_value(pen, t + 1e-6) - scad_value(pen, t - 1e-6)) / 2e-6;
        worst = std::max(worst, std::abs(fd - scad_deriv(pen, t)) / std::max(1.0, lambda));
      }
    }
    if (!(worst < 1e-6)) bad.push_back("scad " + fmt(worst));
  }
  {  // optimizer vs one-dimensional angle grid
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RandomStream rng(900 + seed, 0);
      const Index n = 60;
      Matrix z(n, 2), x(n, 1);
      Vector y(n);
      const double angle = 0.25 + 0.1 * seed;
      for (Index i = 0; i < n; ++i) {
        z.row(i) << rng.uniform(), rng.uniform();
        x(i, 0) = rng.normal();
        const double u = std::cos(angle) * z(i, 0) + std::sin(angle) * z(i, 1);
        y(i) = std::sin(3 * u) + 0.5 * x(i, 0) + 0.1 * rng.normal();
      }
      const Dataset data(y, z, x);
      const Bandwidth h = Bandwidth::fixed(0.35);
      // beta is profiled inside Q, so Q along the angle is one-dimensional.
      auto q_at = [&](double theta) {
        Vector a(2);
        a << std::cos(theta), std::sin(theta);
        // Profiled beta at this alpha: least squares on the smoothed residuals.
        const IndexSmoother sm(z * a, h.h, tri);
        const Matrix xt = x - sm.level(x);
        const Vector yt = y - sm.level(y);
        const Vector b = xt.colPivHouseholderQr().solve(yt);
        return profile_objective(ZetaParam(IndexParam::from_alpha(a), b), data, h, tri);
      };
      double best_t = 0.0, best_q = INFINITY;
      const double span = std::numbers::pi / 2;
      for (int k = 0; k < 2000; ++k) {
        const double t = span * k / 2000.0;
        const double q = q_at(t);
        if (q < best_q) best_q = q, best_t = t;
      }
      double lo = std::max(0.0, best_t - span / 2000), hi = std::min(span - 1e-9, best_t + span / 2000);
      const double gr = (std::sqrt(5.0) - 1) / 2;
      for (int it = 0; it < 80; ++it) {
        const double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
        if (q_at(a) < q_at(b)) hi = b; else lo = a;
      }
      const double oracle = std::min(best_q, q_at(0.5 * (lo + hi)));
      FitOptions opt;
      opt.bandwidth = h;
      const PlsimFit fit = fit_plsim(data, opt);
      worst = std::max(worst, (fit.q_value - oracle) / oracle);
    }
    if (!(worst < 1e-6)) bad.push_back("angle oracle rel " + fmt(worst));
  }
  std::string detail = bad.empty() ? "reproduction, gradient (20), moments, chi2, scad, angle oracle (10) all within tolerance"
                                   : "failed:";
  for (const auto& b : bad) detail += " " + b + ";";
  return {bad.empty(), detail};
}

// Criterion 9: byte-identical simulate reports across reruns and thread counts.
Verdict criterion9(const std::string& cli) {
  ensure_selection(cli);
  int s2 = -1, s8 = -1;
  const fs::path second = selection_report(cli, 1, "t1b", s2);
  const fs::path eight = selection_report(cli, 8, "t8", s8);
  if (g_sel.status != 0 || s2 != 0 || s8 != 0) return {false, "simulate failed"};
  const std::string a = slurp(g_sel.first), b = slurp(second), c = slurp(eight);
  const bool ok = !a.empty() && a == b && a == c;
  return {ok, std::string("threads 1 rerun ") + (a == b ? "identical" : "differs") + ", threads 8 " +
                  (a == c ? "identical" : "differs") + " (" + std::to_string(a.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: plsim_acceptance <plsim-cli> [criteria...]\n";
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, [&] { return criterion3(cli); }}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, [&] { return criterion9(cli); }}};

  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << v.detail << " [" << fmt(secs, 3)
              << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
