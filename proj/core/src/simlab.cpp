#include "plsim/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> even_grid(double lo, double hi, double step) {
  std::vector<double> out;
  const int k = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= k; ++i) out.push_back(lo + step * i);
  return out;
}

void validate(const SimDesign& d) {
  if (d.reps < 1) throw Error(ErrorCode::InvalidInput, "reps must be at least 1", {{"reps", d.reps}});
  if (!(d.sigma > 0.0) || !std::isfinite(d.sigma)) {
    throw Error(ErrorCode::InvalidInput, "sigma must be positive", {{"sigma", d.sigma}});
  }
  if (d.n < 1) throw Error(ErrorCode::InvalidInput, "n must be at least 1");
  for (double c : d.c_grid) {
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidInput, "signal grid must be finite");
  }
  if (!(d.level > 0.0 && d.level < 1.0)) throw Error(ErrorCode::InvalidInput, "level must lie in (0, 1)");
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Outcome {
  bool ok = false;
  std::string message;
};

// Wraps one replicate; library errors become a counted failure.
template <typename Fn>
Outcome guarded(Fn&& fn) {
  try {
    fn();
    return {true, {}};
  } catch (const Error& e) {
    return {false, std::string(to_string(e.code())) + ": " + e.what()};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

void tally_failures(SimReport& rep, const std::vector<Outcome>& outcomes, int attempted) {
  rep.attempted = attempted;
  rep.failures = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failures;
      if (rep.failure_messages.size() < 20) rep.failure_messages.push_back(o.message);
    }
  }
  rep.failure_rate = attempted > 0 ? static_cast<double>(rep.failures) / attempted : 0.0;
  if (rep.failure_rate > kMaxFailureRate) {
    throw Error(ErrorCode::SimulationFailed,
                std::to_string(rep.failures) + " of " + std::to_string(attempted) + " replicates failed",
                {{"failures", rep.failures}, {"attempted", attempted},
                 {"first", rep.failure_messages.empty() ? "" : rep.failure_messages.front()}});
  }
}

ZetaParam truth_of(const SimSample& s) { return ZetaParam(IndexParam::from_alpha(s.alpha), s.beta); }

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SimDesign default_design(const std::string& id) {
  SimDesign d;
  d.example_id = id;
  if (id == "1a") {
    d.n = 200;
    d.sigma = 0.2;
    d.reps = 200;
  } else if (id == "1b") {
    d.n = 100;
    d.sigma = 0.1;
    d.reps = 200;
    d.beta = 0.3;
  } else if (id == "2i" || id == "2ii" || id == "2iii") {
    d.n = 200;
    d.sigma = 0.1;
    d.reps = 100;
  } else if (id == "3") {
    d.n = 200;
    d.sigma = 0.1;
    d.reps = 500;
    d.c_grid = even_grid(0.0, 0.1, 0.01);
  } else if (id == "4") {
    d.n = 200;
    d.sigma = 0.1;
    d.reps = 500;
    d.c_grid = even_grid(0.0, 0.1, 0.025);
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown example '" + id + "'", {{"example", id}});
  }
  return d;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

SimReport run_mc_estimation(const SimDesign& design) {
  validate(design);
  const auto t0 = std::chrono::steady_clock::now();
  const bool m41 = design.example_id == "1a";
  if (!m41 && design.example_id != "1b") {
    throw Error(ErrorCode::InvalidInput, "estimation runs need example 1a or 1b");
  }

  std::vector<Outcome> outcomes(design.reps);
  std::vector<Vector> est(design.reps);
  Vector truth;
  std::vector<std::string> names;
  {
    RandomStream probe(design.seed, 0);
    const SimSample s = m41 ? gen_model41(design.n, probe) : gen_model42(design.n, design.sigma, design.beta, probe);
    truth = s.alpha;
    for (Index j = 0; j < s.alpha.size(); ++j) names.push_back("alpha" + std::to_string(j + 1));
    if (m41) {
      truth.conservativeResize(truth.size() + 1);
      truth(truth.size() - 1) = std::acos(s.alpha(0));
      names.push_back("phi0");
    }
    const Index base = truth.size();
    truth.conservativeResize(base + s.beta.size());
    for (Index k = 0; k < s.beta.size(); ++k) {
      truth(base + k) = s.beta(k);
      names.push_back("beta" + std::to_string(k + 1));
    }
  }

  parallel_for(design.reps, design.threads, [&](int r) {
    outcomes[r] = guarded([&] {
      RandomStream rng(design.seed, static_cast<std::uint64_t>(r));
      const SimSample s = m41 ? gen_model41(design.n, rng) : gen_model42(design.n, design.sigma, design.beta, rng);
      const PlsimFit fit = fit_plsim(s.data, design.fit);
      const Vector& a = fit.zeta_hat.alpha();
      const Vector& b = fit.zeta_hat.beta();
      Vector v(truth.size());
      Index k = 0;
      for (Index j = 0; j < a.size(); ++j) v(k++) = a(j);
      if (m41) v(k++) = std::acos(std::clamp(a(0), -1.0, 1.0));
      for (Index j = 0; j < b.size(); ++j) v(k++) = b(j);
      est[r] = std::move(v);
    });
  });

  SimReport rep;
  rep.design = design;
  rep.kind = "estimation";
  tally_failures(rep, outcomes, design.reps);
  for (Index j = 0; j < truth.size(); ++j) {
    ParamSummary ps;
    ps.name = names[j];
    ps.truth = truth(j);
    double sum = 0.0, sq = 0.0;
    int used = 0;
    for (int r = 0; r < design.reps; ++r) {
      if (!outcomes[r].ok) continue;
      sum += est[r](j);
      sq += (est[r](j) - truth(j)) * (est[r](j) - truth(j));
      ++used;
    }
    ps.mean = sum / used;
    ps.mse = sq / used;
    rep.params.push_back(ps);
  }
  rep.runtime_seconds = elapsed(t0);
  return rep;
}

namespace {

struct SelectionRep {
  double me_alpha_full = 0.0, me_beta_full = 0.0;
  double me_alpha_sel = 0.0, me_beta_sel = 0.0;
  double me_alpha_or = 0.0, me_beta_or = 0.0;
  int c_alpha = 0, i_alpha = 0, c_beta = 0, i_beta = 0;
  int c_alpha_or = 0, i_alpha_or = 0, c_beta_or = 0, i_beta_or = 0;
};

double model_error(const Matrix& w, const Vector& est, const Vector& truth) {
  const Vector d = w * (est - truth);
  return d.squaredNorm() / static_cast<double>(d.size());
}

void count_zeros(const Vector& est, const Vector& truth, int& c, int& i) {
  c = 0;
  i = 0;
  for (Index j = 0; j < truth.size(); ++j) {
    if (est(j) != 0.0) continue;
    if (truth(j) == 0.0) ++c; else ++i;
  }
}

}  // namespace

SimReport run_mc_selection(const SimDesign& design) {
  validate(design);
  const auto t0 = std::chrono::steady_clock::now();
  const std::string& id = design.example_id;
  if (id.size() < 2 || id[0] != '2') throw Error(ErrorCode::InvalidInput, "selection runs need example 2i, 2ii or 2iii");
  const Scenario sc = parse_scenario(id.substr(1));
  const Vector alpha0 = example2_alpha();
  const Vector beta0 = example2_beta();

  std::vector<Index> a_support, b_support;
  for (Index j = 0; j < alpha0.size(); ++j) if (alpha0(j) != 0.0) a_support.push_back(j);
  for (Index k = 0; k < beta0.size(); ++k) if (beta0(k) != 0.0) b_support.push_back(k);

  // Shared evaluation sample for the model-error expectations.
  RandomStream eval_rng(design.seed, std::uint64_t{1} << 63);
  const Covariates eval = draw_example2_covariates(sc, design.eval_draws, eval_rng);

  SearchOptions so;
  so.grid_size = design.grid_size;
  so.criterion = design.criterion;
  so.mode = design.penalty;
  so.classic_aic = design.classic_aic;

  std::vector<Outcome> outcomes(design.reps);
  std::vector<SelectionRep> res(design.reps);
  parallel_for(design.reps, design.threads, [&](int r) {
    outcomes[r] = guarded([&] {
      RandomStream rng(design.seed, static_cast<std::uint64_t>(r));
      const SimSample s = gen_example2(sc, design.n, design.sigma, rng);
      const PlsimFit full = fit_plsim(s.data, design.fit);
      ScadPath path = bic_search(s.data, full, so);
      const PenalizedFit& sel = path.selected();
      const PlsimFit oracle = fit_submodel(s.data, a_support, b_support, full.h, full.zeta_hat, design.fit);

      SelectionRep& o = res[r];
      o.me_alpha_full = model_error(eval.z, full.zeta_hat.alpha(), alpha0);
      o.me_beta_full = model_error(eval.x, full.zeta_hat.beta(), beta0);
      o.me_alpha_sel = model_error(eval.z, sel.zeta.alpha(), alpha0);
      o.me_beta_sel = model_error(eval.x, sel.zeta.beta(), beta0);
      o.me_alpha_or = model_error(eval.z, oracle.zeta_hat.alpha(), alpha0);
      o.me_beta_or = model_error(eval.x, oracle.zeta_hat.beta(), beta0);
      count_zeros(sel.zeta.alpha(), alpha0, o.c_alpha, o.i_alpha);
      count_zeros(sel.zeta.beta(), beta0, o.c_beta, o.i_beta);
      count_zeros(oracle.zeta_hat.alpha(), alpha0, o.c_alpha_or, o.i_alpha_or);
      count_zeros(oracle.zeta_hat.beta(), beta0, o.c_beta_or, o.i_beta_or);
    });
  });

  SimReport rep;
  rep.design = design;
  rep.kind = "selection";
  tally_failures(rep, outcomes, design.reps);

  auto summarize = [&](const std::string& method, bool oracle) {
    SelectionSummary s;
    s.method = method;
    std::vector<double> ra, rb;
    double ca = 0, ia = 0, cb = 0, ib = 0;
    int used = 0;
    for (int r = 0; r < design.reps; ++r) {
      if (!outcomes[r].ok) continue;
      const SelectionRep& o = res[r];
      ra.push_back((oracle ? o.me_alpha_or : o.me_alpha_sel) / o.me_alpha_full);
      rb.push_back((oracle ? o.me_beta_or : o.me_beta_sel) / o.me_beta_full);
      ca += oracle ? o.c_alpha_or : o.c_alpha;
      ia += oracle ? o.i_alpha_or : o.i_alpha;
      cb += oracle ? o.c_beta_or : o.c_beta;
      ib += oracle ? o.i_beta_or : o.i_beta;
      ++used;
    }
    s.mrme_alpha = median(ra);
    s.mrme_beta = median(rb);
    s.c_alpha = ca / used;
    s.i_alpha = ia / used;
    s.c_beta = cb / used;
    s.i_beta = ib / used;
    return s;
  };
  rep.selection.push_back(summarize(design.criterion == Criterion::Bic ? "S-BIC" : "S-AIC", false));
  rep.selection.push_back(summarize("Oracle", true));
  rep.runtime_seconds = elapsed(t0);
  return rep;
}

SimReport run_mc_power(const SimDesign& design) {
  validate(design);
  const auto t0 = std::chrono::steady_clock::now();
  const bool t1 = design.example_id == "3";
  if (!t1 && design.example_id != "4") throw Error(ErrorCode::InvalidInput, "power runs need example 3 or 4");
  if (design.c_grid.empty()) throw Error(ErrorCode::InvalidInput, "power runs need a signal grid");

  const int nc = static_cast<int>(design.c_grid.size());
  const int total = nc * design.reps;
  struct Cell {
    double stat = kNaN;
    bool reject = false;
    double wald_p = kNaN;
    double theory = kNaN;
  };
  std::vector<Outcome> outcomes(total);
  std::vector<Cell> cells(total);

  // Replicate r reuses stream (seed, r) at every grid value so the power
  // curve is built on common random numbers.
  parallel_for(total, design.threads, [&](int idx) {
    const int g = idx / design.reps;
    const int r = idx % design.reps;
    const double c = design.c_grid[g];
    outcomes[idx] = guarded([&] {
      RandomStream rng(design.seed, static_cast<std::uint64_t>(r));
      Cell& cell = cells[idx];
      if (t1) {
        const SimSample s = gen_example3(design.n, design.sigma, c, rng);
        const Index p = s.data.p();
        const LinearHypothesis hyp = coordinate_hypothesis(p + s.data.q(), {p + 2, p + 3, p + 4, p + 6});
        const PlsimFit fit = fit_plsim(s.data, design.fit);
        const TestResult tr = test_linear_t1(s.data, hyp, fit, design.fit);
        cell.stat = tr.statistic;
        cell.reject = tr.p_value < design.level;
        try {
          cell.wald_p = test_linear_wald(fit, hyp).p_value;
        } catch (const Error&) {
          cell.wald_p = kNaN;
        }
        cell.theory = theoretical_power_t1(hyp, truth_of(s), fit.dhat, s.sigma * s.sigma, design.n, design.level);
      } else {
        const SimSample s = gen_example4(design.n, design.sigma, c, rng);
        const PlsimFit fit = fit_plsim(s.data, design.fit);
        const TestResult tr = test_link_t2(s.data, fit, design.rk_variant);
        cell.stat = tr.statistic;
        cell.reject = tr.p_value < design.level;
      }
    });
  });

  SimReport rep;
  rep.design = design;
  rep.kind = "power";
  tally_failures(rep, outcomes, total);
  for (int g = 0; g < nc; ++g) {
    PowerPoint pt;
    pt.c = design.c_grid[g];
    int rej = 0, wald_rej = 0, wald_n = 0;
    double theory = 0.0;
    for (int r = 0; r < design.reps; ++r) {
      const int idx = g * design.reps + r;
      if (!outcomes[idx].ok) continue;
      const Cell& cell = cells[idx];
      ++pt.valid;
      rej += cell.reject ? 1 : 0;
      pt.statistics.push_back(cell.stat);
      if (t1) {
        theory += cell.theory;
        if (std::isfinite(cell.wald_p)) {
          ++wald_n;
          wald_rej += cell.wald_p < design.level ? 1 : 0;
        }
      }
    }
    pt.rejection = pt.valid > 0 ? static_cast<double>(rej) / pt.valid : kNaN;
    pt.rejection_wald = t1 && wald_n > 0 ? static_cast<double>(wald_rej) / wald_n : kNaN;
    pt.theoretical = t1 && pt.valid > 0 ? theory / pt.valid : kNaN;
    rep.power.push_back(std::move(pt));
  }
  rep.runtime_seconds = elapsed(t0);
  return rep;
}

SimReport run_simulation(const SimDesign& design) {
  const std::string& id = design.example_id;
  if (id == "1a" || id == "1b") return run_mc_estimation(design);
  if (id == "2i" || id == "2ii" || id == "2iii") return run_mc_selection(design);
  if (id == "3" || id == "4") return run_mc_power(design);
  throw Error(ErrorCode::InvalidInput, "unknown example '" + id + "'", {{"example", id}});
}

std::string power_csv(const SimReport& report) {
  std::ostringstream out;
  out.precision(17);
  const bool t1 = report.design.example_id == "3";
  out << (t1 ? "c,rejection,wald,theoretical\n" : "c,rejection\n");
  for (const auto& pt : report.power) {
    out << pt.c << ',' << pt.rejection;
    if (t1) out << ',' << pt.rejection_wald << ',' << pt.theoretical;
    out << '\n';
  }
  return out.str();
}

}  // namespace plsim
