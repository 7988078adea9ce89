#include "plsim_cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "plsim/chi2.hpp"
#include "plsim/dataset.hpp"
#include "plsim/errors.hpp"
#include "plsim/inference.hpp"
#include "plsim/kernel.hpp"
#include "plsim/profile.hpp"
#include "plsim/report.hpp"
#include "plsim/scad.hpp"
#include "plsim/simlab.hpp"
#include "plsim/smoother.hpp"

#ifndef PLSIM_VERSION_STRING
#define PLSIM_VERSION_STRING "0.0.0"
#endif

namespace plsim::cli {

using nlohmann::json;

namespace {

json usage_error(const std::string& code, const std::string& message) {
  json j{{"code", code}, {"message", message}};
  std::smatch m;
  if (std::regex_search(message, m, std::regex("(--[A-Za-z][A-Za-z0-9-]*)"))) j["flag"] = m[1].str();
  return j;
}

std::string classify(const CLI::Error& e) {
  if (dynamic_cast<const CLI::ExtrasError*>(&e)) return "UnknownFlag";
  if (dynamic_cast<const CLI::RequiredError*>(&e) || dynamic_cast<const CLI::ArgumentMismatch*>(&e)) {
    return "MissingRequired";
  }
  if (dynamic_cast<const CLI::ExcludesError*>(&e) || dynamic_cast<const CLI::RequiresError*>(&e)) {
    return "ConflictingFlags";
  }
  return "InvalidArgument";
}

void add_model_flags(CLI::App* app, RunConfig& c, bool with_bandwidth) {
  app->add_option("--data", c.data, "input CSV with a header row")->required();
  app->add_option("--y", c.y, "response column")->capture_default_str();
  app->add_option("--z", c.z, "index covariate columns, comma separated")->required()->delimiter(',');
  app->add_option("--x", c.x, "linear covariate columns, comma separated")->delimiter(',');
  CLI::Option* grid =
      app->add_option("--bandwidth-grid", c.bandwidth_grid, "candidate bandwidths for cross-validation")
          ->delimiter(',');
  if (with_bandwidth) {
    CLI::Option* bw = app->add_option("--bandwidth", c.bandwidth, "cv or a fixed positive bandwidth")
                          ->capture_default_str();
    bw->excludes(grid);
    grid->excludes(bw);
  }
  app->add_option("--kernel", c.kernel, "triweight | quartic | epanechnikov")
      ->capture_default_str()
      ->check(CLI::IsMember({"triweight", "quartic", "biweight", "epanechnikov"}));
  app->add_option("--tol", c.tol, "relative optimiser tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--max-iter", c.max_iter, "optimiser iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--grad", c.grad, "exact | plugin | fd")
      ->capture_default_str()
      ->check(CLI::IsMember({"exact", "plugin", "fd"}));
}

void add_output_flags(CLI::App* app, RunConfig& c) {
  app->add_option("--out", c.out, "output JSON path (stdout when absent)");
  app->add_flag("--deterministic", c.deterministic, "omit wall-clock fields from reports");
  app->add_option("--threads", c.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
}

void add_selection_flags(CLI::App* app, RunConfig& c) {
  app->add_option("--criterion", c.criterion, "bic | aic")->capture_default_str()->check(CLI::IsMember({"bic", "aic"}));
  app->add_option("--penalize", c.penalize, "both | beta | alpha")
      ->capture_default_str()
      ->check(CLI::IsMember({"both", "beta", "alpha"}));
  app->add_option("--aic-penalty", c.aic_penalty, "printed (2(p+q)) | classic (2)")
      ->capture_default_str()
      ->check(CLI::IsMember({"printed", "classic"}));
}

void add_grid_flag(CLI::App* app, RunConfig& c) {
  app->add_option("--grid", c.grid, "lambda grid size")->capture_default_str()->check(CLI::Range(2, 100000));
}

void add_rk_flag(CLI::App* app, RunConfig& c) {
  app->add_option("--rk-variant", c.rk_variant, "printed | squared")
      ->capture_default_str()
      ->check(CLI::IsMember({"printed", "squared"}));
}

std::optional<std::string> validate(const RunConfig& c) {
  if (c.bandwidth != "cv") {
    double h = 0.0;
    const auto [ptr, ec] = std::from_chars(c.bandwidth.data(), c.bandwidth.data() + c.bandwidth.size(), h);
    if (ec != std::errc() || ptr != c.bandwidth.data() + c.bandwidth.size() || !(h > 0.0) || !std::isfinite(h)) {
      return "--bandwidth must be 'cv' or a positive number, got '" + c.bandwidth + "'";
    }
  }
  for (double g : c.bandwidth_grid) {
    if (!(g > 0.0) || !std::isfinite(g)) return "--bandwidth-grid values must be positive";
  }
  if (c.n && *c.n < 1) return "--n must be at least 1";
  if (c.sigma && !(*c.sigma > 0.0)) return "--sigma must be positive";
  if (c.reps && *c.reps < 1) return "--reps must be at least 1";
  if (!c.power_csv.empty() && c.example != "3" && c.example != "4") {
    return "--power-csv applies to examples 3 and 4 only";
  }
  return std::nullopt;
}

FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.kernel = Kernel::parse(c.kernel);
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.gradient = c.grad == "plugin" ? GradientMode::PlugIn
               : c.grad == "fd"   ? GradientMode::FiniteDifference
                                  : GradientMode::Exact;
  if (c.bandwidth != "cv") o.bandwidth = Bandwidth::fixed(std::stod(c.bandwidth));
  o.bandwidth_grid = c.bandwidth_grid;
  return o;
}

Dataset load(const RunConfig& c) { return validate_dataset(read_csv(c.data), c.z, c.x, c.y); }

int thread_count(const RunConfig& c) {
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void emit(const RunConfig& c, const json& j, std::ostream& out) {
  const std::string text = dump_report(j);
  if (c.out.empty()) {
    out << text;
  } else {
    write_file_atomic(c.out, text);
  }
}

// Numeric CSV without a header, or with one non-numeric first line.
Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path, {{"path", path}});
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    bool numeric = true;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r\"");
      const auto e = cell.find_last_not_of(" \t\r\"");
      const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      const char* s = t.data();
      if (!t.empty() && *s == '+') ++s;
      const auto [ptr, ec] = std::from_chars(s, t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::NonNumericValue, "non-numeric entry in " + path, {{"path", path}});
    }
    first = false;
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw Error(ErrorCode::InvalidInput, "ragged rows in " + path, {{"path", path}});
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, path + " holds no numbers", {{"path", path}});
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index k = 0; k < m.cols(); ++k) m(r, k) = rows[r][k];
  return m;
}

LinearHypothesis read_hypothesis(const RunConfig& c) {
  LinearHypothesis h;
  h.a_mat = read_matrix(c.a_path);
  const Matrix d = read_matrix(c.delta_path);
  if (d.rows() == 1) {
    h.delta = d.row(0).transpose();
  } else if (d.cols() == 1) {
    h.delta = d.col(0);
  } else {
    throw Error(ErrorCode::InvalidInput, "delta must be a single row or a single column");
  }
  return h;
}

PlsimFit fit_or_partial(const Dataset& data, const FitOptions& opt, const RunConfig& c, std::ostream& out,
                        bool& partial_written) {
  try {
    return fit_plsim(data, opt);
  } catch (const NoConvergenceError& e) {
    if (c.allow_partial) {
      emit(c, fit_to_json(e.best(), data, {c.deterministic, true}), out);
      partial_written = true;
    }
    throw;
  }
}

int run_fit(const RunConfig& c, std::ostream& out, bool& partial) {
  const Dataset data = load(c);
  const PlsimFit fit = fit_or_partial(data, fit_options(c), c, out, partial);
  emit(c, fit_to_json(fit, data, {c.deterministic, true}), out);
  return 0;
}

SearchOptions search_options(const RunConfig& c) {
  SearchOptions so;
  so.grid_size = c.grid;
  so.criterion = parse_criterion(c.criterion);
  so.mode = parse_penalty_mode(c.penalize);
  so.classic_aic = c.aic_penalty == "classic";
  return so;
}

int run_select(const RunConfig& c, std::ostream& out, bool& partial) {
  const Dataset data = load(c);
  const PlsimFit fit = fit_or_partial(data, fit_options(c), c, out, partial);
  const ScadPath path = bic_search(data, fit, search_options(c));
  emit(c, path_to_json(path, fit, data, {c.deterministic, false}), out);
  return 0;
}

int run_test_linear(const RunConfig& c, std::ostream& out) {
  const Dataset data = load(c);
  const LinearHypothesis hyp = read_hypothesis(c);
  hyp.validate(data.p() + data.q());
  const FitOptions opt = fit_options(c);
  TestResult r;
  if (parse_test_method(c.method) == TestMethod::Wald) {
    r = test_linear_wald(fit_plsim(data, opt), hyp);
  } else {
    r = test_linear_t1(data, hyp, opt);
  }
  emit(c, test_to_json(r, &data), out);
  return 0;
}

int run_test_link(const RunConfig& c, std::ostream& out) {
  const Dataset data = load(c);
  const TestResult r = test_link_t2(data, fit_options(c), parse_rk_variant(c.rk_variant));
  emit(c, test_to_json(r, &data), out);
  return 0;
}

int run_bandwidth(const RunConfig& c, std::ostream& out) {
  const Dataset data = load(c);
  const FitOptions opt = fit_options(c);
  const PlsimFit fit = fit_plsim(data, opt);
  const Vector lambda = data.z() * fit.zeta_hat.alpha();
  const Vector ystar = data.y() - data.x() * fit.zeta_hat.beta();
  std::vector<Bandwidth> grid;
  if (c.bandwidth_grid.empty()) {
    grid = default_bandwidth_grid(lambda);
  } else {
    for (double g : c.bandwidth_grid) grid.push_back(Bandwidth::fixed(g));
  }
  json scores = json::array();
  for (const auto& h : grid) {
    const double s = cv_score(lambda, ystar, h, opt.kernel);
    scores.push_back({{"h", h.h}, {"cv", std::isfinite(s) ? json(s) : json(nullptr)}});
  }
  const Bandwidth best = cv_bandwidth(data, fit.zeta_hat, grid, opt.kernel);
  json j{{"selected", best.h},
         {"fit_bandwidth", fit.h.h},
         {"kernel", std::string(opt.kernel.name())},
         {"alpha", std::vector<double>(fit.zeta_hat.alpha().begin(), fit.zeta_hat.alpha().end())},
         {"grid", std::move(scores)}};
  emit(c, j, out);
  return 0;
}

int run_simulate(const RunConfig& c, std::ostream& out) {
  SimDesign d = default_design(c.example);
  if (c.n) d.n = static_cast<Index>(*c.n);
  if (c.sigma) d.sigma = *c.sigma;
  if (c.reps) d.reps = *c.reps;
  d.seed = c.seed;
  d.criterion = parse_criterion(c.criterion);
  d.penalty = parse_penalty_mode(c.penalize);
  d.grid_size = c.grid;
  d.classic_aic = c.aic_penalty == "classic";
  d.rk_variant = parse_rk_variant(c.rk_variant);
  d.fit = fit_options(c);
  d.threads = thread_count(c);
  const SimReport rep = run_simulation(d);
  if (!c.power_csv.empty()) write_file_atomic(c.power_csv, power_csv(rep));
  emit(c, sim_to_json(rep, {c.deterministic, false}), out);
  return 0;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp.string(), {{"path", path}});
    f << contents;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "short write to " + tmp.string(), {{"path", path}});
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path, {{"path", path}});
  }
}

std::string version_text() {
  std::ostringstream s;
  s << "plsim " << PLSIM_VERSION_STRING << "\n\n";
  s << "kernel        K(0)      int K^2   r_K(printed)  r_K(squared)\n";
  s.setf(std::ios::fixed);
  s.precision(6);
  for (const char* name : {"triweight", "quartic", "epanechnikov"}) {
    const Kernel k = Kernel::parse(name);
    const auto pr = kernel_constants(k, RkVariant::Printed);
    const auto sq = kernel_constants(k, RkVariant::Squared);
    std::string padded = name;
    padded.resize(12, ' ');
    s << padded << "  " << pr.k0 << "  " << pr.ik2 << "  " << pr.r_k << "      " << sq.r_k << "\n";
  }
  return s.str();
}

ParseResult parse_args(const std::vector<std::string>& args) {
  ParseResult result;
  RunConfig c;
  CLI::App app{"Partially linear single-index models: fitting, SCAD selection, tests and simulations", "plsim"};
  app.set_version_flag("--version", [] { return version_text(); });
  app.require_subcommand(1);

  CLI::App* fit = app.add_subcommand("fit", "profile least-squares fit");
  add_model_flags(fit, c, true);
  add_output_flags(fit, c);
  fit->add_flag("--allow-partial", c.allow_partial, "write the best iterate when the optimiser does not converge");

  CLI::App* select = app.add_subcommand("select", "SCAD variable selection with BIC or AIC tuning");
  add_model_flags(select, c, true);
  add_output_flags(select, c);
  add_selection_flags(select, c);
  add_grid_flag(select, c);
  select->add_flag("--allow-partial", c.allow_partial, "write the unpenalized best iterate on non-convergence");

  CLI::App* test = app.add_subcommand("test", "hypothesis tests");
  test->require_subcommand(1);
  CLI::App* linear = test->add_subcommand("linear", "H0: A zeta = delta");
  add_model_flags(linear, c, true);
  add_output_flags(linear, c);
  linear->add_option("--A", c.a_path, "CSV matrix with p+q columns")->required();
  linear->add_option("--delta", c.delta_path, "CSV vector with one entry per row of A")->required();
  linear->add_option("--method", c.method, "t1 | wald")->capture_default_str()->check(CLI::IsMember({"t1", "wald"}));
  CLI::App* link = test->add_subcommand("link", "H0: the link is linear");
  add_model_flags(link, c, true);
  add_output_flags(link, c);
  add_rk_flag(link, c);

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo studies on the built-in designs");
  sim->add_option("--example", c.example, "1a | 1b | 2i | 2ii | 2iii | 3 | 4")
      ->required()
      ->check(CLI::IsMember({"1a", "1b", "2i", "2ii", "2iii", "3", "4"}));
  sim->add_option("--n", c.n, "sample size (design default when absent)");
  sim->add_option("--sigma", c.sigma, "noise level");
  sim->add_option("--reps", c.reps, "replicates");
  sim->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
  sim->add_option("--power-csv", c.power_csv, "write (c, power) CSV (examples 3 and 4)");
  CLI::Option* sbw = sim->add_option("--bandwidth", c.bandwidth, "cv or a fixed bandwidth")->capture_default_str();
  CLI::Option* sgrid = sim->add_option("--bandwidth-grid", c.bandwidth_grid, "cross-validation grid")->delimiter(',');
  sbw->excludes(sgrid);
  sgrid->excludes(sbw);
  sim->add_option("--kernel", c.kernel)->capture_default_str()->check(
      CLI::IsMember({"triweight", "quartic", "biweight", "epanechnikov"}));
  sim->add_option("--tol", c.tol)->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--max-iter", c.max_iter)->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--grad", c.grad)->capture_default_str()->check(CLI::IsMember({"exact", "plugin", "fd"}));
  add_output_flags(sim, c);
  add_selection_flags(sim, c);
  add_grid_flag(sim, c);
  add_rk_flag(sim, c);

  CLI::App* bw = app.add_subcommand("bandwidth", "cross-validation curve at the fitted index");
  add_model_flags(bw, c, false);
  add_output_flags(bw, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    result.stdout_text = app.help();
    if (const auto* s = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      const auto& subs = s->get_subcommands();
      result.stdout_text = subs.empty() ? s->help() : subs.front()->help();
    }
    result.exit_code = 0;
    return result;
  } catch (const CLI::CallForAllHelp&) {
    result.stdout_text = app.help("", CLI::AppFormatMode::All);
    result.exit_code = 0;
    return result;
  } catch (const CLI::CallForVersion& e) {
    result.stdout_text = e.what();
    result.exit_code = 0;
    return result;
  } catch (const CLI::ParseError& e) {
    result.error = usage_error(classify(e), e.what());
    result.exit_code = 2;
    return result;
  }

  if (fit->parsed()) c.command = "fit";
  else if (select->parsed()) c.command = "select";
  else if (linear->parsed()) c.command = "test-linear";
  else if (link->parsed()) c.command = "test-link";
  else if (sim->parsed()) c.command = "simulate";
  else if (bw->parsed()) c.command = "bandwidth";

  if (auto msg = validate(c)) {
    result.error = usage_error("InvalidArgument", *msg);
    result.exit_code = 2;
    return result;
  }
  result.config = std::move(c);
  return result;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  bool partial = false;
  try {
    if (c.command == "fit") return run_fit(c, out, partial);
    if (c.command == "select") return run_select(c, out, partial);
    if (c.command == "test-linear") return run_test_linear(c, out);
    if (c.command == "test-link") return run_test_link(c, out);
    if (c.command == "simulate") return run_simulate(c, out);
    if (c.command == "bandwidth") return run_bandwidth(c, out);
    err << json{{"code", "InvalidArgument"}, {"message", "unknown command '" + c.command + "'"}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    json j = e.to_json();
    if (partial) j["partial_output"] = c.out.empty() ? "stdout" : c.out;
    err << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"code", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ParseResult p = parse_args(args);
  if (p.exit_code) {
    if (!p.stdout_text.empty()) out << p.stdout_text << (p.stdout_text.back() == '\n' ? "" : "\n");
    if (!p.error.is_null()) err << p.error.dump() << "\n";
    return *p.exit_code;
  }
  return run(*p.config, out, err);
}

}  // namespace plsim::cli
