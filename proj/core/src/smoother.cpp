#include "plsim/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

struct Moments {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
  Index count = 0;

  void add(double w, double d, double y) {
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * y;
    t1 += w * d * y;
    ++count;
  }
};

struct Solved {
  double s2 = 0.0;  // ridge-adjusted
  double ridge = 0.0;
  double den = 0.0;
  bool ridged = false;
};

Solved solve_normal(double s0, double s1, double s2, double h) {
  Solved out;
  out.s2 = s2;
  out.den = s0 * s2 - s1 * s1;
  if (out.den <= kRidgeTrigger * s0 * s2) {
    out.ridge = kRidgeScale * h * h;
    out.s2 = s2 + out.ridge * s0;
    out.den = s0 * out.s2 - s1 * s1;
    out.ridged = true;
  }
  return out;
}

[[noreturn]] void throw_degenerate(double u, double h, Index count) {
  throw Error(ErrorCode::DegenerateNeighborhood,
              "fewer than two points in the kernel window (bandwidth too small or point outside the data)",
              {{"u", u}, {"h", h}, {"effective_n", count}});
}

LocalFit finish(const Moments& m, double h, double u) {
  if (m.count < 2) throw_degenerate(u, h, m.count);
  const Solved s = solve_normal(m.s0, m.s1, m.s2, h);
  LocalFit fit;
  fit.a_hat = (s.s2 * m.t0 - m.s1 * m.t1) / s.den;
  fit.b_hat = (m.s0 * m.t1 - m.s1 * m.t0) / s.den;
  fit.denom = s.den;
  fit.effective_n = m.count;
  fit.ridged = s.ridged;
  return fit;
}

}  // namespace

Bandwidth Bandwidth::fixed(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::InvalidInput, "bandwidth must be positive and finite", {{"h", h}});
  }
  return Bandwidth{h, Source::Fixed};
}

LocalFit local_linear_fit(double u, const Vector& lambda, const Vector& ystar, Bandwidth h, const Kernel& kernel) {
  if (!(h.h > 0.0)) throw Error(ErrorCode::InvalidInput, "bandwidth must be positive", {{"h", h.h}});
  Moments m;
  for (Index i = 0; i < lambda.size(); ++i) {
    const double d = lambda(i) - u;
    const double w = kernel(d / h.h) / h.h;
    if (w > 0.0) m.add(w, d, ystar(i));
  }
  return finish(m, h.h, u);
}

LocalFit eta_hat(double u, const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel) {
  const Vector lambda = data.z() * zeta.alpha();
  const Vector ystar = data.y() - data.x() * zeta.beta();
  return local_linear_fit(u, lambda, ystar, h, kernel);
}

Matrix conditional_mean_smooth(const Matrix& xi, const Vector& lambda, Bandwidth h, const Kernel& kernel) {
  return IndexSmoother(lambda, h.h, kernel).level(xi);
}

std::vector<Bandwidth> default_bandwidth_grid(const Vector& lambda, int points) {
  const double range = lambda.maxCoeff() - lambda.minCoeff();
  std::vector<Bandwidth> grid;
  if (!(range > 0.0)) return grid;
  const double lo = std::log(0.05 * range);
  const double hi = std::log(0.5 * range);
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 1.0 : static_cast<double>(k) / (points - 1);
    grid.push_back(Bandwidth::fixed(std::exp(lo + t * (hi - lo))));
  }
  return grid;
}

double cv_score(const Vector& lambda, const Vector& ystar, Bandwidth h, const Kernel& kernel) {
  const Index n = lambda.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return lambda(a) < lambda(b); });

  double sse = 0.0;
  Index lo = 0;
  Index hi = 0;
  for (Index k = 0; k < n; ++k) {
    const Index i = order[k];
    const double u = lambda(i);
    while (lambda(order[lo]) <= u - h.h) ++lo;
    if (hi < k + 1) hi = k + 1;
    while (hi < n && lambda(order[hi]) < u + h.h) ++hi;
    Moments m;
    for (Index s = lo; s < hi; ++s) {
      const Index j = order[s];
      if (j == i) continue;
      const double d = lambda(j) - u;
      const double w = kernel(d / h.h) / h.h;
      if (w > 0.0) m.add(w, d, ystar(j));
    }
    if (m.count < 2) return std::numeric_limits<double>::infinity();
    const Solved s = solve_normal(m.s0, m.s1, m.s2, h.h);
    const double a = (s.s2 * m.t0 - m.s1 * m.t1) / s.den;
    const double e = ystar(i) - a;
    sse += e * e;
  }
  return sse / static_cast<double>(n);
}

Bandwidth cv_bandwidth(const Dataset& data, const ZetaParam& zeta, const std::vector<Bandwidth>& grid,
                       const Kernel& kernel) {
  if (grid.empty()) throw Error(ErrorCode::InvalidInput, "bandwidth grid is empty");
  for (const auto& b : grid) {
    if (!(b.h > 0.0) || !std::isfinite(b.h)) {
      throw Error(ErrorCode::InvalidInput, "bandwidth grid values must be positive", {{"h", b.h}});
    }
  }
  const Vector lambda = data.z() * zeta.alpha();
  const Vector ystar = data.y() - data.x() * zeta.beta();
  double best = std::numeric_limits<double>::infinity();
  double best_h = 0.0;
  for (const auto& b : grid) {
    const double score = cv_score(lambda, ystar, b, kernel);
    if (score < best || (score == best && std::isfinite(score) && b.h > best_h)) {
      best = score;
      best_h = b.h;
    }
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::AllBandwidthsDegenerate, "every bandwidth in the grid leaves a degenerate window",
                {{"grid_size", grid.size()}});
  }
  return Bandwidth::cross_validated(best_h);
}

Bandwidth cv_bandwidth(const Dataset& data, const ZetaParam& zeta, const Kernel& kernel) {
  const Vector lambda = data.z() * zeta.alpha();
  auto grid = default_bandwidth_grid(lambda);
  if (grid.empty()) {
    throw Error(ErrorCode::DegenerateIndex, "index values are all identical; cannot build a bandwidth grid");
  }
  return cv_bandwidth(data, zeta, grid, kernel);
}

IndexSmoother::IndexSmoother(const Vector& lambda, double h, const Kernel& kernel)
    : lambda_(lambda), h_(h), kernel_(kernel) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidInput, "bandwidth must be positive", {{"h", h}});
  const Index n = lambda.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), Index{0});
  std::sort(order_.begin(), order_.end(), [&](Index a, Index b) { return lambda(a) < lambda(b); });
  sorted_lambda_.resize(n);
  for (Index k = 0; k < n; ++k) sorted_lambda_(k) = lambda(order_[k]);

  rows_.resize(n);
  // Pass 1: windows and total weight storage.
  Index lo = 0;
  Index hi = 0;
  Index total = 0;
  for (Index k = 0; k < n; ++k) {
    const double u = sorted_lambda_(k);
    while (sorted_lambda_(lo) <= u - h) ++lo;
    if (hi < k + 1) hi = k + 1;
    while (hi < n && sorted_lambda_(hi) < u + h) ++hi;
    Row& row = rows_[order_[k]];
    row.lo = lo;
    row.hi = hi;
    row.offset = total;
    total += hi - lo;
  }
  level_weights_.resize(static_cast<std::size_t>(total));

  // Pass 2: moments and level weights.
  for (Index i = 0; i < n; ++i) {
    Row& row = rows_[i];
    const double u = lambda(i);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    Index count = 0;
    for (Index s = row.lo; s < row.hi; ++s) {
      const double d = sorted_lambda_(s) - u;
      const double w = kernel_(d / h) / h;
      if (w > 0.0) ++count;
      s0 += w;
      s1 += w * d;
      s2 += w * d * d;
    }
    if (count < 2) throw_degenerate(u, h, count);
    const Solved sol = solve_normal(s0, s1, s2, h);
    row.s0 = s0;
    row.s1 = s1;
    row.s2 = sol.s2;
    row.ridge = sol.ridge;
    row.den = sol.den;
    double* lw = level_weights_.data() + row.offset;
    for (Index s = row.lo; s < row.hi; ++s) {
      const double d = sorted_lambda_(s) - u;
      const double w = kernel_(d / h) / h;
      lw[s - row.lo] = w * (row.s2 - s1 * d) / row.den;
    }
  }
}

Vector IndexSmoother::level(const Vector& y) const {
  const Index n = this->n();
  Vector ys(n);
  for (Index k = 0; k < n; ++k) ys(k) = y(order_[k]);
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const Row& row = rows_[i];
    const double* lw = level_weights_.data() + row.offset;
    double acc = 0.0;
    for (Index s = row.lo; s < row.hi; ++s) acc += lw[s - row.lo] * ys(s);
    out(i) = acc;
  }
  return out;
}

Matrix IndexSmoother::level(const Matrix& m) const {
  const Index n = this->n();
  const Index d = m.cols();
  // Row-major copy in sorted order keeps the inner loop contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ms(n, d);
  for (Index k = 0; k < n; ++k) ms.row(k) = m.row(order_[k]);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, d);
  out.setZero();
  for (Index i = 0; i < n; ++i) {
    const Row& row = rows_[i];
    const double* lw = level_weights_.data() + row.offset;
    auto acc = out.row(i);
    for (Index s = row.lo; s < row.hi; ++s) acc += lw[s - row.lo] * ms.row(s);
  }
  return out;
}

Vector IndexSmoother::slope(const Vector& y) const {
  const Index n = this->n();
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const Row& row = rows_[i];
    const double u = lambda_(i);
    double t0 = 0.0, t1 = 0.0;
    for (Index s = row.lo; s < row.hi; ++s) {
      const double d = sorted_lambda_(s) - u;
      const double w = kernel_(d / h_) / h_;
      const double yv = y(order_[s]);
      t0 += w * yv;
      t1 += w * d * yv;
    }
    out(i) = (row.s0 * t1 - row.s1 * t0) / row.den;
  }
  return out;
}

Vector IndexSmoother::index_derivative(const Vector& ystar, const Vector& weights, const Matrix& z) const {
  const Index n = this->n();
  const Index p = z.cols();
  Vector grad = Vector::Zero(p);
  Vector acc(p);
  const double inv_h = 1.0 / h_;
  const double inv_h2 = inv_h * inv_h;
  for (Index i = 0; i < n; ++i) {
    const double wi = weights(i);
    if (wi == 0.0) continue;
    const Row& row = rows_[i];
    const double u = lambda_(i);
    double t0 = 0.0, t1 = 0.0;
    for (Index s = row.lo; s < row.hi; ++s) {
      const double d = sorted_lambda_(s) - u;
      const double w = kernel_(d * inv_h) * inv_h;
      const double yv = ystar(order_[s]);
      t0 += w * yv;
      t1 += w * d * yv;
    }
    const double s0 = row.s0, s1 = row.s1, s2 = row.s2, den = row.den, rho = row.ridge;
    const double a = (s2 * t0 - s1 * t1) / den;
    // d a / d d_j for each window member, then contract with (Z_j - Z_i).
    acc.setZero();
    double gsum = 0.0;
    for (Index s = row.lo; s < row.hi; ++s) {
      const Index j = order_[s];
      if (j == i) continue;
      const double d = sorted_lambda_(s) - u;
      const double w = kernel_(d * inv_h) * inv_h;
      const double wp = kernel_.derivative(d * inv_h) * inv_h2;
      const double yv = ystar(j);
      const double ds0 = wp;
      const double ds1 = wp * d + w;
      const double ds2 = wp * d * d + 2.0 * w * d + rho * ds0;
      const double dt0 = wp * yv;
      const double dt1 = ds1 * yv;
      const double dnum = ds2 * t0 + s2 * dt0 - ds1 * t1 - s1 * dt1;
      const double dden = ds0 * s2 + s0 * ds2 - 2.0 * s1 * ds1;
      const double g = (dnum - a * dden) / den;
      if (g == 0.0) continue;
      acc.noalias() += g * z.row(j).transpose();
      gsum += g;
    }
    acc.noalias() -= gsum * z.row(i).transpose();
    grad.noalias() += wi * acc;
  }
  return grad;
}

Index IndexSmoother::ridged_rows() const {
  Index count = 0;
  for (const auto& r : rows_) count += r.ridge > 0.0 ? 1 : 0;
  return count;
}

}  // namespace plsim
