#include "plsim/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "plsim/errors.hpp"

namespace plsim {

Kernel Kernel::parse(std::string_view name) {
  if (name == "triweight") return Kernel(KernelType::Triweight);
  if (name == "quartic" || name == "biweight") return Kernel(KernelType::Quartic);
  if (name == "epanechnikov") return Kernel(KernelType::Epanechnikov);
  throw Error(ErrorCode::InvalidInput, "unknown kernel '" + std::string(name) + "'",
              {{"kernel", std::string(name)}});
}

std::string_view Kernel::name() const {
  switch (type_) {
    case KernelType::Triweight: return "triweight";
    case KernelType::Quartic: return "quartic";
    case KernelType::Epanechnikov: return "epanechnikov";
  }
  return "triweight";
}

double Kernel::operator()(double u) const {
  if (!(std::abs(u) < 1.0)) return 0.0;
  const double t = 1.0 - u * u;
  switch (type_) {
    case KernelType::Triweight: return 35.0 / 32.0 * t * t * t;
    case KernelType::Quartic: return 15.0 / 16.0 * t * t;
    case KernelType::Epanechnikov: return 0.75 * t;
  }
  return 0.0;
}

double Kernel::derivative(double u) const {
  if (!(std::abs(u) < 1.0)) return 0.0;
  const double t = 1.0 - u * u;
  switch (type_) {
    case KernelType::Triweight: return -105.0 / 16.0 * u * t * t;
    case KernelType::Quartic: return -15.0 / 4.0 * u * t;
    case KernelType::Epanechnikov: return -1.5 * u;
  }
  return 0.0;
}

double kernel_eval(const Kernel& kernel, double u) { return kernel(u); }

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 15, tol);
}

double kernel_self_convolution(const Kernel& kernel, double u) {
  // Support of K(t) K(u - t) is (max(-1, u-1), min(1, u+1)).
  const double lo = std::max(-1.0, u - 1.0);
  const double hi = std::min(1.0, u + 1.0);
  if (!(lo < hi)) return 0.0;
  return integrate([&](double t) { return kernel(t) * kernel(u - t); }, lo, hi);
}

}  // namespace plsim
