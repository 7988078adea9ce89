#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace plsim {

enum class KernelType { Triweight, Quartic, Epanechnikov };

/// Symmetric polynomial kernel supported on (-1, 1).
///
/// Triweight is the default: it is twice continuously differentiable on the
/// whole line with a Lipschitz second derivative. Quartic (C1 only) and
/// Epanechnikov (not differentiable at the support edge) are kept for
/// comparison; with them the profile objective is only piecewise smooth.
class Kernel {
 public:
  constexpr Kernel() = default;
  constexpr explicit Kernel(KernelType type) : type_(type) {}

  static Kernel parse(std::string_view name);

  KernelType type() const { return type_; }
  std::string_view name() const;

  double operator()(double u) const;
  double derivative(double u) const;
  double at_zero() const { return (*this)(0.0); }

 private:
  KernelType type_ = KernelType::Triweight;
};

double kernel_eval(const Kernel& kernel, double u);

/// Adaptive Gauss-Kronrod quadrature over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

/// (K * K)(u) = integral of K(t) K(u - t) dt, evaluated by quadrature.
double kernel_self_convolution(const Kernel& kernel, double u);

}  // namespace plsim
