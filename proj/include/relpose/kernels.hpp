#pragma once

// Robust M-estimation kernels: loss l(e) on the residual magnitude e >= 0 and
// the IRLS weight gamma(e) = l'(e)/e. The weight column is what the IRLS
// loop consumes; losses and weights here are mutually consistent so that
// gamma(e) * e = l'(e) holds for every differentiable kernel at any tuning
// parameter t. Arctan follows the squared-residual convention of common
// solver toolkits (weight = rho'(e^2)), which rescales but does not change
// the minimizer.

#include <stdexcept>
#include <string>

namespace relpose {

enum class KernelKind {
  L2,
  Laplace,
  Huber,
  Cauchy,
  Fair,
  GemanMcClure,
  Welsch,
  SwitchableConstraint,
  Tukey,
  MaxDist,
  Arctan,
};

struct RobustKernel {
  KernelKind kind = KernelKind::L2;
  double t = 1.0;  // tuning parameter; ignored by L2

  RobustKernel() = default;
  RobustKernel(KernelKind k, double t_) : kind(k), t(t_) {
    if (!(t > 0.0)) throw std::invalid_argument("RobustKernel: t must be > 0");
  }

  // Default thresholds: Huber 0.5, Cauchy 0.5, Tukey 3.0, Arctan 3.0,
  // others 1.0.
  static RobustKernel with_default_threshold(KernelKind k);
};

double loss(const RobustKernel& k, double e);
double weight(const RobustKernel& k, double e);

std::string kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& name);

}  // namespace relpose
