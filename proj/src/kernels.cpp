#include "relpose/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace relpose {

namespace {
// Weights with a 1/|e| factor are evaluated at |e| >= this cap.
constexpr double kMinAbsResidual = 1e-9;
}  // namespace

RobustKernel RobustKernel::with_default_threshold(KernelKind k) {
  switch (k) {
    case KernelKind::Huber: return {k, 0.5};
    case KernelKind::Cauchy: return {k, 0.5};
    case KernelKind::Tukey: return {k, 3.0};
    case KernelKind::Arctan: return {k, 3.0};
    default: return {k, 1.0};
  }
}

double loss(const RobustKernel& k, double e) {
  if (!std::isfinite(e)) throw std::invalid_argument("loss: non-finite e");
  const double a = std::abs(e);
  const double t = k.t;
  switch (k.kind) {
    case KernelKind::L2:
      return 0.5 * e * e;
    case KernelKind::Laplace:
      return t * a;
    case KernelKind::Huber:
      return a <= t ? 0.5 * e * e : t * (a - 0.5 * t);
    case KernelKind::Cauchy:
      return 0.5 * t * t * std::log1p(e * e / (t * t));
    case KernelKind::Fair:
      return t * t * (a / t - std::log1p(a / t));
    case KernelKind::GemanMcClure:
      return t * e * e / (2.0 * (t + e * e));
    case KernelKind::Welsch:
      return 0.5 * t * t * (1.0 - std::exp(-e * e / (t * t)));
    case KernelKind::SwitchableConstraint:
      return e * e <= t ? 0.5 * e * e
                        : 2.0 * t * e * e / (t + e * e) - 0.5 * t;
    case KernelKind::Tukey: {
      if (a > t) return t * t / 6.0;
      const double u = 1.0 - e * e / (t * t);
      return t * t / 6.0 * (1.0 - u * u * u);
    }
    case KernelKind::MaxDist:
      return a <= t ? 0.5 * e * e : 0.5 * t * t;
    case KernelKind::Arctan:
      return t * std::atan(e * e / t);
  }
  throw std::invalid_argument("loss: bad kernel kind");
}

double weight(const RobustKernel& k, double e) {
  if (!std::isfinite(e)) throw std::invalid_argument("weight: non-finite e");
  const double a = std::max(std::abs(e), kMinAbsResidual);
  const double t = k.t;
  switch (k.kind) {
    case KernelKind::L2:
      return 1.0;
    case KernelKind::Laplace:
      return t / a;
    case KernelKind::Huber:
      return a <= t ? 1.0 : t / a;
    case KernelKind::Cauchy:
      return t * t / (t * t + e * e);
    case KernelKind::Fair:
      return t / (t + a);
    case KernelKind::GemanMcClure: {
      const double d = t + e * e;
      return t * t / (d * d);
    }
    case KernelKind::Welsch:
      return std::exp(-e * e / (t * t));
    case KernelKind::SwitchableConstraint: {
      if (e * e <= t) return 1.0;
      const double d = t + e * e;
      return 4.0 * t * t / (d * d);
    }
    case KernelKind::Tukey: {
      if (a > t) return 0.0;
      const double u = 1.0 - e * e / (t * t);
      return u * u;
    }
    case KernelKind::MaxDist:
      return a <= t ? 1.0 : 0.0;
    case KernelKind::Arctan: {
      const double u = e * e / t;
      return 1.0 / (1.0 + u * u);
    }
  }
  throw std::invalid_argument("weight: bad kernel kind");
}

std::string kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::L2: return "l2";
    case KernelKind::Laplace: return "laplace";
    case KernelKind::Huber: return "huber";
    case KernelKind::Cauchy: return "cauchy";
    case KernelKind::Fair: return "fair";
    case KernelKind::GemanMcClure: return "geman-mcclure";
    case KernelKind::Welsch: return "welsch";
    case KernelKind::SwitchableConstraint: return "switchable-constraint";
    case KernelKind::Tukey: return "tukey";
    case KernelKind::MaxDist: return "max-dist";
    case KernelKind::Arctan: return "arctan";
  }
  return "?";
}

KernelKind kernel_from_name(const std::string& name) {
  for (KernelKind k :
       {KernelKind::L2, KernelKind::Laplace, KernelKind::Huber,
        KernelKind::Cauchy, KernelKind::Fair, KernelKind::GemanMcClure,
        KernelKind::Welsch, KernelKind::SwitchableConstraint,
        KernelKind::Tukey, KernelKind::MaxDist, KernelKind::Arctan})
    if (kernel_name(k) == name) return k;
  throw std::invalid_argument("unknown kernel: " + name);
}

}  // namespace relpose
