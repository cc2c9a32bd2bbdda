#pragma once

#include <cmath>

#include "bohmstab/error.hpp"

namespace bohmstab {

/// Physical constants of a single-particle system. Dimensionless units with
/// hbar = mass = 1 by default.
struct SystemParams {
  double hbar = 1.0;
  double mass = 1.0;
  int dim = 1;

  void validate() const {
    if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
    if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "mass must be positive");
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dim must be >= 1");
  }
};

class Potential {
 public:
  enum class Kind { Harmonic, Free };

  static Potential harmonic(double stiffness) {
    if (!(stiffness > 0.0)) throw Error(ErrorCode::InvalidArgument, "harmonic stiffness must be positive");
    return Potential(Kind::Harmonic, stiffness);
  }
  static Potential free() { return Potential(Kind::Free, 0.0); }

  Kind kind() const noexcept { return kind_; }
  double stiffness() const noexcept { return stiffness_; }

  double value(double x) const noexcept { return 0.5 * stiffness_ * x * x; }
  double gradient(double x) const noexcept { return stiffness_ * x; }

  /// Angular frequency sqrt(k/m); zero for a free particle.
  double omega(const SystemParams& params) const noexcept { return std::sqrt(stiffness_ / params.mass); }

 private:
  Potential(Kind kind, double stiffness) : kind_(kind), stiffness_(stiffness) {}

  Kind kind_;
  double stiffness_;
};

}  // namespace bohmstab
