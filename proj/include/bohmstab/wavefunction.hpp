#pragma once

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "bohmstab/system.hpp"

namespace bohmstab {

using cplx = std::complex<double>;

class GridSolution;

/// psi and its first three spatial derivatives at one point.
struct PsiJet {
  std::array<cplx, 4> d{};
};

/// Local fields derived from psi = R exp(iS/hbar) at a point (x, t).
struct FieldSample {
  double rho = 0.0;         // R^2
  double grad_s = 0.0;      // S'
  double grad_log_r = 0.0;  // R'/R
  double q = 0.0;           // quantum potential -(hbar^2/2m) R''/R
  double grad_q = 0.0;      // Q'
  double hess_s = 0.0;      // S''
  bool valid = false;       // false inside the node-exclusion region
};

/// Assembles all fields from the complex jet using only logarithmic
/// derivatives of psi, so no phase unwrapping is ever needed:
///   w1 = psi'/psi = R'/R + i S'/hbar
///   w1' = psi''/psi - w1^2,  w1'' = psi'''/psi - (psi''/psi) w1 - 2 w1 w1'
///   R''/R = Re(w1') + (R'/R)^2,  S'' = hbar Im(w1')
/// The sample is flagged invalid when |psi|^2 < node_epsilon.
FieldSample fields_from_jet(const PsiJet& jet, const SystemParams& params, double node_epsilon);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// psi frozen at one instant. Holds a non-owning reference to the model's
/// data, so it must not outlive the WaveFunctionModel that produced it.
class TimeSlice {
 public:
  struct Coherent {
    double center;     // alpha cos(omega t)
    double momentum;   // -m omega alpha sin(omega t)
    double phase;      // global phase / hbar
    double beta2;      // m omega / hbar
    double norm;       // (beta2/pi)^(1/4)
    double hbar;
  };
  struct Superposition {
    // coefficient vectors of psi^(k) in the eigenbasis, k = 0..3
    std::array<std::vector<cplx>, 4> coeffs;
    double beta;
  };
  struct Grid {
    const GridSolution* solution;
    std::size_t first;  // first of four snapshots used for cubic interpolation in t
    std::array<double, 4> weights;
  };

  TimeSlice(double t, const SystemParams& params, double node_epsilon,
            std::variant<Coherent, Superposition, Grid> impl)
      : t_(t), params_(params), node_epsilon_(node_epsilon), impl_(std::move(impl)) {}

  double time() const noexcept { return t_; }
  PsiJet jet(double x) const;
  cplx psi(double x) const { return jet(x).d[0]; }
  FieldSample fields(double x) const { return fields_from_jet(jet(x), params_, node_epsilon_); }

 private:
  double t_;
  SystemParams params_;
  double node_epsilon_;
  std::variant<Coherent, Superposition, Grid> impl_;
};

/// Provider of psi(x, t) and its local fields. Analytic harmonic-oscillator
/// models (coherent state, finite eigenstate superposition) or a numerical
/// grid solution of the Schroedinger equation. Cheap to copy; evaluation is
/// const and reentrant.
class WaveFunctionModel {
 public:
  enum class Kind { CoherentState, EigenSuperposition, GridSolution };

  static WaveFunctionModel coherent_state(double alpha, SystemParams params = {},
                                          Potential potential = Potential::harmonic(1.0));
  /// `amplitudes[n]` multiplies the n-th oscillator eigenstate at t = 0; the
  /// vector must have unit norm.
  static WaveFunctionModel eigen_superposition(std::vector<cplx> amplitudes, SystemParams params = {},
                                               Potential potential = Potential::harmonic(1.0));
  /// Equal-weight superposition of the lowest `modes` eigenstates with phases
  /// exp(i n phase_step).
  static WaveFunctionModel equal_superposition(int modes, double phase_step = 0.0, SystemParams params = {},
                                               Potential potential = Potential::harmonic(1.0));
  static WaveFunctionModel grid_solution(std::shared_ptr<const GridSolution> solution);

  Kind kind() const noexcept { return kind_; }
  const SystemParams& params() const noexcept { return params_; }
  const Potential& potential() const noexcept { return potential_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<cplx>& amplitudes() const noexcept { return amplitudes_; }
  const GridSolution* grid() const noexcept { return grid_.get(); }

  /// Absolute density threshold below which fields are flagged invalid.
  double node_epsilon() const noexcept { return node_epsilon_; }

  /// Range of x outside which |psi|^2 is negligible at time t.
  Interval sampling_domain(double t) const;
  /// Time range over which the model can be evaluated.
  Interval time_range() const;

  TimeSlice at(double t) const;
  FieldSample eval_fields(double x, double t) const;
  cplx psi(double x, double t) const { return at(t).psi(x); }
  PsiJet jet(double x, double t) const { return at(t).jet(x); }

  static constexpr double kNodeFraction = 1e-12;

 private:
  WaveFunctionModel(Kind kind, SystemParams params, Potential potential)
      : kind_(kind), params_(params), potential_(potential) {}

  Kind kind_;
  SystemParams params_;
  Potential potential_;
  double alpha_ = 0.0;
  std::vector<cplx> amplitudes_;
  std::shared_ptr<const GridSolution> grid_;
  double node_epsilon_ = 0.0;
};

/// Values of the first `count` normalized oscillator eigenfunctions at x,
/// with beta = sqrt(m omega / hbar).
void oscillator_eigenfunctions(double x, double beta, std::span<double> out);

}  // namespace bohmstab
