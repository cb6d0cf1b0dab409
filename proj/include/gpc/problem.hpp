#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "gpc/spectral_grid.hpp"

namespace gpc {

/// Uniform time mesh t_m = m dt on [0, T]; midpoints t_{m+1/2} carry slopes.
template <typename Scalar = double>
class TimeGrid {
 public:
  TimeGrid(Scalar horizon, Eigen::Index steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > Scalar(0)) || !std::isfinite(horizon))
      throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    if (steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    dt_ = horizon_ / Scalar(steps_);
  }

  Scalar horizon() const { return horizon_; }
  Eigen::Index steps() const { return steps_; }
  Eigen::Index nodes() const { return steps_ + 1; }
  Scalar dt() const { return dt_; }
  Scalar node(Eigen::Index m) const { return Scalar(m) * dt_; }
  Scalar midpoint(Eigen::Index j) const { return (Scalar(j) + Scalar(0.5)) * dt_; }

  /// Trapezoid weight of node m.
  Scalar weight(Eigen::Index m) const {
    return (m == 0 || m == steps_) ? Scalar(0.5) * dt_ : dt_;
  }

  RealVector<Scalar> node_times() const {
    return RealVector<Scalar>::LinSpaced(steps_ + 1, Scalar(0), horizon_);
  }

  bool operator==(const TimeGrid& o) const { return horizon_ == o.horizon_ && steps_ == o.steps_; }

 private:
  Scalar horizon_;
  Eigen::Index steps_;
  Scalar dt_;
};

/// Control samples alpha_m at the time nodes. Perturbations use the same type
/// with values[0] == 0.
template <typename Scalar = double>
struct Control {
  TimeGrid<Scalar> time;
  RealVector<Scalar> values;

  explicit Control(const TimeGrid<Scalar>& t, Scalar constant = Scalar(0))
      : time(t), values(RealVector<Scalar>::Constant(t.nodes(), constant)) {}
  Control(const TimeGrid<Scalar>& t, RealVector<Scalar> v) : time(t), values(std::move(v)) {
    if (values.size() != time.nodes())
      throw std::invalid_argument("Control: expected " + std::to_string(time.nodes()) +
                                  " samples, got " + std::to_string(values.size()));
  }

  /// Forward differences (alpha_{m+1} - alpha_m) / dt, living on midpoints.
  RealVector<Scalar> slopes() const {
    const Eigen::Index M = time.steps();
    return (values.tail(M) - values.head(M)) / time.dt();
  }

  RealVector<Scalar> midpoint_values() const {
    const Eigen::Index M = time.steps();
    return Scalar(0.5) * (values.tail(M) + values.head(M));
  }

  Control& operator+=(const Control& o) {
    values += o.values;
    return *this;
  }
  friend Control operator+(Control a, const Control& b) { return a += b; }
  friend Control operator*(Scalar s, Control a) {
    a.values *= s;
    return a;
  }
};

/// Observable A: either pointwise multiplication by a real profile, or
/// P_target - 1 with P the orthogonal projection onto a normalised target.
template <typename Scalar = double>
struct MultiplicationObservable {
  RealVector<Scalar> profile;
};

template <typename Scalar = double>
struct ProjectionObservable {
  ComplexVector<Scalar> target;
};

template <typename Scalar = double>
using Observable = std::variant<MultiplicationObservable<Scalar>, ProjectionObservable<Scalar>>;

/// Full control problem: i psi_t = -psi_xx/2 + U psi + lambda |psi|^{2 sigma} psi + alpha V psi.
template <typename Scalar = double>
struct ProblemSpec {
  GridPtr<Scalar> grid;
  TimeGrid<Scalar> time;
  Scalar lambda = 0;
  int sigma = 1;
  RealVector<Scalar> trap;     // U
  RealVector<Scalar> control;  // V
  Observable<Scalar> observable;
  Scalar gamma1 = 0;
  Scalar gamma2 = 1;
  ComplexVector<Scalar> psi0;
  Scalar alpha0 = 0;

  void validate() const {
    if (!grid) throw std::invalid_argument("ProblemSpec: missing spatial grid");
    const Eigen::Index N = grid->size();
    if (trap.size() != N) throw GridMismatch("trap potential length");
    if (control.size() != N) throw GridMismatch("control potential length");
    if (psi0.size() != N) throw GridMismatch("initial state length");
    if (!trap.allFinite() || !control.allFinite() || !psi0.allFinite())
      throw std::invalid_argument("ProblemSpec: non-finite potential or initial state");
    if (!std::isfinite(lambda) || !std::isfinite(alpha0))
      throw std::invalid_argument("ProblemSpec: non-finite lambda or alpha0");
    if (sigma < 1) throw std::invalid_argument("ProblemSpec: sigma must be a positive integer");
    if (!(gamma1 >= Scalar(0))) throw std::invalid_argument("ProblemSpec: gamma1 must be >= 0");
    if (!(gamma2 > Scalar(0))) throw std::invalid_argument("ProblemSpec: gamma2 must be > 0");
    if (std::abs(mass(*grid, psi0) - Scalar(1)) > Scalar(1e-10))
      throw std::invalid_argument("ProblemSpec: initial state must have unit mass");
    std::visit(
        [&](const auto& obs) {
          using T = std::decay_t<decltype(obs)>;
          if constexpr (std::is_same_v<T, MultiplicationObservable<Scalar>>) {
            if (obs.profile.size() != N) throw GridMismatch("observable profile length");
            if (!obs.profile.allFinite()) throw std::invalid_argument("observable: non-finite profile");
          } else {
            if (obs.target.size() != N) throw GridMismatch("projection target length");
            if (std::abs(mass(*grid, obs.target) - Scalar(1)) > Scalar(1e-10))
              throw std::invalid_argument("observable: projection target must have unit mass");
          }
        },
        observable);
  }

  Control<Scalar> constant_control(Scalar value) const { return Control<Scalar>(time, value); }
  Control<Scalar> initial_guess() const { return Control<Scalar>(time, alpha0); }
};

enum class TrajectoryKind { state, linearized, adjoint, second_adjoint };

/// Fields at every time node (columns 0..M). Linearized and adjoint runs also
/// keep the mid-step values used to couple sources and controls.
template <typename Scalar = double>
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::state;
  GridPtr<Scalar> grid;
  TimeGrid<Scalar> time;
  ComplexMatrix<Scalar> nodes;
  ComplexMatrix<Scalar> mid;

  Trajectory(TrajectoryKind k, GridPtr<Scalar> g, const TimeGrid<Scalar>& t, bool with_mid = false)
      : kind(k), grid(std::move(g)), time(t), nodes(grid->size(), t.nodes()) {
    if (with_mid) mid.resize(grid->size(), t.steps());
  }

  auto field(Eigen::Index m) const { return nodes.col(m); }
  auto terminal() const { return nodes.col(nodes.cols() - 1); }
  Eigen::Index steps() const { return time.steps(); }
};

}  // namespace gpc
