#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gpc/optimize.hpp"

namespace gpc {

/// Seeded smooth perturbations v(t) = sum_k c_k sin((k - 1/2) pi t / T) / k,
/// c_k standard normal. Each satisfies v(0) = 0 and v'(T) = 0.
std::vector<Control<double>> smooth_directions(const TimeGrid<double>& time, int count, std::uint64_t seed);

struct FdRow {
  int direction = 0;
  double h = 0;
  double analytic = 0;
  double finite_difference = 0;
  double relative_error = 0;
};

struct GradientCheck {
  std::vector<FdRow> rows;
  std::vector<double> best_error;  // per direction, minimum over h
  double worst_best_error = 0;
};

/// <g, v> against (J(alpha + h v) - J(alpha - h v)) / 2h.
GradientCheck check_gradient(const ProblemSpec<double>& spec, const Control<double>& alpha,
                             const std::vector<Control<double>>& directions, const std::vector<double>& steps,
                             GradientModel model = GradientModel::continuous);

struct HessianCheck {
  std::vector<double> symmetry;  // |<Hv,w> - <Hw,v>| / max(|<Hv,w>|, |<Hw,v>|) per pair
  std::vector<FdRow> rows;       // <Hv, w> against FD of the gradient paired with w
  std::vector<double> best_error;
  double worst_symmetry = 0;
  double worst_best_error = 0;
};

/// Pairs directions (0,1), (2,3), ...; `directions` must have even length.
/// `model` selects which gradient is differenced.
HessianCheck check_hessian(const ProblemSpec<double>& spec, const Control<double>& alpha,
                           const std::vector<Control<double>>& directions, const std::vector<double>& steps,
                           GradientModel model = GradientModel::continuous);

struct OrderCheck {
  std::vector<Eigen::Index> steps;
  Eigen::Index reference_steps = 0;
  std::vector<double> errors;  // relative L2 error of psi(T)
  std::vector<double> orders;  // log2(e_k / e_{k+1}) between consecutive halvings
};

/// Terminal-state error of solve_forward at each M in `steps` against M_ref,
/// with the control sampled from `alpha(t)`. `steps` must double successively.
OrderCheck check_splitting_order(const ProblemSpec<double>& spec, const std::function<double(double)>& alpha,
                                 const std::vector<Eigen::Index>& steps, Eigen::Index reference_steps);

/// Smooth probe control used by order and mass checks: alpha0 + sin(2 pi t / T).
double probe_control(const ProblemSpec<double>& spec, double t);

Control<double> sample_control(const TimeGrid<double>& time, const std::function<double(double)>& alpha);

struct MassCheck {
  double drift = 0;  // max_m |mass(psi_m) / mass(psi_0) - 1|
  Eigen::Index worst_step = 0;
};

MassCheck check_mass(const ProblemSpec<double>& spec, const Control<double>& alpha);

}  // namespace gpc
