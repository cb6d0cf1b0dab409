#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace gpc {

enum class MinresStatus { converged, max_iterations, breakdown };

template <typename Scalar = double>
struct MinresResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solution;
  MinresStatus status = MinresStatus::max_iterations;
  int iterations = 0;
  // Preconditioned residual norms ||b - A x_k||_{P^{-1}}, starting with ||b||.
  std::vector<Scalar> residuals;
};

/// Preconditioned MINRES (Paige & Saunders) for symmetric A and SPD P.
///
/// `apply` computes A x, `precondition` computes P^{-1} r. Starts from x = 0
/// and stops when the preconditioned residual drops below rtol * ||b||_{P^{-1}}.
/// A non-positive r' P^{-1} r reports a breakdown and returns the last iterate.
template <typename Scalar, typename Apply, typename Precondition>
MinresResult<Scalar> minres(Apply&& apply, Precondition&& precondition,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs, Scalar rtol,
                            int max_iterations) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = rhs.size();
  MinresResult<Scalar> out;
  out.solution = Vec::Zero(n);

  Vec r1 = rhs;
  Vec y = precondition(r1);
  Scalar beta1 = r1.dot(y);
  if (!(beta1 >= Scalar(0)) || !std::isfinite(beta1)) {
    out.status = MinresStatus::breakdown;
    return out;
  }
  beta1 = std::sqrt(beta1);
  out.residuals.push_back(beta1);
  if (beta1 == Scalar(0)) {
    out.status = MinresStatus::converged;
    return out;
  }

  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1;
  Scalar cs = -1, sn = 0;
  Vec w = Vec::Zero(n), w1(n), w2 = Vec::Zero(n);
  Vec r2 = r1;
  Vec v(n);

  for (int itn = 1; itn <= max_iterations; ++itn) {
    v = y / beta;
    y = apply(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const Scalar alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = precondition(r2);
    oldb = beta;
    const Scalar beta_sq = r2.dot(y);
    if (!(beta_sq >= Scalar(0)) || !std::isfinite(beta_sq)) {
      out.status = MinresStatus::breakdown;
      out.iterations = itn - 1;
      return out;
    }
    beta = std::sqrt(beta_sq);

    const Scalar oldeps = epsln;
    const Scalar delta = cs * dbar + sn * alfa;
    const Scalar gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const Scalar gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const Scalar phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    out.solution += phi * w;
    out.iterations = itn;
    out.residuals.push_back(phibar);

    if (phibar <= rtol * beta1 || beta <= eps * beta1) {
      out.status = MinresStatus::converged;
      return out;
    }
  }
  out.status = MinresStatus::max_iterations;
  return out;
}

}  // namespace gpc
