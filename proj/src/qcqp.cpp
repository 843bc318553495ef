#include "consensus_rhc/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/linalg.hpp"

namespace crhc::qcqp {

namespace {

constexpr double kSlackMin = 1e-9;

struct Workspace {
  const CondensedProblem& p;
  RealMatrix quad_hess;  // 2 GᵀSG

  explicit Workspace(const CondensedProblem& prob) : p(prob) {
    if (p.has_quad) quad_hess = 2.0 * transpose_times(p.quad_map, p.weight * p.quad_map);
  }

  Vector residual(std::span<const double> z) const {
    Vector r = p.quad_map * z;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += p.offset[i];
    return r;
  }
};

double box_margin(double lo, double hi) {
  return std::min(std::max(kSlackMin, 1e-6 * (hi - lo)), 0.25 * (hi - lo));
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIter: return "max_iter";
  }
  return "unknown";
}

void CondensedProblem::validate() const {
  if (dim == 0) throw Error(ErrorKind::InvalidInput, "empty problem");
  if (hessian.rows() != dim || hessian.cols() != dim || linear.size() != dim ||
      box_lo.size() != dim || box_hi.size() != dim)
    throw Error(ErrorKind::DimensionMismatch, "condensed problem sizes disagree with dim");
  if (!hessian.all_finite()) throw Error(ErrorKind::InvalidInput, "non-finite Hessian");
  if (!is_symmetric(hessian)) throw Error(ErrorKind::InvalidInput, "Hessian not symmetric");
  {
    // PSD up to 1e-9 relative: the shifted matrix must factor
    RealMatrix shifted = hessian;
    const double eps = 1e-9 * std::max(1.0, max_abs(hessian));
    for (std::size_t i = 0; i < dim; ++i) shifted(i, i) += eps;
    if (!linalg::cholesky(shifted)) throw Error(ErrorKind::InvalidInput, "Hessian not positive semidefinite");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(linear[i])) throw Error(ErrorKind::InvalidInput, "non-finite linear term");
    if (!(box_lo[i] < box_hi[i])) throw Error(ErrorKind::InvalidInput, "box_lo must be < box_hi");
  }
  if (has_quad) {
    const std::size_t q = quad_map.rows();
    if (quad_map.cols() != dim || offset.size() != q || weight.rows() != q || weight.cols() != q)
      throw Error(ErrorKind::DimensionMismatch, "quadratic constraint sizes");
    if (!(radius >= 0.0) || !std::isfinite(radius))
      throw Error(ErrorKind::InvalidInput, "radius must be finite and nonnegative");
  }
}

double CondensedProblem::objective(std::span<const double> z) const {
  return 0.5 * quad_form(hessian, z) + dot(linear, z) + constant;
}

double CondensedProblem::quad_value(std::span<const double> z) const {
  if (!has_quad) return 0.0;
  Vector r = quad_map * z;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += offset[i];
  return quad_form(weight, r);
}

Vector phase1(const CondensedProblem& p, const SolverSettings& s) {
  p.validate();
  const std::size_t n = p.dim;
  Vector lo(n), hi(n), mid(n), zero(n, 0.0);
  bool zero_inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = box_margin(p.box_lo[i], p.box_hi[i]);
    lo[i] = p.box_lo[i] + m;
    hi[i] = p.box_hi[i] - m;
    mid[i] = 0.5 * (p.box_lo[i] + p.box_hi[i]);
    if (!(0.0 >= lo[i] && 0.0 <= hi[i])) zero_inside = false;
  }
  const double beta2 = p.radius * p.radius;
  auto slack = [&](std::span<const double> z) { return beta2 - p.quad_value(z); };
  if (!p.has_quad) return zero_inside ? zero : mid;
  if (zero_inside && slack(zero) >= kSlackMin) return zero;
  if (slack(mid) >= kSlackMin) return mid;

  const Workspace ws(p);
  auto project = [&](Vector& z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::clamp(z[i], lo[i], hi[i]);
  };
  auto gradient = [&](std::span<const double> z) {
    const Vector r = ws.residual(z);
    return scaled(transpose_times(p.quad_map, p.weight * r), 2.0);
  };

  Vector z = zero_inside && slack(zero) > slack(mid) ? zero : mid;
  project(z);
  double psi = beta2 - slack(z);
  Vector g = gradient(z);
  const double lip = std::max(frobenius_norm(ws.quad_hess), 1e-300);
  double step = 1.0 / lip;
  const double comfortable = std::max(kSlackMin, 1e-2 * beta2);
  Vector best = z;
  double best_psi = psi;
  std::deque<double> recent{psi};

  for (int k = 0; k < s.phase1_cap; ++k) {
    Vector zn(n);
    double psin = 0.0;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t i = 0; i < n; ++i) zn[i] = z[i] - step * g[i];
      project(zn);
      psin = beta2 - slack(zn);
      const double ref = *std::max_element(recent.begin(), recent.end());
      if (psin <= ref + 1e-15 * std::abs(ref)) break;
      step *= 0.5;
    }
    if (psin < best_psi) {
      best_psi = psin;
      best = zn;
    }
    if (beta2 - psin >= comfortable) return zn;
    const Vector gn = gradient(zn);
    const Vector sv = sub(zn, z);
    const Vector yv = sub(gn, g);
    const double sn = norm2(sv);
    const double sy = dot(sv, yv);
    z = zn;
    g = gn;
    recent.push_back(psin);
    if (recent.size() > 10) recent.pop_front();
    if (sn <= 1e-15 * (1.0 + norm2(z))) break;
    step = sy > 0.0 ? dot(sv, sv) / sy : 1.0 / lip;
  }
  if (beta2 - best_psi >= kSlackMin) return best;
  throw Error(ErrorKind::Infeasible, "no strictly feasible point: min ||Gz+h||^2 = " +
                                         std::to_string(best_psi) + " vs beta^2 = " +
                                         std::to_string(beta2));
}

SolveReport solve(const CondensedProblem& p, const SolverSettings& s) {
  p.validate();
  SolveReport rep;
  // zero linear term: the PSD objective is minimised at z = 0 whenever 0 is feasible
  const bool flat = std::all_of(p.linear.begin(), p.linear.end(), [](double v) { return v == 0.0; });
  if (flat) {
    bool inside = true;
    for (std::size_t i = 0; i < p.dim; ++i) inside = inside && p.box_lo[i] < 0.0 && 0.0 < p.box_hi[i];
    const Vector zero(p.dim, 0.0);
    if (inside && (!p.has_quad || p.quad_value(zero) < p.radius * p.radius)) {
      rep.z = zero;
      rep.objective = p.constant;
      rep.mult_lo.assign(p.dim, 0.0);
      rep.mult_hi.assign(p.dim, 0.0);
      rep.stage_objectives.push_back(p.constant);
      return rep;
    }
  }
  Vector z;
  try {
    z = phase1(p, s);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Infeasible) throw;
    rep.status = Status::Infeasible;
    rep.z.assign(p.dim, 0.0);
    rep.objective = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  const std::size_t n = p.dim;
  const Workspace ws(p);
  const double beta2 = p.radius * p.radius;
  const double m_constraints = 2.0 * static_cast<double>(n) + (p.has_quad ? 1.0 : 0.0);
  double t = s.t0;
  int total = 0;
  bool capped = false;

  Vector grad(n), slo(n), shi(n), gq;
  double gslack = 0.0;
  Vector r;

  auto refresh = [&](std::span<const double> zz) {
    for (std::size_t i = 0; i < n; ++i) {
      slo[i] = zz[i] - p.box_lo[i];
      shi[i] = p.box_hi[i] - zz[i];
    }
    if (p.has_quad) {
      r = ws.residual(zz);
      gq = scaled(transpose_times(p.quad_map, p.weight * r), 2.0);
      gslack = beta2 - quad_form(p.weight, r);
    }
  };

  while (true) {
    for (int it = 0; it < s.max_newton_per_stage; ++it) {
      if (total >= s.max_newton_total) {
        capped = true;
        break;
      }
      refresh(z);
      const Vector hz = p.hessian * z;
      for (std::size_t i = 0; i < n; ++i)
        grad[i] = t * (hz[i] + p.linear[i]) - 1.0 / slo[i] + 1.0 / shi[i];
      if (p.has_quad) axpy(1.0 / gslack, gq, grad);

      RealMatrix hess = t * p.hessian;
      for (std::size_t i = 0; i < n; ++i)
        hess(i, i) += 1.0 / (slo[i] * slo[i]) + 1.0 / (shi[i] * shi[i]) + s.regularization;
      if (p.has_quad) {
        hess.add_block(0, 0, ws.quad_hess, 1.0 / gslack);
        const double w = 1.0 / (gslack * gslack);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) hess(i, j) += w * gq[i] * gq[j];
      }
      const auto chol = linalg::cholesky(hess);
      if (!chol) throw Error(ErrorKind::NumericalFailure, "Newton system is not positive definite");
      Vector dz = linalg::cholesky_solve(*chol, grad);
      for (double& v : dz) v = -v;
      const double lambda2 = -dot(grad, dz);
      if (lambda2 * 0.5 <= 1e-14 || norm2(grad) <= s.grad_tol * std::max(1.0, t)) break;

      // Exact change of the barrier objective along dz.
      const Vector hd = p.hessian * dz;
      const double f_lin = dot(hz, dz) + dot(p.linear, dz);
      const double f_quad = 0.5 * dot(dz, hd);
      Vector gd, sgd;
      double q_lin = 0.0, q_quad = 0.0;
      if (p.has_quad) {
        gd = p.quad_map * dz;
        sgd = p.weight * gd;
        q_lin = 2.0 * dot(r, sgd);
        q_quad = dot(gd, sgd);
      }
      auto feasible = [&](double a) {
        for (std::size_t i = 0; i < n; ++i)
          if (slo[i] + a * dz[i] <= 0.0 || shi[i] - a * dz[i] <= 0.0) return false;
        return !p.has_quad || gslack - (a * q_lin + a * a * q_quad) > 0.0;
      };
      auto delta_f = [&](double a) {
        double d = t * (a * f_lin + a * a * f_quad);
        for (std::size_t i = 0; i < n; ++i)
          d -= std::log1p(a * dz[i] / slo[i]) + std::log1p(-a * dz[i] / shi[i]);
        if (p.has_quad) d -= std::log1p(-(a * q_lin + a * a * q_quad) / gslack);
        return d;
      };
      double a = 1.0;
      while (!feasible(a) && a > 1e-300) a *= s.shrink;
      const double slope = dot(grad, dz);
      int halvings = 0;
      while (delta_f(a) > s.armijo * a * slope && halvings < 80) {
        a *= s.shrink;
        ++halvings;
      }
      if (halvings == 80) break;
      const Vector before = z;
      axpy(a, dz, z);
      ++total;
      if (z == before) break;  // step below rounding of z
    }
    rep.stage_objectives.push_back(p.objective(z));
    if (capped || m_constraints / t < s.gap_tol) break;
    t *= s.t_factor;
  }

  refresh(z);
  rep.z = z;
  rep.objective = p.objective(z);
  rep.iterations = total;
  rep.status = capped ? Status::MaxIter : Status::Optimal;
  rep.mult_lo.assign(n, 0.0);
  rep.mult_hi.assign(n, 0.0);
  // Barrier estimates 1/(t*s) lose accuracy once s nears the rounding of z, so
  // multipliers are re-fitted to the identified active set.
  Vector stat = p.hessian * z;
  for (std::size_t i = 0; i < n; ++i) stat[i] += p.linear[i];
  std::vector<int> side(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double tol = 1e-7 * (1.0 + std::abs(p.box_hi[i] - p.box_lo[i]));
    if (slo[i] <= tol && slo[i] <= shi[i]) side[i] = -1;
    else if (shi[i] <= tol) side[i] = 1;
  }
  if (p.has_quad) {
    double mq = 1.0 / (t * gslack);
    if (gslack <= 1e-7 * (1.0 + beta2)) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (side[i] == 0) {
          num -= stat[i] * gq[i];
          den += gq[i] * gq[i];
        }
      if (den > 0.0) mq = std::max(0.0, num / den);
    }
    rep.mult_quad = mq;
    axpy(mq, gq, stat);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (side[i] == -1) {
      rep.mult_lo[i] = std::max(0.0, stat[i]);
      stat[i] -= rep.mult_lo[i];
    } else if (side[i] == 1) {
      rep.mult_hi[i] = std::max(0.0, -stat[i]);
      stat[i] += rep.mult_hi[i];
    }
  }
  rep.kkt_residual = norm2(stat);
  return rep;
}

}  // namespace crhc::qcqp
