#include "consensus_rhc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/linalg.hpp"
#include "consensus_rhc/log.hpp"

namespace crhc::protocol {

using linalg::kron;

namespace {

constexpr double kBoundaryTol = 1e-9;
constexpr double kBoundaryRidge = 1e-8;
constexpr double kAreTol = 1e-7;
constexpr int kMareCap = 100000;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_params(const SubsystemModel& sys, const DesignParams& p) {
  if (!(p.alpha > 0.0)) throw Error(ErrorKind::InvalidInput, "alpha must be positive");
  if (!(p.c > 0.0)) throw Error(ErrorKind::InvalidInput, "coupling c must be positive");
  if (!(p.mu > 0.0)) throw Error(ErrorKind::InvalidInput, "mu must be positive");
  if (!(p.a > 0.0)) throw Error(ErrorKind::InvalidInput, "series weight a must be positive");
  if (p.Q2.rows() != sys.n || p.Q2.cols() != sys.n)
    throw Error(ErrorKind::DimensionMismatch, "Q2 must be " + std::to_string(sys.n) + "x" +
                                                  std::to_string(sys.n));
  if (!p.Q2.all_finite()) throw Error(ErrorKind::InvalidInput, "Q2 has non-finite entries");
}

ConditionResult make_condition(int index, std::string name) {
  ConditionResult r;
  r.index = index;
  r.name = std::move(name);
  return r;
}

RealMatrix gain_from(const SubsystemModel& sys, const RealMatrix& S2, const RealMatrix& R2) {
  const RealMatrix bsb = transpose_times(sys.B, S2 * sys.B);
  const RealMatrix bsa = transpose_times(sys.B, S2 * sys.A);
  return -linalg::Lu(bsb + R2).solve(bsa);
}

RealMatrix h_matrix(const SubsystemModel& sys, const RealMatrix& S2) {
  const RealMatrix bsb = transpose_times(sys.B, S2 * sys.B);
  const RealMatrix bsa = transpose_times(sys.B, S2 * sys.A);
  return symmetrize(transpose_times(bsa, linalg::Lu(bsb).solve(bsa)));
}

// Upper coupling bound check shared by both modes. Returns whether c sits on the boundary.
bool check_upper(ConditionResult& c6, double c, double upper, bool allow_boundary) {
  const double gap = c - upper;
  if (std::abs(gap) <= kBoundaryTol * upper) {
    c6.passed = allow_boundary;
    c6.detail = "c = " + fmt(c) + " equals 1/sigma_max(L) = " + fmt(upper) +
                (allow_boundary ? " (boundary accepted, R1 ridge added)"
                                : " (boundary rejected; strict c < 1/sigma_max by default)");
    return true;
  }
  c6.passed = gap < 0.0;
  c6.detail = "c = " + fmt(c) + (c6.passed ? " < " : " > ") + "1/sigma_max(L) = " + fmt(upper);
  return false;
}

}  // namespace

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Stable: return "stable";
    case Classification::Semistable: return "semistable";
    case Classification::Unstable: return "unstable";
  }
  return "unknown";
}

std::string to_string(Mode m) { return m == Mode::Semistable ? "semistable" : "unstable"; }

bool ConditionReport::all_passed() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.passed; });
}

const ConditionResult* ConditionReport::first_failure() const {
  // coupling range goes ahead of the weight checks: R1 > 0 depends on c
  for (int idx : {1, 2, 3, 6, 4, 5})
    for (const auto& c : conditions)
      if (c.index == idx && !c.passed) return &c;
  return nullptr;
}

SubsystemModel make_subsystem(const RealMatrix& A, const RealMatrix& B) {
  if (!A.is_square() || A.rows() == 0) throw Error(ErrorKind::NonSquare, "A " + A.shape_string());
  if (B.rows() != A.rows() || B.cols() == 0)
    throw Error(ErrorKind::DimensionMismatch, "B " + B.shape_string() + " vs A " + A.shape_string());
  if (!A.all_finite() || !B.all_finite())
    throw Error(ErrorKind::InvalidInput, "A and B must be finite");
  SubsystemModel sys{A, B, A.rows(), B.cols(), Classification::Stable};
  if (linalg::rank(B) != sys.m)
    throw Error(ErrorKind::RankDeficientB, "B must have full column rank");
  if (linalg::controllability_rank(A, B) != sys.n)
    throw Error(ErrorKind::NotControllable, "(A, B) is not controllable");
  const linalg::SpectralSummary s = linalg::eig(A);
  if (!s.unstable_eigenvalues.empty())
    sys.classification = Classification::Unstable;
  else if (s.spectral_radius < 1.0 - linalg::kEigTol)
    sys.classification = Classification::Stable;
  else if (s.is_semistable)
    sys.classification = Classification::Semistable;
  else
    sys.classification = Classification::Unstable;
  return sys;
}

bool check_semi_observable(const RealMatrix& C, const RealMatrix& A) {
  if (!A.is_square()) throw Error(ErrorKind::NonSquare, "A " + A.shape_string());
  if (C.cols() != A.rows())
    throw Error(ErrorKind::DimensionMismatch, "C " + C.shape_string() + " vs A " + A.shape_string());
  const std::size_t n = A.rows();
  const RealMatrix amI = A - RealMatrix::identity(n);
  RealMatrix stack(C.rows() * n, n);
  RealMatrix blk = C;
  for (std::size_t i = 0; i < n; ++i) {
    stack.set_block(i * C.rows(), 0, blk);
    blk = blk * amI;
  }
  RealMatrix joint(stack.rows() + n, n);
  joint.set_block(0, 0, amI);
  joint.set_block(n, 0, stack);
  const std::size_t k1 = linalg::null_space(amI).cols();
  const std::size_t k2 = stack.rows() == 0 ? n : linalg::null_space(stack).cols();
  const std::size_t k3 = linalg::null_space(joint).cols();
  return k1 == k2 && k2 == k3;
}

RealMatrix kernel_projector(const RealMatrix& A) {
  const std::size_t n = A.rows();
  const RealMatrix amI = A - RealMatrix::identity(n);
  return RealMatrix::identity(n) - amI * linalg::group_inverse(amI);
}

double lyapunov_residual(const RealMatrix& A, const RealMatrix& Q, const RealMatrix& S) {
  const RealMatrix r = transpose_times(A, S * A) - S + Q;
  return frobenius_norm(r) / (1.0 + frobenius_norm(S));
}

RealMatrix solve_semistable_lyapunov(const SubsystemModel& sys, const RealMatrix& Q2, double a) {
  if (!linalg::eig(sys.A).is_semistable)
    throw Error(ErrorKind::NotSemistable, "A is not semistable");
  if (Q2.rows() != sys.n || Q2.cols() != sys.n)
    throw Error(ErrorKind::DimensionMismatch, "Q2 shape");
  if (!linalg::is_psd(Q2)) throw Error(ErrorKind::InvalidInput, "Q2 must be symmetric PSD");
  if (!check_semi_observable(linalg::psd_factor(Q2), sys.A))
    throw Error(ErrorKind::NotSemiObservable, "(C2, A) is not semi-observable");
  RealMatrix sigma;
  try {
    sigma = linalg::stein_series(sys.A, Q2);
  } catch (const Error& e) {
    throw Error(ErrorKind::SeriesDiverged, e.what());
  }
  const RealMatrix L = kernel_projector(sys.A);
  RealMatrix S2 = symmetrize(sigma + a * transpose_times(L, L));
  if (linalg::min_eigenvalue_sym(S2) <= 0.0)
    throw Error(ErrorKind::NumericalFailure, "S2 is not positive definite");
  if (lyapunov_residual(sys.A, Q2, S2) > kAreTol)
    throw Error(ErrorKind::NumericalFailure, "Lyapunov-like residual too large");
  return S2;
}

double fit_series_weight(const RealMatrix& A, const RealMatrix& Q2, const RealMatrix& target) {
  const RealMatrix sigma = linalg::stein_series(A, Q2);
  const RealMatrix L = kernel_projector(A);
  const RealMatrix ltl = transpose_times(L, L);
  const double denom = dot(ltl.values(), ltl.values());
  if (denom == 0.0) return 1.0;
  const RealMatrix diff = target - sigma;
  return dot(diff.values(), ltl.values()) / denom;
}

double compute_delta_c(const SubsystemModel& sys, double alpha) {
  const linalg::SpectralSummary s = linalg::eig(sys.A);
  if (s.unstable_eigenvalues.empty())
    throw Error(ErrorKind::NoUnstableEigenvalue, "A has no eigenvalue outside the unit circle");
  const std::size_t rb = linalg::rank(sys.B);
  double gamma = 0.0;
  if (sys.B.is_square() && rb == sys.n) {
    double mx = 0.0;
    for (const auto& l : s.unstable_eigenvalues) mx = std::max(mx, std::abs(l));
    gamma = 1.0 - 1.0 / (mx * mx);
  } else if (rb == 1) {
    double prod = 1.0;
    for (const auto& l : s.unstable_eigenvalues) prod *= std::abs(l) * std::abs(l);
    gamma = 1.0 - 1.0 / prod;
  } else {
    throw Error(ErrorKind::GeneralBUnsupported,
                "critical delta has a closed form only for square invertible or rank-one B; "
                "supply delta explicitly");
  }
  return (1.0 + alpha) * gamma;
}

double modified_are_residual(const SubsystemModel& sys, const RealMatrix& Q2, double alpha,
                             double delta, const RealMatrix& S) {
  const RealMatrix r = transpose_times(sys.A, S * sys.A) - S + Q2 -
                       (delta / (1.0 + alpha)) * h_matrix(sys, S);
  return frobenius_norm(r) / (1.0 + frobenius_norm(S));
}

RealMatrix solve_modified_are(const SubsystemModel& sys, const RealMatrix& Q2, double alpha,
                              double delta, ModifiedAreStats* stats) {
  if (Q2.rows() != sys.n || Q2.cols() != sys.n)
    throw Error(ErrorKind::DimensionMismatch, "Q2 shape");
  if (!linalg::is_pd(Q2)) throw Error(ErrorKind::InvalidInput, "Q2 must be symmetric PD");
  if (linalg::observability_rank(linalg::psd_factor(Q2), sys.A) != sys.n)
    throw Error(ErrorKind::NotObservable, "(A, Q2^(1/2)) is not observable");
  const double gamma = delta / (1.0 + alpha);
  const double qn = frobenius_norm(Q2);
  RealMatrix S = Q2;
  if (stats) stats->min_increment_eig = 0.0;
  for (int it = 1; it <= kMareCap; ++it) {
    RealMatrix next = transpose_times(sys.A, S * sys.A) + Q2;
    if (gamma != 0.0) next -= gamma * h_matrix(sys, S);
    next = symmetrize(next);
    const RealMatrix step = next - S;
    const double diff = frobenius_norm(step);
    if (stats && stats->track_monotonicity) {
      const double e = linalg::min_eigenvalue_sym(step);
      stats->min_increment_eig = it == 1 ? e : std::min(stats->min_increment_eig, e);
    }
    S = std::move(next);
    const double sn = frobenius_norm(S);
    if (!S.all_finite() || sn > 1e12 * (1.0 + qn))
      throw Error(ErrorKind::Diverged, "modified ARE iteration diverges (delta <= delta_c?)");
    if (diff < 1e-11 * std::max(1.0, sn)) {
      if (stats) stats->iterations = it;
      if (modified_are_residual(sys, Q2, alpha, delta, S) > 1e-8)
        throw Error(ErrorKind::NumericalFailure, "modified ARE residual too large");
      return S;
    }
  }
  throw Error(ErrorKind::Diverged, "modified ARE iteration cap reached");
}

void assemble_globals(ProtocolDesign& d) {
  const std::size_t M = d.laplacian.rows();
  const double k = 1.0 / (1.0 + d.alpha);
  RealMatrix coef = (d.c * k) * (d.S1 * d.laplacian);
  if (d.mode == Mode::Unstable) coef -= (d.delta * k) * d.S1;
  d.Qg = symmetrize(kron(d.S1, d.Q2) + kron(coef, d.H));
  d.Rg = symmetrize(kron(d.R1, d.R2));
  d.Sg = symmetrize(kron(d.S1, d.S2));
  d.Kg = d.c * kron(d.laplacian, d.K2);
  (void)M;
}

double verify_global_are(const ProtocolDesign& d, const SubsystemModel& sys,
                         const graph::GraphModel& g) {
  const std::size_t M = g.num_agents;
  const RealMatrix Ag = kron(RealMatrix::identity(M), sys.A);
  const RealMatrix Bg = kron(RealMatrix::identity(M), sys.B);
  const RealMatrix& P = d.Sg;
  const RealMatrix PA = P * Ag;
  const RealMatrix X = d.Rg + transpose_times(Bg, P * Bg);
  const RealMatrix Y = transpose_times(Bg, PA);
  const RealMatrix res =
      transpose_times(Ag, PA) - P - transpose_times(Y, linalg::Lu(X).solve(Y)) + d.Qg;
  return frobenius_norm(res) / (1.0 + frobenius_norm(P));
}

RealMatrix optimal_global_gain(const ProtocolDesign& d, const SubsystemModel& sys,
                               std::size_t num_agents) {
  const RealMatrix Ag = kron(RealMatrix::identity(num_agents), sys.A);
  const RealMatrix Bg = kron(RealMatrix::identity(num_agents), sys.B);
  const RealMatrix X = d.Rg + transpose_times(Bg, d.Sg * Bg);
  return -linalg::Lu(X).solve(transpose_times(Bg, d.Sg * Ag));
}

std::vector<double> consensus_mode_radii(const ProtocolDesign& d, const SubsystemModel& sys) {
  const RealMatrix bk = sys.B * d.K2;
  std::vector<double> out;
  for (const auto& lam : linalg::eigenvalues(d.laplacian)) {
    if (std::abs(lam) <= linalg::kClusterTol) continue;
    double rho = 0.0;
    if (std::abs(lam.imag()) <= 1e-12) {
      rho = linalg::eig(sys.A + (d.c * lam.real()) * bk).spectral_radius;
    } else {
      for (const auto& mu : linalg::complex_eigenvalues(sys.A + (d.c * lam.real()) * bk,
                                                        (d.c * lam.imag()) * bk))
        rho = std::max(rho, std::abs(mu));
    }
    out.push_back(rho);
  }
  return out;
}

DesignOutcome synthesize(const SubsystemModel& sys, const graph::GraphModel& g,
                         const DesignParams& p, Mode mode) {
  require_params(sys, p);
  if (g.num_agents < 2)
    throw Error(ErrorKind::AssumptionViolated, "at least two agents are required");
  const graph::LaplacianSpectrum spec = graph::analyze_spectrum(g);
  if (!spec.has_spanning_tree)
    throw Error(ErrorKind::AssumptionViolated,
                "graph has no spanning tree (zero eigenvalue multiplicity " +
                    std::to_string(spec.zero_multiplicity) + ")");
  if (mode == Mode::Semistable && sys.classification == Classification::Unstable)
    throw Error(ErrorKind::NotSemistable, "semistable design requested for a non-semistable A");

  const std::size_t n = sys.n, M = g.num_agents;
  DesignOutcome out;
  ConditionReport& rep = out.report;
  rep.mode = mode;
  rep.sigma_min = spec.sigma_min_nonzero;
  rep.sigma_max = spec.sigma_max;
  rep.sigma_from_directed_graph = !spec.is_symmetric;
  rep.c = p.c;
  rep.c_upper = 1.0 / spec.sigma_max;
  if (rep.sigma_from_directed_graph)
    rep.notes.push_back("Laplacian is not symmetric; sigma_max taken as max |lambda_i(L)|");

  const RealMatrix W = p.W ? *p.W : p.mu * RealMatrix::identity(M);
  if (W.rows() != M || W.cols() != M)
    throw Error(ErrorKind::DimensionMismatch, "W must be " + std::to_string(M) + "x" +
                                                  std::to_string(M));

  // Condition 1: Q2 structure.
  ConditionResult c1 = make_condition(1, mode == Mode::Semistable
                                             ? "Q2 = C2'C2, rank(C2) = n-1, (C2, A) semi-observable"
                                             : "Q2 > 0 and (A, Q2^(1/2)) observable");
  if (!is_symmetric(p.Q2) || !linalg::is_psd(p.Q2)) {
    c1.detail = "Q2 is not symmetric positive semidefinite";
  } else if (mode == Mode::Semistable) {
    const RealMatrix C2 = linalg::psd_factor(p.Q2);
    const std::size_t r = C2.rows();
    const bool stable = sys.classification == Classification::Stable;
    const bool rank_ok = (r == n - 1 && n > 1) || (stable && r == n);
    if (!rank_ok) {
      c1.kind = ErrorKind::RankDeficientQ2;
      c1.detail = "rank(C2) = " + std::to_string(r) + ", need " + std::to_string(n - 1) +
                  (n == 1 ? " (n = 1 forces Q2 = 0: degenerate)" : "");
    } else if (!check_semi_observable(C2, sys.A)) {
      c1.kind = ErrorKind::NotSemiObservable;
      c1.detail = "(C2, A) is not semi-observable";
    } else {
      c1.passed = true;
      c1.detail = "rank(C2) = " + std::to_string(r) + ", semi-observable";
    }
  } else {
    if (!linalg::is_pd(p.Q2)) {
      c1.detail = "Q2 is not positive definite";
    } else if (linalg::observability_rank(linalg::psd_factor(p.Q2), sys.A) != n) {
      c1.kind = ErrorKind::NotObservable;
      c1.detail = "(A, Q2^(1/2)) is not observable";
    } else {
      c1.passed = true;
      c1.detail = "Q2 > 0, observable";
    }
  }
  rep.conditions.push_back(c1);

  // Unstable mode: settle delta before solving for S2.
  double delta = 0.0;
  if (mode == Mode::Unstable) {
    try {
      rep.delta_c = compute_delta_c(sys, p.alpha);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::GeneralBUnsupported && !p.delta) throw;
      rep.notes.push_back(std::string("delta_c unavailable: ") + e.what());
    }
    if (p.delta) {
      delta = *p.delta;
    } else {
      const double hi = std::min(1.0, p.c * spec.sigma_min_nonzero);
      delta = 0.5 * (rep.delta_c.value_or(0.0) + hi);
      rep.notes.push_back("delta not supplied; using midpoint " + fmt(delta) +
                          " of (delta_c, min(1, c*sigma_min)]");
    }
    rep.delta = delta;
  }

  // Condition 2: S2.
  ConditionResult c2 = make_condition(
      2, mode == Mode::Semistable ? "S2 > 0 solves A'S2A - S2 + Q2 = 0"
                                  : "S2 > 0 solves the modified Riccati equation, delta_c < delta <= 1");
  std::optional<RealMatrix> S2;
  if (mode == Mode::Unstable && !(delta > 0.0 && delta <= 1.0)) {
    c2.detail = "delta = " + fmt(delta) + " outside (0, 1]";
  } else if (mode == Mode::Unstable && rep.delta_c && delta <= *rep.delta_c) {
    c2.detail = "delta = " + fmt(delta) + " <= delta_c = " + fmt(*rep.delta_c) +
                "; the Riccati iteration cannot converge";
  } else if (c1.passed || p.override_conditions) {
    try {
      S2 = mode == Mode::Semistable ? solve_semistable_lyapunov(sys, p.Q2, p.a)
                                    : solve_modified_are(sys, p.Q2, p.alpha, delta);
      if (linalg::min_eigenvalue_sym(*S2) > 0.0) {
        c2.passed = true;
        c2.detail = "min eig(S2) = " + fmt(linalg::min_eigenvalue_sym(*S2));
      } else {
        c2.detail = "S2 is not positive definite";
      }
    } catch (const Error& e) {
      c2.kind = e.kind();
      c2.detail = e.what();
    }
  } else {
    c2.detail = "not evaluated (condition 1 failed)";
  }
  rep.conditions.push_back(c2);

  // Condition 3: W.
  ConditionResult c3 = make_condition(3, "W symmetric invertible with W*L and W*L^2 symmetric");
  if (!is_symmetric(W)) {
    c3.detail = "W is not symmetric";
  } else if (linalg::Lu(W).singular()) {
    c3.detail = "W is singular";
  } else if (!graph::check_WL_symmetrizable(g.laplacian, W)) {
    c3.detail = "W*L is not symmetric";
  } else {
    c3.passed = true;
    c3.detail = "W*L symmetric";
  }
  rep.conditions.push_back(c3);

  // Condition 6 first so the boundary ridge is known for R1.
  ConditionResult c6 = make_condition(
      6, mode == Mode::Semistable ? "c < 1/sigma_max(L)" : "delta/sigma_min(L) <= c <= 1/sigma_max(L)");
  if (mode == Mode::Semistable) {
    rep.c_on_boundary = check_upper(c6, p.c, rep.c_upper, p.allow_boundary_c);
  } else {
    rep.c_lower = delta / spec.sigma_min_nonzero;
    if (rep.c_lower > rep.c_upper * (1.0 + kBoundaryTol)) {
      c6.kind = ErrorKind::InfeasibleCoupling;
      c6.detail = "no admissible c: delta/sigma_min = " + fmt(rep.c_lower) + " > 1/sigma_max = " +
                  fmt(rep.c_upper);
    } else if (p.c < rep.c_lower * (1.0 - kBoundaryTol)) {
      c6.detail = "c = " + fmt(p.c) + " < delta/sigma_min(L) = " + fmt(rep.c_lower);
    } else {
      rep.c_on_boundary = check_upper(c6, p.c, rep.c_upper, p.allow_boundary_c);
      c6.detail += "; delta/sigma_min(L) = " + fmt(rep.c_lower);
    }
  }
  if (rep.c_on_boundary && p.allow_boundary_c) rep.r1_ridge = kBoundaryRidge;

  // Condition 4: R1.
  ConditionResult c4 = make_condition(4, "R1 = W((1+alpha)I - cL)/(c*alpha) > 0");
  RealMatrix R1 = (1.0 / (p.c * p.alpha)) *
                  (W * ((1.0 + p.alpha) * RealMatrix::identity(M) - p.c * g.laplacian));
  R1 += rep.r1_ridge * RealMatrix::identity(M);
  if (!is_symmetric(R1)) {
    c4.detail = "R1 is not symmetric";
  } else {
    const double e = linalg::min_eigenvalue_sym(R1);
    c4.passed = e > 0.0;
    c4.detail = "min eig(R1) = " + fmt(e);
  }
  rep.conditions.push_back(c4);

  // Condition 5: R2.
  ConditionResult c5 = make_condition(5, "R2 = alpha*B'S2B > 0");
  RealMatrix R2;
  if (S2) {
    R2 = symmetrize(p.alpha * transpose_times(sys.B, *S2 * sys.B));
    const double e = linalg::min_eigenvalue_sym(R2);
    c5.passed = e > 0.0;
    c5.detail = "min eig(R2) = " + fmt(e);
  } else {
    c5.detail = "not evaluated (no S2)";
  }
  rep.conditions.push_back(c5);
  rep.conditions.push_back(c6);

  if (!S2 || (!rep.all_passed() && !p.override_conditions)) return out;
  if (!rep.all_passed()) rep.notes.push_back("conditions overridden; design built regardless");

  ProtocolDesign d;
  d.mode = mode;
  d.alpha = p.alpha;
  d.c = p.c;
  d.delta = mode == Mode::Unstable ? delta : 0.0;
  d.mu = p.W ? 0.0 : p.mu;
  d.a = p.a;
  d.r1_ridge = rep.r1_ridge;
  d.Q2 = symmetrize(p.Q2);
  d.S2 = *S2;
  d.R2 = R2;
  d.K2 = gain_from(sys, d.S2, d.R2);
  d.H = h_matrix(sys, d.S2);
  d.W = W;
  d.laplacian = g.laplacian;
  d.S1 = symmetrize(W * g.laplacian);
  d.R1 = symmetrize(R1);
  assemble_globals(d);
  d.are_residual = verify_global_are(d, sys, g);
  rep.are_residual = d.are_residual;

  const double qmin = linalg::min_eigenvalue_sym(d.Qg);
  const std::size_t kq = linalg::null_space(d.Qg, 1e-9).cols();
  const std::size_t kl = linalg::null_space(kron(g.laplacian, RealMatrix::identity(n))).cols();
  std::ostringstream post;
  post << "global ARE residual " << d.are_residual << "; min eig(Qg) " << qmin
       << "; dim Ker(Qg) " << kq << " vs dim Ker(L x I) " << kl;
  rep.notes.push_back(post.str());
  if (d.are_residual > kAreTol) log::warn("global ARE residual exceeds 1e-7");
  out.design = std::move(d);
  return out;
}

namespace {

ProtocolDesign finish(DesignOutcome&& o, const DesignParams& p) {
  if (!o.report.all_passed() && !p.override_conditions) {
    const ConditionResult* f = o.report.first_failure();
    throw Error::condition(f->index, f->name + ": " + f->detail, f->kind);
  }
  if (!o.design) {
    const ConditionResult* f = o.report.first_failure();
    throw Error::condition(f ? f->index : 2, "design could not be constructed" +
                                                 (f ? ": " + f->detail : std::string()));
  }
  if (o.design->are_residual > kAreTol && !p.override_conditions)
    throw Error(ErrorKind::NumericalFailure,
                "global ARE residual " + fmt(o.design->are_residual) + " exceeds 1e-7");
  return std::move(*o.design);
}

}  // namespace

ProtocolDesign design_semistable(const SubsystemModel& sys, const graph::GraphModel& g,
                                 const DesignParams& p) {
  return finish(synthesize(sys, g, p, Mode::Semistable), p);
}

ProtocolDesign design_unstable(const SubsystemModel& sys, const graph::GraphModel& g,
                               const DesignParams& p) {
  return finish(synthesize(sys, g, p, Mode::Unstable), p);
}

}  // namespace crhc::protocol
