#pragma once

#include "majsim/model.hpp"

namespace majsim {

/// Curvature-bounded quadratic minorant of cos(alpha*x - beta) expanded at x0.
/// delta = alpha^2 bounds |d^2 cos / dx^2|, so the bound is global.
struct CosineSurrogateParams {
  double alpha = 0.0;  // phase rate [rad / position unit]
  double beta = 0.0;   // phase offset [rad]
  double x0 = 0.0;     // expansion point
  double delta = 0.0;  // curvature bound, always alpha^2

  static CosineSurrogateParams at(double alpha, double beta, double x0) {
    return {alpha, beta, x0, alpha * alpha};
  }
};

/// Tangent-line majorant of ln at eta0: ln(eta0) + (eta - eta0)/eta0.
double log_upper(double eta, double eta0);

/// Same majorant, used on the slack variables Psi.
double log_upper_slack(double psi, double psi0);

/// Minorant of w^H G w for hermitian PSD G: 2 Re(w^H G w0) - w0^H G w0.
double quad_lower_bf(const CVec& w, const CVec& w0, const CMat& G);

double cos_lower(double x, const CosineSurrogateParams& p);

/// Minorant of |w_J^H g_i(x)|^2 built from per-antenna cosine minorants of
/// Re(g_i^H(x) W_J g_i(x0)) (two stacked minorants). Exact at x = x0.
double position_gain_lower(const RVec& x, const RVec& x0, const CMat& W_J,
                           const Topology& topo, const SystemConfig& config,
                           int i);

/// Majorant of |w_J^H g_i(x)|^2 via the principal-eigenvalue splitting
/// Phi_J = xi_max(W_J) I (eigenvalue splitting). Exact at x = x0.
double position_gain_upper(const RVec& x, const RVec& x0, const CMat& W_J,
                           const Topology& topo, const SystemConfig& config,
                           int i);

/// Overflow-safe (1/chi) ln(e^(chi x) + 1); majorizes max(x, 0) within ln2/chi.
double smooth_max(double x, double chi);

}  // namespace majsim
