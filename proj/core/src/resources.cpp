#include "mgdispatch/resources.hpp"

#include "mgdispatch/errors.hpp"

namespace mgdispatch {

void BessParams::validate() const {
  if (s_max <= 0.0) throw SchemaError("bess '" + id + "': s_max must be positive");
  if (e_max_wh <= 0.0) throw SchemaError("bess '" + id + "': e_max_wh must be positive");
  if (!(margin_a >= 0.0 && margin_a < 0.5))
    throw SchemaError("bess '" + id + "': margin_a must be in [0, 0.5)");
  if (soc_init < margin_a || soc_init > 1.0 - margin_a)
    throw SchemaError("bess '" + id + "': soc_init outside [a, 1-a]");
}

double bess_cost(const ResourceProfile& profile) {
  // Feasibility objective: one unit per (scenario, t), independent of the
  // decision series.
  return static_cast<double>(profile.p.rows()) * static_cast<double>(profile.p.cols());
}

Eigen::VectorXd soc_trajectory(const BessParams& params, const Eigen::VectorXd& p,
                               double step_seconds) {
  const double slope = params.soc_slope(step_seconds);
  Eigen::VectorXd soc(p.size());
  double prev = params.soc_init;
  for (int t = 0; t < p.size(); ++t) {
    prev -= p(t) * slope;
    soc(t) = prev;
  }
  return soc;
}

std::vector<CapabilityViolation> capability_check(const BessParams& params,
                                                  const ResourceProfile& profile,
                                                  double step_seconds, double tol) {
  std::vector<CapabilityViolation> out;
  const int n_sc = static_cast<int>(profile.p.rows());
  const int horizon = static_cast<int>(profile.p.cols());
  if (profile.q.rows() != n_sc || profile.q.cols() != horizon)
    throw DimensionMismatch("resource profile p/q dimensions differ");
  const double s2 = params.s_max * params.s_max;
  for (int w = 0; w < n_sc; ++w) {
    for (int t = 0; t < horizon; ++t) {
      const double a2 = profile.p(w, t) * profile.p(w, t) + profile.q(w, t) * profile.q(w, t);
      if (a2 > s2 + tol)
        out.push_back({w, t, "apparent_power", std::sqrt(a2) - params.s_max});
    }
    const Eigen::VectorXd soc = soc_trajectory(params, profile.p.row(w), step_seconds);
    for (int t = 0; t < horizon; ++t) {
      if (soc(t) < params.margin_a - tol)
        out.push_back({w, t, "soc_low", params.margin_a - soc(t)});
      else if (soc(t) > 1.0 - params.margin_a + tol)
        out.push_back({w, t, "soc_high", soc(t) - (1.0 - params.margin_a)});
    }
  }
  return out;
}

}  // namespace mgdispatch
