#pragma once

#include <map>
#include <string>
#include <vector>

#include "mgdispatch/dispatch_problems.hpp"

namespace mgdispatch {

struct AdmmConfig {
  double rho0 = 1.0;
  double mu = 10.0;
  double tau_inc = 2.0;
  double tau_dec = 2.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-3;
  int max_iter = 500;
  // By default the dual residual is the raw change in the copies; true
  // applies the textbook rho scaling instead.
  bool rho_scaled_dual_residual = false;
  // Start all originals/copies from zero instead of the no-control flow.
  bool zero_init = false;
  BuildOptions build;
  QpSettings qp;
};

struct ResidualRecord {
  int k = 0;
  double s_pri = 0.0, s_dual = 0.0;
  double eps_pri = 0.0, eps_dual = 0.0;
  double rho = 0.0;
};

// One bus message. Payloads carry boundary series only; anything else is a
// privacy violation caught by audit_privacy.
struct AgentMessage {
  std::string sender;  // "aggregator" | "lv:<name>" | "mvccr:<id>"
  int k = 0;
  std::string type;  // "originals" | "copies_duals" | "converged"
  // field name -> row-major (scenario, t) series
  std::map<std::string, Eigen::MatrixXd> fields;
};

struct AdmmState {
  int iteration = 0;
  double rho = 0.0;
  CouplingVars originals, copies, duals;
  std::vector<ResidualRecord> history;
};

struct AdmmTrace {
  std::vector<AgentMessage> messages;
  std::vector<ResidualRecord> residuals;
};

struct AdmmResult {
  DispatchPlan plan;
  AdmmState state;
  AdmmTrace trace;
  SolutionBundle bundle;
  bool converged = false;
};

// Residuals per the displayed norm-sum forms: one norm per MVCCR over the
// stacked (p, q) series, one per LV over the stacked (p, q, v) series.
std::pair<double, double> compute_residuals(const CouplingVars& originals,
                                            const CouplingVars& copies,
                                            const CouplingVars& prev_copies,
                                            bool rho_scaled_dual, double rho);

int coupling_dimension(const CouplingVars& vars);
double coupling_norm(const CouplingVars& vars);

struct ConvergenceCheck {
  bool converged = false;
  double eps_pri = 0.0, eps_dual = 0.0;
};

ConvergenceCheck check_convergence(const AdmmState& state, const AdmmConfig& cfg,
                                   double s_pri, double s_dual);

// Self-adaptive penalty: returns the new rho and rescales the scaled duals in
// place when it changes.
double adapt_rho(AdmmState& state, double s_pri, double s_dual, double mu,
                 double tau_inc, double tau_dec);

AdmmResult run_admm(const MultiGridCase& cs, const AdmmConfig& cfg);

// Trace persistence: newline-delimited JSON, one message or residual record
// per line.
void save_trace(const AdmmTrace& trace, const std::string& path);
AdmmTrace load_trace(const std::string& path);

struct PrivacyReport {
  bool pass = true;
  std::vector<std::string> leaks;  // "sender k=3 field=admittance"
  int message_count = 0;
};

PrivacyReport audit_privacy(const AdmmTrace& trace);

}  // namespace mgdispatch
