#pragma once

#include <chrono>
#include <string>

#include "fetv/solvers.hpp"

namespace fetv::detail {

// Pieces shared by the iterations: ||f||, eta(f,0), S, trace bookkeeping.
class RunMonitor {
public:
    RunMonitor(const ProblemSpec& spec, const SolverParams& params);

    double S() const { return S_; }
    double gap_reference() const { return gap_ref_; }
    // |eta| small enough relative to eta(f, 0); the absolute floor only guards round-off.
    bool gap_ok(double eta) const;

    void record(const TraceEntry& e);
    // Keeps a copy of the iterate with the lowest primal objective.
    void offer(double objective, const DgFunction& u, const RtDofVector& p);

    SolverResult finish(DgFunction u, RtDofVector p, bool converged, const TraceEntry& last);

    SolverReport& report() { return report_; }

private:
    const ProblemSpec& spec_;
    const SolverParams& params_;
    double S_;
    double gap_ref_;
    double gap_floor_;
    std::chrono::steady_clock::time_point start_;
    SolverReport report_;
    double best_obj_ = std::numeric_limits<double>::infinity();
    DgFunction best_u_;
    RtDofVector best_p_;
    TraceEntry best_entry_;
};

// Split Bregman / ADMM d-update on w = Lambda u + b.
void shrink_y(const Discretization& disc, const Eigen::VectorXd& w, double beta, double lambda, double S, SNorm s,
              Eigen::VectorXd& d);

// Primal objective from a precomputed Lambda u.
double primal_objective_with(const DgFunction& u, const YVector& Lu, const ProblemSpec& spec);
// eta(u, p) from precomputed Lambda u and div p.
double gap_with(const DgFunction& u, const YVector& Lu, const RtDofVector& p, const DgFunction& divp,
                const ProblemSpec& spec);

// sigma, tau for Chambolle-Pock from the operator norm when not given.
void pick_steps(const ProblemSpec& spec, const SolverParams& params, double S, bool lumped, double& sigma,
                double& tau);

double relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before);

}  // namespace fetv::detail
