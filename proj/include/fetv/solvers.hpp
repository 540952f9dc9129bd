#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fetv/dtv.hpp"
#include "fetv/operators.hpp"

namespace fetv {

enum class Fidelity { L2, L1 };

enum class Algorithm { SplitBregman, ChambollePock, ChambolleProjection, ChambollePockL1, AdmmL1 };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
Fidelity fidelity_of(Algorithm a);

struct ProblemSpec {
    std::shared_ptr<const Discretization> disc;
    DgFunction f;      // zero off the data region
    CellMask observed;  // empty means every cell is observed
    double beta = 1e-3;
    SNorm s = SNorm::Two;
    Fidelity fidelity = Fidelity::L2;
    double huber_eps = 0.0;
    std::optional<DgFunction> reference;  // PSNR target

    const CellMask& mask() const;
    bool fully_observed() const;
};

// Builds a spec with f zeroed off the data region.
ProblemSpec make_problem(std::shared_ptr<const Discretization> disc, DgFunction f, CellMask observed, double beta,
                         SNorm s, Fidelity fidelity);

struct SolverParams {
    Algorithm algorithm = Algorithm::SplitBregman;
    double lambda = 1e-3;
    double sigma = 0.0;  // 0: derived from the operator norm
    double tau = 0.0;    // 0: derived from the operator norm
    double theta = 1.0;
    double step_ratio = 1.0;  // sigma / tau when both are derived
    double S = 0.0;           // 0: 1 for r = 0, 1e-2 otherwise
    double tol_rel = 1e-3;
    double infeas_cap = 1e-11;
    int max_iter = 5000;
    double inner_tol = 1e-8;
    int inner_max_iter = 2000;
    InnerSolverKind inner = InnerSolverKind::ConjugateGradient;
    double l1_change_tol = 1e-6;
    int l1_patience = 5;
    double l1_certificate_slack = 0.01;
    std::uint64_t seed = 0;
    bool trace = true;
};

double default_scale(int r);

struct TraceEntry {
    int iteration = 0;
    double objective = 0;
    double gap = 0;
    double infeasibility = 0;
    double change = 0;       // relative iterate change
    double certificate = 0;  // L1 multiplier bound on the data region
};

struct SolverReport {
    std::string algorithm;
    nlohmann::json params;
    int iterations = 0;
    double seconds = 0;
    double objective = 0;
    double gap = 0;            // eta(u, p); NaN for L1 runs
    double gap_reference = 0;  // eta(f, 0)
    double infeasibility = 0;
    std::optional<double> psnr;
    bool converged = false;
    double certificate = 0;      // L1: max |lambda S g| (ADMM) or |div_lumped p| (CP) on the data region
    double certificate_off = 0;  // same quantity off the data region
    double sigma = 0, tau = 0;
    int inner_iterations = 0;
    std::vector<TraceEntry> trace;
};

nlohmann::json to_json(const SolverReport& r);

struct SolverResult {
    DgFunction u;
    RtDofVector p;
    SolverReport report;
};

double shrink(double x, double gamma);
// Proximal map of gamma |.|_s in R^2.
Vec2 prox_s(const Vec2& x, double gamma, SNorm s);

double primal_objective(const DgFunction& u, const ProblemSpec& spec);
double dual_objective(const RtDofVector& p, const ProblemSpec& spec);
// Primal-dual gap for L2 fidelity; with huber_eps > 0 the Huber pair is used.
double gap(const DgFunction& u, const RtDofVector& p, const ProblemSpec& spec);

// Throws ConfigError for rejected combinations.
void validate(const ProblemSpec& spec, const SolverParams& params);

// Largest eigenvalue estimate of Lambda^T W Lambda relative to the L2 (or lumped) mass.
double operator_norm_sq(const Discretization& disc, double S, bool lumped, int iterations = 60);

SolverResult split_bregman_l2(const ProblemSpec& spec, const SolverParams& params);
SolverResult chambolle_pock_l2(const ProblemSpec& spec, const SolverParams& params);
SolverResult chambolle_projection_l2(const ProblemSpec& spec, const SolverParams& params);
SolverResult chambolle_pock_l1(const ProblemSpec& spec, const SolverParams& params);
SolverResult admm_l1(const ProblemSpec& spec, const SolverParams& params);

SolverResult solve(const ProblemSpec& spec, const SolverParams& params);

}  // namespace fetv
