#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "fetv/error.hpp"

namespace fetv {

namespace {

// u, Lambda u, p and the monitor entry for one L2 iterate.
TraceEntry evaluate_l2(detail::RunMonitor& mon, const ProblemSpec& spec, int it, const DgFunction& u,
                       const YVector& Lu, const RtDofVector& p, double change) {
    const Discretization& disc = *spec.disc;
    TraceEntry e;
    e.iteration = it;
    e.objective = detail::primal_objective_with(u, Lu, spec);
    e.gap = detail::gap_with(u, Lu, p, divergence(disc, p, false), spec);
    e.infeasibility = infeasibility(disc, p, {spec.beta}, spec.s, mon.S());
    e.change = change;
    e.certificate = std::numeric_limits<double>::quiet_NaN();
    mon.record(e);
    mon.offer(e.objective, u, p);
    return e;
}

bool l2_done(const detail::RunMonitor& mon, const SolverParams& params, const TraceEntry& e) {
    return mon.gap_ok(e.gap) && e.infeasibility <= params.infeas_cap;
}

// Cellwise prox of the masked L2 fidelity: u = (v + sigma f) / (1 + sigma) on observed cells.
void l2_prox(const ProblemSpec& spec, const Eigen::VectorXd& v, double sigma, Eigen::VectorXd& u) {
    const CellMask& m = spec.mask();
    const int nk = spec.disc->dofs().nk;
    u = v;
    for (int t = 0; t < spec.disc->dofs().num_cells; ++t) {
        if (!m[t]) continue;
        auto seg = u.segment(static_cast<Eigen::Index>(t) * nk, nk);
        seg = (seg + sigma * spec.f.coeffs.segment(static_cast<Eigen::Index>(t) * nk, nk)) / (1 + sigma);
    }
}

// Huber shrink of the dual variable before projection.
void huber_scale(const Discretization& disc, double tau, double eps, double beta, double S, Eigen::VectorXd& p) {
    if (eps <= 0) return;
    const DofMap& dm = disc.dofs();
    p.head(dm.edge_offset()) /= 1 + tau * eps * S / beta;
    p.tail(p.size() - dm.edge_offset()) /= 1 + tau * eps / beta;
}

}  // namespace

SolverResult split_bregman_l2(const ProblemSpec& spec, const SolverParams& params) {
    validate(spec, params);
    if (params.algorithm != Algorithm::SplitBregman) throw ConfigError("split_bregman_l2 called with another algorithm");
    const Discretization& disc = *spec.disc;
    detail::RunMonitor mon(spec, params);
    const double S = mon.S();
    const double lambda = params.lambda;
    const CellMask& mask = spec.mask();
    const QuadraticSolver qs(disc, lambda, S, mask, false, params.inner, params.inner_tol, params.inner_max_iter);
    const Eigen::VectorXd yw = disc.y_weights(S);
    const Eigen::VectorXd Mf = qs.apply_fidelity(spec.f.coeffs);
    mon.report().params["lambda"] = lambda;

    DgFunction u = spec.f;
    YVector Lu = disc.lambda().apply(u);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(Lu.values.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Lu.values.size());
    RtDofVector p{Eigen::VectorXd::Zero(Lu.values.size())};
    TraceEntry last = evaluate_l2(mon, spec, 0, u, Lu, p, 0);
    bool converged = false;
    int inner = 0;
    for (int it = 1; it <= params.max_iter; ++it) {
        const Eigen::VectorXd u_old = u.coeffs;
        const Eigen::VectorXd rhs = Mf + qs.apply_penalty_transpose(d - b);
        inner += qs.solve(rhs, u.coeffs).iterations;
        Lu = disc.lambda().apply(u);
        const Eigen::VectorXd w = Lu.values + b;
        detail::shrink_y(disc, w, spec.beta, lambda, S, spec.s, d);
        b = w - d;
        p.values = lambda * yw.cwiseProduct(b);
        last = evaluate_l2(mon, spec, it, u, Lu, p, detail::relative_change(u.coeffs, u_old));
        if (l2_done(mon, params, last)) {
            converged = true;
            break;
        }
    }
    mon.report().inner_iterations = inner;
    return mon.finish(std::move(u), std::move(p), converged, last);
}

SolverResult chambolle_pock_l2(const ProblemSpec& spec, const SolverParams& params) {
    validate(spec, params);
    if (params.algorithm != Algorithm::ChambollePock) throw ConfigError("chambolle_pock_l2 called with another algorithm");
    const Discretization& disc = *spec.disc;
    detail::RunMonitor mon(spec, params);
    const double S = mon.S();
    double sigma = 0, tau = 0;
    detail::pick_steps(spec, params, S, false, sigma, tau);
    mon.report().sigma = sigma;
    mon.report().tau = tau;
    mon.report().params["sigma"] = sigma;
    mon.report().params["tau"] = tau;
    const Eigen::VectorXd yw = disc.y_weights(S);
    const ConstraintSetSpec cs{spec.beta};

    DgFunction u = spec.f;
    RtDofVector p = disc.zero_rt();
    RtDofVector pbar = p;
    YVector Lu = disc.lambda().apply(u);
    TraceEntry last = evaluate_l2(mon, spec, 0, u, Lu, p, 0);
    bool converged = false;
    for (int it = 1; it <= params.max_iter; ++it) {
        const Eigen::VectorXd u_old = u.coeffs;
        const DgFunction v = divergence(disc, pbar, false);
        l2_prox(spec, u.coeffs + sigma * v.coeffs, sigma, u.coeffs);
        Lu = disc.lambda().apply(u);
        const Eigen::VectorXd p_old = p.values;
        Eigen::VectorXd q = p.values + tau * yw.cwiseProduct(Lu.values);
        huber_scale(disc, tau, spec.huber_eps, spec.beta, S, q);
        p = project_feasible(disc, RtDofVector{std::move(q)}, cs, spec.s);
        pbar.values = p.values + params.theta * (p.values - p_old);
        last = evaluate_l2(mon, spec, it, u, Lu, p, detail::relative_change(u.coeffs, u_old));
        if (l2_done(mon, params, last)) {
            converged = true;
            break;
        }
    }
    return mon.finish(std::move(u), std::move(p), converged, last);
}

SolverResult chambolle_projection_l2(const ProblemSpec& spec, const SolverParams& params) {
    validate(spec, params);
    if (params.algorithm != Algorithm::ChambolleProjection)
        throw ConfigError("chambolle_projection_l2 called with another algorithm");
    const Discretization& disc = *spec.disc;
    // the fixed point only holds in the S = 1 metric
    SolverParams local = params;
    local.S = 1.0;
    detail::RunMonitor mon(spec, local);
    const DofMap& dm = disc.dofs();
    const Eigen::VectorXd yw = disc.y_weights(1.0);
    const double tau = params.tau > 0 ? params.tau : 1.0 / operator_norm_sq(disc, 1.0, false);
    mon.report().tau = tau;
    mon.report().params["tau"] = tau;
    const double beta = spec.beta;

    RtDofVector p = disc.zero_rt();
    DgFunction u = spec.f;
    YVector Lu = disc.lambda().apply(u);
    TraceEntry last = evaluate_l2(mon, spec, 0, u, Lu, p, 0);
    bool converged = false;
    for (int it = 1; it <= params.max_iter; ++it) {
        const Eigen::VectorXd u_old = u.coeffs;
        // semi-implicit fixed-point step N <- (N + tau c d) / (1 + tau |d| / beta)
        for (int t = 0; t < dm.num_cells; ++t)
            for (int i = 0; i < dm.ni; ++i) {
                const int a = dm.cell_dof(t, i, 0), b = dm.cell_dof(t, i, 1);
                const double g = std::hypot(Lu.values[a], Lu.values[b]);
                const double den = 1 + tau * g / beta;
                p.values[a] = (p.values[a] + tau * yw[a] * Lu.values[a]) / den;
                p.values[b] = (p.values[b] + tau * yw[b] * Lu.values[b]) / den;
            }
        for (Eigen::Index k = dm.edge_offset(); k < p.values.size(); ++k) {
            const double den = 1 + tau * std::abs(Lu.values[k]) / beta;
            p.values[k] = (p.values[k] + tau * yw[k] * Lu.values[k]) / den;
        }
        u.coeffs = divergence(disc, p, false).coeffs + spec.f.coeffs;
        Lu = disc.lambda().apply(u);
        last = evaluate_l2(mon, spec, it, u, Lu, p, detail::relative_change(u.coeffs, u_old));
        if (l2_done(mon, local, last)) {
            converged = true;
            break;
        }
    }
    return mon.finish(std::move(u), std::move(p), converged, last);
}

}  // namespace fetv
