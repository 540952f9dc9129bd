#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "fetv/error.hpp"

namespace fetv {

namespace {

struct Certificate {
    double on = 0, off = 0;
};

// max |v| on and off the data region for a DG coefficient vector
Certificate split_max(const ProblemSpec& spec, const Eigen::VectorXd& v) {
    const CellMask& m = spec.mask();
    const int nk = spec.disc->dofs().nk;
    Certificate c;
    for (int t = 0; t < spec.disc->dofs().num_cells; ++t) {
        const double a = v.segment(static_cast<Eigen::Index>(t) * nk, nk).cwiseAbs().maxCoeff();
        (m[t] ? c.on : c.off) = std::max(m[t] ? c.on : c.off, a);
    }
    return c;
}

class L1Stopper {
public:
    explicit L1Stopper(const SolverParams& p) : params_(p) {}
    bool update(double change, const Certificate& c) {
        streak_ = change <= params_.l1_change_tol ? streak_ + 1 : 0;
        return streak_ >= params_.l1_patience && c.on <= 1 + params_.l1_certificate_slack &&
               c.off <= params_.l1_certificate_slack;
    }

private:
    const SolverParams& params_;
    int streak_ = 0;
};

TraceEntry evaluate_l1(detail::RunMonitor& mon, const ProblemSpec& spec, int it, const DgFunction& u,
                       const RtDofVector& p, double change, double cert) {
    TraceEntry e;
    e.iteration = it;
    e.objective = detail::primal_objective_with(u, spec.disc->lambda().apply(u), spec);
    e.gap = std::numeric_limits<double>::quiet_NaN();
    e.infeasibility = infeasibility(*spec.disc, p, {spec.beta}, spec.s, mon.S());
    e.change = change;
    e.certificate = cert;
    mon.record(e);
    mon.offer(e.objective, u, p);
    return e;
}

void huber_scale(const Discretization& disc, double tau, double eps, double beta, double S, Eigen::VectorXd& p) {
    if (eps <= 0) return;
    const DofMap& dm = disc.dofs();
    p.head(dm.edge_offset()) /= 1 + tau * eps * S / beta;
    p.tail(p.size() - dm.edge_offset()) /= 1 + tau * eps / beta;
}

}  // namespace

SolverResult chambolle_pock_l1(const ProblemSpec& spec, const SolverParams& params) {
    validate(spec, params);
    if (params.algorithm != Algorithm::ChambollePockL1) throw ConfigError("chambolle_pock_l1 called with another algorithm");
    const Discretization& disc = *spec.disc;
    detail::RunMonitor mon(spec, params);
    const double S = mon.S();
    double sigma = 0, tau = 0;
    detail::pick_steps(spec, params, S, true, sigma, tau);
    mon.report().sigma = sigma;
    mon.report().tau = tau;
    mon.report().params["sigma"] = sigma;
    mon.report().params["tau"] = tau;
    const Eigen::VectorXd yw = disc.y_weights(S);
    const ConstraintSetSpec cs{spec.beta};
    const CellMask& m = spec.mask();
    const int nk = disc.dofs().nk;

    DgFunction u = spec.f;
    RtDofVector p = disc.zero_rt();
    RtDofVector pbar = p;
    L1Stopper stop(params);
    TraceEntry last = evaluate_l1(mon, spec, 0, u, p, 0, 0);
    Certificate cert;
    bool converged = false;
    for (int it = 1; it <= params.max_iter; ++it) {
        const Eigen::VectorXd u_old = u.coeffs;
        const DgFunction v = divergence(disc, pbar, true);
        u.coeffs += sigma * v.coeffs;
        for (int t = 0; t < disc.dofs().num_cells; ++t) {
            if (!m[t]) continue;
            for (int k = 0; k < nk; ++k) {
                const int i = t * nk + k;
                u.coeffs[i] = spec.f.coeffs[i] + shrink(u.coeffs[i] - spec.f.coeffs[i], sigma);
            }
        }
        const YVector Lu = disc.lambda().apply(u);
        const Eigen::VectorXd p_old = p.values;
        Eigen::VectorXd q = p.values + tau * yw.cwiseProduct(Lu.values);
        huber_scale(disc, tau, spec.huber_eps, spec.beta, S, q);
        p = project_feasible(disc, RtDofVector{std::move(q)}, cs, spec.s);
        pbar.values = p.values + params.theta * (p.values - p_old);
        const double change = detail::relative_change(u.coeffs, u_old);
        cert = split_max(spec, divergence(disc, p, true).coeffs);
        last = evaluate_l1(mon, spec, it, u, p, change, cert.on);
        if (stop.update(change, cert)) {
            converged = true;
            break;
        }
    }
    mon.report().certificate = cert.on;
    mon.report().certificate_off = cert.off;
    return mon.finish(std::move(u), std::move(p), converged, last);
}

SolverResult admm_l1(const ProblemSpec& spec, const SolverParams& params) {
    validate(spec, params);
    if (params.algorithm != Algorithm::AdmmL1) throw ConfigError("admm_l1 called with another algorithm");
    const Discretization& disc = *spec.disc;
    detail::RunMonitor mon(spec, params);
    const double S = mon.S();
    const double lambda = params.lambda;
    const CellMask& m = spec.mask();
    const int nk = disc.dofs().nk;
    const QuadraticSolver qs(disc, lambda, S, m, true, params.inner, params.inner_tol, params.inner_max_iter);
    const Eigen::VectorXd yw = disc.y_weights(S);
    mon.report().params["lambda"] = lambda;

    DgFunction u = spec.f;
    const Eigen::Index ny = disc.dofs().y_size();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(ny), b = Eigen::VectorXd::Zero(ny);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(u.coeffs.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(u.coeffs.size());
    RtDofVector p = disc.zero_rt();
    L1Stopper stop(params);
    TraceEntry last = evaluate_l1(mon, spec, 0, u, p, 0, 0);
    Certificate cert;
    int inner = 0;
    bool converged = false;
    const double gamma = 1.0 / (lambda * S);
    for (int it = 1; it <= params.max_iter; ++it) {
        const Eigen::VectorXd u_old = u.coeffs;
        const Eigen::VectorXd rhs =
            qs.apply_fidelity(spec.f.coeffs + e - g) + qs.apply_penalty_transpose(d - b);
        inner += qs.solve(rhs, u.coeffs).iterations;
        const YVector Lu = disc.lambda().apply(u);
        const Eigen::VectorXd w = Lu.values + b;
        detail::shrink_y(disc, w, spec.beta, lambda, S, spec.s, d);
        b = w - d;
        for (int t = 0; t < disc.dofs().num_cells; ++t)
            for (int k = 0; k < nk; ++k) {
                const int i = t * nk + k;
                const double x = u.coeffs[i] - spec.f.coeffs[i] + g[i];
                e[i] = m[t] ? shrink(x, gamma) : x;
                g[i] = x - e[i];
            }
        p.values = lambda * yw.cwiseProduct(b);
        const double change = detail::relative_change(u.coeffs, u_old);
        cert.on = split_max(spec, lambda * S * g).on;
        cert.off = split_max(spec, divergence(disc, p, true).coeffs).off;
        last = evaluate_l1(mon, spec, it, u, p, change, cert.on);
        if (stop.update(change, cert)) {
            converged = true;
            break;
        }
    }
    mon.report().certificate = cert.on;
    mon.report().certificate_off = cert.off;
    mon.report().inner_iterations = inner;
    return mon.finish(std::move(u), std::move(p), converged, last);
}

}  // namespace fetv
