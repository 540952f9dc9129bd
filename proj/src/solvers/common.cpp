#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "fetv/error.hpp"
#include "fetv/metrics.hpp"
#include "fetv/rng.hpp"

namespace fetv {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::SplitBregman: return "split-bregman";
        case Algorithm::ChambollePock: return "chambolle-pock";
        case Algorithm::ChambolleProjection: return "chambolle-projection";
        case Algorithm::ChambollePockL1: return "cp-l1";
        case Algorithm::AdmmL1: return "admm-l1";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& name) {
    for (Algorithm a : {Algorithm::SplitBregman, Algorithm::ChambollePock, Algorithm::ChambolleProjection,
                        Algorithm::ChambollePockL1, Algorithm::AdmmL1})
        if (name == to_string(a)) return a;
    if (name == "sb") return Algorithm::SplitBregman;
    if (name == "cp") return Algorithm::ChambollePock;
    if (name == "projection") return Algorithm::ChambolleProjection;
    if (name == "admm") return Algorithm::AdmmL1;
    throw ConfigError("unknown algorithm '" + name +
                      "' (split-bregman, chambolle-pock, chambolle-projection, cp-l1, admm-l1)");
}

Fidelity fidelity_of(Algorithm a) {
    return (a == Algorithm::ChambollePockL1 || a == Algorithm::AdmmL1) ? Fidelity::L1 : Fidelity::L2;
}

const CellMask& ProblemSpec::mask() const {
    if (observed.empty()) {
        // lazily sized full mask; observed stays empty to mean "no mask"
        static thread_local CellMask full;
        full.assign(static_cast<size_t>(disc->dofs().num_cells), 1);
        return full;
    }
    return observed;
}

bool ProblemSpec::fully_observed() const {
    return observed.empty() || std::all_of(observed.begin(), observed.end(), [](std::uint8_t m) { return m != 0; });
}

ProblemSpec make_problem(std::shared_ptr<const Discretization> disc, DgFunction f, CellMask observed, double beta,
                         SNorm s, Fidelity fidelity) {
    ProblemSpec spec;
    if (!observed.empty()) {
        const int nk = disc->dofs().nk;
        if (observed.size() != static_cast<size_t>(disc->dofs().num_cells))
            throw ConfigError("mask has " + std::to_string(observed.size()) + " entries, mesh has " +
                              std::to_string(disc->dofs().num_cells) + " cells");
        if (f.coeffs.size() == disc->dofs().dg_size())
            for (size_t t = 0; t < observed.size(); ++t)
                if (!observed[t]) f.coeffs.segment(static_cast<Eigen::Index>(t) * nk, nk).setZero();
    }
    spec.disc = std::move(disc);
    spec.f = std::move(f);
    spec.observed = std::move(observed);
    spec.beta = beta;
    spec.s = s;
    spec.fidelity = fidelity;
    return spec;
}

double default_scale(int r) { return r == 0 ? 1.0 : 1e-2; }

nlohmann::json to_json(const SolverReport& r) {
    nlohmann::json j;
    j["algorithm"] = r.algorithm;
    j["params"] = r.params;
    j["iterations"] = r.iterations;
    j["seconds"] = r.seconds;
    j["objective"] = r.objective;
    j["gap"] = std::isfinite(r.gap) ? nlohmann::json(r.gap) : nlohmann::json(nullptr);
    j["gap_reference"] = r.gap_reference;
    j["infeasibility"] = r.infeasibility;
    j["psnr"] = r.psnr ? (std::isfinite(*r.psnr) ? nlohmann::json(*r.psnr) : nlohmann::json("inf"))
                       : nlohmann::json(nullptr);
    j["converged"] = r.converged;
    j["certificate"] = r.certificate;
    j["certificate_off"] = r.certificate_off;
    j["sigma"] = r.sigma;
    j["tau"] = r.tau;
    j["inner_iterations"] = r.inner_iterations;
    auto& tr = j["trace"];
    tr = nlohmann::json::array();
    for (const auto& e : r.trace) {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        tr.push_back({{"it", e.iteration},
                      {"objective", num(e.objective)},
                      {"gap", num(e.gap)},
                      {"infeasibility", num(e.infeasibility)},
                      {"change", num(e.change)},
                      {"certificate", num(e.certificate)}});
    }
    return j;
}

double shrink(double x, double gamma) {
    if (x > gamma) return x - gamma;
    if (x < -gamma) return x + gamma;
    return 0.0;
}

Vec2 prox_s(const Vec2& x, double gamma, SNorm s) {
    // Moreau: prox of gamma |.|_s is x minus the projection onto the gamma ball of the dual norm.
    return x - project_dual_ball(x, gamma, s);
}

namespace {

double huber_conjugate(const Discretization& disc, const RtDofVector& p, double beta, double eps) {
    if (eps <= 0) return 0.0;
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    double acc = 0;
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const double a = p.values[dm.cell_dof(t, i, 0)], b = p.values[dm.cell_dof(t, i, 1)];
            acc += (a * a + b * b) / w.interior[t * dm.ni + i];
        }
    for (int e = 0; e < dm.num_edges; ++e)
        for (int j = 0; j < dm.nj; ++j) {
            const double v = p.values[dm.edge_dof(e, j)];
            acc += v * v / w.edge[e * dm.nj + j];
        }
    return eps / (2 * beta) * acc;
}

double regularizer(const ProblemSpec& spec, const YVector& Lu) {
    if (spec.huber_eps > 0) return spec.beta * huber_dtv_of(*spec.disc, Lu, spec.huber_eps);
    return spec.beta * dtv_of(*spec.disc, Lu, spec.s);
}

}  // namespace

namespace detail {

double primal_objective_with(const DgFunction& u, const YVector& Lu, const ProblemSpec& spec) {
    const Discretization& disc = *spec.disc;
    const CellMask& m = spec.mask();
    const Eigen::VectorXd r = u.coeffs - spec.f.coeffs;
    double fid = 0;
    if (spec.fidelity == Fidelity::L2) {
        fid = 0.5 * disc.mass().inner(r, r, &m);
    } else {
        const int nk = disc.dofs().nk;
        const Eigen::VectorXd& C = disc.weights().cell;
        for (int t = 0; t < disc.dofs().num_cells; ++t)
            if (m[t])
                for (int k = 0; k < nk; ++k) fid += C[t * nk + k] * std::abs(r[t * nk + k]);
    }
    return fid + regularizer(spec, Lu);
}

double gap_with(const DgFunction& u, const YVector& Lu, const RtDofVector& p, const DgFunction& divp,
                const ProblemSpec& spec) {
    const Discretization& disc = *spec.disc;
    const CellMask& m = spec.mask();
    // 1/2|div p + f|^2 - 1/2|f|^2 expanded to avoid cancellation
    double dual_fid =
        0.5 * disc.mass().inner(divp.coeffs, divp.coeffs, &m) + disc.mass().inner(divp.coeffs, spec.f.coeffs, &m);
    if (!spec.fully_observed()) {
        // div p must vanish where there is no data; its size there stands in for the infinite conjugate
        CellMask off(m.size());
        for (size_t t = 0; t < m.size(); ++t) off[t] = m[t] ? 0 : 1;
        dual_fid += 0.5 * disc.mass().inner(divp.coeffs, divp.coeffs, &off);
    }
    return primal_objective_with(u, Lu, spec) + dual_fid + huber_conjugate(disc, p, spec.beta, spec.huber_eps);
}

double relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before) {
    const double n = now.norm();
    const double d = (now - before).norm();
    if (n == 0) return d == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / n;
}

void shrink_y(const Discretization& disc, const Eigen::VectorXd& w, double beta, double lambda, double S, SNorm s,
              Eigen::VectorXd& d) {
    const DofMap& dm = disc.dofs();
    d.resize(w.size());
    const double cell_gamma = beta / (lambda * S);
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const int a = dm.cell_dof(t, i, 0), b = dm.cell_dof(t, i, 1);
            const Vec2 q = prox_s(Vec2(w[a], w[b]), cell_gamma, s);
            d[a] = q.x();
            d[b] = q.y();
        }
    for (int e = 0; e < dm.num_edges; ++e) {
        const double gamma = beta * vec_norm(disc.mesh().interior_edge(e).normal, s) / lambda;
        for (int j = 0; j < dm.nj; ++j) {
            const int k = dm.edge_dof(e, j);
            d[k] = shrink(w[k], gamma);
        }
    }
}

void pick_steps(const ProblemSpec& spec, const SolverParams& params, double S, bool lumped, double& sigma,
                double& tau) {
    sigma = params.sigma;
    tau = params.tau;
    if (sigma > 0 && tau > 0) return;
    const double L2 = operator_norm_sq(*spec.disc, S, lumped);
    const double budget = 0.98 / L2;  // sigma * tau
    if (sigma > 0) {
        tau = budget / sigma;
    } else if (tau > 0) {
        sigma = budget / tau;
    } else {
        sigma = std::sqrt(budget * params.step_ratio);
        tau = std::sqrt(budget / params.step_ratio);
    }
}

RunMonitor::RunMonitor(const ProblemSpec& spec, const SolverParams& params)
    : spec_(spec), params_(params), start_(std::chrono::steady_clock::now()) {
    const Discretization& disc = *spec.disc;
    S_ = params.S > 0 ? params.S : default_scale(disc.degree());
    const YVector Lf = disc.lambda().apply(spec.f);
    gap_ref_ = regularizer(spec, Lf);
    const CellMask& m = spec.mask();
    const double f2 = disc.mass().inner(spec.f.coeffs, spec.f.coeffs, &m);
    gap_floor_ = 1e-13 * (f2 + gap_ref_) + std::numeric_limits<double>::min();
    report_.algorithm = to_string(params.algorithm);
    report_.gap_reference = gap_ref_;
    report_.gap = std::numeric_limits<double>::quiet_NaN();
    report_.params = {{"lambda", params.lambda},
                      {"theta", params.theta},
                      {"S", S_},
                      {"tol_rel", params.tol_rel},
                      {"infeas_cap", params.infeas_cap},
                      {"max_iter", params.max_iter},
                      {"beta", spec.beta},
                      {"s", to_string(spec.s)},
                      {"degree", disc.degree()},
                      {"huber_eps", spec.huber_eps},
                      {"fidelity", spec.fidelity == Fidelity::L2 ? "l2" : "l1"},
                      {"observed_fraction",
                       spec.fully_observed()
                           ? 1.0
                           : static_cast<double>(std::count(m.begin(), m.end(), std::uint8_t{1})) / m.size()}};
    best_u_ = spec.f;
    best_p_ = disc.zero_rt();
}

bool RunMonitor::gap_ok(double eta) const {
    return std::abs(eta) <= std::max(params_.tol_rel * gap_ref_, gap_floor_);
}

void RunMonitor::record(const TraceEntry& e) {
    if (params_.trace) report_.trace.push_back(e);
}

void RunMonitor::offer(double objective, const DgFunction& u, const RtDofVector& p) {
    if (objective < best_obj_) {
        best_obj_ = objective;
        best_u_ = u;
        best_p_ = p;
    }
}

SolverResult RunMonitor::finish(DgFunction u, RtDofVector p, bool converged, const TraceEntry& last) {
    const Discretization& disc = *spec_.disc;
    SolverResult res;
    if (!converged && best_obj_ < last.objective) {
        u = std::move(best_u_);
        p = std::move(best_p_);
    }
    const YVector Lu = disc.lambda().apply(u);
    report_.iterations = last.iteration;
    report_.objective = primal_objective_with(u, Lu, spec_);
    report_.converged = converged;
    if (spec_.fidelity == Fidelity::L2) {
        report_.gap = gap_with(u, Lu, p, divergence(disc, p, false), spec_);
        report_.infeasibility = infeasibility(disc, p, {spec_.beta}, spec_.s, S_);
    } else {
        report_.infeasibility = infeasibility(disc, p, {spec_.beta}, spec_.s, S_);
    }
    if (spec_.reference) report_.psnr = psnr(disc, u, *spec_.reference);
    report_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    res.u = std::move(u);
    res.p = std::move(p);
    res.report = report_;
    return res;
}

}  // namespace detail

double primal_objective(const DgFunction& u, const ProblemSpec& spec) {
    return detail::primal_objective_with(u, spec.disc->lambda().apply(u), spec);
}

double dual_objective(const RtDofVector& p, const ProblemSpec& spec) {
    const Discretization& disc = *spec.disc;
    const CellMask& m = spec.mask();
    const DgFunction v = divergence(disc, p, false);
    return -(0.5 * disc.mass().inner(v.coeffs, v.coeffs, &m) + disc.mass().inner(v.coeffs, spec.f.coeffs, &m)) -
           huber_conjugate(disc, p, spec.beta, spec.huber_eps);
}

double gap(const DgFunction& u, const RtDofVector& p, const ProblemSpec& spec) {
    return detail::gap_with(u, spec.disc->lambda().apply(u), p, divergence(*spec.disc, p, false), spec);
}

void validate(const ProblemSpec& spec, const SolverParams& params) {
    if (!spec.disc) throw ConfigError("problem has no discretization");
    const Discretization& disc = *spec.disc;
    const int r = disc.degree();
    if (!(spec.beta > 0) || !std::isfinite(spec.beta)) throw ConfigError("beta must be positive and finite");
    if (spec.f.coeffs.size() != disc.dofs().dg_size())
        throw ConfigError("data has " + std::to_string(spec.f.coeffs.size()) + " values, space has " +
                          std::to_string(disc.dofs().dg_size()));
    if (!spec.f.coeffs.allFinite()) throw ConfigError("data contains non-finite values");
    if (!spec.observed.empty() && spec.observed.size() != static_cast<size_t>(disc.dofs().num_cells))
        throw ConfigError("mask size does not match the mesh");
    if (!spec.observed.empty() &&
        std::none_of(spec.observed.begin(), spec.observed.end(), [](std::uint8_t m) { return m != 0; }))
        throw ConfigError("mask removes every cell");
    if (spec.fidelity == Fidelity::L1 && r > 1)
        throw ConfigError("L1 fidelity needs strictly positive lumped weights, which only r = 0 and r = 1 have");
    if (fidelity_of(params.algorithm) != spec.fidelity)
        throw ConfigError(to_string(params.algorithm) + " does not solve the " +
                          (spec.fidelity == Fidelity::L2 ? "L2" : "L1") + " fidelity problem");
    if (!(spec.huber_eps >= 0) || !std::isfinite(spec.huber_eps)) throw ConfigError("huber epsilon must be >= 0");
    if (spec.huber_eps > 0) {
        if (spec.s != SNorm::Two) throw ConfigError("Huber smoothing is only defined for s = 2");
        if (params.algorithm != Algorithm::ChambollePock && params.algorithm != Algorithm::ChambollePockL1)
            throw ConfigError("Huber smoothing is only available in the Chambolle-Pock solvers");
    }
    if (params.algorithm == Algorithm::ChambolleProjection) {
        if (spec.s != SNorm::Two) throw ConfigError("chambolle-projection requires s = 2");
        if (!spec.fully_observed()) throw ConfigError("chambolle-projection cannot inpaint");
    }
    if ((params.algorithm == Algorithm::SplitBregman || params.algorithm == Algorithm::AdmmL1) &&
        !(params.lambda > 0))
        throw ConfigError("lambda must be positive");
    if (params.sigma < 0 || params.tau < 0) throw ConfigError("step sizes must be positive (0 selects automatic)");
    if (!(params.step_ratio > 0)) throw ConfigError("step ratio must be positive");
    if (params.S < 0) throw ConfigError("S must be positive (0 selects the default)");
    if (!(params.theta >= 0 && params.theta <= 1)) throw ConfigError("theta must lie in [0,1]");
    if (params.max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (!(params.tol_rel > 0)) throw ConfigError("tol_rel must be positive");
    if (!(params.infeas_cap >= 0)) throw ConfigError("infeasibility cap must be >= 0");
}

double operator_norm_sq(const Discretization& disc, double S, bool lumped, int iterations) {
    const auto& L = disc.lambda().matrix();
    const auto& Lt = disc.lambda().transpose();
    const Eigen::VectorXd yw = disc.y_weights(S);
    const Eigen::VectorXd& C = disc.weights().cell;
    if (lumped && (C.array() <= 0).any()) throw ConfigError("lumped operator norm needs positive weights");
    auto apply_M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return lumped ? Eigen::VectorXd(C.cwiseProduct(x)) : disc.mass().apply(x);
    };
    auto apply_Minv = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return lumped ? Eigen::VectorXd(x.cwiseQuotient(C)) : disc.mass().solve(x);
    };
    Rng rng(0x9E3779B97F4A7C15ull);
    Eigen::VectorXd x(disc.dofs().dg_size());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.uniform(-1.0, 1.0);
    double est = 0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd Ax = Lt * yw.cwiseProduct(L * x);
        const double xMx = x.dot(apply_M(x));
        if (xMx <= 0) break;
        est = std::max(est, x.dot(Ax) / xMx);
        x = apply_Minv(Ax);
        const double n = std::sqrt(x.dot(apply_M(x)));
        if (n == 0) break;
        x /= n;
    }
    // Rayleigh quotients approach the top eigenvalue from below
    return 1.05 * est + std::numeric_limits<double>::min();
}

SolverResult solve(const ProblemSpec& spec, const SolverParams& params) {
    switch (params.algorithm) {
        case Algorithm::SplitBregman: return split_bregman_l2(spec, params);
        case Algorithm::ChambollePock: return chambolle_pock_l2(spec, params);
        case Algorithm::ChambolleProjection: return chambolle_projection_l2(spec, params);
        case Algorithm::ChambollePockL1: return chambolle_pock_l1(spec, params);
        case Algorithm::AdmmL1: return admm_l1(spec, params);
    }
    throw InternalError("unhandled algorithm");
}

}  // namespace fetv
