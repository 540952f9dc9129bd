// One PASS/FAIL line per acceptance criterion. Exit status 1 if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "fetv/dtv.hpp"
#include "oracles.hpp"
#include "problems.hpp"

using namespace fetv;
using oracle::Q;

namespace {

int failures = 0;

using Clock = std::chrono::steady_clock;

void report(int id, bool ok, double seconds, double budget, const std::string& detail) {
    const bool in_time = budget <= 0 || seconds <= budget;
    const bool pass = ok && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", id, detail.c_str(), seconds,
                in_time ? "" : ", over time budget");
    std::fflush(stdout);
}

void run(int id, double budget, const std::function<bool(std::string&)>& body) {
    const auto t0 = Clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    report(id, ok, std::chrono::duration<double>(Clock::now() - t0).count(), budget, detail);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::shared_ptr<const Discretization> make_disc(const Mesh& mesh, int r) {
    return std::make_shared<Discretization>(std::make_shared<Mesh>(mesh), r);
}

double recovery_error(const problems::Instance& in, const SolverResult& res) {
    const DgFunction rec{in.disc->degree(), divergence(*in.disc, res.p).coeffs + in.spec.f.coeffs};
    return problems::l2_dist(*in.disc, res.u, rec);
}

}  // namespace

int main() {
    run(1, 10, [](std::string& detail) {
        fetv::Rng rng(101);
        double worst_rel = 0, worst_excess = -1e300;
        for (int n : {1, 2})
            for (int r = 0; r <= 2; ++r) {
                const auto disc = make_disc(build_crossed_mesh(n, n, 1, 1), r);
                for (SNorm s : {SNorm::One, SNorm::Two, SNorm::Inf})
                    for (int k = 0; k < 25; ++k) {
                        const DgFunction u = oracle::random_function(*disc, rng);
                        const double d = dtv(*disc, u, s);
                        const double w = pairing(dual_witness(*disc, u, s), disc->lambda().apply(u));
                        worst_rel = std::max(worst_rel, std::abs(w - d) / std::max(d, 1e-300));
                        const double best = dual_max_bruteforce(*disc, u, s, 10000, rng.next());
                        worst_excess = std::max(worst_excess, best - d);
                    }
            }
        detail = fmt("witness rel err %.2e, max sample excess %.2e", worst_rel, worst_excess);
        return worst_rel <= 1e-10 && worst_excess <= 1e-12;
    });

    run(2, 5, [](std::string& detail) {
        fetv::Rng rng(202);
        double worst = 0;
        std::vector<Mesh> meshes = {build_crossed_mesh(2, 2, 1, 1), build_crossed_mesh(8, 8, 1, 1),
                                    oracle::jittered_mesh(11, 0.2, 5), build_crossed_mesh(16, 8, 2, 1)};
        for (int r = 0; r <= 2; ++r)
            for (const Mesh& mesh : meshes) {
                const auto disc = make_disc(mesh, r);
                for (int k = 0; k < 25; ++k) {
                    const DgFunction u = oracle::random_function(*disc, rng);
                    RtDofVector p = disc->zero_rt();
                    for (Eigen::Index j = 0; j < p.values.size(); ++j) p.values[j] = rng.uniform(-1, 1);
                    const double lhs =
                        std::abs(pairing(p, disc->lambda().apply(u)) + l2_inner(*disc, u, divergence(*disc, p)));
                    worst = std::max(worst, lhs / (1 + l2_norm(*disc, u) * p.values.norm()));
                }
            }
        detail = fmt("max scaled residual %.2e over 100 pairs per degree, up to 512 cells", worst);
        return worst <= 1e-10;
    });

    run(3, 0, [](std::string& detail) {
        fetv::Rng rng(303);
        const auto d0 = make_disc(oracle::jittered_mesh(4, 0.3, 2), 0);
        double worst0 = 0;
        for (int k = 0; k < 100; ++k) {
            const DgFunction u = oracle::random_function(*d0, rng);
            const SNorm s = k % 3 == 0 ? SNorm::One : (k % 3 == 1 ? SNorm::Two : SNorm::Inf);
            const double d = dtv(*d0, u, s);
            worst0 = std::max(worst0, std::abs(d - tv_exact(*d0, u, s)) / (1 + d));
        }
        const auto d1 = make_disc(oracle::jittered_mesh(4, 0.3, 3), 1);
        double worst1 = -1e300;
        for (int k = 0; k < 100; ++k) {
            const DgFunction u = oracle::random_function(*d1, rng);
            worst1 = std::max(worst1, tv_exact(*d1, u, SNorm::Two) - dtv(*d1, u, SNorm::Two));
        }
        // a linear jump through zero along the diagonal of the two-triangle square
        const auto two = make_disc(build_diagonal_square(0.0), 1);
        const InteriorEdge& E = two->mesh().interior_edge(0);
        DgFunction u = two->zero_function();
        for (int k = 0; k < 3; ++k) {
            const int v = two->mesh().cell(E.cell_plus)[k];
            u.coeffs[E.cell_plus * 3 + k] = v == E.vertices[0] ? 1.0 : (v == E.vertices[1] ? -1.0 : 0.0);
        }
        const double gap = dtv(*two, u, SNorm::Two) - tv_exact(*two, u, SNorm::Two);
        detail = fmt("r=0 max rel diff %.2e; r=1 max(tv_exact - dtv) %.2e; witness dtv - tv_exact = %.4f", worst0,
                     worst1, gap);
        return worst0 <= 1e-12 && worst1 <= 1e-12 && gap > 1e-12;
    });

    run(4, 0, [](std::string& detail) {
        std::vector<double> err;
        for (int n : {8, 16, 32}) {
            const auto disc = make_disc(build_crossed_mesh(n, n, 1, 1), 2);
            const DgFunction u = interpolate(*disc, [](const Vec2& x) {
                return std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
            });
            err.push_back(std::abs(dtv(*disc, u, SNorm::Two) - tv_exact(*disc, u, SNorm::Two)));
        }
        const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
        detail = fmt("errors %.3e %.3e %.3e, orders %.2f", err[0], err[1], err[2], o1) + fmt(" %.2f", o2);
        return std::min(o1, o2) >= 0.8;
    });

    // shared 32 x 32 lowest-order denoising instance
    const problems::Instance den = problems::noisy_ball(32, 0, 0.1, 505, 1e-3);
    const double fnorm = l2_norm(*den.disc, den.spec.f);
    // a large sigma/tau keeps the CP primal iterate close to div p + f
    const double cp_ratio = 100;

    run(5, 30, [&](std::string& detail) {
        bool ok = true;
        detail.clear();
        for (Algorithm a : {Algorithm::SplitBregman, Algorithm::ChambollePock}) {
            SolverParams p;
            p.algorithm = a;
            p.step_ratio = cp_ratio;
            p.max_iter = 20000;
            const SolverResult res = solve(den.spec, p);
            const double rec = recovery_error(den, res) / fnorm;
            ok = ok && res.report.converged && rec <= 1e-3 && res.report.infeasibility <= 1e-11;
            detail += to_string(a) + fmt(": %g it, recovery %.2e |f|, infeas %.1e; ", res.report.iterations, rec,
                                          res.report.infeasibility);
        }
        return ok;
    });

    run(6, 0, [&](std::string& detail) {
        std::vector<SolverResult> res;
        for (Algorithm a : {Algorithm::SplitBregman, Algorithm::ChambollePock, Algorithm::ChambolleProjection}) {
            SolverParams p;
            p.algorithm = a;
            p.step_ratio = cp_ratio;
            p.tol_rel = 1e-4;
            p.max_iter = 50000;
            res.push_back(solve(den.spec, p));
        }
        double worst = 0;
        bool conv = true;
        for (size_t i = 0; i < res.size(); ++i) {
            conv = conv && res[i].report.converged;
            for (size_t j = i + 1; j < res.size(); ++j)
                worst = std::max(worst, problems::l2_dist(*den.disc, res[i].u, res[j].u) / fnorm);
        }
        detail = fmt("max pairwise distance %.2e |f|; iterations %g / %g / %g", worst, res[0].report.iterations,
                     res[1].report.iterations, res[2].report.iterations);
        return conv && worst <= 1e-3;
    });

    const auto t7 = Clock::now();
    run(7, 0, [&](std::string& detail) {
        // denoising, 64 x 64 ball, sigma = 0.1, beta = 1e-3
        bool ok = true;
        const double ratio[3] = {0.16, 2.5, 30};
        for (int r = 0; r <= 2; ++r) {
            const problems::Instance in = problems::noisy_ball(64, r, 0.1, 707, 1e-3);
            SolverParams p;
            p.algorithm = r == 2 ? Algorithm::SplitBregman : Algorithm::ChambollePock;
            p.step_ratio = ratio[r];
            p.max_iter = 20000;
            const SolverResult res = solve(in.spec, p);
            const double before = psnr(*in.disc, in.spec.f, in.clean), after = *res.report.psnr;
            ok = ok && res.report.converged && after - before >= 8;
            detail += fmt("(a) r=%g %.2f -> %.2f dB; ", r, before, after);
        }
        // inpainting, 2/3 of the cells erased
        double out[2] = {0, 0};
        const double iratio[2] = {5600, 1000};
        for (int r = 0; r <= 1; ++r) {
            const problems::Instance in = problems::masked_ball(64, r, 0.1, 708, 2.0 / 3, 2, 1e-3);
            SolverParams p;
            p.algorithm = Algorithm::ChambollePock;
            p.step_ratio = iratio[r];
            p.S = 1e-2;
            p.max_iter = 20000;
            const SolverResult res = solve(in.spec, p);
            const double before = psnr(*in.disc, in.spec.f, in.clean);
            out[r] = *res.report.psnr;
            ok = ok && res.report.converged && out[r] - before >= 5;
            detail += fmt("(b) r=%g %.2f -> %.2f dB; ", r, before, out[r]);
        }
        ok = ok && out[1] - out[0] >= 1;
        detail += fmt("r=1 minus r=0: %.2f dB", out[1] - out[0]);
        return ok;
    });
    const double s7 = std::chrono::duration<double>(Clock::now() - t7).count();
    if (s7 > 300) {
        ++failures;
        std::printf("FAIL criterion 7: total runtime %.1f s over the 300 s budget\n", s7);
    }

    run(8, 0, [](std::string& detail) {
        const problems::Instance in = problems::impulse_ball(32, 5e-3, 0.1, 808, 1e-3);
        SolverParams p;
        p.max_iter = 20000;
        p.algorithm = Algorithm::AdmmL1;
        p.lambda = 0.1;
        p.S = 1000;
        const SolverResult ad = solve(in.spec, p);
        SolverParams q;
        q.max_iter = 20000;
        q.algorithm = Algorithm::ChambollePockL1;
        const SolverResult cp = solve(in.spec, q);
        const double rel = std::abs(ad.report.objective - cp.report.objective) / cp.report.objective;
        detail = fmt("ADMM certificate %.4f, objectives %.7e vs %.7e, rel diff %.1e", ad.report.certificate,
                     ad.report.objective, cp.report.objective, rel);
        return ad.report.converged && cp.report.converged && ad.report.certificate <= 1.01 && rel <= 1e-3;
    });

    run(9, 0, [&](std::string& detail) {
        fetv::Rng rng(909);
        bool mono = true;
        for (int r = 0; r <= 2; ++r) {
            const auto disc = make_disc(oracle::jittered_mesh(4, 0.2, 9), r);
            for (int k = 0; k < 20; ++k) {
                const DgFunction u = oracle::random_function(*disc, rng, 0, 0.05);
                const YVector d = disc->lambda().apply(u);
                const double g = dtv_of(*disc, d, SNorm::Two);
                double prev = -1;
                for (double eps : {1e-1, 1e-2, 1e-3}) {
                    const double ge = huber_dtv_of(*disc, d, eps);
                    mono = mono && ge <= g + 1e-15 && ge >= prev;
                    prev = ge;
                }
            }
        }
        SolverParams p;
        p.algorithm = Algorithm::ChambollePock;
        p.step_ratio = cp_ratio;
        p.max_iter = 20000;
        const SolverResult plain = solve(den.spec, p);
        ProblemSpec h = den.spec;
        h.huber_eps = 1e-4;
        const SolverResult hub = solve(h, p);
        const double dist = problems::l2_dist(*den.disc, plain.u, hub.u) / fnorm;
        detail = std::string(mono ? "G_eps below G and increasing" : "monotonicity violated") +
                 fmt("; Huber CP distance %.2e |f|", dist);
        return mono && plain.report.converged && hub.report.converged && dist <= 2e-3;
    });

    run(10, 0, [](std::string& detail) {
        bool ok = true;
        int compared = 0;
        const Q third(1, 3);
        for (int r = 0; r <= 2; ++r) {
            const LagrangeLayout lay(r);
            const ReferenceWeights w = reference_weights(r);
            auto q = [](double x) { return Q(static_cast<std::int64_t>(std::llround(x * 6)), 6); };
            auto nodes = [&](const std::vector<Bary>& b) {
                std::vector<std::array<Q, 2>> out;
                for (const auto& l : b) {
                    const bool centroid = std::abs(l[0] - 1.0 / 3) < 1e-14 && std::abs(l[1] - 1.0 / 3) < 1e-14;
                    out.push_back(centroid ? std::array<Q, 2>{third, third} : std::array<Q, 2>{q(l[1]), q(l[2])});
                }
                return out;
            };
            auto same = [&](const std::vector<Rational>& a, const std::vector<Q>& b) {
                if (a.size() != b.size()) return false;
                for (size_t k = 0; k < a.size(); ++k) {
                    ++compared;
                    if (!(Q(a[k].num, a[k].den) == b[k])) return false;
                }
                return true;
            };
            ok = ok && same(w.cell, oracle::triangle_basis_integrals(r, nodes(lay.cell_nodes)));
            if (r > 0) ok = ok && same(w.interior, oracle::triangle_basis_integrals(r - 1, nodes(lay.interior_nodes)));
            std::vector<Q> en;
            for (double t : lay.edge_nodes) en.push_back(q(t));
            ok = ok && same(w.edge, oracle::interval_basis_integrals(en));
            // physical weights are the reference fractions times |T| and |E|
            const Mesh mesh = oracle::jittered_mesh(3, 0.3, 10);
            const Weights pw = assemble_weights(mesh, r);
            for (int t = 0; t < mesh.num_cells(); ++t)
                for (size_t k = 0; k < w.cell.size(); ++k)
                    ok = ok && std::abs(pw.cell[t * w.cell.size() + k] - w.cell[k].value() * mesh.geometry(t).area) <= 1e-16;
        }
        const ReferenceWeights w2 = reference_weights(2);
        const bool zeros = w2.cell[0].num == 0 && w2.cell[1].num == 0 && w2.cell[2].num == 0;
        detail = fmt("%g rational entries compared", compared) + (zeros ? ", r=2 vertex weights are 0" : ", r=2 vertex weights nonzero");
        return ok && zeros;
    });

    run(11, 0, [](std::string& detail) {
        double lo = 1e300, hi = -1e300, worst1 = 0;
        for (int k = 0; k < 16; ++k) {
            const double angle = 2 * std::numbers::pi * k / 16 + 0.1;
            const auto disc = make_disc(build_diagonal_square(angle), 0);
            DgFunction u = disc->zero_function();
            u.coeffs[1] = 1.0;
            const double d2 = dtv(*disc, u, SNorm::Two);
            lo = std::min(lo, d2);
            hi = std::max(hi, d2);
            const Vec2 n = disc->mesh().interior_edge(0).normal;
            worst1 = std::max(worst1, std::abs(dtv(*disc, u, SNorm::One) - std::sqrt(2.0) * vec_norm(n, SNorm::One)));
        }
        detail = fmt("s=2 spread %.1e around %.15f; s=1 max deviation %.1e", hi - lo, lo, worst1);
        return hi - lo <= 1e-12 && worst1 <= 1e-12;
    });

    std::printf("%s\n", failures == 0 ? "all criteria passed" : "some criteria failed");
    return failures == 0 ? 0 : 1;
}
