#include <cmath>
#include <memory>

#include "doctest.h"
#include "fetv/error.hpp"
#include "fetv/operators.hpp"
#include "oracles.hpp"

using namespace fetv;

namespace {

std::shared_ptr<const Discretization> make_disc(const Mesh& mesh, int r) {
    return std::make_shared<Discretization>(std::make_shared<Mesh>(mesh), r);
}

double rel(double a, double b) { return std::abs(a - b) / (1 + std::abs(b)); }

}  // namespace

TEST_CASE("RT integral dofs pair with grad and jump") {
    fetv::Rng rng(17);
    for (const Mesh& mesh : {build_crossed_mesh(2, 2, 1, 1), oracle::jittered_mesh(3, 0.25, 4)})
        for (int r = 0; r <= 2; ++r) {
            CAPTURE(r);
            const auto disc = make_disc(mesh, r);
            for (int trial = 0; trial < 3; ++trial) {
                const oracle::RtField p = oracle::random_rt_field(r, rng);
                const DgFunction u = oracle::random_function(*disc, rng);
                const RtDofVector N = oracle::rt_dofs(*disc, p, +1);
                const double lhs = pairing(N, disc->lambda().apply(u));
                CHECK(rel(lhs, oracle::pairing_direct(*disc, p, u)) < 1e-9);
            }
        }
}

TEST_CASE("divergence of RT dofs matches the field divergence") {
    // The edge dofs here are read against -n_E; the boundary term comes from integrating by parts.
    fetv::Rng rng(23);
    for (const Mesh& mesh : {build_crossed_mesh(2, 3, 1, 1), oracle::jittered_mesh(3, 0.3, 9)})
        for (int r = 0; r <= 2; ++r) {
            CAPTURE(r);
            const auto disc = make_disc(mesh, r);
            for (int trial = 0; trial < 3; ++trial) {
                const oracle::RtField p = oracle::random_rt_field(r, rng);
                const DgFunction v = oracle::random_function(*disc, rng);
                const RtDofVector N = oracle::rt_dofs(*disc, p, -1);
                const double lhs = l2_inner(*disc, v, divergence(*disc, N));
                CHECK(rel(lhs, oracle::div_pairing_direct(*disc, p, v)) < 1e-9);
            }
        }
}

TEST_CASE("Lambda of polynomials") {
    const Mesh mesh = oracle::jittered_mesh(3, 0.3, 1);
    for (int r = 1; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        const DofMap& dm = disc->dofs();
        // continuous polynomial: gradients at the interior nodes, no jumps
        auto f = [r](const Vec2& x) { return 0.3 + 2 * x.x() - x.y() + (r == 2 ? x.x() * x.y() - 0.5 * x.y() * x.y() : 0.0); };
        auto grad = [r](const Vec2& x) {
            return Vec2(2 + (r == 2 ? x.y() : 0.0), -1 + (r == 2 ? x.x() - x.y() : 0.0));
        };
        const YVector d = disc->lambda().apply(interpolate(*disc, f));
        for (int t = 0; t < dm.num_cells; ++t)
            for (int i = 0; i < dm.ni; ++i) {
                const Vec2 x = mesh.geometry(t).to_physical(bary_to_reference(disc->layout().interior_nodes[i]));
                CHECK(d.values[dm.cell_dof(t, i, 0)] == doctest::Approx(grad(x).x()));
                CHECK(d.values[dm.cell_dof(t, i, 1)] == doctest::Approx(grad(x).y()));
            }
        CHECK(d.values.tail(dm.num_edges * dm.nj).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("jumps are plus minus minus at the edge nodes") {
    fetv::Rng rng(3);
    const Mesh mesh = oracle::jittered_mesh(2, 0.2, 5);
    for (int r = 0; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        const DofMap& dm = disc->dofs();
        const DgFunction u = oracle::random_function(*disc, rng);
        const YVector d = disc->lambda().apply(u);
        for (int e = 0; e < dm.num_edges; ++e) {
            const InteriorEdge& E = mesh.interior_edge(e);
            for (int j = 0; j < dm.nj; ++j) {
                const Vec2 x = E.point(mesh, disc->layout().edge_nodes[j]);
                const double jump = evaluate(*disc, u, E.cell_plus, x) - evaluate(*disc, u, E.cell_minus, x);
                CHECK(d.values[dm.edge_dof(e, j)] == doctest::Approx(jump).epsilon(1e-12));
            }
        }
        // constants lie in the kernel
        DgFunction one = disc->zero_function();
        one.coeffs.setConstant(1.0);
        CHECK(disc->lambda().apply(one).values.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("adjoint identity with the L2 and lumped divergence") {
    fetv::Rng rng(8);
    const Mesh mesh = oracle::jittered_mesh(4, 0.2, 6);
    for (int r = 0; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        for (int trial = 0; trial < 10; ++trial) {
            const DgFunction u = oracle::random_function(*disc, rng);
            RtDofVector p = disc->zero_rt();
            for (Eigen::Index k = 0; k < p.values.size(); ++k) p.values[k] = rng.uniform(-1, 1);
            const double lp = pairing(p, disc->lambda().apply(u));
            CHECK(std::abs(lp + l2_inner(*disc, u, divergence(*disc, p, false))) < 1e-10 * (1 + std::abs(lp)));
            if (r < 2) CHECK(std::abs(lp + lumped_inner(*disc, u, divergence(*disc, p, true))) < 1e-10 * (1 + std::abs(lp)));
        }
        const auto res = divergence_ex(*disc, disc->zero_rt(), true);
        CHECK(res.zero_weight_dofs.size() == (r == 2 ? 3u * mesh.num_cells() : 0u));
    }
}

TEST_CASE("mass matrix against quadrature") {
    fetv::Rng rng(12);
    const Mesh mesh = oracle::jittered_mesh(3, 0.3, 2);
    for (int r = 0; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        const DgFunction u = oracle::random_function(*disc, rng), v = oracle::random_function(*disc, rng);
        double direct = 0, masked = 0;
        CellMask m = full_mask(mesh.num_cells());
        for (int t = 0; t < mesh.num_cells(); t += 3) m[t] = 0;
        for (int t = 0; t < mesh.num_cells(); ++t) {
            const double c = oracle::integrate_triangle(
                oracle::cell_vertex(mesh, t, 0), oracle::cell_vertex(mesh, t, 1), oracle::cell_vertex(mesh, t, 2),
                [&](const Vec2& x) { return evaluate(*disc, u, t, x) * evaluate(*disc, v, t, x); });
            direct += c;
            if (m[t]) masked += c;
        }
        CHECK(l2_inner(*disc, u, v) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(l2_inner(*disc, u, v, &m) == doctest::Approx(masked).epsilon(1e-12));
        const Eigen::VectorXd back = disc->mass().solve(disc->mass().apply(u.coeffs));
        CHECK((back - u.coeffs).norm() < 1e-10 * u.coeffs.norm());
        // lumped quadrature is exact for a single P_r factor
        DgFunction one = disc->zero_function();
        one.coeffs.setConstant(1.0);
        CHECK(lumped_inner(*disc, u, one) == doctest::Approx(l2_inner(*disc, u, one)).epsilon(1e-12));
    }
}

TEST_CASE("interpolate and evaluate reproduce polynomials") {
    fetv::Rng rng(4);
    const Mesh mesh = oracle::jittered_mesh(3, 0.3, 8);
    const PointLocator loc(mesh);
    for (int r = 0; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        auto f = [r](const Vec2& x) {
            if (r == 0) return 0.7;
            if (r == 1) return 1 - x.x() + 3 * x.y();
            return x.x() * x.x() - 2 * x.x() * x.y() + x.y();
        };
        const DgFunction u = interpolate(*disc, f);
        for (int k = 0; k < 100; ++k) {
            const Vec2 x(rng.uniform(), rng.uniform());
            const int t = *loc.locate(x);
            CHECK(evaluate(*disc, u, t, x) == doctest::Approx(f(x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("Y weights and Riesz maps") {
    const Mesh mesh = oracle::jittered_mesh(2, 0.2, 3);
    fetv::Rng rng(9);
    for (int r = 0; r <= 2; ++r) {
        const auto disc = make_disc(mesh, r);
        const DofMap& dm = disc->dofs();
        const Eigen::VectorXd w = disc->y_weights(0.25);
        for (int t = 0; t < dm.num_cells; ++t)
            for (int i = 0; i < dm.ni; ++i)
                for (int c = 0; c < 2; ++c)
                    CHECK(w[dm.cell_dof(t, i, c)] == doctest::Approx(0.25 * disc->weights().interior[t * dm.ni + i]));
        CHECK(w.tail(dm.num_edges * dm.nj).isApprox(disc->weights().edge));
        YVector d{Eigen::VectorXd(dm.y_size())};
        for (Eigen::Index k = 0; k < d.values.size(); ++k) d.values[k] = rng.uniform(-1, 1);
        const RtDofVector p = riesz(*disc, d, 0.25);
        CHECK((riesz_inverse(*disc, p, 0.25).values - d.values).norm() < 1e-12 * d.values.norm());
        CHECK(inner_y(*disc, d, d, 0.25) == doctest::Approx(pairing(p, d)));
        CHECK(inner_ystar(*disc, p, p, 0.25) == doctest::Approx(pairing(p, d)));
    }
}

TEST_CASE("quadratic solver") {
    fetv::Rng rng(31);
    const Mesh mesh = oracle::jittered_mesh(4, 0.2, 10);
    for (int r = 0; r <= 2; ++r)
        for (bool lumped : {false, true}) {
            if (lumped && r == 2) continue;
            CAPTURE(r);
            CAPTURE(lumped);
            const auto disc = make_disc(mesh, r);
            CellMask m = full_mask(mesh.num_cells());
            for (int t = 1; t < mesh.num_cells(); t += 4) m[t] = 0;
            const double lambda = 0.3, S = 0.5;
            const Eigen::VectorXd x0 = oracle::random_function(*disc, rng).coeffs;
            // operator applied by hand
            Eigen::VectorXd fid = disc->mass().apply(x0, &m);
            if (lumped) {
                const Eigen::VectorXd& C = disc->weights().cell;
                const int nk = disc->dofs().nk;
                for (Eigen::Index k = 0; k < x0.size(); ++k) fid[k] = m[k / nk] ? lambda * S * C[k] * x0[k] : 0.0;
            }
            const Eigen::VectorXd Lx = disc->lambda().apply({r, x0}).values;
            const Eigen::VectorXd Ax = fid + lambda * disc->lambda().apply_transpose({disc->y_weights(S).cwiseProduct(Lx)});
            for (auto kind : {InnerSolverKind::ConjugateGradient, InnerSolverKind::GaussSeidel}) {
                const QuadraticSolver qs(*disc, lambda, S, m, lumped, kind, 1e-12, 20000);
                CHECK((qs.matrix() * x0 - Ax).norm() < 1e-12 * Ax.norm());
                Eigen::VectorXd x = Eigen::VectorXd::Zero(x0.size());
                const InnerSolveStats st = qs.solve(Ax, x);
                CHECK(st.converged);
                CHECK((x - x0).norm() < 1e-6 * x0.norm());
            }
        }
}

TEST_CASE("quadratic solver rejects degenerate input") {
    const auto disc = make_disc(build_crossed_mesh(2, 2, 1, 1), 0);
    CellMask none(16, 0);
    CHECK_THROWS_AS(QuadraticSolver(*disc, 1.0, 1.0, none, false), ConfigError);
    CellMask some = full_mask(16);
    some[0] = 0;
    CHECK_THROWS_AS(QuadraticSolver(*disc, 0.0, 1.0, some, false), ConfigError);
    CHECK_THROWS_AS(QuadraticSolver(*disc, 1.0, 1.0, CellMask(3, 1), false), ConfigError);
}
