#include "fetv/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fetv/error.hpp"

namespace fetv {

void check_degree(int r) {
    if (r < 0 || r > kMaxDegree)
        throw ConfigError("polynomial degree " + std::to_string(r) + " unsupported (0, 1 or 2)");
}

ReferenceWeights reference_weights(int r) {
    check_degree(r);
    ReferenceWeights w;
    w.degree = r;
    switch (r) {
        case 0:
            w.edge = {{1, 1}};
            w.cell = {{1, 1}};
            break;
        case 1:
            w.edge = {{1, 2}, {1, 2}};
            w.interior = {{1, 1}};
            w.cell = {{1, 3}, {1, 3}, {1, 3}};
            break;
        case 2:
            // closed Newton-Cotes: Simpson on edges, vertex weights vanish on cells
            w.edge = {{1, 6}, {2, 3}, {1, 6}};
            w.interior = {{1, 3}, {1, 3}, {1, 3}};
            w.cell = {{0, 1}, {0, 1}, {0, 1}, {1, 3}, {1, 3}, {1, 3}};
            break;
    }
    return w;
}

LagrangeLayout::LagrangeLayout(int r) : degree(r) {
    check_degree(r);
    const double third = 1.0 / 3.0;
    const std::vector<Bary> vertices = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    switch (r) {
        case 0:
            cell_nodes = {{third, third, third}};
            edge_nodes = {0.5};
            break;
        case 1:
            cell_nodes = vertices;
            interior_nodes = {{third, third, third}};
            edge_nodes = {0.0, 1.0};
            break;
        case 2:
            cell_nodes = vertices;
            cell_nodes.push_back({0, 0.5, 0.5});
            cell_nodes.push_back({0.5, 0, 0.5});
            cell_nodes.push_back({0.5, 0.5, 0});
            interior_nodes = vertices;
            edge_nodes = {0.0, 0.5, 1.0};
            break;
    }
}

std::vector<double> eval_cell_basis(int r, const Vec2& xhat) {
    const double l0 = 1.0 - xhat.x() - xhat.y(), l1 = xhat.x(), l2 = xhat.y();
    switch (r) {
        case 0: return {1.0};
        case 1: return {l0, l1, l2};
        case 2:
            return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1};
    }
    check_degree(r);
    return {};
}

std::vector<Vec2> eval_cell_basis_grad(int r, const Vec2& xhat) {
    const double l0 = 1.0 - xhat.x() - xhat.y(), l1 = xhat.x(), l2 = xhat.y();
    const Vec2 g0(-1, -1), g1(1, 0), g2(0, 1);
    switch (r) {
        case 0: return {Vec2::Zero()};
        case 1: return {g0, g1, g2};
        case 2:
            return {(4 * l0 - 1) * g0,         (4 * l1 - 1) * g1,         (4 * l2 - 1) * g2,
                    4 * (l1 * g2 + l2 * g1), 4 * (l2 * g0 + l0 * g2), 4 * (l0 * g1 + l1 * g0)};
    }
    check_degree(r);
    return {};
}

std::vector<double> eval_edge_basis(int r, double t) {
    switch (r) {
        case 0: return {1.0};
        case 1: return {1.0 - t, t};
        case 2: return {(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)};
    }
    check_degree(r);
    return {};
}

DofMap build_dofmaps(const Mesh& mesh, int r) {
    check_degree(r);
    DofMap m;
    m.degree = r;
    m.num_cells = mesh.num_cells();
    m.num_edges = mesh.num_interior_edges();
    m.nk = num_cell_nodes(r);
    m.ni = num_interior_nodes(r);
    m.nj = num_edge_nodes(r);
    return m;
}

Weights assemble_weights(const Mesh& mesh, int r) {
    const ReferenceWeights ref = reference_weights(r);
    const int nk = num_cell_nodes(r), ni = num_interior_nodes(r), nj = num_edge_nodes(r);
    Weights w;
    w.degree = r;
    w.interior.resize(static_cast<Eigen::Index>(mesh.num_cells()) * ni);
    w.cell.resize(static_cast<Eigen::Index>(mesh.num_cells()) * nk);
    w.edge.resize(static_cast<Eigen::Index>(mesh.num_interior_edges()) * nj);
    for (int t = 0; t < mesh.num_cells(); ++t) {
        const double a = mesh.geometry(t).area;
        for (int i = 0; i < ni; ++i) w.interior[t * ni + i] = ref.interior[i].value() * a;
        for (int k = 0; k < nk; ++k) w.cell[t * nk + k] = ref.cell[k].value() * a;
    }
    for (int e = 0; e < mesh.num_interior_edges(); ++e) {
        const double len = mesh.interior_edge(e).length;
        for (int j = 0; j < nj; ++j) w.edge[e * nj + j] = ref.edge[j].value() * len;
    }
    return w;
}

namespace {

// (P_n(x), P_n'(x)) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1)};
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre(int n) {
    std::vector<std::pair<double, double>> out(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(n, x).second;
        out[n - 1 - i] = {0.5 * (x + 1), 1.0 / ((1 - x * x) * dp * dp)};
    }
    return out;
}

QuadratureRule triangle_quadrature(int exact_degree) {
    // Collapsed tensor Gauss rule: x = u, y = v (1 - u), Jacobian (1 - u).
    const int n = std::max(1, (exact_degree + 3) / 2);
    const auto g = gauss_legendre(n);
    QuadratureRule q;
    for (const auto& [u, wu] : g)
        for (const auto& [v, wv] : g) {
            q.points.emplace_back(u, v * (1 - u));
            q.weights.push_back(wu * wv * (1 - u));
        }
    return q;
}

Eigen::MatrixXd reference_mass(int r) {
    check_degree(r);
    const int nk = num_cell_nodes(r);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nk, nk);
    const auto q = triangle_quadrature(2 * r);
    for (size_t p = 0; p < q.points.size(); ++p) {
        const auto phi = eval_cell_basis(r, q.points[p]);
        for (int a = 0; a < nk; ++a)
            for (int b = 0; b < nk; ++b) M(a, b) += q.weights[p] * phi[a] * phi[b];
    }
    return M;
}

}  // namespace fetv
