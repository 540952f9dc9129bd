#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fetv/mesh.hpp"

namespace fetv {

constexpr int kMaxDegree = 2;

void check_degree(int r);

inline int num_cell_nodes(int r) { return (r + 1) * (r + 2) / 2; }
inline int num_interior_nodes(int r) { return r * (r + 1) / 2; }
inline int num_edge_nodes(int r) { return r + 1; }

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

// Integrals of the nodal basis functions as fractions of |T| (cell tables) or |E| (edge table).
struct ReferenceWeights {
    int degree = 0;
    std::vector<Rational> edge;      // P_r(E), r+1 entries
    std::vector<Rational> interior;  // P_{r-1}(T), r(r+1)/2 entries
    std::vector<Rational> cell;      // P_r(T), (r+1)(r+2)/2 entries
};

ReferenceWeights reference_weights(int r);

using Bary = std::array<double, 3>;

// Lagrange nodes: vertices, then edge nodes (facet order), then interior nodes.
// Facet f joins local vertices (f+1)%3 and (f+2)%3.
struct LagrangeLayout {
    int degree = 0;
    std::vector<Bary> cell_nodes;      // P_r(T)
    std::vector<Bary> interior_nodes;  // P_{r-1}(T)
    std::vector<double> edge_nodes;    // P_r(E), parameter from the lower-indexed endpoint

    explicit LagrangeLayout(int r);
};

inline Vec2 bary_to_reference(const Bary& l) { return Vec2(l[1], l[2]); }

// Nodal basis of P_r on the reference triangle / reference edge [0,1].
std::vector<double> eval_cell_basis(int r, const Vec2& xhat);
std::vector<Vec2> eval_cell_basis_grad(int r, const Vec2& xhat);
std::vector<double> eval_edge_basis(int r, double t);

struct DofMap {
    int degree = 0;
    int num_cells = 0;
    int num_edges = 0;
    int nk = 1;  // P_r(T) nodes per cell
    int ni = 0;  // P_{r-1}(T) nodes per cell
    int nj = 1;  // P_r(E) nodes per edge

    int dg_size() const { return num_cells * nk; }
    int dg(int t, int k) const { return t * nk + k; }

    // Y and RT share this layout: cell pairs first, then edge scalars.
    int y_size() const { return 2 * num_cells * ni + num_edges * nj; }
    int edge_offset() const { return 2 * num_cells * ni; }
    int cell_dof(int t, int i, int comp) const { return 2 * (t * ni + i) + comp; }
    int edge_dof(int e, int j) const { return edge_offset() + e * nj + j; }
};

DofMap build_dofmaps(const Mesh& mesh, int r);

// Physical weights c_{T,i}, C_{T,k}, c_{E,j}, flattened like the dof maps.
struct Weights {
    int degree = 0;
    Eigen::VectorXd interior;  // index t*ni + i
    Eigen::VectorXd cell;      // index t*nk + k
    Eigen::VectorXd edge;      // index e*nj + j
};

Weights assemble_weights(const Mesh& mesh, int r);

// Quadrature on the reference triangle (weights sum to 1/2) and on [0,1].
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
};

std::vector<std::pair<double, double>> gauss_legendre(int n);  // (node, weight) on [0,1]
QuadratureRule triangle_quadrature(int exact_degree);

// Reference mass matrix of P_r, integrated over the reference triangle.
Eigen::MatrixXd reference_mass(int r);

}  // namespace fetv
