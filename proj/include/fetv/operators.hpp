#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fetv/mesh.hpp"
#include "fetv/spaces.hpp"

namespace fetv {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Nodal values u(x_{T,k}), flattened by DofMap::dg.
struct DgFunction {
    int degree = 0;
    Eigen::VectorXd coeffs;
};

// Gradient samples per interior node and scalar jumps per edge node.
struct YVector {
    Eigen::VectorXd values;
};

// Integral dofs N_{T,i}(p), N_{E,j}(p) of an RT function; same layout as YVector.
struct RtDofVector {
    Eigen::VectorXd values;
};

// 1 for cells in the data region, 0 for cells to be inpainted.
using CellMask = std::vector<std::uint8_t>;

inline CellMask full_mask(int num_cells) { return CellMask(static_cast<size_t>(num_cells), 1); }

class GradJumpOperator {
public:
    GradJumpOperator() = default;
    GradJumpOperator(const Mesh& mesh, int r);

    const SparseRowMatrix& matrix() const { return L_; }
    const SparseRowMatrix& transpose() const { return Lt_; }

    YVector apply(const DgFunction& u) const { return {L_ * u.coeffs}; }
    Eigen::VectorXd apply_transpose(const RtDofVector& p) const { return Lt_ * p.values; }

private:
    SparseRowMatrix L_;
    SparseRowMatrix Lt_;
};

GradJumpOperator assemble_lambda(const Mesh& mesh, int r);

// Block-diagonal DG mass matrix; every block is 2|T| times the reference block.
class DgMass {
public:
    DgMass() = default;
    DgMass(const Mesh& mesh, int r);

    Eigen::VectorXd apply(const Eigen::VectorXd& u, const CellMask* mask = nullptr) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const CellMask* mask = nullptr) const;
    const Eigen::MatrixXd& reference() const { return ref_; }
    double scale(int t) const { return scale_[t]; }

private:
    int nk_ = 1;
    Eigen::MatrixXd ref_;
    Eigen::LLT<Eigen::MatrixXd> ref_llt_;
    std::vector<double> scale_;
};

// Everything the algorithms need for one (mesh, r) pair.
class Discretization {
public:
    Discretization(std::shared_ptr<const Mesh> mesh, int r);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    int degree() const { return r_; }
    const LagrangeLayout& layout() const { return layout_; }
    const DofMap& dofs() const { return dofs_; }
    const Weights& weights() const { return weights_; }
    const GradJumpOperator& lambda() const { return lambda_; }
    const DgMass& mass() const { return mass_; }

    DgFunction zero_function() const;
    RtDofVector zero_rt() const;

    // Diagonal of the Y inner product: S c_{T,i} on both components, c_{E,j} on edges.
    Eigen::VectorXd y_weights(double S) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    int r_;
    LagrangeLayout layout_;
    DofMap dofs_;
    Weights weights_;
    GradJumpOperator lambda_;
    DgMass mass_;
};

double pairing(const RtDofVector& p, const YVector& d);

struct DivergenceResult {
    DgFunction v;
    std::vector<int> zero_weight_dofs;  // lumped only: entries skipped because C_{T,k} = 0
};

// v with (u, v) = -<p, Lambda u> for all u, in the L2 or lumped inner product.
DivergenceResult divergence_ex(const Discretization& disc, const RtDofVector& p, bool lumped);
DgFunction divergence(const Discretization& disc, const RtDofVector& p, bool lumped = false);

RtDofVector riesz(const Discretization& disc, const YVector& d, double S);
YVector riesz_inverse(const Discretization& disc, const RtDofVector& p, double S);
double inner_y(const Discretization& disc, const YVector& d, const YVector& e, double S);
double inner_ystar(const Discretization& disc, const RtDofVector& p, const RtDofVector& q, double S);

double l2_inner(const Discretization& disc, const DgFunction& u, const DgFunction& v, const CellMask* mask = nullptr);
double l2_norm(const Discretization& disc, const DgFunction& u, const CellMask* mask = nullptr);
// Lumped inner product sum_{T,k} C_{T,k} u v.
double lumped_inner(const Discretization& disc, const DgFunction& u, const DgFunction& v,
                    const CellMask* mask = nullptr);

DgFunction interpolate(const Discretization& disc, const std::function<double(const Vec2&)>& f);
double evaluate(const Discretization& disc, const DgFunction& u, int cell, const Vec2& x);

enum class InnerSolverKind { ConjugateGradient, GaussSeidel };

struct InnerSolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// fidelity + lambda * Lambda^T W Lambda, where the fidelity block is M restricted to the data
// region (lumped = false) or lambda S C restricted to the data region (lumped = true).
class QuadraticSolver {
public:
    QuadraticSolver(const Discretization& disc, double lambda, double S, const CellMask& mask, bool lumped_fidelity,
                    InnerSolverKind kind = InnerSolverKind::ConjugateGradient, double tol = 1e-8, int max_iter = 2000);

    // x holds the initial guess on entry.
    InnerSolveStats solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const;

    Eigen::VectorXd apply_fidelity(const Eigen::VectorXd& v) const;
    // lambda * Lambda^T W y
    Eigen::VectorXd apply_penalty_transpose(const Eigen::VectorXd& y) const;

    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return A_; }

private:
    InnerSolveStats solve_cg(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const;
    InnerSolveStats solve_gs(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const;
    void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;

    const Discretization* disc_;
    double lambda_;
    Eigen::VectorXd yw_;
    Eigen::VectorXd fid_diag_;  // lumped variant
    CellMask mask_;
    bool lumped_;
    InnerSolverKind kind_;
    double tol_;
    int max_iter_;
    int nk_;
    SparseRowMatrix A_;
    std::vector<Eigen::MatrixXd> block_inv_;
};

QuadraticSolver assemble_quadratic_solver(const Discretization& disc, double lambda, double S, const CellMask& mask,
                                          bool lumped_fidelity,
                                          InnerSolverKind kind = InnerSolverKind::ConjugateGradient);

}  // namespace fetv
