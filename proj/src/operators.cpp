#include "fetv/operators.hpp"

#include <cmath>

#include "fetv/error.hpp"

namespace fetv {

namespace {

// Reference coordinates of the point at parameter t along a cell's local facet.
Vec2 facet_point(int facet, bool aligned, double t) {
    Bary l{0, 0, 0};
    const int a = (facet + 1) % 3, b = (facet + 2) % 3;
    l[a] = aligned ? 1 - t : t;
    l[b] = aligned ? t : 1 - t;
    return bary_to_reference(l);
}

}  // namespace

GradJumpOperator::GradJumpOperator(const Mesh& mesh, int r) {
    const DofMap dm = build_dofmaps(mesh, r);
    const LagrangeLayout lay(r);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(dm.y_size()) * dm.nk * 2);

    // Reference gradients at the P_{r-1} nodes are shared by all cells.
    std::vector<std::vector<Vec2>> ref_grad;
    for (const auto& node : lay.interior_nodes) ref_grad.push_back(eval_cell_basis_grad(r, bary_to_reference(node)));

    for (int t = 0; t < dm.num_cells; ++t) {
        const Mat2& G = mesh.geometry(t).inv_transpose;
        for (int i = 0; i < dm.ni; ++i)
            for (int k = 0; k < dm.nk; ++k) {
                const Vec2 g = G * ref_grad[i][k];
                for (int c = 0; c < 2; ++c)
                    if (g[c] != 0.0) trip.emplace_back(dm.cell_dof(t, i, c), dm.dg(t, k), g[c]);
            }
    }
    for (int e = 0; e < dm.num_edges; ++e) {
        const InteriorEdge& E = mesh.interior_edge(e);
        const int cells[2] = {E.cell_plus, E.cell_minus};
        for (int j = 0; j < dm.nj; ++j) {
            const double tj = lay.edge_nodes[j];
            for (int side = 0; side < 2; ++side) {
                const auto phi = eval_cell_basis(r, facet_point(E.facet[side], E.aligned[side], tj));
                const double sign = side == 0 ? 1.0 : -1.0;
                for (int k = 0; k < dm.nk; ++k)
                    if (phi[k] != 0.0) trip.emplace_back(dm.edge_dof(e, j), dm.dg(cells[side], k), sign * phi[k]);
            }
        }
    }
    L_.resize(dm.y_size(), dm.dg_size());
    L_.setFromTriplets(trip.begin(), trip.end());
    L_.makeCompressed();
    Lt_ = L_.transpose();
    Lt_.makeCompressed();
}

GradJumpOperator assemble_lambda(const Mesh& mesh, int r) { return GradJumpOperator(mesh, r); }

DgMass::DgMass(const Mesh& mesh, int r) : nk_(num_cell_nodes(r)), ref_(reference_mass(r)), ref_llt_(ref_) {
    if (ref_llt_.info() != Eigen::Success) throw InternalError("reference mass matrix is not positive definite");
    scale_.resize(mesh.num_cells());
    for (int t = 0; t < mesh.num_cells(); ++t) scale_[t] = mesh.geometry(t).det;
}

Eigen::VectorXd DgMass::apply(const Eigen::VectorXd& u, const CellMask* mask) const {
    Eigen::VectorXd out(u.size());
    for (size_t t = 0; t < scale_.size(); ++t) {
        auto seg = out.segment(static_cast<Eigen::Index>(t) * nk_, nk_);
        if (mask && !(*mask)[t])
            seg.setZero();
        else
            seg = scale_[t] * (ref_ * u.segment(static_cast<Eigen::Index>(t) * nk_, nk_));
    }
    return out;
}

Eigen::VectorXd DgMass::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd out(rhs.size());
    for (size_t t = 0; t < scale_.size(); ++t) {
        const auto idx = static_cast<Eigen::Index>(t) * nk_;
        out.segment(idx, nk_) = ref_llt_.solve(rhs.segment(idx, nk_)) / scale_[t];
    }
    return out;
}

double DgMass::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const CellMask* mask) const {
    double s = 0;
    for (size_t t = 0; t < scale_.size(); ++t) {
        if (mask && !(*mask)[t]) continue;
        const auto idx = static_cast<Eigen::Index>(t) * nk_;
        s += scale_[t] * u.segment(idx, nk_).dot(ref_ * v.segment(idx, nk_));
    }
    return s;
}

Discretization::Discretization(std::shared_ptr<const Mesh> mesh, int r)
    : mesh_(std::move(mesh)),
      r_(r),
      layout_(r),
      dofs_(build_dofmaps(*mesh_, r)),
      weights_(assemble_weights(*mesh_, r)),
      lambda_(*mesh_, r),
      mass_(*mesh_, r) {}

DgFunction Discretization::zero_function() const { return {r_, Eigen::VectorXd::Zero(dofs_.dg_size())}; }

RtDofVector Discretization::zero_rt() const { return {Eigen::VectorXd::Zero(dofs_.y_size())}; }

Eigen::VectorXd Discretization::y_weights(double S) const {
    Eigen::VectorXd w(dofs_.y_size());
    for (int t = 0; t < dofs_.num_cells; ++t)
        for (int i = 0; i < dofs_.ni; ++i) {
            const double c = S * weights_.interior[t * dofs_.ni + i];
            w[dofs_.cell_dof(t, i, 0)] = c;
            w[dofs_.cell_dof(t, i, 1)] = c;
        }
    w.tail(static_cast<Eigen::Index>(dofs_.num_edges) * dofs_.nj) = weights_.edge;
    return w;
}

double pairing(const RtDofVector& p, const YVector& d) { return p.values.dot(d.values); }

DivergenceResult divergence_ex(const Discretization& disc, const RtDofVector& p, bool lumped) {
    DivergenceResult res;
    const Eigen::VectorXd lt = disc.lambda().apply_transpose(p);
    res.v.degree = disc.degree();
    if (!lumped) {
        res.v.coeffs = -disc.mass().solve(lt);
        return res;
    }
    const Eigen::VectorXd& C = disc.weights().cell;
    res.v.coeffs.resize(lt.size());
    for (Eigen::Index k = 0; k < lt.size(); ++k) {
        if (C[k] > 0) {
            res.v.coeffs[k] = -lt[k] / C[k];
        } else {
            res.v.coeffs[k] = 0.0;
            res.zero_weight_dofs.push_back(static_cast<int>(k));
        }
    }
    return res;
}

DgFunction divergence(const Discretization& disc, const RtDofVector& p, bool lumped) {
    return divergence_ex(disc, p, lumped).v;
}

RtDofVector riesz(const Discretization& disc, const YVector& d, double S) {
    return {disc.y_weights(S).cwiseProduct(d.values)};
}

YVector riesz_inverse(const Discretization& disc, const RtDofVector& p, double S) {
    const Eigen::VectorXd w = disc.y_weights(S);
    if ((w.array() <= 0).any()) throw InternalError("zero weight in the Riesz map");
    return {p.values.cwiseQuotient(w)};
}

double inner_y(const Discretization& disc, const YVector& d, const YVector& e, double S) {
    return (disc.y_weights(S).array() * d.values.array() * e.values.array()).sum();
}

double inner_ystar(const Discretization& disc, const RtDofVector& p, const RtDofVector& q, double S) {
    return (p.values.array() * q.values.array() / disc.y_weights(S).array()).sum();
}

double l2_inner(const Discretization& disc, const DgFunction& u, const DgFunction& v, const CellMask* mask) {
    return disc.mass().inner(u.coeffs, v.coeffs, mask);
}

double l2_norm(const Discretization& disc, const DgFunction& u, const CellMask* mask) {
    return std::sqrt(std::max(0.0, l2_inner(disc, u, u, mask)));
}

double lumped_inner(const Discretization& disc, const DgFunction& u, const DgFunction& v, const CellMask* mask) {
    const int nk = disc.dofs().nk;
    const Eigen::VectorXd& C = disc.weights().cell;
    double s = 0;
    for (int t = 0; t < disc.dofs().num_cells; ++t) {
        if (mask && !(*mask)[t]) continue;
        for (int k = 0; k < nk; ++k) s += C[t * nk + k] * u.coeffs[t * nk + k] * v.coeffs[t * nk + k];
    }
    return s;
}

DgFunction interpolate(const Discretization& disc, const std::function<double(const Vec2&)>& f) {
    DgFunction u = disc.zero_function();
    const int nk = disc.dofs().nk;
    for (int t = 0; t < disc.dofs().num_cells; ++t) {
        const CellGeometry& g = disc.mesh().geometry(t);
        for (int k = 0; k < nk; ++k)
            u.coeffs[t * nk + k] = f(g.to_physical(bary_to_reference(disc.layout().cell_nodes[k])));
    }
    return u;
}

double evaluate(const Discretization& disc, const DgFunction& u, int cell, const Vec2& x) {
    const Vec2 xhat = disc.mesh().geometry(cell).to_reference(x);
    const auto phi = eval_cell_basis(disc.degree(), xhat);
    const int nk = disc.dofs().nk;
    double s = 0;
    for (int k = 0; k < nk; ++k) s += phi[k] * u.coeffs[cell * nk + k];
    return s;
}

// ---- quadratic subproblems --------------------------------------------

QuadraticSolver::QuadraticSolver(const Discretization& disc, double lambda, double S, const CellMask& mask,
                                 bool lumped_fidelity, InnerSolverKind kind, double tol, int max_iter)
    : disc_(&disc),
      lambda_(lambda),
      mask_(mask),
      lumped_(lumped_fidelity),
      kind_(kind),
      tol_(tol),
      max_iter_(max_iter),
      nk_(disc.dofs().nk) {
    const DofMap& dm = disc.dofs();
    if (static_cast<int>(mask.size()) != dm.num_cells) throw ConfigError("mask size does not match the mesh");
    if (!(lambda >= 0) || !(S > 0)) throw ConfigError("quadratic solver needs lambda >= 0 and S > 0");
    bool any = false;
    for (auto m : mask) any = any || m;
    if (!any) throw ConfigError("every cell is masked; the data region is empty");
    if (lambda == 0) {
        for (auto m : mask)
            if (!m) throw ConfigError("lambda = 0 with masked cells gives a singular system");
    }
    yw_ = disc.y_weights(S);

    SparseRowMatrix fid(dm.dg_size(), dm.dg_size());
    std::vector<Eigen::Triplet<double>> trip;
    if (lumped_) {
        fid_diag_ = Eigen::VectorXd::Zero(dm.dg_size());
        for (int t = 0; t < dm.num_cells; ++t) {
            if (!mask[t]) continue;
            for (int k = 0; k < nk_; ++k) {
                const double c = lambda * S * disc.weights().cell[t * nk_ + k];
                fid_diag_[t * nk_ + k] = c;
                trip.emplace_back(t * nk_ + k, t * nk_ + k, c);
            }
        }
    } else {
        const Eigen::MatrixXd& ref = disc.mass().reference();
        for (int t = 0; t < dm.num_cells; ++t) {
            if (!mask[t]) continue;
            const double sc = disc.mass().scale(t);
            for (int a = 0; a < nk_; ++a)
                for (int b = 0; b < nk_; ++b) trip.emplace_back(t * nk_ + a, t * nk_ + b, sc * ref(a, b));
        }
    }
    fid.setFromTriplets(trip.begin(), trip.end());
    const auto& L = disc.lambda().matrix();
    SparseRowMatrix WL = yw_.asDiagonal() * L;
    SparseRowMatrix pen = disc.lambda().transpose() * WL;
    A_ = fid + lambda * pen;
    A_.makeCompressed();

    block_inv_.resize(dm.num_cells);
    for (int t = 0; t < dm.num_cells; ++t) {
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(nk_, nk_);
        for (int a = 0; a < nk_; ++a)
            for (SparseRowMatrix::InnerIterator it(A_, t * nk_ + a); it; ++it) {
                const auto col = it.col() - t * nk_;
                if (col >= 0 && col < nk_) blk(a, col) = it.value();
            }
        Eigen::LLT<Eigen::MatrixXd> llt(blk);
        if (llt.info() == Eigen::Success) {
            block_inv_[t] = llt.solve(Eigen::MatrixXd::Identity(nk_, nk_));
        } else {
            Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nk_, nk_);
            for (int a = 0; a < nk_; ++a) d(a, a) = blk(a, a) > 0 ? 1.0 / blk(a, a) : 1.0;
            block_inv_[t] = d;
        }
    }
}

Eigen::VectorXd QuadraticSolver::apply_fidelity(const Eigen::VectorXd& v) const {
    if (lumped_) return fid_diag_.cwiseProduct(v);
    return disc_->mass().apply(v, &mask_);
}

Eigen::VectorXd QuadraticSolver::apply_penalty_transpose(const Eigen::VectorXd& y) const {
    return lambda_ * (disc_->lambda().transpose() * yw_.cwiseProduct(y));
}

void QuadraticSolver::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    for (size_t t = 0; t < block_inv_.size(); ++t) {
        const auto idx = static_cast<Eigen::Index>(t) * nk_;
        z.segment(idx, nk_).noalias() = block_inv_[t] * r.segment(idx, nk_);
    }
}

InnerSolveStats QuadraticSolver::solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const {
    if (x.size() != rhs.size()) x = Eigen::VectorXd::Zero(rhs.size());
    return kind_ == InnerSolverKind::ConjugateGradient ? solve_cg(rhs, x) : solve_gs(rhs, x);
}

InnerSolveStats QuadraticSolver::solve_cg(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const {
    InnerSolveStats st;
    const double bnorm = rhs.norm();
    if (bnorm == 0) {
        x.setZero();
        st.converged = true;
        return st;
    }
    Eigen::VectorXd r = rhs - A_ * x;
    Eigen::VectorXd z(r.size()), q(r.size());
    precondition(r, z);
    Eigen::VectorXd d = z;
    double rz = r.dot(z);
    st.relative_residual = r.norm() / bnorm;
    while (st.relative_residual > tol_ && st.iterations < max_iter_) {
        q.noalias() = A_ * d;
        const double alpha = rz / d.dot(q);
        x += alpha * d;
        r -= alpha * q;
        ++st.iterations;
        st.relative_residual = r.norm() / bnorm;
        if (st.relative_residual <= tol_) break;
        precondition(r, z);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    st.converged = st.relative_residual <= tol_;
    return st;
}

InnerSolveStats QuadraticSolver::solve_gs(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const {
    InnerSolveStats st;
    const double bnorm = rhs.norm();
    if (bnorm == 0) {
        x.setZero();
        st.converged = true;
        return st;
    }
    const int nt = static_cast<int>(block_inv_.size());
    Eigen::VectorXd local(nk_);
    st.relative_residual = (rhs - A_ * x).norm() / bnorm;
    while (st.relative_residual > tol_ && st.iterations < max_iter_) {
        for (int t = 0; t < nt; ++t) {
            for (int a = 0; a < nk_; ++a) {
                const int row = t * nk_ + a;
                double s = rhs[row];
                for (SparseRowMatrix::InnerIterator it(A_, row); it; ++it) {
                    const auto col = it.col();
                    if (col < t * nk_ || col >= (t + 1) * nk_) s -= it.value() * x[col];
                }
                local[a] = s;
            }
            x.segment(static_cast<Eigen::Index>(t) * nk_, nk_) = block_inv_[t] * local;
        }
        ++st.iterations;
        st.relative_residual = (rhs - A_ * x).norm() / bnorm;
    }
    st.converged = st.relative_residual <= tol_;
    return st;
}

QuadraticSolver assemble_quadratic_solver(const Discretization& disc, double lambda, double S, const CellMask& mask,
                                          bool lumped_fidelity, InnerSolverKind kind) {
    return QuadraticSolver(disc, lambda, S, mask, lumped_fidelity, kind);
}

}  // namespace fetv
