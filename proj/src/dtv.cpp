#include "fetv/dtv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fetv/error.hpp"
#include "fetv/rng.hpp"

namespace fetv {

SNorm conjugate(SNorm s) {
    switch (s) {
        case SNorm::One: return SNorm::Inf;
        case SNorm::Two: return SNorm::Two;
        case SNorm::Inf: return SNorm::One;
    }
    return SNorm::Two;
}

SNorm parse_snorm(const std::string& text) {
    if (text == "1") return SNorm::One;
    if (text == "2") return SNorm::Two;
    if (text == "inf" || text == "infinity" || text == "oo") return SNorm::Inf;
    throw ConfigError("unsupported s '" + text + "' (1, 2 or inf)");
}

std::string to_string(SNorm s) {
    switch (s) {
        case SNorm::One: return "1";
        case SNorm::Two: return "2";
        case SNorm::Inf: return "inf";
    }
    return "?";
}

double vec_norm(const Vec2& v, SNorm s) {
    switch (s) {
        case SNorm::One: return std::abs(v.x()) + std::abs(v.y());
        case SNorm::Two: return std::hypot(v.x(), v.y());
        case SNorm::Inf: return std::max(std::abs(v.x()), std::abs(v.y()));
    }
    return 0;
}

double dtv_of(const Discretization& disc, const YVector& d, SNorm s) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    double cell = 0, edge = 0;
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const Vec2 g(d.values[dm.cell_dof(t, i, 0)], d.values[dm.cell_dof(t, i, 1)]);
            cell += vec_norm(g, s) * w.interior[t * dm.ni + i];
        }
    for (int e = 0; e < dm.num_edges; ++e) {
        const double ns = vec_norm(disc.mesh().interior_edge(e).normal, s);
        double acc = 0;
        for (int j = 0; j < dm.nj; ++j) acc += std::abs(d.values[dm.edge_dof(e, j)]) * w.edge[e * dm.nj + j];
        edge += ns * acc;
    }
    return cell + edge;
}

double dtv(const Discretization& disc, const DgFunction& u, SNorm s) {
    return dtv_of(disc, disc.lambda().apply(u), s);
}

double abs_integral_unit(const double* c, int degree) {
    auto F = [&](double t) {
        double v = 0, tp = t;
        for (int k = 0; k <= degree; ++k) {
            v += c[k] * tp / (k + 1);
            tp *= t;
        }
        return v;
    };
    std::vector<double> cuts{0.0, 1.0};
    auto add_root = [&](double t) {
        if (t > 0 && t < 1) cuts.push_back(t);
    };
    const double a = degree >= 2 ? c[2] : 0.0, b = degree >= 1 ? c[1] : 0.0, c0 = c[0];
    const double scale = std::abs(a) + std::abs(b) + std::abs(c0);
    if (scale == 0) return 0;
    if (std::abs(a) > 1e-15 * scale) {
        const double disc = b * b - 4 * a * c0;
        if (disc > 0) {
            const double qq = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            add_root(qq / a);
            if (qq != 0) add_root(c0 / qq);
        }
    } else if (b != 0) {
        add_root(-c0 / b);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) total += std::abs(F(cuts[k + 1]) - F(cuts[k]));
    return total;
}

double tv_exact(const Discretization& disc, const DgFunction& u, SNorm s) {
    const DofMap& dm = disc.dofs();
    const int r = disc.degree();
    const Mesh& mesh = disc.mesh();
    double total = 0;
    if (r >= 1) {
        const QuadratureRule q = triangle_quadrature(10);
        std::vector<std::vector<Vec2>> grads;
        for (const auto& x : q.points) grads.push_back(eval_cell_basis_grad(r, x));
        for (int t = 0; t < dm.num_cells; ++t) {
            const CellGeometry& g = mesh.geometry(t);
            double acc = 0;
            for (size_t p = 0; p < q.points.size(); ++p) {
                Vec2 gr = Vec2::Zero();
                for (int k = 0; k < dm.nk; ++k) gr += u.coeffs[dm.dg(t, k)] * grads[p][k];
                acc += q.weights[p] * vec_norm(g.inv_transpose * gr, s);
            }
            total += g.det * acc;
        }
    }
    const YVector d = disc.lambda().apply(u);
    for (int e = 0; e < dm.num_edges; ++e) {
        const InteriorEdge& E = mesh.interior_edge(e);
        double v[3] = {0, 0, 0};
        for (int j = 0; j < dm.nj; ++j) v[j] = d.values[dm.edge_dof(e, j)];
        double c[3] = {0, 0, 0};
        if (r == 0) {
            c[0] = v[0];
        } else if (r == 1) {
            c[0] = v[0];
            c[1] = v[1] - v[0];
        } else {
            c[0] = v[0];
            c[1] = -3 * v[0] + 4 * v[1] - v[2];
            c[2] = 2 * v[0] - 4 * v[1] + 2 * v[2];
        }
        total += E.length * vec_norm(E.normal, s) * abs_integral_unit(c, r);
    }
    return total;
}

Vec2 project_dual_ball(const Vec2& x, double radius, SNorm s) {
    switch (conjugate(s)) {
        case SNorm::Inf:
            return x.cwiseMax(Vec2::Constant(-radius)).cwiseMin(Vec2::Constant(radius));
        case SNorm::Two: {
            const double n = x.norm();
            return n <= radius ? x : Vec2(x * (radius / n));
        }
        case SNorm::One: {
            const double a = std::abs(x.x()), b = std::abs(x.y());
            if (a + b <= radius) return x;
            const double hi = std::max(a, b), lo = std::min(a, b);
            double theta = 0.5 * (hi + lo - radius);
            if (lo - theta <= 0) theta = hi - radius;
            return Vec2(std::copysign(std::max(a - theta, 0.0), x.x()), std::copysign(std::max(b - theta, 0.0), x.y()));
        }
    }
    return x;
}

RtDofVector project_feasible(const Discretization& disc, const RtDofVector& p, const ConstraintSetSpec& spec,
                             SNorm s) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    RtDofVector out = p;
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const int a = dm.cell_dof(t, i, 0), b = dm.cell_dof(t, i, 1);
            const Vec2 q = project_dual_ball(Vec2(p.values[a], p.values[b]), spec.beta * w.interior[t * dm.ni + i], s);
            out.values[a] = q.x();
            out.values[b] = q.y();
        }
    for (int e = 0; e < dm.num_edges; ++e) {
        const double ns = vec_norm(disc.mesh().interior_edge(e).normal, s);
        for (int j = 0; j < dm.nj; ++j) {
            const double bound = spec.beta * ns * w.edge[e * dm.nj + j];
            double& v = out.values[dm.edge_dof(e, j)];
            v = std::clamp(v, -bound, bound);
        }
    }
    return out;
}

namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

Vec2 holder_maximizer(const Vec2& w, double c, SNorm s) {
    if (w.x() == 0 && w.y() == 0) return Vec2::Zero();
    switch (s) {
        case SNorm::One: return Vec2(c * sgn(w.x()), c * sgn(w.y()));
        case SNorm::Two: return w * (c / w.norm());
        case SNorm::Inf: {
            const int l = std::abs(w.y()) > std::abs(w.x()) ? 1 : 0;
            Vec2 out = Vec2::Zero();
            out[l] = c * sgn(w[l]);
            return out;
        }
    }
    return Vec2::Zero();
}

}  // namespace

RtDofVector dual_witness(const Discretization& disc, const DgFunction& u, SNorm s) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    const YVector d = disc.lambda().apply(u);
    RtDofVector p = disc.zero_rt();
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const int a = dm.cell_dof(t, i, 0), b = dm.cell_dof(t, i, 1);
            const Vec2 n = holder_maximizer(Vec2(d.values[a], d.values[b]), w.interior[t * dm.ni + i], s);
            p.values[a] = n.x();
            p.values[b] = n.y();
        }
    for (int e = 0; e < dm.num_edges; ++e) {
        const double ns = vec_norm(disc.mesh().interior_edge(e).normal, s);
        for (int j = 0; j < dm.nj; ++j) {
            const int k = dm.edge_dof(e, j);
            p.values[k] = sgn(d.values[k]) * ns * w.edge[e * dm.nj + j];
        }
    }
    return p;
}

double dual_max_bruteforce(const Discretization& disc, const DgFunction& u, SNorm s, int n_samples,
                           std::uint64_t seed, bool include_witness) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    const YVector d = disc.lambda().apply(u);
    Rng rng(seed);
    RtDofVector p = disc.zero_rt();
    double best = include_witness ? pairing(dual_witness(disc, u, s), d) : -std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_samples; ++n) {
        for (int t = 0; t < dm.num_cells; ++t)
            for (int i = 0; i < dm.ni; ++i) {
                const double c = w.interior[t * dm.ni + i];
                Vec2 q;
                if (conjugate(s) == SNorm::Two) {
                    do {
                        q = Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
                    } while (q.squaredNorm() > 1);
                    q *= c;
                } else {
                    q = Vec2(rng.uniform(-c, c), rng.uniform(-c, c));
                }
                q = project_dual_ball(q, c, s);
                p.values[dm.cell_dof(t, i, 0)] = q.x();
                p.values[dm.cell_dof(t, i, 1)] = q.y();
            }
        for (int e = 0; e < dm.num_edges; ++e) {
            const double ns = vec_norm(disc.mesh().interior_edge(e).normal, s);
            for (int j = 0; j < dm.nj; ++j) {
                const double bound = ns * w.edge[e * dm.nj + j];
                p.values[dm.edge_dof(e, j)] = rng.uniform(-bound, bound);
            }
        }
        best = std::max(best, pairing(p, d));
    }
    return best;
}

double infeasibility(const Discretization& disc, const RtDofVector& p, const ConstraintSetSpec& spec, SNorm s,
                     double S) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    double total = 0;
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const double c = w.interior[t * dm.ni + i];
            const double bound = spec.beta * c;
            const Vec2 q(p.values[dm.cell_dof(t, i, 0)], p.values[dm.cell_dof(t, i, 1)]);
            double viol = 0;
            if (s == SNorm::One) {
                for (int l = 0; l < 2; ++l) viol += std::pow(std::max(std::abs(q[l]) - bound, 0.0), 2);
            } else {
                viol = std::pow(std::max(vec_norm(q, conjugate(s)) - bound, 0.0), 2);
            }
            total += viol / (c * S);
        }
    for (int e = 0; e < dm.num_edges; ++e) {
        const double ns = vec_norm(disc.mesh().interior_edge(e).normal, s);
        for (int j = 0; j < dm.nj; ++j) {
            const double c = w.edge[e * dm.nj + j];
            const double v = std::max(std::abs(p.values[dm.edge_dof(e, j)]) - spec.beta * ns * c, 0.0);
            total += v * v / c;
        }
    }
    return total;
}

double huber(double a, double eps) {
    a = std::abs(a);
    if (eps <= 0) return a;
    return a >= eps ? a - 0.5 * eps : a * a / (2 * eps);
}

double huber_dtv_of(const Discretization& disc, const YVector& d, double eps) {
    const DofMap& dm = disc.dofs();
    const Weights& w = disc.weights();
    double total = 0;
    for (int t = 0; t < dm.num_cells; ++t)
        for (int i = 0; i < dm.ni; ++i) {
            const Vec2 g(d.values[dm.cell_dof(t, i, 0)], d.values[dm.cell_dof(t, i, 1)]);
            total += w.interior[t * dm.ni + i] * huber(g.norm(), eps);
        }
    for (int e = 0; e < dm.num_edges; ++e)
        for (int j = 0; j < dm.nj; ++j) total += w.edge[e * dm.nj + j] * huber(d.values[dm.edge_dof(e, j)], eps);
    return total;
}

}  // namespace fetv
