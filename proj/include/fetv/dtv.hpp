#pragma once

#include <cstdint>
#include <string>

#include "fetv/operators.hpp"

namespace fetv {

// Anisotropy of the pointwise norm |.|_s.
enum class SNorm { One, Two, Inf };

SNorm conjugate(SNorm s);
SNorm parse_snorm(const std::string& text);
std::string to_string(SNorm s);
double vec_norm(const Vec2& v, SNorm s);

struct ConstraintSetSpec {
    double beta = 1.0;
};

double dtv(const Discretization& disc, const DgFunction& u, SNorm s);
// Same sum evaluated on an already computed Lambda u.
double dtv_of(const Discretization& disc, const YVector& d, SNorm s);

double tv_exact(const Discretization& disc, const DgFunction& u, SNorm s);

// Exact integral of |q| over [0,1] for a polynomial q(t) = sum c_k t^k, degree <= 2.
double abs_integral_unit(const double* c, int degree);

// Dual-norm ball projection in R^2: |x|_{s*} <= radius.
Vec2 project_dual_ball(const Vec2& x, double radius, SNorm s);

RtDofVector project_feasible(const Discretization& disc, const RtDofVector& p, const ConstraintSetSpec& spec,
                             SNorm s);

RtDofVector dual_witness(const Discretization& disc, const DgFunction& u, SNorm s);

double dual_max_bruteforce(const Discretization& disc, const DgFunction& u, SNorm s, int n_samples,
                           std::uint64_t seed, bool include_witness = false);

double infeasibility(const Discretization& disc, const RtDofVector& p, const ConstraintSetSpec& spec, SNorm s,
                     double S);

// Huber function: |a| - eps/2 for |a| >= eps, a^2/(2 eps) below.
double huber(double a, double eps);
// G_eps(d) for s = 2; eps = 0 gives the plain DTV sum.
double huber_dtv_of(const Discretization& disc, const YVector& d, double eps);

}  // namespace fetv
