#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fetv/operators.hpp"

namespace fetv {

// Returned by psnr for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// 10 log10(M^2 |Omega| / ||u - u_ref||^2) with the exact DG mass matrix.
double psnr(const Discretization& disc, const DgFunction& u, const DgFunction& u_ref, double peak = 1.0);

struct NoiseSpec {
    double sigma = 0.1;
    std::uint64_t seed = 0;
};

// sigma * N(0,1) per dof, drawn in dof order from Rng(seed).
Eigen::VectorXd gaussian_noise(Eigen::Index n, const NoiseSpec& spec);
DgFunction add_noise(const DgFunction& u, const NoiseSpec& spec);

// Impulse noise: a fraction of dofs (chosen without replacement) set to 0 or 1 with equal odds.
DgFunction add_salt_pepper(const DgFunction& u, double fraction, std::uint64_t seed);

// Exactly round(fraction * n) cells masked (value 0), chosen without replacement.
CellMask random_cell_mask(int num_cells, double fraction, std::uint64_t seed);

// Binary vector file: 8-byte magic "FETVVEC1", uint64 count, count float64 values, all little endian.
void write_vector_file(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_file(const std::string& path);

}  // namespace fetv
