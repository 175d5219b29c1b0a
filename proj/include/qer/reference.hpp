#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qer/hilbert.hpp"
#include "qer/imaging.hpp"
#include "qer/models.hpp"

// Naive, serial reference implementations. They share no kernel code with the
// production paths: full Kronecker products and dense matrix algebra
// throughout. Tests use them as oracles and bench/ compares their speed
// against the bit-indexed kernels.
namespace qer::ref {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

Eigen::MatrixXcd embed_site_operator(const Eigen::Matrix2cd& op, int site, int sites);

/// Full product unitary u_1 (x) ... (x) u_L as a dense 2^L x 2^L matrix.
Eigen::MatrixXcd product_unitary(const RotationSet& set, int rotation);

DensityMatrix partial_trace_half(const DensityMatrix& rho);
Eigen::MatrixXcd partial_transpose_half(const DensityMatrix& rho);

/// p_ij via dense conjugation U_i rho U_i^dag.
StatImage generate_image(const DensityMatrix& rho, const RotationSet& rotations);

/// Lindblad right-hand side via dense commutator and dense jump conjugations.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& hamiltonian,
                              const Eigen::MatrixXcd& rho, double gamma,
                              bool include_hamiltonian, int sites);

} // namespace qer::ref
