#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "qer/common.hpp"

namespace qer {

// Basis convention (single source of truth for the configuration index j):
// site l in 1..L occupies bit (L - l) of j, so site 1 is the most significant
// bit. Bit value 0 encodes spin up (sigma^z eigenvalue +1).
inline int site_bit(int sites, int site) { return sites - site; }
inline std::uint64_t site_mask(int sites, int site) {
    return std::uint64_t{1} << site_bit(sites, site);
}
inline int spin_sign(std::uint64_t config, int sites, int site) {
    return (config >> site_bit(sites, site)) & 1 ? -1 : +1;
}

/// Normalized state vector of an L-site spin-1/2 chain, dim 2^L.
struct PureState {
    int sites = 0;
    Eigen::VectorXcd amps;

    Eigen::Index dim() const { return amps.size(); }
    static PureState basis_state(int sites, std::uint64_t config);
};

/// Hermitian, unit-trace 2^L x 2^L matrix.
struct DensityMatrix {
    int sites = 0;
    Eigen::MatrixXcd mat;

    Eigen::Index dim() const { return mat.rows(); }
    static DensityMatrix from_pure(const PureState& psi);
    static DensityMatrix maximally_mixed(int sites);
};

/// Single-site unitary, u^dag u = 1 within 1e-12.
struct LocalUnitary {
    Eigen::Matrix2cd u;
};

const Eigen::Matrix2cd& pauli_x();
const Eigen::Matrix2cd& pauli_y();
const Eigen::Matrix2cd& pauli_z();

/// I (x) ... (x) op (x) ... (x) I with op at `site` (1-based).
Eigen::MatrixXcd embed_site_operator(const Eigen::Matrix2cd& op, int site, int sites);

/// Reduced density matrix of sites 1..L/2 (traces out the second half).
DensityMatrix partial_trace_half(const DensityMatrix& rho);

/// Transposes the indices of sites 1..L/2 only. The result is Hermitian but
/// not necessarily positive, hence a plain matrix.
Eigen::MatrixXcd partial_transpose_half(const DensityMatrix& rho);

/// Product state with each spin pointing along an independent uniformly
/// random Bloch direction (uniform cos(theta), uniform phi).
PureState random_product_state(int sites, std::uint64_t seed);
PureState random_product_state(int sites, std::mt19937_64& gen);

/// Convex mixture of `alpha_max` random product-state projectors with flat
/// Dirichlet weights. Separable by construction, so its log-negativity is 0.
DensityMatrix random_separable_mixed(int sites, int alpha_max, std::uint64_t seed);

/// Contract checks used by tests and CLI audits (throw ValidationError).
void check_normalized(const PureState& psi, double tol = 1e-12);
void check_density_matrix(const DensityMatrix& rho, double herm_tol = 1e-12,
                          double trace_tol = 1e-12, double eig_floor = -1e-10);

} // namespace qer
