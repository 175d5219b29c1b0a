#include "qer/hilbert.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace qer {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 on a stream-offset state
    std::uint64_t z = base + stream * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

PureState PureState::basis_state(int sites, std::uint64_t config) {
    PureState psi;
    psi.sites = sites;
    psi.amps = Eigen::VectorXcd::Zero(Eigen::Index{1} << sites);
    psi.amps[static_cast<Eigen::Index>(config)] = 1.0;
    return psi;
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    DensityMatrix rho;
    rho.sites = psi.sites;
    rho.mat = psi.amps * psi.amps.adjoint();
    return rho;
}

DensityMatrix DensityMatrix::maximally_mixed(int sites) {
    DensityMatrix rho;
    rho.sites = sites;
    const Eigen::Index dim = Eigen::Index{1} << sites;
    rho.mat = Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
    return rho;
}

const Eigen::Matrix2cd& pauli_x() {
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
    return m;
}
const Eigen::Matrix2cd& pauli_y() {
    static const Eigen::Matrix2cd m =
        (Eigen::Matrix2cd() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
    return m;
}
const Eigen::Matrix2cd& pauli_z() {
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
    return m;
}

Eigen::MatrixXcd embed_site_operator(const Eigen::Matrix2cd& op, int site, int sites) {
    if (site < 1 || site > sites) {
        throw ValidationError("embed_site_operator: site " + std::to_string(site) +
                              " out of range 1.." + std::to_string(sites));
    }
    const Eigen::Index dim = Eigen::Index{1} << sites;
    const std::uint64_t mask = site_mask(sites, site);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const int b = (static_cast<std::uint64_t>(j) & mask) ? 1 : 0;
        // bit value 0 = spin up = local basis index 0
        out(j, j) = op(b, b);
        out(static_cast<Eigen::Index>(j ^ static_cast<Eigen::Index>(mask)), j) = op(1 - b, b);
    }
    return out;
}

DensityMatrix partial_trace_half(const DensityMatrix& rho) {
    if (rho.sites % 2 != 0) {
        throw ValidationError("partial_trace_half: odd site count");
    }
    const int half = rho.sites / 2;
    const Eigen::Index da = Eigen::Index{1} << half;
    const Eigen::Index db = Eigen::Index{1} << (rho.sites - half);
    DensityMatrix red;
    red.sites = half;
    red.mat = Eigen::MatrixXcd::Zero(da, da);
    // j = a*db + b with a indexing the first (most significant) half
    for (Eigen::Index a = 0; a < da; ++a) {
        for (Eigen::Index ap = 0; ap < da; ++ap) {
            Complex sum = 0.0;
            for (Eigen::Index b = 0; b < db; ++b) {
                sum += rho.mat(a * db + b, ap * db + b);
            }
            red.mat(a, ap) = sum;
        }
    }
    return red;
}

Eigen::MatrixXcd partial_transpose_half(const DensityMatrix& rho) {
    if (rho.sites % 2 != 0) {
        throw ValidationError("partial_transpose_half: odd site count");
    }
    const int half = rho.sites / 2;
    const Eigen::Index da = Eigen::Index{1} << half;
    const Eigen::Index db = Eigen::Index{1} << (rho.sites - half);
    Eigen::MatrixXcd out(da * db, da * db);
    for (Eigen::Index a = 0; a < da; ++a) {
        for (Eigen::Index ap = 0; ap < da; ++ap) {
            for (Eigen::Index b = 0; b < db; ++b) {
                for (Eigen::Index bp = 0; bp < db; ++bp) {
                    out(a * db + b, ap * db + bp) = rho.mat(ap * db + b, a * db + bp);
                }
            }
        }
    }
    return out;
}

PureState random_product_state(int sites, std::mt19937_64& gen) {
    if (sites < 1) {
        throw ValidationError("random_product_state: need at least one site");
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::VectorXcd amps = Eigen::VectorXcd::Ones(1);
    for (int l = 1; l <= sites; ++l) {
        const double cos_theta = 2.0 * uni(gen) - 1.0;
        const double phi = 2.0 * std::numbers::pi * uni(gen);
        const double half_theta = 0.5 * std::acos(cos_theta);
        Eigen::Vector2cd spinor;
        spinor << std::cos(half_theta),
            std::polar(std::sin(half_theta), phi);
        Eigen::VectorXcd next(amps.size() * 2);
        for (Eigen::Index j = 0; j < amps.size(); ++j) {
            next[2 * j] = amps[j] * spinor[0];
            next[2 * j + 1] = amps[j] * spinor[1];
        }
        amps.swap(next);
    }
    PureState psi;
    psi.sites = sites;
    psi.amps = std::move(amps);
    return psi;
}

PureState random_product_state(int sites, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return random_product_state(sites, gen);
}

DensityMatrix random_separable_mixed(int sites, int alpha_max, std::uint64_t seed) {
    if (alpha_max < 1) {
        throw ValidationError("random_separable_mixed: alpha_max must be >= 1");
    }
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // flat Dirichlet via normalized Exp(1) draws
    Eigen::VectorXd weights(alpha_max);
    for (int a = 0; a < alpha_max; ++a) {
        weights[a] = -std::log(1.0 - uni(gen));
    }
    weights /= weights.sum();

    const Eigen::Index dim = Eigen::Index{1} << sites;
    DensityMatrix rho;
    rho.sites = sites;
    rho.mat = Eigen::MatrixXcd::Zero(dim, dim);
    for (int a = 0; a < alpha_max; ++a) {
        const PureState psi = random_product_state(sites, gen);
        rho.mat.noalias() += weights[a] * (psi.amps * psi.amps.adjoint());
    }
    return rho;
}

void check_normalized(const PureState& psi, double tol) {
    const double norm2 = psi.amps.squaredNorm();
    if (std::abs(norm2 - 1.0) > tol) {
        throw ValidationError("state norm^2 deviates from 1 by " +
                              std::to_string(norm2 - 1.0));
    }
}

void check_density_matrix(const DensityMatrix& rho, double herm_tol, double trace_tol,
                          double eig_floor) {
    const double herm = (rho.mat - rho.mat.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol) {
        throw ValidationError("density matrix not Hermitian, max dev " + std::to_string(herm));
    }
    const double tr_dev = std::abs(rho.mat.trace().real() - 1.0) + std::abs(rho.mat.trace().imag());
    if (tr_dev > trace_tol) {
        throw ValidationError("density matrix trace deviates by " + std::to_string(tr_dev));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.mat, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < eig_floor) {
        throw ValidationError("density matrix has eigenvalue " +
                              std::to_string(es.eigenvalues().minCoeff()) +
                              " below the positivity floor");
    }
}

} // namespace qer
