#include "qer/reference.hpp"

namespace qer::ref {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::MatrixXcd embed_site_operator(const Eigen::Matrix2cd& op, int site, int sites) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int l = 1; l <= sites; ++l) {
        out = kron(out, l == site ? Eigen::MatrixXcd(op)
                                  : Eigen::MatrixXcd(Eigen::Matrix2cd::Identity()));
    }
    return out;
}

Eigen::MatrixXcd product_unitary(const RotationSet& set, int rotation) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int l = 1; l <= set.sites; ++l) {
        out = kron(out, Eigen::MatrixXcd(set.local(rotation, l).u));
    }
    return out;
}

DensityMatrix partial_trace_half(const DensityMatrix& rho) {
    if (rho.sites % 2 != 0) {
        throw ValidationError("ref::partial_trace_half: odd site count");
    }
    const int half = rho.sites / 2;
    const Eigen::Index da = Eigen::Index{1} << half;
    DensityMatrix red;
    red.sites = half;
    red.mat = Eigen::MatrixXcd::Zero(da, da);
    const Eigen::Index dim = rho.dim();
    // brute force: scan every matrix element, keep those whose second-half
    // bits coincide, bucket by the first-half bits
    const std::uint64_t low_mask = (std::uint64_t{1} << (rho.sites - half)) - 1;
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index k = 0; k < dim; ++k) {
            if ((static_cast<std::uint64_t>(j) & low_mask) ==
                (static_cast<std::uint64_t>(k) & low_mask)) {
                red.mat(j >> (rho.sites - half), k >> (rho.sites - half)) += rho.mat(j, k);
            }
        }
    }
    return red;
}

Eigen::MatrixXcd partial_transpose_half(const DensityMatrix& rho) {
    if (rho.sites % 2 != 0) {
        throw ValidationError("ref::partial_transpose_half: odd site count");
    }
    const int half = rho.sites / 2;
    const int low_bits = rho.sites - half;
    const std::uint64_t low_mask = (std::uint64_t{1} << low_bits) - 1;
    const Eigen::Index dim = rho.dim();
    Eigen::MatrixXcd out(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index k = 0; k < dim; ++k) {
            const std::uint64_t ju = static_cast<std::uint64_t>(j);
            const std::uint64_t ku = static_cast<std::uint64_t>(k);
            const std::uint64_t jt = (ku & ~low_mask) | (ju & low_mask);
            const std::uint64_t kt = (ju & ~low_mask) | (ku & low_mask);
            out(j, k) = rho.mat(static_cast<Eigen::Index>(jt), static_cast<Eigen::Index>(kt));
        }
    }
    return out;
}

StatImage generate_image(const DensityMatrix& rho, const RotationSet& rotations) {
    StatImage image;
    image.exact = true;
    image.shots = 0;
    image.probs.resize(rotations.rotations, rho.dim());
    for (int i = 0; i < rotations.rotations; ++i) {
        const Eigen::MatrixXcd u = product_unitary(rotations, i);
        const Eigen::MatrixXcd rotated = u * rho.mat * u.adjoint();
        image.probs.row(i) = rotated.diagonal().real().transpose();
    }
    return image;
}

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& hamiltonian,
                              const Eigen::MatrixXcd& rho, double gamma,
                              bool include_hamiltonian, int sites) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    if (include_hamiltonian) {
        out += Complex(0, -1) * (hamiltonian * rho - rho * hamiltonian);
    }
    if (gamma > 0.0) {
        for (int i = 1; i <= sites; ++i) {
            const Eigen::MatrixXcd x = embed_site_operator(pauli_x(), i, sites);
            out += gamma * (x * rho * x - rho);
        }
    }
    return out;
}

} // namespace qer::ref
