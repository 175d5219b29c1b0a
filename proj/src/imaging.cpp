#include "qer/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace qer {

LocalUnitary sample_cue_local(std::mt19937_64& gen) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector2cd c0, c1;
    for (int r = 0; r < 2; ++r) {
        c0[r] = Complex(gauss(gen), gauss(gen));
        c1[r] = Complex(gauss(gen), gauss(gen));
    }
    c0 /= c0.norm();
    c1 -= c0.dot(c1) * c0; // c0.dot conjugates the left argument
    c1 /= c1.norm();
    LocalUnitary u;
    u.u.col(0) = c0;
    u.u.col(1) = c1;
    return u;
}

RotationSet sample_cue_rotations(int rotations, int sites, std::uint64_t seed) {
    if (rotations < 1 || sites < 1) {
        throw ValidationError("rotation set needs at least one rotation and one site");
    }
    RotationSet set;
    set.rotations = rotations;
    set.sites = sites;
    set.seed = seed;
    set.locals.resize(static_cast<std::size_t>(rotations) * sites);
    std::mt19937_64 gen(seed);
    for (int i = 0; i < rotations; ++i) {
        for (int l = 1; l <= sites; ++l) {
            set.local(i, l) = sample_cue_local(gen);
        }
    }
    return set;
}

void apply_local_unitary(Eigen::VectorXcd& amps, const Eigen::Matrix2cd& u, int site,
                         int sites) {
    const std::uint64_t m = site_mask(sites, site);
    const std::uint64_t dim = static_cast<std::uint64_t>(amps.size());
    Complex* a = amps.data();
    const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    for (std::uint64_t base = 0; base < dim; base += 2 * m) {
        for (std::uint64_t off = 0; off < m; ++off) {
            const std::uint64_t j0 = base + off; // bit clear = spin up = index 0
            const std::uint64_t j1 = j0 + m;
            const Complex x0 = a[j0], x1 = a[j1];
            a[j0] = u00 * x0 + u01 * x1;
            a[j1] = u10 * x0 + u11 * x1;
        }
    }
}

void apply_local_unitary(Eigen::MatrixXcd& rho, const Eigen::Matrix2cd& u, int site,
                         int sites) {
    const Eigen::Index dim = rho.rows();
    const std::uint64_t m = site_mask(sites, site);
    // left multiply: mixes row pairs within each column
    const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    for (Eigen::Index k = 0; k < dim; ++k) {
        Complex* col = rho.data() + k * dim;
        for (std::uint64_t base = 0; base < static_cast<std::uint64_t>(dim); base += 2 * m) {
            for (std::uint64_t off = 0; off < m; ++off) {
                const std::uint64_t j0 = base + off;
                const std::uint64_t j1 = j0 + m;
                const Complex x0 = col[j0], x1 = col[j1];
                col[j0] = u00 * x0 + u01 * x1;
                col[j1] = u10 * x0 + u11 * x1;
            }
        }
    }
    // right multiply by u^dag: mixes column pairs
    const Complex c00 = std::conj(u00), c01 = std::conj(u01);
    const Complex c10 = std::conj(u10), c11 = std::conj(u11);
    for (std::uint64_t base = 0; base < static_cast<std::uint64_t>(dim); base += 2 * m) {
        for (std::uint64_t off = 0; off < m; ++off) {
            const std::uint64_t k0 = base + off;
            const std::uint64_t k1 = k0 + m;
            Complex* colA = rho.data() + k0 * dim;
            Complex* colB = rho.data() + k1 * dim;
            for (Eigen::Index j = 0; j < dim; ++j) {
                const Complex x0 = colA[j], x1 = colB[j];
                // (rho u^dag)[:,k0] = rho[:,k0] conj(u00) + rho[:,k1] conj(u01)
                colA[j] = x0 * c00 + x1 * c01;
                colB[j] = x0 * c10 + x1 * c11;
            }
        }
    }
}

StatImage generate_image(const PureState& psi, const RotationSet& rotations) {
    if (psi.sites != rotations.sites) {
        throw ValidationError("generate_image: state/rotation site mismatch");
    }
    StatImage image;
    image.exact = true;
    image.shots = 0;
    image.probs.resize(rotations.rotations, psi.dim());
    for (int i = 0; i < rotations.rotations; ++i) {
        Eigen::VectorXcd rotated = psi.amps;
        for (int l = 1; l <= psi.sites; ++l) {
            apply_local_unitary(rotated, rotations.local(i, l).u, l, psi.sites);
        }
        image.probs.row(i) = rotated.cwiseAbs2().transpose();
    }
    return image;
}

StatImage generate_image(const DensityMatrix& rho, const RotationSet& rotations) {
    if (rho.sites != rotations.sites) {
        throw ValidationError("generate_image: state/rotation site mismatch");
    }
    StatImage image;
    image.exact = true;
    image.shots = 0;
    image.probs.resize(rotations.rotations, rho.dim());
    for (int i = 0; i < rotations.rotations; ++i) {
        Eigen::MatrixXcd rotated = rho.mat;
        for (int l = 1; l <= rho.sites; ++l) {
            apply_local_unitary(rotated, rotations.local(i, l).u, l, rho.sites);
        }
        image.probs.row(i) = rotated.diagonal().real().transpose();
    }
    return image;
}

StatImage apply_shot_noise(const StatImage& image, long shots, std::uint64_t seed) {
    if (!image.exact) {
        throw ValidationError("apply_shot_noise: input must be an exact image");
    }
    if (shots < 1) {
        throw ValidationError("apply_shot_noise: need at least one measurement");
    }
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    StatImage noisy;
    noisy.exact = false;
    noisy.shots = shots;
    noisy.probs = Eigen::MatrixXd::Zero(image.probs.rows(), image.probs.cols());
    const Eigen::Index dim = image.probs.cols();
    std::vector<double> cdf(static_cast<std::size_t>(dim));
    std::vector<long> counts(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < image.probs.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
            acc += image.probs(i, j);
            cdf[static_cast<std::size_t>(j)] = acc;
        }
        std::fill(counts.begin(), counts.end(), 0L);
        const double total = cdf.back();
        for (long s = 0; s < shots; ++s) {
            const double r = uni(gen) * total;
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
            const auto j = std::min<std::size_t>(
                static_cast<std::size_t>(it - cdf.begin()), static_cast<std::size_t>(dim - 1));
            ++counts[j];
        }
        for (Eigen::Index j = 0; j < dim; ++j) {
            noisy.probs(i, j) = static_cast<double>(counts[static_cast<std::size_t>(j)]) /
                                static_cast<double>(shots);
        }
    }
    return noisy;
}

PureState randomize_orientation(const PureState& psi, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    PureState out = psi;
    for (int l = 1; l <= psi.sites; ++l) {
        apply_local_unitary(out.amps, sample_cue_local(gen).u, l, psi.sites);
    }
    return out;
}

DensityMatrix randomize_orientation(const DensityMatrix& rho, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    DensityMatrix out = rho;
    for (int l = 1; l <= rho.sites; ++l) {
        apply_local_unitary(out.mat, sample_cue_local(gen).u, l, rho.sites);
    }
    return out;
}

} // namespace qer
