#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qer/hilbert.hpp"

namespace qer {

/// W x L grid of fixed random single-site rotations, deterministic from seed.
/// One set is shared across train, test and dynamics images of an experiment.
struct RotationSet {
    int rotations = 0; // W
    int sites = 0;     // L
    std::uint64_t seed = 0;
    std::vector<LocalUnitary> locals; // row-major: rotation i, site l

    const LocalUnitary& local(int rotation, int site) const {
        return locals[static_cast<std::size_t>(rotation) * sites + (site - 1)];
    }
    LocalUnitary& local(int rotation, int site) {
        return locals[static_cast<std::size_t>(rotation) * sites + (site - 1)];
    }
};

/// Haar-distributed U(2): Gram-Schmidt of a complex Ginibre matrix with
/// real-positive normalization (the phase-corrected QR construction).
LocalUnitary sample_cue_local(std::mt19937_64& gen);
RotationSet sample_cue_rotations(int rotations, int sites, std::uint64_t seed);

/// W x D grid of computational-basis outcome probabilities; rows are
/// measurement settings, columns spin configurations.
struct StatImage {
    Eigen::MatrixXd probs; // W x D
    bool exact = true;
    long shots = 0; // 0 when exact

    Eigen::Index rotations() const { return probs.rows(); }
    Eigen::Index dim() const { return probs.cols(); }
};

// In-place single-site rotation kernels (the building blocks of every image).
void apply_local_unitary(Eigen::VectorXcd& amps, const Eigen::Matrix2cd& u, int site,
                         int sites);
void apply_local_unitary(Eigen::MatrixXcd& rho, const Eigen::Matrix2cd& u, int site,
                         int sites);

/// Exact probabilities p_ij = <j| U_i rho U_i^dag |j>. The pure-state path
/// rotates the amplitude vector and never forms a density matrix.
StatImage generate_image(const PureState& psi, const RotationSet& rotations);
StatImage generate_image(const DensityMatrix& rho, const RotationSet& rotations);

/// Replaces each exact row with the frequencies of one multinomial draw of
/// `shots` projective measurements.
StatImage apply_shot_noise(const StatImage& image, long shots, std::uint64_t seed);

/// Applies an independent Haar product rotation (removes any preferred Bloch
/// orientation; entanglement measures are invariant under it).
PureState randomize_orientation(const PureState& psi, std::uint64_t seed);
DensityMatrix randomize_orientation(const DensityMatrix& rho, std::uint64_t seed);

} // namespace qer
