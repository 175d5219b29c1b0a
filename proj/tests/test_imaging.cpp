#include <doctest.h>

#include <cmath>

#include "qer/imaging.hpp"
#include "qer/measures.hpp"
#include "qer/reference.hpp"

using namespace qer;

namespace {

PureState haar_state(int sites, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PureState psi;
    psi.sites = sites;
    psi.amps.resize(Eigen::Index{1} << sites);
    for (Eigen::Index j = 0; j < psi.dim(); ++j) {
        psi.amps[j] = Complex(gauss(gen), gauss(gen));
    }
    psi.amps.normalize();
    return psi;
}

RotationSet identity_rotations(int rotations, int sites) {
    RotationSet set;
    set.rotations = rotations;
    set.sites = sites;
    set.seed = 0;
    set.locals.resize(static_cast<std::size_t>(rotations) * sites);
    for (auto& local : set.locals) {
        local.u = Eigen::Matrix2cd::Identity();
    }
    return set;
}

} // namespace

TEST_CASE("cue sampling: unitarity, determinism, first moment") {
    const RotationSet set = sample_cue_rotations(5, 4, 99);
    for (int i = 0; i < set.rotations; ++i) {
        for (int l = 1; l <= set.sites; ++l) {
            const auto& u = set.local(i, l).u;
            CHECK((u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <
                  1e-12);
        }
    }
    const RotationSet again = sample_cue_rotations(5, 4, 99);
    for (std::size_t k = 0; k < set.locals.size(); ++k) {
        CHECK((set.locals[k].u - again.locals[k].u).cwiseAbs().maxCoeff() == 0.0);
    }

    // Haar first moment: E[|u00|^2] = 1/2
    std::mt19937_64 gen(4242);
    double mean = 0.0;
    const int samples = 100000;
    for (int s = 0; s < samples; ++s) {
        mean += std::norm(sample_cue_local(gen).u(0, 0));
    }
    mean /= samples;
    CHECK(std::abs(mean - 0.5) < 0.005);
}

TEST_CASE("images: maximally mixed is flat, basis states are one-hot") {
    const RotationSet set = sample_cue_rotations(5, 4, 7);
    const StatImage flat = generate_image(DensityMatrix::maximally_mixed(4), set);
    CHECK((flat.probs.array() - 1.0 / 16.0).abs().maxCoeff() < 1e-13);

    const StatImage basis =
        generate_image(PureState::basis_state(3, 0), identity_rotations(2, 3));
    CHECK(basis.probs(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(basis.probs.row(0).tail(7).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("image rows are stochastic") {
    const RotationSet set = sample_cue_rotations(5, 6, 17);
    const StatImage image = generate_image(haar_state(6, 3), set);
    CHECK(image.probs.minCoeff() >= 0.0);
    for (Eigen::Index i = 0; i < image.rotations(); ++i) {
        CHECK(std::abs(image.probs.row(i).sum() - 1.0) < 1e-10);
    }
}

TEST_CASE("pure path equals density path equals dense oracle") {
    const RotationSet set = sample_cue_rotations(4, 6, 23);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const PureState psi = haar_state(6, 100 + s);
        const StatImage via_pure = generate_image(psi, set);
        const StatImage via_density = generate_image(DensityMatrix::from_pure(psi), set);
        CHECK((via_pure.probs - via_density.probs).cwiseAbs().maxCoeff() < 1e-12);
        const StatImage via_kron = ref::generate_image(DensityMatrix::from_pure(psi), set);
        CHECK((via_pure.probs - via_kron.probs).cwiseAbs().maxCoeff() < 1e-12);
    }
    // mixed input too
    const DensityMatrix rho = random_separable_mixed(4, 6, 5);
    const RotationSet set4 = sample_cue_rotations(4, 4, 29);
    CHECK((generate_image(rho, set4).probs - ref::generate_image(rho, set4).probs)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("shot noise: single sample, concentration, row sums") {
    const RotationSet set = sample_cue_rotations(3, 4, 31);
    const StatImage exact = generate_image(haar_state(4, 9), set);

    const StatImage one = apply_shot_noise(exact, 1, 77);
    for (Eigen::Index i = 0; i < one.rotations(); ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < one.dim(); ++j) {
            if (one.probs(i, j) == 1.0) {
                ++ones;
            } else {
                CHECK(one.probs(i, j) == 0.0);
            }
        }
        CHECK(ones == 1);
    }
    CHECK_FALSE(one.exact);
    CHECK(one.shots == 1);

    const StatImage many = apply_shot_noise(exact, 10000000, 78);
    CHECK((many.probs - exact.probs).cwiseAbs().maxCoeff() < 2e-3);
    for (Eigen::Index i = 0; i < many.rotations(); ++i) {
        CHECK(std::abs(many.probs.row(i).sum() - 1.0) < 1e-12);
    }

    CHECK_THROWS_AS(apply_shot_noise(one, 5, 1), ValidationError);
    CHECK_THROWS_AS(apply_shot_noise(exact, 0, 1), ValidationError);

    const StatImage again = apply_shot_noise(exact, 1000, 79);
    const StatImage again2 = apply_shot_noise(exact, 1000, 79);
    CHECK((again.probs - again2.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shot noise RMS follows sqrt(p(1-p)/M)") {
    const RotationSet set = sample_cue_rotations(1, 4, 41);
    const StatImage exact = generate_image(haar_state(4, 11), set);
    const long shots = 1000;
    const int trials = 1000;
    Eigen::VectorXd mse = Eigen::VectorXd::Zero(16);
    for (int t = 0; t < trials; ++t) {
        const StatImage noisy =
            apply_shot_noise(exact, shots, 5000 + static_cast<std::uint64_t>(t));
        mse += (noisy.probs.row(0) - exact.probs.row(0)).array().square().matrix().transpose();
    }
    mse /= trials;
    for (Eigen::Index j = 0; j < 16; ++j) {
        const double p = exact.probs(0, j);
        const double expected = p * (1.0 - p) / static_cast<double>(shots);
        if (expected > 1e-8) {
            CHECK(mse[j] / expected > 0.8);
            CHECK(mse[j] / expected < 1.2);
        }
    }
}

TEST_CASE("randomize_orientation: invariance, image change, determinism") {
    const PureState psi = haar_state(6, 55);
    const PureState rotated = randomize_orientation(psi, 13);
    CHECK(std::abs(half_chain_entropy(psi).value - half_chain_entropy(rotated).value) < 1e-9);

    const RotationSet set = sample_cue_rotations(3, 6, 61);
    const StatImage before = generate_image(psi, set);
    const StatImage after = generate_image(rotated, set);
    CHECK((before.probs - after.probs).cwiseAbs().maxCoeff() > 1e-3);

    const PureState rotated2 = randomize_orientation(psi, 13);
    CHECK((rotated.amps - rotated2.amps).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
    const RotationSet set = sample_cue_rotations(2, 4, 3);
    CHECK_THROWS_AS(generate_image(haar_state(6, 1), set), ValidationError);
    CHECK_THROWS_AS(generate_image(DensityMatrix::maximally_mixed(6), set), ValidationError);
    CHECK_THROWS_AS(sample_cue_rotations(0, 4, 1), ValidationError);
}
