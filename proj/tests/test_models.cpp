#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "qer/measures.hpp"
#include "qer/models.hpp"
#include "qer/reference.hpp"

using namespace qer;

namespace {

Eigen::MatrixXcd hamiltonian_via_embeds(const ModelSpec& spec) {
    const int sites = spec.sites;
    const Eigen::Index dim = Eigen::Index{1} << sites;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const double xx_sign = (spec.kind == ModelKind::TfiMinus) ? +1.0 : -1.0;
    for (const auto& [a, b] : chain_bonds(sites)) {
        if (spec.kind == ModelKind::Xx) {
            h += -(ref::embed_site_operator(pauli_x(), a, sites) *
                       ref::embed_site_operator(pauli_x(), b, sites) +
                   ref::embed_site_operator(pauli_y(), a, sites) *
                       ref::embed_site_operator(pauli_y(), b, sites));
        } else {
            h += xx_sign * ref::embed_site_operator(pauli_x(), a, sites) *
                 ref::embed_site_operator(pauli_x(), b, sites);
        }
        if (spec.zz_coupling != 0.0) {
            h += spec.zz_coupling * ref::embed_site_operator(pauli_z(), a, sites) *
                 ref::embed_site_operator(pauli_z(), b, sites);
        }
    }
    for (int i = 1; i <= sites; ++i) {
        const double stagger =
            (spec.kind == ModelKind::Xx) ? ((i % 2 == 0) ? +1.0 : -1.0) : 1.0;
        h += -spec.field * stagger * ref::embed_site_operator(pauli_z(), i, sites);
    }
    return h;
}

} // namespace

TEST_CASE("hamiltonians match the operator-product oracle") {
    for (const ModelKind kind :
         {ModelKind::TfiPlus, ModelKind::TfiMinus, ModelKind::Xx, ModelKind::NiTfiPlus}) {
        for (const int sites : {2, 3, 5}) {
            const ModelSpec spec = model_spec(kind, sites, 1.3);
            const Eigen::MatrixXcd a = build_hamiltonian(spec);
            const Eigen::MatrixXcd b = hamiltonian_via_embeds(spec);
            CAPTURE(model_name(kind));
            CAPTURE(sites);
            CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}

TEST_CASE("two-site ferromagnet at zero field has the single-bond spectrum") {
    const Eigen::MatrixXcd h = build_hamiltonian(model_spec(ModelKind::TfiPlus, 2, 0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    Eigen::VectorXd expected(4);
    expected << -1, -1, 1, 1;
    CHECK((es.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("strong-field ground state is polarized") {
    const PureState gs = ground_state(model_spec(ModelKind::TfiPlus, 6, 50.0));
    CHECK(half_chain_entropy(gs).value < 1e-3);
    CHECK(std::norm(gs.amps[0]) > 0.999); // |up...up> dominates
}

TEST_CASE("non-integrable chain equals ferromagnet plus zz term") {
    const Eigen::MatrixXcd base = build_hamiltonian(model_spec(ModelKind::TfiPlus, 4, 1.1));
    const Eigen::MatrixXcd ni = build_hamiltonian(model_spec(ModelKind::NiTfiPlus, 4, 1.1));
    Eigen::MatrixXcd zz = Eigen::MatrixXcd::Zero(16, 16);
    for (const auto& [a, b] : chain_bonds(4)) {
        zz += 0.2 * ref::embed_site_operator(pauli_z(), a, 4) *
              ref::embed_site_operator(pauli_z(), b, 4);
    }
    CHECK((ni - base - zz).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sparse hamiltonian matches the dense build") {
    for (const ModelKind kind : {ModelKind::TfiPlus, ModelKind::Xx, ModelKind::NiTfiPlus}) {
        const ModelSpec spec = model_spec(kind, 5, 1.7);
        const Eigen::MatrixXcd dense = build_hamiltonian(spec);
        const SparseHamiltonian sparse = sparse_hamiltonian(spec);
        Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(dense.rows(), dense.cols());
        rebuilt.diagonal() = sparse.diag.cast<Complex>();
        for (const auto& hop : sparse.hops) {
            for (Eigen::Index j = 0; j < dense.rows(); ++j) {
                rebuilt(j, static_cast<Eigen::Index>(static_cast<std::uint64_t>(j) ^ hop.mask)) +=
                    hop.amp[j];
            }
        }
        CHECK((dense - rebuilt).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("diagonalize: identity, residuals, spectral reconstruction") {
    const Spectrum id = diagonalize(Eigen::MatrixXcd::Identity(8, 8), 3);
    CHECK((id.energies - Eigen::VectorXd::Ones(8)).cwiseAbs().maxCoeff() < 1e-14);

    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 10, 1.05);
    const Eigen::MatrixXcd h = build_hamiltonian(spec);
    const Spectrum sp = diagonalize(h, spec.sites);
    REQUIRE(sp.size() == 1024);
    double max_residual = 0.0;
    for (Eigen::Index k = 0; k < sp.size(); ++k) {
        max_residual = std::max(
            max_residual,
            (h * sp.states.col(k) - sp.energies[k] * sp.states.col(k)).norm());
    }
    CHECK(max_residual < 1e-9);
    CHECK((sp.states.adjoint() * sp.states - Eigen::MatrixXcd::Identity(1024, 1024))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    const Eigen::MatrixXcd rebuilt =
        sp.states * sp.energies.asDiagonal() * sp.states.adjoint();
    CHECK((rebuilt - h).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::is_sorted(sp.energies.data(), sp.energies.data() + sp.energies.size()));

    Eigen::MatrixXcd skew = Eigen::MatrixXcd::Zero(4, 4);
    skew(0, 1) = 1.0;
    CHECK_THROWS_AS(diagonalize(skew, 2), ValidationError);
}

TEST_CASE("unitary evolution: identity at t=0, stationary eigenstates, energy") {
    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 6, 1.2);
    const Spectrum sp = diagonalize(spec);
    const PureState psi0 = random_product_state(6, 3);

    const PureState at0 = evolve_unitary(psi0, sp, 0.0);
    CHECK((at0.amps - psi0.amps).cwiseAbs().maxCoeff() < 1e-12);

    const PureState eig = sp.eigenstate(17);
    const PureState eig_t = evolve_unitary(eig, sp, 3.7);
    CHECK(std::abs(std::abs(eig.amps.dot(eig_t.amps)) - 1.0) < 1e-10);

    const Eigen::MatrixXcd h = build_hamiltonian(spec);
    const double e0 = (psi0.amps.adjoint() * h * psi0.amps)(0).real();
    for (const double t : {0.5, 5.0, 17.0, 50.0}) {
        const PureState psi_t = evolve_unitary(psi0, sp, t);
        CHECK(std::abs(psi_t.amps.norm() - 1.0) < 1e-10);
        const double e_t = (psi_t.amps.adjoint() * h * psi_t.amps)(0).real();
        CHECK(std::abs(e_t - e0) < 1e-9);
    }
}

TEST_CASE("lindblad generator matches the dense oracle") {
    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 4, 1.1);
    const DensityMatrix rho = random_separable_mixed(4, 3, 5);
    const Eigen::MatrixXcd h = build_hamiltonian(spec);
    // one tiny RK4 step vs the dense right-hand side: first-order agreement
    LindbladConfig cfg;
    cfg.gamma = 0.3;
    cfg.dt = 1e-7;
    cfg.include_hamiltonian = true;
    const DensityMatrix stepped = evolve_lindblad(rho, spec, cfg, cfg.dt);
    const Eigen::MatrixXcd rhs = ref::lindblad_rhs(h, rho.mat, cfg.gamma, true, 4);
    const Eigen::MatrixXcd numeric = (stepped.mat - rho.mat) / cfg.dt;
    CHECK((numeric - rhs).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("lindblad: single-site analytic decay") {
    // d<sigma^z>/dt = -2 gamma <sigma^z> under the X dissipator
    DensityMatrix up;
    up.sites = 1;
    up.mat = Eigen::MatrixXcd::Zero(2, 2);
    up.mat(0, 0) = 1.0;
    ModelSpec spec = model_spec(ModelKind::TfiPlus, 2, 0.0);
    spec.sites = 1; // single site; validate() is bypassed intentionally
    LindbladConfig cfg;
    cfg.gamma = 0.1;
    cfg.include_hamiltonian = false;
    for (const double t : {1.0, 5.0, 10.0}) {
        const DensityMatrix rho_t = evolve_lindblad(up, spec, cfg, t);
        const double sz = (rho_t.mat(0, 0) - rho_t.mat(1, 1)).real();
        CHECK(std::abs(sz - std::exp(-2.0 * cfg.gamma * t)) < 1e-6);
    }
}

TEST_CASE("lindblad: gamma=0 reduces to unitary evolution") {
    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 4, 1.3);
    const PureState psi0 = random_product_state(4, 11);
    const Spectrum sp = diagonalize(spec);
    const PureState exact = evolve_unitary(psi0, sp, 2.0);
    LindbladConfig cfg;
    cfg.gamma = 0.0;
    cfg.dt = 0.002;
    const DensityMatrix evolved =
        evolve_lindblad(DensityMatrix::from_pure(psi0), spec, cfg, 2.0);
    const double fidelity = (exact.amps.adjoint() * evolved.mat * exact.amps)(0).real();
    CHECK(std::abs(fidelity - 1.0) < 1e-7);
}

TEST_CASE("lindblad: dephasing fixed point is maximally mixed for polarized input") {
    DensityMatrix up3;
    up3.sites = 3;
    up3.mat = Eigen::MatrixXcd::Zero(8, 8);
    up3.mat(0, 0) = 1.0;
    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 3, 0.0);
    LindbladConfig cfg;
    cfg.gamma = 0.1;
    cfg.dt = 0.1;
    cfg.include_hamiltonian = false;
    const DensityMatrix late = evolve_lindblad(up3, spec, cfg, 1000.0);
    CHECK((late.mat - Eigen::MatrixXcd::Identity(8, 8) / 8.0).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("lindblad: trace, hermiticity, positivity along a trajectory") {
    const ModelSpec spec = model_spec(ModelKind::TfiPlus, 6, 1.05);
    const DensityMatrix rho0 = DensityMatrix::from_pure(random_product_state(6, 21));
    LindbladConfig cfg;
    cfg.gamma = 0.05;
    cfg.dt = 0.01;
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) {
        times.push_back(0.25 * k);
    }
    const auto path = evolve_lindblad_path(rho0, spec, cfg, times);
    for (const auto& rho : path) {
        CHECK(std::abs(rho.mat.trace().real() - 1.0) < 1e-8);
        CHECK((rho.mat - rho.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.mat, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("lindblad: step-halving convergence") {
    // dissipative-only generator at the default step
    DensityMatrix rho0 = DensityMatrix::from_pure(random_product_state(4, 33));
    ModelSpec spec = model_spec(ModelKind::TfiPlus, 4, 1.1);
    LindbladConfig coarse;
    coarse.gamma = 0.1;
    coarse.dt = lindblad_default_dt(coarse.gamma);
    coarse.include_hamiltonian = false;
    LindbladConfig fine = coarse;
    fine.dt = coarse.dt / 2.0;
    const DensityMatrix a = evolve_lindblad(rho0, spec, coarse, 10.0);
    const DensityMatrix b = evolve_lindblad(rho0, spec, fine, 10.0);
    CHECK((a.mat - b.mat).cwiseAbs().maxCoeff() < 1e-7);

    // with the hamiltonian on, the error contracts by ~2^4 per halving
    LindbladConfig h1;
    h1.gamma = 0.05;
    h1.dt = 0.02;
    LindbladConfig h2 = h1;
    h2.dt = 0.01;
    LindbladConfig h4 = h1;
    h4.dt = 0.005;
    const DensityMatrix r1 = evolve_lindblad(rho0, spec, h1, 2.0);
    const DensityMatrix r2 = evolve_lindblad(rho0, spec, h2, 2.0);
    const DensityMatrix r4 = evolve_lindblad(rho0, spec, h4, 2.0);
    const double d12 = (r1.mat - r2.mat).cwiseAbs().maxCoeff();
    const double d24 = (r2.mat - r4.mat).cwiseAbs().maxCoeff();
    CHECK(d12 / d24 > 10.0); // 4th order would give 16
}

TEST_CASE("ferromagnet ground-state entropy decreases with field") {
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
        const double h = 1.01 + (4.0 - 1.01) * k / 19.0;
        const double s = half_chain_entropy(ground_state(model_spec(ModelKind::TfiPlus, 10, h))).value;
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("staggered-field chain approaches the Neel state at large field") {
    // second-order perturbation theory gives S ~ 2 a^2 |ln a^2| with
    // a = 1/(2h) per cut bond; ~2e-3 at h=50 with two bonds crossing the cut
    const PureState gs = ground_state(model_spec(ModelKind::Xx, 10, 50.0));
    CHECK(half_chain_entropy(gs).value < 2.5e-3);
    const PureState gs100 = ground_state(model_spec(ModelKind::Xx, 10, 100.0));
    CHECK(half_chain_entropy(gs100).value < 1e-3);
    // Neel configuration: alternating bits starting with down at site 1
    // (field coefficient is +h sigma^z on odd sites)
    double p_neel = 0.0;
    for (Eigen::Index j = 0; j < gs100.dim(); ++j) {
        bool neel = true;
        for (int site = 1; site <= 10; ++site) {
            const int want = (site % 2 == 1) ? -1 : +1;
            if (spin_sign(static_cast<std::uint64_t>(j), 10, site) != want) {
                neel = false;
                break;
            }
        }
        if (neel) {
            p_neel += std::norm(gs100.amps[j]);
        }
    }
    CHECK(p_neel > 0.999);
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(model_spec(ModelKind::TfiPlus, 1, 1.0), ValidationError);
    ModelSpec bad = model_spec(ModelKind::TfiPlus, 4, 1.0);
    bad.zz_coupling = 0.1;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    CHECK(model_from_name(model_name(ModelKind::NiTfiPlus)) == ModelKind::NiTfiPlus);
}
