#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qer/hilbert.hpp"

namespace qer {

enum class ModelKind { TfiPlus, TfiMinus, Xx, NiTfiPlus };

std::string model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::TfiPlus;
    int sites = 0;
    double field = 0.0;       // h, in units of the coupling
    double zz_coupling = 0.0; // 0.2 for the non-integrable chain, else 0
};

/// Canonical spec for a model kind; fills the zz term for NiTfiPlus.
ModelSpec model_spec(ModelKind kind, int sites, double field);
void validate(const ModelSpec& spec);

/// Nearest-neighbor bonds, periodic: (1,2)...(L-1,L) plus the wrap bond (L,1)
/// for L >= 3. At L = 2 the wrap bond would duplicate the single physical
/// bond, so it is omitted.
std::vector<std::pair<int, int>> chain_bonds(int sites);

Eigen::MatrixXcd build_hamiltonian(const ModelSpec& spec);

/// Bit-indexed form of the (real) chain Hamiltonians: a diagonal plus hopping
/// terms H[j, j^mask] = amp[j]. Drives the time-evolution kernels.
struct SparseHamiltonian {
    int sites = 0;
    Eigen::VectorXd diag;
    struct HopTerm {
        std::uint64_t mask;
        Eigen::VectorXd amp; // amp[j] = <j|H|j^mask>
    };
    std::vector<HopTerm> hops;
};
SparseHamiltonian sparse_hamiltonian(const ModelSpec& spec);

struct Spectrum {
    int sites = 0;
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXcd states;   // column k = k-th eigenvector, phase-fixed

    Eigen::Index size() const { return energies.size(); }
    PureState eigenstate(Eigen::Index k) const;
};

/// Full spectrum with a deterministic phase convention: the largest-magnitude
/// amplitude of each eigenvector is made real positive.
Spectrum diagonalize(const Eigen::MatrixXcd& hamiltonian, int sites);
Spectrum diagonalize(const ModelSpec& spec);

PureState ground_state(const ModelSpec& spec);

/// |psi(t)> = sum_k exp(-i E_k t) <k|psi(0)> |k>.
PureState evolve_unitary(const PureState& initial, const Spectrum& spectrum, double t);

struct LindbladConfig {
    double gamma = 0.0;
    double dt = 0.0; // 0 picks the default step 0.01 / max(1, 10*gamma)
    bool include_hamiltonian = true;
};
double lindblad_default_dt(double gamma);

/// Fixed-step classical RK4 integration of
///   d rho/dt = -i [H, rho] + gamma sum_i (X_i rho X_i - rho),
/// with per-step symmetrization. Throws NumericalError when the trace drifts
/// by more than 1e-6 (step size too large).
DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const ModelSpec& spec,
                              const LindbladConfig& cfg, double t);

/// Same trajectory, sampled at the given ascending times (single pass).
std::vector<DensityMatrix> evolve_lindblad_path(const DensityMatrix& rho0,
                                                const ModelSpec& spec,
                                                const LindbladConfig& cfg,
                                                const std::vector<double>& times);

} // namespace qer
