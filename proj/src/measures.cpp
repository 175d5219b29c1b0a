#include "qer/measures.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qer {

namespace {

constexpr double kEigenvalueFloor = 1e-14;

double entropy_from_eigenvalues(const Eigen::VectorXd& lambda) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > kEigenvalueFloor) {
            s -= lambda[i] * std::log(lambda[i]);
        }
    }
    return s;
}

double clamp_negativity(double value) {
    if (value >= 0.0) {
        return value;
    }
    if (value > -1e-9) {
        return 0.0;
    }
    throw ValidationError("log-negativity " + std::to_string(value) +
                          " below the numerical-zero window; corrupted input");
}

// amplitudes of the first half index the rows under the basis convention
Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
reshaped_half(const PureState& psi) {
    if (psi.sites % 2 != 0) {
        throw ValidationError("half-chain measure: odd site count");
    }
    const Eigen::Index da = Eigen::Index{1} << (psi.sites / 2);
    return {psi.amps.data(), da, psi.dim() / da};
}

} // namespace

std::string measure_name(MeasureKind kind) {
    return kind == MeasureKind::Entropy ? "entropy" : "log-negativity";
}

MeasureKind measure_from_name(const std::string& name) {
    if (name == "entropy") return MeasureKind::Entropy;
    if (name == "log-negativity") return MeasureKind::LogNegativity;
    throw ValidationError("unknown measure: " + name);
}

EntanglementValue half_chain_entropy(const DensityMatrix& rho) {
    const DensityMatrix reduced = partial_trace_half(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(reduced.mat, Eigen::EigenvaluesOnly);
    return {MeasureKind::Entropy, entropy_from_eigenvalues(solver.eigenvalues())};
}

EntanglementValue half_chain_entropy(const PureState& psi) {
    const auto block = reshaped_half(psi);
    const Eigen::MatrixXcd gram = block * block.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram, Eigen::EigenvaluesOnly);
    return {MeasureKind::Entropy, entropy_from_eigenvalues(solver.eigenvalues())};
}

EntanglementValue log_negativity(const DensityMatrix& rho) {
    const Eigen::MatrixXcd pt = partial_transpose_half(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(pt, Eigen::EigenvaluesOnly);
    const double trace_norm = solver.eigenvalues().cwiseAbs().sum();
    return {MeasureKind::LogNegativity, clamp_negativity(std::log2(trace_norm))};
}

EntanglementValue log_negativity(const PureState& psi) {
    const auto block = reshaped_half(psi);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
    const double schmidt_sum = svd.singularValues().sum();
    return {MeasureKind::LogNegativity, clamp_negativity(2.0 * std::log2(schmidt_sum))};
}

double measure_value(const PureState& psi, MeasureKind kind) {
    return kind == MeasureKind::Entropy ? half_chain_entropy(psi).value
                                        : log_negativity(psi).value;
}

double measure_value(const DensityMatrix& rho, MeasureKind kind) {
    return kind == MeasureKind::Entropy ? half_chain_entropy(rho).value
                                        : log_negativity(rho).value;
}

} // namespace qer
