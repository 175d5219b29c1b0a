#pragma once

#include <string>

#include "qer/hilbert.hpp"

namespace qer {

enum class MeasureKind { Entropy, LogNegativity };

std::string measure_name(MeasureKind kind);
MeasureKind measure_from_name(const std::string& name);

/// Entropy is in nats, log-negativity in bits; the unit travels with the kind.
struct EntanglementValue {
    MeasureKind kind;
    double value;
};

/// Von Neumann entropy of the reduced state of sites 1..L/2.
EntanglementValue half_chain_entropy(const DensityMatrix& rho);
/// Pure-state path via the Gram matrix of the reshaped amplitudes.
EntanglementValue half_chain_entropy(const PureState& psi);

/// log2 of the trace norm of the partial transpose over the first half-chain.
/// Values in (-1e-9, 0) are numerical zeros and clamp to 0; anything lower
/// signals a corrupted input and throws.
EntanglementValue log_negativity(const DensityMatrix& rho);
/// Pure-state path: the trace norm equals the squared sum of Schmidt
/// coefficients, so an SVD of the reshaped amplitudes suffices.
EntanglementValue log_negativity(const PureState& psi);

double measure_value(const PureState& psi, MeasureKind kind);
double measure_value(const DensityMatrix& rho, MeasureKind kind);

} // namespace qer
