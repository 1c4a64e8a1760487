#pragma once

#include "adiabatic/operator_core.hpp"

#include <cstdint>
#include <random>

namespace adiabatic {

using Rng = std::mt19937_64;

/// GUE-style Hermitian matrix rescaled to the given operator norm.
HermitianOperator random_hermitian(Index dim, Rng& rng, double norm = 1.0);

/// Haar-distributed unitary (QR of a complex Ginibre matrix with phase fix).
ComplexMatrix random_unitary(Index dim, Rng& rng);

/// Unit vector with i.i.d. complex Gaussian components.
ComplexVector random_unit_vector(Index dim, Rng& rng);

} // namespace adiabatic
