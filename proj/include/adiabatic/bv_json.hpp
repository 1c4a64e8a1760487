#pragma once

#include "adiabatic/spectral_calculus.hpp"

#include <nlohmann/json.hpp>

#include <string_view>

namespace adiabatic {

/// Reads a BVFunction from
///   {"jumps": [{"at": E, "left": v, "right": v, "below": v?}],
///    "continuous": "zero" | {"builtin": "fermi_dirac", "mu": m, "beta": b}
///                 | {"builtin": "constant", "value": c} | {"table": [[x, y], ...]},
///    "at_infinity": v, "variation": v?}
/// Unknown keys are rejected with std::invalid_argument.
BVFunction bv_function_from_json(const nlohmann::json& j);
BVFunction parse_bv_function(std::string_view text);

} // namespace adiabatic
