#pragma once

#include <string_view>

namespace cryomap::units {

enum class Quantity { Power, Temperature, Pressure, Flow };

/// Accepted column unit tokens: W, mW, uW, nW, K, mK, Pa, mbar, mol_s, mmol_s.
bool is_accepted(std::string_view token);

/// Quantity a token measures; throws BadUnit for unknown tokens.
Quantity quantity_of(std::string_view token);

/// Converts a value expressed in `token` to SI. Sub-unit prefixes divide by
/// an exact power of ten so that e.g. 100 mW maps to the double nearest 0.1 W.
double to_si(double value, std::string_view token);

/// Inverse of to_si.
double from_si(double value, std::string_view token);

}  // namespace cryomap::units
