#include "cryomap/units.hpp"

#include <array>
#include <string>

#include "cryomap/error.hpp"

namespace cryomap::units {

namespace {

struct UnitDef {
  std::string_view token;
  Quantity quantity;
  double divisor;     // SI = value / divisor
  double multiplier;  // SI = value * multiplier
};

constexpr std::array<UnitDef, 10> kUnits = {{
    {"W", Quantity::Power, 1.0, 1.0},
    {"mW", Quantity::Power, 1e3, 1.0},
    {"uW", Quantity::Power, 1e6, 1.0},
    {"nW", Quantity::Power, 1e9, 1.0},
    {"K", Quantity::Temperature, 1.0, 1.0},
    {"mK", Quantity::Temperature, 1e3, 1.0},
    {"Pa", Quantity::Pressure, 1.0, 1.0},
    {"mbar", Quantity::Pressure, 1.0, 100.0},
    {"mol_s", Quantity::Flow, 1.0, 1.0},
    {"mmol_s", Quantity::Flow, 1e3, 1.0},
}};

const UnitDef& lookup(std::string_view token) {
  for (const auto& u : kUnits) {
    if (u.token == token) return u;
  }
  throw Error(ErrorCode::BadUnit, "unit token '" + std::string(token) + "' is not accepted");
}

}  // namespace

bool is_accepted(std::string_view token) {
  for (const auto& u : kUnits) {
    if (u.token == token) return true;
  }
  return false;
}

Quantity quantity_of(std::string_view token) { return lookup(token).quantity; }

double to_si(double value, std::string_view token) {
  const auto& u = lookup(token);
  if (u.multiplier != 1.0) return value * u.multiplier;
  return u.divisor == 1.0 ? value : value / u.divisor;
}

double from_si(double value, std::string_view token) {
  const auto& u = lookup(token);
  if (u.multiplier != 1.0) return value / u.multiplier;
  return u.divisor == 1.0 ? value : value * u.divisor;
}

}  // namespace cryomap::units
