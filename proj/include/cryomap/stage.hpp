#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace cryomap {

/// Refrigerator stages, warm to cold. AMBIENT is only a hot endpoint for
/// conduction links and never a map axis.
enum class StageId : std::uint8_t { PT1, PT2, STL, CLD, MXC, AMBIENT };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<StageId, kStageCount> kStages = {
    StageId::PT1, StageId::PT2, StageId::STL, StageId::CLD, StageId::MXC};

/// Absolute per-axis tolerance used to snap loads onto grid nodes (W).
inline constexpr double kSnapTolerance = 1e-6;

constexpr std::size_t index(StageId s) { return static_cast<std::size_t>(s); }

/// Warm-to-cold rank; AMBIENT is warmest (rank 0), MXC coldest.
constexpr int warmth_rank(StageId s) {
  return s == StageId::AMBIENT ? 0 : static_cast<int>(s) + 1;
}

constexpr bool warmer_than(StageId a, StageId b) {
  return warmth_rank(a) < warmth_rank(b);
}

std::string_view stage_name(StageId s);   // "PT1"
std::string_view stage_token(StageId s);  // "pt1"
std::optional<StageId> parse_stage(std::string_view text);  // case-insensitive

/// Heater or dissipated power per stage in watts. Entries are finite and
/// non-negative; mutators reject anything else.
class LoadVector {
 public:
  LoadVector() = default;
  explicit LoadVector(const std::array<double, kStageCount>& watts);

  double operator[](StageId s) const { return w_[index(s)]; }
  void set(StageId s, double watts);
  const std::array<double, kStageCount>& values() const { return w_; }

  LoadVector& operator+=(const LoadVector& other);
  friend LoadVector operator+(LoadVector a, const LoadVector& b) { return a += b; }
  friend LoadVector operator*(double scale, const LoadVector& q);

  bool is_zero() const;
  bool operator==(const LoadVector&) const = default;

 private:
  std::array<double, kStageCount> w_{};
};

/// Observable platform quantities. The first five are stage temperatures.
enum class Field : std::uint8_t { T_PT1, T_PT2, T_STL, T_CLD, T_MXC, P_COND, P_STILL, FLOW };
inline constexpr std::size_t kFieldCount = 8;
inline constexpr std::array<Field, kFieldCount> kFields = {
    Field::T_PT1, Field::T_PT2, Field::T_STL, Field::T_CLD,
    Field::T_MXC, Field::P_COND, Field::P_STILL, Field::FLOW};

constexpr std::size_t index(Field f) { return static_cast<std::size_t>(f); }
constexpr Field temperature_field(StageId s) { return static_cast<Field>(index(s)); }
constexpr bool is_temperature(Field f) { return index(f) < kStageCount; }
constexpr StageId field_stage(Field f) { return static_cast<StageId>(index(f)); }

std::string_view field_name(Field f);  // "t_pt1", "p_cond", "p_still", "flow"
std::string_view field_unit(Field f);  // SI unit label
std::optional<Field> parse_field(std::string_view text);

/// Stage temperatures (K), condenser and still line pressures (Pa) and
/// circulation flow (mol/s). Circulation fields are NaN when a dataset does
/// not carry them.
struct PlatformState {
  std::array<double, kFieldCount> values{
      0, 0, 0, 0, 0, std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};

  double operator[](Field f) const { return values[index(f)]; }
  double& operator[](Field f) { return values[index(f)]; }
  double temperature(StageId s) const { return values[index(s)]; }
  void set_temperature(StageId s, double kelvin) { values[index(s)] = kelvin; }
  double p_condenser() const { return (*this)[Field::P_COND]; }
  double p_still() const { return (*this)[Field::P_STILL]; }
  double flow() const { return (*this)[Field::FLOW]; }

  /// T(PT1) >= T(PT2) >= ... >= T(MXC). Real data may transiently violate
  /// this, so callers treat a false result as a warning.
  bool stage_order_ok() const;
  bool temperatures_valid() const;
};

}  // namespace cryomap
