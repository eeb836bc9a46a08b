#include "cryomap/stage.hpp"

#include <algorithm>
#include <cctype>

#include "cryomap/error.hpp"

namespace cryomap {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::array<std::string_view, 6> kStageNames = {"PT1", "PT2", "STL",
                                                         "CLD", "MXC", "AMBIENT"};
constexpr std::array<std::string_view, 6> kStageTokens = {"pt1", "pt2", "stl",
                                                          "cld", "mxc", "ambient"};
constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "t_pt1", "t_pt2", "t_stl", "t_cld", "t_mxc", "p_cond", "p_still", "flow"};
constexpr std::array<std::string_view, kFieldCount> kFieldUnits = {
    "K", "K", "K", "K", "K", "Pa", "Pa", "mol/s"};

void check_power(double watts) {
  if (!std::isfinite(watts) || watts < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "load entries must be finite and non-negative, got " + std::to_string(watts));
  }
}

}  // namespace

std::string_view stage_name(StageId s) { return kStageNames[static_cast<std::size_t>(s)]; }
std::string_view stage_token(StageId s) { return kStageTokens[static_cast<std::size_t>(s)]; }

std::optional<StageId> parse_stage(std::string_view text) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (iequals(text, kStageNames[i])) return static_cast<StageId>(i);
  }
  if (iequals(text, "still")) return StageId::STL;
  return std::nullopt;
}

std::string_view field_name(Field f) { return kFieldNames[index(f)]; }
std::string_view field_unit(Field f) { return kFieldUnits[index(f)]; }

std::optional<Field> parse_field(std::string_view text) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (iequals(text, kFieldNames[i])) return static_cast<Field>(i);
  }
  return std::nullopt;
}

LoadVector::LoadVector(const std::array<double, kStageCount>& watts) {
  for (double w : watts) check_power(w);
  w_ = watts;
}

void LoadVector::set(StageId s, double watts) {
  if (s == StageId::AMBIENT) {
    throw Error(ErrorCode::InvalidArgument, "AMBIENT carries no load");
  }
  check_power(watts);
  w_[index(s)] = watts;
}

LoadVector& LoadVector::operator+=(const LoadVector& other) {
  for (std::size_t i = 0; i < kStageCount; ++i) w_[i] += other.w_[i];
  return *this;
}

LoadVector operator*(double scale, const LoadVector& q) {
  std::array<double, kStageCount> out{};
  for (std::size_t i = 0; i < kStageCount; ++i) out[i] = scale * q.w_[i];
  return LoadVector(out);
}

bool LoadVector::is_zero() const {
  return std::all_of(w_.begin(), w_.end(), [](double w) { return w == 0.0; });
}

bool PlatformState::stage_order_ok() const {
  for (std::size_t i = 0; i + 1 < kStageCount; ++i) {
    if (values[i] < values[i + 1]) return false;
  }
  return true;
}

bool PlatformState::temperatures_valid() const {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0) return false;
  }
  return true;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MISSING_COLUMN";
    case ErrorCode::BadNumber: return "BAD_NUMBER";
    case ErrorCode::BadUnit: return "BAD_UNIT";
    case ErrorCode::DuplicateRecord: return "DUPLICATE_RECORD";
    case ErrorCode::UndeclaredAxisValue: return "UNDECLARED_AXIS_VALUE";
    case ErrorCode::MissingTimestamp: return "MISSING_TIMESTAMP";
    case ErrorCode::SnapCollision: return "SNAP_COLLISION";
    case ErrorCode::EmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::MissingSourceData: return "MISSING_SOURCE_DATA";
    case ErrorCode::InconsistentCoupling: return "INCONSISTENT_COUPLING";
    case ErrorCode::MissingTemperature: return "MISSING_TEMPERATURE";
    case ErrorCode::BadDocument: return "BAD_DOCUMENT";
    case ErrorCode::Io: return "IO";
    case ErrorCode::OutOfDomain: return "OUT_OF_DOMAIN";
    case ErrorCode::InvalidCell: return "INVALID_CELL";
    case ErrorCode::CollapsedAxisMismatch: return "COLLAPSED_AXIS_MISMATCH";
    case ErrorCode::NotBracketed: return "NOT_BRACKETED";
    case ErrorCode::NonMonotoneProfile: return "NON_MONOTONE_PROFILE";
    case ErrorCode::NoSharedNodes: return "NO_SHARED_NODES";
    case ErrorCode::NoValidStart: return "NO_VALID_START";
    case ErrorCode::NoImprovement: return "NO_IMPROVEMENT";
    case ErrorCode::NotConverged: return "NOT_CONVERGED";
    case ErrorCode::SolveFailure: return "SOLVE_FAILURE";
  }
  return "UNKNOWN";
}

}  // namespace cryomap
