#pragma once

#include <filesystem>
#include <string>

#include "cryomap/capacity_map.hpp"

namespace cryomap {

/// Map archive: a JSON document embedding the SI data table, the metadata
/// document, a grid digest, and a SHA-256 hash over all three.
std::string archive_to_string(const CapacityMap& m);
CapacityMap archive_from_string(const std::string& text);

void save_archive(const CapacityMap& m, const std::filesystem::path& path);
/// Errors: Io, BadDocument (malformed, hash or digest mismatch), plus the
/// dataset parse errors.
CapacityMap load_archive(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

}  // namespace cryomap
