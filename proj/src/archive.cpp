#include "cryomap/archive.hpp"

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "cryomap/error.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

constexpr const char* kFormat = "cryomap-map-archive";
constexpr int kVersion = 1;

nlohmann::ordered_json grid_digest(const GridIndex& g) {
  nlohmann::ordered_json axes = nlohmann::ordered_json::object();
  for (StageId s : kStages) axes[std::string(stage_name(s))] = g.axis(s);
  return {{"axes_W", axes},
          {"node_count", g.node_count()},
          {"cell_count", g.cell_count()},
          {"valid_cell_count", g.valid_cell_count()}};
}

std::string hash_input(const std::string& metadata, const std::string& table,
                       const nlohmann::ordered_json& digest) {
  return metadata + '\x1e' + table + '\x1e' + digest.dump();
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string archive_to_string(const CapacityMap& m) {
  const std::string metadata = serialize_metadata(m.dataset());
  const std::string table = serialize_table(m.dataset());
  const auto digest = grid_digest(m.grid());
  nlohmann::ordered_json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["content_hash"] = "sha256:" + sha256_hex(hash_input(metadata, table, digest));
  doc["grid"] = digest;
  doc["metadata"] = metadata;
  doc["table"] = table;
  return doc.dump(2) + "\n";
}

CapacityMap archive_from_string(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("map archive is not valid JSON: ") + e.what());
  }
  std::string metadata, table, hash;
  nlohmann::ordered_json digest;
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::BadDocument, "not a map archive");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::BadDocument, "unsupported map archive version");
    }
    metadata = doc.at("metadata").get<std::string>();
    table = doc.at("table").get<std::string>();
    hash = doc.at("content_hash").get<std::string>();
    digest = doc.at("grid");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("malformed map archive: ") + e.what());
  }
  if (hash != "sha256:" + sha256_hex(hash_input(metadata, table, digest))) {
    throw Error(ErrorCode::BadDocument, "map archive content hash mismatch");
  }
  CapacityMap m = CapacityMap::build(parse_dataset(table, metadata));
  if (grid_digest(m.grid()) != digest) {
    throw Error(ErrorCode::BadDocument, "map archive grid digest does not match its table");
  }
  return m;
}

void save_archive(const CapacityMap& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, archive_to_string(m));
}

CapacityMap load_archive(const std::filesystem::path& path) {
  return archive_from_string(io::read_file(path));
}

}  // namespace cryomap
