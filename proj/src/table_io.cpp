#include "cryomap/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "cryomap/error.hpp"

namespace cryomap::io {

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view field, std::string_view context) {
  field = trim(field);
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    std::string msg = "unparsable number '" + std::string(field) + "'";
    if (!context.empty()) msg += " (" + std::string(context) + ")";
    throw Error(ErrorCode::BadNumber, msg);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DelimitedText read_delimited(std::istream& in, char delim) {
  DelimitedText t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    auto view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      t.comments.emplace_back(trim(view.substr(1)));
      continue;
    }
    auto cells = split(view, delim);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

}  // namespace cryomap::io
