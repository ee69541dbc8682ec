#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "haluj/core.hpp"

namespace haluj::jsonl {

namespace fs = std::filesystem;

/// Parse one JSONL document per non-empty line. Line numbers in error
/// messages are 1-based.
inline std::vector<json> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(Errc::io_error, path.string() + ":" + std::to_string(lineno) + ": bad JSON");
    out.push_back(std::move(j));
  }
  return out;
}

template <typename T>
std::vector<T> read_records(const fs::path& path) {
  std::vector<T> out;
  for (const auto& j : read_lines(path)) out.push_back(j.get<T>());
  return out;
}

/// Serialize with deterministic key order (nlohmann objects iterate sorted).
inline std::string dump_line(const json& j) { return j.dump(); }

/// Write the full content then atomically rename over the destination, so a
/// crash never leaves a truncated file and reruns are byte-comparable.
inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(Errc::io_error, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename T>
void write_records(const fs::path& path, const std::vector<T>& records) {
  std::ostringstream buf;
  for (const auto& r : records) {
    json j = r;
    buf << dump_line(j) << '\n';
  }
  atomic_write(path, buf.str());
}

inline void write_json_lines(const fs::path& path, const std::vector<json>& lines) {
  std::ostringstream buf;
  for (const auto& j : lines) buf << dump_line(j) << '\n';
  atomic_write(path, buf.str());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace haluj::jsonl
