#include "prmkit/jsonl.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "prmkit/errors.hpp"

namespace prmkit {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IOFailure("read failed: " + path.string());
  return ss.str();
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw IOFailure(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (in.bad()) throw IOFailure("read failed: " + path.string());
  return rows;
}

void write_text_atomic(const fs::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IOFailure("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IOFailure("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IOFailure("cannot move output into place: " + path.string());
  }
}

std::string dump_line(const nlohmann::json& doc) {
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_jsonl_atomic(const fs::path& path, std::span<const nlohmann::json> rows) {
  std::string content;
  for (const auto& row : rows) {
    content += dump_line(row);
    content += '\n';
  }
  write_text_atomic(path, content);
}

}  // namespace prmkit
