#pragma once

// Shared test helpers: scratch directories, mock backends built from inline
// JSON, and small solution builders.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prmkit/mock_backend.hpp"
#include "prmkit/types.hpp"

namespace prmkit::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "prmkit-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
  std::string content;
  for (const auto& r : rows) content += r.dump() + "\n";
  write_file(path, content);
}

inline std::shared_ptr<MockBackend> mock(const nlohmann::json& script, std::uint64_t seed = 0, int in_flight = 1) {
  return std::make_shared<MockBackend>(MockScript::from_json(script), seed, in_flight);
}

inline StepwiseSolution solution(std::string id, std::vector<std::string> steps, std::string problem = "What is 1+1?") {
  StepwiseSolution s;
  s.id = std::move(id);
  s.problem = std::move(problem);
  s.steps = std::move(steps);
  return s;
}

}  // namespace prmkit::testing
