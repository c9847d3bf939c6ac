#pragma once

// Shared helpers for the test binaries. Tests run with the repository root
// as working directory (see CMakeLists); FORGE_FIXTURES overrides the
// fixture location when running a binary by hand from somewhere else.

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline std::filesystem::path fixtures_path() {
  if (const char* env = std::getenv("FORGE_FIXTURES")) return env;
  return "fixtures";
}

// Self-deleting unique directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            (label + "-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
