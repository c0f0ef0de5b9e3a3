#pragma once

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "demoforge/demoforge.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("demoforge-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

template <class F>
demoforge::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const demoforge::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a demoforge::Error";
  return demoforge::ErrorCode::IoError;
}

inline demoforge::EmbeddingSequence sequence(std::vector<std::vector<double>> v, std::string id = "seq") {
  demoforge::EmbeddingSequence s;
  s.dim = v.empty() ? 1 : v.front().size();
  s.vectors = std::move(v);
  s.source_episode_id = std::move(id);
  return s;
}

inline std::vector<std::vector<double>> random_vectors(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& v : out)
    for (double& x : v) x = g(rng);
  return out;
}

/// Recursive byte comparison of two directory trees.
inline bool trees_identical(const fs::path& a, const fs::path& b, std::string* why = nullptr) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b)) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) {
    if (why) *why = "file lists differ";
    return false;
  }
  for (const auto& rel : fa) {
    if (fs::is_directory(a / rel)) continue;
    if (demoforge::read_file(a / rel) != demoforge::read_file(b / rel)) {
      if (why) *why = rel.string() + " differs";
      return false;
    }
  }
  return true;
}

}  // namespace testsupport
