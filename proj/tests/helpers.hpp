#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ecmki/ndct.hpp"
#include "ecmki/thevenin.hpp"

namespace ecmki::test {

// Reference Thevenin parameter set used across the suite (one RC pair).
inline TheveninParams ref_thevenin() {
  TheveninParams p;
  p.r_o = 0.026;
  p.rc = {{0.02, 3250.0}};
  p.thermal = {40.0, 10.0, 4.0, 7.0};
  p.kappa1 = 30.0;
  p.kappa2 = 70.0;
  return p;
}

// Reference double-capacitor parameter set.
inline NdctParams ref_ndct() {
  NdctParams p;
  p.c_b = 10037.0;
  p.c_s = 973.0;
  p.r_b = 0.019;
  p.r_o = 0.026;
  p.r_1 = 0.02;
  p.c_1 = 3250.0;
  p.thermal = {40.0, 10.0, 4.0, 7.0};
  p.kappa1 = 30.0;
  p.kappa2 = 70.0;
  return p;
}

// Scratch directory wiped on destruction; each test gets its own.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("ecmki_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ecmki::test
