#pragma once

// Shared helpers for the unit tests and the acceptance runner.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef _WIN32
#include <sys/wait.h>
#include <unistd.h>
#endif

#include "textclf/rng.hpp"
#include "textclf/tensor.hpp"

namespace testsup {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("textclf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Runs the CLI binary with stdout+stderr captured; returns the exit code.
inline int run_cli(const std::string& cli_path, const std::vector<std::string>& args,
                   const std::string& log_path) {
  std::string cmd = cli_path;
  for (const std::string& a : args) cmd += " " + a;
  cmd += " > " + log_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
#ifdef _WIN32
  return rc;
#else
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
#endif
}

inline textclf::Tensor random_tensor(std::vector<std::size_t> shape, textclf::RngStream& rng,
                                     double lo = -1.0, double hi = 1.0) {
  textclf::Tensor t = textclf::Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace testsup
