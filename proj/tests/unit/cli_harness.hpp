#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace threatwatch::testing {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("threatwatch_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Runs a shell command line; `{cli}` is replaced by the threatwatch binary.
inline CliResult run_cli(std::string cmdline, const std::filesystem::path& dir) {
  const std::string cli = THREATWATCH_CLI;
  for (auto pos = cmdline.find("{cli}"); pos != std::string::npos;
       pos = cmdline.find("{cli}", pos + cli.size()))
    cmdline.replace(pos, 5, cli);
  const auto err_path = dir / "stderr.txt";
  const std::string full = "cd '" + dir.string() + "' && (" + cmdline + ") 2>'" +
                           err_path.string() + "'";
  CliResult r;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

}  // namespace threatwatch::testing
