#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace pipelat::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { ok = 0, failed = 1, input_error = 2 };

/// Inputs that fully determine an output artifact. Written into every
/// report, JSON document and CSV file.
struct RunManifest {
  std::string command;
  std::string config;
  std::map<std::string, std::string> flags;
  std::string seed;
  std::vector<std::string> outputs;
  std::string version = kToolVersion;

  std::vector<std::string> lines() const;
};

/// Runs one invocation; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pipelat::cli
