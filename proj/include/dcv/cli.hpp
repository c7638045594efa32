#pragma once

#include <string>
#include <vector>

namespace dcv::cli {

/// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one subcommand (denoise, fit-prior, gst-check, zncc-grad,
/// guided-filter, bridge-check, evolve, synth). args[0] is the program name.
/// Errors are reported on stderr as a one-line JSON object.
int run(const std::vector<std::string>& args);

int run(int argc, char** argv);

} // namespace dcv::cli
