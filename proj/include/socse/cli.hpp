#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "socse/config.hpp"

namespace socse {

enum ExitCode : int { kExitOk = 0, kExitSolverFailure = 1, kExitUsage = 2 };

enum class OutputFormat { kCsv, kJson };

/// LGL nodes and weights with their sum. Throws DomainError if n < 2.
void cmd_nodes(int n, OutputFormat fmt, std::ostream& out);

/// `count` random splines of degree M (coefficients uniform in [-1, 1] from a
/// seeded generator), their dense-sampled extrema and Bernstein bounds.
/// Throws DomainError if M < 1.
void cmd_envelope_demo(int degree, int count, std::uint64_t seed, int samples, OutputFormat fmt,
                       std::ostream& out);

/// Solves cfg.method on cfg.problem and writes the JSON solution artifact.
/// Returns kExitSolverFailure unless the SQP converged.
int cmd_solve(const RunConfig& cfg, std::ostream& out);

/// Runs the benchmark table. Returns kExitSolverFailure if any row failed.
int cmd_bench(const RunConfig& cfg, OutputFormat fmt, std::ostream& out);

/// Default method list for a problem id: the five academic rows, or the AVP sweep.
std::vector<std::string> default_methods(const std::string& problem);

/// Full command-line entry point; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace socse
