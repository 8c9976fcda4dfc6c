#pragma once

// YAML run configuration. Every section is optional and unknown keys are
// rejected, so a typo cannot silently fall back to a default. Units follow
// VehicleParams. Infinite bounds are written .inf / -.inf.
//
//   problem: avp | academic
//   method: SOCSE-O5            # single solve
//   vehicle: {mass: 1200, ..., curvature: {constant: 0.02}, Q_diag: [...], R_diag: [...]}
//   scenario: {x0: [...], t0: 0, tf: 2, x_lower: [...], x_upper: [...], u_lower: [...], u_upper: [...]}
//   solver: {max_iters: 200, eq_tol: 1e-8, kkt_tol: 1e-6, ...}
//   reference: {steps: 1000, substeps: 2, gradient_tol: 1e-9, ...}
//   bench: {methods: [MS-50, SOCSE-O8], samples: 10000, rollout_dt: 1e-4, shooting_substeps: 1}

#include <optional>
#include <string>
#include <vector>

#include "socse/analysis.hpp"
#include "socse/sqp.hpp"
#include "socse/vehicle.hpp"

namespace socse {

struct RunConfig {
  std::string problem = "academic";
  std::string method;
  VehicleParams vehicle;
  std::optional<AvpScenario> scenario;  ///< unset: default_avp_scenario(vehicle)
  SqpOptions sqp;
  ReferenceOptions reference;
  std::vector<std::string> methods;
  int samples = 10000;
  double rollout_dt = 1e-4;
  int shooting_substeps = 1;
};

/// Parses YAML text on top of `base`. Throws ConfigError with the offending key.
RunConfig parse_config(const std::string& yaml, const RunConfig& base = {});
RunConfig load_config(const std::string& path, const RunConfig& base = {});

/// Serialises the full configuration back to YAML (round-trips through parse_config).
std::string dump_config(const RunConfig& cfg);

/// Builds the OcpProblem named by cfg.problem. Throws ConfigError on an unknown id.
OcpProblem make_problem(const RunConfig& cfg);

}  // namespace socse
