#include "socse/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "socse/academic.hpp"
#include "socse/errors.hpp"

namespace socse {

namespace {

using Json = nlohmann::ordered_json;

// Applies each known key of a mapping; anything else is an error.
void for_keys(const YAML::Node& node, const std::string& section,
              const std::map<std::string, std::function<void(const YAML::Node&)>>& handlers) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      throw ConfigError("unknown key '" + (section.empty() ? key : section + "." + key) + "'");
    }
    try {
      it->second(kv.second);
    } catch (const YAML::Exception& e) {
      throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
    }
  }
}

template <class T>
std::function<void(const YAML::Node&)> set(T& target) {
  return [&target](const YAML::Node& n) { target = n.as<T>(); };
}

Vec read_vector(const YAML::Node& n, int size, const std::string& what) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != size) {
    throw ConfigError(what + " must be a list of " + std::to_string(size) + " numbers");
  }
  Vec v(size);
  for (int i = 0; i < size; ++i) v[i] = n[i].as<double>();
  return v;
}

Mat read_matrix(const YAML::Node& n, int size, const std::string& what) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != size) {
    throw ConfigError(what + " must be a list of " + std::to_string(size) + " rows");
  }
  Mat m(size, size);
  for (int i = 0; i < size; ++i) m.row(i) = read_vector(n[i], size, what).transpose();
  return m;
}

// JSON has no infinity; write YAML's spelling as a string, which yaml-cpp reads back as a double.
Json number(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  return v;
}

Json vector_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json matrix_json(const Mat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

}  // namespace

RunConfig parse_config(const std::string& yaml, const RunConfig& base) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  RunConfig cfg = base;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("configuration root must be a mapping");

  VehicleParams& v = cfg.vehicle;
  auto vehicle = [&](const YAML::Node& n) {
    for_keys(n, "vehicle",
             {{"mass", set(v.mass)},
              {"yaw_inertia", set(v.yaw_inertia)},
              {"lf", set(v.lf)},
              {"lr", set(v.lr)},
              {"cornering_front", set(v.cornering_front)},
              {"cornering_rear", set(v.cornering_rear)},
              {"max_traction", set(v.max_traction)},
              {"front_drive_share", set(v.front_drive_share)},
              {"res_rolling", set(v.res_rolling)},
              {"res_rolling_eps", set(v.res_rolling_eps)},
              {"res_drag", set(v.res_drag)},
              {"slip_speed_floor", set(v.slip_speed_floor)},
              {"fusion", set(v.fusion)},
              {"fusion_schedule", set(v.fusion_schedule)},
              {"fusion_v_lo", set(v.fusion_v_lo)},
              {"fusion_v_hi", set(v.fusion_v_hi)},
              {"curvature",
               [&](const YAML::Node& c) {
                 for_keys(c, "vehicle.curvature",
                          {{"constant", set(v.curvature.constant)},
                           {"amplitude", set(v.curvature.amplitude)},
                           {"wavelength", set(v.curvature.wavelength)}});
               }},
              {"half_width_left", set(v.half_width_left)},
              {"half_width_right", set(v.half_width_right)},
              {"v_ref", set(v.v_ref)},
              {"parking_s", set(v.parking_s)},
              {"parking_sharpness", set(v.parking_sharpness)},
              {"q_wp", set(v.q_wp)},
              {"q_thetap", set(v.q_thetap)},
              {"Q", [&](const YAML::Node& q) { v.Q = read_matrix(q, avp::kNx, "vehicle.Q"); }},
              {"R", [&](const YAML::Node& r) { v.R = read_matrix(r, avp::kNu, "vehicle.R"); }},
              {"Q_diag",
               [&](const YAML::Node& q) {
                 v.Q = read_vector(q, avp::kNx, "vehicle.Q_diag").asDiagonal();
               }},
              {"R_diag", [&](const YAML::Node& r) {
                 v.R = read_vector(r, avp::kNu, "vehicle.R_diag").asDiagonal();
               }}});
  };

  // Scenario keys are applied after the vehicle section so defaults pick up the track widths.
  std::optional<YAML::Node> scenario_node;
  for_keys(root, "",
           {{"problem", set(cfg.problem)},
            {"method", set(cfg.method)},
            {"vehicle", vehicle},
            {"scenario", [&](const YAML::Node& n) { scenario_node.emplace(n); }},
            {"solver",
             [&](const YAML::Node& n) {
               SqpOptions& s = cfg.sqp;
               for_keys(n, "solver",
                        {{"max_iters", set(s.max_iters)},
                         {"eq_tol", set(s.eq_tol)},
                         {"kkt_tol", set(s.kkt_tol)},
                         {"penalty_factor", set(s.penalty_factor)},
                         {"bfgs_reset", set(s.bfgs_reset)},
                         {"fd_step", set(s.fd_step)},
                         {"backtrack", set(s.backtrack)},
                         {"armijo", set(s.armijo)},
                         {"max_backtracks", set(s.max_backtracks)},
                         {"second_order_correction", set(s.second_order_correction)},
                         {"elastic_weight", set(s.elastic_weight)},
                         {"curvilinear_search", set(s.curvilinear_search)},
                         {"stall_refresh", set(s.stall_refresh)},
                         {"short_step", set(s.short_step)},
                         {"max_condition", set(s.max_condition)},
                         {"hessian_init", [&](const YAML::Node& v) {
                            const auto name = v.as<std::string>();
                            if (name == "identity") {
                              s.hessian_init = HessianInit::kIdentity;
                            } else if (name == "objective") {
                              s.hessian_init = HessianInit::kObjective;
                            } else {
                              throw ConfigError("solver.hessian_init must be identity or objective");
                            }
                          }}});
             }},
            {"reference",
             [&](const YAML::Node& n) {
               ReferenceOptions& r = cfg.reference;
               for_keys(n, "reference",
                        {{"steps", set(r.steps)},
                         {"substeps", set(r.substeps)},
                         {"gradient_tol", set(r.gradient_tol)},
                         {"max_iters", set(r.max_iters)},
                         {"constraint_tol", set(r.constraint_tol)},
                         {"penalty", set(r.penalty)},
                         {"max_outer", set(r.max_outer)}});
             }},
            {"bench", [&](const YAML::Node& n) {
               for_keys(n, "bench",
                        {{"methods", set(cfg.methods)},
                         {"samples", set(cfg.samples)},
                         {"rollout_dt", set(cfg.rollout_dt)},
                         {"shooting_substeps", set(cfg.shooting_substeps)}});
             }}});

  if (scenario_node) {
    AvpScenario sc = cfg.scenario ? *cfg.scenario : default_avp_scenario(cfg.vehicle);
    for_keys(*scenario_node, "scenario",
             {{"x0", [&](const YAML::Node& n) { sc.x0 = read_vector(n, avp::kNx, "scenario.x0"); }},
              {"t0", set(sc.t0)},
              {"tf", set(sc.tf)},
              {"x_lower", [&](const YAML::Node& n) { sc.x_lower = read_vector(n, avp::kNx, "scenario.x_lower"); }},
              {"x_upper", [&](const YAML::Node& n) { sc.x_upper = read_vector(n, avp::kNx, "scenario.x_upper"); }},
              {"u_lower", [&](const YAML::Node& n) { sc.u_lower = read_vector(n, avp::kNu, "scenario.u_lower"); }},
              {"u_upper", [&](const YAML::Node& n) { sc.u_upper = read_vector(n, avp::kNu, "scenario.u_upper"); }}});
    cfg.scenario = sc;
  }

  cfg.vehicle.validate();
  cfg.sqp.validate();
  if (cfg.samples < 1000) throw ConfigError("bench.samples must be >= 1000");
  if (!(cfg.rollout_dt > 0.0 && cfg.rollout_dt <= 1e-3)) throw ConfigError("bench.rollout_dt must lie in (0, 1e-3]");
  if (cfg.shooting_substeps < 1) throw ConfigError("bench.shooting_substeps must be >= 1");
  if (cfg.reference.steps < 1000) throw ConfigError("reference.steps must be >= 1000");
  if (cfg.reference.substeps < 1) throw ConfigError("reference.substeps must be >= 1");
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string dump_config(const RunConfig& cfg) {
  const VehicleParams& v = cfg.vehicle;
  Json j;
  j["problem"] = cfg.problem;
  j["method"] = cfg.method;
  j["vehicle"] = {
      {"mass", v.mass},
      {"yaw_inertia", v.yaw_inertia},
      {"lf", v.lf},
      {"lr", v.lr},
      {"cornering_front", v.cornering_front},
      {"cornering_rear", v.cornering_rear},
      {"max_traction", v.max_traction},
      {"front_drive_share", v.front_drive_share},
      {"res_rolling", v.res_rolling},
      {"res_rolling_eps", v.res_rolling_eps},
      {"res_drag", v.res_drag},
      {"slip_speed_floor", v.slip_speed_floor},
      {"fusion", v.fusion},
      {"fusion_schedule", v.fusion_schedule},
      {"fusion_v_lo", v.fusion_v_lo},
      {"fusion_v_hi", v.fusion_v_hi},
      {"curvature",
       {{"constant", v.curvature.constant},
        {"amplitude", v.curvature.amplitude},
        {"wavelength", v.curvature.wavelength}}},
      {"half_width_left", v.half_width_left},
      {"half_width_right", v.half_width_right},
      {"v_ref", v.v_ref},
      {"parking_s", v.parking_s},
      {"parking_sharpness", v.parking_sharpness},
      {"q_wp", v.q_wp},
      {"q_thetap", v.q_thetap},
      {"Q", matrix_json(v.Q)},
      {"R", matrix_json(v.R)},
  };
  if (cfg.scenario) {
    const AvpScenario& s = *cfg.scenario;
    j["scenario"] = {{"x0", vector_json(s.x0)},           {"t0", s.t0},
                     {"tf", s.tf},                         {"x_lower", vector_json(s.x_lower)},
                     {"x_upper", vector_json(s.x_upper)}, {"u_lower", vector_json(s.u_lower)},
                     {"u_upper", vector_json(s.u_upper)}};
  }
  const SqpOptions& s = cfg.sqp;
  j["solver"] = {{"max_iters", s.max_iters},
                 {"eq_tol", s.eq_tol},
                 {"kkt_tol", s.kkt_tol},
                 {"penalty_factor", s.penalty_factor},
                 {"bfgs_reset", s.bfgs_reset},
                 {"fd_step", s.fd_step},
                 {"backtrack", s.backtrack},
                 {"armijo", s.armijo},
                 {"max_backtracks", s.max_backtracks},
                 {"second_order_correction", s.second_order_correction},
                 {"elastic_weight", s.elastic_weight},
                 {"curvilinear_search", s.curvilinear_search},
                 {"stall_refresh", s.stall_refresh},
                 {"short_step", s.short_step},
                 {"max_condition", s.max_condition},
                 {"hessian_init",
                  s.hessian_init == HessianInit::kIdentity ? "identity" : "objective"}};
  const ReferenceOptions& r = cfg.reference;
  j["reference"] = {{"steps", r.steps},
                    {"substeps", r.substeps},
                    {"gradient_tol", r.gradient_tol},
                    {"max_iters", r.max_iters},
                    {"constraint_tol", r.constraint_tol},
                    {"penalty", r.penalty},
                    {"max_outer", r.max_outer}};
  j["bench"] = {{"methods", cfg.methods},
                {"samples", cfg.samples},
                {"rollout_dt", cfg.rollout_dt},
                {"shooting_substeps", cfg.shooting_substeps}};
  return j.dump(2);
}

OcpProblem make_problem(const RunConfig& cfg) {
  if (cfg.problem == "academic") return academic_problem();
  if (cfg.problem == "avp") {
    const AvpScenario sc = cfg.scenario ? *cfg.scenario : default_avp_scenario(cfg.vehicle);
    return avp_problem(cfg.vehicle, sc);
  }
  throw ConfigError("unknown problem id '" + cfg.problem + "' (expected academic or avp)");
}

}  // namespace socse
