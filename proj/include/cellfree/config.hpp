#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cellfree/fronthaul.hpp"
#include "cellfree/power.hpp"
#include "cellfree/scenario.hpp"
#include "cellfree/sweep.hpp"

namespace cellfree {

enum class SchemeKind { kHybrid, kCentralized, kDistributed };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::kHybrid;
  GroupingMethod method = GroupingMethod::kKmeans;  // hybrid only
  AllocMode alloc = AllocMode::kOpa;

  std::string scheme_name() const {
    switch (kind) {
      case SchemeKind::kHybrid: return "hybrid";
      case SchemeKind::kCentralized: return "centralized";
      case SchemeKind::kDistributed: return "distributed";
    }
    return "?";
  }
  std::string method_name() const {
    if (kind != SchemeKind::kHybrid) return "none";
    switch (method) {
      case GroupingMethod::kKmeans: return "kmeans";
      case GroupingMethod::kLsf: return "lsf";
      case GroupingMethod::kRandom: return "random";
    }
    return "?";
  }
  std::string alloc_name() const {
    return alloc == AllocMode::kOpa ? "opa" : "epa";
  }
  std::string label() const {
    return scheme_name() + ":" + method_name() + ":" + alloc_name();
  }
};

enum class SweepAxis { kFhMax, kL };

/// Full experiment description, read from a flat key=value config file.
/// CLI flags override file values.
struct ExperimentConfig {
  SystemParams system;
  FronthaulParams fronthaul;

  SweepAxis axis = SweepAxis::kFhMax;
  std::vector<double> fh_list;  // bit/s, used when axis == kFhMax
  std::vector<int> l_list;      // used when axis == kL
  double fh_fixed = 8e9;        // bit/s, used when axis == kL

  std::vector<SchemeSpec> schemes;
  int n_drops = 10;
  int n_mu_draws = 300;
  int n_oracle_draws = 20000;
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  ServiceMode mode = ServiceMode::kCapacityLimited;
  ObjectiveMode objective = ObjectiveMode::kGeomean;
  bool fig3_kmax_compat = false;
  bool full_opa_sweep = false;
  bool dump_sca_trace = false;

  void validate() const {
    system.validate();
    fronthaul.validate();
    if (axis == SweepAxis::kFhMax && fh_list.empty())
      throw std::invalid_argument("config: fh_max_gbps list is empty");
    if (axis == SweepAxis::kL && l_list.empty())
      throw std::invalid_argument("config: l_list is empty");
    if (schemes.empty())
      throw std::invalid_argument("config: schemes list is empty");
    if (n_drops < 1) throw std::invalid_argument("config: drops >= 1");
    if (n_mu_draws < 1) throw std::invalid_argument("config: mu_draws >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

inline GroupingMethod parse_method(const std::string& v) {
  if (v == "kmeans") return GroupingMethod::kKmeans;
  if (v == "lsf") return GroupingMethod::kLsf;
  if (v == "random") return GroupingMethod::kRandom;
  throw std::invalid_argument("config: unknown grouping method: " + v);
}

inline SchemeSpec parse_scheme(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty() || parts.size() > 3)
    throw std::invalid_argument("config: bad scheme spec: " + spec);
  SchemeSpec s;
  if (parts[0] == "hybrid")
    s.kind = SchemeKind::kHybrid;
  else if (parts[0] == "centralized")
    s.kind = SchemeKind::kCentralized;
  else if (parts[0] == "distributed")
    s.kind = SchemeKind::kDistributed;
  else
    throw std::invalid_argument("config: unknown scheme: " + parts[0]);
  if (parts.size() >= 2 && !parts[1].empty()) {
    if (s.kind != SchemeKind::kHybrid)
      throw std::invalid_argument(
          "config: grouping method only applies to hybrid: " + spec);
    s.method = parse_method(parts[1]);
  }
  if (parts.size() == 3) {
    if (parts[2] == "opa")
      s.alloc = AllocMode::kOpa;
    else if (parts[2] == "epa")
      s.alloc = AllocMode::kEpa;
    else
      throw std::invalid_argument("config: unknown alloc: " + parts[2]);
  }
  return s;
}

}  // namespace detail

/// Parses the flat key = value format (# starts a comment). Unknown keys
/// are errors. See configs/fh_sweep.conf for the canonical example.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.schemes.clear();
  double p_data_mw = 1000.0, p_pilot_mw = 500.0;
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config: empty key or value at line " +
                                  std::to_string(line_no));
    if (kv.count(key))
      throw std::invalid_argument("config: duplicate key " + key);
    kv[key] = val;
  }

  auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const std::string& key, double& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = std::stod(v);
  };
  auto take_int = [&](const std::string& key, int& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = std::stoi(v);
  };
  auto take_bool = [&](const std::string& key, bool& dst) {
    const std::string v = take(key);
    if (!v.empty()) dst = detail::parse_bool(v, key);
  };

  take_int("m", cfg.system.m);
  take_int("k", cfg.system.k);
  take_int("l", cfg.system.l);
  take_double("area_side_m", cfg.system.area_side);
  take_int("tau", cfg.system.tau);
  take_int("tau_u", cfg.system.tau_u);
  take_double("p_data_mw", p_data_mw);
  take_double("p_pilot_mw", p_pilot_mw);
  take_double("noise_dbm", cfg.system.noise_dbm);
  take_double("qos_c", cfg.system.qos_c);
  take_double("qos_d", cfg.system.qos_d);
  cfg.system.rho = p_data_mw / 1000.0;
  cfg.system.rho_u = p_pilot_mw / 1000.0;

  take_double("m_order", cfg.fronthaul.m_order);
  take_double("n_subcarrier", cfg.fronthaul.n_subcarrier);
  take_double("n_ofdm", cfg.fronthaul.n_ofdm);
  take_double("ecpri_eff", cfg.fronthaul.ecpri_eff);
  take_double("delay_data_s", cfg.fronthaul.delay_data);
  take_double("delay_pr_s", cfg.fronthaul.delay_pr);
  take_double("n_bits", cfg.fronthaul.n_bits);
  take_double("n_gran", cfg.fronthaul.n_gran);
  cfg.fronthaul.l = cfg.system.l;

  if (const std::string v = take("sweep"); !v.empty()) {
    if (v == "fh")
      cfg.axis = SweepAxis::kFhMax;
    else if (v == "l")
      cfg.axis = SweepAxis::kL;
    else
      throw std::invalid_argument("config: sweep must be fh or l");
  }
  if (const std::string v = take("fh_max_gbps"); !v.empty())
    for (const auto& item : detail::split(v, ','))
      cfg.fh_list.push_back(std::stod(item) * 1e9);
  if (const std::string v = take("l_list"); !v.empty())
    for (const auto& item : detail::split(v, ','))
      cfg.l_list.push_back(std::stoi(item));
  double fh_fixed_gbps = cfg.fh_fixed / 1e9;
  take_double("fh_fixed_gbps", fh_fixed_gbps);
  cfg.fh_fixed = fh_fixed_gbps * 1e9;

  if (const std::string v = take("schemes"); !v.empty())
    for (const auto& item : detail::split(v, ','))
      cfg.schemes.push_back(detail::parse_scheme(item));

  take_int("drops", cfg.n_drops);
  take_int("mu_draws", cfg.n_mu_draws);
  take_int("oracle_draws", cfg.n_oracle_draws);
  if (const std::string v = take("seed"); !v.empty())
    cfg.seed = std::stoull(v);
  if (const std::string v = take("out_dir"); !v.empty()) cfg.out_dir = v;
  if (const std::string v = take("mode"); !v.empty()) {
    if (v == "capacity_limited")
      cfg.mode = ServiceMode::kCapacityLimited;
    else if (v == "serve_all_K" || v == "serve_all_k")
      cfg.mode = ServiceMode::kServeAllK;
    else
      throw std::invalid_argument("config: unknown mode: " + v);
  }
  if (const std::string v = take("objective"); !v.empty()) {
    if (v == "geomean")
      cfg.objective = ObjectiveMode::kGeomean;
    else if (v == "paper9a")
      cfg.objective = ObjectiveMode::kPaper9a;
    else
      throw std::invalid_argument("config: unknown objective: " + v);
  }
  take_bool("fig3_kmax_compat", cfg.fig3_kmax_compat);
  take_bool("full_opa_sweep", cfg.full_opa_sweep);
  take_bool("dump_sca_trace", cfg.dump_sca_trace);

  if (!kv.empty())
    throw std::invalid_argument("config: unknown key " + kv.begin()->first);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace cellfree
