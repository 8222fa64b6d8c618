#include "rimdpe/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rimdpe {

namespace {

using nlohmann::json;

// Rejects keys of `obj` outside `allowed`; `where` names the table.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be a table");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

Vec3 read_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError("'" + where + "' must be a 3-element array");
  }
  try {
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError("'" + where + "' must hold numbers");
  }
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void read_receiver(const json& j, ReceiverState& rx) {
  check_keys(j, "scenario.receiver",
             {"position", "geodetic", "velocity", "clock_bias", "clock_drift"});
  if (j.contains("position") && j.contains("geodetic")) {
    throw ConfigError("scenario.receiver: give 'position' or 'geodetic', not both");
  }
  if (j.contains("position")) rx.position = read_vec3(j["position"], "scenario.receiver.position");
  if (j.contains("geodetic")) {
    Vec3 g = read_vec3(j["geodetic"], "scenario.receiver.geodetic");
    rx.position = geodetic_to_ecef(g.x(), g.y(), g.z());
  }
  if (j.contains("velocity")) rx.velocity = read_vec3(j["velocity"], "scenario.receiver.velocity");
  read(j, "clock_bias", rx.clock_bias, "scenario.receiver");
  read(j, "clock_drift", rx.clock_drift, "scenario.receiver");
}

SatelliteState read_satellite(const json& j, std::size_t i) {
  std::string where = "scenario.satellites[" + std::to_string(i) + "]";
  check_keys(j, where, {"prn", "position", "velocity", "clock_bias", "amplitude",
                        "carrier_phase", "range_bias"});
  SatelliteState s;
  read(j, "prn", s.prn_id, where);
  if (!j.contains("position")) throw ConfigError(where + " needs 'position'");
  s.position = read_vec3(j["position"], where + ".position");
  if (j.contains("velocity")) s.velocity = read_vec3(j["velocity"], where + ".velocity");
  read(j, "clock_bias", s.clock_bias, where);
  if (j.contains("amplitude")) {
    std::vector<double> a;
    read(j, "amplitude", a, where);
    if (a.size() != 2) throw ConfigError(where + ".amplitude must be [re, im]");
    s.amplitude = {a[0], a[1]};
  }
  read(j, "carrier_phase", s.carrier_phase, where);
  read(j, "range_bias", s.range_bias, where);
  return s;
}

void read_scenario(const json& j, Scenario& sc) {
  check_keys(j, "scenario",
             {"receiver", "satellites", "constellation", "carrier_freq", "sample_rate",
              "duration", "cn0_dbhz", "noise_variance", "frontend_bandwidth"});
  if (j.contains("satellites") && j.contains("constellation")) {
    throw ConfigError("scenario: give 'satellites' or 'constellation', not both");
  }
  if (j.contains("receiver")) read_receiver(j["receiver"], sc.receiver);

  const std::size_t old_count = sc.satellites.size();
  if (j.contains("satellites")) {
    const json& list = j["satellites"];
    if (!list.is_array()) throw ConfigError("scenario.satellites must be an array");
    sc.satellites.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      sc.satellites.push_back(read_satellite(list[i], i));
    }
  } else if (j.contains("constellation") || j.contains("receiver")) {
    // The generated sky follows the receiver.
    int count = static_cast<int>(old_count == 0 ? 7 : old_count);
    std::vector<int> prns = {1, 3, 7, 11, 17, 23, 28, 5, 14, 31};
    if (j.contains("constellation")) {
      const json& c = j["constellation"];
      check_keys(c, "scenario.constellation", {"count", "prns"});
      read(c, "count", count, "scenario.constellation");
      read(c, "prns", prns, "scenario.constellation");
    }
    try {
      sc.satellites = default_constellation(sc.receiver, count, prns);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scenario.constellation: ") + e.what());
    }
  }

  read(j, "carrier_freq", sc.carrier_freq, "scenario");
  read(j, "sample_rate", sc.sample_rate, "scenario");
  read(j, "duration", sc.duration, "scenario");
  read(j, "noise_variance", sc.noise_variance, "scenario");
  read(j, "frontend_bandwidth", sc.frontend_bandwidth, "scenario");

  if (j.contains("cn0_dbhz")) {
    const json& c = j["cn0_dbhz"];
    if (c.is_number()) {
      sc.cn0_dbhz.assign(sc.satellites.size(), c.get<double>());
    } else if (c.is_null()) {
      sc.cn0_dbhz.clear();
    } else {
      read(j, "cn0_dbhz", sc.cn0_dbhz, "scenario");
    }
  } else if (!sc.cn0_dbhz.empty() && sc.cn0_dbhz.size() != sc.satellites.size()) {
    sc.cn0_dbhz.assign(sc.satellites.size(), sc.cn0_dbhz.front());
  }
}

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "threshold") return SweepKind::threshold;
  if (s == "jn") return SweepKind::jn;
  throw ConfigError("sweep.kind must be 'threshold' or 'jn', got '" + s + "'");
}

InterferenceKind parse_interference(const std::string& s) {
  if (s == "none") return InterferenceKind::none;
  if (s == "cw") return InterferenceKind::cw;
  if (s == "dme") return InterferenceKind::dme;
  throw ConfigError("sweep.interference must be none, cw or dme, got '" + s + "'");
}

const char* sweep_kind_name(SweepKind k) {
  return k == SweepKind::threshold ? "threshold" : "jn";
}

const char* interference_name(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::cw: return "cw";
    case InterferenceKind::dme: return "dme";
    default: return "none";
  }
}

void read_receiver_config(const json& j, ReceiverConfig& rc) {
  check_keys(j, "receiver",
             {"ars", "grid", "caf", "rim_block_seconds", "huber_scale",
              "mad_consistency", "init_offset_m", "init_clock_offset_m"});
  if (j.contains("ars")) {
    const json& a = j["ars"];
    check_keys(a, "receiver.ars",
               {"initial_radius", "min_radius", "contraction", "max_iterations"});
    read(a, "initial_radius", rc.ars.initial_radius, "receiver.ars");
    read(a, "min_radius", rc.ars.min_radius, "receiver.ars");
    read(a, "contraction", rc.ars.contraction, "receiver.ars");
    read(a, "max_iterations", rc.ars.max_iterations, "receiver.ars");
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "receiver.grid",
               {"cells_per_sample", "window_chips", "doppler_half_span", "doppler_step"});
    read(g, "cells_per_sample", rc.grid.cells_per_sample, "receiver.grid");
    read(g, "window_chips", rc.grid.window_chips, "receiver.grid");
    read(g, "doppler_half_span", rc.grid.doppler_half_span, "receiver.grid");
    read(g, "doppler_step", rc.grid.doppler_step, "receiver.grid");
  }
  if (j.contains("caf")) {
    const json& c = j["caf"];
    check_keys(c, "receiver.caf",
               {"block_samples", "max_blocks", "table_half_window_m", "replica_bandwidth"});
    read(c, "block_samples", rc.caf.block_samples, "receiver.caf");
    read(c, "table_half_window_m", rc.caf.table_half_window_m, "receiver.caf");
    read(c, "max_blocks", rc.caf.max_blocks, "receiver.caf");
    read(c, "replica_bandwidth", rc.caf.replica_bandwidth, "receiver.caf");
  }
  rc.grid.caf = rc.caf;
  read(j, "rim_block_seconds", rc.rim_block_seconds, "receiver");
  read(j, "huber_scale", rc.huber_scale, "receiver");
  read(j, "mad_consistency", rc.mad_consistency, "receiver");
  read(j, "init_offset_m", rc.init_offset_m, "receiver");
  read(j, "init_clock_offset_m", rc.init_clock_offset_m, "receiver");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(doc, "<root>",
             {"scenario", "methods", "sweep", "trials", "base_seed", "output",
              "trials_output", "workers", "receiver", "cw", "dme"});
  ExperimentConfig& c = base;
  if (doc.contains("scenario")) read_scenario(doc["scenario"], c.scenario);
  if (doc.contains("methods")) {
    std::vector<std::string> labels;
    read(doc, "methods", labels, "<root>");
    c.methods.clear();
    for (const auto& l : labels) {
      try {
        c.methods.push_back(MethodSpec::parse(l));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("methods: ") + e.what());
      }
    }
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    check_keys(s, "sweep", {"kind", "interference", "axis"});
    if (s.contains("kind")) {
      std::string k;
      read(s, "kind", k, "sweep");
      c.sweep.kind = parse_sweep_kind(k);
    }
    if (s.contains("interference")) {
      std::string k;
      read(s, "interference", k, "sweep");
      c.sweep.interference = parse_interference(k);
    }
    read(s, "axis", c.sweep.axis, "sweep");
  }
  read(doc, "trials", c.trials, "<root>");
  read(doc, "base_seed", c.base_seed, "<root>");
  read(doc, "output", c.output_path, "<root>");
  read(doc, "trials_output", c.trials_output_path, "<root>");
  read(doc, "workers", c.workers, "<root>");
  if (doc.contains("receiver")) read_receiver_config(doc["receiver"], c.receiver);
  if (doc.contains("cw")) {
    const json& w = doc["cw"];
    check_keys(w, "cw", {"freq_offset", "phase"});
    read(w, "freq_offset", c.cw.freq_offset, "cw");
    read(w, "phase", c.cw.phase, "cw");
  }
  if (doc.contains("dme")) {
    const json& d = doc["dme"];
    check_keys(d, "dme", {"pulse_width_param", "pair_spacing", "pair_rate", "freq_offset"});
    read(d, "pulse_width_param", c.dme.pulse_width_param, "dme");
    read(d, "pair_spacing", c.dme.pair_spacing, "dme");
    read(d, "pair_rate", c.dme.pair_rate, "dme");
    read(d, "freq_offset", c.dme.freq_offset, "dme");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string dump_config(const ExperimentConfig& c) {
  const Scenario& sc = c.scenario;
  json sats = json::array();
  for (const auto& s : sc.satellites) {
    sats.push_back({{"prn", s.prn_id},
                    {"position", vec3_json(s.position)},
                    {"velocity", vec3_json(s.velocity)},
                    {"clock_bias", s.clock_bias},
                    {"amplitude", {s.amplitude.real(), s.amplitude.imag()}},
                    {"carrier_phase", s.carrier_phase},
                    {"range_bias", s.range_bias}});
  }
  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(m.label());
  const ReceiverConfig& rc = c.receiver;
  json doc = {
      {"scenario",
       {{"receiver",
         {{"position", vec3_json(sc.receiver.position)},
          {"velocity", vec3_json(sc.receiver.velocity)},
          {"clock_bias", sc.receiver.clock_bias},
          {"clock_drift", sc.receiver.clock_drift}}},
        {"satellites", sats},
        {"carrier_freq", sc.carrier_freq},
        {"sample_rate", sc.sample_rate},
        {"duration", sc.duration},
        {"cn0_dbhz", sc.cn0_dbhz},
        {"noise_variance", sc.noise_variance},
        {"frontend_bandwidth", sc.frontend_bandwidth}}},
      {"methods", methods},
      {"sweep",
       {{"kind", sweep_kind_name(c.sweep.kind)},
        {"interference", interference_name(c.sweep.interference)},
        {"axis", c.sweep.axis}}},
      {"trials", c.trials},
      {"base_seed", c.base_seed},
      {"output", c.output_path},
      {"trials_output", c.trials_output_path},
      {"workers", c.workers},
      {"receiver",
       {{"ars",
         {{"initial_radius", rc.ars.initial_radius},
          {"min_radius", rc.ars.min_radius},
          {"contraction", rc.ars.contraction},
          {"max_iterations", rc.ars.max_iterations}}},
        {"grid",
         {{"cells_per_sample", rc.grid.cells_per_sample},
          {"window_chips", rc.grid.window_chips},
          {"doppler_half_span", rc.grid.doppler_half_span},
          {"doppler_step", rc.grid.doppler_step}}},
        {"caf",
         {{"block_samples", rc.caf.block_samples},
          {"max_blocks", rc.caf.max_blocks},
          {"table_half_window_m", rc.caf.table_half_window_m},
          {"replica_bandwidth", rc.caf.replica_bandwidth}}},
        {"rim_block_seconds", rc.rim_block_seconds},
        {"huber_scale", rc.huber_scale},
        {"mad_consistency", rc.mad_consistency},
        {"init_offset_m", rc.init_offset_m},
        {"init_clock_offset_m", rc.init_clock_offset_m}}},
      {"cw", {{"freq_offset", c.cw.freq_offset}, {"phase", c.cw.phase}}},
      {"dme",
       {{"pulse_width_param", c.dme.pulse_width_param},
        {"pair_spacing", c.dme.pair_spacing},
        {"pair_rate", c.dme.pair_rate},
        {"freq_offset", c.dme.freq_offset}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace rimdpe
