// rimdpe: Monte Carlo experiments, signal dumps and closed-form tables.
#include <cstdio>
#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "rimdpe/analytics.hpp"
#include "rimdpe/config.hpp"
#include "rimdpe/harness.hpp"

using namespace rimdpe;

namespace {

struct CommonFlags {
  std::string config_path;
  int trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int workers = 0;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool experiment) {
  cmd->add_option("--config", f.config_path, "JSON config overlaid on the defaults");
  cmd->add_option("--out", f.out, "output path (stdout when omitted)");
  cmd->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv"}));
  if (experiment) {
    cmd->add_option("--trials", f.trials, "trials per sweep point")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  }
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](std::uint64_t s) { f.seed = s; f.seed_set = true; }, "base seed");
}

ExperimentConfig resolve(ExperimentConfig base, const CommonFlags& f) {
  if (!f.config_path.empty()) base = load_config(f.config_path, std::move(base));
  if (f.trials > 0) base.trials = f.trials;
  if (f.seed_set) base.base_seed = f.seed;
  if (f.workers > 0) base.workers = f.workers;
  if (!f.out.empty()) base.output_path = f.out;
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return base;
}

int run_loe(const CommonFlags& f) {
  ExperimentConfig c = resolve(default_loe_config(), f);
  LoeExperimentResult r = run_loe_experiment(c);
  if (c.output_path.empty()) {
    write_rmse_csv(std::cout, r.monte_carlo.rows);
    std::cout << '\n';
    write_loe_experiment_csv(std::cout, r.loe);
  }
  return 0;
}

int run_sweep(const CommonFlags& f, ExperimentConfig base) {
  ExperimentConfig c = resolve(std::move(base), f);
  MonteCarloResult r = run_interference_sweep(c);
  if (c.output_path.empty()) write_rmse_csv(std::cout, r.rows);
  return 0;
}

int run_synth(const CommonFlags& f, const std::string& interference, double jn_db) {
  ExperimentConfig c = resolve(default_loe_config(), f);
  if (interference == "cw") {
    c.sweep.interference = InterferenceKind::cw;
  } else if (interference == "dme") {
    c.sweep.interference = InterferenceKind::dme;
  } else {
    c.sweep.interference = InterferenceKind::none;
  }
  if (c.output_path.empty()) throw ConfigError("synth needs --out");
  std::mt19937_64 rng(trial_seed(c.base_seed, 0, 0));
  ComplexSignal x = trial_signal(c, jn_db, rng);

  std::ofstream out(c.output_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + c.output_path + "'");
  static_assert(sizeof(double) == 8);
  for (const cplx& s : x.samples) {
    double iq[2] = {s.real(), s.imag()};
    unsigned char bytes[16];
    std::memcpy(bytes, iq, sizeof bytes);
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes, bytes + 8);
      std::reverse(bytes + 8, bytes + 16);
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }
  if (!out) throw std::runtime_error("failed writing '" + c.output_path + "'");
  std::cerr << x.size() << " samples at " << x.sample_rate << " Hz -> " << c.output_path
            << '\n';
  return 0;
}

int run_analyze(const CommonFlags& f, double first, double last, std::size_t points,
                const std::string& crb_out) {
  ExperimentConfig c = resolve(default_loe_config(), f);
  if (!(first > 0.0) || !(last > first) || points < 2) {
    throw ConfigError("analyze axis needs 0 < first < last and at least 2 points");
  }
  std::vector<double> axis = linear_axis(first, last, points);
  std::vector<LoeRow> rows = loe_table(axis);
  if (c.output_path.empty()) {
    write_loe_csv(std::cout, rows);
  } else {
    std::ofstream out(c.output_path);
    if (!out) throw std::runtime_error("cannot open output file '" + c.output_path + "'");
    write_loe_csv(out, rows);
  }

  if (!crb_out.empty()) {
    std::ofstream out(crb_out);
    if (!out) throw std::runtime_error("cannot open output file '" + crb_out + "'");
    out.precision(12);
    out << "cn0_dbhz,crb_position_rmse_m,crb_rmse_single_m,crb_rmse_dual_m\n";
    const std::size_t n = c.scenario.samples_per_code_period();
    for (double cn0 = 30.0; cn0 <= 50.0 + 1e-9; cn0 += 2.0) {
      Scenario sc = c.scenario;
      sc.cn0_dbhz.assign(sc.satellites.size(), cn0);
      double bound = position_rmse_bound(crb(scenario_fim_inputs(sc, n, true)));
      double th = c.receiver.huber_scale;
      out << cn0 << ',' << bound << ','
          << bound * predicted_rmse_ratio(loe_db(th, 1.0, LoeMode::single_domain)) << ','
          << bound * predicted_rmse_ratio(loe_db(th, 1.0, LoeMode::dual_domain)) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust interference mitigation for direct position estimation"};
  app.require_subcommand(1);

  CommonFlags loe_f, cw_f, dme_f, synth_f, an_f;
  CLI::App* loe = app.add_subcommand("loe", "threshold sweep, empirical vs closed-form LoE");
  add_common(loe, loe_f, true);
  CLI::App* cw = app.add_subcommand("sweep-cw", "RMSE vs JN under CW interference");
  add_common(cw, cw_f, true);
  CLI::App* dme = app.add_subcommand("sweep-dme", "RMSE vs JN under DME interference");
  add_common(dme, dme_f, true);

  CLI::App* synth = app.add_subcommand("synth", "dump one received signal as I/Q float64");
  add_common(synth, synth_f, false);
  std::string interference = "none";
  double jn_db = 0.0;
  synth->add_option("--interference", interference, "none, cw or dme")
      ->check(CLI::IsMember({"none", "cw", "dme"}));
  synth->add_option("--jn", jn_db, "JN in dB");

  CLI::App* analyze = app.add_subcommand("analyze", "closed-form LoE table and CRB");
  add_common(analyze, an_f, false);
  double ax_first = 0.1, ax_last = 5.0;
  std::size_t ax_points = 50;
  std::string crb_out;
  analyze->add_option("--th-min", ax_first, "first Th/sigma");
  analyze->add_option("--th-max", ax_last, "last Th/sigma");
  analyze->add_option("--points", ax_points, "axis points");
  analyze->add_option("--crb-out", crb_out, "CSV of the position CRB vs CN0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*loe) return run_loe(loe_f);
    if (*cw) return run_sweep(cw_f, default_cw_config());
    if (*dme) return run_sweep(dme_f, default_dme_config());
    if (*synth) return run_synth(synth_f, interference, jn_db);
    if (*analyze) return run_analyze(an_f, ax_first, ax_last, ax_points, crb_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
