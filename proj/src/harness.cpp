#include "rimdpe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rimdpe/analytics.hpp"
#include "rimdpe/signal_synth.hpp"

namespace rimdpe {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string estimator_name(EstimatorKind k) {
  return k == EstimatorKind::dpe ? "dpe" : "2sp";
}

bool is_known_scheme(const std::string& s) {
  return s == "none" || s == "td" || s == "fd" || s == "dd-tf" || s == "dd-ft";
}

ReceiverState draw_start(const ReceiverState& truth, const ReceiverConfig& rc,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
  ReceiverState start = truth;
  start.position += rc.init_offset_m * dir.normalized();
  start.clock_bias += rc.init_clock_offset_m * unif(rng) / kSpeedOfLight;
  return start;
}

std::string loe_output_path(const std::string& path) {
  const std::string ext = ".csv";
  if (path.size() > ext.size() &&
      path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size()) + ".loe.csv";
  }
  return path + ".loe.csv";
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out.precision(12);
  return out;
}

}  // namespace

std::string MethodSpec::label() const {
  return estimator_name(estimator) + "/" + scheme;
}

MethodSpec MethodSpec::parse(const std::string& label) {
  auto slash = label.find('/');
  if (slash == std::string::npos) {
    throw std::invalid_argument("method '" + label + "' is not estimator/scheme");
  }
  MethodSpec m;
  std::string est = label.substr(0, slash);
  if (est == "dpe") {
    m.estimator = EstimatorKind::dpe;
  } else if (est == "2sp") {
    m.estimator = EstimatorKind::twostep;
  } else {
    throw std::invalid_argument("unknown estimator '" + est + "'");
  }
  m.scheme = label.substr(slash + 1);
  if (!is_known_scheme(m.scheme)) {
    throw std::invalid_argument("unknown RIM scheme '" + m.scheme + "'");
  }
  return m;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (sweep.axis.empty()) throw std::invalid_argument("sweep axis is empty");
  if (methods.empty()) throw std::invalid_argument("no methods configured");
  for (const auto& m : methods) {
    if (!is_known_scheme(m.scheme)) {
      throw std::invalid_argument("unknown RIM scheme '" + m.scheme + "'");
    }
  }
  if (sweep.kind == SweepKind::threshold) {
    for (double t : sweep.axis) {
      if (!(t > 0.0)) throw std::invalid_argument("threshold axis must be positive");
    }
  }
  if (!(receiver.rim_block_seconds > 0.0)) {
    throw std::invalid_argument("rim block length must be positive");
  }
  receiver.ars.validate();
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t sweep_index,
                         std::size_t trial_index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ (0x5851F42D4C957F2DULL * (sweep_index + 1)));
  h = splitmix64(h ^ (0x14057B7EF767814FULL * (trial_index + 1)));
  return h;
}

ComplexSignal trial_signal(const ExperimentConfig& config, double jn_db,
                           std::mt19937_64& rng) {
  const Scenario& sc = config.scenario;
  const bool frontend = sc.frontend_bandwidth > 0.0;
  ComplexSignal x = frontend ? synthesize_noiseless_frontend(sc) : synthesize_noiseless(sc);
  add_noise(x, sc.noise_variance, rng);
  switch (config.sweep.interference) {
    case InterferenceKind::none:
      break;
    case InterferenceKind::cw: {
      ComplexSignal i = scale_to_jn(gen_cw(config.cw, x.size(), x.sample_rate),
                                    {jn_db}, sc.noise_variance);
      for (std::size_t n = 0; n < x.size(); ++n) x.samples[n] += i.samples[n];
      break;
    }
    case InterferenceKind::dme: {
      // Peak-referenced: a single pulse peaks at α_I with α_I² = JN·σ_n².
      DmeSpec spec = config.dme;
      spec.amplitude = std::sqrt(sc.noise_variance * std::pow(10.0, jn_db / 10.0));
      ComplexSignal i = gen_dme(spec, x.size(), x.sample_rate, rng);
      for (std::size_t n = 0; n < x.size(); ++n) x.samples[n] += i.samples[n];
      break;
    }
  }
  if (frontend) x = lowpass_frontend(x, sc.frontend_bandwidth);
  return x;
}

RmseRow aggregate(double sweep_value, const std::string& method,
                  const std::vector<double>& errors) {
  RmseRow row{sweep_value, method, static_cast<int>(errors.size()), 0.0, 0.0};
  if (errors.empty()) return row;
  const auto n = static_cast<double>(errors.size());
  double mean_sq = 0.0;
  for (double e : errors) mean_sq += e * e;
  mean_sq /= n;
  row.rmse_m = std::sqrt(mean_sq);
  if (errors.size() > 1 && row.rmse_m > 0.0) {
    double var = 0.0;
    for (double e : errors) var += (e * e - mean_sq) * (e * e - mean_sq);
    var /= (n - 1.0);
    row.stderr_m = std::sqrt(var / n) / (2.0 * row.rmse_m);
  }
  return row;
}

std::pair<double, double> paired_loe_db(const std::vector<double>& errors_rim,
                                        const std::vector<double>& errors_ref) {
  if (errors_rim.size() != errors_ref.size() || errors_rim.empty()) {
    throw std::invalid_argument("paired LoE needs equally sized, nonempty samples");
  }
  const auto n = static_cast<double>(errors_rim.size());
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < errors_rim.size(); ++i) {
    a += errors_rim[i] * errors_rim[i];
    b += errors_ref[i] * errors_ref[i];
  }
  a /= n;
  b /= n;
  double loe = 10.0 * std::log10(a / b);
  double se = 0.0;
  if (errors_rim.size() > 1) {
    double var = 0.0;
    for (std::size_t i = 0; i < errors_rim.size(); ++i) {
      double d = errors_rim[i] * errors_rim[i] / a - errors_ref[i] * errors_ref[i] / b;
      var += d * d;
    }
    var /= (n - 1.0);
    se = 10.0 / std::numbers::ln10 * std::sqrt(var / n);
  }
  return {loe, se};
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  const Scenario& sc = config.scenario;
  const std::size_t n_sweep = config.sweep.axis.size();
  const auto n_trials = static_cast<std::size_t>(config.trials);
  const std::size_t n_methods = config.methods.size();
  const auto rim_block = static_cast<std::size_t>(
      std::llround(config.receiver.rim_block_seconds * sc.sample_rate));

  MonteCarloResult result;
  result.sweep_axis = config.sweep.axis;
  for (const auto& m : config.methods) result.methods.push_back(m.label());
  result.errors.assign(n_sweep, std::vector<std::vector<double>>(
                                    n_methods, std::vector<double>(n_trials, 0.0)));

  std::ofstream stream;
  std::mutex stream_mutex;
  if (!config.trials_output_path.empty()) {
    stream = open_output(config.trials_output_path);
    stream << "sweep_value,method,trial,seed,position_error_m,x_m,y_m,z_m,"
              "clock_bias_s,elapsed_s\n";
  }

  auto run_trial = [&](std::size_t s, std::size_t t) {
    const double sweep_value = config.sweep.axis[s];
    const std::uint64_t seed = trial_seed(config.base_seed, s, t);
    std::mt19937_64 rng(seed);
    const bool jn_sweep = config.sweep.kind == SweepKind::jn;
    ComplexSignal x = trial_signal(config, jn_sweep ? sweep_value : 0.0, rng);
    ReceiverState start = draw_start(sc.receiver, config.receiver, rng);
    ArsParams ars = config.receiver.ars;
    ars.seed = rng();

    ZmnlSpec zmnl = ZmnlSpec::huber_mad(jn_sweep ? config.receiver.huber_scale
                                                 : sweep_value);
    zmnl.rule.consistency = config.receiver.mad_consistency;
    std::map<std::string, ComplexSignal> cleaned;

    std::vector<TrialResult> out;
    for (std::size_t m = 0; m < n_methods; ++m) {
      const MethodSpec& method = config.methods[m];
      auto t0 = std::chrono::steady_clock::now();
      RimConfig rim = RimConfig::scheme(method.scheme, zmnl, rim_block);
      auto it = cleaned.find(method.scheme);
      if (it == cleaned.end()) {
        it = cleaned.emplace(method.scheme, apply_rim(x, rim)).first;
      }
      EstimateResult est =
          method.estimator == EstimatorKind::dpe
              ? dpe_estimate_clean(it->second, sc, ars, start, config.receiver.caf)
              : twostep_estimate_clean(it->second, sc, config.receiver.grid, start);
      double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double err = (est.kappa_hat.position - sc.receiver.position).norm();
      result.errors[s][m][t] = err;
      out.push_back({sweep_value, method.label(), err, est.kappa_hat, elapsed, seed,
                     static_cast<int>(t)});
    }
    if (stream.is_open()) {
      std::lock_guard lock(stream_mutex);
      for (const auto& r : out) {
        stream << r.sweep_value << ',' << r.method << ',' << r.trial_index << ','
               << r.seed << ',' << r.position_error << ','
               << r.kappa_hat.position.x() << ',' << r.kappa_hat.position.y() << ','
               << r.kappa_hat.position.z() << ',' << r.kappa_hat.clock_bias << ','
               << r.elapsed << '\n';
      }
    }
  };

  const std::size_t total = n_sweep * n_trials;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t w = next.fetch_add(1);
      if (w >= total) return;
      try {
        run_trial(w / n_trials, w % n_trials);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), total);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t s = 0; s < n_sweep; ++s) {
    for (std::size_t m = 0; m < n_methods; ++m) {
      result.rows.push_back(
          aggregate(config.sweep.axis[s], result.methods[m], result.errors[s][m]));
    }
  }
  if (!config.output_path.empty()) {
    std::ofstream out = open_output(config.output_path);
    write_rmse_csv(out, result.rows);
    if (!out) throw std::runtime_error("failed writing '" + config.output_path + "'");
  }
  return result;
}

LoeExperimentResult run_loe_experiment(ExperimentConfig config) {
  if (config.sweep.kind != SweepKind::threshold) {
    throw std::invalid_argument("LoE experiment needs a threshold sweep");
  }
  if (config.sweep.interference != InterferenceKind::none) {
    throw std::invalid_argument(
        "LoE is defined without interference; remove the interference source");
  }
  for (EstimatorKind est : {EstimatorKind::dpe, EstimatorKind::twostep}) {
    bool used = std::any_of(config.methods.begin(), config.methods.end(),
                            [&](const MethodSpec& m) { return m.estimator == est; });
    MethodSpec base{est, "none"};
    if (used && std::find(config.methods.begin(), config.methods.end(), base) ==
                    config.methods.end()) {
      config.methods.insert(config.methods.begin(), base);
    }
  }

  LoeExperimentResult out;
  out.monte_carlo = run_monte_carlo(config);
  const auto& mc = out.monte_carlo;
  for (std::size_t s = 0; s < mc.sweep_axis.size(); ++s) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const MethodSpec& method = config.methods[m];
      if (method.scheme == "none") continue;
      MethodSpec base{method.estimator, "none"};
      auto b = static_cast<std::size_t>(
          std::find(config.methods.begin(), config.methods.end(), base) -
          config.methods.begin());
      auto [loe, se] = paired_loe_db(mc.errors[s][m], mc.errors[s][b]);
      LoeMode mode = method.scheme.starts_with("dd") ? LoeMode::dual_domain
                                                     : LoeMode::single_domain;
      out.loe.push_back({mc.sweep_axis[s], method.label(), loe, se,
                         loe_db(mc.sweep_axis[s], 1.0, mode)});
    }
  }
  if (!config.output_path.empty()) {
    std::string path = loe_output_path(config.output_path);
    std::ofstream f = open_output(path);
    write_loe_experiment_csv(f, out.loe);
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
  }
  return out;
}

MonteCarloResult run_interference_sweep(const ExperimentConfig& config) {
  if (config.sweep.kind != SweepKind::jn) {
    throw std::invalid_argument("interference sweep needs a JN axis");
  }
  if (config.sweep.interference == InterferenceKind::none) {
    throw std::invalid_argument("interference sweep needs an interference kind");
  }
  return run_monte_carlo(config);
}

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows) {
  out << "sweep_value,method,trials,rmse_m,stderr_m\n";
  out.precision(12);
  for (const auto& r : rows) {
    out << r.sweep_value << ',' << r.method << ',' << r.trials << ',' << r.rmse_m
        << ',' << r.stderr_m << '\n';
  }
}

void write_loe_experiment_csv(std::ostream& out,
                              const std::vector<LoeRowEmpirical>& rows) {
  out << "th_over_sigma,method,empirical_loe_db,stderr_db,theory_loe_db\n";
  out.precision(12);
  for (const auto& r : rows) {
    out << r.th_over_sigma << ',' << r.method << ',' << r.empirical_loe_db << ','
        << r.stderr_db << ',' << r.theory_loe_db << '\n';
  }
}

namespace {

ExperimentConfig desk_scale_base(double sample_rate, double bandwidth) {
  ExperimentConfig c;
  Scenario& sc = c.scenario;
  sc.receiver.position = geodetic_to_ecef(42.34, -71.09, 20.0);
  sc.receiver.clock_bias = 3.0e-7;
  sc.satellites = default_constellation(sc.receiver, 7);
  sc.sample_rate = sample_rate;
  sc.duration = 10e-3;
  sc.cn0_dbhz.assign(sc.satellites.size(), 44.0);
  sc.noise_variance = 2.0;
  sc.frontend_bandwidth = bandwidth;
  c.trials = 500;
  // Assisted start a few tens of metres out; the search box and 2SP window
  // are sized to it rather than to a cold start.
  ReceiverConfig& rc = c.receiver;
  rc.init_offset_m = 30.0;
  rc.init_clock_offset_m = 30.0;
  rc.ars.initial_radius = 100.0;
  rc.ars.min_radius = 0.05;
  rc.grid.cells_per_sample = 16;
  rc.grid.window_chips = 1.0;
  // Both receivers correlate against the front end's band-limited code.
  rc.caf.replica_bandwidth = bandwidth;
  rc.grid.caf.replica_bandwidth = bandwidth;
  return c;
}

}  // namespace

ExperimentConfig default_loe_config() {
  ExperimentConfig c = desk_scale_base(5e6, 2.45e6);
  c.sweep = {SweepKind::threshold, InterferenceKind::none,
             {0.5, 1.0, 1.345, 2.0, 3.0, 5.0}};
  for (const char* m : {"dpe/none", "dpe/td", "dpe/fd", "dpe/dd-tf", "dpe/dd-ft",
                        "2sp/none", "2sp/td", "2sp/fd", "2sp/dd-tf", "2sp/dd-ft"}) {
    c.methods.push_back(MethodSpec::parse(m));
  }
  return c;
}

ExperimentConfig default_cw_config() {
  ExperimentConfig c = desk_scale_base(5e6, 2.45e6);
  c.sweep = {SweepKind::jn, InterferenceKind::cw, {-20, 0, 20, 30, 40, 48}};
  for (const char* m : {"dpe/none", "dpe/td", "dpe/fd", "dpe/dd-tf", "dpe/dd-ft"}) {
    c.methods.push_back(MethodSpec::parse(m));
  }
  c.cw.freq_offset = 300e3;
  return c;
}

ExperimentConfig default_dme_config() {
  ExperimentConfig c = desk_scale_base(20e6, 9.8e6);
  c.sweep = {SweepKind::jn, InterferenceKind::dme, {-4, 8, 20, 32, 40, 48, 56}};
  for (const char* m : {"dpe/none", "dpe/td", "dpe/fd", "dpe/dd-tf", "dpe/dd-ft"}) {
    c.methods.push_back(MethodSpec::parse(m));
  }
  c.dme.freq_offset = -450e3;
  // Four co-channel beacons in view. A single 2700 ppps beacon occupies ~3%
  // of the samples and time-domain clipping alone removes it.
  c.dme.pair_rate = 4 * 2700.0;
  return c;
}

}  // namespace rimdpe
