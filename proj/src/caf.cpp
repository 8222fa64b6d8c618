#include "rimdpe/caf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "rimdpe/fft.hpp"

namespace rimdpe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCodePeriod = 1e-3;
constexpr double kChipEpsilon = 1e-9;
// Delay table cells per sample.
constexpr double kTableCells = 1023.0;
constexpr double kMinReplicaWindow = 5e3;  // m

// e^{−j2π f n / fs}, phase reduced before evaluation.
cplx wipeoff(double doppler, double sample_rate, std::size_t n) {
  double cycles = doppler * static_cast<double>(n) / sample_rate;
  cycles -= std::floor(cycles);
  return std::polar(1.0, -kTwoPi * cycles);
}

void require_code_period(std::size_t n_samples, double sample_rate) {
  if (static_cast<double>(n_samples) + 0.5 < kCodePeriod * sample_rate) {
    throw std::invalid_argument("CAF needs at least one code period of samples");
  }
}

std::int64_t chip_at(double t, double chip_rate) {
  return static_cast<std::int64_t>(std::floor(t * chip_rate + kChipEpsilon));
}

std::size_t wrap_chip(std::int64_t k) {
  auto m = k % kCaCodeLength;
  if (m < 0) m += kCaCodeLength;
  return static_cast<std::size_t>(m);
}

}  // namespace

namespace {

// Power of two: FFTW runs these faster than smaller 3- and 5-smooth sizes.
std::size_t fft_size_at_least(std::size_t n) { return std::bit_ceil(n); }

}  // namespace

std::pair<std::size_t, std::size_t> resolve_blocks(std::size_t n_samples,
                                                   double sample_rate,
                                                   const CafOptions& options) {
  std::size_t block = options.block_samples;
  if (block == 0) {
    block = static_cast<std::size_t>(std::llround(kCodePeriod * sample_rate));
  }
  if (block == 0 || block > n_samples) {
    throw std::invalid_argument("signal shorter than one coherent block");
  }
  std::size_t count = n_samples / block;
  if (options.max_blocks > 0) count = std::min(count, options.max_blocks);
  return {block, count};
}

cplx caf_span(std::span<const cplx> x, double sample_rate, std::size_t first,
              std::size_t count, const PrnCode& code, double tau,
              double doppler) {
  if (first + count > x.size()) {
    throw std::invalid_argument("CAF span exceeds the signal");
  }
  cplx acc{0.0, 0.0};
  if (doppler == 0.0) {
    for (std::size_t n = first; n < first + count; ++n) {
      double t = static_cast<double>(n) / sample_rate - tau;
      acc += x[n] * static_cast<double>(code.chips[wrap_chip(chip_at(t, code.chip_rate))]);
    }
    return acc;
  }
  for (std::size_t n = first; n < first + count; ++n) {
    double t = static_cast<double>(n) / sample_rate - tau;
    int c = code.chips[wrap_chip(chip_at(t, code.chip_rate))];
    acc += x[n] * static_cast<double>(c) * wipeoff(doppler, sample_rate, n);
  }
  return acc;
}

namespace {

// Σ x[n]·c(n) for n < len from the prefix sums s of x: one term per chip.
// Chip edges are located with the same chip_at rounding as caf_span.
cplx caf_from_prefix(const std::vector<cplx>& s, std::int64_t len, double fs,
                     const PrnCode& code, double tau) {
  auto chip_of = [&](std::int64_t n) {
    return chip_at(static_cast<double>(n) / fs - tau, code.chip_rate);
  };
  const double chip_samples = fs / code.chip_rate;
  const std::int64_t k_last = chip_of(len - 1);
  cplx acc{0.0, 0.0};
  std::int64_t lo = 0;
  for (std::int64_t k = chip_of(0); k <= k_last; ++k) {
    std::int64_t hi = len;
    if (k < k_last) {
      hi = std::clamp(static_cast<std::int64_t>(std::ceil(
                          fs * tau + static_cast<double>(k + 1) * chip_samples)),
                      lo, len);
      while (hi > lo && chip_of(hi - 1) > k) --hi;
      while (hi < len && chip_of(hi) <= k) ++hi;
    }
    acc += static_cast<double>(code.chips[wrap_chip(k)]) * (s[hi] - s[lo]);
    lo = hi;
  }
  return acc;
}

}  // namespace

CafValue caf(const ComplexSignal& x, const PrnCode& code, double tau,
             double doppler) {
  require_code_period(x.size(), x.sample_rate);
  return {caf_span(x.samples, x.sample_rate, 0, x.size(), code, tau, doppler),
          tau, doppler, code.prn_id};
}

CafValue robust_caf(const ComplexSignal& x, const RimConfig& rim,
                    const PrnCode& code, double tau, double doppler) {
  require_code_period(x.size(), x.sample_rate);
  if (rim.chain.empty()) return caf(x, code, tau, doppler);
  return caf(apply_rim(x, rim), code, tau, doppler);
}

CafGrid caf_grid(const ComplexSignal& x, const PrnCode& code,
                 const std::vector<double>& tau_axis,
                 const std::vector<double>& doppler_axis) {
  require_code_period(x.size(), x.sample_rate);
  if (tau_axis.empty() || doppler_axis.empty()) {
    throw std::invalid_argument("CAF grid axes must be nonempty");
  }
  const std::size_t n = x.size();
  const double fs = x.sample_rate;
  CafGrid grid{tau_axis, doppler_axis,
               std::vector<cplx>(tau_axis.size() * doppler_axis.size()),
               code.prn_id};

  const double period_samples = kCodePeriod * fs;
  const double periods = static_cast<double>(n) / period_samples;
  const bool circular =
      std::abs(period_samples - std::round(period_samples)) < 1e-9 &&
      std::abs(periods - std::round(periods)) < 1e-9;

  // Rough flop counts: FFT path vs one pass over the samples per cell.
  std::set<std::int64_t> offsets;
  for (double tau : tau_axis) {
    offsets.insert(std::llround((tau * fs - std::floor(tau * fs)) * 1e9));
  }
  const double nd = static_cast<double>(doppler_axis.size());
  const double fft_cost = (static_cast<double>(offsets.size()) * (1.0 + nd) + nd) * 5.0 *
                          std::log2(static_cast<double>(n));
  const double chips = static_cast<double>(n) * kCaChipRate / fs;
  const double direct_cost =
      nd * (40.0 + 20.0 * chips / static_cast<double>(n) * static_cast<double>(tau_axis.size()));

  std::vector<cplx> wiped(n);
  if (!circular || direct_cost < fft_cost) {
    std::vector<cplx> prefix(n + 1);
    for (std::size_t d = 0; d < doppler_axis.size(); ++d) {
      prefix[0] = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        prefix[k + 1] = prefix[k] + x.samples[k] * wipeoff(doppler_axis[d], fs, k);
      }
      for (std::size_t t = 0; t < tau_axis.size(); ++t) {
        grid.at(d, t) = caf_from_prefix(prefix, static_cast<std::int64_t>(n), fs, code,
                                        tau_axis[t]);
      }
    }
    return grid;
  }

  // Split each delay into an integer sample shift and a sub-sample offset;
  // delays sharing an offset share one replica spectrum.
  struct Group {
    double offset = 0.0;
    std::vector<std::pair<std::size_t, std::int64_t>> members;  // (tau idx, shift)
    std::vector<cplx> replica_spectrum;
  };
  std::map<std::int64_t, Group> groups;
  for (std::size_t t = 0; t < tau_axis.size(); ++t) {
    double shift = std::floor(tau_axis[t] * fs);
    double offset = tau_axis[t] - shift / fs;
    auto key = static_cast<std::int64_t>(std::llround(offset * fs * 1e9));
    auto& g = groups[key];
    if (g.members.empty()) g.offset = offset;
    g.members.emplace_back(t, static_cast<std::int64_t>(shift));
  }
  for (auto& [key, g] : groups) {
    std::vector<cplx> replica(n);
    for (std::size_t k = 0; k < n; ++k) {
      double t = static_cast<double>(k) / fs - g.offset;
      replica[k] = static_cast<double>(code.chips[wrap_chip(chip_at(t, code.chip_rate))]);
    }
    g.replica_spectrum.resize(n);
    fft::forward(replica, g.replica_spectrum);
  }

  std::vector<cplx> spectrum(n);
  std::vector<cplx> product(n);
  std::vector<cplx> corr(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d < doppler_axis.size(); ++d) {
    for (std::size_t k = 0; k < n; ++k) {
      wiped[k] = x.samples[k] * wipeoff(doppler_axis[d], fs, k);
    }
    fft::forward(wiped, spectrum);
    for (auto& [key, g] : groups) {
      for (std::size_t k = 0; k < n; ++k) {
        product[k] = spectrum[k] * std::conj(g.replica_spectrum[k]);
      }
      fft::backward(product, corr);
      const auto ni = static_cast<std::int64_t>(n);
      for (const auto& [t, shift] : g.members) {
        auto lag = ((shift % ni) + ni) % ni;
        grid.at(d, t) = corr[static_cast<std::size_t>(lag)] * inv_n;
      }
    }
  }
  return grid;
}

CafGrid bandlimited_caf_grid(const ComplexSignal& x, const PrnCode& code,
                             const std::vector<double>& tau_axis,
                             const std::vector<double>& doppler_axis, double bandwidth) {
  if (tau_axis.empty() || doppler_axis.empty()) {
    throw std::invalid_argument("CAF grid axes must be nonempty");
  }
  const std::size_t n = x.size();
  const double fs = x.sample_rate;
  const double np = kCodePeriod * fs;
  const auto n_period = static_cast<std::size_t>(std::llround(np));
  if (n == 0 || std::abs(np - static_cast<double>(n_period)) > 1e-6 || n % n_period != 0) {
    throw std::invalid_argument(
        "band-limited CAF needs whole code periods of whole samples");
  }
  if (!(bandwidth > 0.0) || !(bandwidth < fs / 2.0)) {
    throw std::invalid_argument("replica bandwidth must lie in (0, sample_rate/2)");
  }
  // acquire_2sp calls this once per block with the same code.
  thread_local std::vector<cplx> c;
  thread_local int cached_prn = -1;
  thread_local double cached_bw = 0.0;
  thread_local std::array<std::int8_t, kCaCodeLength> cached_chips{};
  if (cached_prn != code.prn_id || cached_bw != bandwidth || cached_chips != code.chips) {
    c = chip_harmonics(code, bandwidth);
    cached_prn = code.prn_id;
    cached_bw = bandwidth;
    cached_chips = code.chips;
  }
  const auto h = static_cast<long>(c.size() / 2);
  const auto periods = static_cast<long>(n / n_period);
  const auto len = static_cast<long>(n);

  CafGrid grid{tau_axis, doppler_axis,
               std::vector<cplx>(tau_axis.size() * doppler_axis.size()), code.prn_id};
  std::vector<cplx> wiped(n);
  std::vector<cplx> spectrum(n);
  std::vector<cplx> y(c.size());
  const std::size_t nt = tau_axis.size();
  std::vector<double> sr(nt), si(nt), rr(nt), ri(nt), ar(nt), ai(nt);
  for (std::size_t d = 0; d < doppler_axis.size(); ++d) {
    for (std::size_t k = 0; k < n; ++k) {
      wiped[k] = x.samples[k] * wipeoff(doppler_axis[d], fs, k);
    }
    fft::forward(wiped, spectrum);
    for (long k = -h; k <= h; ++k) {
      long bin = (k * periods) % len;
      if (bin < 0) bin += len;
      auto i = static_cast<std::size_t>(k + h);
      y[i] = std::conj(c[i]) * spectrum[static_cast<std::size_t>(bin)];
    }
    // One rotator per delay, harmonics outermost: the delays' recursions are
    // independent and vectorize.
    for (std::size_t t = 0; t < nt; ++t) {
      double cycles = tau_axis[t] / kCodePeriod;
      cycles -= std::floor(cycles);
      sr[t] = std::cos(kTwoPi * cycles);
      si[t] = std::sin(kTwoPi * cycles);
      const cplx r0 = std::polar(1.0, -kTwoPi * cycles * static_cast<double>(h));
      rr[t] = r0.real();
      ri[t] = r0.imag();
      ar[t] = 0.0;
      ai[t] = 0.0;
    }
    for (const cplx& v : y) {
      const double vr = v.real(), vi = v.imag();
      for (std::size_t t = 0; t < nt; ++t) {
        ar[t] += vr * rr[t] - vi * ri[t];
        ai[t] += vr * ri[t] + vi * rr[t];
        const double t0 = rr[t] * sr[t] - ri[t] * si[t];
        ri[t] = rr[t] * si[t] + ri[t] * sr[t];
        rr[t] = t0;
      }
    }
    for (std::size_t t = 0; t < nt; ++t) grid.at(d, t) = {ar[t], ai[t]};
  }
  return grid;
}

double dpe_cost(const ComplexSignal& x_clean, const ReceiverState& kappa,
                const Scenario& scenario, const CafOptions& options) {
  auto [block, count] = resolve_blocks(x_clean.size(), x_clean.sample_rate, options);
  double cost = 0.0;
  for (const auto& sat : scenario.satellites) {
    PrnCode code = gen_ca_code(sat.prn_id);
    double tau = delay(kappa, sat);
    double fd = doppler(kappa, sat, scenario.carrier_freq);
    for (std::size_t b = 0; b < count; ++b) {
      cost += std::norm(caf_span(x_clean.samples, x_clean.sample_rate, b * block,
                                 block, code, tau, fd));
    }
  }
  return cost;
}

DpeCostEvaluator::DpeCostEvaluator(const ComplexSignal& x_clean,
                                   const Scenario& scenario,
                                   const ReceiverState& reference,
                                   const CafOptions& options)
    : sample_rate_(x_clean.sample_rate), carrier_freq_(scenario.carrier_freq) {
  std::tie(block_samples_, num_blocks_) =
      resolve_blocks(x_clean.size(), sample_rate_, options);
  const std::size_t stride = block_samples_ + 1;

  std::size_t periods = 1;
  if (options.replica_bandwidth > 0.0) {
    const double np = kCodePeriod * sample_rate_;
    const auto n_period = static_cast<std::size_t>(std::llround(np));
    if (std::abs(np - static_cast<double>(n_period)) > 1e-6 ||
        block_samples_ % n_period != 0) {
      throw std::invalid_argument(
          "band-limited replica needs blocks of whole code periods of whole samples");
    }
    if (!(options.replica_bandwidth < sample_rate_ / 2.0)) {
      throw std::invalid_argument("replica bandwidth must be below sample_rate/2");
    }
    matched_ = true;
    periods = block_samples_ / n_period;
    harmonics_ = static_cast<long>(std::floor(options.replica_bandwidth * kCodePeriod + 1e-9));
    grid_points_ = fft_size_at_least(static_cast<std::size_t>(3 * (2 * harmonics_ + 1)));
    grid_step_ = kCodePeriod / static_cast<double>(grid_points_);
  }

  std::vector<cplx> wiped(block_samples_);
  std::vector<cplx> spectrum(block_samples_);
  for (const auto& sat : scenario.satellites) {
    Channel ch;
    ch.sat = sat;
    PrnCode code = gen_ca_code(sat.prn_id);
    for (std::size_t k = 0; k < kCaCodeLength; ++k) ch.chips[k] = code.chips[k];
    ch.ref_doppler = doppler(reference, sat, carrier_freq_);
    ch.ref_delay = delay(reference, sat);
    if (matched_) {
      const std::vector<cplx> c = chip_harmonics(code, options.replica_bandwidth);
      const std::size_t width = c.size();
      const auto len = static_cast<long>(block_samples_);
      ch.spectra.resize(num_blocks_ * width);
      for (std::size_t b = 0; b < num_blocks_; ++b) {
        // Phasor recursion, re-anchored every 1024 samples.
        const cplx step = wipeoff(ch.ref_doppler, sample_rate_, 1);
        cplx rot{1.0, 0.0};
        for (std::size_t m = 0; m < block_samples_; ++m) {
          std::size_t n = b * block_samples_ + m;
          if (m % 1024 == 0) rot = wipeoff(ch.ref_doppler, sample_rate_, n);
          wiped[m] = x_clean.samples[n] * rot;
          rot *= step;
        }
        fft::forward(wiped, spectrum);
        for (long k = -harmonics_; k <= harmonics_; ++k) {
          long bin = (k * static_cast<long>(periods)) % len;
          if (bin < 0) bin += len;
          auto i = static_cast<std::size_t>(k + harmonics_);
          ch.spectra[b * width + i] = std::conj(c[i]) * spectrum[static_cast<std::size_t>(bin)];
        }
      }
      channels_.push_back(std::move(ch));
      continue;
    }
    ch.prefix.assign(num_blocks_ * stride, cplx{0.0, 0.0});
    for (std::size_t b = 0; b < num_blocks_; ++b) {
      cplx* s = ch.prefix.data() + b * stride;
      for (std::size_t m = 0; m < block_samples_; ++m) {
        std::size_t n = b * block_samples_ + m;
        s[m + 1] = s[m] + x_clean.samples[n] * wipeoff(ch.ref_doppler, sample_rate_, n);
      }
    }
    channels_.push_back(std::move(ch));
  }
}

double DpeCostEvaluator::channel_power(std::size_t sat_index,
                                       const ReceiverState& kappa) const {
  const Channel& ch = channels_.at(sat_index);
  const double tau = delay(kappa, ch.sat);
  if (matched_) {
    if (!tables_.empty()) {
      bool hit = false;
      double p = matched_power_table(tables_[sat_index], tau, hit);
      if (hit) return p;
    }
    return matched_power_at(ch, tau);
  }
  if (!tables_.empty()) {
    const Table& t = tables_[sat_index];
    double cell = std::floor((sample_rate_ * tau - t.u0) * kTableCells);
    if (cell >= 0.0 && cell < static_cast<double>(t.power.size())) {
      return t.power[static_cast<std::size_t>(cell)];
    }
    return channel_power_at(sat_index, tau, 0.0);
  }
  return channel_power_at(sat_index, tau,
                          doppler(kappa, ch.sat, carrier_freq_) - ch.ref_doppler);
}

double DpeCostEvaluator::matched_power_at(const Channel& ch, double tau) const {
  const std::size_t width = static_cast<std::size_t>(2 * harmonics_ + 1);
  double cycles = tau / kCodePeriod;
  cycles -= std::floor(cycles);
  const cplx step = std::polar(1.0, kTwoPi * cycles);
  const cplx first = std::polar(1.0, -kTwoPi * cycles * static_cast<double>(harmonics_));
  double power = 0.0;
  for (std::size_t b = 0; b < num_blocks_; ++b) {
    const cplx* y = ch.spectra.data() + b * width;
    cplx rot = first;
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < width; ++i) {
      acc += y[i] * rot;
      rot *= step;
    }
    power += std::norm(acc);
  }
  return power;
}

double DpeCostEvaluator::matched_power_table(const Table& t, double tau, bool& hit) const {
  const double u = tau / grid_step_ - t.g0;
  const double cell = std::floor(u);
  const std::size_t stride = 3 * num_blocks_;
  const double cells = static_cast<double>(t.corr.size() / stride);
  hit = cell >= 0.0 && cell + 1.0 < cells;
  if (!hit) return 0.0;
  // Quintic Hermite basis on [0, 1] for values, slopes and curvatures at
  // both ends.
  const double x = u - cell;
  const double x2 = x * x;
  const double x3 = x2 * x;
  const double x4 = x3 * x;
  const double x5 = x4 * x;
  const double h0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
  const double h1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
  const double h2 = 0.5 * (x2 - 3.0 * x3 + 3.0 * x4 - x5);
  const double h3 = 0.5 * (x3 - 2.0 * x4 + x5);
  const double h4 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
  const double h5 = 10.0 * x3 - 15.0 * x4 + 6.0 * x5;
  const cplx* a = t.corr.data() + static_cast<std::size_t>(cell) * stride;
  const cplx* b = a + stride;
  double power = 0.0;
  for (std::size_t k = 0; k < num_blocks_; ++k) {
    const cplx* p = a + 3 * k;
    const cplx* q = b + 3 * k;
    cplx z = h0 * p[0] + h1 * p[1] + h2 * p[2] + h3 * q[2] + h4 * q[1] + h5 * q[0];
    power += std::norm(z);
  }
  return power;
}

void DpeCostEvaluator::tabulate_matched(double half_window_m) {
  const std::size_t m = grid_points_;
  const auto ml = static_cast<long>(m);
  const std::size_t width = static_cast<std::size_t>(2 * harmonics_ + 1);
  // The transforms span the whole code period anyway; a wide window costs
  // only memory and keeps a search that wanders under interference on the
  // table.
  const double half_window = std::max(half_window_m, kMinReplicaWindow) / kSpeedOfLight;
  std::vector<cplx> spec(m);
  std::vector<std::vector<cplx>> out(3, std::vector<cplx>(m));

  std::vector<Table> tables;
  for (const Channel& ch : channels_) {
    Table t;
    t.g0 = std::floor((ch.ref_delay - half_window) / grid_step_) - 1.0;
    const double g1 = std::ceil((ch.ref_delay + half_window) / grid_step_) + 1.0;
    const auto cells = static_cast<std::size_t>(g1 - t.g0) + 1;
    t.corr.assign(cells * 3 * num_blocks_, cplx{0.0, 0.0});
    long start = static_cast<long>(std::fmod(t.g0, static_cast<double>(m)));
    if (start < 0) start += ml;

    for (std::size_t b = 0; b < num_blocks_; ++b) {
      const cplx* y = ch.spectra.data() + b * width;
      for (int d = 0; d < 3; ++d) {
        std::fill(spec.begin(), spec.end(), cplx{0.0, 0.0});
        for (long k = -harmonics_; k <= harmonics_; ++k) {
          // d-th derivative in units of the grid step: (j2πk/M)^d.
          const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(m);
          cplx f = d == 0 ? cplx{1.0, 0.0} : d == 1 ? cplx{0.0, w} : cplx{-w * w, 0.0};
          long bin = k % ml;
          if (bin < 0) bin += ml;
          spec[static_cast<std::size_t>(bin)] = f * y[k + harmonics_];
        }
        fft::backward(spec, out[static_cast<std::size_t>(d)]);
      }
      for (std::size_t c = 0; c < cells; ++c) {
        std::size_t g = (static_cast<std::size_t>(start) + c) % m;
        cplx* dst = t.corr.data() + (c * num_blocks_ + b) * 3;
        for (std::size_t d = 0; d < 3; ++d) dst[d] = out[d][g];
      }
    }
    tables.push_back(std::move(t));
  }
  tables_ = std::move(tables);
}

double DpeCostEvaluator::channel_power_at(std::size_t sat_index, double tau,
                                          double residual) const {
  const Channel& ch = channels_.at(sat_index);
  if (matched_) {
    if (residual != 0.0) {
      throw std::invalid_argument("band-limited replica has no residual Doppler");
    }
    return matched_power_at(ch, tau);
  }
  const double fs = sample_rate_;
  const double chip_samples = fs / kCaChipRate;
  const auto block_len = static_cast<std::int64_t>(block_samples_);
  const std::size_t stride = block_samples_ + 1;
  const cplx chip_step = std::polar(1.0, -kTwoPi * residual / kCaChipRate);

  double power = 0.0;
  for (std::size_t b = 0; b < num_blocks_; ++b) {
    const cplx* s = ch.prefix.data() + b * stride;
    const auto n0 = static_cast<std::int64_t>(b * block_samples_);
    const std::int64_t k_first =
        chip_at(static_cast<double>(n0) / fs - tau, kCaChipRate);
    const std::int64_t k_last =
        chip_at(static_cast<double>(n0 + block_len - 1) / fs - tau, kCaChipRate);

    double cycles = residual * (tau + (static_cast<double>(k_first) + 0.5) / kCaChipRate);
    cycles -= std::floor(cycles);
    cplx phasor = std::polar(1.0, -kTwoPi * cycles);

    cplx acc{0.0, 0.0};
    std::int64_t lo = 0;
    for (std::int64_t k = k_first; k <= k_last; ++k) {
      std::int64_t hi = block_len;
      if (k < k_last) {
        double edge = fs * tau + (static_cast<double>(k + 1) - kChipEpsilon) * chip_samples;
        hi = std::clamp(static_cast<std::int64_t>(std::ceil(edge)) - n0,
                        std::int64_t{0}, block_len);
      }
      if (hi > lo) {
        cplx partial = s[hi] - s[lo];
        acc += ch.chips[wrap_chip(k)] * partial * phasor;
        lo = hi;
      }
      phasor *= chip_step;
    }
    power += std::norm(acc);
  }
  return power;
}

void DpeCostEvaluator::tabulate(double half_window_m) {
  if (!(half_window_m > 0.0)) {
    throw std::invalid_argument("table half window must be positive");
  }
  if (matched_) {
    tabulate_matched(half_window_m);
    return;
  }
  const double fs = sample_rate_;
  const double cs = fs / kCaChipRate;  // samples per chip
  const auto len = static_cast<std::int64_t>(block_samples_);
  const std::size_t stride = block_samples_ + 1;
  const double half_window = half_window_m / kSpeedOfLight * fs;

  std::vector<Table> tables;
  std::vector<cplx> delta;
  for (const Channel& ch : channels_) {
    Table t;
    const double u_ref = fs * ch.ref_delay;
    t.u0 = std::floor(u_ref - half_window);
    const double u_max = std::ceil(u_ref + half_window);
    const auto cells = static_cast<std::size_t>((u_max - t.u0) * kTableCells);
    t.power.assign(cells, 0.0);
    delta.resize(cells);
    const double u_first = t.u0 + 0.5 / kTableCells;

    for (std::size_t b = 0; b < num_blocks_; ++b) {
      const cplx* s = ch.prefix.data() + b * stride;
      const auto n0 = static_cast<std::int64_t>(b * block_samples_);
      // Chips k_min - 1 and below end before the block, k_max and above
      // cover its end, for every delay in the window.
      const auto k_min =
          static_cast<std::int64_t>(std::floor((static_cast<double>(n0) - u_max) / cs)) - 2;
      const auto k_max = static_cast<std::int64_t>(
                             std::ceil((static_cast<double>(n0 + len) - t.u0) / cs)) + 2;
      std::fill(delta.begin(), delta.end(), cplx{0.0, 0.0});

      // acc = c_kmax S[L] + Σ_{k<k_max} (c_k − c_{k+1}) S[hi_k], hi_k the
      // first sample (block-relative, clamped) after chip k.
      cplx acc = ch.chips[wrap_chip(k_max)] * s[len];
      for (std::int64_t k = k_min; k < k_max; ++k) {
        double d = ch.chips[wrap_chip(k)] - ch.chips[wrap_chip(k + 1)];
        if (d == 0.0) continue;
        const double offset = (static_cast<double>(k + 1) - kChipEpsilon) * cs;
        std::int64_t hi = std::clamp(
            static_cast<std::int64_t>(std::ceil(u_first + offset)) - n0,
            std::int64_t{0}, len);
        acc += d * s[hi];
        // hi_k reaches j once u > n0 + j − 1 − offset.
        for (std::int64_t j = hi + 1; j <= len; ++j) {
          double theta = static_cast<double>(n0 + j - 1) - offset;
          double m = std::floor((theta - t.u0) * kTableCells - 0.5) + 1.0;
          if (m >= static_cast<double>(cells)) break;
          delta[static_cast<std::size_t>(std::max(m, 0.0))] += d * (s[j] - s[j - 1]);
        }
      }
      for (std::size_t m = 0; m < cells; ++m) {
        if (m > 0) acc += delta[m];
        t.power[m] += std::norm(acc);
      }
    }
    tables.push_back(std::move(t));
  }
  tables_ = std::move(tables);
}

double DpeCostEvaluator::operator()(const ReceiverState& kappa) const {
  double cost = 0.0;
  for (std::size_t i = 0; i < channels_.size(); ++i) cost += channel_power(i, kappa);
  return cost;
}

}  // namespace rimdpe
