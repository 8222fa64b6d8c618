#include "rimdpe/rim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rimdpe/fft.hpp"

namespace rimdpe {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double upper = *mid;
  if (n % 2 == 1) return upper;
  double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

void scale_all(std::span<cplx> x, double s) {
  for (auto& v : x) v *= s;
}

}  // namespace

ZmnlSpec ZmnlSpec::huber(double threshold) {
  ZmnlSpec s;
  s.kind = ZmnlKind::huber;
  s.threshold = threshold;
  return s;
}

ZmnlSpec ZmnlSpec::huber_mad(double scale) {
  ZmnlSpec s;
  s.kind = ZmnlKind::huber;
  s.rule = {ThresholdRule::Kind::mad_scaled, scale};
  return s;
}

ZmnlSpec ZmnlSpec::complex_signum() {
  ZmnlSpec s;
  s.kind = ZmnlKind::complex_signum;
  return s;
}

ZmnlSpec ZmnlSpec::myriad(double linearity_param) {
  ZmnlSpec s;
  s.kind = ZmnlKind::myriad;
  s.linearity_param = linearity_param;
  return s;
}

void ZmnlSpec::validate() const {
  if (kind == ZmnlKind::huber) {
    if (rule.kind == ThresholdRule::Kind::fixed && !(threshold > 0.0)) {
      throw std::invalid_argument("huber threshold must be positive");
    }
    if (rule.kind == ThresholdRule::Kind::mad_scaled &&
        (!(rule.scale > 0.0) || !(rule.consistency > 0.0))) {
      throw std::invalid_argument("huber MAD scale must be positive");
    }
  }
  if (kind == ZmnlKind::myriad && !(linearity_param > 0.0)) {
    throw std::invalid_argument("myriad linearity parameter must be positive");
  }
}

void RimConfig::validate() const {
  if (chain.size() > 2) {
    throw std::invalid_argument("RIM chain holds at most two stages");
  }
  for (const auto& stage : chain) stage.zmnl.validate();
}

RimConfig RimConfig::scheme(const std::string& name, const ZmnlSpec& zmnl,
                            std::size_t block_size) {
  RimConfig c;
  c.block_size = block_size;
  if (name == "none") {
  } else if (name == "td") {
    c.chain = {{Domain::time, zmnl}};
  } else if (name == "fd") {
    c.chain = {{Domain::frequency, zmnl}};
  } else if (name == "dd-tf") {
    c.chain = {{Domain::time, zmnl}, {Domain::frequency, zmnl}};
  } else if (name == "dd-ft") {
    c.chain = {{Domain::frequency, zmnl}, {Domain::time, zmnl}};
  } else {
    throw std::invalid_argument("unknown RIM scheme '" + name + "'");
  }
  return c;
}

std::string RimConfig::label() const {
  if (chain.empty()) return "none";
  std::string s = chain.size() == 2 ? "dd-" : "";
  for (const auto& stage : chain) {
    s += stage.domain == Domain::time ? "t" : "f";
  }
  if (chain.size() == 1) s += "d";
  return s;
}

cplx huber_zmnl(cplx z, double threshold) {
  double mag = std::abs(z);
  if (mag <= threshold) return z;
  return z * (threshold / mag);
}

cplx complex_signum_zmnl(cplx z) {
  double mag = std::abs(z);
  if (mag == 0.0) return {0.0, 0.0};
  return z / mag;
}

cplx myriad_zmnl(cplx z, double linearity_param) {
  return linearity_param * z / (linearity_param + std::norm(z));
}

double estimate_component_sigma(std::span<const cplx> x) {
  if (x.empty()) {
    throw std::invalid_argument("cannot estimate scale of an empty signal");
  }
  std::vector<double> pooled;
  pooled.reserve(2 * x.size());
  for (const auto& s : x) {
    pooled.push_back(s.real());
    pooled.push_back(s.imag());
  }
  std::vector<double> work = pooled;
  double center = median_inplace(work);
  for (auto& v : pooled) v = std::abs(v - center);
  return median_inplace(pooled) / kMadConsistency;
}

double estimate_sigma_mad(std::span<const cplx> x) {
  return std::sqrt(2.0) * estimate_component_sigma(x);
}

double estimate_sigma_mad(const ComplexSignal& x) {
  return estimate_sigma_mad(std::span<const cplx>(x.samples));
}

double resolve_threshold(const ZmnlSpec& spec, std::span<const cplx> block) {
  if (spec.rule.kind == ThresholdRule::Kind::mad_scaled) {
    return spec.rule.scale * estimate_component_sigma(block) * kMadConsistency /
           spec.rule.consistency;
  }
  return spec.threshold;
}

void apply_zmnl_inplace(std::span<cplx> x, const ZmnlSpec& spec) {
  switch (spec.kind) {
    case ZmnlKind::identity:
      return;
    case ZmnlKind::huber: {
      double th = resolve_threshold(spec, x);
      for (auto& z : x) z = huber_zmnl(z, th);
      return;
    }
    case ZmnlKind::complex_signum:
      for (auto& z : x) z = complex_signum_zmnl(z);
      return;
    case ZmnlKind::myriad:
      for (auto& z : x) z = myriad_zmnl(z, spec.linearity_param);
      return;
  }
}

ComplexSignal apply_zmnl(const ComplexSignal& x, const ZmnlSpec& spec) {
  spec.validate();
  ComplexSignal y = x;
  apply_zmnl_inplace(y.samples, spec);
  return y;
}

void forward_transform_inplace(std::span<cplx> x) {
  fft::forward(x, x);
  scale_all(x, 1.0 / std::sqrt(static_cast<double>(x.size())));
}

void inverse_transform_inplace(std::span<cplx> x) {
  fft::backward(x, x);
  scale_all(x, 1.0 / std::sqrt(static_cast<double>(x.size())));
}

ComplexSignal forward_transform(const ComplexSignal& x) {
  ComplexSignal y = x;
  forward_transform_inplace(y.samples);
  return y;
}

ComplexSignal inverse_transform(const ComplexSignal& x) {
  ComplexSignal y = x;
  inverse_transform_inplace(y.samples);
  return y;
}

ComplexSignal apply_rim(const ComplexSignal& x, const RimConfig& config) {
  config.validate();
  ComplexSignal y = x;
  if (config.chain.empty() || y.empty()) return y;
  const std::size_t block =
      config.block_size == 0 ? y.size() : std::min(config.block_size, y.size());
  for (std::size_t start = 0; start < y.size(); start += block) {
    std::span<cplx> seg(y.samples.data() + start,
                        std::min(block, y.size() - start));
    for (const auto& stage : config.chain) {
      if (stage.domain == Domain::frequency) {
        forward_transform_inplace(seg);
        apply_zmnl_inplace(seg, stage.zmnl);
        inverse_transform_inplace(seg);
      } else {
        apply_zmnl_inplace(seg, stage.zmnl);
      }
    }
  }
  return y;
}

}  // namespace rimdpe
