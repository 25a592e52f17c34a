#include "risvr/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risvr {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ChannelParams::validate() const {
  if (!(power_w > 0.0)) throw std::invalid_argument("ChannelParams: power must be > 0");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("ChannelParams: carrier must be > 0");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("ChannelParams: bandwidth must be > 0");
  if (!(k_abs >= 0.0)) throw std::invalid_argument("ChannelParams: k_abs must be >= 0");
  if (!(temperature_k > 0.0)) throw std::invalid_argument("ChannelParams: temperature must be > 0");
  if (n_meta < 1) throw std::invalid_argument("ChannelParams: n_meta must be >= 1");
  if (z_levels < 2) throw std::invalid_argument("ChannelParams: z_levels must be >= 2");
  if (!(slot_s > 0.0)) throw std::invalid_argument("ChannelParams: slot duration must be > 0");
  if (!(image_bits >= 1.0)) throw std::invalid_argument("ChannelParams: image size must be >= 1 bit");
}

double ChannelParams::a0() const {
  return kSpeedOfLight * kSpeedOfLight / (16.0 * kPi * kPi * carrier_hz * carrier_hz);
}

double ChannelParams::n0() const {
  const double lam = wavelength();
  return bandwidth_hz * lam * lam / (4.0 * kPi) * kBoltzmann * temperature_k;
}

double RateMatrix::max_image_rate() const {
  double m = 0.0;
  for (double v : r_images.data()) m = std::max(m, v);
  return m;
}

double path_gain(double d, const ChannelParams& params) {
  if (!(d > 0.0)) throw std::invalid_argument("path_gain: distance must be > 0");
  const double a = params.wavelength() / (4.0 * kPi * d);
  return a * a * std::exp(-2.0 * params.k_abs * d);
}

double noise_power(std::span<const double> distances_to_all_ris, const ChannelParams& params) {
  double n = params.n0();
  for (double d : distances_to_all_ris) {
    if (!(d > 0.0)) throw std::invalid_argument("noise_power: distance must be > 0");
    n += params.power_w * params.a0() / (d * d) * (1.0 - std::exp(-params.k_abs * d));
  }
  return n;
}

PhaseVector quantize_phase(const PhaseVector& psi, int z_levels) {
  if (z_levels < 2) throw std::invalid_argument("quantize_phase: z_levels must be >= 2");
  const double step = 2.0 * kPi / (z_levels - 1);
  PhaseVector out;
  out.reserve(psi.size());
  for (double p : psi) {
    double x = (p + kPi) / step;
    double k = std::floor(x);
    const double frac = x - k;
    // Round to nearest grid index; an exact half goes to the smaller phase.
    if (frac > 0.5) k += 1.0;
    k = std::clamp(k, 0.0, static_cast<double>(z_levels - 1));
    out.push_back(-kPi + k * step);
  }
  return out;
}

double array_gain(const PhaseVector& phi, const PhaseVector& psi) {
  if (phi.size() != psi.size())
    throw std::invalid_argument("array_gain: phase vectors must have equal length");
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double e = phi[n] - psi[n];
    re += std::cos(e);
    im += std::sin(e);
  }
  return re * re + im * im;
}

PhaseVector draw_phases(int n_meta, Rng& rng) {
  PhaseVector psi(n_meta);
  for (auto& p : psi) p = rng.angle();
  return psi;
}

RateMatrix link_rate(const LinkGeometry& geom, const std::vector<PhaseVector>& psi_all,
                     const ChannelParams& params) {
  params.validate();
  const int b_count = geom.s.rows();
  const int u_count = geom.s.cols();
  if (static_cast<int>(psi_all.size()) != b_count * u_count)
    throw std::invalid_argument("link_rate: psi_all size must be B*U");

  RateMatrix rm;
  rm.r_bps = Grid<double>(b_count, u_count);
  rm.r_images = Grid<double>(b_count, u_count);
  const double image_scale = params.slot_s / params.image_bits;

  for (int u = 0; u < u_count; ++u) {
    // The absorption-noise sum runs over every RIS the user hears,
    // independent of which link is being rated.
    std::vector<double> du(b_count);
    for (int b = 0; b < b_count; ++b) du[b] = geom.d.at(b, u);
    const double noise = noise_power(du, params);

    for (int b = 0; b < b_count; ++b) {
      if (!geom.s.at(b, u)) continue;  // blocked: rate stays exactly 0
      const PhaseVector& psi = psi_all[static_cast<std::size_t>(b) * u_count + u];
      if (static_cast<int>(psi.size()) != params.n_meta)
        throw std::invalid_argument("link_rate: phase vector length must equal n_meta");
      const double g = array_gain(quantize_phase(psi, params.z_levels), psi);
      const double h = path_gain(geom.d.at(b, u), params);
      const double snr = params.power_w * h * g / noise;
      const double r = params.bandwidth_hz * std::log2(1.0 + snr);
      rm.r_bps.at(b, u) = r;
      rm.r_images.at(b, u) = r * image_scale;
    }
  }
  return rm;
}

}  // namespace risvr
