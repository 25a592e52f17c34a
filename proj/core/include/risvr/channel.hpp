#pragma once

#include <span>
#include <vector>

#include "risvr/geometry.hpp"
#include "risvr/grid.hpp"
#include "risvr/rng.hpp"

namespace risvr {

constexpr double kSpeedOfLight = 3.0e8;        // m/s
constexpr double kBoltzmann = 1.380649e-23;    // J/K

/// THz feeder/RIS link parameters and the derived constants of the
/// narrowband channel model: wavelength lambda = c/f, aperture constant
/// A0 = c^2/(16 pi^2 f^2) and thermal noise floor
/// N0 = W lambda^2 / (4 pi) * k_B * T0.
struct ChannelParams {
  double power_w = 1.0;         // feeder transmit power p
  double carrier_hz = 1.0e12;   // f
  double bandwidth_hz = 30e9;   // W
  double k_abs = 0.0016;        // molecular absorption coefficient, 1/m
  double temperature_k = 300.0; // T0
  int n_meta = 1024;            // N meta-surfaces per RIS
  int z_levels = 8;             // Z discrete phase levels
  double slot_s = 0.01;         // slot duration tau
  double image_bits = 1e7;      // VR image size M

  void validate() const;  // throws std::invalid_argument

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double a0() const;
  double n0() const;
};

/// Per-meta-surface phases of one link, radians.
using PhaseVector = std::vector<double>;

/// Per-link transmission rates: r_bps in bit/s and the image rate
/// r_images = r_bps * tau / M in images per slot.
struct RateMatrix {
  Grid<double> r_bps;
  Grid<double> r_images;

  double max_image_rate() const;
};

/// Free-space pathloss with molecular absorption:
/// (lambda / (4 pi d))^2 * exp(-2 k d). LoS branch only; the blocked
/// branch (gain 0) is applied by the caller via the s indicator.
double path_gain(double d, const ChannelParams& params);

/// Noise floor plus molecular re-radiation summed over all RIS the user
/// hears: N0 + sum_b p A0 d_b^-2 (1 - exp(-k d_b)). An empty distance
/// list yields N0.
double noise_power(std::span<const double> distances_to_all_ris, const ChannelParams& params);

/// Map each phase to the nearest element of the quantizer grid
/// {-pi + 2 pi z / (Z-1) | z = 0..Z-1}; ties go to the smaller phase.
PhaseVector quantize_phase(const PhaseVector& psi, int z_levels);

/// Coherent combining factor |sum_n exp(j(phi_n - psi_n))|^2 in [0, N^2].
double array_gain(const PhaseVector& phi, const PhaseVector& psi);

/// i.i.d. uniform channel phases in [-pi, pi) for one link.
PhaseVector draw_phases(int n_meta, Rng& rng);

/// Per-link rates for one slot. For each LoS link the controller phase
/// is the quantized channel phase; blocked links have rate exactly 0.
/// psi_all is indexed [b * U + u].
RateMatrix link_rate(const LinkGeometry& geom, const std::vector<PhaseVector>& psi_all,
                     const ChannelParams& params);

}  // namespace risvr
