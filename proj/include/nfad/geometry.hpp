// SPDX-License-Identifier: Apache-2.0
//
// Near-field / far-field channel statistics for a uniform linear array.
//
// The array lies on the x axis, centred at the origin, with half-wavelength
// spacing. Devices and scatterers live in the 2-D plane. Every device is
// described by a LoS mean vector and a correlation factor F with R = F F^H.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nfad/types.hpp"

namespace nfad {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point2 a, Point2 b);

struct GeometryConfig {
  double carrier_wavelength_m = 0.1;  // 3 GHz
  int antenna_count = 32;
  double cell_radius_m = 500.0;
  double scatterer_region_radius_m = 200.0;

  double antenna_spacing() const { return carrier_wavelength_m / 2.0; }
  double aperture() const { return (antenna_count - 1) * antenna_spacing(); }
  Point2 antenna_position(int m) const;
  void validate() const;
};

/// 2 D^2 / lambda with D the array aperture.
double rayleigh_distance(const GeometryConfig& geom);

struct DeviceGeometry {
  Point2 position;
  std::vector<Point2> scatterers;
  bool is_near_field = false;
};

/// Per-scatterer gains: intensity attenuation sigma^2, scatterer-to-device
/// amplitude |beta_{n,l}| and scatterer-to-array amplitude beta_l.
struct ScattererGain {
  double intensity = 1.0;
  double device_gain = 1.0;
  double bs_gain = 1.0;
};

enum class ChannelKind { correlated, scaled_identity };

struct ChannelStats {
  CVec los_mean;     // length M
  CMat corr_factor;  // M x r, R = F F^H
  ChannelKind kind = ChannelKind::correlated;
  double large_scale_gain = 0.0;  // tr(R) / M

  Index corr_rank() const { return corr_factor.cols(); }
  CMat correlation() const { return corr_factor * corr_factor.adjoint(); }
  double trace() const { return corr_factor.squaredNorm(); }
  double expected_power() const { return los_mean.squaredNorm() + trace(); }
};

/// Spherical-wave array response of a point source: entry m is
/// gain * exp(-j 2 pi / lambda (d_m - d_0)), d_0 measured to the array centre.
CVec steering_vector(Point2 source, const GeometryConfig& geom, double gain);

/// Plane-wave approximation of steering_vector (far-field devices).
CVec plane_wave_vector(Point2 source, const GeometryConfig& geom, double gain);

CVec los_vector(const DeviceGeometry& device, const GeometryConfig& geom, double gain);

/// Columns are sigma_l |beta_{n,l}| h_l, so factor * factor^H is the
/// scatterer sum for R_n term by term.
CMat correlation_factor(const DeviceGeometry& device, const GeometryConfig& geom,
                        std::span<const ScattererGain> gains);

/// Scales mean and factor by one real amplitude so that |h|^2 + tr(R) = target.
ChannelStats apply_power_control(ChannelStats stats, double target);

/// 128.1 + 37.6 log10(d) with d in km.
double pathloss_db(double distance_km);

/// Linear amplitude gain 10^(-PL/20) for a distance in metres.
double pathloss_amplitude(double distance_m);

ChannelStats make_correlated(CVec los_mean, CMat corr_factor);
ChannelStats make_scaled_identity(CVec los_mean, double gain, int antenna_count);

/// R replaced by (tr(R)/M) I, mean kept.
ChannelStats trace_matched_identity(const ChannelStats& stats);

std::size_t numerical_rank(const CMat& a, double rel_tol = 1e-9);

// ---------------------------------------------------------------------------
// Scenario populations

enum class NearFieldPolicy {
  all_correlated,  // every device gets a scatterer-sum correlation matrix
  geometric,       // correlated iff closer than the Rayleigh distance
  first_n_corr,    // devices [0, n_corr) correlated, the rest g I
};

struct ScenarioConfig {
  GeometryConfig geometry;
  int devices = 200;
  int scatterers_per_device = 4;
  bool line_of_sight = true;         // false: zero-mean (Rayleigh)
  bool uncorrelated = false;         // replace R by the trace-matched identity
  NearFieldPolicy policy = NearFieldPolicy::all_correlated;
  int n_corr = 0;
  double power_mw = 3.0902954325135904e-11;      // -105.1 dBm
  double noise_power_mw = 1.2589254117941662e-10;  // -169 dBm/Hz over 10 MHz
  double min_device_distance_m = 10.0;
  double min_scatterer_distance_m = 5.0;

  void validate() const;
};

struct DevicePopulation {
  GeometryConfig geometry;
  std::vector<DeviceGeometry> devices;
  std::vector<ChannelStats> channels;
  double noise_power = 1.0;

  std::size_t size() const { return channels.size(); }
};

DevicePopulation generate_population(const ScenarioConfig& cfg, std::uint64_t seed);

/// Same devices with every correlation matrix replaced by its trace-matched identity.
DevicePopulation mismatched_population(const DevicePopulation& pop);

double dbm_to_mw(double dbm);

}  // namespace nfad
