// SPDX-License-Identifier: Apache-2.0
#include "nfad/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace nfad {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point2 GeometryConfig::antenna_position(int m) const {
  const double centre = 0.5 * (antenna_count - 1);
  return {(m - centre) * antenna_spacing(), 0.0};
}

void GeometryConfig::validate() const {
  if (!(carrier_wavelength_m > 0.0)) throw ConfigError("carrier wavelength must be positive");
  if (antenna_count < 1) throw ConfigError("antenna count must be positive");
  if (!(cell_radius_m > 0.0) || !(scatterer_region_radius_m > 0.0))
    throw ConfigError("cell and scatterer radii must be positive");
}

double rayleigh_distance(const GeometryConfig& geom) {
  const double d = geom.aperture();
  return 2.0 * d * d / geom.carrier_wavelength_m;
}

namespace {

void check_not_on_array(Point2 source, const GeometryConfig& geom) {
  const double eps = 1e-9 * geom.carrier_wavelength_m;
  for (int m = 0; m < geom.antenna_count; ++m) {
    if (distance(source, geom.antenna_position(m)) <= eps)
      throw GeometryError("source coincides with an antenna position");
  }
}

}  // namespace

CVec steering_vector(Point2 source, const GeometryConfig& geom, double gain) {
  check_not_on_array(source, geom);
  const double k = 2.0 * std::numbers::pi / geom.carrier_wavelength_m;
  const double d0 = distance(source, {0.0, 0.0});
  CVec h(geom.antenna_count);
  for (int m = 0; m < geom.antenna_count; ++m) {
    const double dm = distance(source, geom.antenna_position(m));
    h(m) = std::polar(gain, -k * (dm - d0));
  }
  return h;
}

CVec plane_wave_vector(Point2 source, const GeometryConfig& geom, double gain) {
  check_not_on_array(source, geom);
  const double k = 2.0 * std::numbers::pi / geom.carrier_wavelength_m;
  const double d0 = distance(source, {0.0, 0.0});
  const double cos_angle = source.x / d0;
  CVec h(geom.antenna_count);
  for (int m = 0; m < geom.antenna_count; ++m) {
    // d_m - d_0 to first order in the antenna offset
    const double delta = -geom.antenna_position(m).x * cos_angle;
    h(m) = std::polar(gain, -k * delta);
  }
  return h;
}

CVec los_vector(const DeviceGeometry& device, const GeometryConfig& geom, double gain) {
  return steering_vector(device.position, geom, gain);
}

CMat correlation_factor(const DeviceGeometry& device, const GeometryConfig& geom,
                        std::span<const ScattererGain> gains) {
  if (device.scatterers.empty() || gains.empty())
    throw ConfigError("correlated device needs at least one scatterer");
  if (device.scatterers.size() != gains.size())
    throw ConfigError("scatterer gain list does not match scatterer positions");
  CMat factor(geom.antenna_count, static_cast<Index>(gains.size()));
  for (std::size_t l = 0; l < gains.size(); ++l) {
    const double amp = std::sqrt(gains[l].intensity) * std::abs(gains[l].device_gain);
    factor.col(static_cast<Index>(l)) = amp * steering_vector(device.scatterers[l], geom, gains[l].bs_gain);
  }
  return factor;
}

ChannelStats apply_power_control(ChannelStats stats, double target) {
  const double power = stats.expected_power();
  if (!(power > 0.0) || !std::isfinite(power))
    throw NumericalFailure("power control on all-zero channel statistics");
  if (!(target > 0.0)) throw ConfigError("power-control target must be positive");
  const double scale = std::sqrt(target / power);
  stats.los_mean *= scale;
  stats.corr_factor *= scale;
  stats.large_scale_gain = stats.trace() / static_cast<double>(stats.los_mean.size());
  return stats;
}

double pathloss_db(double distance_km) {
  if (!(distance_km > 0.0)) throw GeometryError("path-loss distance must be positive");
  return 128.1 + 37.6 * std::log10(distance_km);
}

double pathloss_amplitude(double distance_m) {
  return std::pow(10.0, -pathloss_db(distance_m / 1000.0) / 20.0);
}

ChannelStats make_correlated(CVec los_mean, CMat corr_factor) {
  if (los_mean.size() != corr_factor.rows()) throw ConfigError("mean/factor dimension mismatch");
  ChannelStats s;
  s.los_mean = std::move(los_mean);
  s.corr_factor = std::move(corr_factor);
  s.kind = ChannelKind::correlated;
  s.large_scale_gain = s.los_mean.size() > 0 ? s.trace() / static_cast<double>(s.los_mean.size()) : 0.0;
  return s;
}

ChannelStats make_scaled_identity(CVec los_mean, double gain, int antenna_count) {
  if (los_mean.size() != antenna_count) throw ConfigError("mean length differs from antenna count");
  if (gain < 0.0) throw ConfigError("large-scale gain must be nonnegative");
  ChannelStats s;
  s.los_mean = std::move(los_mean);
  s.corr_factor = std::sqrt(gain) * CMat::Identity(antenna_count, antenna_count);
  s.kind = ChannelKind::scaled_identity;
  s.large_scale_gain = gain;
  return s;
}

ChannelStats trace_matched_identity(const ChannelStats& stats) {
  const int m = static_cast<int>(stats.los_mean.size());
  return make_scaled_identity(stats.los_mean, stats.trace() / m, m);
}

std::size_t numerical_rank(const CMat& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(a);
  const RVec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
  geometry.validate();
  if (devices < 1) throw ConfigError("scenario needs at least one device");
  if (scatterers_per_device < 1) throw ConfigError("scatterers per device must be >= 1");
  if (policy == NearFieldPolicy::first_n_corr && (n_corr < 0 || n_corr > devices))
    throw ConfigError("n_corr out of range");
  if (!(power_mw > 0.0) || !(noise_power_mw > 0.0)) throw ConfigError("powers must be positive");
  if (min_device_distance_m >= geometry.cell_radius_m)
    throw ConfigError("minimum device distance exceeds the cell radius");
}

namespace {

Point2 uniform_in_annulus(std::mt19937_64& rng, double r_min, double r_max) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = std::sqrt(r_min * r_min + u(rng) * (r_max * r_max - r_min * r_min));
  const double phi = 2.0 * std::numbers::pi * u(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace

DevicePopulation generate_population(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const GeometryConfig& geom = cfg.geometry;
  const int m = geom.antenna_count;
  const double target = cfg.power_mw * m;
  const double rayleigh = rayleigh_distance(geom);

  std::mt19937_64 rng(seed);
  DevicePopulation pop;
  pop.geometry = geom;
  pop.noise_power = cfg.noise_power_mw;
  pop.devices.reserve(static_cast<std::size_t>(cfg.devices));
  pop.channels.reserve(static_cast<std::size_t>(cfg.devices));

  for (int n = 0; n < cfg.devices; ++n) {
    DeviceGeometry dev;
    dev.position = uniform_in_annulus(rng, cfg.min_device_distance_m, geom.cell_radius_m);
    const double dist = distance(dev.position, {0.0, 0.0});
    dev.is_near_field = dist < rayleigh;

    bool correlated = true;
    switch (cfg.policy) {
      case NearFieldPolicy::all_correlated: correlated = true; break;
      case NearFieldPolicy::geometric: correlated = dev.is_near_field; break;
      case NearFieldPolicy::first_n_corr: correlated = n < cfg.n_corr; break;
    }

    const double beta = pathloss_amplitude(dist);
    ChannelStats stats;
    if (correlated) {
      std::vector<ScattererGain> gains;
      for (int l = 0; l < cfg.scatterers_per_device; ++l) {
        Point2 sc = uniform_in_annulus(rng, cfg.min_scatterer_distance_m, geom.scatterer_region_radius_m);
        gains.push_back({1.0, pathloss_amplitude(std::max(distance(sc, dev.position), 1.0)),
                         pathloss_amplitude(distance(sc, {0.0, 0.0}))});
        dev.scatterers.push_back(sc);
      }
      stats = make_correlated(los_vector(dev, geom, beta), correlation_factor(dev, geom, gains));
    } else {
      stats = make_scaled_identity(plane_wave_vector(dev.position, geom, beta), beta * beta, m);
    }
    if (!cfg.line_of_sight) stats.los_mean.setZero();
    stats = apply_power_control(std::move(stats), target);
    if (cfg.uncorrelated) stats = trace_matched_identity(stats);

    pop.devices.push_back(std::move(dev));
    pop.channels.push_back(std::move(stats));
  }
  return pop;
}

DevicePopulation mismatched_population(const DevicePopulation& pop) {
  DevicePopulation out = pop;
  for (auto& ch : out.channels) ch = trace_matched_identity(ch);
  return out;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace nfad
