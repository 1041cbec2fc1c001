// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "nfad/geometry.hpp"
#include "support.hpp"

using namespace nfad;

namespace {

GeometryConfig array_of(int m) {
  GeometryConfig g;
  g.antenna_count = m;
  return g;
}

// Entry m of the spherical-wave response, from explicit antenna coordinates.
cplx direct_entry(Point2 src, int m, int count, double lambda, double gain) {
  const double spacing = lambda / 2.0;
  const double xm = (m - (count - 1) / 2.0) * spacing;
  const double dm = std::sqrt((src.x - xm) * (src.x - xm) + src.y * src.y);
  const double d0 = std::sqrt(src.x * src.x + src.y * src.y);
  const double phase = -2.0 * std::numbers::pi / lambda * (dm - d0);
  return gain * cplx(std::cos(phase), std::sin(phase));
}

}  // namespace

TEST_CASE("rayleigh distance") {
  CHECK(rayleigh_distance(array_of(32)) == doctest::Approx(48.05).epsilon(1e-12));
  CHECK(rayleigh_distance(array_of(2)) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(rayleigh_distance(array_of(128)) == doctest::Approx(806.45).epsilon(1e-12));
  double prev = 0.0;
  for (int m = 2; m <= 256; ++m) {
    const double d = rayleigh_distance(array_of(m));
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("los vector symmetry and plane-wave limit") {
  const GeometryConfig g2 = array_of(2);
  DeviceGeometry dev;
  dev.position = {0.0, 7.0};
  const CVec h = los_vector(dev, g2, 0.3);
  CHECK(std::abs(h(0) - h(1)) < 1e-15);
  CHECK(std::abs(h(0)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(std::abs(h(0) - direct_entry(dev.position, 0, 2, 0.1, 0.3)) < 1e-14);

  const GeometryConfig g8 = array_of(8);
  dev.position = {0.0, 1e7};
  const CVec far = los_vector(dev, g8, 2.0);
  for (Index m = 0; m < far.size(); ++m) CHECK(std::abs(far(m) - cplx(2.0, 0.0)) < 1e-6);
}

TEST_CASE("los vector matches direct per-antenna distances") {
  const GeometryConfig g = array_of(4);
  for (Point2 p : {Point2{10.0, 0.0}, Point2{3.0, -2.5}, Point2{-40.0, 17.0}}) {
    DeviceGeometry dev;
    dev.position = p;
    const CVec h = los_vector(dev, g, 0.7);
    for (int m = 0; m < 4; ++m) {
      CHECK(std::abs(h(m) - direct_entry(p, m, 4, g.carrier_wavelength_m, 0.7)) < 1e-12);
      CHECK(std::abs(h(m)) == doctest::Approx(0.7).epsilon(1e-14));
    }
  }
}

TEST_CASE("source on an antenna is rejected") {
  const GeometryConfig g = array_of(4);
  DeviceGeometry dev;
  dev.position = g.antenna_position(1);
  CHECK_THROWS_AS(los_vector(dev, g, 1.0), GeometryError);
}

TEST_CASE("single scatterer gives a rank-one factor with trace M") {
  const GeometryConfig g = array_of(8);
  DeviceGeometry dev;
  dev.position = {30.0, 40.0};
  dev.scatterers = {{12.0, -5.0}};
  const ScattererGain gain{1.0, 1.0, 1.0};
  const CMat f = correlation_factor(dev, g, std::span<const ScattererGain>(&gain, 1));
  const CVec hl = steering_vector(dev.scatterers[0], g, 1.0);
  const CMat r = f * f.adjoint();
  CHECK(testing::rel_fro(r, hl * hl.adjoint()) < 1e-14);
  CHECK(numerical_rank(r) == 1);
  CHECK(r.trace().real() == doctest::Approx(8.0));
}

TEST_CASE("coincident scatterers collapse the rank") {
  const GeometryConfig g = array_of(8);
  DeviceGeometry dev;
  dev.position = {30.0, 40.0};
  dev.scatterers = {{12.0, -5.0}, {12.0, -5.0}};
  const std::vector<ScattererGain> gains{{1.0, 0.5, 1.0}, {1.0, 2.0, 1.0}};
  const CMat f = correlation_factor(dev, g, gains);
  CHECK(f.cols() == 2);
  CHECK(numerical_rank(f * f.adjoint()) == 1);
}

TEST_CASE("factor product equals the scatterer sum") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-150.0, 150.0), amp(0.1, 2.0);
  const GeometryConfig g = array_of(16);
  for (int rep = 0; rep < 20; ++rep) {
    DeviceGeometry dev;
    dev.position = {pos(rng), pos(rng)};
    std::vector<ScattererGain> gains;
    for (int l = 0; l < 4; ++l) {
      dev.scatterers.push_back({pos(rng), pos(rng)});
      gains.push_back({amp(rng), amp(rng), amp(rng)});
    }
    CMat direct = CMat::Zero(16, 16);
    for (int l = 0; l < 4; ++l) {
      CVec hl(16);
      for (int m = 0; m < 16; ++m)
        hl(m) = direct_entry(dev.scatterers[l], m, 16, g.carrier_wavelength_m, gains[l].bs_gain);
      direct += gains[l].intensity * gains[l].device_gain * gains[l].device_gain * hl * hl.adjoint();
    }
    const CMat f = correlation_factor(dev, g, gains);
    CHECK(testing::rel_fro(f * f.adjoint(), direct) < 1e-12);
    CHECK(numerical_rank(direct) <= 4);
  }
}

TEST_CASE("power control") {
  std::mt19937_64 rng(5);
  const CVec mean = testing::random_cvec(rng, 6);
  const CMat factor = testing::random_cmat(rng, 6, 2);
  ChannelStats s = make_correlated(mean, factor);
  const double p = s.expected_power();

  const ChannelStats half = apply_power_control(s, p / 4.0);
  CHECK(testing::rel_fro(half.los_mean, 0.5 * mean) < 1e-14);
  CHECK(testing::rel_fro(half.corr_factor, 0.5 * factor) < 1e-14);

  ChannelStats zero_mean = make_correlated(CVec::Zero(6), factor);
  const ChannelStats same = apply_power_control(zero_mean, factor.squaredNorm());
  CHECK(testing::rel_fro(same.corr_factor, factor) < 1e-15);

  for (int rep = 0; rep < 50; ++rep) {
    ChannelStats r = make_correlated(testing::random_cvec(rng, 5), testing::random_cmat(rng, 5, 3));
    const double target = std::exp(std::uniform_real_distribution<double>(-30.0, 5.0)(rng));
    const ChannelStats out = apply_power_control(r, target);
    const double recomputed = out.los_mean.squaredNorm() + (out.corr_factor * out.corr_factor.adjoint()).trace().real();
    CHECK(recomputed == doctest::Approx(target).epsilon(1e-12));
    CHECK(out.large_scale_gain == doctest::Approx((recomputed - out.los_mean.squaredNorm()) / 5.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(apply_power_control(make_correlated(CVec::Zero(3), CMat::Zero(3, 1)), 1.0), NumericalFailure);
}

TEST_CASE("path loss") {
  CHECK(pathloss_db(1.0) == doctest::Approx(128.1));
  CHECK(pathloss_db(0.1) == doctest::Approx(90.5));
  CHECK(pathloss_db(0.5) == doctest::Approx(116.7813).epsilon(1e-6));
  CHECK(pathloss_amplitude(1000.0) == doctest::Approx(std::pow(10.0, -128.1 / 20.0)));
  CHECK_THROWS_AS(pathloss_db(0.0), GeometryError);
}

TEST_CASE("scaled identity and trace matching") {
  std::mt19937_64 rng(2);
  const ChannelStats s = make_correlated(testing::random_cvec(rng, 4), testing::random_cmat(rng, 4, 2));
  const ChannelStats t = trace_matched_identity(s);
  const CMat r = s.correlation();
  CHECK(t.kind == ChannelKind::scaled_identity);
  CHECK(t.large_scale_gain == doctest::Approx(r.diagonal().real().mean()));
  CHECK(testing::rel_fro(t.correlation(), t.large_scale_gain * CMat::Identity(4, 4)) < 1e-14);
  CHECK(testing::rel_fro(t.los_mean, s.los_mean) == 0.0);
}

TEST_CASE("generated populations") {
  ScenarioConfig cfg;
  cfg.geometry.antenna_count = 16;
  cfg.devices = 40;
  cfg.scatterers_per_device = 3;
  const DevicePopulation pop = generate_population(cfg, 17);
  REQUIRE(pop.size() == 40);
  const double target = cfg.power_mw * 16;
  const double rayleigh = rayleigh_distance(cfg.geometry);
  for (std::size_t n = 0; n < pop.size(); ++n) {
    const ChannelStats& ch = pop.channels[n];
    const DeviceGeometry& dev = pop.devices[n];
    const double d = distance(dev.position, {0.0, 0.0});
    CHECK(d >= cfg.min_device_distance_m);
    CHECK(d <= cfg.geometry.cell_radius_m);
    CHECK(dev.is_near_field == (d < rayleigh));
    CHECK(ch.expected_power() == doctest::Approx(target).epsilon(1e-10));
    const CMat r = ch.correlation();
    const Eigen::SelfAdjointEigenSolver<CMat> es(r);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * r.trace().real());
    CHECK(numerical_rank(r) <= 3);
    CHECK(ch.large_scale_gain == doctest::Approx(r.trace().real() / 16).epsilon(1e-12));
    const double beta = std::abs(ch.los_mean(0));
    for (Index m = 0; m < 16; ++m) CHECK(std::abs(ch.los_mean(m)) == doctest::Approx(beta).epsilon(1e-12));
  }
  const DevicePopulation again = generate_population(cfg, 17);
  CHECK(testing::rel_fro(again.channels[7].corr_factor, pop.channels[7].corr_factor) == 0.0);

  cfg.policy = NearFieldPolicy::first_n_corr;
  cfg.n_corr = 5;
  cfg.line_of_sight = false;
  const DevicePopulation mixed = generate_population(cfg, 3);
  for (std::size_t n = 0; n < mixed.size(); ++n) {
    CHECK((mixed.channels[n].kind == ChannelKind::correlated) == (n < 5));
    CHECK(mixed.channels[n].los_mean.norm() == 0.0);
  }

  cfg.uncorrelated = true;
  for (const auto& ch : generate_population(cfg, 3).channels) CHECK(ch.kind == ChannelKind::scaled_identity);
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg;
  cfg.devices = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.devices = 4;
  cfg.policy = NearFieldPolicy::first_n_corr;
  cfg.n_corr = 9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(dbm_to_mw(-105.1) == doctest::Approx(cfg.power_mw).epsilon(1e-12));
}
