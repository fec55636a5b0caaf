#pragma once

#include "springmass/actuation_params.hpp"
#include "springmass/store.hpp"

namespace springmass {

/// Worm defaults: period 1 s, omega 20 rad/s, expansion 0.2.
struct WormParams {
  Real period = 1.0;
  Real omega = 20.0;
  Real expansion = 0.2;
  WaveMode mode = WaveMode::Wrapped;
};

/// Sets each body spring's offset to min(x1_0, x2_0) - min over the body of
/// x_0, where x_0 is a mass's initial x position. Springs without actuation
/// get a default (zero-amplitude) parameter block so the offset is stored.
void assign_wave_offsets(const Body& body, ObjectStore& store);

/// Installs sine actuation with the given parameters on every body spring,
/// then assigns traveling-wave offsets.
void configure_worm(const Body& body, ObjectStore& store, const WormParams& params = {});

}  // namespace springmass
