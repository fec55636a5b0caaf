#include "springmass/actuation_params.hpp"

#include <cmath>

#include "springmass/errors.hpp"

namespace springmass {

void ActuationParams::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw ValidationError("actuation period must be positive");
  }
  if (!(std::abs(expansion) < 1.0)) {
    throw ValidationError("actuation expansion factor must satisfy |c| < 1");
  }
  if (!std::isfinite(omega) || !std::isfinite(offset)) {
    throw ValidationError("actuation parameters must be finite");
  }
}

Real local_wave_time(const ActuationParams& params, Real sim_time) noexcept {
  Real t = std::fmod(sim_time - params.offset, params.period);
  if (t < 0.0) t += params.period;
  // fmod of a tiny negative value can round back up to exactly `period`.
  if (t >= params.period) t = 0.0;
  return t;
}

Real actuation_factor(const ActuationParams& params, Real sim_time, std::uint32_t spring_slot) {
  if (params.mode == WaveMode::QuiescentBeforeOffset && sim_time < params.offset) return 1.0;
  const Real t = local_wave_time(params, sim_time);
  if (params.custom) return (*params.custom)(spring_slot, t);
  return 1.0 + params.expansion * std::sin(params.omega * t);
}

}  // namespace springmass
