#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "springmass/vec3.hpp"

namespace springmass {

/// User waveform: maps (spring slot, local periodic time t in [0, period))
/// to a rest-length factor. Evaluated concurrently from inside the spring
/// pass, so it must be pure and reentrant.
using Waveform = std::function<Real(std::uint32_t spring_slot, Real local_time)>;

enum class WaveMode : std::uint8_t {
  /// Phase wraps for T < offset, so every spring is active from T = 0.
  Wrapped,
  /// Factor is held at 1 until the spring's offset has elapsed.
  QuiescentBeforeOffset,
};

/// Periodic rest-length actuation carried by a spring.
///
///   t   = (T - offset) mod period, normalized into [0, period)
///   L_s = 1 + expansion * sin(omega * t)
///
/// When `custom` is set it replaces the sine and receives t directly.
struct ActuationParams {
  Real expansion = 0.0;  // c, |c| < 1
  Real omega = 0.0;      // rad/s
  Real offset = 0.0;     // t_o, s
  Real period = 1.0;     // t_p, s, > 0
  WaveMode mode = WaveMode::Wrapped;
  std::shared_ptr<const Waveform> custom;

  void validate() const;
};

/// Optional actuation stored out of line so unactuated springs stay small.
/// Behaves like std::optional<ActuationParams> with deep-copy semantics.
class ActuationBox {
 public:
  ActuationBox() = default;
  ActuationBox(std::nullopt_t) noexcept {}
  ActuationBox(const ActuationParams& p) : ptr_(std::make_unique<ActuationParams>(p)) {}
  ActuationBox(const std::optional<ActuationParams>& p) {
    if (p) ptr_ = std::make_unique<ActuationParams>(*p);
  }
  ActuationBox(const ActuationBox& o) : ActuationBox(o.to_optional()) {}
  ActuationBox(ActuationBox&&) noexcept = default;
  ActuationBox& operator=(const ActuationBox& o) {
    if (this != &o) ptr_ = o.ptr_ ? std::make_unique<ActuationParams>(*o.ptr_) : nullptr;
    return *this;
  }
  ActuationBox& operator=(ActuationBox&&) noexcept = default;
  ~ActuationBox() = default;

  bool has_value() const noexcept { return ptr_ != nullptr; }
  explicit operator bool() const noexcept { return has_value(); }
  ActuationParams& operator*() noexcept { return *ptr_; }
  const ActuationParams& operator*() const noexcept { return *ptr_; }
  ActuationParams* operator->() noexcept { return ptr_.get(); }
  const ActuationParams* operator->() const noexcept { return ptr_.get(); }
  void reset() noexcept { ptr_.reset(); }

  std::optional<ActuationParams> to_optional() const {
    return ptr_ ? std::optional<ActuationParams>(*ptr_) : std::nullopt;
  }
  operator std::optional<ActuationParams>() const { return to_optional(); }

 private:
  std::unique_ptr<ActuationParams> ptr_;
};

/// Local periodic time t for sim-time T.
Real local_wave_time(const ActuationParams& params, Real sim_time) noexcept;

/// Rest-length factor L_s at sim-time T for the spring in `spring_slot`.
Real actuation_factor(const ActuationParams& params, Real sim_time,
                      std::uint32_t spring_slot = 0);

}  // namespace springmass
