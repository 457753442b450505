#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ripagg/synth.hpp"

namespace ripagg::synth {

/// Seeded scenarios shipped with the toolkit. Every rip preset keeps the
/// ground-truth box for the whole clip; `no_rip` has none, mirroring the two
/// kinds of test video.
inline std::vector<JitterScenario> presets() {
  const FrameDimensions dims(320, 240);
  const BoundingBox rip(100, 80, 60, 40);
  return {
      JitterScenario::constant("rip_noiseless", dims, 600, rip, 0.0, 0.0, 42),
      JitterScenario::constant("rip_jitter", dims, 600, rip, 5.0, 0.1, 42),
      JitterScenario::constant("rip_jitter_small", dims, 600, BoundingBox(150, 100, 24, 18), 5.0, 0.1, 42),
      JitterScenario::constant("rip_jitter_heavy", dims, 600, BoundingBox(140, 90, 40, 30), 8.0, 0.25, 42),
      JitterScenario::constant("rip_all_dropout", dims, 600, rip, 5.0, 1.0, 42),
      JitterScenario::constant("no_rip", dims, 600, std::nullopt, 5.0, 0.1, 42),
  };
}

/// The preset used for the consecutive-frame stability comparison.
inline constexpr std::string_view kStabilityPreset = "rip_jitter";
inline constexpr std::string_view kNoiselessPreset = "rip_noiseless";

inline JitterScenario preset(std::string_view name) {
  for (auto &p : presets()) {
    if (p.video == name) return p;
  }
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

}  // namespace ripagg::synth
