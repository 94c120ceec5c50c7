#pragma once

namespace ilcsim {

enum class LoopVerdict { converged, stalled, max_iterations, diverged, saturation_limited };

inline const char* to_string(LoopVerdict v) {
  switch (v) {
    case LoopVerdict::converged: return "converged";
    case LoopVerdict::stalled: return "stalled";
    case LoopVerdict::max_iterations: return "max_iterations";
    case LoopVerdict::diverged: return "diverged";
    case LoopVerdict::saturation_limited: return "saturation_limited";
  }
  return "unknown";
}

}  // namespace ilcsim
