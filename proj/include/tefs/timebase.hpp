#pragma once

#include <stdexcept>

namespace tefs {

// In-game <-> real-world time conversion. The engine's day-night loop maps
// a full 86400 s in-game day onto realSecondsPerGameDay wall-clock seconds,
// so T_g in-game seconds cost T_g * (D_r / 86400) real seconds.
struct GameDayModel {
  double realSecondsPerGameDay = 2880.0;   // 48 minutes
  double inGameSecondsBetweenPairs = 2.5;
};

inline double game_to_real(double inGameSeconds, double realSecondsPerGameDay) {
  if (inGameSeconds <= 0.0 || realSecondsPerGameDay <= 0.0)
    throw std::invalid_argument("game_to_real: inputs must be positive");
  return inGameSeconds * (realSecondsPerGameDay / 86400.0);
}

// Effective capture frequency in frames per real-world second.
inline double cam_freq(double inGameSecondsBetweenPairs, double realSecondsPerGameDay) {
  if (inGameSecondsBetweenPairs <= 0.0 || realSecondsPerGameDay <= 0.0)
    throw std::invalid_argument("cam_freq: inputs must be positive");
  return 86400.0 / (inGameSecondsBetweenPairs * realSecondsPerGameDay);
}

}  // namespace tefs
