#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>

#include "tefs/timebase.hpp"

using tefs::cam_freq;
using tefs::GameDayModel;
using tefs::game_to_real;

TEST_CASE("game day model defaults to a 48-minute day and 2.5 s pair gap") {
  GameDayModel day;
  CHECK(day.realSecondsPerGameDay == doctest::Approx(2880.0).epsilon(1e-15));
  CHECK(day.inGameSecondsBetweenPairs == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("game seconds convert to real seconds by day-length ratio") {
  // 2.5 in-game seconds when the whole 86400 s day runs in 2880 real
  // seconds: 2.5 * 2880 / 86400 = 1/12 real seconds.
  CHECK(game_to_real(2.5, 2880.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  // A day that takes a full real day maps one-to-one.
  CHECK(game_to_real(1.0, 86400.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(game_to_real(86400.0, 86400.0) == doctest::Approx(86400.0).epsilon(1e-15));
  // Linearity in the in-game argument.
  const double one = game_to_real(1.0, 2880.0);
  CHECK(game_to_real(7.25, 2880.0) == doctest::Approx(7.25 * one).epsilon(1e-13));
}

TEST_CASE("capture frequency for a 2.5 s gap on a 48-minute day is exactly 12 Hz") {
  // 86400 / (2.5 * 2880) = 86400 / 7200. Every operand is binary-exact and
  // the quotient is an integer, so this holds bit-for-bit, not approximately.
  CHECK(cam_freq(2.5, 2880.0) == 12.0);
}

TEST_CASE("capture frequency is the reciprocal of the real-time gap") {
  for (double gap : {0.5, 1.0, 2.5, 10.0}) {
    for (double daySec : {1440.0, 2880.0, 5760.0, 86400.0}) {
      const double real = game_to_real(gap, daySec);
      CHECK(cam_freq(gap, daySec) == doctest::Approx(1.0 / real).epsilon(1e-13));
    }
  }
}

TEST_CASE("faster game days raise the capture frequency proportionally") {
  // Halving the real length of the game day means in-game time runs twice
  // as fast, so the same in-game gap fires twice as often.
  CHECK(cam_freq(2.5, 1440.0) ==
        doctest::Approx(2.0 * cam_freq(2.5, 2880.0)).epsilon(1e-13));
}

TEST_CASE("non-positive arguments are rejected") {
  CHECK_THROWS_AS(game_to_real(0.0, 2880.0), std::invalid_argument);
  CHECK_THROWS_AS(game_to_real(-1.0, 2880.0), std::invalid_argument);
  CHECK_THROWS_AS(game_to_real(2.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(game_to_real(2.5, -10.0), std::invalid_argument);
  CHECK_THROWS_AS(cam_freq(0.0, 2880.0), std::invalid_argument);
  CHECK_THROWS_AS(cam_freq(2.5, -2880.0), std::invalid_argument);
}
