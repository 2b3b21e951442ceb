#pragma once

#include <stdexcept>
#include <string>

namespace tefs {

// Capture protocol violation (e.g. a camera swap requested while the
// engine is natively paused). Carries the name of the offending phase.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& phase, const std::string& what)
      : std::runtime_error("protocol violation in phase '" + phase + "': " + what),
        phase_(phase) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tefs
