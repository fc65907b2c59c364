#pragma once

#include <atomic>
#include <chrono>

namespace rdfload {

/// Monotonic time source used for batch timing.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() const override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch());
  }
};

/// Only moves when told to.
class VirtualClock final : public Clock {
 public:
  std::chrono::nanoseconds now() const override { return std::chrono::nanoseconds(ticks_.load()); }
  void advance(std::chrono::nanoseconds d) { ticks_ += d.count(); }

 private:
  std::atomic<std::int64_t> ticks_{0};
};

}  // namespace rdfload
