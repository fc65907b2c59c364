#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace rdfload {

struct ResourceSample {
  std::optional<std::uint64_t> rss_bytes;
  std::optional<double> cpu_seconds;  // user + system, cumulative for the process
};

using ResourceProbe = std::function<ResourceSample()>;

/// Reads the current process's resident set size and CPU time. Fields are
/// empty where the platform offers no source.
ResourceSample sample_process();

/// Background sampler. Samples are queued by a worker thread at `hz` and
/// handed out by drain(); every sample is returned by exactly one drain.
/// hz <= 0 disables the worker (drain then returns nothing).
class ResourceSampler {
 public:
  ResourceSampler(double hz, ResourceProbe probe = sample_process);
  ~ResourceSampler();

  ResourceSampler(const ResourceSampler&) = delete;
  ResourceSampler& operator=(const ResourceSampler&) = delete;

  void start();
  void stop();
  std::vector<ResourceSample> drain();

 private:
  void loop();

  double hz_;
  ResourceProbe probe_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::vector<ResourceSample> queue_;
  bool running_ = false;
  std::thread worker_;
};

/// Peak RSS over a window's samples; empty when none carried an RSS value.
std::optional<std::uint64_t> peak_rss(const std::vector<ResourceSample>& samples);

struct PlatformDescriptor {
  std::string device;
  std::string cpu;
  std::optional<std::uint64_t> total_ram_bytes;
  std::string os;
  std::string kernel;
  std::optional<std::uint64_t> memory_limit_bytes;

  bool operator==(const PlatformDescriptor&) const = default;
};

/// Fills CPU, RAM and OS fields from the running host.
PlatformDescriptor detect_platform(std::string device, std::optional<std::uint64_t> memory_limit_bytes);

/// Parses "512M", "2GiB", "1073741824" etc. into bytes (binary multiples).
std::uint64_t parse_byte_size(const std::string& text);

}  // namespace rdfload
