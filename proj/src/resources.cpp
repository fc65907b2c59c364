#include "rdfload/resources.hpp"

#include <sys/resource.h>
#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "rdfload/errors.hpp"

namespace rdfload {

ResourceSample sample_process() {
  ResourceSample s;
#if defined(__linux__)
  if (std::ifstream statm("/proc/self/statm"); statm) {
    std::uint64_t size = 0, resident = 0;
    if (statm >> size >> resident) {
      const long page = ::sysconf(_SC_PAGESIZE);
      if (page > 0) s.rss_bytes = resident * static_cast<std::uint64_t>(page);
    }
  }
#endif
#if defined(__unix__) || defined(__APPLE__)
  rusage usage{};
  if (::getrusage(RUSAGE_SELF, &usage) == 0) {
    auto secs = [](const timeval& tv) { return static_cast<double>(tv.tv_sec) + static_cast<double>(tv.tv_usec) * 1e-6; };
    s.cpu_seconds = secs(usage.ru_utime) + secs(usage.ru_stime);
  }
#endif
  return s;
}

ResourceSampler::ResourceSampler(double hz, ResourceProbe probe) : hz_(hz), probe_(std::move(probe)) {}

ResourceSampler::~ResourceSampler() { stop(); }

void ResourceSampler::start() {
  std::lock_guard lock(mutex_);
  if (running_ || hz_ <= 0.0) return;
  running_ = true;
  worker_ = std::thread([this] { loop(); });
}

void ResourceSampler::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!running_) return;
    running_ = false;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::vector<ResourceSample> ResourceSampler::drain() {
  std::lock_guard lock(mutex_);
  std::vector<ResourceSample> out;
  out.swap(queue_);
  return out;
}

void ResourceSampler::loop() {
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(1.0 / hz_));
  auto next = std::chrono::steady_clock::now();
  std::unique_lock lock(mutex_);
  while (running_) {
    lock.unlock();
    ResourceSample sample = probe_();
    lock.lock();
    queue_.push_back(std::move(sample));
    next += period;
    wake_.wait_until(lock, next, [this] { return !running_; });
  }
}

std::optional<std::uint64_t> peak_rss(const std::vector<ResourceSample>& samples) {
  std::optional<std::uint64_t> peak;
  for (const auto& s : samples)
    if (s.rss_bytes && (!peak || *s.rss_bytes > *peak)) peak = s.rss_bytes;
  return peak;
}

PlatformDescriptor detect_platform(std::string device, std::optional<std::uint64_t> memory_limit_bytes) {
  PlatformDescriptor p;
  p.device = std::move(device);
  p.memory_limit_bytes = memory_limit_bytes;
  if (std::ifstream cpuinfo("/proc/cpuinfo"); cpuinfo) {
    std::string line;
    while (std::getline(cpuinfo, line)) {
      // x86 reports "model name", ARM boards usually "Model"
      if (line.starts_with("model name") || line.starts_with("Model")) {
        if (auto colon = line.find(':'); colon != std::string::npos) {
          p.cpu = line.substr(colon + 1);
          p.cpu.erase(0, p.cpu.find_first_not_of(" \t"));
          break;
        }
      }
    }
  }
  const long pages = ::sysconf(_SC_PHYS_PAGES);
  const long page = ::sysconf(_SC_PAGESIZE);
  if (pages > 0 && page > 0) p.total_ram_bytes = static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page);
  utsname u{};
  if (::uname(&u) == 0) {
    p.os = u.sysname;
    p.kernel = std::string(u.release) + " " + u.machine;
  }
  if (std::ifstream os_release("/etc/os-release"); os_release) {
    std::string line;
    while (std::getline(os_release, line)) {
      if (line.starts_with("PRETTY_NAME=")) {
        std::string name = line.substr(12);
        std::erase(name, '"');
        p.os = name;
        break;
      }
    }
  }
  return p;
}

std::uint64_t parse_byte_size(const std::string& text) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid byte size '" + text + "'");
  }
  std::string unit = text.substr(pos);
  std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return std::toupper(c); });
  double scale = 1;
  if (unit.empty() || unit == "B") scale = 1;
  else if (unit == "K" || unit == "KB" || unit == "KIB") scale = 1024.0;
  else if (unit == "M" || unit == "MB" || unit == "MIB") scale = 1024.0 * 1024.0;
  else if (unit == "G" || unit == "GB" || unit == "GIB") scale = 1024.0 * 1024.0 * 1024.0;
  else throw ConfigError("unknown byte-size unit in '" + text + "'");
  if (value < 0) throw ConfigError("byte size must be non-negative: '" + text + "'");
  return static_cast<std::uint64_t>(value * scale);
}

}  // namespace rdfload
