#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdfload/clock.hpp"
#include "rdfload/resources.hpp"
#include "rdfload/store.hpp"

namespace rdfload {

inline constexpr double kDefaultThresholdTps = 80.0;
inline constexpr double kDefaultSampleHz = 10.0;
inline constexpr std::string_view kToolVersion = "rdfload 0.1.0";

struct BatchRecord {
  std::uint64_t batch_index = 0;
  std::uint64_t triples = 0;
  double load_seconds = 0;  // parse + insert, monotonic clock
  double ls = 0;            // triples / load_seconds
  std::optional<std::uint64_t> peak_rss_bytes;
  std::optional<double> cpu_seconds;
  std::optional<std::uint64_t> disk_bytes;
  std::optional<double> parse_seconds;  // only with split_parse_time

  bool operator==(const BatchRecord&) const = default;
};

enum class Termination : std::uint8_t { completed, crashed, below_speed_threshold };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct RunLabels {
  std::string dataset_id;
  std::string store_id;
  std::string platform_id;
  std::map<std::string, std::string> extra;

  bool operator==(const RunLabels&) const = default;
};

struct RunRecord {
  RunLabels labels;
  PlatformDescriptor platform;
  double threshold_tps = kDefaultThresholdTps;
  double sample_hz = kDefaultSampleHz;
  std::uint64_t batch_size = 0;
  std::uint64_t total_batches = 0;  // batches offered to the store
  std::string tool_version{kToolVersion};
  std::string started_at;  // wall-clock, metadata only
  std::vector<BatchRecord> batches;
  Termination termination = Termination::completed;
  std::string termination_detail;
  std::vector<std::string> warnings;

  std::optional<std::uint64_t> memory_limit_bytes() const { return platform.memory_limit_bytes; }
  std::uint64_t loaded_triples() const;

  bool operator==(const RunRecord&) const = default;
};

struct BenchOptions {
  double threshold_tps = kDefaultThresholdTps;
  double sample_hz = kDefaultSampleHz;
  RunLabels labels;
  PlatformDescriptor platform;
  /// Times parsing separately as BatchRecord::parse_seconds. load_seconds is unchanged.
  bool split_parse_time = false;
  /// When set, the results file is written incrementally so partial runs survive.
  std::optional<std::filesystem::path> output;
  ResourceProbe probe = sample_process;
};

/// Loads `batch_files` into `store` one after another and records per-batch
/// metrics. Stops at the first fatal store error (crashed), the first batch
/// with ls < threshold_tps (below-speed-threshold) or the end of input.
/// Throws ConfigError before loading if a batch file is missing.
RunRecord run_benchmark(TripleStore& store, std::span<const std::filesystem::path> batch_files,
                        const BenchOptions& options, const Clock& clock = SteadyClock{});

/// Line-delimited JSON results writer: header, one line per batch, termination.
class RunWriter {
 public:
  explicit RunWriter(const std::filesystem::path& path);
  void header(const RunRecord& run);
  void batch(const BatchRecord& record);
  void termination(const RunRecord& run);

 private:
  void write_line(const nlohmann::json& j);

  std::filesystem::path path_;
  std::ofstream out_;
};

void emit_run(const RunRecord& run, const std::filesystem::path& path);
/// A file without a termination line (the process died mid-run) reads back as crashed.
RunRecord read_run(const std::filesystem::path& path);
RunRecord read_run(std::istream& in, const std::string& source = "<stream>");

nlohmann::json header_json(const RunRecord& run);
nlohmann::json to_json(const BatchRecord& record);
BatchRecord batch_record_from_json(const nlohmann::json& j);

}  // namespace rdfload
