#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rdfload/driver.hpp"

namespace rdfload {

/// Partial map (dataset, store, platform, batch) -> loading speed in
/// triples/s. A missing entry means the run never completed that batch.
class LsMatrix {
 public:
  explicit LsMatrix(std::uint64_t batch_size = 0) : batch_size_(batch_size) {}

  /// Registers a dataset / store / platform even if it has no entries yet.
  void add_dataset(const std::string& d) { datasets_.insert(d); }
  void add_store(const std::string& s) { stores_.insert(s); }
  void add_platform(const std::string& p) { platforms_.insert(p); }

  /// Throws std::invalid_argument unless ls > 0 and finite.
  void set(const std::string& dataset, const std::string& store, const std::string& platform, std::uint64_t batch,
           double ls);
  std::optional<double> at(const std::string& dataset, const std::string& store, const std::string& platform,
                           std::uint64_t batch) const;

  const std::set<std::string>& datasets() const noexcept { return datasets_; }
  const std::set<std::string>& stores() const noexcept { return stores_; }
  const std::set<std::string>& platforms() const noexcept { return platforms_; }
  std::uint64_t batch_size() const noexcept { return batch_size_; }
  /// One past the largest batch ordinal with an entry.
  std::uint64_t batch_count() const noexcept;
  std::size_t entry_count() const noexcept;
  bool empty() const noexcept { return entry_count() == 0; }

  /// Calls f(dataset, store, platform, batch, ls) for every entry.
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [d, by_config] : entries_)
      for (const auto& [config, series] : by_config)
        for (const auto& [b, ls] : series) f(d, config.first, config.second, b, ls);
  }

  /// Returns a copy with every entry multiplied by c (> 0).
  LsMatrix scaled(double c) const;

 private:
  using Config = std::pair<std::string, std::string>;  // (store, platform)
  std::uint64_t batch_size_;
  std::set<std::string> datasets_, stores_, platforms_;
  std::map<std::string, std::map<Config, std::map<std::uint64_t, double>>> entries_;
};

enum class DuplicateRunPolicy : std::uint8_t { reject, last_wins };

/// Platform identity used as the matrix's platform key: the platform label
/// plus the memory limit, so one device under two limits counts twice.
std::string platform_key(const RunRecord& run);

/// Throws ConfigError on duplicate (dataset, store, platform) runs under
/// `reject`, and on mixed batch sizes.
LsMatrix build_ls_matrix(std::span<const RunRecord> runs, DuplicateRunPolicy policy = DuplicateRunPolicy::reject);
LsMatrix build_ls_matrix(std::span<const std::filesystem::path> run_files,
                         DuplicateRunPolicy policy = DuplicateRunPolicy::reject);

/// Mean loading speed of dataset d at batch b over all (store, platform)
/// pairs: undefined terms add zero to the sum and nothing to the count.
std::optional<double> mls(const LsMatrix& m, const std::string& dataset, std::uint64_t batch);

/// Datasets whose MLS is defined at batch b.
std::set<std::string> defined_datasets(const LsMatrix& m, std::uint64_t batch);

/// MLS(d, b) scaled so that the defined datasets at b average to one.
std::optional<double> rls(const LsMatrix& m, const std::string& dataset, std::uint64_t batch);

struct RlsCell {
  std::optional<double> mls;
  std::optional<double> rls;
};

class RlsTable {
 public:
  std::uint64_t batch_size = 0;
  std::uint64_t batch_count = 0;
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<RlsCell>> cells;  // dataset -> per batch
  std::vector<std::set<std::string>> d_def;           // per batch

  const RlsCell& cell(const std::string& dataset, std::uint64_t batch) const { return cells.at(dataset).at(batch); }
  /// Defined RLS values of one dataset keyed by batch.
  std::map<std::uint64_t, double> rls_series(const std::string& dataset) const;
};

RlsTable compute_rls_table(const LsMatrix& m);

struct MinCommonTrim {};

struct TrimOptions {
  std::vector<std::string> exclude;
  /// Keep batches whose first `triples` triples fit in the limit, or trim
  /// to the longest prefix every retained dataset covers.
  std::variant<std::monostate, std::uint64_t, MinCommonTrim> trim;
};

/// Throws ConfigError if the result would be empty.
LsMatrix trim_and_filter(const LsMatrix& m, const TrimOptions& options);

struct SeriesSummary {
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n = 0;
};

/// Mean with a normal-approximation confidence interval
/// mean +- z * s / sqrt(n); the interval collapses to the mean for n = 1.
SeriesSummary summarize(std::span<const double> values, double z = 1.96);

struct WindowPoint {
  double window_center = 0;  // in triples
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n = 0;
  double coverage = 1.0;  // defined values / expected values in the window
};

/// Non-overlapping windows of `window_triples` over a batch-indexed series.
/// Empty windows are omitted. Throws std::invalid_argument unless
/// window_triples is a positive multiple of batch_size.
std::vector<WindowPoint> aggregate_series(const std::map<std::uint64_t, double>& series, std::uint64_t batch_size,
                                          std::uint64_t window_triples, double z = 1.96);

/// Loading speed of one (store, platform) over time, pooling every dataset's
/// defined LS values per window. Coverage below 0.5 marks sparse points.
std::vector<WindowPoint> speed_over_time(const LsMatrix& m, const std::string& store, const std::string& platform,
                                         std::uint64_t window_triples, double z = 1.96);

struct CompletionRow {
  std::string dataset;
  std::string store;
  std::string platform;
  std::uint64_t dataset_triples = 0;
  std::uint64_t loaded_triples = 0;
  bool fully_loaded = false;
  Termination termination = Termination::completed;
};

std::vector<CompletionRow> completion_report(std::span<const RunRecord> runs);

struct DatasetMedian {
  std::string dataset;
  double median = 0;
  std::size_t n = 0;
};

struct MedianRlsSummary {
  std::vector<DatasetMedian> medians;
  std::optional<double> ratio;  // max median / min median
  std::string fastest;
  std::string slowest;
  std::vector<std::string> warnings;
};

/// Midpoint average for even counts.
double median(std::vector<double> values);

/// Throws std::invalid_argument on an empty table.
MedianRlsSummary median_rls_summary(const RlsTable& table);

// Output helpers: CSV tables and a JSON report.
void write_rls_csv(std::ostream& out, const RlsTable& table);
void write_windows_csv(std::ostream& out, const std::map<std::string, std::vector<WindowPoint>>& series,
                       const std::string& key_column);
void write_median_csv(std::ostream& out, const MedianRlsSummary& summary);
void write_completion_csv(std::ostream& out, const std::vector<CompletionRow>& rows);
nlohmann::json to_json(const MedianRlsSummary& summary);

/// Ingests per-batch results from a CSV with a header row containing
/// `dataset,store,platform,batch` and either `ls` or both `load_seconds` and
/// `triples`; an optional `memory_limit` column joins the platform key.
/// Used to analyse results produced by other harnesses.
LsMatrix read_ls_csv(std::istream& in, std::uint64_t batch_size);
LsMatrix read_ls_csv(const std::filesystem::path& path, std::uint64_t batch_size);

}  // namespace rdfload
