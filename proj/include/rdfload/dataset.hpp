#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdfload/ntriples.hpp"

namespace rdfload {

inline constexpr std::size_t kDefaultBatchSize = 50'000;

struct Batch {
  std::size_t index = 0;
  std::vector<Triple> triples;

  std::size_t size() const noexcept { return triples.size(); }
};

/// Name of the batch file with the given ordinal, e.g. `batch-000007.nt`.
std::string batch_file_name(std::size_t index);

/// Batch files in a directory, in filename (= load) order.
std::vector<std::filesystem::path> list_batch_files(const std::filesystem::path& dir);

/// Reads a whole N-Triples file in strict mode.
std::vector<Triple> read_ntriples_file(const std::filesystem::path& path);
Batch read_batch_file(const std::filesystem::path& path, std::size_t index = 0);

struct SplitResult {
  std::vector<std::filesystem::path> batch_files;
  std::uint64_t total_triples = 0;
  std::uint64_t discarded = 0;
  std::vector<std::string> warnings;
};

/// Splits an N-Triples file into `batch_size`-triple batch files written in
/// canonical form. The trailing short batch is counted and dropped. On a
/// parse error no batch files from this call are left behind.
SplitResult split_batches(const std::filesystem::path& input, const std::filesystem::path& output_dir,
                          std::size_t batch_size = kDefaultBatchSize);

struct DatasetStats {
  std::uint64_t triples = 0;
  std::uint64_t subjects = 0;
  std::uint64_t predicates = 0;
  std::uint64_t objects = 0;
  double mean_bpt = 0.0;
  std::map<std::uint64_t, std::uint64_t> subject_degree_histogram;  // degree -> subjects
  std::map<std::string, std::uint64_t> predicate_frequency;         // predicate IRI -> triples

  bool operator==(const DatasetStats&) const = default;
};

struct StatsOptions {
  /// 0 keeps every distinct term in memory. Otherwise subject and object keys
  /// spill to sorted runs under `spill_dir` once this many are buffered.
  std::size_t max_in_memory_terms = 0;
  std::filesystem::path spill_dir;
};

/// One streaming pass. Statements are counted with multiplicity; terms are
/// deduplicated (blank nodes by label).
DatasetStats compute_stats(std::istream& in, const StatsOptions& options = {});
DatasetStats compute_stats(const std::filesystem::path& input, const StatsOptions& options = {});

nlohmann::json to_json(const DatasetStats& stats);
DatasetStats stats_from_json(const nlohmann::json& j);

enum class Regularity : std::uint8_t { regular, irregular };

struct SynthProfile {
  std::uint64_t n_triples = 1000;
  Regularity regularity = Regularity::regular;
  std::uint64_t n_subjects = 100;
  std::uint64_t n_predicates = 12;
  std::optional<std::uint64_t> object_cardinality;  // nullopt = unbounded (fresh objects)
  double literal_fraction = 0.5;
  std::uint64_t seed = 42;
};

/// Throws ConfigError if the profile cannot be generated.
void validate(const SynthProfile& profile);

nlohmann::json to_json(const SynthProfile& profile);
SynthProfile profile_from_json(const nlohmann::json& j);

/// Writes a synthetic dataset. Regular profiles repeat one ordered predicate
/// set on every subject; irregular profiles mint a fresh subject for every
/// triple and a random predicate. Output is byte-identical for a fixed seed.
DatasetStats generate_synthetic(const SynthProfile& profile, const std::filesystem::path& output);

}  // namespace rdfload
