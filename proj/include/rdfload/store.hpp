#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdfload/ntriples.hpp"

namespace rdfload {

/// Dictionary id of an interned term. Stable for the lifetime of a store.
struct TermId {
  std::uint64_t value = 0;
  auto operator<=>(const TermId&) const = default;
};

struct IndexedTriple {
  TermId s, p, o;
  auto operator<=>(const IndexedTriple&) const = default;
};

enum class IndexOrder : std::uint8_t { spo, pos, osp };

std::string_view to_string(IndexOrder order);

/// Any subset of positions may be bound.
struct TriplePattern {
  std::optional<Term> subject;
  std::optional<Term> predicate;
  std::optional<Term> object;
};

/// Index serving a pattern: the ordering whose key prefix covers the bound
/// positions. s / sp / spo / none -> SPO, p / po -> POS, o / so -> OSP.
IndexOrder select_index(const TriplePattern& pattern) noexcept;

bool matches(const TriplePattern& pattern, const Triple& t) noexcept;

struct LoadResult {
  std::uint64_t inserted = 0;
  std::uint64_t duplicates = 0;
};

struct StoreMetricsSnapshot {
  std::uint64_t triple_count = 0;
  std::uint64_t dictionary_size = 0;
  std::uint64_t disk_bytes = 0;

  bool operator==(const StoreMetricsSnapshot&) const = default;
};

using TripleSink = std::function<void(const Triple&)>;

/// What the benchmark driver loads into. Implementations report fatal
/// failures by throwing StoreFatalError from load_batch.
class TripleStore {
 public:
  virtual ~TripleStore() = default;

  virtual LoadResult load_batch(std::span<const Triple> batch) = 0;
  virtual void match(const TriplePattern& pattern, const TripleSink& sink) const = 0;
  virtual StoreMetricsSnapshot snapshot_metrics() const = 0;
  virtual std::string name() const = 0;

  std::vector<Triple> match_all(const TriplePattern& pattern) const;
};

enum class Persistence : std::uint8_t { memory, disk };

struct StoreConfig {
  Persistence persistence = Persistence::memory;
  std::filesystem::path data_dir;
  std::size_t flush_threshold = 1'000'000;  // buffered id-triples per index before a flush
  std::size_t merge_fanout = 4;             // runs per level that trigger a merge into the next level
};

class ReferenceStore;

/// Opens (or creates) a reference store. For disk persistence an existing
/// data directory is reopened with its committed triples.
std::unique_ptr<ReferenceStore> store_open(const StoreConfig& config);

/// Recursive byte size of all regular files under `dir`.
std::uint64_t directory_bytes(const std::filesystem::path& dir);

/// Builds any store kind from a JSON config:
///   {"kind": "reference" | "slow" | "crashing", "persistence": "memory" | "disk",
///    "data_dir": "...", "flush_threshold": N, "merge_fanout": N,
///    "delay_ms": x, "crash_after": N}
std::unique_ptr<TripleStore> make_store(const nlohmann::json& config);

}  // namespace rdfload
