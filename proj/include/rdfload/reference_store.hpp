#pragma once

#include <array>
#include <deque>
#include <memory>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "rdfload/store.hpp"

namespace rdfload {

/// Bidirectional term <-> id map. Terms are keyed by their canonical
/// N-Triples form; ids are dense and assigned in first-seen order.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(const Dictionary&) = delete;
  Dictionary& operator=(const Dictionary&) = delete;

  TermId intern(const Term& t);
  TermId intern_key(std::string key);
  std::optional<TermId> find(const Term& t) const;
  std::optional<TermId> find_key(std::string_view key) const;
  const std::string& key(TermId id) const { return keys_.at(id.value); }
  Term term(TermId id) const { return parse_term(key(id)); }
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  std::deque<std::string> keys_;  // stable addresses back the string_view map keys
  std::unordered_map<std::string_view, std::uint64_t> ids_;
};

using IndexKey = std::array<std::uint64_t, 3>;

/// Sorted, immutable, memory-mapped run of index keys.
class RunFile {
 public:
  static std::shared_ptr<RunFile> write(const std::filesystem::path& path, IndexOrder order,
                                        std::span<const IndexKey> sorted_keys);
  static std::shared_ptr<RunFile> open(const std::filesystem::path& path);

  RunFile(const RunFile&) = delete;
  RunFile& operator=(const RunFile&) = delete;
  ~RunFile();

  std::span<const IndexKey> keys() const noexcept { return {data_, count_}; }
  bool contains(const IndexKey& key) const;
  const std::filesystem::path& path() const noexcept { return path_; }
  IndexOrder order() const noexcept { return order_; }

 private:
  RunFile() = default;

  std::filesystem::path path_;
  IndexOrder order_ = IndexOrder::spo;
  void* mapping_ = nullptr;
  std::size_t mapping_size_ = 0;
  const IndexKey* data_ = nullptr;
  std::size_t count_ = 0;
};

/// Embedded reference store: dictionary-encoded triples under SPO, POS and
/// OSP orderings. Each ordering buffers new keys in memory; with disk
/// persistence a full buffer is flushed to a sorted run and runs are merged
/// level by level (`merge_fanout` runs at level i become one run at i+1).
class ReferenceStore final : public TripleStore {
 public:
  explicit ReferenceStore(StoreConfig config);
  ~ReferenceStore() override;

  LoadResult load_batch(std::span<const Triple> batch) override;
  void match(const TriplePattern& pattern, const TripleSink& sink) const override;
  StoreMetricsSnapshot snapshot_metrics() const override;
  std::string name() const override;

  /// Serves the pattern from a specific ordering regardless of select_index.
  void match_with(IndexOrder order, const TriplePattern& pattern, const TripleSink& sink) const;

  /// Persists buffered triples. No-op for memory persistence.
  void flush();
  void close();

  const Dictionary& dictionary() const noexcept { return dict_; }
  /// Cumulative keys written by run merges (all orderings).
  std::uint64_t merge_work() const noexcept { return merge_work_; }
  std::uint64_t flush_count() const noexcept { return flushes_; }
  std::size_t run_count() const noexcept;

 private:
  struct Level {
    std::vector<std::shared_ptr<RunFile>> runs;
  };
  struct Index {
    std::vector<IndexKey> buffer;
    bool sorted = true;
    std::vector<Level> levels;
  };
  struct TripleHash {
    std::size_t operator()(const IndexKey& k) const noexcept;
  };

  void open_directory();
  void write_manifest();
  void compact(IndexOrder order);
  bool stored_on_disk(const IndexKey& spo) const;
  void scan(IndexOrder order, const std::array<std::optional<std::uint64_t>, 3>& bound,
            std::vector<IndexKey>& out) const;
  std::filesystem::path next_file(std::string_view stem);

  StoreConfig config_;
  Dictionary dict_;
  std::size_t dict_persisted_ = 0;
  std::vector<std::string> dict_segments_;
  mutable std::array<Index, 3> indexes_;  // buffers are sorted lazily on first scan
  std::unordered_set<IndexKey, TripleHash> buffered_;
  std::uint64_t triple_count_ = 0;
  std::uint64_t merge_work_ = 0;
  std::uint64_t flushes_ = 0;
  std::uint64_t next_file_id_ = 0;
  bool closed_ = false;
};

}  // namespace rdfload
