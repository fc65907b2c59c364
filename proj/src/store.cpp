#include "rdfload/store.hpp"

#include <thread>

#include "rdfload/errors.hpp"
#include "rdfload/reference_store.hpp"
#include "rdfload/test_stores.hpp"

namespace fs = std::filesystem;

namespace rdfload {

std::string_view to_string(IndexOrder order) {
  switch (order) {
    case IndexOrder::spo: return "spo";
    case IndexOrder::pos: return "pos";
    case IndexOrder::osp: return "osp";
  }
  return "?";
}

IndexOrder select_index(const TriplePattern& pattern) noexcept {
  if (pattern.subject) return pattern.object && !pattern.predicate ? IndexOrder::osp : IndexOrder::spo;
  if (pattern.predicate) return IndexOrder::pos;
  if (pattern.object) return IndexOrder::osp;
  return IndexOrder::spo;
}

bool matches(const TriplePattern& pattern, const Triple& t) noexcept {
  return (!pattern.subject || *pattern.subject == t.subject) &&
         (!pattern.predicate || *pattern.predicate == t.predicate) &&
         (!pattern.object || *pattern.object == t.object);
}

std::vector<Triple> TripleStore::match_all(const TriplePattern& pattern) const {
  std::vector<Triple> out;
  match(pattern, [&](const Triple& t) { out.push_back(t); });
  return out;
}

std::uint64_t directory_bytes(const fs::path& dir) {
  std::uint64_t total = 0;
  std::error_code ec;
  for (fs::recursive_directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file(ec)) {
      const auto size = it->file_size(ec);
      if (!ec) total += size;
    }
  }
  if (ec) throw IoError("cannot size directory " + dir.string() + ": " + ec.message());
  return total;
}

// ---------------------------------------------------------------------------

WaitFn real_sleep() {
  return [](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); };
}

namespace {

StoreConfig memory_config() { return StoreConfig{}; }

}  // namespace

SlowStore::SlowStore(std::chrono::nanoseconds delay_per_triple, WaitFn wait)
    : delay_(delay_per_triple), wait_(std::move(wait)), inner_(memory_config()) {}

LoadResult SlowStore::load_batch(std::span<const Triple> batch) {
  if (delay_.count() > 0) wait_(delay_ * static_cast<std::int64_t>(batch.size()));
  return inner_.load_batch(batch);
}

void SlowStore::match(const TriplePattern& pattern, const TripleSink& sink) const { inner_.match(pattern, sink); }

StoreMetricsSnapshot SlowStore::snapshot_metrics() const { return inner_.snapshot_metrics(); }

CrashingStore::CrashingStore(std::uint64_t crash_after) : crash_after_(crash_after), inner_(memory_config()) {}

LoadResult CrashingStore::load_batch(std::span<const Triple> batch) {
  if (offered_ + batch.size() <= crash_after_) {
    offered_ += batch.size();
    return inner_.load_batch(batch);
  }
  const std::uint64_t room = crash_after_ > offered_ ? crash_after_ - offered_ : 0;
  inner_.load_batch(batch.first(room));
  offered_ += room;
  throw StoreFatalError("simulated crash after " + std::to_string(crash_after_) + " triples");
}

void CrashingStore::match(const TriplePattern& pattern, const TripleSink& sink) const {
  inner_.match(pattern, sink);
}

StoreMetricsSnapshot CrashingStore::snapshot_metrics() const { return inner_.snapshot_metrics(); }

ScriptedSpeedStore::ScriptedSpeedStore(std::vector<double> triples_per_second, WaitFn wait)
    : speeds_(std::move(triples_per_second)), wait_(std::move(wait)), inner_(memory_config()) {
  if (speeds_.empty()) throw ConfigError("scripted store needs at least one speed");
  for (double s : speeds_)
    if (!(s > 0.0)) throw ConfigError("scripted speeds must be positive");
}

LoadResult ScriptedSpeedStore::load_batch(std::span<const Triple> batch) {
  const double speed = speeds_[std::min(batches_, speeds_.size() - 1)];
  ++batches_;
  const std::chrono::duration<double> seconds(static_cast<double>(batch.size()) / speed);
  wait_(std::chrono::duration_cast<std::chrono::nanoseconds>(seconds));
  return inner_.load_batch(batch);
}

void ScriptedSpeedStore::match(const TriplePattern& pattern, const TripleSink& sink) const {
  inner_.match(pattern, sink);
}

StoreMetricsSnapshot ScriptedSpeedStore::snapshot_metrics() const { return inner_.snapshot_metrics(); }

// ---------------------------------------------------------------------------

std::unique_ptr<TripleStore> make_store(const nlohmann::json& config) {
  try {
    const std::string kind = config.value("kind", std::string("reference"));
    if (kind == "reference") {
      StoreConfig sc;
      const std::string persistence = config.value("persistence", std::string("memory"));
      if (persistence == "disk") sc.persistence = Persistence::disk;
      else if (persistence != "memory") throw ConfigError("unknown persistence '" + persistence + "'");
      sc.data_dir = config.value("data_dir", std::string());
      sc.flush_threshold = config.value("flush_threshold", sc.flush_threshold);
      sc.merge_fanout = config.value("merge_fanout", sc.merge_fanout);
      if (sc.persistence == Persistence::disk && sc.data_dir.empty())
        throw ConfigError("disk persistence requires \"data_dir\"");
      return store_open(sc);
    }
    if (kind == "slow") {
      const double ms = config.value("delay_ms", 0.0);
      if (ms < 0) throw ConfigError("delay_ms must be non-negative");
      return std::make_unique<SlowStore>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double, std::milli>(ms)));
    }
    if (kind == "crashing") {
      if (!config.contains("crash_after")) throw ConfigError("crashing store requires \"crash_after\"");
      return std::make_unique<CrashingStore>(config.at("crash_after").get<std::uint64_t>());
    }
    throw ConfigError("unknown store kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid store config: ") + e.what());
  }
}

}  // namespace rdfload
