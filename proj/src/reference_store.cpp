#include "rdfload/reference_store.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <new>
#include <queue>
#include <unordered_map>

#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

namespace {

constexpr char kRunMagic[8] = {'R', 'D', 'L', 'R', 'U', 'N', '0', '1'};
constexpr char kDictMagic[8] = {'R', 'D', 'L', 'D', 'I', 'C', 'T', '1'};
constexpr std::size_t kRunHeaderBytes = 64;
constexpr std::string_view kManifest = "MANIFEST.json";
constexpr std::string_view kStoreFormat = "rdfload-store";
constexpr int kStoreVersion = 1;

struct RunHeader {
  char magic[8];
  std::uint32_t version;
  std::uint32_t order;
  std::uint64_t count;
  IndexKey min_key;
  std::uint64_t reserved[2];
};
static_assert(sizeof(RunHeader) == kRunHeaderBytes);

// Component positions (subject=0, predicate=1, object=2) in key order.
constexpr std::array<std::array<int, 3>, 3> kLayout = {{{0, 1, 2}, {1, 2, 0}, {2, 0, 1}}};

std::size_t slot(IndexOrder o) { return static_cast<std::size_t>(o); }

IndexKey to_key(IndexOrder order, const IndexKey& spo) {
  const auto& layout = kLayout[slot(order)];
  return {spo[layout[0]], spo[layout[1]], spo[layout[2]]};
}

IndexKey to_spo(IndexOrder order, const IndexKey& key) {
  const auto& layout = kLayout[slot(order)];
  IndexKey spo{};
  for (int k = 0; k < 3; ++k) spo[layout[k]] = key[k];
  return spo;
}

void write_file_atomically(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<IndexOrder> order_from_string(std::string_view s) {
  if (s == "spo") return IndexOrder::spo;
  if (s == "pos") return IndexOrder::pos;
  if (s == "osp") return IndexOrder::osp;
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

TermId Dictionary::intern(const Term& t) { return intern_key(serialize_term(t)); }

TermId Dictionary::intern_key(std::string key) {
  if (auto it = ids_.find(key); it != ids_.end()) return TermId{it->second};
  const std::uint64_t id = keys_.size();
  keys_.push_back(std::move(key));
  ids_.emplace(keys_.back(), id);
  return TermId{id};
}

std::optional<TermId> Dictionary::find(const Term& t) const { return find_key(serialize_term(t)); }

std::optional<TermId> Dictionary::find_key(std::string_view key) const {
  if (auto it = ids_.find(key); it != ids_.end()) return TermId{it->second};
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::shared_ptr<RunFile> RunFile::write(const fs::path& path, IndexOrder order, std::span<const IndexKey> keys) {
  RunHeader header{};
  std::memcpy(header.magic, kRunMagic, sizeof kRunMagic);
  header.version = 1;
  header.order = static_cast<std::uint32_t>(order);
  header.count = keys.size();
  if (!keys.empty()) header.min_key = keys.front();
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write run " + tmp.string());
    out.write(reinterpret_cast<const char*>(&header), sizeof header);
    out.write(reinterpret_cast<const char*>(keys.data()), static_cast<std::streamsize>(keys.size_bytes()));
    out.close();
    if (!out) throw IoError("write failed for run " + tmp.string());
  }
  fs::rename(tmp, path);
  return open(path);
}

std::shared_ptr<RunFile> RunFile::open(const fs::path& path) {
  std::shared_ptr<RunFile> run(new RunFile());
  run->path_ = path;
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw IoError("cannot open run " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0 || static_cast<std::size_t>(st.st_size) < kRunHeaderBytes) {
    ::close(fd);
    throw IoError("run file too short: " + path.string());
  }
  run->mapping_size_ = static_cast<std::size_t>(st.st_size);
  void* map = ::mmap(nullptr, run->mapping_size_, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (map == MAP_FAILED) throw IoError("cannot map run " + path.string());
  run->mapping_ = map;
  RunHeader header{};
  std::memcpy(&header, map, sizeof header);
  if (std::memcmp(header.magic, kRunMagic, sizeof kRunMagic) != 0 || header.version != 1 || header.order > 2)
    throw IoError("not a run file: " + path.string());
  if (kRunHeaderBytes + header.count * sizeof(IndexKey) != run->mapping_size_)
    throw IoError("run file size mismatch: " + path.string());
  run->order_ = static_cast<IndexOrder>(header.order);
  run->count_ = header.count;
  run->data_ = reinterpret_cast<const IndexKey*>(static_cast<const char*>(map) + kRunHeaderBytes);
  return run;
}

RunFile::~RunFile() {
  if (mapping_) ::munmap(mapping_, mapping_size_);
}

bool RunFile::contains(const IndexKey& key) const {
  if (count_ == 0 || key < data_[0] || data_[count_ - 1] < key) return false;
  return std::binary_search(data_, data_ + count_, key);
}

// ---------------------------------------------------------------------------

std::size_t ReferenceStore::TripleHash::operator()(const IndexKey& k) const noexcept {
  std::uint64_t h = k[0] * 0x9E3779B97F4A7C15ULL;
  h ^= (k[1] + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2));
  h ^= (k[2] * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2));
  return static_cast<std::size_t>(h ^ (h >> 31));
}

ReferenceStore::ReferenceStore(StoreConfig config) : config_(std::move(config)) {
  if (config_.flush_threshold == 0) throw ConfigError("flush threshold must be at least 1");
  if (config_.merge_fanout < 2) throw ConfigError("merge fanout must be at least 2");
  if (config_.persistence == Persistence::disk) open_directory();
}

ReferenceStore::~ReferenceStore() {
  try {
    close();
  } catch (...) {
  }
}

std::string ReferenceStore::name() const {
  return config_.persistence == Persistence::disk ? "reference-disk" : "reference-memory";
}

fs::path ReferenceStore::next_file(std::string_view stem) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s-%08llu", static_cast<int>(stem.size()), stem.data(),
                static_cast<unsigned long long>(next_file_id_++));
  return config_.data_dir / buf;
}

void ReferenceStore::open_directory() {
  const fs::path& dir = config_.data_dir;
  if (dir.empty()) throw IoError("disk persistence requires a data directory");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create store directory " + dir.string());
  {
    const fs::path probe = dir / ".write-probe";
    std::ofstream out(probe);
    if (!out) throw IoError("store directory is not writable: " + dir.string());
    out.close();
    fs::remove(probe, ec);
  }

  const fs::path manifest_path = dir / kManifest;
  if (!fs::exists(manifest_path)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      (void)entry;
      throw IoError("directory is not empty and holds no store manifest: " + dir.string());
    }
    write_manifest();
    return;
  }

  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("unreadable store manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", std::string()) != kStoreFormat || manifest.value("version", 0) != kStoreVersion)
    throw IoError("incompatible store directory " + dir.string());

  for (const auto& seg : manifest.at("dict_segments")) {
    const std::string name = seg.get<std::string>();
    std::ifstream in(dir / name, std::ios::binary);
    char magic[8];
    std::uint64_t count = 0;
    if (!in.read(magic, 8) || std::memcmp(magic, kDictMagic, 8) != 0 ||
        !in.read(reinterpret_cast<char*>(&count), sizeof count))
      throw IoError("bad dictionary segment " + name);
    for (std::uint64_t k = 0; k < count; ++k) {
      std::uint32_t len = 0;
      in.read(reinterpret_cast<char*>(&len), sizeof len);
      std::string key(len, '\0');
      in.read(key.data(), len);
      if (!in) throw IoError("truncated dictionary segment " + name);
      dict_.intern_key(std::move(key));
    }
    dict_segments_.push_back(name);
  }
  dict_persisted_ = dict_.size();

  for (const auto& [order_name, levels] : manifest.at("indexes").items()) {
    const auto order = order_from_string(order_name);
    if (!order) throw IoError("unknown index ordering in manifest: " + order_name);
    auto& index = indexes_[slot(*order)];
    for (const auto& level : levels) {
      Level& lv = index.levels.emplace_back();
      for (const auto& name : level) lv.runs.push_back(RunFile::open(dir / name.get<std::string>()));
    }
  }
  triple_count_ = manifest.at("triple_count").get<std::uint64_t>();
  next_file_id_ = manifest.at("next_file_id").get<std::uint64_t>();

  // files left behind by an interrupted flush or merge are not part of the store
  std::unordered_set<std::string> live(dict_segments_.begin(), dict_segments_.end());
  live.insert(std::string(kManifest));
  for (const auto& index : indexes_)
    for (const auto& level : index.levels)
      for (const auto& run : level.runs) live.insert(run->path().filename().string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!live.contains(entry.path().filename().string())) fs::remove_all(entry.path(), ec);
  }
}

void ReferenceStore::write_manifest() {
  nlohmann::json indexes = nlohmann::json::object();
  for (IndexOrder order : {IndexOrder::spo, IndexOrder::pos, IndexOrder::osp}) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& level : indexes_[slot(order)].levels) {
      nlohmann::json names = nlohmann::json::array();
      for (const auto& run : level.runs) names.push_back(run->path().filename().string());
      levels.push_back(std::move(names));
    }
    indexes[std::string(to_string(order))] = std::move(levels);
  }
  const nlohmann::json manifest = {
      {"format", kStoreFormat},         {"version", kStoreVersion},
      {"triple_count", triple_count_},  {"next_file_id", next_file_id_},
      {"dict_segments", dict_segments_}, {"indexes", indexes},
  };
  write_file_atomically(config_.data_dir / kManifest, manifest.dump(1));
}

bool ReferenceStore::stored_on_disk(const IndexKey& spo) const {
  for (const auto& level : indexes_[slot(IndexOrder::spo)].levels)
    for (const auto& run : level.runs)
      if (run->contains(spo)) return true;
  return false;
}

LoadResult ReferenceStore::load_batch(std::span<const Triple> batch) {
  if (closed_) throw StoreFatalError("store is closed");
  LoadResult result;
  try {
    for (const Triple& t : batch) {
      const IndexKey spo = {dict_.intern(t.subject).value, dict_.intern(t.predicate).value,
                            dict_.intern(t.object).value};
      if (buffered_.contains(spo) || stored_on_disk(spo)) {
        ++result.duplicates;
        continue;
      }
      buffered_.insert(spo);
      for (IndexOrder order : {IndexOrder::spo, IndexOrder::pos, IndexOrder::osp}) {
        auto& index = indexes_[slot(order)];
        const IndexKey key = to_key(order, spo);
        if (index.sorted && !index.buffer.empty() && key < index.buffer.back()) index.sorted = false;
        index.buffer.push_back(key);
      }
      ++triple_count_;
      ++result.inserted;
      if (config_.persistence == Persistence::disk && buffered_.size() >= config_.flush_threshold) flush();
    }
  } catch (const std::bad_alloc&) {
    throw StoreFatalError("out of memory while loading batch");
  } catch (const IoError& e) {
    throw StoreFatalError(std::string("storage failure: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    throw StoreFatalError(std::string("storage failure: ") + e.what());
  }
  return result;
}

void ReferenceStore::flush() {
  if (config_.persistence != Persistence::disk || closed_) return;
  if (buffered_.empty() && dict_persisted_ == dict_.size()) return;

  if (dict_persisted_ < dict_.size()) {
    std::string bytes(kDictMagic, sizeof kDictMagic);
    const std::uint64_t count = dict_.size() - dict_persisted_;
    bytes.append(reinterpret_cast<const char*>(&count), sizeof count);
    for (std::size_t id = dict_persisted_; id < dict_.size(); ++id) {
      const std::string& key = dict_.key(TermId{id});
      const auto len = static_cast<std::uint32_t>(key.size());
      bytes.append(reinterpret_cast<const char*>(&len), sizeof len);
      bytes += key;
    }
    const fs::path seg = next_file("dict");
    write_file_atomically(seg, bytes);
    dict_segments_.push_back(seg.filename().string());
    dict_persisted_ = dict_.size();
  }

  if (!buffered_.empty()) {
    for (IndexOrder order : {IndexOrder::spo, IndexOrder::pos, IndexOrder::osp}) {
      auto& index = indexes_[slot(order)];
      if (!index.sorted) std::sort(index.buffer.begin(), index.buffer.end());
      auto run = RunFile::write(next_file(std::string(to_string(order)) + "-L0"), order, index.buffer);
      if (index.levels.empty()) index.levels.emplace_back();
      index.levels[0].runs.push_back(std::move(run));
      index.buffer.clear();
      index.buffer.shrink_to_fit();
      index.sorted = true;
    }
    buffered_.clear();
    ++flushes_;
  }
  write_manifest();
  for (IndexOrder order : {IndexOrder::spo, IndexOrder::pos, IndexOrder::osp}) compact(order);
}

void ReferenceStore::compact(IndexOrder order) {
  auto& index = indexes_[slot(order)];
  for (std::size_t lv = 0; lv < index.levels.size(); ++lv) {
    if (index.levels[lv].runs.size() < config_.merge_fanout) continue;
    std::vector<std::shared_ptr<RunFile>> inputs = std::move(index.levels[lv].runs);
    index.levels[lv].runs.clear();

    std::size_t total = 0;
    for (const auto& r : inputs) total += r->keys().size();
    std::vector<IndexKey> merged;
    merged.reserve(total);
    using Cursor = std::pair<const IndexKey*, const IndexKey*>;
    auto later = [](const Cursor& a, const Cursor& b) { return *b.first < *a.first; };
    std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
    for (const auto& r : inputs) {
      auto keys = r->keys();
      if (!keys.empty()) heap.emplace(keys.data(), keys.data() + keys.size());
    }
    while (!heap.empty()) {
      Cursor c = heap.top();
      heap.pop();
      merged.push_back(*c.first);
      if (++c.first != c.second) heap.push(c);
    }
    merge_work_ += merged.size();

    const std::string stem = std::string(to_string(order)) + "-L" + std::to_string(lv + 1);
    auto out = RunFile::write(next_file(stem), order, merged);
    if (index.levels.size() == lv + 1) index.levels.emplace_back();
    index.levels[lv + 1].runs.push_back(std::move(out));
    write_manifest();
    std::error_code ec;
    for (const auto& r : inputs) fs::remove(r->path(), ec);
  }
}

void ReferenceStore::close() {
  if (closed_) return;
  flush();
  closed_ = true;
}

std::size_t ReferenceStore::run_count() const noexcept {
  std::size_t n = 0;
  for (const auto& index : indexes_)
    for (const auto& level : index.levels) n += level.runs.size();
  return n;
}

StoreMetricsSnapshot ReferenceStore::snapshot_metrics() const {
  StoreMetricsSnapshot snap;
  snap.triple_count = triple_count_;
  snap.dictionary_size = dict_.size();
  if (config_.persistence == Persistence::disk) snap.disk_bytes = directory_bytes(config_.data_dir);
  return snap;
}

void ReferenceStore::scan(IndexOrder order, const std::array<std::optional<std::uint64_t>, 3>& bound,
                          std::vector<IndexKey>& out) const {
  const auto& layout = kLayout[slot(order)];
  // bound components in key order, and how many of them form a key prefix
  std::array<std::optional<std::uint64_t>, 3> in_key;
  for (int k = 0; k < 3; ++k) in_key[k] = bound[layout[k]];
  std::size_t prefix = 0;
  while (prefix < 3 && in_key[prefix]) ++prefix;
  IndexKey lo{0, 0, 0};
  for (std::size_t k = 0; k < prefix; ++k) lo[k] = *in_key[k];

  auto accept = [&](const IndexKey& key) {
    for (int k = 0; k < 3; ++k)
      if (in_key[k] && key[k] != *in_key[k]) return false;
    return true;
  };
  auto in_prefix = [&](const IndexKey& key) {
    for (std::size_t k = 0; k < prefix; ++k)
      if (key[k] != lo[k]) return false;
    return true;
  };
  auto scan_sorted = [&](std::span<const IndexKey> keys) {
    auto it = std::lower_bound(keys.begin(), keys.end(), lo);
    for (; it != keys.end() && in_prefix(*it); ++it)
      if (accept(*it)) out.push_back(*it);
  };

  auto& index = indexes_[slot(order)];
  if (!index.sorted) {
    std::sort(index.buffer.begin(), index.buffer.end());
    index.sorted = true;
  }
  scan_sorted(index.buffer);
  for (const auto& level : index.levels)
    for (const auto& run : level.runs) scan_sorted(run->keys());
}

void ReferenceStore::match_with(IndexOrder order, const TriplePattern& pattern, const TripleSink& sink) const {
  std::array<std::optional<std::uint64_t>, 3> bound;
  const std::array<const std::optional<Term>*, 3> positions = {&pattern.subject, &pattern.predicate, &pattern.object};
  for (int k = 0; k < 3; ++k) {
    if (!*positions[k]) continue;
    const auto id = dict_.find(**positions[k]);
    if (!id) return;  // a term never interned matches nothing
    bound[k] = id->value;
  }
  std::vector<IndexKey> keys;
  scan(order, bound, keys);
  std::sort(keys.begin(), keys.end());

  std::unordered_map<std::uint64_t, Term> decoded;
  auto term = [&](std::uint64_t id) -> const Term& {
    auto it = decoded.find(id);
    if (it == decoded.end()) it = decoded.emplace(id, dict_.term(TermId{id})).first;
    return it->second;
  };
  for (const IndexKey& key : keys) {
    const IndexKey spo = to_spo(order, key);
    sink(Triple{term(spo[0]), term(spo[1]), term(spo[2])});
  }
}

void ReferenceStore::match(const TriplePattern& pattern, const TripleSink& sink) const {
  match_with(select_index(pattern), pattern, sink);
}

std::unique_ptr<ReferenceStore> store_open(const StoreConfig& config) {
  return std::make_unique<ReferenceStore>(config);
}

}  // namespace rdfload
