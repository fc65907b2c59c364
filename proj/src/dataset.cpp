#include "rdfload/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <queue>
#include <system_error>
#include <unordered_map>
#include <unordered_set>

#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

std::string batch_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "batch-%06zu.nt", index);
  return buf;
}

std::vector<fs::path> list_batch_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("batches directory does not exist: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("batch-") && name.ends_with(".nt")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Triple> read_ntriples_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  NTriplesReader reader(in);
  std::vector<Triple> out;
  while (auto t = reader.next()) out.push_back(std::move(t->triple));
  return out;
}

Batch read_batch_file(const fs::path& path, std::size_t index) { return Batch{index, read_ntriples_file(path)}; }

SplitResult split_batches(const fs::path& input, const fs::path& output_dir, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoError("cannot open input " + input.string());
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) throw IoError("cannot create output directory " + output_dir.string());

  SplitResult result;
  std::vector<fs::path> created;
  auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& p : created) fs::remove(p, ignore);
  };

  NTriplesReader reader(in);
  std::ofstream out;
  fs::path tmp;
  std::size_t in_batch = 0;
  std::string line;
  try {
    while (auto parsed = reader.next()) {
      if (in_batch == 0) {
        tmp = output_dir / (batch_file_name(result.batch_files.size()) + ".tmp");
        out.open(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        created.push_back(tmp);
      }
      line.clear();
      append_triple(line, parsed->triple);
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
      ++result.total_triples;
      if (++in_batch == batch_size) {
        out.close();
        if (!out) throw IoError("write failed for " + tmp.string());
        const fs::path final_path = output_dir / batch_file_name(result.batch_files.size());
        fs::rename(tmp, final_path);
        created.back() = final_path;
        result.batch_files.push_back(final_path);
        in_batch = 0;
      }
    }
  } catch (...) {
    if (out.is_open()) out.close();
    cleanup();
    throw;
  }
  if (in_batch > 0) {
    out.close();
    std::error_code ignore;
    fs::remove(tmp, ignore);
  }
  result.discarded = in_batch;
  if (result.batch_files.empty()) {
    result.warnings.push_back("input has fewer than " + std::to_string(batch_size) +
                              " triples; no batches written, " + std::to_string(in_batch) + " discarded");
  }
  return result;
}

namespace {

// Counts distinct keys (with multiplicities) using bounded memory: once the
// in-memory table exceeds `limit` keys it is written as a sorted run and
// the runs are merged at the end.
class SpillingCounter {
 public:
  SpillingCounter(std::size_t limit, fs::path dir, std::string tag)
      : limit_(limit), dir_(std::move(dir)), tag_(std::move(tag)) {}

  SpillingCounter(const SpillingCounter&) = delete;
  SpillingCounter& operator=(const SpillingCounter&) = delete;

  ~SpillingCounter() {
    std::error_code ignore;
    for (const auto& r : runs_) fs::remove(r, ignore);
  }

  void add(std::string key) {
    ++table_[std::move(key)];
    if (limit_ > 0 && table_.size() >= limit_) spill();
  }

  /// Visits every distinct key with its total count, in unspecified order.
  void for_each(const std::function<void(std::uint64_t)>& visit) {
    if (runs_.empty()) {
      for (const auto& [key, count] : table_) visit(count);
      return;
    }
    if (!table_.empty()) spill();
    merge(visit);
  }

 private:
  struct Record {
    std::string key;
    std::uint64_t count = 0;
  };

  static bool read_record(std::ifstream& in, Record& r) {
    std::uint32_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) return false;
    r.key.resize(len);
    in.read(r.key.data(), len);
    in.read(reinterpret_cast<char*>(&r.count), sizeof r.count);
    if (!in) throw IoError("truncated spill run");
    return true;
  }

  void spill() {
    std::vector<std::pair<std::string, std::uint64_t>> sorted(std::make_move_iterator(table_.begin()),
                                                               std::make_move_iterator(table_.end()));
    table_.clear();
    std::sort(sorted.begin(), sorted.end());
    std::error_code ec;
    fs::create_directories(dir_, ec);
    fs::path path = dir_ / ("spill-" + tag_ + "-" + std::to_string(runs_.size()) + ".run");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write spill run " + path.string());
    for (const auto& [key, count] : sorted) {
      const auto len = static_cast<std::uint32_t>(key.size());
      out.write(reinterpret_cast<const char*>(&len), sizeof len);
      out.write(key.data(), len);
      out.write(reinterpret_cast<const char*>(&count), sizeof count);
    }
    if (!out) throw IoError("write failed for spill run " + path.string());
    runs_.push_back(std::move(path));
  }

  void merge(const std::function<void(std::uint64_t)>& visit) {
    std::vector<std::ifstream> inputs;
    std::vector<Record> heads(runs_.size());
    inputs.reserve(runs_.size());
    auto greater = [&](std::size_t a, std::size_t b) { return heads[a].key > heads[b].key; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t k = 0; k < runs_.size(); ++k) {
      inputs.emplace_back(runs_[k], std::ios::binary);
      if (read_record(inputs[k], heads[k])) heap.push(k);
    }
    std::string current;
    std::uint64_t count = 0;
    bool have = false;
    while (!heap.empty()) {
      const std::size_t k = heap.top();
      heap.pop();
      if (have && heads[k].key == current) {
        count += heads[k].count;
      } else {
        if (have) visit(count);
        current = heads[k].key;
        count = heads[k].count;
        have = true;
      }
      if (read_record(inputs[k], heads[k])) heap.push(k);
    }
    if (have) visit(count);
  }

  std::size_t limit_;
  fs::path dir_;
  std::string tag_;
  std::unordered_map<std::string, std::uint64_t> table_;
  std::vector<fs::path> runs_;
};

struct StatsAccumulator {
  std::uint64_t triples = 0;
  std::uint64_t bytes = 0;
  std::map<std::string, std::uint64_t> predicate_frequency;
};

DatasetStats finish(const StatsAccumulator& acc) {
  DatasetStats s;
  s.triples = acc.triples;
  s.predicates = acc.predicate_frequency.size();
  s.predicate_frequency = acc.predicate_frequency;
  s.mean_bpt = acc.triples > 0 ? static_cast<double>(acc.bytes) / static_cast<double>(acc.triples) : 0.0;
  return s;
}

DatasetStats stats_in_memory(NTriplesReader& reader) {
  // Terms are interned once; per-position sets then hold dense ids.
  std::unordered_map<std::string, std::uint32_t> dictionary;
  auto intern = [&](const Term& t) {
    auto [it, inserted] = dictionary.try_emplace(serialize_term(t), static_cast<std::uint32_t>(dictionary.size()));
    return it->second;
  };
  std::unordered_map<std::uint32_t, std::uint64_t> subject_degree;
  std::unordered_set<std::uint32_t> objects;
  StatsAccumulator acc;
  while (auto parsed = reader.next()) {
    const Triple& t = parsed->triple;
    ++acc.triples;
    acc.bytes += line_byte_length(t);
    ++subject_degree[intern(t.subject)];
    ++acc.predicate_frequency[t.predicate.value];
    objects.insert(intern(t.object));
  }
  DatasetStats s = finish(acc);
  s.subjects = subject_degree.size();
  s.objects = objects.size();
  for (const auto& [id, degree] : subject_degree) ++s.subject_degree_histogram[degree];
  return s;
}

DatasetStats stats_spilling(NTriplesReader& reader, const StatsOptions& options) {
  const fs::path dir = options.spill_dir.empty() ? fs::temp_directory_path() : options.spill_dir;
  const std::string tag = std::to_string(reinterpret_cast<std::uintptr_t>(&reader));
  SpillingCounter subjects(options.max_in_memory_terms, dir, tag + "-s");
  SpillingCounter objects(options.max_in_memory_terms, dir, tag + "-o");
  StatsAccumulator acc;
  while (auto parsed = reader.next()) {
    const Triple& t = parsed->triple;
    ++acc.triples;
    acc.bytes += line_byte_length(t);
    subjects.add(serialize_term(t.subject));
    ++acc.predicate_frequency[t.predicate.value];
    objects.add(serialize_term(t.object));
  }
  DatasetStats s = finish(acc);
  subjects.for_each([&](std::uint64_t degree) {
    ++s.subjects;
    ++s.subject_degree_histogram[degree];
  });
  objects.for_each([&](std::uint64_t) { ++s.objects; });
  return s;
}

}  // namespace

DatasetStats compute_stats(std::istream& in, const StatsOptions& options) {
  NTriplesReader reader(in);
  return options.max_in_memory_terms == 0 ? stats_in_memory(reader) : stats_spilling(reader, options);
}

DatasetStats compute_stats(const fs::path& input, const StatsOptions& options) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoError("cannot open " + input.string());
  return compute_stats(in, options);
}

nlohmann::json to_json(const DatasetStats& stats) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [degree, count] : stats.subject_degree_histogram) hist[std::to_string(degree)] = count;
  return {
      {"triples", stats.triples},
      {"subjects", stats.subjects},
      {"predicates", stats.predicates},
      {"objects", stats.objects},
      {"mean_bpt", stats.mean_bpt},
      {"subject_degree_histogram", hist},
      {"predicate_frequency", stats.predicate_frequency},
  };
}

DatasetStats stats_from_json(const nlohmann::json& j) {
  DatasetStats s;
  s.triples = j.at("triples").get<std::uint64_t>();
  s.subjects = j.at("subjects").get<std::uint64_t>();
  s.predicates = j.at("predicates").get<std::uint64_t>();
  s.objects = j.at("objects").get<std::uint64_t>();
  s.mean_bpt = j.at("mean_bpt").get<double>();
  for (const auto& [degree, count] : j.at("subject_degree_histogram").items())
    s.subject_degree_histogram[std::stoull(degree)] = count.get<std::uint64_t>();
  s.predicate_frequency = j.at("predicate_frequency").get<std::map<std::string, std::uint64_t>>();
  return s;
}

}  // namespace rdfload
