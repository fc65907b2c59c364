#include "rdfload/driver.hpp"

#include <algorithm>
#include <ctime>
#include <new>

#include "rdfload/dataset.hpp"
#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

namespace {

double seconds_between(std::chrono::nanoseconds a, std::chrono::nanoseconds b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t count_statement_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open batch file " + path.string());
  std::uint64_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] != '#') ++n;
  }
  return n;
}

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::crashed: return "crashed";
    case Termination::below_speed_threshold: return "below-speed-threshold";
  }
  return "?";
}

Termination termination_from_string(std::string_view s) {
  if (s == "completed") return Termination::completed;
  if (s == "crashed") return Termination::crashed;
  if (s == "below-speed-threshold") return Termination::below_speed_threshold;
  throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

std::uint64_t RunRecord::loaded_triples() const {
  std::uint64_t n = 0;
  for (const auto& b : batches) n += b.triples;
  return n;
}

RunRecord run_benchmark(TripleStore& store, std::span<const fs::path> batch_files, const BenchOptions& options,
                        const Clock& clock) {
  if (!(options.threshold_tps > 0.0)) throw ConfigError("threshold_tps must be positive");
  if (batch_files.empty()) throw ConfigError("no batch files to load");
  for (const auto& f : batch_files) {
    std::error_code ec;
    if (!fs::is_regular_file(f, ec)) throw ConfigError("missing batch file " + f.string());
  }

  RunRecord run;
  run.labels = options.labels;
  run.platform = options.platform;
  run.threshold_tps = options.threshold_tps;
  run.sample_hz = options.sample_hz;
  run.total_batches = batch_files.size();
  run.batch_size = count_statement_lines(batch_files.front());
  run.started_at = utc_timestamp();

  std::optional<RunWriter> writer;
  if (options.output) {
    writer.emplace(*options.output);
    writer->header(run);
  }

  bool warned_sampling = false;
  bool warned_memory = false;
  auto warn = [&](std::string msg) { run.warnings.push_back(std::move(msg)); };

  ResourceSampler sampler(options.sample_hz, options.probe);
  sampler.start();

  run.termination = Termination::completed;
  for (std::size_t k = 0; k < batch_files.size(); ++k) {
    sampler.drain();  // samples taken between windows belong to no batch
    const ResourceSample before = options.probe();

    const auto t0 = clock.now();
    Batch batch;
    try {
      batch = read_batch_file(batch_files[k], k);
    } catch (const ParseError& e) {
      sampler.stop();
      throw ConfigError("batch file " + batch_files[k].string() + ": " + e.what());
    }
    const auto t_parsed = clock.now();
    bool crashed = false;
    try {
      store.load_batch(batch.triples);
    } catch (const StoreFatalError& e) {
      crashed = true;
      run.termination_detail = e.what();
    } catch (const std::bad_alloc&) {
      crashed = true;
      run.termination_detail = "out of memory";
    } catch (const std::exception& e) {
      crashed = true;
      run.termination_detail = e.what();
    }
    const auto t1 = clock.now();

    if (crashed) {
      run.termination = Termination::crashed;
      break;
    }

    std::vector<ResourceSample> window = sampler.drain();
    const ResourceSample after = options.probe();
    window.push_back(before);
    window.push_back(after);

    BatchRecord rec;
    rec.batch_index = k;
    rec.triples = batch.size();
    // a zero reading from a coarse or virtual clock is clamped to one tick
    rec.load_seconds = std::max(seconds_between(t0, t1), 1e-9);
    rec.ls = static_cast<double>(rec.triples) / rec.load_seconds;
    if (options.split_parse_time) rec.parse_seconds = seconds_between(t0, t_parsed);
    rec.peak_rss_bytes = peak_rss(window);
    if (before.cpu_seconds && after.cpu_seconds) rec.cpu_seconds = *after.cpu_seconds - *before.cpu_seconds;
    if ((!rec.peak_rss_bytes || !rec.cpu_seconds) && !warned_sampling) {
      warn("resource sampling unavailable on this platform; metrics recorded as null");
      warned_sampling = true;
    }
    try {
      rec.disk_bytes = store.snapshot_metrics().disk_bytes;
    } catch (const std::exception& e) {
      warn(std::string("disk size unavailable for batch ") + std::to_string(k) + ": " + e.what());
    }
    const auto limit = run.memory_limit_bytes();
    if (limit && rec.peak_rss_bytes && *rec.peak_rss_bytes > *limit && !warned_memory) {
      warn("peak RSS " + std::to_string(*rec.peak_rss_bytes) + " exceeds configured memory limit " +
           std::to_string(*limit) + " (limit is not enforced by the harness)");
      warned_memory = true;
    }

    run.batches.push_back(rec);
    if (writer) writer->batch(rec);

    if (rec.ls < options.threshold_tps) {
      run.termination = Termination::below_speed_threshold;
      run.termination_detail = "batch " + std::to_string(k) + " loaded at " + std::to_string(rec.ls) +
                               " triples/s, below " + std::to_string(options.threshold_tps);
      break;
    }
  }
  sampler.stop();
  if (writer) writer->termination(run);
  return run;
}

}  // namespace rdfload
