#include "rdfload/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

void LsMatrix::set(const std::string& dataset, const std::string& store, const std::string& platform,
                   std::uint64_t batch, double ls) {
  if (!(ls > 0.0) || !std::isfinite(ls))
    throw std::invalid_argument("loading speed must be positive and finite (dataset " + dataset + ", batch " +
                                std::to_string(batch) + ")");
  datasets_.insert(dataset);
  stores_.insert(store);
  platforms_.insert(platform);
  entries_[dataset][{store, platform}][batch] = ls;
}

std::optional<double> LsMatrix::at(const std::string& dataset, const std::string& store, const std::string& platform,
                                   std::uint64_t batch) const {
  const auto d = entries_.find(dataset);
  if (d == entries_.end()) return std::nullopt;
  const auto c = d->second.find(Config{store, platform});
  if (c == d->second.end()) return std::nullopt;
  const auto b = c->second.find(batch);
  if (b == c->second.end()) return std::nullopt;
  return b->second;
}

std::uint64_t LsMatrix::batch_count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& [d, by_config] : entries_)
    for (const auto& [config, series] : by_config)
      if (!series.empty()) n = std::max(n, series.rbegin()->first + 1);
  return n;
}

std::size_t LsMatrix::entry_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [d, by_config] : entries_)
    for (const auto& [config, series] : by_config) n += series.size();
  return n;
}

LsMatrix LsMatrix::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("scale factor must be positive");
  LsMatrix out(batch_size_);
  out.datasets_ = datasets_;
  out.stores_ = stores_;
  out.platforms_ = platforms_;
  for_each([&](const std::string& d, const std::string& s, const std::string& p, std::uint64_t b, double ls) {
    out.set(d, s, p, b, ls * c);
  });
  return out;
}

std::string platform_key(const RunRecord& run) {
  const auto limit = run.memory_limit_bytes();
  if (!limit) return run.labels.platform_id;
  return run.labels.platform_id + "@" + std::to_string(*limit);
}

LsMatrix build_ls_matrix(std::span<const RunRecord> runs, DuplicateRunPolicy policy) {
  std::optional<std::uint64_t> batch_size;
  std::map<std::tuple<std::string, std::string, std::string>, const RunRecord*> chosen;
  for (const RunRecord& run : runs) {
    if (batch_size && *batch_size != run.batch_size)
      throw ConfigError("runs use different batch sizes (" + std::to_string(*batch_size) + " and " +
                        std::to_string(run.batch_size) + "); batches are not comparable");
    batch_size = run.batch_size;
    auto key = std::make_tuple(run.labels.dataset_id, run.labels.store_id, platform_key(run));
    auto [it, inserted] = chosen.try_emplace(key, &run);
    if (!inserted) {
      if (policy == DuplicateRunPolicy::reject)
        throw ConfigError("duplicate run for dataset '" + run.labels.dataset_id + "', store '" + run.labels.store_id +
                          "', platform '" + platform_key(run) + "'");
      it->second = &run;
    }
  }
  LsMatrix m(batch_size.value_or(0));
  for (const auto& [key, run] : chosen) {
    const auto& [d, s, p] = key;
    m.add_dataset(d);
    m.add_store(s);
    m.add_platform(p);
    for (const BatchRecord& b : run->batches) m.set(d, s, p, b.batch_index, b.ls);
  }
  return m;
}

LsMatrix build_ls_matrix(std::span<const fs::path> run_files, DuplicateRunPolicy policy) {
  std::vector<RunRecord> runs;
  runs.reserve(run_files.size());
  for (const auto& f : run_files) runs.push_back(read_run(f));
  return build_ls_matrix(runs, policy);
}

std::optional<double> mls(const LsMatrix& m, const std::string& dataset, std::uint64_t batch) {
  double numerator = 0.0;
  std::size_t defined = 0;
  for (const auto& s : m.stores()) {
    for (const auto& p : m.platforms()) {
      if (const auto ls = m.at(dataset, s, p, batch)) {
        numerator += *ls;
        ++defined;
      }
      // undefined LS contributes zero to the numerator
    }
  }
  if (defined == 0) return std::nullopt;
  return numerator / static_cast<double>(defined);
}

std::set<std::string> defined_datasets(const LsMatrix& m, std::uint64_t batch) {
  std::set<std::string> out;
  for (const auto& d : m.datasets())
    if (mls(m, d, batch)) out.insert(d);
  return out;
}

std::optional<double> rls(const LsMatrix& m, const std::string& dataset, std::uint64_t batch) {
  const auto own = mls(m, dataset, batch);
  if (!own) return std::nullopt;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& d : m.datasets()) {
    if (const auto v = mls(m, d, batch)) {
      sum += *v;
      ++n;
    }
  }
  return *own * static_cast<double>(n) / sum;
}

RlsTable compute_rls_table(const LsMatrix& m) {
  RlsTable t;
  t.batch_size = m.batch_size();
  t.batch_count = m.batch_count();
  t.datasets.assign(m.datasets().begin(), m.datasets().end());
  for (const auto& d : t.datasets) t.cells[d].resize(t.batch_count);
  t.d_def.resize(t.batch_count);
  for (std::uint64_t b = 0; b < t.batch_count; ++b) {
    double sum = 0.0;
    for (const auto& d : t.datasets) {
      auto v = mls(m, d, b);
      t.cells[d][b].mls = v;
      if (v) {
        sum += *v;
        t.d_def[b].insert(d);
      }
    }
    const double scale = static_cast<double>(t.d_def[b].size()) / sum;
    for (const auto& d : t.d_def[b]) t.cells[d][b].rls = *t.cells[d][b].mls * scale;
  }
  return t;
}

std::map<std::uint64_t, double> RlsTable::rls_series(const std::string& dataset) const {
  std::map<std::uint64_t, double> out;
  const auto& row = cells.at(dataset);
  for (std::uint64_t b = 0; b < row.size(); ++b)
    if (row[b].rls) out[b] = *row[b].rls;
  return out;
}

LsMatrix trim_and_filter(const LsMatrix& m, const TrimOptions& options) {
  const std::set<std::string> excluded(options.exclude.begin(), options.exclude.end());
  std::set<std::string> retained;
  for (const auto& d : m.datasets())
    if (!excluded.contains(d)) retained.insert(d);

  std::optional<std::uint64_t> limit;  // batches with ordinal >= limit are dropped
  if (const auto* triples = std::get_if<std::uint64_t>(&options.trim)) {
    if (m.batch_size() == 0) throw ConfigError("cannot trim by triples: batch size unknown");
    limit = *triples / m.batch_size();
    if (*limit == 0)
      throw ConfigError("trim limit of " + std::to_string(*triples) + " triples is smaller than one batch of " +
                        std::to_string(m.batch_size()));
  } else if (std::holds_alternative<MinCommonTrim>(options.trim)) {
    std::map<std::string, std::uint64_t> last;  // dataset -> highest batch with an entry
    m.for_each([&](const std::string& d, const std::string&, const std::string&, std::uint64_t b, double) {
      if (!retained.contains(d)) return;
      auto [it, inserted] = last.try_emplace(d, b);
      if (!inserted) it->second = std::max(it->second, b);
    });
    if (retained.empty() || last.size() < retained.size())
      throw ConfigError("min-common trim: some retained dataset has no loaded batches");
    std::uint64_t common = last.begin()->second;
    for (const auto& [d, b] : last) common = std::min(common, b);
    limit = common + 1;
  }

  LsMatrix out(m.batch_size());
  for (const auto& d : retained) out.add_dataset(d);
  for (const auto& s : m.stores()) out.add_store(s);
  for (const auto& p : m.platforms()) out.add_platform(p);
  m.for_each([&](const std::string& d, const std::string& s, const std::string& p, std::uint64_t b, double ls) {
    if (retained.contains(d) && (!limit || b < *limit)) out.set(d, s, p, b, ls);
  });
  if (out.empty()) throw ConfigError("trimming and filtering left no loading-speed entries");
  return out;
}

SeriesSummary summarize(std::span<const double> values, double z) {
  SeriesSummary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  s.ci_low = s.ci_high = s.mean;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    const double half = z * sd / std::sqrt(static_cast<double>(s.n));
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
  }
  return s;
}

namespace {

std::uint64_t batches_per_window(std::uint64_t batch_size, std::uint64_t window_triples) {
  if (batch_size == 0 || window_triples == 0 || window_triples % batch_size != 0)
    throw std::invalid_argument("window of " + std::to_string(window_triples) +
                                " triples is not a positive multiple of the batch size " + std::to_string(batch_size));
  return window_triples / batch_size;
}

WindowPoint make_point(std::uint64_t window, std::uint64_t window_triples, std::span<const double> values,
                       double z, double expected) {
  const SeriesSummary s = summarize(values, z);
  WindowPoint pt;
  pt.window_center = (static_cast<double>(window) + 0.5) * static_cast<double>(window_triples);
  pt.mean = s.mean;
  pt.ci_low = s.ci_low;
  pt.ci_high = s.ci_high;
  pt.n = s.n;
  pt.coverage = expected > 0 ? static_cast<double>(s.n) / expected : 0.0;
  return pt;
}

}  // namespace

std::vector<WindowPoint> aggregate_series(const std::map<std::uint64_t, double>& series, std::uint64_t batch_size,
                                          std::uint64_t window_triples, double z) {
  const std::uint64_t per_window = batches_per_window(batch_size, window_triples);
  std::map<std::uint64_t, std::vector<double>> windows;
  for (const auto& [b, v] : series) windows[b / per_window].push_back(v);
  std::vector<WindowPoint> out;
  for (const auto& [w, values] : windows)
    out.push_back(make_point(w, window_triples, values, z, static_cast<double>(per_window)));
  return out;
}

std::vector<WindowPoint> speed_over_time(const LsMatrix& m, const std::string& store, const std::string& platform,
                                         std::uint64_t window_triples, double z) {
  const std::uint64_t per_window = batches_per_window(m.batch_size(), window_triples);
  std::map<std::uint64_t, std::vector<double>> windows;
  m.for_each([&](const std::string&, const std::string& s, const std::string& p, std::uint64_t b, double ls) {
    if (s == store && p == platform) windows[b / per_window].push_back(ls);
  });
  const double expected = static_cast<double>(per_window * m.datasets().size());
  std::vector<WindowPoint> out;
  for (const auto& [w, values] : windows) out.push_back(make_point(w, window_triples, values, z, expected));
  return out;
}

std::vector<CompletionRow> completion_report(std::span<const RunRecord> runs) {
  std::vector<CompletionRow> rows;
  rows.reserve(runs.size());
  for (const RunRecord& run : runs) {
    CompletionRow row;
    row.dataset = run.labels.dataset_id;
    row.store = run.labels.store_id;
    row.platform = platform_key(run);
    row.dataset_triples = run.batch_size * run.total_batches;
    row.loaded_triples = run.batch_size * run.batches.size();
    row.termination = run.termination;
    row.fully_loaded = run.termination == Termination::completed;
    rows.push_back(std::move(row));
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

MedianRlsSummary median_rls_summary(const RlsTable& table) {
  if (table.datasets.empty()) throw std::invalid_argument("median RLS summary of an empty table");
  MedianRlsSummary out;
  for (const auto& d : table.datasets) {
    std::vector<double> values;
    for (const auto& cell : table.cells.at(d))
      if (cell.rls) values.push_back(*cell.rls);
    if (values.empty()) {
      out.warnings.push_back("dataset '" + d + "' has no defined RLS values; excluded from the summary");
      continue;
    }
    out.medians.push_back(DatasetMedian{d, median(values), values.size()});
  }
  if (!out.medians.empty()) {
    auto [lo, hi] = std::minmax_element(out.medians.begin(), out.medians.end(),
                                        [](const DatasetMedian& a, const DatasetMedian& b) { return a.median < b.median; });
    out.ratio = hi->median / lo->median;
    out.fastest = hi->dataset;
    out.slowest = lo->dataset;
  }
  return out;
}

}  // namespace rdfload
