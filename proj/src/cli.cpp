#include "rdfload/cli.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rdfload/analysis.hpp"
#include "rdfload/dataset.hpp"
#include "rdfload/driver.hpp"
#include "rdfload/errors.hpp"
#include "rdfload/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rdfload {

namespace {

constexpr const char* kOutputDirEnv = "RDFLOAD_OUTPUT_DIR";

/// Bad flag values or combinations; reported before any work starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<fs::path> default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return fs::path(env);
  return std::nullopt;
}

fs::path resolve_out_dir(const std::string& flag_value, const char* flag) {
  if (!flag_value.empty()) return flag_value;
  if (auto env = default_output_dir()) return *env;
  throw UsageError(std::string(flag) + " is required (or set " + kOutputDirEnv + ")");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Expands directories into their *.jsonl files (sorted).
std::vector<fs::path> expand_run_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(p)) throw IoError("results file not found: " + in);
      files.push_back(p);
    }
  }
  return files;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json load_json_arg(const std::string& value) {
  try {
    if (!value.empty() && value.front() == '{') return json::parse(value);
    std::ifstream in(value);
    if (!in) throw UsageError("cannot read config file " + value);
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("invalid JSON in " + value + ": " + e.what());
  }
}

std::string host_name() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof buf - 1) == 0 && buf[0]) return buf;
  return "unknown-host";
}

// ---------------------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::string out_dir;
  std::size_t batch_size = kDefaultBatchSize;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  if (a.batch_size == 0) throw UsageError("--batch-size must be at least 1");
  const fs::path dir = resolve_out_dir(a.out_dir, "--out-dir");
  if (!fs::exists(a.input)) throw IoError("input file not found: " + a.input);
  const SplitResult r = split_batches(a.input, dir, a.batch_size);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  out << r.batch_files.size() << " batches, " << r.discarded << " discarded\n";
  return kExitSuccess;
}

struct StatsArgs {
  std::string input;
  std::string out;
  std::size_t max_terms = 0;
  std::string spill_dir;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  StatsOptions opts;
  opts.max_in_memory_terms = a.max_terms;
  if (!a.spill_dir.empty()) opts.spill_dir = a.spill_dir;
  const DatasetStats s = compute_stats(fs::path(a.input), opts);
  const std::string text = to_json(s).dump(2) + "\n";
  if (a.out.empty()) out << text;
  else write_text(a.out, text);
  return kExitSuccess;
}

struct SynthArgs {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> triples, subjects, predicates, seed;
  std::optional<std::string> regularity, object_cardinality;
  std::optional<double> literal_fraction;
  std::string stats_out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  json j = a.config.empty() ? json::object() : load_json_arg(a.config);
  if (a.triples) j["n_triples"] = *a.triples;
  if (a.subjects) j["n_subjects"] = *a.subjects;
  if (a.predicates) j["n_predicates"] = *a.predicates;
  if (a.seed) j["seed"] = *a.seed;
  if (a.regularity) j["regularity"] = *a.regularity;
  if (a.literal_fraction) j["literal_fraction"] = *a.literal_fraction;
  if (a.object_cardinality) {
    if (*a.object_cardinality == "unbounded") j["object_cardinality"] = "unbounded";
    else {
      try {
        j["object_cardinality"] = std::stoull(*a.object_cardinality);
      } catch (const std::exception&) {
        throw UsageError("--object-cardinality must be a count or 'unbounded'");
      }
    }
  }
  SynthProfile profile;
  try {
    profile = profile_from_json(j);
    validate(profile);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid synthetic profile: ") + e.what());
  }
  const DatasetStats stats = generate_synthetic(profile, a.out);
  const json report = {{"profile", to_json(profile)}, {"output", a.out}, {"stats", to_json(stats)}};
  if (!a.stats_out.empty()) write_text(a.stats_out, report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return kExitSuccess;
}

struct BenchArgs {
  std::string store = "reference";
  std::string store_config;
  std::string batches_dir;
  std::string out;
  double threshold_tps = kDefaultThresholdTps;
  double sample_hz = kDefaultSampleHz;
  std::vector<std::string> labels;
  std::string memory_limit;
  bool split_parse_time = false;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.threshold_tps > 0)) throw UsageError("--threshold-tps must be positive");
  if (a.sample_hz < 0) throw UsageError("--sample-hz must be non-negative");
  RunLabels labels;
  for (const auto& kv : a.labels) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--label expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "dataset") labels.dataset_id = value;
    else if (key == "store") labels.store_id = value;
    else if (key == "platform") labels.platform_id = value;
    else labels.extra[key] = value;
  }
  if (labels.dataset_id.empty()) throw UsageError("--label dataset=<id> is required");
  std::optional<std::uint64_t> memory_limit;
  if (!a.memory_limit.empty()) {
    try {
      memory_limit = parse_byte_size(a.memory_limit);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }

  json store_cfg = a.store_config.empty() ? json::object() : load_json_arg(a.store_config);
  if (!store_cfg.is_object()) throw UsageError("--store-config must be a JSON object");
  store_cfg["kind"] = a.store;
  std::unique_ptr<TripleStore> store;
  try {
    store = make_store(store_cfg);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (labels.store_id.empty()) labels.store_id = store->name();
  if (labels.platform_id.empty()) labels.platform_id = host_name();

  fs::path out_path;
  if (!a.out.empty()) {
    out_path = a.out;
  } else if (auto dir = default_output_dir()) {
    out_path = *dir / ("run-" + labels.dataset_id + "-" + labels.store_id + "-" + labels.platform_id + ".jsonl");
  } else {
    throw UsageError(std::string("--out is required (or set ") + kOutputDirEnv + ")");
  }

  const auto batches = list_batch_files(a.batches_dir);
  if (batches.empty()) throw ConfigError("no batch-*.nt files in " + a.batches_dir);

  BenchOptions opts;
  opts.threshold_tps = a.threshold_tps;
  opts.sample_hz = a.sample_hz;
  opts.labels = labels;
  opts.platform = detect_platform(labels.platform_id, memory_limit);
  opts.split_parse_time = a.split_parse_time;
  opts.output = out_path;
  const RunRecord run = run_benchmark(*store, batches, opts);

  for (const auto& w : run.warnings) err << "warning: " << w << '\n';
  out << "termination: " << to_string(run.termination) << '\n'
      << "batches loaded: " << run.batches.size() << " / " << run.total_batches << '\n'
      << "results: " << out_path.string() << '\n';
  if (run.termination != Termination::completed) {
    if (!run.termination_detail.empty()) out << "detail: " << run.termination_detail << '\n';
    return kExitRunAborted;
  }
  return kExitSuccess;
}

struct AnalyzeArgs {
  std::vector<std::string> runs;
  std::vector<std::string> ingest_csv;
  std::uint64_t csv_batch_size = kDefaultBatchSize;
  std::string exclude;
  std::string trim_to;
  std::uint64_t window = 500'000;
  std::uint64_t speed_window = 1'000'000;
  std::string out_dir;
  std::string on_duplicate = "reject";
  double z = 1.96;
};

TrimOptions parse_trim(const AnalyzeArgs& a) {
  TrimOptions t;
  t.exclude = split_list(a.exclude);
  if (a.trim_to.empty()) return t;
  if (a.trim_to == "min-common") {
    t.trim = MinCommonTrim{};
    return t;
  }
  try {
    std::size_t pos = 0;
    const std::uint64_t n = std::stoull(a.trim_to, &pos);
    if (pos != a.trim_to.size()) throw std::invalid_argument("trailing characters");
    t.trim = n;
  } catch (const std::exception&) {
    throw UsageError("--trim-to expects a triple count or 'min-common', got '" + a.trim_to + "'");
  }
  return t;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.runs.empty() && a.ingest_csv.empty()) throw UsageError("give run files/directories or --ingest-csv");
  if (!a.runs.empty() && !a.ingest_csv.empty()) throw UsageError("run files and --ingest-csv cannot be mixed");
  if (a.on_duplicate != "reject" && a.on_duplicate != "last-wins")
    throw UsageError("--on-duplicate must be 'reject' or 'last-wins'");
  if (a.window == 0 || a.speed_window == 0) throw UsageError("windows must be positive");
  if (!(a.z > 0)) throw UsageError("--z must be positive");
  const TrimOptions trim = parse_trim(a);
  const fs::path out_dir = resolve_out_dir(a.out_dir, "--out-dir");

  LsMatrix matrix;
  if (!a.ingest_csv.empty()) {
    LsMatrix merged(a.csv_batch_size);
    for (const auto& f : a.ingest_csv)
      read_ls_csv(fs::path(f), a.csv_batch_size).for_each(
          [&](const std::string& d, const std::string& s, const std::string& p, std::uint64_t b, double ls) {
            merged.set(d, s, p, b, ls);
          });
    matrix = std::move(merged);
  } else {
    const auto files = expand_run_files(a.runs);
    if (files.empty()) throw ConfigError("no results files found");
    matrix = build_ls_matrix(files, a.on_duplicate == "reject" ? DuplicateRunPolicy::reject
                                                               : DuplicateRunPolicy::last_wins);
  }
  if (matrix.batch_size() == 0) throw ConfigError("results do not record a batch size");
  if (a.window % matrix.batch_size() != 0 || a.speed_window % matrix.batch_size() != 0)
    throw UsageError("--window and --speed-window must be multiples of the batch size " +
                     std::to_string(matrix.batch_size()));

  const LsMatrix trimmed = trim_and_filter(matrix, trim);
  const RlsTable table = compute_rls_table(trimmed);
  const MedianRlsSummary summary = median_rls_summary(table);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  {
    std::ostringstream s;
    write_rls_csv(s, table);
    write_text(out_dir / "rls.csv", s.str());
  }
  {
    std::map<std::string, std::vector<WindowPoint>> series;
    for (const auto& d : table.datasets)
      series[d] = aggregate_series(table.rls_series(d), table.batch_size, a.window, a.z);
    std::ostringstream s;
    write_windows_csv(s, series, "dataset");
    write_text(out_dir / "rls_windows.csv", s.str());
  }
  {
    std::map<std::string, std::vector<WindowPoint>> series;
    for (const auto& st : trimmed.stores())
      for (const auto& p : trimmed.platforms()) {
        auto pts = speed_over_time(trimmed, st, p, a.speed_window, a.z);
        if (!pts.empty()) series[st + "|" + p] = std::move(pts);
      }
    std::ostringstream s;
    write_windows_csv(s, series, "store|platform");
    write_text(out_dir / "ls_windows.csv", s.str());
  }
  {
    std::ostringstream s;
    write_median_csv(s, summary);
    write_text(out_dir / "median_rls.csv", s.str());
  }
  std::size_t min_def = table.d_def.empty() ? 0 : table.d_def.front().size();
  std::size_t max_def = 0;
  for (const auto& dd : table.d_def) {
    min_def = std::min(min_def, dd.size());
    max_def = std::max(max_def, dd.size());
  }
  json trim_json = nullptr;
  if (const auto* n = std::get_if<std::uint64_t>(&trim.trim)) trim_json = *n;
  else if (std::holds_alternative<MinCommonTrim>(trim.trim)) trim_json = "min-common";
  const json report = {
      {"batch_size", table.batch_size},
      {"batches", table.batch_count},
      {"datasets", table.datasets},
      {"excluded", trim.exclude},
      {"trim_to", trim_json},
      {"window_triples", a.window},
      {"speed_window_triples", a.speed_window},
      {"z", a.z},
      {"d_def_min", min_def},
      {"d_def_max", max_def},
      {"median_rls", to_json(summary)},
  };
  write_text(out_dir / "analysis.json", report.dump(2) + "\n");

  for (const auto& w : summary.warnings) err << "warning: " << w << '\n';
  out << "datasets: " << table.datasets.size() << ", batches: " << table.batch_count << ", |D_def| in [" << min_def
      << ", " << max_def << "]\n";
  for (const auto& m : summary.medians) out << fmt::format("  {:<32} median RLS {:.4f}\n", m.dataset, m.median);
  if (summary.ratio)
    out << fmt::format("max/min median RLS: {:.4f} ({} / {})\n", *summary.ratio, summary.fastest, summary.slowest);
  out << "outputs written to " << out_dir.string() << '\n';
  return kExitSuccess;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out_dir;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const auto files = expand_run_files(a.runs);
  if (files.empty()) throw ConfigError("no results files found");
  std::vector<RunRecord> runs;
  for (const auto& f : files) runs.push_back(read_run(f));
  const auto rows = completion_report(runs);

  std::ostringstream csv;
  write_completion_csv(csv, rows);
  out << csv.str();

  std::optional<MedianRlsSummary> summary;
  try {
    const LsMatrix m = build_ls_matrix(runs, DuplicateRunPolicy::last_wins);
    if (!m.empty()) summary = median_rls_summary(compute_rls_table(m));
  } catch (const ConfigError& e) {
    err << "warning: median RLS summary skipped: " << e.what() << '\n';
  }
  if (summary) {
    out << '\n';
    std::ostringstream med;
    write_median_csv(med, *summary);
    out << med.str();
    if (summary->ratio)
      out << fmt::format("max/min median RLS: {:.4f} ({} / {})\n", *summary->ratio, summary->fastest,
                         summary->slowest);
    for (const auto& w : summary->warnings) err << "warning: " << w << '\n';
  }

  fs::path dir;
  if (!a.out_dir.empty()) dir = a.out_dir;
  else if (auto env = default_output_dir()) dir = *env;
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_text(dir / "completion.csv", csv.str());
    if (summary) {
      std::ostringstream med;
      write_median_csv(med, *summary);
      write_text(dir / "median_rls.csv", med.str());
    }
  }
  return kExitSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RDF bulk-load benchmark harness and relative loading speed analysis", "rdfload"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  PrepareArgs prepare;
  auto* sc_prepare = app.add_subcommand("prepare", "Split an N-Triples file into fixed-size batch files");
  sc_prepare->add_option("input", prepare.input, "N-Triples input file")->required();
  sc_prepare->add_option("--out-dir", prepare.out_dir, "Directory for batch-NNNNNN.nt files");
  sc_prepare->add_option("--batch-size", prepare.batch_size, "Triples per batch")->capture_default_str();

  StatsArgs stats;
  auto* sc_stats = app.add_subcommand("stats", "Dataset statistics (counts, mean bytes per triple, degrees) as JSON");
  sc_stats->add_option("input", stats.input, "N-Triples input file")->required()->check(CLI::ExistingFile);
  sc_stats->add_option("--out", stats.out, "Write JSON here instead of stdout");
  sc_stats->add_option("--max-terms", stats.max_terms, "Spill distinct-term sets to disk beyond this many terms (0 = never)");
  sc_stats->add_option("--spill-dir", stats.spill_dir, "Directory for spill runs (default: system temp)");

  SynthArgs synth;
  auto* sc_synth = app.add_subcommand("synth", "Generate a synthetic dataset with controlled regularity");
  sc_synth->add_option("--out", synth.out, "Output N-Triples file")->required();
  sc_synth->add_option("--config", synth.config, "Profile as a JSON file or inline JSON object");
  sc_synth->add_option("--triples", synth.triples, "Number of triples");
  sc_synth->add_option("--regularity", synth.regularity, "regular | irregular")
      ->check(CLI::IsMember({"regular", "irregular"}));
  sc_synth->add_option("--subjects", synth.subjects, "Subject pool size (regular profiles)");
  sc_synth->add_option("--predicates", synth.predicates, "Number of distinct predicates");
  sc_synth->add_option("--object-cardinality", synth.object_cardinality, "Distinct objects, or 'unbounded'");
  sc_synth->add_option("--literal-fraction", synth.literal_fraction, "Probability an object is a literal");
  sc_synth->add_option("--seed", synth.seed, "RNG seed (recorded in the output report)");
  sc_synth->add_option("--stats-out", synth.stats_out, "Also write the profile + stats report here");

  BenchArgs bench;
  auto* sc_bench = app.add_subcommand("bench", "Load batch files into a store and record per-batch metrics");
  sc_bench->add_option("--store", bench.store, "reference | slow | crashing")
      ->check(CLI::IsMember({"reference", "slow", "crashing"}))
      ->capture_default_str();
  sc_bench->add_option("--store-config", bench.store_config,
                       "Store config as a JSON file or inline JSON (persistence, data_dir, flush_threshold, "
                       "merge_fanout, delay_ms, crash_after)");
  sc_bench->add_option("--batches-dir", bench.batches_dir, "Directory of batch-NNNNNN.nt files")->required();
  sc_bench->add_option("--out", bench.out, "Results file (line-delimited JSON)");
  sc_bench->add_option("--threshold-tps", bench.threshold_tps, "Abort when a batch loads slower than this")
      ->capture_default_str();
  sc_bench->add_option("--sample-hz", bench.sample_hz, "Resource sampling frequency (0 disables the sampler)")
      ->capture_default_str();
  sc_bench->add_option("--label", bench.labels, "key=value; dataset is required, store and platform recommended");
  sc_bench->add_option("--memory-limit", bench.memory_limit, "Memory budget recorded as metadata, e.g. 1GiB");
  sc_bench->add_flag("--split-parse-time", bench.split_parse_time, "Also record parse time per batch");

  AnalyzeArgs analyze;
  auto* sc_analyze = app.add_subcommand("analyze", "Compute MLS / RLS tables, windowed series and median RLS");
  sc_analyze->add_option("runs", analyze.runs, "Results files or directories of *.jsonl");
  sc_analyze->add_option("--ingest-csv", analyze.ingest_csv, "Per-batch CSV(s) from other harnesses instead of runs");
  sc_analyze->add_option("--batch-size", analyze.csv_batch_size, "Batch size of --ingest-csv data")
      ->capture_default_str();
  sc_analyze->add_option("--exclude", analyze.exclude, "Comma-separated dataset ids to drop");
  sc_analyze->add_option("--trim-to", analyze.trim_to, "Keep only the first N triples, or 'min-common'");
  sc_analyze->add_option("--window", analyze.window, "Aggregation window for RLS series, in triples")
      ->capture_default_str();
  sc_analyze->add_option("--speed-window", analyze.speed_window, "Aggregation window for LS series, in triples")
      ->capture_default_str();
  sc_analyze->add_option("--z", analyze.z, "Normal quantile for confidence intervals")->capture_default_str();
  sc_analyze->add_option("--on-duplicate", analyze.on_duplicate, "reject | last-wins")->capture_default_str();
  sc_analyze->add_option("--out-dir", analyze.out_dir, "Directory for CSV and JSON outputs");

  ReportArgs report;
  auto* sc_report = app.add_subcommand("report", "Completion table and median RLS summary");
  sc_report->add_option("runs", report.runs, "Results files or directories of *.jsonl")->required();
  sc_report->add_option("--out-dir", report.out_dir, "Also write completion.csv and median_rls.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (sc_prepare->parsed()) return cmd_prepare(prepare, out, err);
    if (sc_stats->parsed()) return cmd_stats(stats, out);
    if (sc_synth->parsed()) return cmd_synth(synth, out);
    if (sc_bench->parsed()) return cmd_bench(bench, out, err);
    if (sc_analyze->parsed()) return cmd_analyze(analyze, out, err);
    if (sc_report->parsed()) return cmd_report(report, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace rdfload
