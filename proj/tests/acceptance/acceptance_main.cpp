// Acceptance checks: one PASS / FAIL / SKIP line per criterion.
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "analysis_oracle.hpp"
#include "rdfload/analysis.hpp"
#include "rdfload/dataset.hpp"
#include "rdfload/driver.hpp"
#include "rdfload/errors.hpp"
#include "rdfload/reference_store.hpp"
#include "rdfload/test_stores.hpp"
#include "test_support.hpp"

using namespace rdfload;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::skip, std::move(d)}; }

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BenchOptions bench_options(const std::string& dataset, double hz = 0) {
  BenchOptions o;
  o.sample_hz = hz;
  o.labels = {dataset, "reference", "local", {}};
  if (hz == 0) o.probe = [] { return ResourceSample{}; };
  return o;
}

// -- 1 --------------------------------------------------------------------
Outcome rls_normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::size_t batches_checked = 0;
  double worst_norm = 0, worst_mls = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto dense = testing::random_dense(rng, 6, 4, 100);
    const auto table = compute_rls_table(testing::to_matrix(dense));
    for (std::uint64_t b = 0; b < table.batch_count; ++b) {
      double sum = 0;
      for (const auto& d : dense.datasets) {
        const auto expected = testing::oracle_mls(dense, d, b);
        const auto& cell = table.cell(d, b);
        if (cell.mls.has_value() != expected.has_value())
          return fail(fmt::format("trial {} batch {} dataset {}: definedness differs from oracle", trial, b, d));
        if (!expected) continue;
        worst_mls = std::max(worst_mls, std::abs(*cell.mls - *expected) / *expected);
        sum += *cell.rls;
      }
      if (table.d_def[b].empty()) continue;
      worst_norm = std::max(worst_norm, std::abs(sum / static_cast<double>(table.d_def[b].size()) - 1.0));
      ++batches_checked;
    }
  }
  const double secs = elapsed_since(t0);
  const std::string detail = fmt::format("50 matrices, {} batches, max |mean RLS - 1| = {:.2e}, max MLS rel err = {:.2e}, {:.2f} s",
                                         batches_checked, worst_norm, worst_mls, secs);
  if (worst_norm > 1e-9 || worst_mls > 1e-12 || secs >= 10.0) return fail(detail);
  return pass(detail);
}

// -- 2 --------------------------------------------------------------------
Outcome undefined_handling() {
  LsMatrix m(50'000);
  m.set("d", "s1", "p", 0, 100.0);
  m.add_store("s2");  // (s2, p) undefined at batch 0
  m.add_dataset("e");
  const auto partial = mls(m, "d", 0);
  const auto none = mls(m, "e", 0);
  if (!partial || *partial != 100.0) return fail("{100, undefined} did not give MLS 100");
  if (none) return fail("all-undefined gave a value");
  return pass("{100, undefined} -> 100, all undefined -> undefined");
}

// -- 3 --------------------------------------------------------------------
Outcome scale_invariance() {
  std::mt19937_64 rng(77);
  double worst = 0;
  std::size_t cells = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::to_matrix(testing::random_dense(rng));
    const auto base = compute_rls_table(m);
    for (double c : {0.5, 2.0, 1000.0}) {
      const auto scaled = compute_rls_table(m.scaled(c));
      for (const auto& d : base.datasets)
        for (std::uint64_t b = 0; b < base.batch_count; ++b) {
          const auto& x = base.cell(d, b).rls;
          const auto& y = scaled.cell(d, b).rls;
          if (x.has_value() != y.has_value()) return fail("definedness changed under scaling");
          if (!x) continue;
          worst = std::max(worst, std::abs(*x - *y) / std::abs(*x));
          ++cells;
        }
    }
  }
  const std::string detail = fmt::format("{} RLS cells, max relative change {:.2e}", cells, worst);
  return worst <= 1e-12 ? pass(detail) : fail(detail);
}

// -- 4 --------------------------------------------------------------------
Outcome batch_splitting() {
  testing::TempDir dir;
  testing::TripleGen gen(4);
  std::string canonical;
  {
    // input with non-canonical spacing and comments
    std::string raw;
    for (int k = 0; k < 123'456; ++k) {
      const Triple t = gen.triple();
      canonical += serialize_triple(t);
      if (k % 1000 == 0) raw += "# comment\n";
      std::string line = serialize_triple(t);
      if (k % 7 == 0) line.insert(line.size() - 2, "   ");
      raw += line;
    }
    testing::write_file(dir / "in.nt", raw);
  }
  const auto r = split_batches(dir / "in.nt", dir / "batches");
  if (r.batch_files.size() != 2 || r.discarded != 23'456)
    return fail(fmt::format("{} batch files, {} discarded", r.batch_files.size(), r.discarded));
  std::string joined;
  for (const auto& f : r.batch_files) {
    if (read_ntriples_file(f).size() != 50'000) return fail(f.filename().string() + " is not 50,000 triples");
    joined += testing::read_file(f);
  }
  if (canonical.compare(0, joined.size(), joined) != 0) return fail("batches differ from the canonical input prefix");
  return pass(fmt::format("2 x 50,000 triples, 23,456 discarded, {} prefix bytes identical", joined.size()));
}

// -- 5 --------------------------------------------------------------------
Outcome parser_round_trip() {
  testing::TripleGen gen(5);
  for (int k = 0; k < 1000; ++k) {
    const Triple t = gen.triple();
    const std::string line = serialize_triple(t);
    const auto back = parse_line(std::string_view(line).substr(0, line.size() - 1));
    if (!back || !(*back == t)) return fail("round-trip mismatch: " + line);
  }
  const auto& corpus = testing::malformed_corpus();
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const std::size_t line_no = 2 * k + 2;
    std::string text;
    for (std::size_t j = 0; j < k; ++j) text += "<http://ok/s> <http://ok/p> <http://ok/o> .\n# c\n";
    text += "<http://ok/s> <http://ok/p> <http://ok/o> .\n" + corpus[k].line + "\n";
    std::istringstream in(text);
    NTriplesReader reader(in);
    try {
      while (reader.next()) {
      }
      return fail(std::string("accepted malformed line (") + corpus[k].why + ")");
    } catch (const ParseError& e) {
      if (e.line() != line_no)
        return fail(fmt::format("{}: reported line {}, expected {}", corpus[k].why, e.line(), line_no));
    }
  }
  return pass(fmt::format("1000 random triples round-trip, {} malformed lines rejected at the right line",
                          corpus.size()));
}

// -- 6 --------------------------------------------------------------------
Outcome store_correctness() {
  std::mt19937_64 rng(6);
  testing::TripleGen gen(66);
  std::vector<Triple> all;
  std::set<std::string> distinct;
  while (distinct.size() < 9'000) {
    Triple t = distinct.size() % 3 == 0 ? gen.triple() : testing::small_triple(rng, 200);
    if (distinct.insert(serialize_triple(t)).second) all.push_back(std::move(t));
  }
  for (int k = 0; k < 1'000; ++k) all.push_back(all[rng() % all.size()]);  // 10% duplicates
  std::shuffle(all.begin(), all.end(), rng);

  testing::TempDir dir;
  std::size_t patterns_checked = 0;
  for (bool on_disk : {false, true}) {
    StoreConfig cfg;
    if (on_disk) {
      cfg.persistence = Persistence::disk;
      cfg.data_dir = dir / "store";
      cfg.flush_threshold = 700;
      cfg.merge_fanout = 3;
    }
    auto store = store_open(cfg);
    std::vector<std::span<const Triple>> batches;
    for (std::size_t k = 0; k < all.size(); k += 1000)
      batches.push_back(std::span<const Triple>(all).subspan(k, std::min<std::size_t>(1000, all.size() - k)));
    for (const auto& b : batches) store->load_batch(b);
    const auto count = store->snapshot_metrics().triple_count;
    if (count != distinct.size())
      return fail(fmt::format("{} store: triple_count {} != distinct {}", store->name(), count, distinct.size()));

    for (int probe = 0; probe < 30; ++probe) {
      const Triple& seed = all[rng() % all.size()];
      for (int mask = 0; mask < 8; ++mask) {
        TriplePattern p;
        if (mask & 1) p.subject = seed.subject;
        if (mask & 2) p.predicate = seed.predicate;
        if (mask & 4) p.object = seed.object;
        std::set<std::string> expected;
        for (const auto& t : all)
          if (matches(p, t)) expected.insert(serialize_triple(t));
        std::vector<std::string> got;
        store->match(p, [&](const Triple& t) { got.push_back(serialize_triple(t)); });
        if (got.size() != expected.size() || std::set<std::string>(got.begin(), got.end()) != expected)
          return fail(fmt::format("{} store: pattern shape {} disagrees with full scan", store->name(), mask));
        ++patterns_checked;
      }
    }
    for (const auto& b : batches)
      if (store->load_batch(b).inserted != 0) return fail(store->name() + ": reloading a batch inserted triples");
  }
  return pass(fmt::format("10,000 triples, {} distinct; {} pattern matches equal the full scan (memory and disk); "
                          "reloads insert 0",
                          distinct.size(), patterns_checked));
}

// -- 7 --------------------------------------------------------------------
Outcome abort_rules() {
  testing::TempDir dir;
  SynthProfile p;
  p.regularity = Regularity::irregular;
  p.n_triples = 150'000;
  generate_synthetic(p, dir / "all.nt");
  const auto files = split_batches(dir / "all.nt", dir / "b").batch_files;

  VirtualClock clock;
  const WaitFn advance = [&clock](std::chrono::nanoseconds d) { clock.advance(d); };

  SlowStore slow(15ms, advance);
  const auto r1 = run_benchmark(slow, files, bench_options("slow"), clock);
  if (r1.termination != Termination::below_speed_threshold || r1.batches.size() != 1)
    return fail(fmt::format("slow store: {} after {} batches", to_string(r1.termination), r1.batches.size()));
  const double ls = r1.batches[0].ls;
  if (std::abs(ls - 1000.0 / 15.0) > 0.1) return fail(fmt::format("slow store LS {:.3f}", ls));

  CrashingStore crashing(75'000);
  const auto r2 = run_benchmark(crashing, files, bench_options("crash"));
  if (r2.termination != Termination::crashed || r2.batches.size() != 1)
    return fail(fmt::format("crashing store: {} with {} records", to_string(r2.termination), r2.batches.size()));

  ScriptedSpeedStore scripted({5000, 100, 79.9, 1000}, advance);
  const auto r3 = run_benchmark(scripted, files, bench_options("scripted"), clock);
  if (r3.termination != Termination::below_speed_threshold || r3.batches.size() != 3 || scripted.batches_loaded() != 3)
    return fail(fmt::format("scripted store: {} after {} batches", to_string(r3.termination), r3.batches.size()));

  return pass(fmt::format("slow LS {:.2f} aborted after batch 0; crash at 75,000 left 1 record; scripted stopped at "
                          "batch 2 (LS {:.1f})",
                          ls, r3.batches.back().ls));
}

// -- 8 --------------------------------------------------------------------
Outcome regularity_effect() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::TempDir dir;
  std::vector<RunRecord> runs;
  for (auto reg : {Regularity::regular, Regularity::irregular}) {
    const std::string name = reg == Regularity::regular ? "regular" : "irregular";
    SynthProfile p;
    p.regularity = reg;
    p.n_triples = 2'000'000;
    p.n_predicates = 12;
    p.n_subjects = 2'000'000 / 12 + 1;
    p.seed = reg == Regularity::regular ? 1 : 2;
    generate_synthetic(p, dir / (name + ".nt"));
    const auto files = split_batches(dir / (name + ".nt"), dir / name).batch_files;
    StoreConfig cfg;
    cfg.persistence = Persistence::disk;
    cfg.data_dir = dir / (name + "-store");
    cfg.flush_threshold = 100'000;
    auto store = store_open(cfg);
    runs.push_back(run_benchmark(*store, files, bench_options(name, kDefaultSampleHz)));
    if (runs.back().termination != Termination::completed)
      return fail(name + " run did not complete: " + runs.back().termination_detail);
    fs::remove_all(dir / (name + "-store"));
  }
  const auto summary = median_rls_summary(compute_rls_table(build_ls_matrix(runs)));
  double reg = 0, irr = 0;
  for (const auto& m : summary.medians) (m.dataset == "regular" ? reg : irr) = m.median;
  const std::string detail =
      fmt::format("median RLS regular {:.3f} vs irregular {:.3f} (ratio {:.2f}), {:.0f} s", reg, irr, reg / irr,
                  elapsed_since(t0));
  return reg > irr ? pass(detail) : fail(detail);
}

// -- 9 --------------------------------------------------------------------
Outcome politiquices_stats() {
  const char* path = std::getenv("RDFLOAD_POLITIQUICES_NT");
  if (!path || !*path) return skip("set RDFLOAD_POLITIQUICES_NT to the flat N-Triples distribution");
  const auto st = compute_stats(fs::path(path));
  const std::string detail = fmt::format("{} triples, {} subjects, {} predicates, {} objects, bpt {:.2f}", st.triples,
                                         st.subjects, st.predicates, st.objects, st.mean_bpt);
  const bool ok = st.triples == 159'957 && st.subjects == 35'546 && st.predicates == 9 && st.objects == 54'763 &&
                  std::abs(st.mean_bpt - 142.09) <= 0.5;
  return ok ? pass(detail) : fail(detail);
}

// -- 10 -------------------------------------------------------------------
Outcome published_results() {
  const char* path = std::getenv("RDFLOAD_PUBLISHED_RESULTS");
  if (!path || !*path) return skip("set RDFLOAD_PUBLISHED_RESULTS to the per-batch CSV (or a directory of CSVs)");
  LsMatrix merged(kDefaultBatchSize);
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(path);
  }
  for (const auto& f : files)
    read_ls_csv(f, kDefaultBatchSize).for_each([&](const auto& d, const auto& s, const auto& p, auto b, double ls) {
      merged.set(d, s, p, b, ls);
    });
  TrimOptions opt;
  opt.exclude = {"politiquices", "digital-agenda-indicators"};
  opt.trim = std::uint64_t{21'800'000};
  const auto summary = median_rls_summary(compute_rls_table(trim_and_filter(merged, opt)));
  if (!summary.ratio) return fail("no median RLS values");
  const std::string detail =
      fmt::format("ratio {:.3f}, fastest {}, slowest {}", *summary.ratio, summary.fastest, summary.slowest);
  const bool ok = std::abs(*summary.ratio - 9.01) <= 0.05 && summary.fastest == "assist-iot-weather" &&
                  summary.slowest == "dbpedia-live";
  return ok ? pass(detail) : fail(detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"rls-normalization", rls_normalization},
      {"mls-undefined-handling", undefined_handling},
      {"rls-scale-invariance", scale_invariance},
      {"batch-splitting", batch_splitting},
      {"parser-round-trip", parser_round_trip},
      {"store-correctness", store_correctness},
      {"abort-rules", abort_rules},
      {"regularity-effect", regularity_effect},
      {"dataset-stats-politiquices", politiquices_stats},
      {"published-results-ratio", published_results},
  };
  // optional: run a subset, e.g. `acceptance 1 4 7`
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    if (o.status == Status::fail) ++failures;
    std::cout << tag << "  " << id << "  " << criteria[k].first << "  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
