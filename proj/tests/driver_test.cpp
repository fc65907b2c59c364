#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include "rdfload/dataset.hpp"
#include "rdfload/driver.hpp"
#include "rdfload/errors.hpp"
#include "rdfload/test_stores.hpp"
#include "test_support.hpp"

using namespace rdfload;
using namespace std::chrono_literals;
using rdfload::testing::TempDir;

namespace {

// n batches of `size` distinct triples each.
std::vector<std::filesystem::path> make_batches(const TempDir& dir, std::size_t n, std::size_t size) {
  SynthProfile p;
  p.regularity = Regularity::irregular;
  p.n_triples = n * size;
  generate_synthetic(p, dir / "all.nt");
  return split_batches(dir / "all.nt", dir / "batches", size).batch_files;
}

BenchOptions quiet_options() {
  BenchOptions o;
  o.sample_hz = 0;
  o.labels = {"ds", "store", "host", {}};
  o.probe = [] { return ResourceSample{}; };
  return o;
}

WaitFn advance(VirtualClock& clock) {
  return [&clock](std::chrono::nanoseconds d) { clock.advance(d); };
}

}  // namespace

TEST_CASE("scripted speeds are measured exactly and the run stops at the first slow batch") {
  TempDir dir;
  const auto files = make_batches(dir, 5, 100);
  VirtualClock clock;
  ScriptedSpeedStore store({1000, 200, 79, 500}, advance(clock));
  const auto run = run_benchmark(store, files, quiet_options(), clock);
  REQUIRE(run.batches.size() == 3);
  CHECK(run.batches[0].ls == doctest::Approx(1000));
  CHECK(run.batches[1].ls == doctest::Approx(200));
  CHECK(run.batches[2].ls == doctest::Approx(79));
  CHECK(run.batches[0].load_seconds == doctest::Approx(0.1));
  CHECK(run.termination == Termination::below_speed_threshold);
  CHECK(store.batches_loaded() == 3);
  CHECK(run.total_batches == 5);
  CHECK(run.batch_size == 100);
  CHECK(run.loaded_triples() == 300);
}

TEST_CASE("a batch exactly at the threshold does not abort") {
  TempDir dir;
  const auto files = make_batches(dir, 3, 40);
  VirtualClock clock;
  ScriptedSpeedStore store({80}, advance(clock));
  const auto run = run_benchmark(store, files, quiet_options(), clock);
  CHECK(run.batches.size() == 3);
  CHECK(run.termination == Termination::completed);
}

TEST_CASE("a store at 15 ms per triple is aborted after its first batch") {
  TempDir dir;
  const auto files = make_batches(dir, 3, 50);
  VirtualClock clock;
  SlowStore store(15ms, advance(clock));
  const auto run = run_benchmark(store, files, quiet_options(), clock);
  REQUIRE(run.batches.size() == 1);
  CHECK(run.batches[0].ls == doctest::Approx(1000.0 / 15.0));
  CHECK(run.termination == Termination::below_speed_threshold);
  CHECK_FALSE(run.termination_detail.empty());
}

TEST_CASE("probe time is excluded from the timed window") {
  TempDir dir;
  const auto files = make_batches(dir, 2, 50);
  VirtualClock clock;
  ScriptedSpeedStore store({500}, advance(clock));
  auto options = quiet_options();
  options.probe = [&clock] {
    clock.advance(10s);
    return ResourceSample{};
  };
  const auto run = run_benchmark(store, files, options, clock);
  REQUIRE(run.batches.size() == 2);
  for (const auto& b : run.batches) CHECK(b.load_seconds == doctest::Approx(0.1));
}

TEST_CASE("split parse time is recorded without changing load time") {
  TempDir dir;
  const auto files = make_batches(dir, 2, 50);
  VirtualClock clock;
  ScriptedSpeedStore store({500}, advance(clock));
  auto options = quiet_options();
  options.split_parse_time = true;
  const auto run = run_benchmark(store, files, options, clock);
  REQUIRE(run.batches.size() == 2);
  CHECK(run.batches[0].parse_seconds);
  CHECK(run.batches[0].load_seconds == doctest::Approx(0.1));
}

TEST_CASE("a fatal store error ends the run as crashed with completed batches kept") {
  TempDir dir;
  const auto files = make_batches(dir, 4, 100);
  CrashingStore store(150);
  const auto run = run_benchmark(store, files, quiet_options());
  CHECK(run.batches.size() == 1);
  CHECK(run.termination == Termination::crashed);
  CHECK(run.termination_detail.find("simulated crash") != std::string::npos);
}

TEST_CASE("results file round-trips and is written incrementally") {
  TempDir dir;
  const auto files = make_batches(dir, 3, 30);
  auto store = store_open(StoreConfig{});
  auto options = quiet_options();
  options.labels.extra = {{"memory", "8GiB"}};
  options.platform = detect_platform("test-host", 8ull << 30);
  options.output = dir / "run.jsonl";
  const auto run = run_benchmark(*store, files, options);
  CHECK(run.termination == Termination::completed);
  const auto back = read_run(dir / "run.jsonl");
  CHECK(back == run);
  CHECK(back.memory_limit_bytes() == 8ull << 30);

  emit_run(run, dir / "again.jsonl");
  CHECK(read_run(dir / "again.jsonl") == run);
}

TEST_CASE("a results file cut off before termination reads as crashed") {
  TempDir dir;
  RunRecord run;
  run.labels = {"ds", "st", "pl", {}};
  run.batch_size = 10;
  run.total_batches = 4;
  BatchRecord b;
  b.triples = 10;
  b.load_seconds = 0.5;
  b.ls = 20;
  run.batches.push_back(b);
  {
    RunWriter w(dir / "partial.jsonl");
    w.header(run);
    w.batch(b);
  }
  const auto back = read_run(dir / "partial.jsonl");
  CHECK(back.termination == Termination::crashed);
  CHECK(back.batches.size() == 1);

  {
    RunWriter w(dir / "empty.jsonl");
    w.header(run);
  }
  const auto empty = read_run(dir / "empty.jsonl");
  CHECK(empty.termination == Termination::crashed);
  CHECK(empty.batches.empty());
}

TEST_CASE("malformed results files are rejected") {
  std::istringstream no_header(R"({"type":"termination","termination":"completed"})");
  CHECK_THROWS_AS(read_run(no_header), IoError);
  std::istringstream garbage("{not json");
  CHECK_THROWS_AS(read_run(garbage), IoError);
  std::istringstream bad_term(
      R"({"type":"header","dataset_id":"d","store_id":"s","platform_id":"p","threshold_tps":80,"batch_size":1,"total_batches":1})"
      "\n"
      R"({"type":"termination","termination":"exploded"})");
  CHECK_THROWS_AS(read_run(bad_term), IoError);
}

TEST_CASE("missing batch files are reported before anything is loaded") {
  TempDir dir;
  auto files = make_batches(dir, 2, 20);
  files.push_back(dir / "batches" / "batch-000099.nt");
  ScriptedSpeedStore store({1e6}, [](std::chrono::nanoseconds) {});
  CHECK_THROWS_AS(run_benchmark(store, files, quiet_options()), ConfigError);
  CHECK(store.batches_loaded() == 0);
  CHECK_THROWS_AS(run_benchmark(store, {}, quiet_options()), ConfigError);
}

TEST_CASE("termination names") {
  for (auto t : {Termination::completed, Termination::crashed, Termination::below_speed_threshold})
    CHECK(termination_from_string(to_string(t)) == t);
  CHECK(to_string(Termination::below_speed_threshold) == "below-speed-threshold");
  CHECK_THROWS(termination_from_string("other"));
}

TEST_CASE("sampler hands every sample out exactly once") {
  std::atomic<std::uint64_t> seq{0};
  ResourceSampler sampler(2000, [&] {
    ResourceSample s;
    s.rss_bytes = seq++;
    return s;
  });
  sampler.start();
  std::vector<std::uint64_t> seen;
  for (int k = 0; k < 20; ++k) {
    std::this_thread::sleep_for(1ms);
    for (const auto& s : sampler.drain()) seen.push_back(*s.rss_bytes);
  }
  sampler.stop();
  for (const auto& s : sampler.drain()) seen.push_back(*s.rss_bytes);
  CHECK(seen.size() == seq.load());
  for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == k);
  CHECK(seen.size() > 0);
}

TEST_CASE("a disabled sampler produces nothing") {
  int calls = 0;
  ResourceSampler sampler(0, [&] {
    ++calls;
    return ResourceSample{};
  });
  sampler.start();
  std::this_thread::sleep_for(5ms);
  sampler.stop();
  CHECK(sampler.drain().empty());
  CHECK(calls == 0);
}

TEST_CASE("peak RSS and byte sizes") {
  CHECK_FALSE(peak_rss({}));
  CHECK(peak_rss({ResourceSample{5, {}}, ResourceSample{}, ResourceSample{9, {}}}) == 9u);
  CHECK(parse_byte_size("1024") == 1024);
  CHECK(parse_byte_size("2K") == 2048);
  CHECK(parse_byte_size("512M") == 512ull << 20);
  CHECK(parse_byte_size("2GiB") == 2ull << 30);
  CHECK_THROWS_AS(parse_byte_size("lots"), ConfigError);
  CHECK_THROWS_AS(parse_byte_size(""), ConfigError);
}

TEST_CASE("the same batches load into the same store contents") {
  TempDir dir;
  const auto files = make_batches(dir, 3, 40);
  auto a = store_open(StoreConfig{});
  auto b = store_open(StoreConfig{});
  const auto ra = run_benchmark(*a, files, quiet_options());
  const auto rb = run_benchmark(*b, files, quiet_options());
  CHECK(ra.batches.size() == rb.batches.size());
  for (std::size_t k = 0; k < ra.batches.size(); ++k) CHECK(ra.batches[k].batch_index == k);
  const auto ma = a->match_all({});
  const auto mb = b->match_all({});
  CHECK(ma == mb);
  CHECK(ma.size() == 120);
}
