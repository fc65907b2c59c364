#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "rdfload/dataset.hpp"
#include "rdfload/errors.hpp"
#include "test_support.hpp"

using namespace rdfload;
using rdfload::testing::TempDir;

namespace {

std::string numbered_lines(std::uint64_t n) {
  std::string s;
  for (std::uint64_t k = 0; k < n; ++k)
    s += "<http://ex/s" + std::to_string(k) + "> <http://ex/p> \"" + std::to_string(k) + "\" .\n";
  return s;
}

}  // namespace

TEST_CASE("batch file names are zero-padded and ordered") {
  CHECK(batch_file_name(0) == "batch-000000.nt");
  CHECK(batch_file_name(42) == "batch-000042.nt");
  CHECK(batch_file_name(9) < batch_file_name(10));
}

TEST_CASE("splitting drops the short remainder") {
  TempDir dir;
  testing::write_file(dir / "in.nt", numbered_lines(123'456));
  const auto r = split_batches(dir / "in.nt", dir / "batches");
  CHECK(r.batch_files.size() == 2);
  CHECK(r.total_triples == 123'456);
  CHECK(r.discarded == 23'456);
  CHECK(r.warnings.empty());
  const auto listed = list_batch_files(dir / "batches");
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].filename() == "batch-000000.nt");
  CHECK(listed[1].filename() == "batch-000001.nt");
  CHECK(read_ntriples_file(listed[0]).size() == 50'000);
  const auto b1 = read_batch_file(listed[1], 1);
  CHECK(b1.index == 1);
  CHECK(b1.size() == 50'000);
  CHECK(b1.triples.front().subject == Term::iri("http://ex/s50000"));
}

TEST_CASE("exact multiple leaves nothing discarded") {
  TempDir dir;
  testing::write_file(dir / "in.nt", numbered_lines(100'000));
  const auto r = split_batches(dir / "in.nt", dir / "b");
  CHECK(r.batch_files.size() == 2);
  CHECK(r.discarded == 0);
}

TEST_CASE("input shorter than one batch yields no batches and a warning") {
  TempDir dir;
  testing::write_file(dir / "in.nt", numbered_lines(49'999));
  const auto r = split_batches(dir / "in.nt", dir / "b");
  CHECK(r.batch_files.empty());
  CHECK(r.discarded == 49'999);
  CHECK(r.warnings.size() == 1);
  CHECK(list_batch_files(dir / "b").empty());
}

TEST_CASE("a parse error leaves no batch files behind") {
  TempDir dir;
  testing::write_file(dir / "in.nt", numbered_lines(25) + "<http://bad> <http://p> .\n" + numbered_lines(5));
  CHECK_THROWS_AS(split_batches(dir / "in.nt", dir / "b", 10), ParseError);
  std::size_t files = 0;
  if (std::filesystem::exists(dir / "b"))
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "b")) ++files;
  CHECK(files == 0);
}

TEST_CASE("batch files are canonical and concatenate back to the input prefix") {
  TempDir dir;
  testing::TripleGen gen(11);
  std::vector<Triple> all;
  std::string text;
  for (int k = 0; k < 95; ++k) {
    all.push_back(gen.triple());
    text += serialize_triple(all.back());
  }
  testing::write_file(dir / "in.nt", text);
  const auto r = split_batches(dir / "in.nt", dir / "b", 20);
  REQUIRE(r.batch_files.size() == 4);
  CHECK(r.discarded == 15);
  std::vector<Triple> back;
  for (const auto& f : r.batch_files) {
    auto v = read_ntriples_file(f);
    back.insert(back.end(), v.begin(), v.end());
  }
  CHECK(std::equal(back.begin(), back.end(), all.begin()));
}

TEST_CASE("missing batch directory is a configuration error") {
  CHECK_THROWS_AS(list_batch_files("/nonexistent/rdfload/batches"), ConfigError);
}

TEST_CASE("stats: two subjects sharing a predicate") {
  std::istringstream in(
      "<http://s1> <http://p> <http://o1> .\n"
      "<http://s1> <http://p> <http://o2> .\n"
      "<http://s2> <http://p> <http://o1> .\n");
  const auto st = compute_stats(in);
  CHECK(st.triples == 3);
  CHECK(st.subjects == 2);
  CHECK(st.predicates == 1);
  CHECK(st.objects == 2);
  CHECK(st.subject_degree_histogram == std::map<std::uint64_t, std::uint64_t>{{1, 1}, {2, 1}});
  CHECK(st.predicate_frequency.at("http://p") == 3);
}

TEST_CASE("stats: single triple of three IRIs") {
  std::istringstream in("<http://ex/s> <http://ex/p> <http://ex/o> .\n");
  const auto st = compute_stats(in);
  CHECK(st.triples == 1);
  CHECK(st.mean_bpt == doctest::Approx(44.0));
}

TEST_CASE("stats: duplicate statements count with multiplicity") {
  std::istringstream in("<http://s> <http://p> <http://o> .\n<http://s> <http://p> <http://o> .\n");
  const auto st = compute_stats(in);
  CHECK(st.triples == 2);
  CHECK(st.subjects == 1);
  CHECK(st.subject_degree_histogram.at(2) == 1);
}

TEST_CASE("stats: literal and IRI objects with the same text are distinct") {
  std::istringstream in(
      "<http://s> <http://p> <http://x> .\n"
      "<http://s> <http://p> \"http://x\" .\n"
      "<http://s> <http://p> \"http://x\"@en .\n");
  CHECK(compute_stats(in).objects == 3);
}

TEST_CASE("stats are invariant under permutation of statements") {
  std::mt19937_64 rng(3);
  std::vector<std::string> lines;
  for (int k = 0; k < 500; ++k) lines.push_back(serialize_triple(testing::small_triple(rng, 40)));
  auto joined = [&] {
    std::string s;
    for (const auto& l : lines) s += l;
    return s;
  };
  std::istringstream a(joined());
  const auto first = compute_stats(a);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::istringstream b(joined());
    CHECK(compute_stats(b) == first);
  }
}

TEST_CASE("spilling stats match the in-memory computation") {
  TempDir dir;
  testing::TripleGen gen(5);
  std::mt19937_64 rng(9);
  std::string text;
  for (int k = 0; k < 3000; ++k) text += serialize_triple(k % 2 ? gen.triple() : testing::small_triple(rng, 60));
  std::istringstream a(text);
  const auto mem = compute_stats(a);
  for (std::size_t limit : {1u, 7u, 100u, 5000u}) {
    CAPTURE(limit);
    std::istringstream b(text);
    CHECK(compute_stats(b, StatsOptions{limit, dir.path()}) == mem);
  }
}

TEST_CASE("stats JSON round-trips") {
  std::istringstream in("<http://s1> <http://p> <http://o1> .\n<http://s2> <http://q> \"v\" .\n");
  const auto st = compute_stats(in);
  CHECK(stats_from_json(to_json(st)) == st);
}

TEST_CASE("synthetic generation is byte-identical for a fixed seed") {
  TempDir dir;
  for (auto reg : {Regularity::regular, Regularity::irregular}) {
    SynthProfile p;
    p.regularity = reg;
    p.seed = 1234;
    generate_synthetic(p, dir / "a.nt");
    generate_synthetic(p, dir / "b.nt");
    CHECK(testing::read_file(dir / "a.nt") == testing::read_file(dir / "b.nt"));
    p.seed = 1235;
    generate_synthetic(p, dir / "c.nt");
    CHECK(testing::read_file(dir / "a.nt") != testing::read_file(dir / "c.nt"));
  }
}

TEST_CASE("regular profile: fixed predicate set per subject") {
  TempDir dir;
  SynthProfile p;  // 1000 triples, 100 subjects, 12 predicates
  const auto st = generate_synthetic(p, dir / "r.nt");
  CHECK(st.triples == 1000);
  CHECK(st.predicates == 12);
  CHECK(st.subjects == 84);  // ceil(1000 / 12)
  CHECK(st.subject_degree_histogram.at(12) == 83);
  CHECK(st.subject_degree_histogram.at(4) == 1);
  const auto triples = read_ntriples_file(dir / "r.nt");
  for (std::size_t k = 0; k + 12 <= triples.size(); k += 12) {
    for (std::size_t j = 1; j < 12; ++j) {
      CHECK(triples[k + j].subject == triples[k].subject);
      CHECK(triples[k + j].predicate == triples[j].predicate);
    }
  }
}

TEST_CASE("irregular profile: subjects and objects nearly all distinct") {
  TempDir dir;
  SynthProfile p;
  p.regularity = Regularity::irregular;
  const auto st = generate_synthetic(p, dir / "i.nt");
  CHECK(st.triples == 1000);
  CHECK(st.subjects >= 900);
  CHECK(st.objects >= 900);
  CHECK(st.predicates <= 12);
}

TEST_CASE("bounded object cardinality is respected") {
  TempDir dir;
  SynthProfile p;
  p.object_cardinality = 10;
  CHECK(generate_synthetic(p, dir / "o.nt").objects <= 10);
}

TEST_CASE("infeasible profiles are rejected before writing") {
  TempDir dir;
  SynthProfile p;
  p.n_subjects = 10;
  p.n_predicates = 12;
  p.n_triples = 1000;
  CHECK_THROWS_AS(generate_synthetic(p, dir / "x.nt"), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir / "x.nt"));
  SynthProfile q;
  q.literal_fraction = 1.5;
  CHECK_THROWS_AS(validate(q), ConfigError);
  SynthProfile z;
  z.n_triples = 0;
  CHECK_THROWS_AS(validate(z), ConfigError);
}

TEST_CASE("profile JSON round-trips") {
  SynthProfile p;
  p.regularity = Regularity::irregular;
  p.object_cardinality = 77;
  p.seed = 99;
  const auto q = profile_from_json(to_json(p));
  CHECK(q.regularity == p.regularity);
  CHECK(q.object_cardinality == p.object_cardinality);
  CHECK(q.seed == 99);
  CHECK_FALSE(profile_from_json(to_json(SynthProfile{})).object_cardinality);
  CHECK_THROWS_AS(profile_from_json(nlohmann::json{{"regularity", "odd"}}), ConfigError);
}
