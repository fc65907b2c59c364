#include <fstream>
#include <random>

#include "rdfload/dataset.hpp"
#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

namespace {

constexpr std::string_view kBase = "http://example.org/synth/";
constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";

// mt19937_64 output is fixed by the standard; the distributions are not, so
// draws are derived from raw engine output to keep files portable.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  bool chance(double p) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 engine_;
};

Term object_term(Draw& draw, const SynthProfile& p, std::uint64_t ordinal) {
  if (p.object_cardinality) {
    // kind is a function of the id so the pool holds at most object_cardinality terms
    const std::uint64_t id = draw.below(*p.object_cardinality);
    const double u = static_cast<double>((id * 0x9E3779B97F4A7C15ull) >> 11) * 0x1.0p-53;
    if (u < p.literal_fraction) return Term::literal(std::to_string(id), std::string(kXsdInteger));
    return Term::iri(std::string(kBase) + "node/" + std::to_string(id));
  }
  const bool literal = draw.chance(p.literal_fraction);
  const std::uint64_t id = ordinal;
  if (literal) return Term::literal(std::to_string(id), std::string(kXsdInteger));
  return Term::iri(std::string(kBase) + "node/" + std::to_string(id));
}

}  // namespace

void validate(const SynthProfile& p) {
  if (p.n_triples == 0) throw ConfigError("synthetic profile needs n_triples >= 1");
  if (p.n_predicates == 0) throw ConfigError("synthetic profile needs n_predicates >= 1");
  if (!(p.literal_fraction >= 0.0 && p.literal_fraction <= 1.0))
    throw ConfigError("literal_fraction must lie in [0, 1]");
  if (p.object_cardinality && *p.object_cardinality == 0)
    throw ConfigError("object_cardinality must be >= 1 or unbounded");
  if (p.regularity == Regularity::regular) {
    if (p.n_subjects == 0) throw ConfigError("regular profile needs n_subjects >= 1");
    if (p.n_predicates > p.n_triples)
      throw ConfigError("regular profile cannot emit every predicate with fewer triples than predicates");
    // overflow-safe form of n_subjects * n_predicates >= n_triples
    if (p.n_subjects < (p.n_triples + p.n_predicates - 1) / p.n_predicates)
      throw ConfigError("infeasible regular profile: n_subjects * n_predicates < n_triples (" +
                        std::to_string(p.n_subjects) + " x " + std::to_string(p.n_predicates) + " < " +
                        std::to_string(p.n_triples) + ")");
  }
}

nlohmann::json to_json(const SynthProfile& p) {
  nlohmann::json j = {
      {"n_triples", p.n_triples},
      {"regularity", p.regularity == Regularity::regular ? "regular" : "irregular"},
      {"n_subjects", p.n_subjects},
      {"n_predicates", p.n_predicates},
      {"literal_fraction", p.literal_fraction},
      {"seed", p.seed},
  };
  if (p.object_cardinality) j["object_cardinality"] = *p.object_cardinality;
  else j["object_cardinality"] = "unbounded";
  return j;
}

SynthProfile profile_from_json(const nlohmann::json& j) {
  SynthProfile p;
  p.n_triples = j.value("n_triples", p.n_triples);
  const std::string reg = j.value("regularity", std::string("regular"));
  if (reg == "regular") p.regularity = Regularity::regular;
  else if (reg == "irregular") p.regularity = Regularity::irregular;
  else throw ConfigError("unknown regularity '" + reg + "'");
  p.n_subjects = j.value("n_subjects", p.n_subjects);
  p.n_predicates = j.value("n_predicates", p.n_predicates);
  if (j.contains("object_cardinality")) {
    const auto& oc = j["object_cardinality"];
    if (oc.is_string()) {
      if (oc.get<std::string>() != "unbounded") throw ConfigError("object_cardinality must be a count or \"unbounded\"");
      p.object_cardinality.reset();
    } else {
      p.object_cardinality = oc.get<std::uint64_t>();
    }
  }
  p.literal_fraction = j.value("literal_fraction", p.literal_fraction);
  p.seed = j.value("seed", p.seed);
  return p;
}

DatasetStats generate_synthetic(const SynthProfile& p, const fs::path& output) {
  validate(p);
  if (output.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(output.parent_path(), ec);
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + output.string());

  Draw draw(p.seed);
  std::vector<Term> predicates;
  predicates.reserve(p.n_predicates);
  for (std::uint64_t k = 0; k < p.n_predicates; ++k)
    predicates.push_back(Term::iri(std::string(kBase) + "property/" + std::to_string(k)));

  std::string buffer;
  Triple t;
  for (std::uint64_t n = 0; n < p.n_triples; ++n) {
    if (p.regularity == Regularity::regular) {
      t.subject = Term::iri(std::string(kBase) + "station/" + std::to_string(n / p.n_predicates));
      t.predicate = predicates[n % p.n_predicates];
    } else {
      t.subject = Term::iri(std::string(kBase) + "entity/" + std::to_string(n));
      t.predicate = predicates[draw.below(p.n_predicates)];
    }
    t.object = object_term(draw, p, n);
    append_triple(buffer, t);
    if (buffer.size() > (1u << 20)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.close();
  if (!out) throw IoError("write failed for " + output.string());
  return compute_stats(output);
}

}  // namespace rdfload
