#include <fstream>

#include "rdfload/driver.hpp"
#include "rdfload/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rdfload {

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json platform_json(const PlatformDescriptor& p) {
  return {{"device", p.device},
          {"cpu", p.cpu},
          {"total_ram_bytes", optional_json(p.total_ram_bytes)},
          {"os", p.os},
          {"kernel", p.kernel},
          {"memory_limit_bytes", optional_json(p.memory_limit_bytes)}};
}

PlatformDescriptor platform_from_json(const json& j) {
  PlatformDescriptor p;
  p.device = j.value("device", std::string());
  p.cpu = j.value("cpu", std::string());
  p.total_ram_bytes = optional_from<std::uint64_t>(j, "total_ram_bytes");
  p.os = j.value("os", std::string());
  p.kernel = j.value("kernel", std::string());
  p.memory_limit_bytes = optional_from<std::uint64_t>(j, "memory_limit_bytes");
  return p;
}

}  // namespace

json header_json(const RunRecord& run) {
  return {{"type", "header"},
          {"tool_version", run.tool_version},
          {"dataset_id", run.labels.dataset_id},
          {"store_id", run.labels.store_id},
          {"platform_id", run.labels.platform_id},
          {"labels", run.labels.extra},
          {"platform", platform_json(run.platform)},
          {"threshold_tps", run.threshold_tps},
          {"sample_hz", run.sample_hz},
          {"batch_size", run.batch_size},
          {"total_batches", run.total_batches},
          {"started_at", run.started_at}};
}

json to_json(const BatchRecord& r) {
  json j = {{"type", "batch"},
            {"batch_index", r.batch_index},
            {"triples", r.triples},
            {"load_seconds", r.load_seconds},
            {"ls", r.ls},
            {"peak_rss_bytes", optional_json(r.peak_rss_bytes)},
            {"cpu_seconds", optional_json(r.cpu_seconds)},
            {"disk_bytes", optional_json(r.disk_bytes)}};
  if (r.parse_seconds) j["parse_seconds"] = *r.parse_seconds;
  return j;
}

BatchRecord batch_record_from_json(const json& j) {
  BatchRecord r;
  r.batch_index = j.at("batch_index").get<std::uint64_t>();
  r.triples = j.at("triples").get<std::uint64_t>();
  r.load_seconds = j.at("load_seconds").get<double>();
  r.ls = j.at("ls").get<double>();
  r.peak_rss_bytes = optional_from<std::uint64_t>(j, "peak_rss_bytes");
  r.cpu_seconds = optional_from<double>(j, "cpu_seconds");
  r.disk_bytes = optional_from<std::uint64_t>(j, "disk_bytes");
  r.parse_seconds = optional_from<double>(j, "parse_seconds");
  return r;
}

RunWriter::RunWriter(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot write results file " + path.string());
}

void RunWriter::write_line(const json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed for " + path_.string());
}

void RunWriter::header(const RunRecord& run) { write_line(header_json(run)); }

void RunWriter::batch(const BatchRecord& record) { write_line(to_json(record)); }

void RunWriter::termination(const RunRecord& run) {
  write_line({{"type", "termination"},
              {"termination", to_string(run.termination)},
              {"detail", run.termination_detail},
              {"warnings", run.warnings}});
}

void emit_run(const RunRecord& run, const fs::path& path) {
  RunWriter w(path);
  w.header(run);
  for (const auto& b : run.batches) w.batch(b);
  w.termination(run);
}

RunRecord read_run(std::istream& in, const std::string& source) {
  RunRecord run;
  bool have_header = false;
  bool have_termination = false;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        run.tool_version = j.value("tool_version", std::string());
        run.labels.dataset_id = j.at("dataset_id").get<std::string>();
        run.labels.store_id = j.at("store_id").get<std::string>();
        run.labels.platform_id = j.at("platform_id").get<std::string>();
        run.labels.extra = j.value("labels", std::map<std::string, std::string>{});
        run.platform = platform_from_json(j.value("platform", json::object()));
        run.threshold_tps = j.at("threshold_tps").get<double>();
        run.sample_hz = j.value("sample_hz", kDefaultSampleHz);
        run.batch_size = j.at("batch_size").get<std::uint64_t>();
        run.total_batches = j.at("total_batches").get<std::uint64_t>();
        run.started_at = j.value("started_at", std::string());
        have_header = true;
      } else if (type == "batch") {
        if (!have_header) throw IoError(source + ": batch record before header");
        run.batches.push_back(batch_record_from_json(j));
      } else if (type == "termination") {
        run.termination = termination_from_string(j.at("termination").get<std::string>());
        run.termination_detail = j.value("detail", std::string());
        run.warnings = j.value("warnings", std::vector<std::string>{});
        have_termination = true;
      } else {
        throw IoError(source + ": unknown record type '" + type + "' on line " + std::to_string(line_no));
      }
    }
  } catch (const json::exception& e) {
    throw IoError(source + ": malformed results line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(source + ": " + e.what());
  }
  if (!have_header) throw IoError(source + ": results file has no header");
  if (!have_termination) {
    run.termination = Termination::crashed;
    run.termination_detail = "results file ends without a termination record";
  }
  for (std::size_t k = 0; k < run.batches.size(); ++k)
    if (run.batches[k].batch_index != k) throw IoError(source + ": batch indices are not contiguous from 0");
  return run;
}

RunRecord read_run(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open results file " + path.string());
  return read_run(in, path.string());
}

}  // namespace rdfload
