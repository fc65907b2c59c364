#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rdfload/analysis.hpp"
#include "rdfload/errors.hpp"

namespace fs = std::filesystem;

namespace rdfload {

namespace {

std::string num(double v) { return fmt::format("{}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  for (auto& f : out) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return out;
}

}  // namespace

void write_rls_csv(std::ostream& out, const RlsTable& table) {
  out << "dataset,batch,triples_end,mls,rls,d_def_size\n";
  for (const auto& d : table.datasets) {
    const auto& row = table.cells.at(d);
    for (std::uint64_t b = 0; b < row.size(); ++b) {
      if (!row[b].mls) continue;
      out << d << ',' << b << ',' << (b + 1) * table.batch_size << ',' << num(row[b].mls) << ',' << num(row[b].rls)
          << ',' << table.d_def[b].size() << '\n';
    }
  }
}

void write_windows_csv(std::ostream& out, const std::map<std::string, std::vector<WindowPoint>>& series,
                       const std::string& key_column) {
  out << key_column << ",window_center_triples,mean,ci_low,ci_high,n,coverage,low_coverage\n";
  for (const auto& [key, points] : series) {
    for (const auto& p : points) {
      out << key << ',' << num(p.window_center) << ',' << num(p.mean) << ',' << num(p.ci_low) << ','
          << num(p.ci_high) << ',' << p.n << ',' << num(p.coverage) << ',' << (p.coverage < 0.5 ? "true" : "false")
          << '\n';
    }
  }
}

void write_median_csv(std::ostream& out, const MedianRlsSummary& summary) {
  out << "dataset,median_rls,n\n";
  for (const auto& m : summary.medians) out << m.dataset << ',' << num(m.median) << ',' << m.n << '\n';
}

void write_completion_csv(std::ostream& out, const std::vector<CompletionRow>& rows) {
  out << "dataset,store,platform,dataset_triples,loaded_triples,fully_loaded,termination\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.store << ',' << r.platform << ',' << r.dataset_triples << ',' << r.loaded_triples
        << ',' << (r.fully_loaded ? "true" : "false") << ',' << to_string(r.termination) << '\n';
  }
}

nlohmann::json to_json(const MedianRlsSummary& summary) {
  nlohmann::json medians = nlohmann::json::array();
  for (const auto& m : summary.medians) medians.push_back({{"dataset", m.dataset}, {"median_rls", m.median}, {"n", m.n}});
  nlohmann::json j = {{"medians", medians}, {"warnings", summary.warnings}};
  if (summary.ratio) {
    j["max_min_ratio"] = *summary.ratio;
    j["fastest"] = summary.fastest;
    j["slowest"] = summary.slowest;
  } else {
    j["max_min_ratio"] = nullptr;
  }
  return j;
}

LsMatrix read_ls_csv(std::istream& in, std::uint64_t batch_size) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("per-batch CSV is empty");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* required : {"dataset", "store", "platform", "batch"})
    if (!col.contains(required)) throw IoError(std::string("per-batch CSV lacks column '") + required + "'");
  const bool has_ls = col.contains("ls");
  if (!has_ls && !(col.contains("load_seconds") && col.contains("triples")))
    throw IoError("per-batch CSV needs an 'ls' column or 'load_seconds' and 'triples'");
  const bool has_limit = col.contains("memory_limit");

  LsMatrix m(batch_size);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw IoError("per-batch CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                    " fields, expected " + std::to_string(header.size()));
    try {
      std::string platform = f[col["platform"]];
      if (has_limit && !f[col["memory_limit"]].empty()) platform += "@" + f[col["memory_limit"]];
      const std::uint64_t batch = std::stoull(f[col["batch"]]);
      double ls = 0;
      if (has_ls) ls = std::stod(f[col["ls"]]);
      else ls = std::stod(f[col["triples"]]) / std::stod(f[col["load_seconds"]]);
      m.set(f[col["dataset"]], f[col["store"]], platform, batch, ls);
    } catch (const std::logic_error& e) {
      throw IoError("per-batch CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

LsMatrix read_ls_csv(const fs::path& path, std::uint64_t batch_size) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_ls_csv(in, batch_size);
}

}  // namespace rdfload
