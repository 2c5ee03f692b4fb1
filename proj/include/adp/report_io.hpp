#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/errors.hpp"
#include "adp/eval.hpp"

namespace adp {

// %.17g round-trips every double exactly.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

inline nlohmann::json noise_json(const std::optional<NoiseSpec>& noise) {
  if (!noise) return nullptr;
  return {{"target", noise->target == NoiseTarget::kObservation ? "observation" : "action"},
          {"sigma", noise->sigma},
          {"components", noise->components}};
}

// One CSV row per member (or grid cell) of every report, plus a JSON summary.
// Noise sweeps get a leading sigma column.
inline void write_report(const std::vector<EvalReport>& reports, const std::filesystem::path& csv_path,
                         const std::filesystem::path& json_path) {
  if (reports.empty()) throw InputError("write_report: nothing to write");
  const bool with_sigma = reports.front().meta.noise.has_value();
  {
    auto out = open_for_write(csv_path);
    if (with_sigma) out << "sigma,";
    for (const auto& name : reports.front().param_names) out << name << ',';
    out << "mean,std,n\n";
    for (const auto& r : reports) {
      for (const auto& m : r.members) {
        if (with_sigma) out << format_real(r.meta.noise ? r.meta.noise->sigma : 0.0) << ',';
        for (double s : m.scales.scales) out << format_real(s) << ',';
        out << format_real(m.mean) << ',' << format_real(m.std) << ',' << m.episodes() << '\n';
      }
    }
    close_checked(out, csv_path);
  }

  nlohmann::json doc;
  const auto& meta = reports.front().meta;
  doc["meta"] = {{"algorithm", meta.algorithm}, {"env", meta.env},       {"sweep", meta.sweep},
                 {"seed", meta.seed},           {"iteration", meta.iteration}, {"config_hash", meta.config_hash},
                 {"param_names", reports.front().param_names}};
  nlohmann::json items = nlohmann::json::array();
  std::vector<double> all_means;
  for (const auto& r : reports) {
    items.push_back({{"mean", r.mean}, {"std", r.std}, {"members", r.members.size()}, {"noise", noise_json(r.meta.noise)}});
    for (const auto& m : r.members) all_means.push_back(m.mean);
  }
  double agg_mean = 0.0, agg_std = 0.0;
  mean_std(all_means, agg_mean, agg_std);
  doc["reports"] = items;
  doc["aggregate"] = {{"mean", agg_mean}, {"std", agg_std}, {"rows", all_means.size()}};
  auto out = open_for_write(json_path);
  out << doc.dump(2) << '\n';
  close_checked(out, json_path);
}

struct CsvReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw LookupError("no column '" + name + "'");
  }
};

inline CsvReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvReport r;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty report");
  std::stringstream header(line);
  for (std::string cell; std::getline(header, cell, ',');) r.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != r.columns.size()) throw IoError(path.string() + ": ragged row");
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace adp
