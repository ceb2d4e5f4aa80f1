#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msadapt/problem.hpp"

namespace msadapt {

enum class InstanceFormat { json, csv };

namespace detail {

inline std::vector<double> as_double_vector(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw SchemaError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(std::string(what) + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Decimal form that round-trips to the same double.
inline std::string format_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) cells.push_back(cur);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline ProblemInstance instance_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("instance document must be a JSON object");
  if (!doc.contains("domains") || !doc.contains("points"))
    throw SchemaError("instance document requires 'domains' and 'points'");

  ProblemInstance inst;
  for (const auto& d : doc.at("domains")) {
    if (!d.is_string()) throw SchemaError("'domains' must be an array of strings");
    inst.domain_names.push_back(d.get<std::string>());
  }
  const std::size_t p = inst.domain_names.size();

  for (const auto& jp : doc.at("points")) {
    SupportPoint pt;
    pt.densities = detail::as_double_vector(jp.at("densities"), "densities");
    pt.predictions = detail::as_double_vector(jp.at("predictions"), "predictions");
    if (pt.densities.size() != p || pt.predictions.size() != p)
      throw SchemaError("point vectors must have one entry per domain");
    pt.y_mean = jp.at("y_mean").get<double>();
    pt.y_sq_mean = jp.at("y_sq_mean").get<double>();
    if (jp.contains("label_dist")) {
      LabelConditional lc;
      const auto& jl = jp.at("label_dist");
      lc.labels = detail::as_double_vector(jl.at("labels"), "labels");
      for (const auto& row : jl.at("cond"))
        lc.cond.push_back(detail::as_double_vector(row, "cond row"));
      pt.label_dist = std::move(lc);
    }
    inst.points.push_back(std::move(pt));
  }
  renormalize_densities(inst);
  validate_instance(inst);
  return inst;
}

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json doc;
  doc["domains"] = inst.domain_names;
  nlohmann::json pts = nlohmann::json::array();
  for (const SupportPoint& pt : inst.points) {
    nlohmann::json jp;
    jp["densities"] = pt.densities;
    jp["predictions"] = pt.predictions;
    jp["y_mean"] = pt.y_mean;
    jp["y_sq_mean"] = pt.y_sq_mean;
    if (pt.label_dist) {
      jp["label_dist"] = {{"labels", pt.label_dist->labels}, {"cond", pt.label_dist->cond}};
    }
    pts.push_back(std::move(jp));
  }
  doc["points"] = std::move(pts);
  return doc;
}

/// CSV schema: header `d1..dp,h1..hp,y_mean,y_sq_mean`, one row per point.
/// Carries no label_dist.
inline ProblemInstance instance_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV document");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::size_t p = 0;
  while (p < header.size() && header[p].size() >= 2 && header[p][0] == 'd') ++p;
  if (p == 0 || header.size() != 2 * p + 2)
    throw SchemaError("CSV header must be d1..dp,h1..hp,y_mean,y_sq_mean");
  for (std::size_t k = 0; k < p; ++k)
    if (header[p + k].empty() || header[p + k][0] != 'h')
      throw SchemaError("CSV header must be d1..dp,h1..hp,y_mean,y_sq_mean");

  ProblemInstance inst;
  for (std::size_t k = 1; k <= p; ++k) inst.domain_names.push_back("d" + std::to_string(k));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2 * p + 2)
      throw SchemaError("CSV row " + std::to_string(lineno) + " has wrong cell count");
    SupportPoint pt;
    auto num = [&](std::size_t c) {
      try {
        std::size_t pos = 0;
        double v = std::stod(cells[c], &pos);
        if (pos != cells[c].size()) throw ParseError("");
        return v;
      } catch (...) {
        throw ParseError("CSV row " + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
    };
    for (std::size_t k = 0; k < p; ++k) pt.densities.push_back(num(k));
    for (std::size_t k = 0; k < p; ++k) pt.predictions.push_back(num(p + k));
    pt.y_mean = num(2 * p);
    pt.y_sq_mean = num(2 * p + 1);
    inst.points.push_back(std::move(pt));
  }
  renormalize_densities(inst);
  validate_instance(inst);
  return inst;
}

inline std::string instance_to_csv(const ProblemInstance& inst) {
  const std::size_t p = inst.num_domains();
  std::string out;
  for (std::size_t k = 1; k <= p; ++k) out += "d" + std::to_string(k) + ",";
  for (std::size_t k = 1; k <= p; ++k) out += "h" + std::to_string(k) + ",";
  out += "y_mean,y_sq_mean\n";
  for (const SupportPoint& pt : inst.points) {
    for (double d : pt.densities) out += detail::format_exact(d) + ",";
    for (double h : pt.predictions) out += detail::format_exact(h) + ",";
    out += detail::format_exact(pt.y_mean) + "," + detail::format_exact(pt.y_sq_mean) + "\n";
  }
  return out;
}

inline ProblemInstance load_instance(std::istream& in, InstanceFormat format) {
  if (format == InstanceFormat::csv) return instance_from_csv(in);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return instance_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad instance document: ") + e.what());
  }
}

inline ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return load_instance(in, csv ? InstanceFormat::csv : InstanceFormat::json);
}

inline void save_instance_json(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

}  // namespace msadapt
