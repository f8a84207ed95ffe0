#include "surveyfuse/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace surveyfuse {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, int& out) {
  try {
    size_t pos = 0;
    out = std::stoi(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

ParseResult parse_haul_records(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty input: header row required");
  auto header = split_line(line, schema.delimiter);
  for (auto& h : header) h = trim(h);

  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ValidationError("schema error: column '" + name + "' not found");
    return static_cast<int>(it - header.begin());
  };
  const int c_lon = col(schema.lon), c_lat = col(schema.lat);
  const int c_year = col(schema.year), c_gear = col(schema.gear);
  const int c_species = col(schema.species), c_value = col(schema.value);
  const int need = 1 + std::max({c_lon, c_lat, c_year, c_gear, c_species, c_value});

  ParseResult result;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_line(line, schema.delimiter);
    if (static_cast<int>(f.size()) < need) {
      result.errors.push_back({line_no, "too few fields"});
      continue;
    }
    HaulRecord r;
    if (!parse_double(trim(f[c_lon]), r.lon)) {
      result.errors.push_back({line_no, "unparseable lon '" + trim(f[c_lon]) + "'"});
      continue;
    }
    if (!parse_double(trim(f[c_lat]), r.lat)) {
      result.errors.push_back({line_no, "unparseable lat '" + trim(f[c_lat]) + "'"});
      continue;
    }
    if (!parse_int(trim(f[c_year]), r.year)) {
      result.errors.push_back({line_no, "unparseable year '" + trim(f[c_year]) + "'"});
      continue;
    }
    if (!parse_double(trim(f[c_value]), r.value)) {
      result.errors.push_back({line_no, "unparseable value '" + trim(f[c_value]) + "'"});
      continue;
    }
    if (r.value < 0.0) {
      result.errors.push_back({line_no, "negative value " + trim(f[c_value])});
      continue;
    }
    r.gear = trim(f[c_gear]);
    r.species = trim(f[c_species]);
    result.records.push_back(std::move(r));
  }
  return result;
}

HurdleTables split_hurdle(const std::vector<HaulRecord>& records) {
  HurdleTables t;
  t.detection.record_index.reserve(records.size());
  t.detection.z.reserve(records.size());
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    const bool detected = records[i].value > 0.0;
    t.detection.record_index.push_back(i);
    t.detection.z.push_back(detected ? 1 : 0);
    if (detected) {
      t.abundance.record_index.push_back(i);
      t.abundance.log_value.push_back(std::log(records[i].value));
    }
  }
  return t;
}

std::array<double, 2> project_coordinates(double lon, double lat,
                                          double reference_lat) {
  constexpr double km_per_degree = 111.32;
  constexpr double deg = 3.14159265358979323846 / 180.0;
  return {km_per_degree * std::cos(reference_lat * deg) * lon,
          km_per_degree * lat};
}

DesignIndex build_design_index(const std::vector<HaulRecord>& records,
                               const std::vector<std::string>& species_catalog,
                               const std::vector<std::string>& gear_catalog,
                               int year_min, int year_max,
                               double reference_lat) {
  DesignIndex idx;
  const int n = static_cast<int>(records.size());
  idx.species.reserve(n);
  idx.gear.reserve(n);
  idx.year_slot.reserve(n);
  idx.xy.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = records[i];
    auto si = std::find(species_catalog.begin(), species_catalog.end(), r.species);
    if (si == species_catalog.end())
      throw ValidationError("record " + std::to_string(i + 1) +
                            ": species '" + r.species + "' not in catalog");
    auto gi = std::find(gear_catalog.begin(), gear_catalog.end(), r.gear);
    if (gi == gear_catalog.end())
      throw ValidationError("record " + std::to_string(i + 1) + ": gear '" +
                            r.gear + "' not in catalog");
    if (r.year < year_min || r.year > year_max)
      throw ValidationError("record " + std::to_string(i + 1) + ": year " +
                            std::to_string(r.year) + " outside [" +
                            std::to_string(year_min) + ", " +
                            std::to_string(year_max) + "]");
    if (r.value < 0.0)
      throw ValidationError("record " + std::to_string(i + 1) +
                            ": negative value");
    idx.species.push_back(static_cast<int>(si - species_catalog.begin()));
    idx.gear.push_back(static_cast<int>(gi - gear_catalog.begin()));
    idx.year_slot.push_back(r.year - year_min);
    idx.xy.push_back(project_coordinates(r.lon, r.lat, reference_lat));
  }
  return idx;
}

void write_row_errors(std::ostream& out, const std::vector<RowError>& errors) {
  for (const auto& e : errors) out << "line " << e.line << ": " << e.message << "\n";
}

}  // namespace surveyfuse
