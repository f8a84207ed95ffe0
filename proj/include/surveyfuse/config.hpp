#ifndef SURVEYFUSE_CONFIG_HPP
#define SURVEYFUSE_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "surveyfuse/data_io.hpp"
#include "surveyfuse/index_report.hpp"
#include "surveyfuse/inference.hpp"
#include "surveyfuse/simulate.hpp"

namespace surveyfuse {

// One structured file fully determines a run. Sections mirror the module
// list: data, mesh, model, priors, start, inference, predict, simulate,
// output.
struct RunConfig {
  std::string data_path;
  CsvSchema schema;
  std::vector<std::string> species;
  std::vector<std::string> gears;
  int year_min = 0, year_max = 0;
  double reference_lat = 0.0;  // 0 = data mean latitude

  double mesh_inner_max_edge = 50.0;
  double mesh_outer_extension = 100.0;
  double mesh_outer_max_edge = 100.0;
  std::string mesh_path;

  FieldVariant variant = FieldVariant::spatiotemporal;
  std::vector<FieldVariant> compare_variants;
  bool include_gear_effect = true;
  double beta_prior_variance = 1000.0;

  HyperPriors priors;
  HyperParams start;
  InferenceSettings inference;
  PredGridSpec predict;

  SimScenario scenario;
  bool has_scenario = false;

  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  FitSettings fit_settings() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

}  // namespace surveyfuse

#endif
