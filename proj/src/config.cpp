#include "surveyfuse/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace surveyfuse {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config: bad value for '" + key + "': " + e.what());
  }
}

HyperParams parse_hyper(const json& j, const HyperParams& base) {
  HyperParams h = base;
  h.sigma_e = get_or(j, "sigma_e", h.sigma_e);
  h.sigma_f = get_or(j, "sigma_f", h.sigma_f);
  h.sigma_omega = get_or(j, "sigma_omega", h.sigma_omega);
  h.rho = get_or(j, "rho", h.rho);
  h.kappa = get_or(j, "kappa", h.kappa);
  return h;
}

GearLayout parse_layout(const json& j) {
  GearLayout l;
  l.gear = get_or<std::string>(j, "gear", "G1");
  const std::string kind = get_or<std::string>(j, "kind", "stations");
  if (kind == "transects")
    l.kind = GearLayout::Kind::transects;
  else if (kind == "stations")
    l.kind = GearLayout::Kind::stations;
  else
    throw ValidationError("config: layout kind must be transects|stations");
  l.count = get_or(j, "count", l.count);
  l.per_transect = get_or(j, "per_transect", l.per_transect);
  l.x_lo = get_or(j, "x_lo", l.x_lo);
  l.x_hi = get_or(j, "x_hi", l.x_hi);
  l.y_lo = get_or(j, "y_lo", l.y_lo);
  l.y_hi = get_or(j, "y_hi", l.y_hi);
  return l;
}

SubmodelTruth parse_truth(const json& j) {
  SubmodelTruth t;
  if (j.contains("hyper")) t.hyper = parse_hyper(j.at("hyper"), t.hyper);
  t.beta = get_or(j, "beta", std::vector<double>{0.0});
  t.gear_effects = get_or(j, "gear_effects", std::vector<double>{});
  return t;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;

  if (j.contains("data")) {
    const json& d = j.at("data");
    cfg.data_path = get_or<std::string>(d, "path", "");
    const std::string delim = get_or<std::string>(d, "delimiter", ",");
    if (delim.size() != 1)
      throw ValidationError("config: delimiter must be a single character");
    cfg.schema.delimiter = delim[0];
    if (d.contains("columns")) {
      const json& c = d.at("columns");
      cfg.schema.lon = get_or<std::string>(c, "lon", cfg.schema.lon);
      cfg.schema.lat = get_or<std::string>(c, "lat", cfg.schema.lat);
      cfg.schema.year = get_or<std::string>(c, "year", cfg.schema.year);
      cfg.schema.gear = get_or<std::string>(c, "gear", cfg.schema.gear);
      cfg.schema.species = get_or<std::string>(c, "species", cfg.schema.species);
      cfg.schema.value = get_or<std::string>(c, "value", cfg.schema.value);
    }
    cfg.species = get_or(d, "species", std::vector<std::string>{});
    cfg.gears = get_or(d, "gears", std::vector<std::string>{});
    cfg.year_min = get_or(d, "year_min", 0);
    cfg.year_max = get_or(d, "year_max", 0);
    cfg.reference_lat = get_or(d, "reference_lat", 0.0);
  }

  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    cfg.mesh_inner_max_edge = get_or(m, "inner_max_edge", cfg.mesh_inner_max_edge);
    cfg.mesh_outer_extension = get_or(m, "outer_extension", cfg.mesh_outer_extension);
    cfg.mesh_outer_max_edge = get_or(m, "outer_max_edge", cfg.mesh_outer_max_edge);
    cfg.mesh_path = get_or<std::string>(m, "path", "");
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    cfg.variant = parse_variant(get_or<std::string>(m, "variant", "spatiotemporal"));
    for (const auto& v :
         get_or(m, "variants", std::vector<std::string>{}))
      cfg.compare_variants.push_back(parse_variant(v));
    cfg.include_gear_effect = get_or(m, "include_gear_effect", true);
    cfg.beta_prior_variance = get_or(m, "beta_prior_variance", 1000.0);
  }

  if (j.contains("priors")) {
    const json& p = j.at("priors");
    cfg.priors.precision_rate = get_or(p, "precision_rate", cfg.priors.precision_rate);
    cfg.priors.kappa_mean = get_or(p, "kappa_mean", cfg.priors.kappa_mean);
    cfg.priors.kappa_sd = get_or(p, "kappa_sd", cfg.priors.kappa_sd);
    cfg.priors.rho_variance = get_or(p, "rho_variance", cfg.priors.rho_variance);
  }

  if (j.contains("start")) cfg.start = parse_hyper(j.at("start"), cfg.start);

  if (j.contains("inference")) {
    const json& i = j.at("inference");
    cfg.inference.newton.grad_tol = get_or(i, "newton_tol", 1e-6);
    cfg.inference.newton.max_iter = get_or(i, "newton_max_iter", 50);
    cfg.inference.max_hyper_evals = get_or(i, "max_hyper_evals", 200);
    cfg.inference.step_tol = get_or(i, "step_tol", 1e-4);
    cfg.inference.hessian_rel_step = get_or(i, "hessian_rel_step", 1e-3);
    cfg.inference.grid_step = get_or(i, "grid_step", 1.0);
    cfg.inference.grid_cutoff = get_or(i, "grid_cutoff", 5.0);
    cfg.inference.grid_max_points = get_or(i, "grid_max_points", 4000);
    cfg.inference.n_samples = get_or(i, "n_samples", 200);
  }

  if (j.contains("predict")) {
    const json& p = j.at("predict");
    cfg.predict.nx = get_or(p, "nx", 20);
    cfg.predict.ny = get_or(p, "ny", 20);
  }

  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    cfg.has_scenario = true;
    SimScenario& sc = cfg.scenario;
    sc.species = get_or(s, "species", sc.species);
    sc.year_min = get_or(s, "year_min", sc.year_min);
    sc.n_years = get_or(s, "n_years", sc.n_years);
    sc.variant = parse_variant(get_or<std::string>(s, "variant", "spatiotemporal"));
    sc.domain_width = get_or(s, "domain_width", sc.domain_width);
    sc.domain_height = get_or(s, "domain_height", sc.domain_height);
    sc.mesh_inner_max_edge = get_or(s, "mesh_inner_max_edge", sc.mesh_inner_max_edge);
    sc.mesh_outer_extension = get_or(s, "mesh_outer_extension", sc.mesh_outer_extension);
    sc.mesh_outer_max_edge = get_or(s, "mesh_outer_max_edge", sc.mesh_outer_max_edge);
    if (s.contains("layouts"))
      for (const auto& l : s.at("layouts")) sc.layouts.push_back(parse_layout(l));
    if (s.contains("detection")) sc.detection = parse_truth(s.at("detection"));
    if (s.contains("abundance")) sc.abundance = parse_truth(s.at("abundance"));
  }

  if (j.contains("output"))
    cfg.output_dir = get_or<std::string>(j.at("output"), "dir", cfg.output_dir);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
  cfg.threads = get_or(j, "threads", 1);
  cfg.inference.threads = cfg.threads;
  cfg.scenario.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

FitSettings RunConfig::fit_settings() const {
  FitSettings fs;
  fs.spec.species = species;
  fs.spec.gears = gears;
  fs.spec.year_min = year_min;
  fs.spec.year_max = year_max;
  fs.spec.variant = variant;
  fs.spec.include_gear_effect = include_gear_effect;
  fs.reference_lat = reference_lat;
  fs.mesh_inner_max_edge = mesh_inner_max_edge;
  fs.mesh_outer_extension = mesh_outer_extension;
  fs.mesh_outer_max_edge = mesh_outer_max_edge;
  if (!mesh_path.empty()) fs.mesh = load_mesh_file(mesh_path);
  fs.priors = priors;
  fs.start = start;
  fs.inference = inference;
  fs.beta_prior_variance = beta_prior_variance;
  fs.seed = seed;
  return fs;
}

}  // namespace surveyfuse
