#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "surveyfuse/config.hpp"
#include "surveyfuse/index_report.hpp"
#include "surveyfuse/inference.hpp"
#include "surveyfuse/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace surveyfuse;

namespace {

void log_line(const std::string& stage, const std::string& msg) {
  std::cout << "[" << stage << "] " << msg << "\n";
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

struct CommonFlags {
  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  int threads_override = 0;
  std::string fit_artifact;
};

RunConfig load_and_override(const CommonFlags& flags) {
  RunConfig cfg = load_config(flags.config_path);
  if (!flags.out_override.empty()) cfg.output_dir = flags.out_override;
  if (flags.seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(flags.seed_override);
    cfg.scenario.seed = cfg.seed;
  }
  if (flags.threads_override > 0) {
    cfg.threads = flags.threads_override;
    cfg.inference.threads = flags.threads_override;
  }
  fs::create_directories(cfg.output_dir);
  log_line("config", "loaded " + flags.config_path + ", output -> " + cfg.output_dir);
  return cfg;
}

std::vector<HaulRecord> read_data(const RunConfig& cfg) {
  if (cfg.data_path.empty())
    throw ValidationError("config: data.path is required for this command");
  std::ifstream in(cfg.data_path);
  if (!in) throw ValidationError("cannot open data file: " + cfg.data_path);
  ParseResult parsed = parse_haul_records(in, cfg.schema);
  if (!parsed.errors.empty()) {
    const std::string sidecar =
        (fs::path(cfg.output_dir) / "data_errors.txt").string();
    std::ofstream err(sidecar);
    write_row_errors(err, parsed.errors);
    log_line("data", std::to_string(parsed.errors.size()) +
                         " malformed rows rejected, report in " + sidecar);
  }
  log_line("data", "parsed " + std::to_string(parsed.records.size()) + " records");
  return std::move(parsed.records);
}

json hyper_to_json(const std::vector<HyperSummary>& hyper) {
  json out = json::array();
  for (const auto& h : hyper)
    out.push_back({{"name", h.name},
                   {"mean", h.mean},
                   {"sd", h.sd},
                   {"lo95", h.lo95},
                   {"hi95", h.hi95}});
  return out;
}

json marginals_to_json(const std::vector<MarginalSummary>& latent, int offset,
                       int count) {
  json out = json::array();
  for (int i = 0; i < count; ++i)
    out.push_back({latent[offset + i].mean, latent[offset + i].sd});
  return out;
}

json submodel_to_json(const SubmodelFit& sm) {
  json out;
  out["hyper"] = hyper_to_json(sm.hyper);
  out["waic"] = sm.waic.waic;
  out["p_eff"] = sm.waic.p_eff;
  out["lppd"] = sm.waic.lppd;
  out["n_grid_points"] = sm.n_grid_points;
  out["hyper_converged"] = sm.hyper_converged;
  const LatentLayout& lay = sm.layout;
  out["latent"] = {
      {"beta", marginals_to_json(sm.latent, lay.beta_offset(), lay.n_species)},
      {"gear", marginals_to_json(sm.latent, lay.gear_offset(), lay.n_gears)},
      {"field", marginals_to_json(sm.latent, lay.field_offset(), lay.field_dim)}};
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
  return m;
}

void write_summary(std::ostream& out, const RunConfig& cfg, const FitResult& fit_res,
                   const std::vector<GearEfficiencyRow>& gear_rows) {
  out << std::setprecision(6);
  out << "surveyfuse fit summary\n";
  out << "======================\n";
  out << "variant: " << variant_name(fit_res.spec.variant) << "\n";
  out << "species:";
  for (const auto& s : fit_res.spec.species) out << " " << s;
  out << "\ngears:";
  for (const auto& g : fit_res.spec.gears) out << " " << g;
  out << "\nyears: " << fit_res.spec.year_min << "-" << fit_res.spec.year_max << "\n";
  out << "records: " << fit_res.n_records << " (positive " << fit_res.n_positive
      << ")\n";
  out << "seed: " << fit_res.seed << "\n";

  auto submodel_block = [&](const char* title, const SubmodelFit& sm) {
    out << "\n" << title << "\n";
    out << std::string(std::string(title).size(), '-') << "\n";
    out << "posterior marginal estimates (mean, 95% CI):\n";
    for (const auto& h : sm.hyper)
      out << "  " << h.name << ": " << fmt(h.mean) << " (" << fmt(h.lo95) << ", "
          << fmt(h.hi95) << ")\n";
    const LatentLayout& lay = sm.layout;
    for (int i = 0; i < lay.n_species; ++i)
      out << "  beta[" << fit_res.spec.species[i]
          << "]: " << fmt(sm.latent[lay.beta_offset() + i].mean) << " (sd "
          << fmt(sm.latent[lay.beta_offset() + i].sd) << ")\n";
    out << "  WAIC: " << fmt(sm.waic.waic) << " (p_eff " << fmt(sm.waic.p_eff)
        << ", grid points " << sm.n_grid_points << ")\n";
  };
  submodel_block("Detection submodel", fit_res.detection);
  if (!gear_rows.empty()) {
    out << "\nGear efficiency (%):\n";
    for (const auto& r : gear_rows)
      out << "  " << r.gear << ": " << fmt(r.detect_pct) << " ("
          << fmt(r.detect_lo) << ", " << fmt(r.detect_hi) << ")\n";
  }
  submodel_block("Abundance submodel", fit_res.abundance);
  if (!gear_rows.empty()) {
    out << "\nGear effects (abundance, linear scale):\n";
    for (const auto& r : gear_rows)
      out << "  " << r.gear << ": " << fmt(r.abund_mean) << " ("
          << fmt(r.abund_lo) << ", " << fmt(r.abund_hi) << ")\n";
  }
  out << "\nTotal WAIC: " << fmt(fit_res.waic_total) << "\n";
  if (!fit_res.warnings.empty()) {
    out << "\nwarnings:\n";
    for (const auto& w : fit_res.warnings) out << "  " << w << "\n";
  }
}

int cmd_fit(const CommonFlags& flags) {
  RunConfig cfg = load_and_override(flags);
  const std::vector<HaulRecord> records = read_data(cfg);
  FitSettings fs_settings = cfg.fit_settings();

  log_line("fit", "variant " + variant_name(cfg.variant) + ", seed " +
                      std::to_string(cfg.seed));
  FitResult fit_res = fit(fs_settings, records);
  log_line("fit", "detection grid " + std::to_string(fit_res.detection.n_grid_points) +
                      " points, abundance grid " +
                      std::to_string(fit_res.abundance.n_grid_points) + " points");
  log_line("fit", "total WAIC " + fmt(fit_res.waic_total) + ", runtime " +
                      fmt(fit_res.runtime_seconds, 3) + " s");

  std::vector<GearEfficiencyRow> gear_rows;
  if (fit_res.detection.layout.n_gears > 0)
    gear_rows = gear_efficiency_summary(fit_res);

  json artifact;
  artifact["format"] = "surveyfuse-fit";
  artifact["version"] = 1;
  artifact["variant"] = variant_name(fit_res.spec.variant);
  artifact["species"] = fit_res.spec.species;
  artifact["gears"] = fit_res.spec.gears;
  artifact["year_min"] = fit_res.spec.year_min;
  artifact["year_max"] = fit_res.spec.year_max;
  artifact["include_gear_effect"] = fit_res.spec.include_gear_effect;
  artifact["n_records"] = fit_res.n_records;
  artifact["n_positive"] = fit_res.n_positive;
  artifact["seed"] = fit_res.seed;
  artifact["warnings"] = fit_res.warnings;
  artifact["detection"] = submodel_to_json(fit_res.detection);
  artifact["abundance"] = submodel_to_json(fit_res.abundance);
  artifact["waic_total"] = fit_res.waic_total;
  if (!gear_rows.empty()) {
    json gt = json::array();
    for (const auto& r : gear_rows)
      gt.push_back({{"gear", r.gear},
                    {"detect_pct", r.detect_pct},
                    {"detect_lo95", r.detect_lo},
                    {"detect_hi95", r.detect_hi},
                    {"abund_effect", r.abund_mean},
                    {"abund_lo95", r.abund_lo},
                    {"abund_hi95", r.abund_hi}});
    artifact["gear_table"] = std::move(gt);
  }

  // prediction products embedded so predict/index are pure post-processing
  try {
    const Surface surf = predict_surface(fit_res, cfg.predict, -1);
    json rows = json::array();
    for (const auto& c : surf.cells)
      rows.push_back({{"x", c.x},
                      {"y", c.y},
                      {"year", c.year},
                      {"quantity", c.quantity},
                      {"mean", c.mean},
                      {"sd", c.sd}});
    artifact["surface"] = {{"skipped_cells", surf.skipped_cells},
                           {"rows", std::move(rows)}};
    log_line("predict", "surface over " +
                            std::to_string(surf.cells.size()) + " cell rows, " +
                            std::to_string(surf.skipped_cells) +
                            " grid cells outside hull skipped");
  } catch (const ValidationError& e) {
    log_line("predict", std::string("surface skipped: ") + e.what());
  }
  if (fit_res.spec.n_years() >= 2) {
    const YearEta etas = year_eta_averages(fit_res, cfg.predict);
    artifact["index_inputs"] = {{"years", etas.years},
                                {"mean_eta1", etas.mean_eta1},
                                {"mean_eta2", etas.mean_eta2},
                                {"sample_eta1", matrix_to_json(etas.sample_eta1)},
                                {"sample_eta2", matrix_to_json(etas.sample_eta2)}};
  }

  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream f(out_dir / "fit_result.json");
    f << artifact.dump(1) << "\n";
  }
  {
    std::ofstream f(out_dir / "fit_summary.txt");
    write_summary(f, cfg, fit_res, gear_rows);
  }
  {
    std::ofstream f(out_dir / "hyperparameters.csv");
    f << "submodel,name,mean,sd,lo95,hi95\n" << std::setprecision(10);
    for (const auto& h : fit_res.detection.hyper)
      f << "detection," << h.name << "," << h.mean << "," << h.sd << ","
        << h.lo95 << "," << h.hi95 << "\n";
    for (const auto& h : fit_res.abundance.hyper)
      f << "abundance," << h.name << "," << h.mean << "," << h.sd << ","
        << h.lo95 << "," << h.hi95 << "\n";
  }
  if (!gear_rows.empty()) {
    std::ofstream f(out_dir / "gear_table.csv");
    write_gear_csv(f, gear_rows);
  }
  log_line("write", "fit_summary.txt, fit_result.json, hyperparameters.csv" +
                        std::string(gear_rows.empty() ? "" : ", gear_table.csv"));
  return 0;
}

int cmd_compare(const CommonFlags& flags) {
  RunConfig cfg = load_and_override(flags);
  if (cfg.compare_variants.size() < 2)
    throw ValidationError("compare: model.variants must list at least two variants");
  // canonical order so the table is independent of the listing order
  std::vector<FieldVariant> variants = cfg.compare_variants;
  std::sort(variants.begin(), variants.end(),
            [](FieldVariant a, FieldVariant b) {
              return static_cast<int>(a) < static_cast<int>(b);
            });
  variants.erase(std::unique(variants.begin(), variants.end()), variants.end());

  const std::vector<HaulRecord> records = read_data(cfg);
  struct Row {
    FieldVariant variant;
    double waic_det, waic_abn, waic_total;
  };
  std::vector<Row> rows;
  for (const auto v : variants) {
    RunConfig vcfg = cfg;
    vcfg.variant = v;
    log_line("compare", "fitting variant " + variant_name(v));
    const FitResult r = fit(vcfg.fit_settings(), records);
    rows.push_back({v, r.detection.waic.waic, r.abundance.waic.waic, r.waic_total});
  }
  size_t best = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].waic_total < rows[best].waic_total) best = i;

  const fs::path out_path = fs::path(cfg.output_dir) / "waic_table.csv";
  std::ofstream f(out_path);
  f << "variant,waic_detection,waic_abundance,waic_total,lowest\n"
    << std::setprecision(10);
  for (size_t i = 0; i < rows.size(); ++i)
    f << variant_name(rows[i].variant) << "," << rows[i].waic_det << ","
      << rows[i].waic_abn << "," << rows[i].waic_total << ","
      << (i == best ? 1 : 0) << "\n";
  log_line("compare", "lowest WAIC: " + variant_name(rows[best].variant) +
                          " (" + fmt(rows[best].waic_total) + "), table in " +
                          out_path.string());
  return 0;
}

int cmd_simulate(const CommonFlags& flags) {
  RunConfig cfg = load_and_override(flags);
  if (!cfg.has_scenario)
    throw ValidationError("simulate: config has no 'simulate' section");
  const SimResult sim = simulate_survey(cfg.scenario);
  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream f(out_dir / "survey.csv");
    f << "lon,lat,year,gear,species,value\n" << std::setprecision(17);
    for (const auto& r : sim.records)
      f << r.lon << "," << r.lat << "," << r.year << "," << r.gear << ","
        << r.species << "," << r.value << "\n";
  }
  if (sim.mesh.n_vertices() > 0)
    save_mesh_file(sim.mesh, (out_dir / "mesh.txt").string());
  {
    json truth;
    truth["gear_effects_detection"] = sim.truth.gear_effects_detection;
    truth["gear_effects_abundance"] = sim.truth.gear_effects_abundance;
    std::ofstream f(out_dir / "truth.json");
    f << truth.dump(1) << "\n";
  }
  log_line("simulate", std::to_string(sim.records.size()) +
                           " records written to survey.csv (seed " +
                           std::to_string(cfg.scenario.seed) + ")");
  return 0;
}

json load_artifact(const RunConfig& cfg, const std::string& override_path) {
  const std::string path = !override_path.empty()
                               ? override_path
                               : (fs::path(cfg.output_dir) / "fit_result.json").string();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open fit artifact: " + path);
  json artifact;
  try {
    in >> artifact;
  } catch (const json::exception& e) {
    throw ValidationError("fit artifact is not valid JSON: " + std::string(e.what()));
  }
  if (artifact.value("format", "") != "surveyfuse-fit")
    throw ValidationError("not a surveyfuse fit artifact: " + path);
  return artifact;
}

int cmd_predict(const CommonFlags& flags) {
  RunConfig cfg = load_and_override(flags);
  const json artifact = load_artifact(cfg, flags.fit_artifact);
  if (!artifact.contains("surface"))
    throw ValidationError("fit artifact carries no surface block");
  Surface surf;
  surf.skipped_cells = artifact.at("surface").value("skipped_cells", 0);
  for (const auto& r : artifact.at("surface").at("rows")) {
    SurfaceCell c;
    c.x = r.at("x").get<double>();
    c.y = r.at("y").get<double>();
    c.year = r.at("year").get<int>();
    c.quantity = r.at("quantity").get<std::string>();
    c.mean = r.at("mean").get<double>();
    c.sd = r.at("sd").get<double>();
    surf.cells.push_back(std::move(c));
  }
  std::ofstream f(fs::path(cfg.output_dir) / "surface.csv");
  write_surface_csv(f, surf);
  log_line("predict", std::to_string(surf.cells.size()) + " rows -> surface.csv, " +
                          std::to_string(surf.skipped_cells) + " cells were skipped");
  return 0;
}

int cmd_index(const CommonFlags& flags) {
  RunConfig cfg = load_and_override(flags);
  const json artifact = load_artifact(cfg, flags.fit_artifact);
  if (!artifact.contains("index_inputs"))
    throw ValidationError(
        "fit artifact carries no index inputs (single-year fit?)");
  const json& ii = artifact.at("index_inputs");
  YearEta etas;
  etas.years = ii.at("years").get<std::vector<int>>();
  etas.mean_eta1 = ii.at("mean_eta1").get<std::vector<double>>();
  etas.mean_eta2 = ii.at("mean_eta2").get<std::vector<double>>();
  etas.sample_eta1 = matrix_from_json(ii.at("sample_eta1"));
  etas.sample_eta2 = matrix_from_json(ii.at("sample_eta2"));
  const IndexSeries series = index_series_from_etas(etas);
  std::ofstream f(fs::path(cfg.output_dir) / "index.csv");
  write_index_csv(f, series);
  log_line("index", std::to_string(series.years.size()) + " years -> index.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surveyfuse: spatio-temporal hurdle-model engine for fused fish surveys"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&](CLI::App* cmd, bool with_fit) {
    cmd->add_option("--config", flags.config_path, "run configuration file")
        ->required();
    cmd->add_option("--seed", flags.seed_override, "override the config seed");
    cmd->add_option("--out", flags.out_override, "override the output directory");
    cmd->add_option("--threads", flags.threads_override, "worker pool size");
    if (with_fit)
      cmd->add_option("--fit", flags.fit_artifact,
                      "fit artifact path (default <out>/fit_result.json)");
  };
  add_common(app.add_subcommand("fit", "fit the hurdle model"), false);
  add_common(app.add_subcommand("simulate", "generate a synthetic survey"), false);
  add_common(app.add_subcommand("predict", "emit prediction surfaces"), true);
  add_common(app.add_subcommand("index", "emit the scaled biomass index"), true);
  add_common(app.add_subcommand("compare", "WAIC table across variants"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("fit")) return cmd_fit(flags);
    if (app.got_subcommand("simulate")) return cmd_simulate(flags);
    if (app.got_subcommand("predict")) return cmd_predict(flags);
    if (app.got_subcommand("index")) return cmd_index(flags);
    if (app.got_subcommand("compare")) return cmd_compare(flags);
  } catch (const ValidationError& e) {
    std::cerr << "[error] validation: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "[error] inference: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "[error] " << e.what() << "\n";
    return 3;
  }
  return 2;
}
