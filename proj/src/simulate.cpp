#include "surveyfuse/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "surveyfuse/parallel.hpp"

namespace surveyfuse {

std::vector<std::string> SimScenario::gear_names() const {
  std::vector<std::string> names;
  for (const auto& l : layouts)
    if (std::find(names.begin(), names.end(), l.gear) == names.end())
      names.push_back(l.gear);
  return names;
}

std::vector<std::array<double, 2>> layout_locations(const GearLayout& layout,
                                                    double width, double height) {
  std::vector<std::array<double, 2>> pts;
  const double x0 = layout.x_lo * width, x1 = layout.x_hi * width;
  const double y0 = layout.y_lo * height, y1 = layout.y_hi * height;
  if (layout.kind == GearLayout::Kind::transects) {
    for (int i = 0; i < layout.count; ++i) {
      const double x = layout.count == 1
                           ? 0.5 * (x0 + x1)
                           : x0 + (x1 - x0) * i / (layout.count - 1);
      for (int k = 0; k < layout.per_transect; ++k) {
        const double y = layout.per_transect == 1
                             ? 0.5 * (y0 + y1)
                             : y0 + (y1 - y0) * k / (layout.per_transect - 1);
        pts.push_back({x, y});
      }
    }
    return pts;
  }
  // fixed stations on a near-square grid
  const int nx = std::max(1, static_cast<int>(std::ceil(std::sqrt(layout.count))));
  const int ny = std::max(1, (layout.count + nx - 1) / nx);
  int placed = 0;
  for (int j = 0; j < ny && placed < layout.count; ++j) {
    for (int i = 0; i < nx && placed < layout.count; ++i, ++placed) {
      const double x = nx == 1 ? 0.5 * (x0 + x1) : x0 + (x1 - x0) * (i + 0.5) / nx;
      const double y = ny == 1 ? 0.5 * (y0 + y1) : y0 + (y1 - y0) * (j + 0.5) / ny;
      pts.push_back({x, y});
    }
  }
  return pts;
}

namespace {

std::vector<double> realize_gear_effects(const SubmodelTruth& truth, int n_gears,
                                         Rng& rng) {
  if (!truth.gear_effects.empty()) {
    if (static_cast<int>(truth.gear_effects.size()) != n_gears)
      throw ValidationError("scenario: gear effect truth count mismatch");
    return truth.gear_effects;
  }
  std::vector<double> eff(n_gears);
  for (int j = 0; j < n_gears; ++j) eff[j] = truth.hyper.sigma_f * rng.normal();
  return eff;
}

Eigen::VectorXd draw_field(const SubmodelTruth& truth, FieldVariant variant,
                           const FemMatrices& fem, int n_years, Rng& rng) {
  switch (variant) {
    case FieldVariant::none:
      return Eigen::VectorXd();
    case FieldVariant::temporal: {
      SpMat q = ar1_precision_matrix({truth.hyper.rho, n_years}) /
                (truth.hyper.sigma_omega * truth.hyper.sigma_omega);
      return SparsePrecision(std::move(q)).sample(rng);
    }
    case FieldVariant::spatial: {
      const auto mp = MaternParams::from_range_sigma(
          std::sqrt(8.0) / truth.hyper.kappa, truth.hyper.sigma_omega);
      return spde_precision(fem, mp).sample(rng);
    }
    case FieldVariant::spatiotemporal: {
      const auto mp = MaternParams::from_range_sigma(
          std::sqrt(8.0) / truth.hyper.kappa, truth.hyper.sigma_omega);
      SparsePrecision qs = spde_precision(fem, mp);
      SparsePrecision qt = ar1_precision({truth.hyper.rho, n_years});
      return kronecker_precision(qt, qs).sample(rng);
    }
  }
  return Eigen::VectorXd();
}

double field_at(const Eigen::VectorXd& field, FieldVariant variant,
                const SpMatRow& projection, int loc_row, int year_slot,
                int mesh_nodes) {
  switch (variant) {
    case FieldVariant::none:
      return 0.0;
    case FieldVariant::temporal:
      return field[year_slot];
    case FieldVariant::spatial: {
      double v = 0.0;
      for (SpMatRow::InnerIterator it(projection, loc_row); it; ++it)
        v += it.value() * field[it.col()];
      return v;
    }
    case FieldVariant::spatiotemporal: {
      double v = 0.0;
      const int base = year_slot * mesh_nodes;
      for (SpMatRow::InnerIterator it(projection, loc_row); it; ++it)
        v += it.value() * field[base + it.col()];
      return v;
    }
  }
  return 0.0;
}

}  // namespace

SimResult simulate_survey(const SimScenario& scenario) {
  if (scenario.layouts.empty())
    throw ValidationError("scenario: at least one gear layout required");
  if (scenario.species.empty())
    throw ValidationError("scenario: species catalog empty");
  const auto gears = scenario.gear_names();
  const int n_gears = static_cast<int>(gears.size());
  const int n_years = scenario.n_years;

  // gear -> locations, plus the merged set for the mesh
  std::vector<std::vector<std::array<double, 2>>> per_gear(scenario.layouts.size());
  std::vector<std::array<double, 2>> all;
  for (size_t l = 0; l < scenario.layouts.size(); ++l) {
    per_gear[l] = layout_locations(scenario.layouts[l], scenario.domain_width,
                                   scenario.domain_height);
    all.insert(all.end(), per_gear[l].begin(), per_gear[l].end());
  }

  SimResult result;
  const bool spatial = scenario.variant == FieldVariant::spatial ||
                       scenario.variant == FieldVariant::spatiotemporal;
  FemMatrices fem;
  SpMatRow projection;
  if (spatial) {
    result.mesh = build_mesh(all, scenario.mesh_inner_max_edge,
                             scenario.mesh_outer_extension,
                             scenario.mesh_outer_max_edge);
    fem = fem_matrices(result.mesh);
    projection = projection_matrix(result.mesh, all);
  }

  Rng rng(scenario.seed);
  result.truth.gear_effects_detection =
      realize_gear_effects(scenario.detection, n_gears, rng);
  result.truth.gear_effects_abundance =
      realize_gear_effects(scenario.abundance, n_gears, rng);
  result.truth.field_detection =
      draw_field(scenario.detection, scenario.variant, fem, n_years, rng);
  result.truth.field_abundance =
      draw_field(scenario.abundance, scenario.variant, fem, n_years, rng);

  const bool gear_effect_active = n_gears > 1;
  int loc_row = 0;
  for (size_t l = 0; l < scenario.layouts.size(); ++l) {
    const auto gi = std::find(gears.begin(), gears.end(), scenario.layouts[l].gear);
    const int gear_idx = static_cast<int>(gi - gears.begin());
    for (const auto& pt : per_gear[l]) {
      for (int t = 0; t < n_years; ++t) {
        // multi-species scenarios rotate records over the catalog
        const int sp = (loc_row + t) % static_cast<int>(scenario.species.size());
        double eta1 = scenario.detection.beta[sp];
        double eta2 = scenario.abundance.beta[sp];
        if (gear_effect_active) {
          eta1 += result.truth.gear_effects_detection[gear_idx];
          eta2 += result.truth.gear_effects_abundance[gear_idx];
        }
        eta1 += field_at(result.truth.field_detection, scenario.variant,
                         projection, loc_row, t, result.mesh.n_vertices());
        eta2 += field_at(result.truth.field_abundance, scenario.variant,
                         projection, loc_row, t, result.mesh.n_vertices());

        HaulRecord rec;
        // planar scenario: store km directly as degrees at reference_lat 0
        rec.lon = pt[0] / 111.32;
        rec.lat = pt[1] / 111.32;
        rec.year = scenario.year_min + t;
        rec.gear = scenario.layouts[l].gear;
        rec.species = scenario.species[sp];
        const double p = inverse_logit(eta1);
        const bool detected = rng.uniform() < p;
        if (detected) {
          const double log_y = eta2 + scenario.abundance.hyper.sigma_e * rng.normal();
          rec.value = std::exp(log_y);
        } else {
          rec.value = 0.0;
        }
        result.records.push_back(std::move(rec));
      }
      ++loc_row;
    }
  }
  return result;
}

namespace {

void record_hyper(const SubmodelFit& sm, const std::string& prefix,
                  const HyperParams& truth_hyper,
                  std::vector<ParamRecovery>& out) {
  for (const auto& h : sm.hyper) {
    ParamRecovery pr;
    pr.name = prefix + ":" + h.name;
    if (h.name == "sigma_e") pr.truth = truth_hyper.sigma_e;
    else if (h.name == "sigma_f") pr.truth = truth_hyper.sigma_f;
    else if (h.name == "sigma_omega") pr.truth = truth_hyper.sigma_omega;
    else if (h.name == "rho") pr.truth = truth_hyper.rho;
    else pr.truth = truth_hyper.kappa;
    pr.mean = h.mean;
    pr.sd = h.sd;
    pr.lo95 = h.lo95;
    pr.hi95 = h.hi95;
    pr.covered = pr.truth >= pr.lo95 && pr.truth <= pr.hi95;
    out.push_back(std::move(pr));
  }
}

void record_gear_effects(const SubmodelFit& sm, const std::string& prefix,
                         const std::vector<std::string>& gears,
                         const std::vector<double>& truth,
                         std::vector<ParamRecovery>& out) {
  const LatentLayout& lay = sm.layout;
  for (int j = 0; j < lay.n_gears; ++j) {
    ParamRecovery pr;
    pr.name = prefix + ":gear:" + gears[j];
    pr.truth = truth[j];
    pr.mean = sm.latent[lay.gear_offset() + j].mean;
    pr.sd = sm.latent[lay.gear_offset() + j].sd;
    pr.lo95 = pr.mean - 1.959963984540054 * pr.sd;
    pr.hi95 = pr.mean + 1.959963984540054 * pr.sd;
    pr.covered = pr.truth >= pr.lo95 && pr.truth <= pr.hi95;
    out.push_back(std::move(pr));
  }
}

}  // namespace

RecoveryReport recovery_report(const SimScenario& scenario,
                               const RecoveryConfig& config) {
  if (config.n_replicates < 1)
    throw ValidationError("recovery: need at least one replicate");
  const auto gears = scenario.gear_names();

  std::vector<std::string> subsets{"combined"};
  if (config.per_gear_subsets)
    subsets.insert(subsets.end(), gears.begin(), gears.end());

  struct Task {
    int replicate;
    FieldVariant variant;
    std::string subset;
  };
  std::vector<Task> tasks;
  for (int r = 0; r < config.n_replicates; ++r)
    for (const auto v : config.variants)
      for (const auto& s : subsets) tasks.push_back({r, v, s});

  // one simulation per replicate, shared across the variant fits
  std::vector<SimResult> sims(config.n_replicates);
  parallel_for(config.n_replicates, config.threads, [&](int r) {
    SimScenario rep = scenario;
    rep.seed = Rng::derive(scenario.seed, static_cast<std::uint64_t>(r));
    sims[r] = simulate_survey(rep);
  });

  RecoveryReport report;
  report.rows.resize(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), config.threads, [&](int ti) {
    const Task& task = tasks[ti];
    ReplicateReport row;
    row.replicate = task.replicate;
    row.variant = task.variant;
    row.gear_subset = task.subset;
    const SimResult& sim = sims[task.replicate];
    try {
      std::vector<HaulRecord> records;
      if (task.subset == "combined") {
        records = sim.records;
      } else {
        for (const auto& rec : sim.records)
          if (rec.gear == task.subset) records.push_back(rec);
      }
      FitSettings fs = config.fit;
      fs.spec.species = scenario.species;
      fs.spec.gears = task.subset == "combined"
                          ? gears
                          : std::vector<std::string>{task.subset};
      fs.spec.year_min = scenario.year_min;
      fs.spec.year_max = scenario.year_min + scenario.n_years - 1;
      fs.spec.variant = task.variant;
      fs.spec.include_gear_effect = task.subset == "combined" && gears.size() > 1;
      fs.mesh = sim.mesh;
      fs.seed = Rng::derive(scenario.seed, 1000 + task.replicate);
      const FitResult fit_res = fit(fs, records);

      record_hyper(fit_res.detection, "detection", scenario.detection.hyper,
                   row.params);
      record_hyper(fit_res.abundance, "abundance", scenario.abundance.hyper,
                   row.params);
      if (task.subset == "combined") {
        record_gear_effects(fit_res.detection, "detection", gears,
                            sim.truth.gear_effects_detection, row.params);
        record_gear_effects(fit_res.abundance, "abundance", gears,
                            sim.truth.gear_effects_abundance, row.params);
      }
      row.waic_detection = fit_res.detection.waic.waic;
      row.waic_abundance = fit_res.abundance.waic.waic;
      row.waic_total = fit_res.waic_total;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    report.rows[ti] = std::move(row);
  });
  return report;
}

}  // namespace surveyfuse
