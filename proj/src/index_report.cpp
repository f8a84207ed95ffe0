#include "surveyfuse/index_report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace surveyfuse {

double back_transform(double eta1, double eta2) {
  return inverse_logit(eta1) * std::exp(eta2);
}

double rms(const std::vector<double>& b) {
  const int t = static_cast<int>(b.size());
  if (t < 2) throw ValidationError("rms: degenerate series, need T >= 2");
  double acc = 0.0;
  for (double v : b) acc += v * v;
  return std::sqrt(acc / (t - 1));
}

std::vector<double> scale_index(const std::vector<double>& b) {
  const double r = rms(b);
  if (r == 0.0)
    throw ValidationError("scale_index: division by zero, series is all zero");
  std::vector<double> out(b.size());
  for (size_t i = 0; i < b.size(); ++i) out[i] = b[i] / r;
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

struct PredCells {
  std::vector<std::array<double, 2>> cells;
  SpMatRow projection;  // empty for non-spatial variants
  int skipped = 0;
};

PredCells make_cells(const FitResult& fit, const PredGridSpec& grid) {
  if (fit.data_hull.size() < 3)
    throw ValidationError("predict: data hull is degenerate");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : fit.data_hull) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  PredCells out;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.nx == 1 ? 0.5 * (xmin + xmax)
                                    : xmin + (xmax - xmin) * i / (grid.nx - 1);
      const double y = grid.ny == 1 ? 0.5 * (ymin + ymax)
                                    : ymin + (ymax - ymin) * j / (grid.ny - 1);
      if (inside_hull(fit.data_hull, x, y))
        out.cells.push_back({x, y});
      else
        out.skipped += 1;
    }
  }
  if (out.cells.empty())
    throw ValidationError("predict: no grid cells inside the data hull");
  const bool spatial = fit.spec.variant == FieldVariant::spatial ||
                       fit.spec.variant == FieldVariant::spatiotemporal;
  if (spatial) out.projection = projection_matrix(fit.mesh, out.cells);
  return out;
}

// intercept-level eta: mean species effect plus the field, no gear term
Eigen::MatrixXd sample_cell_etas(const SubmodelFit& sm, const PredCells& pc,
                                 int year_slot, bool field_only) {
  const int s = static_cast<int>(sm.latent_samples.rows());
  const int c = static_cast<int>(pc.cells.size());
  const LatentLayout& lay = sm.layout;
  Eigen::MatrixXd etas = Eigen::MatrixXd::Zero(s, c);
  if (!field_only) {
    const Eigen::VectorXd beta_bar =
        sm.latent_samples.middleCols(lay.beta_offset(), lay.n_species).rowwise().mean();
    etas.colwise() += beta_bar;
  }
  switch (lay.variant) {
    case FieldVariant::none:
      break;
    case FieldVariant::temporal:
      etas.colwise() += sm.latent_samples.col(lay.field_offset() + year_slot).eval();
      break;
    case FieldVariant::spatial:
      etas += sm.latent_samples.middleCols(lay.field_offset(), lay.mesh_nodes) *
              SpMat(pc.projection.transpose());
      break;
    case FieldVariant::spatiotemporal:
      etas += sm.latent_samples.middleCols(
                  lay.field_offset() + year_slot * lay.mesh_nodes, lay.mesh_nodes) *
              SpMat(pc.projection.transpose());
      break;
  }
  return etas;
}

Eigen::VectorXd mean_cell_etas(const SubmodelFit& sm, const PredCells& pc,
                               int year_slot) {
  const int c = static_cast<int>(pc.cells.size());
  const LatentLayout& lay = sm.layout;
  double beta_bar = 0.0;
  for (int i = 0; i < lay.n_species; ++i)
    beta_bar += sm.latent[lay.beta_offset() + i].mean / lay.n_species;
  Eigen::VectorXd etas = Eigen::VectorXd::Constant(c, beta_bar);
  switch (lay.variant) {
    case FieldVariant::none:
      break;
    case FieldVariant::temporal:
      etas.array() += sm.latent[lay.field_offset() + year_slot].mean;
      break;
    case FieldVariant::spatial:
    case FieldVariant::spatiotemporal: {
      const int base = lay.variant == FieldVariant::spatial
                           ? lay.field_offset()
                           : lay.field_offset() + year_slot * lay.mesh_nodes;
      Eigen::VectorXd field(lay.mesh_nodes);
      for (int m = 0; m < lay.mesh_nodes; ++m) field[m] = sm.latent[base + m].mean;
      etas += pc.projection * field;
      break;
    }
  }
  return etas;
}

void append_quantity(Surface& surface, const PredCells& pc, int year,
                     const std::string& name, const Eigen::MatrixXd& values) {
  const int s = static_cast<int>(values.rows());
  for (int c = 0; c < values.cols(); ++c) {
    SurfaceCell cell;
    cell.x = pc.cells[c][0];
    cell.y = pc.cells[c][1];
    cell.year = year;
    cell.quantity = name;
    cell.mean = values.col(c).mean();
    cell.sd = s > 1 ? std::sqrt((values.col(c).array() - cell.mean).square().sum() /
                                (s - 1))
                    : 0.0;
    surface.cells.push_back(std::move(cell));
  }
}

}  // namespace

Surface predict_surface(const FitResult& fit, const PredGridSpec& grid, int year) {
  const PredCells pc = make_cells(fit, grid);
  Surface surface;
  surface.skipped_cells = pc.skipped;
  for (int t = 0; t < fit.spec.n_years(); ++t) {
    const int y = fit.spec.year_min + t;
    if (year >= 0 && y != year) continue;
    const Eigen::MatrixXd eta1 = sample_cell_etas(fit.detection, pc, t, false);
    const Eigen::MatrixXd eta2 = sample_cell_etas(fit.abundance, pc, t, false);
    append_quantity(surface, pc, y, "p",
                    eta1.unaryExpr([](double e) { return inverse_logit(e); }));
    append_quantity(surface, pc, y, "abundance",
                    eta2.unaryExpr([](double e) { return std::exp(e); }));
    append_quantity(surface, pc, y, "field_detection",
                    sample_cell_etas(fit.detection, pc, t, true));
    append_quantity(surface, pc, y, "field_abundance",
                    sample_cell_etas(fit.abundance, pc, t, true));
  }
  if (surface.cells.empty())
    throw ValidationError("predict: year " + std::to_string(year) +
                          " outside the fitted range");
  return surface;
}

YearEta year_eta_averages(const FitResult& fit, const PredGridSpec& grid) {
  const PredCells pc = make_cells(fit, grid);
  const int n_years = fit.spec.n_years();
  const int s = static_cast<int>(fit.detection.latent_samples.rows());
  YearEta out;
  out.sample_eta1.resize(s, n_years);
  out.sample_eta2.resize(s, n_years);
  for (int t = 0; t < n_years; ++t) {
    out.years.push_back(fit.spec.year_min + t);
    out.mean_eta1.push_back(mean_cell_etas(fit.detection, pc, t).mean());
    out.mean_eta2.push_back(mean_cell_etas(fit.abundance, pc, t).mean());
    out.sample_eta1.col(t) = sample_cell_etas(fit.detection, pc, t, false).rowwise().mean();
    out.sample_eta2.col(t) = sample_cell_etas(fit.abundance, pc, t, false).rowwise().mean();
  }
  return out;
}

IndexSeries index_series_from_etas(const YearEta& etas) {
  const int n_years = static_cast<int>(etas.years.size());
  IndexSeries series;
  series.years = etas.years;
  for (int t = 0; t < n_years; ++t)
    series.b.push_back(back_transform(etas.mean_eta1[t], etas.mean_eta2[t]));
  series.b_scaled = scale_index(series.b);

  const int s = static_cast<int>(etas.sample_eta1.rows());
  if (s == 0) {
    series.lo95 = series.b_scaled;
    series.hi95 = series.b_scaled;
    return series;
  }
  Eigen::MatrixXd scaled(s, n_years);
  for (int k = 0; k < s; ++k) {
    std::vector<double> bs(n_years);
    for (int t = 0; t < n_years; ++t)
      bs[t] = back_transform(etas.sample_eta1(k, t), etas.sample_eta2(k, t));
    const auto sc = scale_index(bs);
    for (int t = 0; t < n_years; ++t) scaled(k, t) = sc[t];
  }
  for (int t = 0; t < n_years; ++t) {
    std::vector<double> col(scaled.col(t).data(), scaled.col(t).data() + s);
    series.lo95.push_back(quantile(col, 0.025));
    series.hi95.push_back(quantile(col, 0.975));
  }
  return series;
}

IndexSeries index_series(const FitResult& fit, const PredGridSpec& grid) {
  if (fit.spec.n_years() < 2)
    throw ValidationError("index series needs at least two survey years");
  return index_series_from_etas(year_eta_averages(fit, grid));
}

std::vector<GearEfficiencyRow> gear_efficiency_summary(const FitResult& fit) {
  const LatentLayout& lay = fit.detection.layout;
  if (lay.n_gears == 0)
    throw ValidationError(
        "gear efficiency summary: fit has no gear effects (single survey)");
  const int s = static_cast<int>(fit.detection.latent_samples.rows());
  std::vector<GearEfficiencyRow> rows;
  const Eigen::VectorXd beta_bar_det =
      fit.detection.latent_samples.middleCols(lay.beta_offset(), lay.n_species)
          .rowwise()
          .mean();
  for (int j = 0; j < lay.n_gears; ++j) {
    GearEfficiencyRow row;
    row.gear = fit.spec.gears[j];
    std::vector<double> pct(s);
    for (int k = 0; k < s; ++k)
      pct[k] = 100.0 * inverse_logit(
                           beta_bar_det[k] +
                           fit.detection.latent_samples(k, lay.gear_offset() + j));
    row.detect_pct = 0.0;
    for (double v : pct) row.detect_pct += v / s;
    row.detect_lo = quantile(pct, 0.025);
    row.detect_hi = quantile(pct, 0.975);

    const LatentLayout& lay2 = fit.abundance.layout;
    std::vector<double> eff(fit.abundance.latent_samples.rows());
    for (size_t k = 0; k < eff.size(); ++k)
      eff[k] = fit.abundance.latent_samples(static_cast<int>(k),
                                            lay2.gear_offset() + j);
    row.abund_mean = fit.abundance.latent[lay2.gear_offset() + j].mean;
    row.abund_lo = quantile(eff, 0.025);
    row.abund_hi = quantile(eff, 0.975);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_surface_csv(std::ostream& out, const Surface& surface) {
  out << "x_km,y_km,year,quantity,mean,sd\n";
  out.precision(10);
  for (const auto& c : surface.cells)
    out << c.x << "," << c.y << "," << c.year << "," << c.quantity << ","
        << c.mean << "," << c.sd << "\n";
}

void write_index_csv(std::ostream& out, const IndexSeries& series) {
  out << "year,b,b_scaled,lo95,hi95\n";
  out.precision(12);
  for (size_t t = 0; t < series.years.size(); ++t)
    out << series.years[t] << "," << series.b[t] << "," << series.b_scaled[t]
        << "," << series.lo95[t] << "," << series.hi95[t] << "\n";
}

void write_gear_csv(std::ostream& out, const std::vector<GearEfficiencyRow>& rows) {
  out << "gear,detect_pct,detect_lo95,detect_hi95,abund_effect,abund_lo95,abund_hi95\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.gear << "," << r.detect_pct << "," << r.detect_lo << ","
        << r.detect_hi << "," << r.abund_mean << "," << r.abund_lo << ","
        << r.abund_hi << "\n";
}

}  // namespace surveyfuse
