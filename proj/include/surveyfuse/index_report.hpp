#ifndef SURVEYFUSE_INDEX_REPORT_HPP
#define SURVEYFUSE_INDEX_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "surveyfuse/inference.hpp"

namespace surveyfuse {

// b_t = inverse-logit(eta1) * exp(eta2), overflow safe.
double back_transform(double eta1, double eta2);

// RMS_B = sqrt(sum b_t^2 / (T-1)); the T-1 denominator is deliberate and
// gives the identity sum(b_scaled^2) = T-1.
double rms(const std::vector<double>& b);

std::vector<double> scale_index(const std::vector<double>& b);

// Regular prediction lattice clipped to the data hull.
struct PredGridSpec {
  int nx = 20;
  int ny = 20;
};

struct SurfaceCell {
  double x = 0, y = 0;
  int year = 0;
  std::string quantity;  // p | abundance | field_detection | field_abundance
  double mean = 0, sd = 0;
};

struct Surface {
  std::vector<SurfaceCell> cells;
  int skipped_cells = 0;  // grid points outside the data hull
};

// Posterior surfaces from the mixture samples: nonlinear quantities are
// transformed per draw, never from the mean predictor. year = -1 emits
// every year.
Surface predict_surface(const FitResult& fit, const PredGridSpec& grid, int year);

// Per-year predictor averages over the prediction cells (point estimate
// from the latent marginal means, bands from the per-sample pipeline).
struct YearEta {
  std::vector<int> years;
  std::vector<double> mean_eta1, mean_eta2;
  Eigen::MatrixXd sample_eta1, sample_eta2;  // draws x years
};

YearEta year_eta_averages(const FitResult& fit, const PredGridSpec& grid);

struct IndexSeries {
  std::vector<int> years;
  std::vector<double> b;
  std::vector<double> b_scaled;
  std::vector<double> lo95, hi95;  // bands on the scaled series
};

IndexSeries index_series_from_etas(const YearEta& etas);
IndexSeries index_series(const FitResult& fit, const PredGridSpec& grid);

struct GearEfficiencyRow {
  std::string gear;
  double detect_pct = 0, detect_lo = 0, detect_hi = 0;  // percent
  double abund_mean = 0, abund_lo = 0, abund_hi = 0;    // linear scale
};

// Per-gear detection percentage (inverse-logit of intercept-level
// predictor plus gear effect, summarized over the mixture draws) and
// abundance gear effects on the linear scale.
std::vector<GearEfficiencyRow> gear_efficiency_summary(const FitResult& fit);

void write_surface_csv(std::ostream& out, const Surface& surface);
void write_index_csv(std::ostream& out, const IndexSeries& series);
void write_gear_csv(std::ostream& out, const std::vector<GearEfficiencyRow>& rows);

}  // namespace surveyfuse

#endif
