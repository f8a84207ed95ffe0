#ifndef SURVEYFUSE_SIMULATE_HPP
#define SURVEYFUSE_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "surveyfuse/inference.hpp"

namespace surveyfuse {

// Survey layout for one gear: either parallel transect tracks (dense,
// acoustic-like) or fixed stations (sparse, trawl-like), restricted to a
// fractional window of the domain.
struct GearLayout {
  std::string gear;
  enum class Kind { transects, stations } kind = Kind::stations;
  int count = 10;         // transect lines, or station count
  int per_transect = 10;  // samples along each transect
  double x_lo = 0.0, x_hi = 1.0;  // covered window, domain fractions
  double y_lo = 0.0, y_hi = 1.0;
};

// Generating parameters for one hurdle submodel. Empty gear_effects means
// the effects are drawn from N(0, sigma_f^2) per scenario seed.
struct SubmodelTruth {
  HyperParams hyper;
  std::vector<double> beta;  // one per species
  std::vector<double> gear_effects;
};

struct SimScenario {
  std::vector<std::string> species{"SP1"};
  int year_min = 2001;
  int n_years = 5;
  FieldVariant variant = FieldVariant::spatiotemporal;
  double domain_width = 100.0;   // km
  double domain_height = 100.0;  // km
  double mesh_inner_max_edge = 10.0;
  double mesh_outer_extension = 30.0;
  double mesh_outer_max_edge = 20.0;
  std::vector<GearLayout> layouts;
  SubmodelTruth detection;
  SubmodelTruth abundance;
  std::uint64_t seed = 1;

  std::vector<std::string> gear_names() const;
};

// Realized per-replicate truths (needed when effects are drawn).
struct SimTruth {
  std::vector<double> gear_effects_detection;
  std::vector<double> gear_effects_abundance;
  Eigen::VectorXd field_detection;
  Eigen::VectorXd field_abundance;
};

struct SimResult {
  std::vector<HaulRecord> records;
  Mesh mesh;  // the mesh the fields were drawn on; reuse it when fitting
  SimTruth truth;
};

std::vector<std::array<double, 2>> layout_locations(const GearLayout& layout,
                                                    double width, double height);

// Forward model: draw the latent fields on the scenario mesh, evaluate
// the predictors at every survey location, then Bernoulli detection and
// lognormal abundance. All draws flow from one stream per scenario.
SimResult simulate_survey(const SimScenario& scenario);

struct ParamRecovery {
  std::string name;  // e.g. "detection:rho", "abundance:gear:AS"
  double truth = 0;
  double mean = 0;
  double sd = 0;
  double lo95 = 0, hi95 = 0;
  bool covered = false;
};

struct ReplicateReport {
  int replicate = 0;
  FieldVariant variant = FieldVariant::spatiotemporal;
  std::string gear_subset;  // "combined" or a single gear code
  bool ok = false;
  std::string error;
  double waic_total = 0;
  double waic_detection = 0, waic_abundance = 0;
  std::vector<ParamRecovery> params;
};

struct RecoveryConfig {
  int n_replicates = 10;
  std::vector<FieldVariant> variants{FieldVariant::spatiotemporal};
  bool per_gear_subsets = false;  // additionally fit each gear alone
  FitSettings fit;                // inference settings; spec filled per run
  int threads = 1;                // across replicates
};

struct RecoveryReport {
  std::vector<ReplicateReport> rows;
};

// Simulates `n_replicates` datasets from the scenario (seeds derived from
// the scenario seed) and fits each with the requested variants and gear
// subsets, recording truth, posterior summaries and coverage. Individual
// fit failures are recorded, not fatal.
RecoveryReport recovery_report(const SimScenario& scenario,
                               const RecoveryConfig& config);

}  // namespace surveyfuse

#endif
