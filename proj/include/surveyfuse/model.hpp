#ifndef SURVEYFUSE_MODEL_HPP
#define SURVEYFUSE_MODEL_HPP

#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "surveyfuse/data_io.hpp"
#include "surveyfuse/gmrf.hpp"

namespace surveyfuse {

using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class FieldVariant { none, spatial, temporal, spatiotemporal };

FieldVariant parse_variant(const std::string& name);
std::string variant_name(FieldVariant v);

// Model-variant configuration shared by both hurdle submodels.
struct HurdleModelSpec {
  std::vector<std::string> species;
  std::vector<std::string> gears;
  int year_min = 0;
  int year_max = 0;
  FieldVariant variant = FieldVariant::spatiotemporal;
  bool include_gear_effect = true;  // forced off for single-survey fits

  int n_species() const { return static_cast<int>(species.size()); }
  int n_gears() const { return static_cast<int>(gears.size()); }
  int n_years() const { return year_max - year_min + 1; }
  // enforces the single-survey rule and basic sanity
  void normalize();
};

// Hyperparameters on the natural scale. sigma_e applies to the abundance
// submodel only; which of the rest are active depends on the variant.
struct HyperParams {
  double sigma_e = 1.0;      // nugget sd
  double sigma_f = 1.0;      // gear-effect sd
  double sigma_omega = 1.0;  // field marginal sd
  double rho = 0.0;          // AR1 coefficient
  double kappa = 1.0;        // Matern scale, 1/km
};

// Block layout of the latent vector: [beta | gear effects | field weights].
struct LatentLayout {
  int n_species = 0;
  int n_gears = 0;  // 0 when gear effects are excluded
  int field_dim = 0;
  int mesh_nodes = 0;
  int n_years = 0;
  FieldVariant variant = FieldVariant::none;

  int beta_offset() const { return 0; }
  int gear_offset() const { return n_species; }
  int field_offset() const { return n_species + n_gears; }
  int total() const { return n_species + n_gears + field_dim; }

  static LatentLayout make(const HurdleModelSpec& spec, bool gear_effect,
                           int mesh_nodes);
};

// Latent effects in named blocks; `flatten`/`unflatten` convert to the
// packed vector used by the inference machinery.
struct LatentState {
  Eigen::VectorXd beta;
  Eigen::VectorXd gear_effects;
  Eigen::VectorXd field_weights;

  Eigen::VectorXd flatten() const;
  static LatentState unflatten(const Eigen::VectorXd& x, const LatentLayout& layout);
};

// eta = beta_species + f_gear (if enabled) + a_row . field weights of the
// record's year block.
double linear_predictor(const LatentState& state, const LatentLayout& layout,
                        int species_idx, int gear_idx, int year_slot,
                        const Eigen::SparseVector<double>& a_row);

// Bernoulli-logit log likelihood, overflow safe.
double detection_loglik(const Eigen::VectorXi& z, const Eigen::VectorXd& eta);
// Gaussian log likelihood of log-abundance at mean eta.
double abundance_loglik(const Eigen::VectorXd& log_y, const Eigen::VectorXd& eta,
                        double sigma_e);
// Split-sum hurdle log likelihood: detection over all records plus
// abundance over the positive ones (the submodels share no parameters).
double hurdle_loglik(const HurdleTables& tables, const Eigen::VectorXd& eta1,
                     const Eigen::VectorXd& eta2_positive, double sigma_e);

// Hyperprior settings (defaults follow the engine's standing choices:
// logGamma(1, 5e-5) on log precisions, N(0,1) on log kappa, N(0, 0.45
// variance) on log((1+rho)/(1-rho))).
struct HyperPriors {
  double precision_rate = 5e-5;  // rate b of the logGamma(1, b) prior
  double kappa_mean = 0.0;
  double kappa_sd = 1.0;
  double rho_variance = 0.45;
};

// Which hyperparameters a submodel carries, plus the internal transform
// (log sd, Fisher-z, log kappa) used by the optimizer and grid.
struct HyperSpace {
  bool has_sigma_e = false;
  bool has_sigma_f = false;
  bool has_sigma_omega = false;
  bool has_rho = false;
  bool has_kappa = false;

  int dim() const;
  std::vector<std::string> names() const;
  Eigen::VectorXd to_internal(const HyperParams& h) const;
  HyperParams from_internal(const Eigen::VectorXd& u, const HyperParams& base = {}) const;
  // log prior density in the internal parameterization (Jacobians included)
  double log_prior_internal(const Eigen::VectorXd& u, const HyperPriors& priors) const;

  static HyperSpace for_submodel(bool gaussian_noise, bool gear_effect,
                                 FieldVariant variant);
};

double log_prior_hyper(const HyperParams& h, const HyperSpace& space,
                       const HyperPriors& priors);

// Block-diagonal prior precision over the latent vector: vague Gaussian on
// beta, iid N(0, sigma_f^2) on gear effects, variant-dependent field block.
SparsePrecision latent_prior_precision(const LatentLayout& layout,
                                       const HyperParams& hyper,
                                       const FemMatrices* fem,
                                       double beta_prior_variance = 1000.0);

// Sparse design matrix mapping the latent vector to per-record predictors.
SpMatRow build_design(const DesignIndex& index, const std::vector<int>& rows,
                      const LatentLayout& layout, const SpMatRow& projection);

struct PredictionCell {
  double x = 0, y = 0;
  int year = 0;
  double eta1 = 0, eta2 = 0;
  double p = 0;      // inverse-logit(eta1)
  double mu = 0;     // exp(eta2)
  double theta = 0;  // mu * p
};

PredictionCell make_prediction_cell(double x, double y, int year, double eta1,
                                    double eta2);

double inverse_logit(double eta);

}  // namespace surveyfuse

#endif
