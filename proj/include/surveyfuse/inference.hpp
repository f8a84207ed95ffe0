#ifndef SURVEYFUSE_INFERENCE_HPP
#define SURVEYFUSE_INFERENCE_HPP

#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surveyfuse/data_io.hpp"
#include "surveyfuse/gmrf.hpp"
#include "surveyfuse/model.hpp"

namespace surveyfuse {

// Per-record observation family for one hurdle submodel.
struct ObsLikelihood {
  enum class Family { bernoulli, gaussian };
  Family family = Family::gaussian;
  Eigen::VectorXd y;  // z in {0,1} or log-abundance

  double loglik(const Eigen::VectorXd& eta, double sigma) const;
  // grad = d loglik / d eta, neg_hess = -d^2 loglik / d eta^2, per record
  void derivatives(const Eigen::VectorXd& eta, double sigma,
                   Eigen::VectorXd& grad, Eigen::VectorXd& neg_hess) const;
  double point_logdensity(int i, double eta_i, double sigma) const;
  int size() const { return static_cast<int>(y.size()); }
};

struct NewtonSettings {
  double grad_tol = 1e-6;
  int max_iter = 50;
  double min_weight = 1e-10;  // floor for the likelihood curvature
};

// Gaussian approximation to the latent conditional at fixed
// hyperparameters: mode of loglik(x) - x'Qx/2 and curvature Q* there.
struct GaussianApprox {
  Eigen::VectorXd mode;
  std::shared_ptr<SparsePrecision> precision;  // Q* = Q + B' W B
  double loglik_at_mode = 0.0;
  double prior_quad = 0.0;  // mode' Q_prior mode
  int iterations = 0;
};

GaussianApprox gaussian_approx(const ObsLikelihood& lik, double sigma,
                               const SparsePrecision& prior,
                               const SpMatRow& design,
                               const Eigen::VectorXd& init,
                               const NewtonSettings& settings = {});

// One submodel's fitting problem: data, design, latent layout, and the
// hyperparameter space with its priors.
struct SubmodelProblem {
  ObsLikelihood lik;
  SpMatRow design;
  LatentLayout layout;
  HyperSpace hspace;
  HyperPriors priors;
  std::shared_ptr<const FemMatrices> fem;  // spatial variants only
  HyperParams base;                        // values of inactive hypers
  double beta_prior_variance = 1000.0;

  SparsePrecision prior_precision(const HyperParams& h) const;
  // log pi(y | x*) - x*'Qx*/2 + log|Q|/2 - log|Q*|/2 + log prior(u),
  // exact for Gaussian likelihoods
  double log_posterior(const Eigen::VectorXd& u, const NewtonSettings& settings,
                       GaussianApprox* approx_out = nullptr,
                       const Eigen::VectorXd* warm_start = nullptr) const;
};

struct InferenceSettings {
  NewtonSettings newton;
  int max_hyper_evals = 200;
  double step_tol = 1e-4;
  double hessian_rel_step = 1e-3;
  double grid_step = 1.0;    // sd units in standardized coordinates
  double grid_cutoff = 5.0;  // log-posterior drop from the mode
  int grid_max_points = 4000;
  int n_samples = 200;  // mixture draws for WAIC / prediction
  int threads = 1;
};

struct OptimResult {
  Eigen::VectorXd mode;
  double log_post = 0.0;
  bool converged = false;
  int n_eval = 0;
  std::string message;
};

// Quasi-Newton ascent on the internal hyperparameter scale.
OptimResult optimize_hyper(const SubmodelProblem& problem,
                           const Eigen::VectorXd& start,
                           const InferenceSettings& settings);

struct HyperGridPoint {
  Eigen::VectorXd u;  // internal-scale hyperparameters
  double log_post = 0.0;
  double weight = 0.0;
  Eigen::VectorXd latent_mode;
  Eigen::VectorXd latent_sd;
};

// Axis-aligned lattice in standardized coordinates around the mode,
// stepping grid_step sds and dropping points more than grid_cutoff
// log-units below the mode. Falls back to the mode alone when the
// finite-difference curvature is indefinite.
std::vector<HyperGridPoint> explore_hyper(const SubmodelProblem& problem,
                                          const Eigen::VectorXd& mode,
                                          const InferenceSettings& settings,
                                          std::vector<std::string>& warnings,
                                          Eigen::VectorXd* curvature_sd = nullptr);

struct MarginalSummary {
  double mean = 0.0;
  double sd = 0.0;
};

// Gaussian-mixture moments across the grid.
std::vector<MarginalSummary> latent_marginals(
    const std::vector<HyperGridPoint>& grid);

struct WaicResult {
  double waic = 0.0;
  double p_eff = 0.0;
  double lppd = 0.0;
};

// lpd: samples x records matrix of pointwise log predictive densities.
WaicResult compute_waic(const Eigen::MatrixXd& lpd);

struct HyperSummary {
  std::string name;
  double mean = 0.0;  // natural scale
  double sd = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

struct SubmodelFit {
  LatentLayout layout;
  HyperSpace hspace;
  std::vector<HyperGridPoint> grid;
  std::vector<HyperSummary> hyper;
  std::vector<MarginalSummary> latent;
  WaicResult waic;
  Eigen::MatrixXd latent_samples;      // n_samples x latent dim
  std::vector<double> sample_sigma_e;  // per sample, gaussian family only
  bool hyper_converged = true;
  int n_grid_points = 0;
  std::vector<std::string> warnings;
};

struct FitSettings {
  HurdleModelSpec spec;
  double reference_lat = 0.0;  // 0 = use the data mean latitude
  double mesh_inner_max_edge = 50.0;
  double mesh_outer_extension = 100.0;
  double mesh_outer_max_edge = 100.0;
  std::optional<Mesh> mesh;  // overrides mesh construction when present
  HyperPriors priors;
  HyperParams start;  // optimizer start on the natural scale
  InferenceSettings inference;
  double beta_prior_variance = 1000.0;
  std::uint64_t seed = 1;
};

struct FitResult {
  HurdleModelSpec spec;
  SubmodelFit detection;
  SubmodelFit abundance;
  double waic_total = 0.0;
  Mesh mesh;
  std::vector<std::array<double, 2>> data_hull;  // prediction clip region
  int n_records = 0;
  int n_positive = 0;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;  // excluded from serialized summaries
  std::vector<std::string> warnings;
};

// Full nested pipeline: hurdle split, both submodels through mode
// finding, grid exploration, mixture marginals, posterior sampling, WAIC.
FitResult fit(const FitSettings& settings, const std::vector<HaulRecord>& records);

}  // namespace surveyfuse

#endif
