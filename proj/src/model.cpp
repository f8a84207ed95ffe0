#include "surveyfuse/model.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>

namespace surveyfuse {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log1p_exp(double x) {
  // log(1 + e^x) without overflow
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
}  // namespace

FieldVariant parse_variant(const std::string& name) {
  if (name == "none") return FieldVariant::none;
  if (name == "spatial") return FieldVariant::spatial;
  if (name == "temporal") return FieldVariant::temporal;
  if (name == "spatiotemporal") return FieldVariant::spatiotemporal;
  throw ValidationError("unknown model variant '" + name +
                        "' (expected none|spatial|temporal|spatiotemporal)");
}

std::string variant_name(FieldVariant v) {
  switch (v) {
    case FieldVariant::none: return "none";
    case FieldVariant::spatial: return "spatial";
    case FieldVariant::temporal: return "temporal";
    case FieldVariant::spatiotemporal: return "spatiotemporal";
  }
  return "?";
}

void HurdleModelSpec::normalize() {
  if (species.empty()) throw ValidationError("species catalog is empty");
  if (gears.empty()) throw ValidationError("gear catalog is empty");
  if (year_max < year_min) throw ValidationError("year_max before year_min");
  if (n_gears() == 1) include_gear_effect = false;
}

LatentLayout LatentLayout::make(const HurdleModelSpec& spec, bool gear_effect,
                                int mesh_nodes) {
  LatentLayout l;
  l.n_species = spec.n_species();
  l.n_gears = gear_effect ? spec.n_gears() : 0;
  l.mesh_nodes = mesh_nodes;
  l.n_years = spec.n_years();
  l.variant = spec.variant;
  switch (spec.variant) {
    case FieldVariant::none: l.field_dim = 0; break;
    case FieldVariant::spatial: l.field_dim = mesh_nodes; break;
    case FieldVariant::temporal: l.field_dim = l.n_years; break;
    case FieldVariant::spatiotemporal: l.field_dim = l.n_years * mesh_nodes; break;
  }
  return l;
}

Eigen::VectorXd LatentState::flatten() const {
  Eigen::VectorXd x(beta.size() + gear_effects.size() + field_weights.size());
  x << beta, gear_effects, field_weights;
  return x;
}

LatentState LatentState::unflatten(const Eigen::VectorXd& x,
                                   const LatentLayout& layout) {
  LatentState s;
  s.beta = x.segment(layout.beta_offset(), layout.n_species);
  s.gear_effects = x.segment(layout.gear_offset(), layout.n_gears);
  s.field_weights = x.segment(layout.field_offset(), layout.field_dim);
  return s;
}

double linear_predictor(const LatentState& state, const LatentLayout& layout,
                        int species_idx, int gear_idx, int year_slot,
                        const Eigen::SparseVector<double>& a_row) {
  if (species_idx < 0 || species_idx >= layout.n_species)
    throw ValidationError("linear predictor: species index out of range");
  double eta = state.beta[species_idx];
  if (layout.n_gears > 0) {
    if (gear_idx < 0 || gear_idx >= layout.n_gears)
      throw ValidationError("linear predictor: gear index out of range");
    eta += state.gear_effects[gear_idx];
  }
  switch (layout.variant) {
    case FieldVariant::none:
      break;
    case FieldVariant::spatial:
      for (Eigen::SparseVector<double>::InnerIterator it(a_row); it; ++it)
        eta += it.value() * state.field_weights[it.index()];
      break;
    case FieldVariant::temporal:
      eta += state.field_weights[year_slot];
      break;
    case FieldVariant::spatiotemporal: {
      const int base = year_slot * layout.mesh_nodes;
      for (Eigen::SparseVector<double>::InnerIterator it(a_row); it; ++it)
        eta += it.value() * state.field_weights[base + it.index()];
      break;
    }
  }
  return eta;
}

double detection_loglik(const Eigen::VectorXi& z, const Eigen::VectorXd& eta) {
  if (z.size() != eta.size())
    throw ValidationError("detection loglik: length mismatch");
  double ll = 0.0;
  for (int i = 0; i < z.size(); ++i)
    ll += z[i] * eta[i] - log1p_exp(eta[i]);
  return ll;
}

double abundance_loglik(const Eigen::VectorXd& log_y, const Eigen::VectorXd& eta,
                        double sigma_e) {
  if (sigma_e <= 0) throw ValidationError("abundance loglik: sigma_e must be positive");
  if (log_y.size() != eta.size())
    throw ValidationError("abundance loglik: length mismatch");
  const double inv_var = 1.0 / (sigma_e * sigma_e);
  double ll = 0.0;
  for (int i = 0; i < log_y.size(); ++i) {
    const double r = log_y[i] - eta[i];
    ll += -0.5 * (kLog2Pi + 2.0 * std::log(sigma_e) + r * r * inv_var);
  }
  return ll;
}

double hurdle_loglik(const HurdleTables& tables, const Eigen::VectorXd& eta1,
                     const Eigen::VectorXd& eta2_positive, double sigma_e) {
  Eigen::VectorXi z(tables.detection.z.size());
  for (size_t i = 0; i < tables.detection.z.size(); ++i)
    z[static_cast<int>(i)] = tables.detection.z[i];
  Eigen::VectorXd log_y(tables.abundance.log_value.size());
  for (size_t i = 0; i < tables.abundance.log_value.size(); ++i)
    log_y[static_cast<int>(i)] = tables.abundance.log_value[i];
  return detection_loglik(z, eta1) + abundance_loglik(log_y, eta2_positive, sigma_e);
}

int HyperSpace::dim() const {
  return static_cast<int>(has_sigma_e) + has_sigma_f + has_sigma_omega +
         has_rho + has_kappa;
}

std::vector<std::string> HyperSpace::names() const {
  std::vector<std::string> n;
  if (has_sigma_e) n.push_back("sigma_e");
  if (has_sigma_f) n.push_back("sigma_f");
  if (has_sigma_omega) n.push_back("sigma_omega");
  if (has_rho) n.push_back("rho");
  if (has_kappa) n.push_back("kappa");
  return n;
}

Eigen::VectorXd HyperSpace::to_internal(const HyperParams& h) const {
  Eigen::VectorXd u(dim());
  int k = 0;
  if (has_sigma_e) u[k++] = std::log(h.sigma_e);
  if (has_sigma_f) u[k++] = std::log(h.sigma_f);
  if (has_sigma_omega) u[k++] = std::log(h.sigma_omega);
  if (has_rho) u[k++] = std::atanh(h.rho);
  if (has_kappa) u[k++] = std::log(h.kappa);
  return u;
}

HyperParams HyperSpace::from_internal(const Eigen::VectorXd& u,
                                      const HyperParams& base) const {
  if (u.size() != dim())
    throw ValidationError("hyper vector dimension mismatch");
  HyperParams h = base;
  int k = 0;
  if (has_sigma_e) h.sigma_e = std::exp(u[k++]);
  if (has_sigma_f) h.sigma_f = std::exp(u[k++]);
  if (has_sigma_omega) h.sigma_omega = std::exp(u[k++]);
  if (has_rho) h.rho = std::tanh(u[k++]);
  if (has_kappa) h.kappa = std::exp(u[k++]);
  return h;
}

namespace {
// logGamma(1, b) on the log precision theta = -2 log(sigma), expressed in
// u = log(sigma): |d theta / d u| = 2
double log_precision_prior(double u, double rate) {
  const double theta = -2.0 * u;
  return std::log(rate) + theta - rate * std::exp(theta) + std::log(2.0);
}

double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}
}  // namespace

double HyperSpace::log_prior_internal(const Eigen::VectorXd& u,
                                      const HyperPriors& priors) const {
  if (u.size() != dim())
    throw ValidationError("hyper vector dimension mismatch");
  double lp = 0.0;
  int k = 0;
  if (has_sigma_e) lp += log_precision_prior(u[k++], priors.precision_rate);
  if (has_sigma_f) lp += log_precision_prior(u[k++], priors.precision_rate);
  if (has_sigma_omega) lp += log_precision_prior(u[k++], priors.precision_rate);
  if (has_rho) {
    // paper transform log((1+rho)/(1-rho)) = 2 z with z the Fisher-z coord
    const double w = 2.0 * u[k++];
    lp += normal_logpdf(w, 0.0, priors.rho_variance) + std::log(2.0);
  }
  if (has_kappa)
    lp += normal_logpdf(u[k++], priors.kappa_mean, priors.kappa_sd * priors.kappa_sd);
  return lp;
}

HyperSpace HyperSpace::for_submodel(bool gaussian_noise, bool gear_effect,
                                    FieldVariant variant) {
  HyperSpace s;
  s.has_sigma_e = gaussian_noise;
  s.has_sigma_f = gear_effect;
  s.has_sigma_omega = variant != FieldVariant::none;
  s.has_rho = variant == FieldVariant::temporal ||
              variant == FieldVariant::spatiotemporal;
  s.has_kappa = variant == FieldVariant::spatial ||
                variant == FieldVariant::spatiotemporal;
  return s;
}

double log_prior_hyper(const HyperParams& h, const HyperSpace& space,
                       const HyperPriors& priors) {
  if (h.sigma_e <= 0 || h.sigma_f <= 0 || h.sigma_omega <= 0 || h.kappa <= 0 ||
      std::abs(h.rho) >= 1.0)
    throw ValidationError("hyperparameters outside support");
  return space.log_prior_internal(space.to_internal(h), priors);
}

SparsePrecision latent_prior_precision(const LatentLayout& layout,
                                       const HyperParams& hyper,
                                       const FemMatrices* fem,
                                       double beta_prior_variance) {
  std::vector<Eigen::Triplet<double>> trips;
  const double beta_prec = 1.0 / beta_prior_variance;
  for (int i = 0; i < layout.n_species; ++i)
    trips.emplace_back(i, i, beta_prec);
  const double gear_prec = 1.0 / (hyper.sigma_f * hyper.sigma_f);
  for (int i = 0; i < layout.n_gears; ++i) {
    const int k = layout.gear_offset() + i;
    trips.emplace_back(k, k, gear_prec);
  }

  const int off = layout.field_offset();
  if (layout.variant == FieldVariant::temporal) {
    // unit-variance AR1 scaled to marginal sd sigma_omega
    SpMat ar1 = ar1_precision_matrix({hyper.rho, layout.n_years});
    const double s = 1.0 / (hyper.sigma_omega * hyper.sigma_omega);
    for (int k = 0; k < ar1.outerSize(); ++k)
      for (SpMat::InnerIterator it(ar1, k); it; ++it)
        trips.emplace_back(off + it.row(), off + it.col(), s * it.value());
  } else if (layout.variant == FieldVariant::spatial ||
             layout.variant == FieldVariant::spatiotemporal) {
    if (fem == nullptr)
      throw ValidationError("spatial variants require FEM matrices");
    const auto matern =
        MaternParams::from_range_sigma(std::sqrt(8.0) / hyper.kappa, hyper.sigma_omega);
    SpMat field = spde_precision_matrix(*fem, matern);
    if (layout.variant == FieldVariant::spatiotemporal) {
      SpMat qt = ar1_precision_matrix({hyper.rho, layout.n_years});
      field = Eigen::kroneckerProduct(qt, field).eval();
    }
    for (int k = 0; k < field.outerSize(); ++k)
      for (SpMat::InnerIterator it(field, k); it; ++it)
        trips.emplace_back(off + it.row(), off + it.col(), it.value());
  }

  SpMat q(layout.total(), layout.total());
  q.setFromTriplets(trips.begin(), trips.end());
  return SparsePrecision(std::move(q));
}

SpMatRow build_design(const DesignIndex& index, const std::vector<int>& rows,
                      const LatentLayout& layout, const SpMatRow& projection) {
  const int n = static_cast<int>(rows.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * 5);
  for (int r = 0; r < n; ++r) {
    const int rec = rows[r];
    trips.emplace_back(r, layout.beta_offset() + index.species[rec], 1.0);
    if (layout.n_gears > 0)
      trips.emplace_back(r, layout.gear_offset() + index.gear[rec], 1.0);
    switch (layout.variant) {
      case FieldVariant::none:
        break;
      case FieldVariant::temporal:
        trips.emplace_back(r, layout.field_offset() + index.year_slot[rec], 1.0);
        break;
      case FieldVariant::spatial:
        for (SpMatRow::InnerIterator it(projection, rec); it; ++it)
          trips.emplace_back(r, layout.field_offset() + it.col(), it.value());
        break;
      case FieldVariant::spatiotemporal: {
        const int base = layout.field_offset() +
                         index.year_slot[rec] * layout.mesh_nodes;
        for (SpMatRow::InnerIterator it(projection, rec); it; ++it)
          trips.emplace_back(r, base + it.col(), it.value());
        break;
      }
    }
  }
  SpMatRow b(n, layout.total());
  b.setFromTriplets(trips.begin(), trips.end());
  return b;
}

double inverse_logit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

PredictionCell make_prediction_cell(double x, double y, int year, double eta1,
                                    double eta2) {
  PredictionCell c;
  c.x = x;
  c.y = y;
  c.year = year;
  c.eta1 = eta1;
  c.eta2 = eta2;
  c.p = inverse_logit(eta1);
  c.mu = std::exp(eta2);
  c.theta = c.mu * c.p;
  return c;
}

}  // namespace surveyfuse
