#pragma once

#include "topobayes/filtration.hpp"
#include "topobayes/intensity.hpp"

#include <filesystem>
#include <span>
#include <string>

namespace topobayes {

/// Observation model: each prior feature is observed with probability
/// `alpha`; an observed feature at x is reported at y with likelihood
/// N*(y; x, sigma_obs I); unassociated observed points follow `clutter`.
struct PosteriorConfig {
    double alpha = 0.7;
    double sigma_obs = 0.1;
    GaussianMixtureIntensity clutter = default_clutter();

    /// Weight 0.1 on N*((3, 3), 20 I).
    static GaussianMixtureIntensity default_clutter();

    /// Throws ValidationError unless alpha is in [0, 1] and sigma_obs > 0.
    void validate() const;
};

/// l(y | x) = N(y; x, sigma_obs I) / wedge_mass(y, sigma_obs) for x, y in W
/// and 0 otherwise. The normalizer is taken at y, which keeps the product
/// with a Gaussian prior exactly Gaussian in x.
double observation_likelihood(const WedgePoint& y, const WedgePoint& x, double sigma_obs);

/// Evidence of y under one prior component: the integral over W of
/// l(y | u) N*(u; mean, variance I) du, in log form.
double log_component_evidence(const WedgePoint& y, const GaussianComponent& component, double sigma_obs);

struct PruneOptions {
    double relative_weight_floor = 1e-10; ///< relative to the posterior total mass
    std::size_t max_components = 200000;
};

/// Closed-form Gaussian-mixture posterior intensity given m observed
/// diagrams. Output layout: the prior components scaled by (1 - alpha),
/// then one component per (diagram, point, prior component) in that order,
/// after pruning. Throws ValidationError for m = 0 or an invalid config.
GaussianMixtureIntensity posterior_intensity(const GaussianMixtureIntensity& prior,
                                             std::span<const PersistenceDiagram> observations,
                                             const PosteriorConfig& cfg,
                                             const PruneOptions& prune = {});

struct QuadratureOptions {
    /// Integration cells per unit of the smallest relevant standard deviation.
    double cells_per_sd = 16.0;
    std::size_t max_cells_per_axis = 6000;
};

/// Direct numerical evaluation of the posterior intensity operator on the
/// nodes of `bounds` (raw values, not rescaled). The per-observation
/// normalizer integral is a midpoint-rule sum over [0, B]^2 with B large
/// enough to hold all but ~1e-8 of the prior and likelihood mass. Requires
/// at least 32 nodes per axis.
IntensityGrid posterior_quadrature(const GaussianMixtureIntensity& prior,
                                   std::span<const PersistenceDiagram> observations,
                                   const PosteriorConfig& cfg, const GridBounds& bounds,
                                   std::size_t n_birth, std::size_t n_persistence,
                                   const QuadratureOptions& options = {});

/// Raw (unscaled) intensity values on the lattice of `bounds`.
IntensityGrid sample_intensity(const GaussianMixtureIntensity& g, const GridBounds& bounds,
                               std::size_t n_birth, std::size_t n_persistence);

std::string config_to_json(const PosteriorConfig& cfg);
PosteriorConfig config_from_json(const std::string& text);
PosteriorConfig load_config(const std::filesystem::path& path);

} // namespace topobayes
