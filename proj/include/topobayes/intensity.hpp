#pragma once

#include "topobayes/filtration.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace topobayes {

/// Standard normal CDF and its logarithm (accurate far into the lower tail).
double normal_cdf(double t);
double log_normal_cdf(double t);

/// Mass of N(mu, var * I) on the wedge W: Phi(mu_b / sd) * Phi(mu_p / sd).
double wedge_mass(const WedgePoint& mean, double variance);
double log_wedge_mass(const WedgePoint& mean, double variance);

/// Unrestricted isotropic 2-D normal density N(x; mean, variance * I).
double normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance);
double log_normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance);

/// N(x; mean, variance * I) / wedge_mass(mean, variance) on W, 0 elsewhere.
/// Throws ValidationError for variance <= 0.
double restricted_normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance);

struct GaussianComponent {
    double weight = 0.0;   ///< expected number of points carried by this component
    WedgePoint mean;       ///< may lie outside W
    double variance = 0.0; ///< isotropic covariance variance * I

    friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

/// Intensity sum_j c_j N*(x; mu_j, var_j I) of a Poisson point process on W.
/// Each restricted component integrates to one over W, so the total mass is
/// the sum of the weights.
class GaussianMixtureIntensity {
public:
    GaussianMixtureIntensity() = default;
    /// Throws ValidationError for non-positive or non-finite weights/variances.
    explicit GaussianMixtureIntensity(std::vector<GaussianComponent> components);

    std::span<const GaussianComponent> components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    bool empty() const { return components_.empty(); }

    double total_mass() const { return total_mass_; }

    /// Intensity at x; zero outside W.
    double operator()(const WedgePoint& x) const;
    /// log of the intensity, evaluated with log-sum-exp so that values far
    /// below the double underflow threshold stay finite; -inf outside W.
    double log_eval(const WedgePoint& x) const;

    /// Every weight multiplied by `factor` (> 0).
    GaussianMixtureIntensity scaled(double factor) const;

    friend bool operator==(const GaussianMixtureIntensity& a, const GaussianMixtureIntensity& b) {
        return a.components_ == b.components_;
    }

private:
    std::vector<GaussianComponent> components_;
    // Per component: log(c_j) - log(2 pi var_j) - log Z_j, and 1 / (2 var_j).
    std::vector<double> log_coef_;
    std::vector<double> coef_;
    std::vector<double> half_precision_;
    double total_mass_ = 0.0;
};

double eval_intensity(const GaussianMixtureIntensity& g, const WedgePoint& x);
double total_mass(const GaussianMixtureIntensity& g);

/// Components of `a` followed by those of `b`.
GaussianMixtureIntensity concat(const GaussianMixtureIntensity& a, const GaussianMixtureIntensity& b);

struct GridBounds {
    double b_min = 0.0;
    double p_min = 0.0;
    double b_max = 1.0;
    double p_max = 1.0;
};

/// Node values on a uniform lattice including the bounds. `values` is
/// row-major with rows indexed by persistence and columns by birth.
struct IntensityGrid {
    GridBounds bounds;
    std::size_t n_birth = 0;
    std::size_t n_persistence = 0;
    std::vector<double> values;
    double max_intensity = 0.0; ///< unscaled maximum over the nodes

    double at(std::size_t row, std::size_t col) const { return values[row * n_birth + col]; }
    double birth_at(std::size_t col) const;
    double persistence_at(std::size_t row) const;
};

/// Throws ValidationError for bounds outside W, empty extents or a
/// resolution below 2 in either direction.
void validate_grid(const GridBounds& bounds, std::size_t n_birth, std::size_t n_persistence);

/// eval_intensity on the lattice, divided by its maximum (all zeros stay zero).
IntensityGrid intensity_grid(const GaussianMixtureIntensity& g, const GridBounds& bounds,
                             std::size_t n_birth, std::size_t n_persistence);

std::string grid_to_csv(const IntensityGrid& grid);
std::string grid_sidecar_json(const IntensityGrid& grid);

std::string mixture_to_json(const GaussianMixtureIntensity& g);
GaussianMixtureIntensity mixture_from_json(const std::string& text);
void save_mixture(const GaussianMixtureIntensity& g, const std::filesystem::path& path);
GaussianMixtureIntensity load_mixture(const std::filesystem::path& path);

} // namespace topobayes
