#include "topobayes/posterior.hpp"

#include "json_detail.hpp"
#include "topobayes/errors.hpp"
#include "topobayes/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace topobayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) {
        return b;
    }
    if (b == kNegInf) {
        return a;
    }
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

void check_observations(std::span<const PersistenceDiagram> observations) {
    if (observations.empty()) {
        throw ValidationError("posterior needs at least one observed diagram (m >= 1)");
    }
    // PersistenceDiagram already guarantees its points lie in W.
}

std::vector<GaussianComponent> prune(std::vector<GaussianComponent> comps, const PruneOptions& opts) {
    double mass = 0.0;
    for (const auto& c : comps) {
        mass += c.weight;
    }
    const double floor = opts.relative_weight_floor * mass;
    std::erase_if(comps, [&](const GaussianComponent& c) { return !(c.weight >= floor); });
    if (comps.size() <= opts.max_components) {
        return comps;
    }
    std::vector<std::size_t> idx(comps.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return comps[a].weight > comps[b].weight; });
    idx.resize(opts.max_components);
    std::sort(idx.begin(), idx.end());
    std::vector<GaussianComponent> kept;
    kept.reserve(idx.size());
    for (std::size_t i : idx) {
        kept.push_back(comps[i]);
    }
    return kept;
}

} // namespace

GaussianMixtureIntensity PosteriorConfig::default_clutter() {
    return GaussianMixtureIntensity({{0.1, {3.0, 3.0}, 20.0}});
}

void PosteriorConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("alpha must lie in [0, 1]");
    }
    if (!(sigma_obs > 0.0) || !std::isfinite(sigma_obs)) {
        throw ValidationError("sigma_obs must be positive and finite");
    }
}

double observation_likelihood(const WedgePoint& y, const WedgePoint& x, double sigma_obs) {
    if (!in_wedge(y) || !in_wedge(x)) {
        return 0.0;
    }
    return std::exp(log_normal_pdf(y, x, sigma_obs) - log_wedge_mass(y, sigma_obs));
}

double log_component_evidence(const WedgePoint& y, const GaussianComponent& component, double sigma_obs) {
    const double s = component.variance + sigma_obs;
    const double post_var = component.variance * sigma_obs / s;
    const WedgePoint post_mean{(sigma_obs * component.mean.birth + component.variance * y.birth) / s,
                               (sigma_obs * component.mean.persistence + component.variance * y.persistence) / s};
    return log_normal_pdf(y, component.mean, s) + log_wedge_mass(post_mean, post_var) -
           log_wedge_mass(component.mean, component.variance) - log_wedge_mass(y, sigma_obs);
}

GaussianMixtureIntensity posterior_intensity(const GaussianMixtureIntensity& prior,
                                             std::span<const PersistenceDiagram> observations,
                                             const PosteriorConfig& cfg, const PruneOptions& prune_opts) {
    cfg.validate();
    check_observations(observations);

    const double alpha = cfg.alpha;
    const double m = static_cast<double>(observations.size());
    const auto prior_comps = prior.components();

    std::vector<GaussianComponent> out;
    if (alpha < 1.0) {
        for (const auto& c : prior_comps) {
            out.push_back({(1.0 - alpha) * c.weight, c.mean, c.variance});
        }
    }
    if (alpha == 0.0 || prior_comps.empty()) {
        return GaussianMixtureIntensity(prune(std::move(out), prune_opts));
    }

    const double log_alpha = std::log(alpha);
    const double log_scale = std::log(alpha / m);
    std::vector<double> log_terms(prior_comps.size());

    for (const auto& diagram : observations) {
        for (const auto& y : diagram.points()) {
            // log(c_k q_k(y)) for every prior component, then the normalizer
            // lambda_clutter(y) + alpha sum_k c_k q_k(y).
            double log_norm = cfg.clutter.log_eval(y);
            for (std::size_t k = 0; k < prior_comps.size(); ++k) {
                log_terms[k] = std::log(prior_comps[k].weight) +
                               log_component_evidence(y, prior_comps[k], cfg.sigma_obs);
                log_norm = log_add(log_norm, log_alpha + log_terms[k]);
            }
            for (std::size_t k = 0; k < prior_comps.size(); ++k) {
                const auto& c = prior_comps[k];
                const double s = c.variance + cfg.sigma_obs;
                const double weight = std::exp(log_scale + log_terms[k] - log_norm);
                if (!(weight > 0.0)) {
                    continue;
                }
                out.push_back({weight,
                               {(cfg.sigma_obs * c.mean.birth + c.variance * y.birth) / s,
                                (cfg.sigma_obs * c.mean.persistence + c.variance * y.persistence) / s},
                               c.variance * cfg.sigma_obs / s});
            }
        }
    }
    return GaussianMixtureIntensity(prune(std::move(out), prune_opts));
}

IntensityGrid sample_intensity(const GaussianMixtureIntensity& g, const GridBounds& bounds,
                               std::size_t n_birth, std::size_t n_persistence) {
    validate_grid(bounds, n_birth, n_persistence);
    IntensityGrid grid;
    grid.bounds = bounds;
    grid.n_birth = n_birth;
    grid.n_persistence = n_persistence;
    grid.values.resize(n_birth * n_persistence);
    for (std::size_t r = 0; r < n_persistence; ++r) {
        for (std::size_t c = 0; c < n_birth; ++c) {
            grid.values[r * n_birth + c] = g({grid.birth_at(c), grid.persistence_at(r)});
        }
    }
    grid.max_intensity = *std::max_element(grid.values.begin(), grid.values.end());
    return grid;
}

IntensityGrid posterior_quadrature(const GaussianMixtureIntensity& prior,
                                   std::span<const PersistenceDiagram> observations,
                                   const PosteriorConfig& cfg, const GridBounds& bounds,
                                   std::size_t n_birth, std::size_t n_persistence,
                                   const QuadratureOptions& options) {
    cfg.validate();
    check_observations(observations);
    validate_grid(bounds, n_birth, n_persistence);
    if (n_birth < 32 || n_persistence < 32) {
        throw ValidationError("quadrature grid too coarse: need at least 32 nodes per axis");
    }

    std::vector<WedgePoint> ys;
    for (const auto& d : observations) {
        ys.insert(ys.end(), d.points().begin(), d.points().end());
    }
    const double alpha = cfg.alpha;
    const double m = static_cast<double>(observations.size());

    // Integration box [0, B]^2 and step.
    constexpr double kTailSd = 6.5;
    const double sd_obs = std::sqrt(cfg.sigma_obs);
    double extent = 0.0;
    double min_sd = sd_obs;
    for (const auto& c : prior.components()) {
        const double sd = std::sqrt(c.variance);
        extent = std::max({extent, c.mean.birth + kTailSd * sd, c.mean.persistence + kTailSd * sd});
        min_sd = std::min(min_sd, std::sqrt(c.variance * cfg.sigma_obs / (c.variance + cfg.sigma_obs)));
    }
    for (const auto& y : ys) {
        extent = std::max({extent, y.birth + kTailSd * sd_obs, y.persistence + kTailSd * sd_obs});
    }
    extent = std::max(extent, kTailSd * sd_obs);
    const auto cells = static_cast<std::size_t>(std::clamp(
        std::ceil(extent / (min_sd / options.cells_per_sd)), 64.0, static_cast<double>(options.max_cells_per_axis)));
    const double h = extent / static_cast<double>(cells);

    // integral_W l(y|u) alpha lambda(u) du for every observed point.
    std::vector<double> evidence(ys.size(), 0.0);
    if (alpha > 0.0 && !ys.empty()) {
        for (std::size_t i = 0; i < cells; ++i) {
            const double ub = (static_cast<double>(i) + 0.5) * h;
            for (std::size_t j = 0; j < cells; ++j) {
                const WedgePoint u{ub, (static_cast<double>(j) + 0.5) * h};
                const double lam = prior(u);
                if (lam == 0.0) {
                    continue;
                }
                for (std::size_t k = 0; k < ys.size(); ++k) {
                    evidence[k] += observation_likelihood(ys[k], u, cfg.sigma_obs) * lam;
                }
            }
        }
        for (double& e : evidence) {
            e *= alpha * h * h;
        }
    }
    std::vector<double> normalizer(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        normalizer[k] = cfg.clutter(ys[k]) + evidence[k];
    }

    IntensityGrid grid;
    grid.bounds = bounds;
    grid.n_birth = n_birth;
    grid.n_persistence = n_persistence;
    grid.values.resize(n_birth * n_persistence);
    for (std::size_t r = 0; r < n_persistence; ++r) {
        for (std::size_t c = 0; c < n_birth; ++c) {
            const WedgePoint x{grid.birth_at(c), grid.persistence_at(r)};
            const double lam = prior(x);
            double value = (1.0 - alpha) * lam;
            if (alpha > 0.0) {
                double acc = 0.0;
                for (std::size_t k = 0; k < ys.size(); ++k) {
                    if (normalizer[k] > 0.0) {
                        acc += observation_likelihood(ys[k], x, cfg.sigma_obs) * lam / normalizer[k];
                    }
                }
                value += alpha / m * acc;
            }
            grid.values[r * n_birth + c] = value;
        }
    }
    grid.max_intensity = *std::max_element(grid.values.begin(), grid.values.end());
    return grid;
}

std::string config_to_json(const PosteriorConfig& cfg) {
    nlohmann::json doc;
    doc["alpha"] = cfg.alpha;
    doc["sigma_obs"] = cfg.sigma_obs;
    doc["clutter"] = detail::mixture_to_jvalue(cfg.clutter);
    return doc.dump(2);
}

PosteriorConfig config_from_json(const std::string& text) {
    const auto doc = detail::parse_json(text, "posterior config");
    if (!doc.is_object()) {
        throw ValidationError("malformed posterior config JSON: expected an object");
    }
    PosteriorConfig cfg;
    if (doc.contains("alpha")) {
        if (!doc["alpha"].is_number()) {
            throw ValidationError("malformed posterior config JSON: alpha is not a number");
        }
        cfg.alpha = doc["alpha"].get<double>();
    }
    if (doc.contains("sigma_obs")) {
        if (!doc["sigma_obs"].is_number()) {
            throw ValidationError("malformed posterior config JSON: sigma_obs is not a number");
        }
        cfg.sigma_obs = doc["sigma_obs"].get<double>();
    }
    if (doc.contains("clutter")) {
        cfg.clutter = detail::mixture_from_jvalue(doc["clutter"]);
    }
    cfg.validate();
    return cfg;
}

PosteriorConfig load_config(const std::filesystem::path& path) {
    const std::string text = io::read_text(path);
    try {
        return config_from_json(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace topobayes
