#include "topobayes/intensity.hpp"

#include "json_detail.hpp"
#include "topobayes/errors.hpp"
#include "topobayes/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace topobayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_variance(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw ValidationError("variance must be positive and finite");
    }
}

double squared_distance(const WedgePoint& x, const WedgePoint& y) {
    const double db = x.birth - y.birth;
    const double dp = x.persistence - y.persistence;
    return db * db + dp * dp;
}

} // namespace

double normal_cdf(double t) {
    return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

double log_normal_cdf(double t) {
    if (t > -20.0) {
        return std::log(normal_cdf(t));
    }
    // Asymptotic series of the Mills ratio.
    const double t2 = t * t;
    const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
    return -0.5 * t2 - 0.5 * kLog2Pi - std::log(-t) + std::log(series);
}

double wedge_mass(const WedgePoint& mean, double variance) {
    require_variance(variance);
    const double sd = std::sqrt(variance);
    return normal_cdf(mean.birth / sd) * normal_cdf(mean.persistence / sd);
}

double log_wedge_mass(const WedgePoint& mean, double variance) {
    require_variance(variance);
    const double sd = std::sqrt(variance);
    return log_normal_cdf(mean.birth / sd) + log_normal_cdf(mean.persistence / sd);
}

double log_normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance) {
    require_variance(variance);
    return -kLog2Pi - std::log(variance) - squared_distance(x, mean) / (2.0 * variance);
}

double normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance) {
    return std::exp(log_normal_pdf(x, mean, variance));
}

double restricted_normal_pdf(const WedgePoint& x, const WedgePoint& mean, double variance) {
    require_variance(variance);
    if (!in_wedge(x)) {
        return 0.0;
    }
    return std::exp(log_normal_pdf(x, mean, variance) - log_wedge_mass(mean, variance));
}

GaussianMixtureIntensity::GaussianMixtureIntensity(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
    log_coef_.reserve(components_.size());
    coef_.reserve(components_.size());
    half_precision_.reserve(components_.size());
    for (const auto& c : components_) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
            throw ValidationError("mixture weight must be positive and finite");
        }
        if (!std::isfinite(c.mean.birth) || !std::isfinite(c.mean.persistence)) {
            throw ValidationError("mixture mean must be finite");
        }
        require_variance(c.variance);
        const double lc = std::log(c.weight) - kLog2Pi - std::log(c.variance) -
                          log_wedge_mass(c.mean, c.variance);
        log_coef_.push_back(lc);
        coef_.push_back(std::exp(lc));
        half_precision_.push_back(0.5 / c.variance);
        total_mass_ += c.weight;
    }
}

double GaussianMixtureIntensity::operator()(const WedgePoint& x) const {
    if (!in_wedge(x)) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) {
        const auto& mu = components_[j].mean;
        const double db = x.birth - mu.birth;
        const double dp = x.persistence - mu.persistence;
        acc += coef_[j] * std::exp(-(db * db + dp * dp) * half_precision_[j]);
    }
    return acc;
}

double GaussianMixtureIntensity::log_eval(const WedgePoint& x) const {
    if (!in_wedge(x) || components_.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    // Fast path: the direct sum is comfortably representable.
    const double direct = (*this)(x);
    if (direct > 1e-280) {
        return std::log(direct);
    }
    double max_term = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < components_.size(); ++j) {
        const double term = log_coef_[j] - squared_distance(x, components_[j].mean) * half_precision_[j];
        max_term = std::max(max_term, term);
    }
    if (!std::isfinite(max_term)) {
        return max_term;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) {
        const double term = log_coef_[j] - squared_distance(x, components_[j].mean) * half_precision_[j];
        acc += std::exp(term - max_term);
    }
    return max_term + std::log(acc);
}

GaussianMixtureIntensity GaussianMixtureIntensity::scaled(double factor) const {
    if (!(factor > 0.0)) {
        throw ValidationError("scale factor must be positive");
    }
    std::vector<GaussianComponent> out(components_.begin(), components_.end());
    for (auto& c : out) {
        c.weight *= factor;
    }
    return GaussianMixtureIntensity(std::move(out));
}

double eval_intensity(const GaussianMixtureIntensity& g, const WedgePoint& x) {
    return g(x);
}

double total_mass(const GaussianMixtureIntensity& g) {
    return g.total_mass();
}

GaussianMixtureIntensity concat(const GaussianMixtureIntensity& a, const GaussianMixtureIntensity& b) {
    std::vector<GaussianComponent> out(a.components().begin(), a.components().end());
    out.insert(out.end(), b.components().begin(), b.components().end());
    return GaussianMixtureIntensity(std::move(out));
}

double IntensityGrid::birth_at(std::size_t col) const {
    return bounds.b_min + (bounds.b_max - bounds.b_min) * static_cast<double>(col) /
                              static_cast<double>(n_birth - 1);
}

double IntensityGrid::persistence_at(std::size_t row) const {
    return bounds.p_min + (bounds.p_max - bounds.p_min) * static_cast<double>(row) /
                              static_cast<double>(n_persistence - 1);
}

void validate_grid(const GridBounds& bounds, std::size_t n_birth, std::size_t n_persistence) {
    const bool finite = std::isfinite(bounds.b_min) && std::isfinite(bounds.p_min) &&
                        std::isfinite(bounds.b_max) && std::isfinite(bounds.p_max);
    if (!finite) {
        throw ValidationError("grid bounds must be finite");
    }
    if (bounds.b_min < 0.0 || bounds.p_min < 0.0) {
        throw ValidationError("grid bounds must lie within the wedge (b >= 0, p >= 0)");
    }
    if (!(bounds.b_max > bounds.b_min) || !(bounds.p_max > bounds.p_min)) {
        throw ValidationError("degenerate grid bounds: need b_max > b_min and p_max > p_min");
    }
    if (n_birth < 2 || n_persistence < 2) {
        throw ValidationError("grid resolution must be at least 2x2");
    }
}

IntensityGrid intensity_grid(const GaussianMixtureIntensity& g, const GridBounds& bounds,
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
    if (grid.max_intensity > 0.0) {
        for (double& v : grid.values) {
            v /= grid.max_intensity;
        }
    }
    return grid;
}

std::string grid_to_csv(const IntensityGrid& grid) {
    std::string out;
    for (std::size_t r = 0; r < grid.n_persistence; ++r) {
        for (std::size_t c = 0; c < grid.n_birth; ++c) {
            if (c > 0) {
                out += ',';
            }
            out += io::format_double(grid.at(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string grid_sidecar_json(const IntensityGrid& grid) {
    nlohmann::json doc;
    doc["bounds"] = {grid.bounds.b_min, grid.bounds.p_min, grid.bounds.b_max, grid.bounds.p_max};
    doc["resolution"] = {grid.n_birth, grid.n_persistence};
    doc["layout"] = "rows: persistence ascending; columns: birth ascending; nodes include the bounds";
    doc["max_intensity"] = grid.max_intensity;
    return doc.dump(2);
}

namespace detail {

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed ") + what + " JSON: " + e.what());
    }
}

nlohmann::json mixture_to_jvalue(const GaussianMixtureIntensity& g) {
    auto comps = nlohmann::json::array();
    for (const auto& c : g.components()) {
        comps.push_back({{"w", c.weight}, {"mu", {c.mean.birth, c.mean.persistence}}, {"var", c.variance}});
    }
    return {{"components", std::move(comps)}};
}

GaussianMixtureIntensity mixture_from_jvalue(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("components") || !doc["components"].is_array()) {
        throw ValidationError("malformed mixture JSON: expected {\"components\": [...]}");
    }
    std::vector<GaussianComponent> comps;
    for (const auto& c : doc["components"]) {
        const bool ok = c.is_object() && c.contains("w") && c["w"].is_number() && c.contains("var") &&
                        c["var"].is_number() && c.contains("mu") && c["mu"].is_array() &&
                        c["mu"].size() == 2 && c["mu"][0].is_number() && c["mu"][1].is_number();
        if (!ok) {
            throw ValidationError("malformed mixture JSON: component needs w, mu [b,p] and var");
        }
        comps.push_back({c["w"].get<double>(), {c["mu"][0].get<double>(), c["mu"][1].get<double>()},
                         c["var"].get<double>()});
    }
    return GaussianMixtureIntensity(std::move(comps));
}

} // namespace detail

std::string mixture_to_json(const GaussianMixtureIntensity& g) {
    return detail::mixture_to_jvalue(g).dump();
}

GaussianMixtureIntensity mixture_from_json(const std::string& text) {
    return detail::mixture_from_jvalue(detail::parse_json(text, "mixture"));
}

void save_mixture(const GaussianMixtureIntensity& g, const std::filesystem::path& path) {
    io::write_text(path, mixture_to_json(g) + "\n");
}

GaussianMixtureIntensity load_mixture(const std::filesystem::path& path) {
    const std::string text = io::read_text(path);
    try {
        return mixture_from_json(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace topobayes
