#include "test_support.hpp"

#include "topobayes/errors.hpp"
#include "topobayes/posterior.hpp"

#include <doctest.h>

#include <random>

using namespace topobayes;

namespace {

// Clutter far from every test point, small enough to be ignored.
GaussianMixtureIntensity negligible_clutter() {
    return GaussianMixtureIntensity({{1e-300, {80.0, 80.0}, 1.0}});
}

double sup_relative_difference(const IntensityGrid& a, const IntensityGrid& b) {
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
        scale = std::max(scale, std::abs(b.values[i]));
    }
    return diff / scale;
}

} // namespace

TEST_CASE("alpha = 0 returns the prior") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 20.0}, {0.5, {1.0, 2.0}, 0.4}});
    PosteriorConfig cfg;
    cfg.alpha = 0.0;
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{0.5, 1.0}, {2.0, 0.1}}),
                                              PersistenceDiagram({{1.0, 1.0}})};
    CHECK(posterior_intensity(prior, obs, cfg) == prior);
}

TEST_CASE("an empty observation scales the prior by 1 - alpha") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 20.0}, {0.5, {1.0, 2.0}, 0.4}});
    PosteriorConfig cfg;
    cfg.alpha = 0.7;
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram()};
    const auto post = posterior_intensity(prior, obs, cfg);
    REQUIRE(post.size() == prior.size());
    for (std::size_t j = 0; j < prior.size(); ++j) {
        CHECK(post.components()[j].weight == (1.0 - 0.7) * prior.components()[j].weight);
        CHECK(post.components()[j].mean == prior.components()[j].mean);
        CHECK(post.components()[j].variance == prior.components()[j].variance);
    }
}

TEST_CASE("single conjugate update far from the boundary") {
    const GaussianMixtureIntensity prior({{1.0, {5.0, 5.0}, 1.0}});
    PosteriorConfig cfg;
    cfg.alpha = 1.0;
    cfg.sigma_obs = 1.0;
    cfg.clutter = negligible_clutter();
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{6.0, 6.0}})};
    const auto post = posterior_intensity(prior, obs, cfg);
    REQUIRE(post.size() == 1);
    const auto& c = post.components()[0];
    CHECK(c.weight == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(c.mean.birth == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(c.mean.persistence == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(c.variance == doctest::Approx(0.5).epsilon(1e-12));

    // The direct evaluation of the posterior operator agrees.
    const GridBounds bounds{3.0, 3.0, 8.0, 8.0};
    const auto quad = posterior_quadrature(prior, obs, cfg, bounds, 64, 64);
    const auto closed = sample_intensity(post, bounds, 64, 64);
    CHECK(sup_relative_difference(closed, quad) < 1e-3);
}

TEST_CASE("closed form matches quadrature for random configurations") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> var(0.3, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> ncomp(1, 3);
    std::uniform_int_distribution<int> npts(1, 5);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<GaussianComponent> comps;
        const int n = ncomp(rng);
        for (int j = 0; j < n; ++j) {
            const double v = var(rng);
            const double lo = 3.0 * std::sqrt(v);
            comps.push_back({0.5 + 2.0 * unit(rng), {lo + 4.0 * unit(rng), lo + 4.0 * unit(rng)}, v});
        }
        const GaussianMixtureIntensity prior(comps);
        std::vector<WedgePoint> pts;
        const int k = npts(rng);
        for (int i = 0; i < k; ++i) {
            pts.push_back({7.0 * unit(rng), 7.0 * unit(rng)});
        }
        PosteriorConfig cfg;
        cfg.alpha = std::array{0.3, 0.7, 1.0}[trial % 3];
        cfg.sigma_obs = 0.2 + unit(rng);
        const std::vector<PersistenceDiagram> obs{PersistenceDiagram(pts)};
        const GridBounds bounds{0.0, 0.0, 10.0, 10.0};
        const auto quad = posterior_quadrature(prior, obs, cfg, bounds, 80, 80);
        const auto closed = sample_intensity(posterior_intensity(prior, obs, cfg), bounds, 80, 80);
        CHECK(sup_relative_difference(closed, quad) < 1e-3);
    }
}

TEST_CASE("group (ii) weights sum to one per point without clutter at alpha = 1") {
    const GaussianMixtureIntensity prior({{1.0, {2.0, 2.0}, 0.5}, {2.0, {4.0, 1.0}, 1.0}, {0.3, {1.0, 5.0}, 2.0}});
    PosteriorConfig cfg;
    cfg.alpha = 1.0;
    cfg.sigma_obs = 0.3;
    cfg.clutter = negligible_clutter();
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{2.5, 1.5}})};
    const auto post = posterior_intensity(prior, obs, cfg);
    double sum = 0.0;
    for (const auto& c : post.components()) {
        sum += c.weight;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior invariants") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coord(0.0, 5.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto prior = testing::random_mixture(rng, 1, 3, 0.5, 5.0);
        PosteriorConfig cfg;
        cfg.alpha = 0.2 + 0.08 * trial;
        cfg.sigma_obs = 0.1 + 0.05 * trial;
        std::vector<PersistenceDiagram> obs;
        std::size_t total_points = 0;
        for (int i = 0; i < 3; ++i) {
            std::vector<WedgePoint> pts;
            for (int k = 0; k <= trial % 4; ++k) {
                pts.push_back({coord(rng), coord(rng)});
            }
            total_points += pts.size();
            obs.emplace_back(std::move(pts));
        }
        const auto post = posterior_intensity(prior, obs, cfg);
        const double m = static_cast<double>(obs.size());

        // Mass bound.
        CHECK(post.total_mass() <= (1.0 - cfg.alpha) * prior.total_mass() + static_cast<double>(total_points) / m +
                                       cfg.alpha * prior.total_mass() + 1e-12);

        // Pointwise lower bound by the unobserved term.
        for (int k = 0; k < 20; ++k) {
            const WedgePoint x{coord(rng), coord(rng)};
            CHECK(post(x) >= (1.0 - cfg.alpha) * prior(x) * (1.0 - 1e-12));
        }

        // Exchangeability of diagrams and of points within diagrams.
        std::vector<PersistenceDiagram> permuted;
        for (auto it = obs.rbegin(); it != obs.rend(); ++it) {
            std::vector<WedgePoint> pts(it->points().rbegin(), it->points().rend());
            permuted.emplace_back(std::move(pts));
        }
        CHECK(testing::sorted_components(posterior_intensity(prior, permuted, cfg)) ==
              testing::sorted_components(post));
    }
}

TEST_CASE("more clutter strictly damps every observed-feature weight") {
    const GaussianMixtureIntensity prior({{1.0, {2.0, 2.0}, 0.5}, {2.0, {4.0, 1.0}, 1.0}});
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{2.5, 1.5}, {0.2, 0.1}})};
    PosteriorConfig low;
    low.alpha = 0.6;
    low.sigma_obs = 0.4;
    low.clutter = GaussianMixtureIntensity({{0.05, {3.0, 3.0}, 20.0}});
    PosteriorConfig high = low;
    high.clutter = low.clutter.scaled(10.0);

    const auto a = posterior_intensity(prior, obs, low);
    const auto b = posterior_intensity(prior, obs, high);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = prior.size(); i < a.size(); ++i) {
        CHECK(b.components()[i].weight < a.components()[i].weight);
    }

    // Integrated observed-feature mass for one point is bounded by
    // alpha * evidence / clutter.
    const WedgePoint y{2.5, 1.5};
    const std::vector<PersistenceDiagram> one{PersistenceDiagram({y})};
    const auto post = posterior_intensity(prior, one, high);
    double group2 = 0.0;
    for (std::size_t i = prior.size(); i < post.size(); ++i) {
        group2 += post.components()[i].weight;
    }
    double evidence = 0.0;
    for (const auto& c : prior.components()) {
        evidence += c.weight * std::exp(log_component_evidence(y, c, high.sigma_obs));
    }
    CHECK(group2 <= high.alpha * evidence / high.clutter(y));

    // Quadrature route: the pointwise observed term shrinks too.
    const GridBounds bounds{0.0, 0.0, 6.0, 6.0};
    const auto qa = posterior_quadrature(prior, one, low, bounds, 40, 40);
    const auto qb = posterior_quadrature(prior, one, high, bounds, 40, 40);
    const auto base = sample_intensity(prior, bounds, 40, 40);
    for (std::size_t i = 0; i < qa.values.size(); ++i) {
        const double ga = qa.values[i] - (1.0 - low.alpha) * base.values[i];
        const double gb = qb.values[i] - (1.0 - high.alpha) * base.values[i];
        CHECK(gb <= ga);
    }
}

TEST_CASE("posterior_quadrature contracts") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 2.0}});
    PosteriorConfig cfg;
    cfg.alpha = 0.0;
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{1.0, 1.0}})};
    const GridBounds bounds{0.0, 0.0, 6.0, 6.0};
    const auto quad = posterior_quadrature(prior, obs, cfg, bounds, 32, 32);
    const auto direct = sample_intensity(prior, bounds, 32, 32);
    CHECK(quad.values == direct.values);

    CHECK_THROWS_AS(posterior_quadrature(prior, obs, cfg, bounds, 31, 64), ValidationError);
    CHECK_THROWS_AS(posterior_quadrature(prior, std::vector<PersistenceDiagram>{}, cfg, bounds, 64, 64),
                    ValidationError);
}

TEST_CASE("posterior input validation") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 20.0}});
    PosteriorConfig cfg;
    CHECK_THROWS_AS(posterior_intensity(prior, std::vector<PersistenceDiagram>{}, cfg), ValidationError);
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(posterior_intensity(prior, std::vector<PersistenceDiagram>{PersistenceDiagram()}, cfg),
                    ValidationError);
    cfg.alpha = 0.5;
    cfg.sigma_obs = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    // Observations outside the wedge cannot even be formed.
    CHECK_THROWS_AS(PersistenceDiagram({{1.0, -1.0}}), ValidationError);
}

TEST_CASE("boundary observations are admitted") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 20.0}});
    PosteriorConfig cfg;
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram({{0.0, 0.0}, {1.0, 0.0}})};
    const auto post = posterior_intensity(prior, obs, cfg);
    CHECK(post.size() == 3);
    CHECK(std::isfinite(post.total_mass()));
}

TEST_CASE("pruning drops tiny weights and caps the component count") {
    const GaussianMixtureIntensity prior({{1.0, {3.0, 3.0}, 20.0}});
    PosteriorConfig cfg;
    cfg.alpha = 0.7;
    cfg.sigma_obs = 0.1;
    std::vector<WedgePoint> pts;
    for (int i = 0; i < 50; ++i) {
        pts.push_back({0.1 * i, 0.05 * i});
    }
    const std::vector<PersistenceDiagram> obs{PersistenceDiagram(pts)};
    const auto full = posterior_intensity(prior, obs, cfg);
    CHECK(full.size() == 51);

    PruneOptions capped;
    capped.max_components = 10;
    const auto small = posterior_intensity(prior, obs, cfg, capped);
    CHECK(small.size() == 10);
    double min_kept = 1e300;
    for (const auto& c : small.components()) {
        min_kept = std::min(min_kept, c.weight);
    }
    std::size_t heavier = 0;
    for (const auto& c : full.components()) {
        heavier += c.weight > min_kept;
    }
    CHECK(heavier <= 10);

    PruneOptions floor;
    floor.relative_weight_floor = 0.5; // nothing survives a 50% floor
    CHECK(posterior_intensity(prior, obs, cfg, floor).size() == 0);
}

TEST_CASE("posterior config JSON") {
    PosteriorConfig cfg;
    cfg.alpha = 0.25;
    cfg.sigma_obs = 0.125;
    cfg.clutter = GaussianMixtureIntensity({{0.5, {1.0, 2.0}, 3.0}});
    const auto back = config_from_json(config_to_json(cfg));
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.sigma_obs == cfg.sigma_obs);
    CHECK(back.clutter == cfg.clutter);

    const auto defaults = config_from_json("{}");
    CHECK(defaults.clutter == PosteriorConfig::default_clutter());
    CHECK_THROWS_AS(config_from_json(R"({"alpha": 2})"), ValidationError);
    CHECK_THROWS_AS(config_from_json(R"({"sigma_obs": "x"})"), ValidationError);
}
