#include "test_support.hpp"

#include "topobayes/errors.hpp"
#include "topobayes/filtration.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace topobayes;

namespace {

RawDiagram raw(std::vector<BirthDeath> pairs) {
    std::sort(pairs.begin(), pairs.end());
    return RawDiagram{std::move(pairs)};
}

std::vector<double> random_distinct(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::set<double> seen;
    std::vector<double> v;
    while (v.size() < n) {
        const double x = u(rng);
        if (seen.insert(x).second) {
            v.push_back(x);
        }
    }
    return v;
}

std::size_t count_local_minima(const std::vector<double>& values) {
    std::vector<double> v;
    for (double x : values) {
        if (v.empty() || v.back() != x) {
            v.push_back(x);
        }
    }
    if (v.size() == 1) {
        return 1;
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool left_ok = i == 0 || v[i - 1] > v[i];
        const bool right_ok = i + 1 == v.size() || v[i + 1] > v[i];
        count += left_ok && right_ok;
    }
    return count;
}

} // namespace

TEST_CASE("sublevel_pd on the reference signals") {
    const std::vector<double> w{0, -1, 0, -2, 0};
    CHECK(sublevel_pd(w) == raw({{-2, 0}, {-1, 0}}));
    CHECK(sublevel_pd(w) == testing::brute_force_sublevel(w));

    CHECK(sublevel_pd(std::vector<double>{0, 1, 2, 3}) == raw({{0, 3}}));
    CHECK(sublevel_pd(std::vector<double>{3, 2, 1, 0}) == raw({{0, 3}}));
    CHECK(sublevel_pd(std::vector<double>{1.5, 1.5, 1.5}) == raw({{1.5, 1.5}}));
}

TEST_CASE("sublevel_pd plateaus and ties") {
    // Plateau minimum counts once.
    CHECK(sublevel_pd(std::vector<double>{2, 0, 0, 0, 2}) == raw({{0, 2}}));
    // Equal minima: the earlier sample is older and survives.
    CHECK(sublevel_pd(std::vector<double>{0, 1, 0}) == raw({{0, 1}, {0, 1}}));
    // Endpoint minima count when their neighbour is higher.
    CHECK(sublevel_pd(std::vector<double>{0, 3, 1, 4}) == raw({{0, 4}, {1, 3}}));
    CHECK_THROWS_AS(sublevel_pd(std::vector<double>{}), ValidationError);
}

TEST_CASE("sublevel_pd matches the brute-force component oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(2, 64);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = random_distinct(rng, len(rng));
        REQUIRE(sublevel_pd(v) == testing::brute_force_sublevel(v));
    }
}

TEST_CASE("sublevel_pd structural properties") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> level(0, 6); // many ties and plateaus
    std::uniform_int_distribution<std::size_t> len(1, 80);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> v(len(rng));
        for (double& x : v) {
            x = level(rng);
        }
        const auto pd = sublevel_pd(v);
        CHECK(pd.size() == count_local_minima(v));

        const double gmax = *std::max_element(v.begin(), v.end());
        for (const auto& bd : pd.pairs) {
            CHECK(bd.death >= bd.birth);
            bool is_local_max = bd.death == gmax;
            for (std::size_t i = 0; i < v.size() && !is_local_max; ++i) {
                const bool l = i == 0 || v[i - 1] <= v[i];
                const bool r = i + 1 == v.size() || v[i + 1] <= v[i];
                is_local_max = l && r && v[i] == bd.death;
            }
            CHECK(is_local_max);
        }
    }
}

TEST_CASE("tilt maps into the wedge") {
    const auto d = tilt(raw({{-2, 0}, {-1, 0}}));
    CHECK(d.b_min() == -2.0);
    REQUIRE(d.size() == 2);
    CHECK(d.points()[0] == WedgePoint{0, 2});
    CHECK(d.points()[1] == WedgePoint{1, 1});

    const auto single = tilt(raw({{0, 3}}));
    CHECK(single.points()[0] == WedgePoint{0, 3});

    const auto shifted = tilt(raw({{5, 7}, {6, 6.5}}));
    CHECK(shifted.points()[0] == WedgePoint{0, 2});
    CHECK(shifted.points()[1] == WedgePoint{1, 0.5});

    CHECK(tilt(RawDiagram{}).empty());
    CHECK(tilt(RawDiagram{}).b_min() == 0.0);

    CHECK(untilt(shifted) == raw({{5, 7}, {6, 6.5}}));
}

TEST_CASE("tilt preserves cardinality and is injective for a fixed offset") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = random_distinct(rng, 40);
        const auto pd = sublevel_pd(v);
        const auto t = tilt(pd);
        CHECK(t.size() == pd.size());
        for (const auto& x : t.points()) {
            CHECK(in_wedge(x));
        }
        const auto back = untilt(t);
        REQUIRE(back.size() == pd.size());
        for (std::size_t i = 0; i < pd.size(); ++i) {
            CHECK(back.pairs[i].birth == doctest::Approx(pd.pairs[i].birth).epsilon(1e-12));
            CHECK(back.pairs[i].death == doctest::Approx(pd.pairs[i].death).epsilon(1e-12));
        }
    }
}

TEST_CASE("PersistenceDiagram rejects points outside the wedge") {
    CHECK_THROWS_AS(PersistenceDiagram({{-1.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(PersistenceDiagram({{1.0, -0.1}}), ValidationError);
    CHECK_NOTHROW(PersistenceDiagram({{0.0, 0.0}}));
}

TEST_CASE("bottleneck distance reference values") {
    const PersistenceDiagram d({{0, 2}, {1, 1}});
    CHECK(bottleneck_distance(d, d) == 0.0);

    const RawDiagram one = raw({{0, 2}});
    CHECK(testing::brute_force_bottleneck(one, RawDiagram{}) == 1.0);
    CHECK(bottleneck_distance(one, RawDiagram{}) == 1.0);
    CHECK(bottleneck_distance(PersistenceDiagram({{0, 2}}), PersistenceDiagram()) == 1.0);

    // (b, p) -> (b, b + p): {(0,2),(1,2)} vs {(0,2.1),(1,2)}.
    const PersistenceDiagram e({{0, 2.1}, {1, 1}});
    const double oracle = testing::brute_force_bottleneck(untilt(d), untilt(e));
    CHECK(oracle == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(bottleneck_distance(d, e) == oracle);
}

TEST_CASE("bottleneck distance agrees with exhaustive matching") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(0, 4);
    std::uniform_real_distribution<double> coord(0.0, 3.0);
    std::uniform_real_distribution<double> pers(0.0, 2.0);
    auto random_raw = [&](int n) {
        std::vector<BirthDeath> pairs;
        for (int i = 0; i < n; ++i) {
            const double b = coord(rng);
            pairs.push_back({b, b + pers(rng)});
        }
        return raw(std::move(pairs));
    };
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_raw(size(rng));
        const auto b = random_raw(size(rng));
        const double fast = bottleneck_distance(a, b);
        CHECK(fast == testing::brute_force_bottleneck(a, b));
        CHECK(fast == bottleneck_distance(b, a));
        CHECK((fast == 0.0) == (a == b));
    }
}

TEST_CASE("sublevel persistence is stable under sup-norm perturbation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (double eps : {0.01, 0.1}) {
        std::uniform_real_distribution<double> noise(-eps, eps);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> s(128);
            for (double& x : s) {
                x = value(rng);
            }
            auto t = s;
            for (double& x : t) {
                x += noise(rng);
            }
            CHECK(bottleneck_distance(sublevel_pd(s), sublevel_pd(t)) <= eps + 1e-12);
        }
    }
}

TEST_CASE("diagram JSON round trip") {
    const PersistenceDiagram d({{0.0, 2.0}, {1.0, 1.0}, {0.125, 0.0}}, -2.0);
    CHECK(diagram_from_json(diagram_to_json(d)) == d);
    CHECK(diagram_to_json(tilt(raw({{-2, 0}, {-1, 0}}))) == R"({"b_min":-2.0,"points":[[0.0,2.0],[1.0,1.0]]})");
    CHECK_THROWS_AS(diagram_from_json(R"({"points": [[1]]})"), ValidationError);
    CHECK_THROWS_AS(diagram_from_json(R"({"b_min": 0, "points": [[-1, 2]]})"), ValidationError);
    CHECK_THROWS_AS(diagram_from_json("nope"), ValidationError);
}
