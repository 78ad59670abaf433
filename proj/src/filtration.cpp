#include "topobayes/filtration.hpp"

#include "topobayes/errors.hpp"
#include "topobayes/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace topobayes {

bool in_wedge(const WedgePoint& x) {
    return x.birth >= 0.0 && x.persistence >= 0.0;
}

PersistenceDiagram::PersistenceDiagram(std::vector<WedgePoint> points, double b_min)
    : points_(std::move(points)), b_min_(b_min) {
    if (!std::isfinite(b_min_)) {
        throw ValidationError("diagram b_min must be finite");
    }
    for (const auto& x : points_) {
        if (!std::isfinite(x.birth) || !std::isfinite(x.persistence)) {
            throw ValidationError("diagram point is not finite");
        }
        if (!in_wedge(x)) {
            throw ValidationError("diagram point (" + io::format_double(x.birth) + ", " +
                                  io::format_double(x.persistence) + ") lies outside the wedge");
        }
    }
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Makes `root` the representative of the merged set.
    void attach(std::size_t child_root, std::size_t root) { parent_[child_root] = root; }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

RawDiagram sublevel_pd(std::span<const double> values) {
    if (values.empty()) {
        throw ValidationError("sublevel_pd needs at least one value");
    }
    // Plateaus collapse to their first sample.
    std::vector<double> v;
    v.reserve(values.size());
    for (double x : values) {
        if (!std::isfinite(x)) {
            throw ValidationError("sublevel_pd: non-finite value");
        }
        if (v.empty() || v.back() != x) {
            v.push_back(x);
        }
    }
    const std::size_t n = v.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    auto older = [&](std::size_t a, std::size_t b) { return v[a] < v[b] || (v[a] == v[b] && a < b); };

    UnionFind uf(n);
    std::vector<std::size_t> birth_of(n); // indexed by root
    std::vector<char> active(n, 0);
    RawDiagram out;

    for (std::size_t k : order) {
        active[k] = 1;
        birth_of[k] = k;
        std::size_t roots[2];
        int nroots = 0;
        if (k > 0 && active[k - 1]) {
            roots[nroots++] = uf.find(k - 1);
        }
        if (k + 1 < n && active[k + 1]) {
            roots[nroots++] = uf.find(k + 1);
        }
        if (nroots == 1) {
            uf.attach(k, roots[0]);
        } else if (nroots == 2) {
            std::size_t keep = roots[0];
            std::size_t die = roots[1];
            if (older(birth_of[die], birth_of[keep])) {
                std::swap(keep, die);
            }
            out.pairs.push_back({v[birth_of[die]], v[k]});
            uf.attach(die, keep);
            uf.attach(k, keep);
        }
    }

    const std::size_t global_min = order.front();
    const double global_max = v[order.back()];
    out.pairs.push_back({v[global_min], global_max});
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

RawDiagram sublevel_pd(const Signal& signal) {
    return sublevel_pd(signal.samples());
}

PersistenceDiagram tilt(const RawDiagram& raw) {
    if (raw.empty()) {
        return PersistenceDiagram();
    }
    double b_min = std::numeric_limits<double>::infinity();
    for (const auto& bd : raw.pairs) {
        if (bd.death < bd.birth) {
            throw ValidationError("raw diagram pair has death < birth");
        }
        b_min = std::min(b_min, bd.birth);
    }
    std::vector<WedgePoint> pts;
    pts.reserve(raw.size());
    for (const auto& bd : raw.pairs) {
        pts.push_back({bd.birth - b_min, bd.death - bd.birth});
    }
    return PersistenceDiagram(std::move(pts), b_min);
}

RawDiagram untilt(const PersistenceDiagram& diagram) {
    RawDiagram out;
    out.pairs.reserve(diagram.size());
    for (const auto& x : diagram.points()) {
        const double b = x.birth + diagram.b_min();
        out.pairs.push_back({b, b + x.persistence});
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

namespace {

// Hopcroft-Karp on the standard bottleneck graph. Left side: points of `a`
// followed by diagonal copies of `b`; right side: points of `b` followed by
// diagonal copies of `a`.
class BottleneckMatcher {
public:
    BottleneckMatcher(const RawDiagram& a, const RawDiagram& b) : a_(a.pairs), b_(b.pairs) {}

    bool perfect_at(double r) {
        const std::size_t n = a_.size();
        const std::size_t m = b_.size();
        const std::size_t size = n + m;
        adj_.assign(size, {});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (linf(a_[i], b_[j]) <= r) {
                    adj_[i].push_back(j);
                }
            }
            if (to_diagonal(a_[i]) <= r) {
                adj_[i].push_back(m + i);
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            auto& row = adj_[n + j];
            if (to_diagonal(b_[j]) <= r) {
                row.push_back(j);
            }
            for (std::size_t i = 0; i < n; ++i) {
                row.push_back(m + i);
            }
        }
        return max_matching(size) == size;
    }

    static double linf(const BirthDeath& p, const BirthDeath& q) {
        return std::max(std::abs(p.birth - q.birth), std::abs(p.death - q.death));
    }
    static double to_diagonal(const BirthDeath& p) { return (p.death - p.birth) / 2.0; }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::size_t max_matching(std::size_t size) {
        match_left_.assign(size, kNone);
        match_right_.assign(size, kNone);
        std::size_t matched = 0;
        while (bfs(size)) {
            for (std::size_t u = 0; u < size; ++u) {
                if (match_left_[u] == kNone && dfs(u)) {
                    ++matched;
                }
            }
        }
        return matched;
    }

    bool bfs(std::size_t size) {
        dist_.assign(size, kNone);
        std::deque<std::size_t> queue;
        for (std::size_t u = 0; u < size; ++u) {
            if (match_left_[u] == kNone) {
                dist_[u] = 0;
                queue.push_back(u);
            }
        }
        bool found = false;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v : adj_[u]) {
                const std::size_t w = match_right_[v];
                if (w == kNone) {
                    found = true;
                } else if (dist_[w] == kNone) {
                    dist_[w] = dist_[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        return found;
    }

    bool dfs(std::size_t u) {
        for (std::size_t v : adj_[u]) {
            const std::size_t w = match_right_[v];
            if (w == kNone || (dist_[w] == dist_[u] + 1 && dfs(w))) {
                match_left_[u] = v;
                match_right_[v] = u;
                return true;
            }
        }
        dist_[u] = kNone;
        return false;
    }

    const std::vector<BirthDeath>& a_;
    const std::vector<BirthDeath>& b_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<std::size_t> match_left_;
    std::vector<std::size_t> match_right_;
    std::vector<std::size_t> dist_;
};

} // namespace

double bottleneck_distance(const RawDiagram& a, const RawDiagram& b) {
    std::vector<double> candidates{0.0};
    for (const auto& p : a.pairs) {
        candidates.push_back(BottleneckMatcher::to_diagonal(p));
        for (const auto& q : b.pairs) {
            candidates.push_back(BottleneckMatcher::linf(p, q));
        }
    }
    for (const auto& q : b.pairs) {
        candidates.push_back(BottleneckMatcher::to_diagonal(q));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    BottleneckMatcher matcher(a, b);
    std::size_t lo = 0;
    std::size_t hi = candidates.size() - 1; // always feasible: everything to the diagonal
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (matcher.perfect_at(candidates[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return candidates[lo];
}

double bottleneck_distance(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    return bottleneck_distance(untilt(a), untilt(b));
}

std::string diagram_to_json(const PersistenceDiagram& diagram) {
    nlohmann::json doc;
    doc["b_min"] = diagram.b_min();
    auto pts = nlohmann::json::array();
    for (const auto& x : diagram.points()) {
        pts.push_back({x.birth, x.persistence});
    }
    doc["points"] = std::move(pts);
    return doc.dump();
}

PersistenceDiagram diagram_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed diagram JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("points") || !doc["points"].is_array()) {
        throw ValidationError("malformed diagram JSON: expected {\"b_min\": b, \"points\": [[b,p], ...]}");
    }
    double b_min = 0.0;
    if (doc.contains("b_min")) {
        if (!doc["b_min"].is_number()) {
            throw ValidationError("malformed diagram JSON: b_min is not a number");
        }
        b_min = doc["b_min"].get<double>();
    }
    std::vector<WedgePoint> pts;
    for (const auto& p : doc["points"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ValidationError("malformed diagram JSON: each point must be [b, p]");
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return PersistenceDiagram(std::move(pts), b_min);
}

void save_diagram(const PersistenceDiagram& diagram, const std::filesystem::path& path) {
    io::write_text(path, diagram_to_json(diagram) + "\n");
}

PersistenceDiagram load_diagram(const std::filesystem::path& path) {
    const std::string text = io::read_text(path);
    try {
        return diagram_from_json(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace topobayes
