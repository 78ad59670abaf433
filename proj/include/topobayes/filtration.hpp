#pragma once

#include "topobayes/signal.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace topobayes {

struct BirthDeath {
    double birth = 0.0;
    double death = 0.0;

    friend bool operator==(const BirthDeath&, const BirthDeath&) = default;
    friend auto operator<=>(const BirthDeath&, const BirthDeath&) = default;
};

/// H0 pairs in (birth, death) coordinates, sorted ascending.
struct RawDiagram {
    std::vector<BirthDeath> pairs;

    bool empty() const { return pairs.empty(); }
    std::size_t size() const { return pairs.size(); }
    friend bool operator==(const RawDiagram&, const RawDiagram&) = default;
};

/// A point of the wedge W = {b >= 0, p >= 0}.
struct WedgePoint {
    double birth = 0.0;
    double persistence = 0.0;

    friend bool operator==(const WedgePoint&, const WedgePoint&) = default;
    friend auto operator<=>(const WedgePoint&, const WedgePoint&) = default;
};

bool in_wedge(const WedgePoint& x);

/// Tilted diagram: points in W plus the birth offset that was subtracted,
/// kept so the diagram can be mapped back to (birth, death).
class PersistenceDiagram {
public:
    PersistenceDiagram() = default;
    /// Throws ValidationError when a point lies outside W or is non-finite.
    PersistenceDiagram(std::vector<WedgePoint> points, double b_min = 0.0);

    std::span<const WedgePoint> points() const { return points_; }
    double b_min() const { return b_min_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;

private:
    std::vector<WedgePoint> points_;
    double b_min_ = 0.0;
};

/// 0-dimensional sublevel-set persistence of the piecewise-linear
/// interpolation of `values`. Equal consecutive samples are collapsed, ties
/// are broken by sample index (smaller index is older) and the surviving
/// component is paired with the global maximum. Requires >= 1 value.
RawDiagram sublevel_pd(std::span<const double> values);
RawDiagram sublevel_pd(const Signal& signal);

/// (b, d) -> (b - min b, d - b). Empty in, empty out.
PersistenceDiagram tilt(const RawDiagram& raw);

/// Inverse of `tilt` using the stored offset.
RawDiagram untilt(const PersistenceDiagram& diagram);

/// Bottleneck distance under the L-infinity ground metric with matching to
/// the diagonal allowed; a point (b, d) is (d - b) / 2 from the diagonal.
double bottleneck_distance(const RawDiagram& a, const RawDiagram& b);

/// Same, after mapping both diagrams back to (birth, death).
double bottleneck_distance(const PersistenceDiagram& a, const PersistenceDiagram& b);

std::string diagram_to_json(const PersistenceDiagram& diagram);
PersistenceDiagram diagram_from_json(const std::string& text);
void save_diagram(const PersistenceDiagram& diagram, const std::filesystem::path& path);
PersistenceDiagram load_diagram(const std::filesystem::path& path);

} // namespace topobayes
