#include "spe/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spe/error.hpp"
#include "spe/rng.hpp"

namespace spe {

namespace {

class Occupancy {
public:
    explicit Occupancy(GridShape shape) : shape_(shape), taken_(static_cast<size_t>(shape.cells()), 0) {}

    bool try_add(int64_t r, int64_t c) {
        if (r < 0 || c < 0 || r >= shape_.height || c >= shape_.width) return false;
        auto& cell = taken_[static_cast<size_t>(r * shape_.width + c)];
        if (cell) return false;
        cell = 1;
        coords_.push_back({static_cast<int32_t>(r), static_cast<int32_t>(c)});
        return true;
    }

    size_t size() const { return coords_.size(); }

    // tops up to n with a uniform draw over the still-free cells
    void fill_uniform(size_t n, SplitMix64& rng) {
        if (coords_.size() >= n) return;
        std::vector<uint32_t> free_cells;
        free_cells.reserve(taken_.size() - coords_.size());
        for (size_t i = 0; i < taken_.size(); ++i) {
            if (!taken_[i]) free_cells.push_back(static_cast<uint32_t>(i));
        }
        const size_t need = n - coords_.size();
        for (size_t i = 0; i < need; ++i) {
            const size_t j = i + static_cast<size_t>(rng.below(free_cells.size() - i));
            std::swap(free_cells[i], free_cells[j]);
            try_add(free_cells[i] / shape_.width, free_cells[i] % shape_.width);
        }
    }

    std::vector<Coord> take_sorted() {
        std::sort(coords_.begin(), coords_.end());
        return std::move(coords_);
    }

private:
    GridShape shape_;
    std::vector<uint8_t> taken_;
    std::vector<Coord> coords_;
};

void place_clustered(const SceneSpec& spec, size_t n, Occupancy& occ, SplitMix64& rng) {
    const int32_t k = std::max(1, spec.clusters);
    std::vector<std::pair<double, double>> centers;
    centers.reserve(static_cast<size_t>(k));
    for (int32_t i = 0; i < k; ++i) {
        centers.emplace_back(rng.uniform(0.0, spec.height), rng.uniform(0.0, spec.width));
    }
    const size_t max_attempts = 64 * n + 1024;
    for (size_t a = 0; a < max_attempts && occ.size() < n; ++a) {
        const auto& [cr, cc] = centers[rng.below(static_cast<uint64_t>(k))];
        const double r = cr + spec.spread * rng.gaussian();
        const double c = cc + spec.spread * rng.gaussian();
        occ.try_add(std::lround(std::floor(r)), std::lround(std::floor(c)));
    }
}

void place_arcs(const SceneSpec& spec, size_t n, Occupancy& occ, SplitMix64& rng) {
    struct Arc {
        double radius, start, extent;
    };
    const int32_t k = std::max(1, spec.arcs);
    const double cr = spec.height / 2.0;
    const double cc = spec.width / 2.0;
    const double max_r = 0.6 * std::max(spec.height, spec.width);
    std::vector<Arc> arcs;
    for (int32_t i = 0; i < k; ++i) {
        arcs.push_back({rng.uniform(2.0, std::max(3.0, max_r)), rng.uniform(0.0, 2.0 * std::numbers::pi),
                        rng.uniform(std::numbers::pi / 8.0, std::numbers::pi)});
    }
    const size_t max_attempts = 64 * n + 1024;
    for (size_t a = 0; a < max_attempts && occ.size() < n; ++a) {
        const Arc& arc = arcs[rng.below(static_cast<uint64_t>(k))];
        const double theta = arc.start + arc.extent * rng.uniform();
        const double radius = arc.radius + 0.7 * rng.gaussian();
        occ.try_add(std::lround(std::floor(cr + radius * std::sin(theta))),
                    std::lround(std::floor(cc + radius * std::cos(theta))));
    }
}

}  // namespace

int64_t scene_pillar_count(const SceneSpec& spec) {
    return std::llround(spec.density * static_cast<double>(GridShape{spec.height, spec.width}.cells()));
}

PillarTensor generate(const SceneSpec& spec) {
    if (spec.height < 0 || spec.width < 0 || spec.channels < 0) {
        throw Error(Errc::InvalidArgument, "scene dimensions must be non-negative");
    }
    if (!(spec.density >= 0.0)) throw Error(Errc::InvalidArgument, "density must be non-negative");
    const GridShape shape{spec.height, spec.width};
    const int64_t n = scene_pillar_count(spec);
    if (n > shape.cells()) {
        throw Error(Errc::DensityOverflow, std::to_string(n) + " pillars requested on a grid of " +
                                               std::to_string(shape.cells()) + " cells");
    }

    SplitMix64 rng(derive_seed(spec.seed, 0));
    Occupancy occ(shape);
    const auto count = static_cast<size_t>(n);
    switch (spec.pattern) {
    case ScenePattern::UniformRandom: break;
    case ScenePattern::Clustered: place_clustered(spec, count, occ, rng); break;
    case ScenePattern::RingArcs: place_arcs(spec, count, occ, rng); break;
    }
    occ.fill_uniform(count, rng);
    std::vector<Coord> coords = occ.take_sorted();

    std::vector<float> features(coords.size() * static_cast<size_t>(spec.channels));
    if (spec.features == FeatureDist::Constant) {
        std::fill(features.begin(), features.end(), spec.constant_value);
    } else {
        SplitMix64 frng(derive_seed(spec.seed, 1));
        for (float& f : features) f = static_cast<float>(frng.gaussian());
    }
    return PillarTensor::from_sorted(spec.height, spec.width, spec.channels, std::move(coords),
                                     std::move(features));
}

std::optional<SceneSpec> scene_preset(std::string_view name) {
    SceneSpec s;
    if (name == "kitti-like") {
        s.height = 496;
        s.width = 432;
        s.channels = 64;
        s.density = 0.03;
        s.pattern = ScenePattern::Clustered;
        s.clusters = 64;
        s.spread = 5.0;
        return s;
    }
    if (name == "nuscenes-like") {
        s.height = 512;
        s.width = 512;
        s.channels = 64;
        s.density = 0.04;
        s.pattern = ScenePattern::RingArcs;
        s.arcs = 48;
        return s;
    }
    return std::nullopt;
}

}  // namespace spe
