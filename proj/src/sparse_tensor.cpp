#include "spe/sparse_tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "spe/error.hpp"

namespace spe {

namespace {

std::string coord_str(Coord c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

void check_dims(int32_t height, int32_t width, int32_t channels) {
    if (height < 0 || width < 0 || channels < 0) {
        throw Error(Errc::ShapeMismatch, "negative tensor dimension");
    }
}

}  // namespace

void validate_coords(std::span<const Coord> coords, GridShape shape) {
    for (size_t i = 0; i < coords.size(); ++i) {
        if (!shape.contains(coords[i])) {
            throw Error(Errc::OutOfBounds, "coordinate " + coord_str(coords[i]) + " outside " +
                                               std::to_string(shape.height) + "x" +
                                               std::to_string(shape.width));
        }
        if (i > 0) {
            if (coords[i] == coords[i - 1]) {
                throw Error(Errc::DuplicateCoord, "duplicate coordinate " + coord_str(coords[i]));
            }
            if (coords[i] < coords[i - 1]) {
                throw Error(Errc::UnsortedInput, "coordinate " + coord_str(coords[i]) +
                                                     " follows " + coord_str(coords[i - 1]));
            }
        }
    }
}

PillarTensor::PillarTensor(int32_t height, int32_t width, int32_t channels)
    : height_(height), width_(width), channels_(channels) {
    check_dims(height, width, channels);
}

PillarTensor PillarTensor::from_entries(int32_t height, int32_t width, int32_t channels,
                                        std::vector<Entry> entries) {
    check_dims(height, width, channels);
    const GridShape shape{height, width};
    for (const auto& e : entries) {
        if (static_cast<int32_t>(e.features.size()) != channels) {
            throw Error(Errc::BadVectorLength, "entry " + coord_str(e.coord) + " has " +
                                                   std::to_string(e.features.size()) +
                                                   " features, expected " +
                                                   std::to_string(channels));
        }
        if (!shape.contains(e.coord)) {
            throw Error(Errc::OutOfBounds, "coordinate " + coord_str(e.coord));
        }
    }
    std::vector<size_t> order(entries.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return entries[a].coord < entries[b].coord; });

    PillarTensor t(height, width, channels);
    t.coords_.reserve(entries.size());
    t.features_.reserve(entries.size() * channels);
    for (size_t i : order) {
        if (!t.coords_.empty() && t.coords_.back() == entries[i].coord) {
            throw Error(Errc::DuplicateCoord, "duplicate coordinate " + coord_str(entries[i].coord));
        }
        t.coords_.push_back(entries[i].coord);
        t.features_.insert(t.features_.end(), entries[i].features.begin(), entries[i].features.end());
    }
    return t;
}

PillarTensor PillarTensor::from_sorted(int32_t height, int32_t width, int32_t channels,
                                       std::vector<Coord> coords, std::vector<float> features) {
    PillarTensor t(height, width, channels);
    t.coords_ = std::move(coords);
    t.features_ = std::move(features);
    t.validate();
    return t;
}

void PillarTensor::validate() const {
    if (features_.size() != coords_.size() * static_cast<size_t>(channels_)) {
        throw Error(Errc::BadVectorLength, "feature array holds " + std::to_string(features_.size()) +
                                               " values for " + std::to_string(coords_.size()) +
                                               " entries of " + std::to_string(channels_) +
                                               " channels");
    }
    validate_coords(coords_, shape());
}

DenseGrid to_dense(const PillarTensor& t) {
    DenseGrid g(t.height(), t.width(), t.channels());
    for (size_t i = 0; i < t.size(); ++i) {
        const auto f = t.feature(i);
        std::copy(f.begin(), f.end(), g.at(t.coord(i).row, t.coord(i).col));
    }
    return g;
}

PillarTensor from_dense(const DenseGrid& g) {
    if (g.data.size() != static_cast<size_t>(g.height) * g.width * g.channels) {
        throw Error(Errc::ShapeMismatch, "dense grid size does not match its dimensions");
    }
    std::vector<Coord> coords;
    std::vector<float> features;
    for (int32_t r = 0; r < g.height; ++r) {
        for (int32_t c = 0; c < g.width; ++c) {
            const float* f = g.at(r, c);
            if (std::any_of(f, f + g.channels, [](float v) { return v != 0.0f; })) {
                coords.push_back({r, c});
                features.insert(features.end(), f, f + g.channels);
            }
        }
    }
    return PillarTensor::from_sorted(g.height, g.width, g.channels, std::move(coords),
                                     std::move(features));
}

PillarTensor from_dense_full(const DenseGrid& g) {
    if (g.data.size() != static_cast<size_t>(g.height) * g.width * g.channels) {
        throw Error(Errc::ShapeMismatch, "dense grid size does not match its dimensions");
    }
    std::vector<Coord> coords;
    coords.reserve(static_cast<size_t>(g.height) * g.width);
    for (int32_t r = 0; r < g.height; ++r) {
        for (int32_t c = 0; c < g.width; ++c) coords.push_back({r, c});
    }
    return PillarTensor::from_sorted(g.height, g.width, g.channels, std::move(coords), g.data);
}

double density(const PillarTensor& t) {
    const int64_t cells = t.shape().cells();
    return cells == 0 ? 0.0 : static_cast<double>(t.size()) / static_cast<double>(cells);
}

PillarTensor relu(const PillarTensor& t) {
    std::vector<float> f(t.features().begin(), t.features().end());
    for (float& v : f) v = v > 0.0f ? v : 0.0f;
    std::vector<Coord> c(t.coords().begin(), t.coords().end());
    return PillarTensor::from_sorted(t.height(), t.width(), t.channels(), std::move(c), std::move(f));
}

CoordIndex::CoordIndex(std::span<const Coord> sorted, GridShape shape)
    : coords_(sorted), shape_(shape), row_start_(static_cast<size_t>(shape.height) + 1, 0) {
    // counting pass, then prefix sum
    for (const Coord& c : sorted) ++row_start_[static_cast<size_t>(c.row) + 1];
    for (size_t r = 1; r < row_start_.size(); ++r) row_start_[r] += row_start_[r - 1];
}

std::pair<size_t, size_t> CoordIndex::row_range(int32_t r) const {
    if (r < 0 || r >= shape_.height) return {0, 0};
    return {row_start_[r], row_start_[static_cast<size_t>(r) + 1]};
}

std::ptrdiff_t CoordIndex::find(Coord c) const {
    if (!shape_.contains(c)) return npos;
    const auto [lo, hi] = row_range(c.row);
    const auto first = coords_.begin() + static_cast<std::ptrdiff_t>(lo);
    const auto last = coords_.begin() + static_cast<std::ptrdiff_t>(hi);
    const auto it = std::lower_bound(first, last, c);
    if (it != last && *it == c) return it - coords_.begin();
    return npos;
}

}  // namespace spe
