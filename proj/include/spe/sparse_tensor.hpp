#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spe {

struct Coord {
    int32_t row = 0;
    int32_t col = 0;

    friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
};

struct GridShape {
    int32_t height = 0;
    int32_t width = 0;

    constexpr int64_t cells() const { return int64_t{height} * width; }
    constexpr bool contains(Coord c) const {
        return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
    }
    friend constexpr bool operator==(const GridShape&, const GridShape&) = default;
};

struct Entry {
    Coord coord;
    std::vector<float> features;
};

/// Row-major dense mirror of a pillar map; index = (row * width + col) * channels + c.
struct DenseGrid {
    int32_t height = 0;
    int32_t width = 0;
    int32_t channels = 0;
    std::vector<float> data;

    DenseGrid() = default;
    DenseGrid(int32_t h, int32_t w, int32_t c)
        : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, 0.0f) {}

    GridShape shape() const { return {height, width}; }
    float* at(int32_t r, int32_t c) { return data.data() + (static_cast<size_t>(r) * width + c) * channels; }
    const float* at(int32_t r, int32_t c) const {
        return data.data() + (static_cast<size_t>(r) * width + c) * channels;
    }
};

/// Sparse pillar feature map in coordinate-list form. Entries are sorted by
/// (row, col) with no duplicates; an entry is active by membership, even when
/// every channel is zero. Immutable once built.
class PillarTensor {
public:
    PillarTensor() = default;
    PillarTensor(int32_t height, int32_t width, int32_t channels);

    /// Sorts and validates an arbitrary entry list.
    static PillarTensor from_entries(int32_t height, int32_t width, int32_t channels,
                                     std::vector<Entry> entries);

    /// Takes already-sorted coordinates and a flat n*C feature array; validates in O(n).
    static PillarTensor from_sorted(int32_t height, int32_t width, int32_t channels,
                                    std::vector<Coord> coords, std::vector<float> features);

    int32_t height() const { return height_; }
    int32_t width() const { return width_; }
    int32_t channels() const { return channels_; }
    GridShape shape() const { return {height_, width_}; }

    size_t size() const { return coords_.size(); }
    bool empty() const { return coords_.empty(); }

    std::span<const Coord> coords() const { return coords_; }
    std::span<const float> features() const { return features_; }
    Coord coord(size_t i) const { return coords_[i]; }
    std::span<const float> feature(size_t i) const {
        return std::span<const float>(features_).subspan(i * channels_, channels_);
    }

    /// Throws spe::Error on unsorted, duplicate, out-of-bounds or mis-sized data.
    void validate() const;

    friend bool operator==(const PillarTensor&, const PillarTensor&) = default;

private:
    int32_t height_ = 0;
    int32_t width_ = 0;
    int32_t channels_ = 0;
    std::vector<Coord> coords_;
    std::vector<float> features_;
};

DenseGrid to_dense(const PillarTensor& t);

/// Activates only positions with at least one nonzero channel.
PillarTensor from_dense(const DenseGrid& g);

/// Activates every grid position; the output of a dense layer.
PillarTensor from_dense_full(const DenseGrid& g);

double density(const PillarTensor& t);

/// Applies max(0, x) to every feature, coordinates unchanged.
PillarTensor relu(const PillarTensor& t);

/// O(1) row lookup plus binary search within the row over a sorted coordinate list.
class CoordIndex {
public:
    static constexpr std::ptrdiff_t npos = -1;

    CoordIndex(std::span<const Coord> sorted, GridShape shape);

    std::ptrdiff_t find(Coord c) const;
    bool contains(Coord c) const { return find(c) != npos; }

    /// Half-open index range [first, second) of the entries in row r.
    std::pair<size_t, size_t> row_range(int32_t r) const;

    GridShape shape() const { return shape_; }

private:
    std::span<const Coord> coords_;
    GridShape shape_;
    std::vector<uint32_t> row_start_;
};

/// Checks sortedness, uniqueness and bounds of a coordinate list.
void validate_coords(std::span<const Coord> coords, GridShape shape);

}  // namespace spe
