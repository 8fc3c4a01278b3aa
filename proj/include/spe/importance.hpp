#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spe/sparse_tensor.hpp"

namespace spe {

/// Per-pillar magnitude measure applied to one feature vector.
enum class Measure { MeanAbs, MaxAbs };

/// How per-pillar measures are combined over the pillar's neighbourhood.
/// Pooled variants use the active pillars of the 3x3 window around p, p included.
enum class Aggregate { Identity, AvgPool3x3, MaxPool3x3 };

struct ImportanceConfig {
    Measure measure = Measure::MeanAbs;
    Aggregate aggregate = Aggregate::Identity;

    friend bool operator==(const ImportanceConfig&, const ImportanceConfig&) = default;
};

/// One score per active entry, index-aligned with the tensor it came from.
struct ImportanceScores {
    std::vector<Coord> coords;
    std::vector<double> values;
};

ImportanceScores pillar_importance(const PillarTensor& t, const ImportanceConfig& cfg);

enum class SelectionMode { TopK, Threshold };

struct Selection {
    SelectionMode mode = SelectionMode::TopK;
    double parameter = 0.0;        // t in percent for TopK, theta for Threshold
    std::vector<Coord> selected;   // sorted by (row, col)
};

/// ceil(t/100 * n) clamped to [0, n]; tolerant of binary rounding in t*n/100.
size_t topk_count(size_t n, double t_percent);

/// Flags (aligned with scores) of the topk_count highest scores; ties go to
/// the smaller (row, col).
std::vector<uint8_t> topk_flags(const ImportanceScores& scores, double t_percent);

/// Flags of scores >= theta.
std::vector<uint8_t> threshold_flags(const ImportanceScores& scores, double theta);

Selection select_topk(const ImportanceScores& scores, double t_percent);
Selection select_threshold(const ImportanceScores& scores, double theta);

/// Dilation threshold from a pool of per-scene score sets: the k-th largest
/// pooled score with k = topk_count(pool size, t), i.e. the nearest-rank
/// (1 - t/100) quantile counted from the top. Returns +inf for t = 0.
double calibrate_threshold(std::span<const std::vector<double>> score_sets, double t_percent);

/// Keeps the top keep_ratio percent of pillars by importance (same tie-break as topk_flags).
PillarTensor prune_by_importance(const PillarTensor& t, double keep_ratio, const ImportanceConfig& cfg);

}  // namespace spe
