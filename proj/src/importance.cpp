#include "spe/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spe/error.hpp"

namespace spe {

namespace {

void check_percent(double t, const char* what) {
    if (!(t >= 0.0 && t <= 100.0)) {
        throw Error(Errc::InvalidArgument, std::string(what) + " must lie in [0, 100], got " +
                                               std::to_string(t));
    }
}

double measure(std::span<const float> f, Measure m) {
    if (f.empty()) return 0.0;
    if (m == Measure::MaxAbs) {
        double best = 0.0;
        for (float v : f) best = std::max(best, std::fabs(static_cast<double>(v)));
        return best;
    }
    double sum = 0.0;
    for (float v : f) sum += std::fabs(static_cast<double>(v));
    return sum / static_cast<double>(f.size());
}

// Indices of the k best scores under (value desc, coord asc).
std::vector<size_t> best_indices(const ImportanceScores& s, size_t k) {
    std::vector<size_t> idx(s.values.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    const auto better = [&](size_t a, size_t b) {
        if (s.values[a] != s.values[b]) return s.values[a] > s.values[b];
        return s.coords[a] < s.coords[b];
    };
    if (k < idx.size()) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
        idx.resize(k);
    }
    return idx;
}

Selection selection_from_flags(const ImportanceScores& s, const std::vector<uint8_t>& flags,
                               SelectionMode mode, double parameter) {
    Selection sel{mode, parameter, {}};
    for (size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) sel.selected.push_back(s.coords[i]);
    }
    std::sort(sel.selected.begin(), sel.selected.end());
    return sel;
}

}  // namespace

ImportanceScores pillar_importance(const PillarTensor& t, const ImportanceConfig& cfg) {
    const size_t n = t.size();
    ImportanceScores out;
    out.coords.assign(t.coords().begin(), t.coords().end());
    std::vector<double> own(n);
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) own[i] = measure(t.feature(static_cast<size_t>(i)), cfg.measure);

    if (cfg.aggregate == Aggregate::Identity) {
        out.values = std::move(own);
        return out;
    }

    out.values.resize(n);
    const CoordIndex index(t.coords(), t.shape());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
        const Coord p = t.coord(static_cast<size_t>(i));
        double sum = 0.0;
        double best = 0.0;
        int count = 0;
        for (int32_t dr = -1; dr <= 1; ++dr) {
            for (int32_t dc = -1; dc <= 1; ++dc) {
                const auto j = index.find({p.row + dr, p.col + dc});
                if (j == CoordIndex::npos) continue;
                const double v = own[static_cast<size_t>(j)];
                sum += v;
                best = count == 0 ? v : std::max(best, v);
                ++count;
            }
        }
        // p itself is always in its own window, so count >= 1
        out.values[i] = cfg.aggregate == Aggregate::AvgPool3x3 ? sum / count : best;
    }
    return out;
}

size_t topk_count(size_t n, double t_percent) {
    check_percent(t_percent, "selection ratio");
    const double x = t_percent * static_cast<double>(n) / 100.0;
    const double k = std::ceil(x - 1e-9 * std::max(1.0, x));
    if (k <= 0.0) return 0;
    return std::min(n, static_cast<size_t>(k));
}

std::vector<uint8_t> topk_flags(const ImportanceScores& scores, double t_percent) {
    const size_t k = topk_count(scores.values.size(), t_percent);
    std::vector<uint8_t> flags(scores.values.size(), 0);
    for (size_t i : best_indices(scores, k)) flags[i] = 1;
    return flags;
}

std::vector<uint8_t> threshold_flags(const ImportanceScores& scores, double theta) {
    std::vector<uint8_t> flags(scores.values.size(), 0);
    for (size_t i = 0; i < flags.size(); ++i) flags[i] = scores.values[i] >= theta ? 1 : 0;
    return flags;
}

Selection select_topk(const ImportanceScores& scores, double t_percent) {
    return selection_from_flags(scores, topk_flags(scores, t_percent), SelectionMode::TopK, t_percent);
}

Selection select_threshold(const ImportanceScores& scores, double theta) {
    return selection_from_flags(scores, threshold_flags(scores, theta), SelectionMode::Threshold, theta);
}

double calibrate_threshold(std::span<const std::vector<double>> score_sets, double t_percent) {
    std::vector<double> pool;
    for (const auto& s : score_sets) pool.insert(pool.end(), s.begin(), s.end());
    if (pool.empty()) throw Error(Errc::EmptyCalibrationPool, "no scores to calibrate against");
    const size_t k = topk_count(pool.size(), t_percent);
    if (k == 0) return std::numeric_limits<double>::infinity();
    const auto kth = pool.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(pool.begin(), kth, pool.end(), std::greater<>{});
    return *kth;
}

PillarTensor prune_by_importance(const PillarTensor& t, double keep_ratio, const ImportanceConfig& cfg) {
    const auto flags = topk_flags(pillar_importance(t, cfg), keep_ratio);
    std::vector<Coord> coords;
    std::vector<float> features;
    for (size_t i = 0; i < t.size(); ++i) {
        if (!flags[i]) continue;
        coords.push_back(t.coord(i));
        const auto f = t.feature(i);
        features.insert(features.end(), f.begin(), f.end());
    }
    return PillarTensor::from_sorted(t.height(), t.width(), t.channels(), std::move(coords),
                                     std::move(features));
}

}  // namespace spe
