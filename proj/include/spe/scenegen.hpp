#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "spe/sparse_tensor.hpp"

namespace spe {

enum class ScenePattern { UniformRandom, Clustered, RingArcs };
enum class FeatureDist { UnitGaussian, Constant };

/// Synthetic stand-in for a LiDAR bird's-eye-view pillar map.
struct SceneSpec {
    int32_t height = 64;
    int32_t width = 64;
    int32_t channels = 4;
    double density = 0.05;
    ScenePattern pattern = ScenePattern::UniformRandom;
    int32_t clusters = 8;   // Clustered
    double spread = 3.0;    // Clustered: gaussian sigma in cells
    int32_t arcs = 16;      // RingArcs
    uint64_t seed = 0;
    FeatureDist features = FeatureDist::UnitGaussian;
    float constant_value = 1.0f;
};

/// round(density * H * W), the exact number of active pillars generate() emits.
int64_t scene_pillar_count(const SceneSpec& spec);

/// Deterministic in spec (including seed). Throws DensityOverflow when the
/// requested count exceeds the grid.
PillarTensor generate(const SceneSpec& spec);

/// kitti-like: 496x432, ~3% density, clustered.  nuscenes-like: 512x512, ~4%, ring arcs.
std::optional<SceneSpec> scene_preset(std::string_view name);

}  // namespace spe
