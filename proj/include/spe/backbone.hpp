#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spe/importance.hpp"
#include "spe/kernel.hpp"
#include "spe/network.hpp"
#include "spe/rulebook.hpp"
#include "spe/sparse_tensor.hpp"

namespace spe {

struct LayerReport {
    std::string id;
    LayerOp op = LayerOp::Conv;
    ConvMode mode = ConvMode::SubM;
    KernelShape kernel;
    int32_t c_in = 0;
    int32_t c_out = 0;
    GridShape in_shape;
    GridShape out_shape;
    uint64_t active_in = 0;
    uint64_t active_out = 0;
    double density_out = 0.0;
    uint64_t rules = 0;  // 0 for dense layers
    uint64_t flops = 0;
    std::optional<uint64_t> selected_count;  // SD only

    friend bool operator==(const LayerReport&, const LayerReport&) = default;
};

/// Everything a layer saw and produced; handed to RunOptions::observer.
/// rulebook, dilate and scores are null where the layer has none.
struct LayerTrace {
    const LayerRef& ref;
    const LayerReport& report;
    const PillarTensor& input;
    const Kernel& kernel;
    const Rulebook* rulebook = nullptr;
    const std::vector<uint8_t>* dilate = nullptr;
    const ImportanceScores* scores = nullptr;
};

using LayerObserver = std::function<void(const LayerTrace&)>;

struct RunOptions {
    std::filesystem::path base_dir;  // resolves relative weight files
    /// false: feature values are computed only as far as the last layer whose
    /// output set depends on them (value-driven SD selection); later outputs
    /// carry zero features. Reports are unaffected.
    bool compute_features = true;
    LayerObserver observer;
};

struct NetworkResult {
    PillarTensor output;
    std::vector<PillarTensor> stage_outputs;
    std::vector<LayerReport> reports;
};

/// Runs stages in order, then the neck branches and their concatenation, then
/// the post layers. Dense layers emit fully active outputs.
NetworkResult run_network(const PillarTensor& input, const NetworkSpec& spec, const RunOptions& opt = {});

/// Channel-wise concatenation over the union of the active sets, zero fill.
PillarTensor concat_channels(std::span<const PillarTensor> parts);

uint64_t total_flops(std::span<const LayerReport> reports);

/// FLOPs of a single layer executed densely over its full input grid.
uint64_t dense_layer_flops(const LayerSpec& l, GridShape in_shape);

/// FLOPs of the whole network executed densely, fixed layers included; needs no input.
uint64_t dense_flops(const NetworkSpec& spec);

/// Dense reference for one run of spec: every layer a mode override would
/// densify at its dense cost, fixed sparse layers (a SubM encoder, say) at the
/// cost they had in `reports`.
uint64_t dense_reference_flops(const NetworkSpec& spec, std::span<const LayerReport> reports);

/// Grid each flattened layer reads, in flatten_layers order.
std::vector<GridShape> layer_input_shapes(const NetworkSpec& spec);

struct ModeTotal {
    std::string label;
    uint64_t flops = 0;
    double ratio = 0.0;  // dense FLOPs / flops
};

/// Dense reference row, then one run per mode through with_mode(spec, mode).
std::vector<ModeTotal> compare_modes(const PillarTensor& scene, const NetworkSpec& spec,
                                     std::span<const ConvMode> modes, const RunOptions& opt = {});

}  // namespace spe
