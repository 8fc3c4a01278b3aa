#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spe/importance.hpp"
#include "spe/kernel.hpp"

namespace spe {

enum class LayerOp { Conv, Deconv };
enum class ConvMode { Dense, SparseFull, SubM, SD };
enum class Activation { None, ReLU };

const char* to_string(ConvMode m);
const char* to_string(LayerOp op);
std::optional<ConvMode> parse_conv_mode(std::string_view s);

/// Where an SD layer's dilation set comes from.
struct SdParams {
    SelectionMode source = SelectionMode::TopK;
    double value = 2.0;  // t in percent, or theta
    ImportanceConfig importance;

    friend bool operator==(const SdParams&, const SdParams&) = default;
};

struct LayerSpec {
    std::string name;
    LayerOp op = LayerOp::Conv;
    KernelShape kernel{3, 3, 1};
    int32_t c_in = 0;
    int32_t c_out = 0;
    ConvMode mode = ConvMode::SubM;
    SdParams sd;
    Activation activation = Activation::ReLU;
    bool fixed = false;          // mode overrides leave this layer alone
    std::string weights_file;    // optional KRN file; otherwise seeded random

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct StageSpec {
    std::string name;
    std::optional<LayerSpec> downsample;
    std::vector<LayerSpec> body;

    friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct NeckBranch {
    int32_t from_stage = 0;
    std::vector<LayerSpec> layers;

    friend bool operator==(const NeckBranch&, const NeckBranch&) = default;
};

/// Branch outputs are concatenated channel-wise over the union of their
/// active sets, then run through `post`. No branches: the network output is
/// the last stage's output.
struct NeckSpec {
    std::vector<NeckBranch> branches;
    std::vector<LayerSpec> post;

    friend bool operator==(const NeckSpec&, const NeckSpec&) = default;
};

struct NetworkSpec {
    std::string name;
    int32_t height = 0;
    int32_t width = 0;
    int32_t channels = 0;
    uint64_t weight_seed = 0;
    double bias_scale = 0.1;
    std::vector<StageSpec> stages;
    NeckSpec neck;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// A layer in execution order with its stable id and ordinal (weight seed stream).
struct LayerRef {
    std::string id;
    size_t ordinal = 0;
    const LayerSpec* layer = nullptr;
};

std::vector<LayerRef> flatten_layers(const NetworkSpec& spec);

/// Same order as flatten_layers, for in-place edits.
std::vector<LayerSpec*> mutable_layers(NetworkSpec& spec);

/// Checks channel chaining, grid bookkeeping, and per-layer mode/kernel
/// legality; throws SpecMismatch.
void validate(const NetworkSpec& spec);

/// Kernel for a layer: the KRN file when given (relative to base_dir), else
/// seeded from (weight_seed, ordinal).
Kernel layer_kernel(const NetworkSpec& spec, const LayerRef& ref,
                    const std::filesystem::path& base_dir = {});

/// Sets every non-fixed layer to `mode`: Dense applies everywhere; sparse
/// modes apply to stride-1 odd-kernel convs wider than 1x1, and all other
/// layers become SparseFull (the only sparse form of a 1x1, strided, or
/// transposed layer). SD layers keep their SdParams.
NetworkSpec with_mode(NetworkSpec spec, ConvMode mode);

/// Sets every SD layer to top-k selection with ratio t.
NetworkSpec with_sd_ratio(NetworkSpec spec, double t_percent);

/// Presets: "pointpillars", "centerpoint-backbone", "pillarnet-neck".
std::optional<NetworkSpec> network_preset(std::string_view name, int32_t height, int32_t width,
                                          int32_t channels = 64);
std::vector<std::string> network_preset_names();

NetworkSpec network_from_json(std::string_view text);
std::string network_to_json(const NetworkSpec& spec);
NetworkSpec load_network(const std::filesystem::path& path);

}  // namespace spe
