#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spe/backbone.hpp"
#include "spe/kernel.hpp"
#include "spe/network.hpp"
#include "spe/rulebook.hpp"
#include "spe/sparse_tensor.hpp"

namespace spe {

/// Cycles per merged column spent in each rule-generation stage.
struct StageLatency {
    uint32_t alignment = 1;
    uint32_t row_merge = 1;
    uint32_t dilation_check = 1;
    uint32_t column_dilation = 1;

    friend bool operator==(const StageLatency&, const StageLatency&) = default;
};

struct AcceleratorConfig {
    int32_t array_rows = 64;
    int32_t array_cols = 64;
    int64_t sram_kbytes = 654;
    StageLatency latency;

    /// Throws InvalidArgument unless every field is positive.
    void validate() const;

    friend bool operator==(const AcceleratorConfig&, const AcceleratorConfig&) = default;
};

AcceleratorConfig accelerator_from_json(std::string_view text);
std::string accelerator_to_json(const AcceleratorConfig& cfg);

/// One column of a target output row after merging the (up to three) input
/// rows that feed it.
struct MergedColumn {
    int32_t col = 0;
    int32_t contributors[3] = {-1, -1, -1};  // input entry index from rows R-1, R, R+1, or -1
    bool dilate = false;                     // any contributor selected

    bool has(int32_t dr) const { return contributors[dr + 1] >= 0; }
};

/// Merged columns for target row `row`, ascending by column.
std::vector<MergedColumn> merge_rows(std::span<const Coord> active, std::span<const uint8_t> dilate,
                                     const CoordIndex& index, int32_t row);

/// Per-stage cycle totals of rule generation. `total` sums, over target rows,
/// the slowest stage of that row (stages decoupled by FIFOs).
struct MappingCycles {
    uint64_t alignment = 0;
    uint64_t row_merge = 0;
    uint64_t dilation_check = 0;
    uint64_t column_dilation = 0;
    uint64_t total = 0;

    friend bool operator==(const MappingCycles&, const MappingCycles&) = default;
};

struct CycleStats {
    MappingCycles mapping;
    uint64_t tile_passes = 0;
    uint64_t gemm_cycles = 0;
    uint64_t fill_cycles = 0;
    uint64_t stall_cycles = 0;

    /// Execution side: gemm + fill + stall.
    uint64_t exec() const { return gemm_cycles + fill_cycles + stall_cycles; }
    /// Phases run back to back.
    uint64_t total() const { return mapping.total + exec(); }

    friend bool operator==(const CycleStats&, const CycleStats&) = default;
};

struct RguResult {
    Rulebook rulebook;
    MappingCycles cycles;
    uint64_t merged_columns = 0;
    uint64_t rows_processed = 0;
};

/// Streaming rule generation for a 3x3 stride-1 layer with per-entry dilate
/// flags. Throws UnsortedInput/DuplicateCoord/OutOfBounds on a bad active
/// list, ShapeMismatch on a flag count mismatch, BadKernelShape otherwise.
RguResult rgu_generate(std::span<const Coord> active, std::span<const uint8_t> dilate, GridShape in_shape,
                       const KernelShape& k, const AcceleratorConfig& cfg = {});

/// Mapping cost of layers the RGU does not handle (1x1, strided, transposed):
/// every input entry passes each stage once.
MappingCycles direct_mapping_cycles(uint64_t n_inputs, const AcceleratorConfig& cfg);

/// Execution cycles of a rulebook on the array. Output channels tile across
/// columns, tuples sharing a weight offset tile across rows, and each pass
/// streams c_in cycles. Mapping is left at zero.
CycleStats simulate_layer(const Rulebook& rb, int32_t c_in, int32_t c_out, const AcceleratorConfig& cfg = {});

/// Output-stationary systolic baseline over an out_h x out_w output grid.
CycleStats dense_baseline_cycles(int32_t out_h, int32_t out_w, int32_t c_in, int32_t c_out,
                                 const KernelShape& k, const AcceleratorConfig& cfg = {});

/// Layer L's mapping hides behind layer L-1's execution:
/// mapping_1 + sum max(mapping_L, exec_{L-1}) + exec_N.
uint64_t overlapped_total(std::span<const CycleStats> layers);

struct LayerCycles {
    std::string id;
    ConvMode mode = ConvMode::SubM;
    CycleStats sparse;
    CycleStats dense;
    uint64_t sparse_flops = 0;
    uint64_t dense_flops = 0;

    double speedup() const;  // dense.total() / sparse.total()
    double ideal() const;    // dense_flops / sparse_flops
};

struct SpeedupReport {
    std::string network;
    std::vector<LayerCycles> layers;
    uint64_t sparse_total = 0;  // overlapped
    uint64_t dense_total = 0;
    uint64_t sparse_flops = 0;
    uint64_t dense_flops = 0;

    double speedup() const;
    double ideal() const;
};

/// Runs the network and simulates every layer. Dense-mode layers cost the
/// dense baseline; 3x3 stride-1 sparse layers go through rgu_generate.
SpeedupReport simulate_network(const PillarTensor& scene, const NetworkSpec& spec,
                               const AcceleratorConfig& cfg = {}, const RunOptions& opt = {});

}  // namespace spe
