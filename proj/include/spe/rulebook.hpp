#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "spe/kernel.hpp"
#include "spe/sparse_tensor.hpp"

namespace spe {

/// One multiply-accumulate group: output `out` += W[w] * input `in`.
struct Rule {
    int32_t out = 0;
    int32_t w = 0;
    int32_t in = 0;

    // member order gives the canonical (output, weight offset, input) sort
    friend constexpr auto operator<=>(const Rule&, const Rule&) = default;
};

/// Executable form of a sparse convolution. Rules are sorted by
/// (out, w, in) and unique; output_coords are sorted and unique, so two
/// rulebooks describing the same tuple set compare equal with ==.
struct Rulebook {
    std::vector<Rule> rules;
    std::vector<Coord> output_coords;
    GridShape out_shape;
    int32_t kernel_volume = 0;

    /// Range and ordering checks against an input of n_inputs entries.
    void validate(size_t n_inputs) const;

    friend bool operator==(const Rulebook&, const Rulebook&) = default;
};

/// Submanifold: the active set maps onto itself. Requires stride 1 and an odd kernel.
Rulebook build_rulebook_subm(std::span<const Coord> active, GridShape in_shape, const KernelShape& k);

/// Regular sparse conv: every in-bounds output reachable from an active input.
Rulebook build_rulebook_sparse(std::span<const Coord> active, GridShape in_shape,
                               const KernelShape& k, GridShape out_bounds);

/// Selective dilation: outputs are the active set plus the clipped kernel
/// neighbourhood of every selected pillar. `selected` must be a subset of `active`.
Rulebook build_rulebook_sd(std::span<const Coord> active, std::span<const Coord> selected,
                           GridShape in_shape, const KernelShape& k, GridShape out_bounds);

/// Same as above with the selection given as one flag per active entry.
Rulebook build_rulebook_sd_flags(std::span<const Coord> active, std::span<const uint8_t> dilate,
                                 GridShape in_shape, const KernelShape& k, GridShape out_bounds);

/// 2x2 / stride-2 downsample: (r, c) feeds (r/2, c/2) through tap (r%2, c%2).
Rulebook build_rulebook_downsample2x2(std::span<const Coord> active, GridShape in_shape,
                                      const KernelShape& k);

/// 2x2 / stride-2 transposed conv: (r, c) feeds (2r+dr, 2c+dc) through tap (dr, dc).
Rulebook build_rulebook_deconv2x2(std::span<const Coord> active, GridShape in_shape,
                                  const KernelShape& k, GridShape out_bounds);

/// 2 * MACs + one add per output channel per output entry.
uint64_t flops_of_rulebook(const Rulebook& rb, int32_t c_in, int32_t c_out);

}  // namespace spe
