#include "spe/rulebook.hpp"

#include <algorithm>
#include <string>

#include "spe/error.hpp"

namespace spe {

namespace {

void sort_unique(std::vector<Coord>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Fills rb.rules by gathering, for each output, the input under every tap.
// Outputs are visited in order and taps ascending, so the result is already
// in canonical (out, w, in) order.
void gather_rules(Rulebook& rb, const CoordIndex& inputs, const KernelShape& k) {
    const int32_t vol = k.volume();
    rb.kernel_volume = vol;
    rb.rules.clear();
    for (size_t o = 0; o < rb.output_coords.size(); ++o) {
        const Coord oc = rb.output_coords[o];
        for (int32_t w = 0; w < vol; ++w) {
            const Coord off = k.offset(w);
            const Coord ic{k.stride * oc.row + off.row, k.stride * oc.col + off.col};
            const auto i = inputs.find(ic);
            if (i != CoordIndex::npos) {
                rb.rules.push_back({static_cast<int32_t>(o), w, static_cast<int32_t>(i)});
            }
        }
    }
}

void require_odd_stride1(const KernelShape& k) {
    if (k.stride != 1) {
        throw Error(Errc::StrideUnsupported, "stride " + std::to_string(k.stride) + " given, only stride 1 is supported");
    }
    if (!k.odd()) throw Error(Errc::BadKernelShape, "submanifold and SD conv need an odd kernel");
}

void require_2x2_stride2(const KernelShape& k) {
    if (k.k_h != 2 || k.k_w != 2 || k.stride != 2) {
        throw Error(Errc::BadKernelShape, "expected a 2x2 kernel with stride 2");
    }
}

}  // namespace

void Rulebook::validate(size_t n_inputs) const {
    validate_coords(output_coords, out_shape);
    for (size_t i = 0; i < rules.size(); ++i) {
        const Rule& r = rules[i];
        if (r.in < 0 || static_cast<size_t>(r.in) >= n_inputs || r.out < 0 ||
            static_cast<size_t>(r.out) >= output_coords.size() || r.w < 0 || r.w >= kernel_volume) {
            throw Error(Errc::ShapeMismatch, "rule " + std::to_string(i) + " index out of range");
        }
        if (i > 0 && !(rules[i - 1] < r)) {
            throw Error(Errc::UnsortedInput, "rule " + std::to_string(i) + " out of order or duplicated");
        }
    }
}

Rulebook build_rulebook_subm(std::span<const Coord> active, GridShape in_shape, const KernelShape& k) {
    require_odd_stride1(k);
    validate_coords(active, in_shape);
    Rulebook rb;
    rb.out_shape = in_shape;
    rb.output_coords.assign(active.begin(), active.end());
    gather_rules(rb, CoordIndex(active, in_shape), k);
    return rb;
}

Rulebook build_rulebook_sparse(std::span<const Coord> active, GridShape in_shape,
                               const KernelShape& k, GridShape out_bounds) {
    validate_coords(active, in_shape);
    Rulebook rb;
    rb.out_shape = out_bounds;
    const int32_t s = k.stride;
    rb.output_coords.reserve(active.size() * static_cast<size_t>(k.volume()) / (s * s) + 1);
    for (const Coord& ic : active) {
        for (int32_t w = 0; w < k.volume(); ++w) {
            const Coord off = k.offset(w);
            const int32_t dr = ic.row - off.row;
            const int32_t dc = ic.col - off.col;
            // integer preimage of the stride map only
            if (dr < 0 || dc < 0 || dr % s != 0 || dc % s != 0) continue;
            const Coord oc{dr / s, dc / s};
            if (out_bounds.contains(oc)) rb.output_coords.push_back(oc);
        }
    }
    sort_unique(rb.output_coords);
    gather_rules(rb, CoordIndex(active, in_shape), k);
    return rb;
}

Rulebook build_rulebook_sd_flags(std::span<const Coord> active, std::span<const uint8_t> dilate,
                                 GridShape in_shape, const KernelShape& k, GridShape out_bounds) {
    require_odd_stride1(k);
    validate_coords(active, in_shape);
    if (dilate.size() != active.size()) {
        throw Error(Errc::ShapeMismatch, "dilation flags do not align with the active set");
    }
    Rulebook rb;
    rb.out_shape = out_bounds;
    rb.output_coords.reserve(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
        const Coord ic = active[i];
        if (out_bounds.contains(ic)) rb.output_coords.push_back(ic);
        if (!dilate[i]) continue;
        for (int32_t w = 0; w < k.volume(); ++w) {
            const Coord off = k.offset(w);
            const Coord oc{ic.row - off.row, ic.col - off.col};
            if (out_bounds.contains(oc)) rb.output_coords.push_back(oc);
        }
    }
    sort_unique(rb.output_coords);
    gather_rules(rb, CoordIndex(active, in_shape), k);
    return rb;
}

Rulebook build_rulebook_sd(std::span<const Coord> active, std::span<const Coord> selected,
                           GridShape in_shape, const KernelShape& k, GridShape out_bounds) {
    validate_coords(active, in_shape);
    const CoordIndex index(active, in_shape);
    std::vector<uint8_t> flags(active.size(), 0);
    for (const Coord& s : selected) {
        const auto i = index.find(s);
        if (i == CoordIndex::npos) {
            throw Error(Errc::SelectionNotSubset, "selected pillar (" + std::to_string(s.row) + "," +
                                                      std::to_string(s.col) + ") is not active");
        }
        flags[static_cast<size_t>(i)] = 1;
    }
    return build_rulebook_sd_flags(active, flags, in_shape, k, out_bounds);
}

Rulebook build_rulebook_downsample2x2(std::span<const Coord> active, GridShape in_shape,
                                      const KernelShape& k) {
    require_2x2_stride2(k);
    validate_coords(active, in_shape);
    Rulebook rb;
    rb.out_shape = conv_output_shape(in_shape, k);
    rb.output_coords.reserve(active.size());
    for (const Coord& c : active) rb.output_coords.push_back({c.row / 2, c.col / 2});
    sort_unique(rb.output_coords);
    gather_rules(rb, CoordIndex(active, in_shape), k);
    return rb;
}

Rulebook build_rulebook_deconv2x2(std::span<const Coord> active, GridShape in_shape,
                                  const KernelShape& k, GridShape out_bounds) {
    require_2x2_stride2(k);
    validate_coords(active, in_shape);
    Rulebook rb;
    rb.out_shape = out_bounds;
    rb.kernel_volume = k.volume();
    rb.output_coords.reserve(active.size() * 4);
    for (const Coord& c : active) {
        for (int32_t dr = 0; dr < 2; ++dr) {
            for (int32_t dc = 0; dc < 2; ++dc) {
                const Coord oc{2 * c.row + dr, 2 * c.col + dc};
                if (out_bounds.contains(oc)) rb.output_coords.push_back(oc);
            }
        }
    }
    sort_unique(rb.output_coords);
    // each output has exactly one source: the input cell it was stamped from
    const CoordIndex index(active, in_shape);
    rb.rules.reserve(rb.output_coords.size());
    for (size_t o = 0; o < rb.output_coords.size(); ++o) {
        const Coord oc = rb.output_coords[o];
        const auto i = index.find({oc.row / 2, oc.col / 2});
        const int32_t w = (oc.row % 2) * 2 + (oc.col % 2);
        rb.rules.push_back({static_cast<int32_t>(o), w, static_cast<int32_t>(i)});
    }
    return rb;
}

uint64_t flops_of_rulebook(const Rulebook& rb, int32_t c_in, int32_t c_out) {
    const uint64_t macs = static_cast<uint64_t>(rb.rules.size()) * static_cast<uint64_t>(c_in) *
                          static_cast<uint64_t>(c_out);
    return 2 * macs + static_cast<uint64_t>(rb.output_coords.size()) * static_cast<uint64_t>(c_out);
}

}  // namespace spe
