#include "spe/spade_sim.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "json.hpp"
#include "spe/error.hpp"

namespace spe {

using nlohmann::json;

void AcceleratorConfig::validate() const {
    const auto& l = latency;
    if (array_rows <= 0 || array_cols <= 0 || sram_kbytes <= 0 || l.alignment == 0 || l.row_merge == 0 ||
        l.dilation_check == 0 || l.column_dilation == 0) {
        throw Error(Errc::InvalidArgument, "accelerator config fields must all be positive");
    }
}

AcceleratorConfig accelerator_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, std::string("accelerator config: ") + e.what());
    }
    AcceleratorConfig cfg;
    try {
        cfg.array_rows = j.value("array_rows", cfg.array_rows);
        cfg.array_cols = j.value("array_cols", cfg.array_cols);
        cfg.sram_kbytes = j.value("sram_kbytes", cfg.sram_kbytes);
        if (j.contains("latency")) {
            const json& l = j.at("latency");
            cfg.latency.alignment = l.value("alignment", cfg.latency.alignment);
            cfg.latency.row_merge = l.value("row_merge", cfg.latency.row_merge);
            cfg.latency.dilation_check = l.value("dilation_check", cfg.latency.dilation_check);
            cfg.latency.column_dilation = l.value("column_dilation", cfg.latency.column_dilation);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("accelerator config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string accelerator_to_json(const AcceleratorConfig& cfg) {
    const json j = {{"array_rows", cfg.array_rows},
                    {"array_cols", cfg.array_cols},
                    {"sram_kbytes", cfg.sram_kbytes},
                    {"latency",
                     {{"alignment", cfg.latency.alignment},
                      {"row_merge", cfg.latency.row_merge},
                      {"dilation_check", cfg.latency.dilation_check},
                      {"column_dilation", cfg.latency.column_dilation}}}};
    return j.dump(2) + "\n";
}

std::vector<MergedColumn> merge_rows(std::span<const Coord> active, std::span<const uint8_t> dilate,
                                     const CoordIndex& index, int32_t row) {
    std::array<std::pair<size_t, size_t>, 3> range{};
    for (int32_t dr = -1; dr <= 1; ++dr) {
        const int32_t r = row + dr;
        range[dr + 1] = (r >= 0 && r < index.shape().height) ? index.row_range(r) : std::pair<size_t, size_t>{0, 0};
    }
    std::vector<MergedColumn> out;
    std::array<size_t, 3> pos{range[0].first, range[1].first, range[2].first};
    while (true) {
        int32_t next = -1;
        for (int s = 0; s < 3; ++s) {
            if (pos[s] < range[s].second) {
                const int32_t c = active[pos[s]].col;
                if (next < 0 || c < next) next = c;
            }
        }
        if (next < 0) break;
        MergedColumn m;
        m.col = next;
        for (int s = 0; s < 3; ++s) {
            if (pos[s] < range[s].second && active[pos[s]].col == next) {
                m.contributors[s] = static_cast<int32_t>(pos[s]);
                m.dilate = m.dilate || dilate[pos[s]] != 0;
                ++pos[s];
            }
        }
        out.push_back(m);
    }
    return out;
}

RguResult rgu_generate(std::span<const Coord> active, std::span<const uint8_t> dilate, GridShape in_shape,
                       const KernelShape& k, const AcceleratorConfig& cfg) {
    if (k.k_h != 3 || k.k_w != 3 || k.stride != 1) {
        throw Error(Errc::BadKernelShape, "rule generation unit handles 3x3 stride-1 kernels");
    }
    validate_coords(active, in_shape);
    if (dilate.size() != active.size()) {
        throw Error(Errc::ShapeMismatch, "dilation flags do not align with the active set");
    }
    const CoordIndex index(active, in_shape);
    const StageLatency& lat = cfg.latency;

    RguResult res;
    Rulebook& rb = res.rulebook;
    rb.out_shape = in_shape;
    rb.kernel_volume = 9;

    std::vector<int32_t> row_outputs;
    for (int32_t row = 0; row < in_shape.height; ++row) {
        const auto merged = merge_rows(active, dilate, index, row);
        if (merged.empty()) continue;
        ++res.rows_processed;
        res.merged_columns += merged.size();

        // alignment streams the three input rows side by side
        uint64_t align = 0;
        for (int32_t dr = -1; dr <= 1; ++dr) {
            const int32_t r = row + dr;
            if (r < 0 || r >= in_shape.height) continue;
            const auto [first, last] = index.row_range(r);
            align = std::max<uint64_t>(align, last - first);
        }

        const auto find = [&merged](int32_t col) -> const MergedColumn* {
            const auto it = std::lower_bound(merged.begin(), merged.end(), col,
                                             [](const MergedColumn& m, int32_t c) { return m.col < c; });
            return (it != merged.end() && it->col == col) ? &*it : nullptr;
        };

        // dilation check window: prev, current, next merged column around each candidate output
        row_outputs.clear();
        for (const auto& m : merged) {
            for (int32_t x = m.col - 1; x <= m.col + 1; ++x) {
                if (x < 0 || x >= in_shape.width) continue;
                if (!row_outputs.empty() && row_outputs.back() >= x) continue;
                bool emit = false;
                for (int32_t c = x - 1; c <= x + 1 && !emit; ++c) {
                    const MergedColumn* n = find(c);
                    if (!n) continue;
                    emit = n->dilate || (c == x && n->has(0));
                }
                if (emit) row_outputs.push_back(x);
            }
        }
        const auto base = static_cast<int32_t>(rb.output_coords.size());
        for (int32_t x : row_outputs) rb.output_coords.push_back({row, x});

        // column-wise dilation: one merged column per cycle
        uint64_t dilation_cycles = 0;
        for (const auto& m : merged) {
            bool any = false;
            for (int32_t x = m.col - 1; x <= m.col + 1; ++x) {
                const auto it = std::lower_bound(row_outputs.begin(), row_outputs.end(), x);
                if (it == row_outputs.end() || *it != x) continue;
                const int32_t out = base + static_cast<int32_t>(it - row_outputs.begin());
                for (int32_t dr = -1; dr <= 1; ++dr) {
                    if (!m.has(dr)) continue;
                    const int32_t w = (dr + 1) * 3 + (m.col - x + 1);
                    rb.rules.push_back({out, w, m.contributors[dr + 1]});
                    any = true;
                }
            }
            if (any) ++dilation_cycles;
        }

        const uint64_t a = align * lat.alignment;
        const uint64_t rm = merged.size() * lat.row_merge;
        const uint64_t dc = merged.size() * lat.dilation_check;
        const uint64_t cd = dilation_cycles * lat.column_dilation;
        res.cycles.alignment += a;
        res.cycles.row_merge += rm;
        res.cycles.dilation_check += dc;
        res.cycles.column_dilation += cd;
        res.cycles.total += std::max({a, rm, dc, cd});
    }
    std::sort(rb.rules.begin(), rb.rules.end());
    return res;
}

MappingCycles direct_mapping_cycles(uint64_t n_inputs, const AcceleratorConfig& cfg) {
    const StageLatency& l = cfg.latency;
    MappingCycles m;
    m.alignment = n_inputs * l.alignment;
    m.row_merge = n_inputs * l.row_merge;
    m.dilation_check = n_inputs * l.dilation_check;
    m.column_dilation = n_inputs * l.column_dilation;
    m.total = std::max({m.alignment, m.row_merge, m.dilation_check, m.column_dilation});
    return m;
}

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

uint64_t spill_lines(uint64_t values, const AcceleratorConfig& cfg) {
    const uint64_t bytes = values * 4;
    const uint64_t sram = static_cast<uint64_t>(cfg.sram_kbytes) * 1024;
    return bytes > sram ? ceil_div(bytes - sram, 64 * 4) : 0;
}

}  // namespace

CycleStats simulate_layer(const Rulebook& rb, int32_t c_in, int32_t c_out, const AcceleratorConfig& cfg) {
    cfg.validate();
    CycleStats s;
    if (rb.rules.empty()) return s;
    std::vector<uint64_t> per_offset(static_cast<size_t>(rb.kernel_volume), 0);
    int32_t max_in = -1;
    for (const Rule& r : rb.rules) {
        ++per_offset[static_cast<size_t>(r.w)];
        max_in = std::max(max_in, r.in);
    }
    std::vector<uint8_t> used(static_cast<size_t>(max_in) + 1, 0);
    for (const Rule& r : rb.rules) used[static_cast<size_t>(r.in)] = 1;
    const auto n_in = static_cast<uint64_t>(std::count(used.begin(), used.end(), 1));

    const uint64_t col_tiles = ceil_div(static_cast<uint64_t>(c_out), static_cast<uint64_t>(cfg.array_cols));
    for (uint64_t n : per_offset) {
        s.tile_passes += ceil_div(n, static_cast<uint64_t>(cfg.array_rows)) * col_tiles;
    }
    s.gemm_cycles = s.tile_passes * static_cast<uint64_t>(c_in);
    s.fill_cycles = static_cast<uint64_t>(cfg.array_rows + cfg.array_cols);
    const uint64_t cin = static_cast<uint64_t>(c_in);
    const uint64_t cout = static_cast<uint64_t>(c_out);
    s.stall_cycles = spill_lines(n_in * cin + rb.output_coords.size() * cout +
                                     static_cast<uint64_t>(rb.kernel_volume) * cin * cout,
                                 cfg);
    return s;
}

CycleStats dense_baseline_cycles(int32_t out_h, int32_t out_w, int32_t c_in, int32_t c_out,
                                 const KernelShape& k, const AcceleratorConfig& cfg) {
    cfg.validate();
    CycleStats s;
    const auto cells = static_cast<uint64_t>(out_h) * static_cast<uint64_t>(out_w);
    if (cells == 0 || c_out <= 0) return s;
    s.tile_passes = ceil_div(cells, static_cast<uint64_t>(cfg.array_rows)) *
                    ceil_div(static_cast<uint64_t>(c_out), static_cast<uint64_t>(cfg.array_cols));
    s.gemm_cycles = s.tile_passes * static_cast<uint64_t>(k.volume()) * static_cast<uint64_t>(c_in);
    s.fill_cycles = static_cast<uint64_t>(cfg.array_rows + cfg.array_cols);
    return s;
}

uint64_t overlapped_total(std::span<const CycleStats> layers) {
    if (layers.empty()) return 0;
    uint64_t total = layers.front().mapping.total;
    for (size_t i = 1; i < layers.size(); ++i) {
        total += std::max(layers[i].mapping.total, layers[i - 1].exec());
    }
    return total + layers.back().exec();
}

double LayerCycles::speedup() const {
    const uint64_t s = sparse.total();
    return s > 0 ? static_cast<double>(dense.total()) / static_cast<double>(s) : 0.0;
}

double LayerCycles::ideal() const {
    return sparse_flops > 0 ? static_cast<double>(dense_flops) / static_cast<double>(sparse_flops) : 0.0;
}

double SpeedupReport::speedup() const {
    return sparse_total > 0 ? static_cast<double>(dense_total) / static_cast<double>(sparse_total) : 0.0;
}

double SpeedupReport::ideal() const {
    return sparse_flops > 0 ? static_cast<double>(dense_flops) / static_cast<double>(sparse_flops) : 0.0;
}

SpeedupReport simulate_network(const PillarTensor& scene, const NetworkSpec& spec, const AcceleratorConfig& cfg,
                               const RunOptions& opt) {
    cfg.validate();
    SpeedupReport rep;
    rep.network = spec.name;
    RunOptions run_opt = opt;
    run_opt.observer = [&](const LayerTrace& t) {
        if (opt.observer) opt.observer(t);
        const LayerSpec& l = *t.ref.layer;
        const LayerReport& r = t.report;
        LayerCycles lc;
        lc.id = r.id;
        lc.mode = r.mode;
        lc.sparse_flops = r.flops;
        lc.dense_flops = dense_layer_flops(l, r.in_shape);
        const KernelShape dense_k = l.op == LayerOp::Deconv ? KernelShape{1, 1, 1} : l.kernel;
        lc.dense = dense_baseline_cycles(r.out_shape.height, r.out_shape.width, l.c_in, l.c_out, dense_k, cfg);

        if (r.mode == ConvMode::Dense) {
            lc.sparse = lc.dense;
        } else {
            lc.sparse = simulate_layer(*t.rulebook, l.c_in, l.c_out, cfg);
            const bool rgu = l.op == LayerOp::Conv && l.kernel.k_h == 3 && l.kernel.k_w == 3 && l.kernel.stride == 1;
            if (rgu) {
                std::vector<uint8_t> flags;
                if (t.dilate) flags = *t.dilate;
                else flags.assign(t.input.size(), r.mode == ConvMode::SparseFull ? 1 : 0);
                RguResult g = rgu_generate(t.input.coords(), flags, t.input.shape(), l.kernel, cfg);
                if (!(g.rulebook == *t.rulebook)) {
                    throw Error(Errc::ShapeMismatch, r.id + ": generated rulebook differs from the layer's");
                }
                lc.sparse.mapping = g.cycles;
            } else {
                lc.sparse.mapping = direct_mapping_cycles(t.input.size(), cfg);
            }
        }
        // a fixed sparse layer is not densified in the baseline either
        if (l.fixed && r.mode != ConvMode::Dense) {
            lc.dense = lc.sparse;
            lc.dense_flops = lc.sparse_flops;
        }
        rep.layers.push_back(std::move(lc));
    };
    run_network(scene, spec, run_opt);

    std::vector<CycleStats> sparse;
    for (const auto& lc : rep.layers) {
        sparse.push_back(lc.sparse);
        rep.dense_total += lc.dense.total();
        rep.sparse_flops += lc.sparse_flops;
        rep.dense_flops += lc.dense_flops;
    }
    rep.sparse_total = overlapped_total(sparse);
    return rep;
}

}  // namespace spe
