#include "spe/backbone.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "spe/conv.hpp"
#include "spe/error.hpp"

namespace spe {

namespace {

bool selection_uses_values(const LayerSpec& l) {
    if (l.mode != ConvMode::SD) return false;
    if (l.sd.source == SelectionMode::Threshold) return true;
    return l.sd.value > 0.0 && l.sd.value < 100.0;
}

GridShape layer_output_shape(const LayerSpec& l, GridShape in) {
    if (l.op == LayerOp::Deconv) return {in.height * 2, in.width * 2};
    return conv_output_shape(in, l.kernel);
}

Rulebook layer_rulebook(const LayerSpec& l, const PillarTensor& x, GridShape out_shape,
                        const std::vector<uint8_t>* dilate) {
    const auto active = x.coords();
    const GridShape in_shape = x.shape();
    const KernelShape& k = l.kernel;
    if (l.op == LayerOp::Deconv) return build_rulebook_deconv2x2(active, in_shape, k, out_shape);
    switch (l.mode) {
    case ConvMode::SubM: return build_rulebook_subm(active, in_shape, k);
    case ConvMode::SD: return build_rulebook_sd_flags(active, *dilate, in_shape, k, out_shape);
    case ConvMode::SparseFull:
    case ConvMode::Dense: break;
    }
    if (k.k_h == 2 && k.k_w == 2 && k.stride == 2) return build_rulebook_downsample2x2(active, in_shape, k);
    return build_rulebook_sparse(active, in_shape, k, out_shape);
}

PillarTensor zero_features(int32_t h, int32_t w, int32_t c, std::span<const Coord> coords) {
    return PillarTensor::from_sorted(h, w, c, {coords.begin(), coords.end()},
                                     std::vector<float>(coords.size() * static_cast<size_t>(c), 0.0f));
}

PillarTensor all_active_zero(GridShape g, int32_t c) {
    std::vector<Coord> coords;
    coords.reserve(static_cast<size_t>(g.cells()));
    for (int32_t r = 0; r < g.height; ++r) {
        for (int32_t col = 0; col < g.width; ++col) coords.push_back({r, col});
    }
    return zero_features(g.height, g.width, c, coords);
}

class Runner {
public:
    Runner(const NetworkSpec& spec, const RunOptions& opt) : spec_(spec), opt_(opt), refs_(flatten_layers(spec)) {
        if (!opt.compute_features) {
            for (const auto& r : refs_) {
                if (selection_uses_values(*r.layer)) features_until_ = r.ordinal;
            }
        } else {
            features_until_ = refs_.size();
        }
    }

    PillarTensor layer(const PillarTensor& x) {
        const LayerRef& ref = refs_.at(next_++);
        const LayerSpec& l = *ref.layer;
        if (x.channels() != l.c_in) {
            throw Error(Errc::SpecMismatch, ref.id + ": input has " + std::to_string(x.channels()) +
                                                " channels, layer expects " + std::to_string(l.c_in));
        }
        const bool compute = ref.ordinal < features_until_;
        const Kernel kernel = layer_kernel(spec_, ref, opt_.base_dir);
        const GridShape out_shape = layer_output_shape(l, x.shape());

        LayerReport rep;
        rep.id = ref.id;
        rep.op = l.op;
        rep.mode = l.mode;
        rep.kernel = l.kernel;
        rep.c_in = l.c_in;
        rep.c_out = l.c_out;
        rep.in_shape = x.shape();
        rep.out_shape = out_shape;
        rep.active_in = x.size();

        PillarTensor y;
        std::optional<Rulebook> rb;
        std::optional<ImportanceScores> scores;
        std::optional<std::vector<uint8_t>> dilate;

        if (l.mode == ConvMode::Dense) {
            if (compute) {
                const DenseGrid g = to_dense(x);
                y = from_dense_full(l.op == LayerOp::Deconv ? dense_deconv2x2(g, kernel, out_shape)
                                                            : dense_conv(g, kernel));
            } else {
                y = all_active_zero(out_shape, l.c_out);
            }
            rep.flops = dense_layer_flops(l, x.shape());
        } else {
            if (l.mode == ConvMode::SD) {
                scores = pillar_importance(x, l.sd.importance);
                dilate = l.sd.source == SelectionMode::TopK ? topk_flags(*scores, l.sd.value)
                                                            : threshold_flags(*scores, l.sd.value);
                rep.selected_count = static_cast<uint64_t>(std::count(dilate->begin(), dilate->end(), 1));
            }
            rb = layer_rulebook(l, x, out_shape, dilate ? &*dilate : nullptr);
            y = compute ? execute_rulebook(*rb, x, kernel)
                        : zero_features(out_shape.height, out_shape.width, l.c_out, rb->output_coords);
            rep.rules = rb->rules.size();
            rep.flops = flops_of_rulebook(*rb, l.c_in, l.c_out);
        }
        if (compute && l.activation == Activation::ReLU) y = relu(y);

        rep.active_out = y.size();
        rep.density_out = out_shape.cells() > 0 ? static_cast<double>(y.size()) / out_shape.cells() : 0.0;
        reports_.push_back(rep);
        if (opt_.observer) {
            opt_.observer(LayerTrace{ref, reports_.back(), x, kernel, rb ? &*rb : nullptr,
                                     dilate ? &*dilate : nullptr, scores ? &*scores : nullptr});
        }
        return y;
    }

    PillarTensor chain(PillarTensor x, const std::vector<LayerSpec>& layers) {
        for (size_t i = 0; i < layers.size(); ++i) x = layer(x);
        return x;
    }

    std::vector<LayerReport> take_reports() { return std::move(reports_); }

private:
    const NetworkSpec& spec_;
    const RunOptions& opt_;
    std::vector<LayerRef> refs_;
    size_t next_ = 0;
    size_t features_until_ = 0;
    std::vector<LayerReport> reports_;
};

}  // namespace

PillarTensor concat_channels(std::span<const PillarTensor> parts) {
    if (parts.empty()) return {};
    const GridShape g = parts.front().shape();
    int32_t channels = 0;
    for (const auto& p : parts) {
        if (!(p.shape() == g)) throw Error(Errc::ShapeMismatch, "concatenated tensors differ in grid size");
        channels += p.channels();
    }
    std::vector<Coord> coords;
    for (const auto& p : parts) coords.insert(coords.end(), p.coords().begin(), p.coords().end());
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());

    std::vector<float> features(coords.size() * static_cast<size_t>(channels), 0.0f);
    int32_t offset = 0;
    for (const auto& p : parts) {
        size_t j = 0;
        for (size_t i = 0; i < p.size(); ++i) {
            while (coords[j] < p.coord(i)) ++j;
            const auto f = p.feature(i);
            std::copy(f.begin(), f.end(), features.begin() + static_cast<std::ptrdiff_t>(j * channels + offset));
        }
        offset += p.channels();
    }
    return PillarTensor::from_sorted(g.height, g.width, channels, std::move(coords), std::move(features));
}

NetworkResult run_network(const PillarTensor& input, const NetworkSpec& spec, const RunOptions& opt) {
    validate(spec);
    if (input.height() != spec.height || input.width() != spec.width || input.channels() != spec.channels) {
        throw Error(Errc::SpecMismatch,
                    "input is " + std::to_string(input.height()) + "x" + std::to_string(input.width()) + "x" +
                        std::to_string(input.channels()) + ", " + spec.name + " expects " +
                        std::to_string(spec.height) + "x" + std::to_string(spec.width) + "x" +
                        std::to_string(spec.channels));
    }
    Runner run(spec, opt);
    NetworkResult res;
    PillarTensor x = input;
    for (const auto& st : spec.stages) {
        if (st.downsample) x = run.layer(x);
        x = run.chain(std::move(x), st.body);
        res.stage_outputs.push_back(x);
    }
    if (spec.neck.branches.empty()) {
        res.output = std::move(x);
    } else {
        std::vector<PillarTensor> parts;
        for (const auto& br : spec.neck.branches) {
            parts.push_back(run.chain(res.stage_outputs[static_cast<size_t>(br.from_stage)], br.layers));
        }
        res.output = run.chain(concat_channels(parts), spec.neck.post);
    }
    res.reports = run.take_reports();
    return res;
}

uint64_t total_flops(std::span<const LayerReport> reports) {
    uint64_t sum = 0;
    for (const auto& r : reports) sum += r.flops;
    return sum;
}

uint64_t dense_layer_flops(const LayerSpec& l, GridShape in_shape) {
    const auto cin = static_cast<uint64_t>(l.c_in);
    const auto cout = static_cast<uint64_t>(l.c_out);
    const auto cells = static_cast<uint64_t>(layer_output_shape(l, in_shape).cells());
    // each transposed output receives exactly one tap
    const uint64_t taps = l.op == LayerOp::Deconv ? 1 : static_cast<uint64_t>(l.kernel.volume());
    return 2 * cells * taps * cin * cout + cells * cout;
}

std::vector<GridShape> layer_input_shapes(const NetworkSpec& spec) {
    std::vector<GridShape> shapes;
    std::vector<GridShape> stage_out;
    GridShape g{spec.height, spec.width};
    auto step = [&](const LayerSpec& l) {
        shapes.push_back(g);
        g = layer_output_shape(l, g);
    };
    for (const auto& st : spec.stages) {
        if (st.downsample) step(*st.downsample);
        for (const auto& l : st.body) step(l);
        stage_out.push_back(g);
    }
    for (const auto& br : spec.neck.branches) {
        g = stage_out.at(static_cast<size_t>(br.from_stage));
        for (const auto& l : br.layers) step(l);
    }
    for (const auto& l : spec.neck.post) step(l);
    return shapes;
}

uint64_t dense_flops(const NetworkSpec& spec) {
    const auto refs = flatten_layers(spec);
    const auto shapes = layer_input_shapes(spec);
    uint64_t sum = 0;
    for (size_t i = 0; i < refs.size(); ++i) sum += dense_layer_flops(*refs[i].layer, shapes[i]);
    return sum;
}

uint64_t dense_reference_flops(const NetworkSpec& spec, std::span<const LayerReport> reports) {
    const auto refs = flatten_layers(spec);
    if (reports.size() != refs.size()) {
        throw Error(Errc::SpecMismatch, "report count does not match " + spec.name);
    }
    uint64_t sum = 0;
    for (size_t i = 0; i < refs.size(); ++i) {
        const LayerSpec& l = *refs[i].layer;
        sum += l.fixed && l.mode != ConvMode::Dense ? reports[i].flops : dense_layer_flops(l, reports[i].in_shape);
    }
    return sum;
}

std::vector<ModeTotal> compare_modes(const PillarTensor& scene, const NetworkSpec& spec,
                                     std::span<const ConvMode> modes, const RunOptions& opt) {
    std::vector<ModeTotal> rows;
    std::optional<uint64_t> dense;
    for (ConvMode m : modes) {
        if (m == ConvMode::Dense) continue;
        const NetworkSpec s = with_mode(spec, m);
        const auto res = run_network(scene, s, opt);
        if (!dense) dense = dense_reference_flops(s, res.reports);
        rows.push_back({to_string(m), total_flops(res.reports), 0.0});
    }
    if (!dense) {
        RunOptions cheap = opt;
        cheap.compute_features = false;
        const NetworkSpec s = with_mode(spec, ConvMode::Dense);
        dense = dense_reference_flops(s, run_network(scene, s, cheap).reports);
    }
    for (auto& r : rows) r.ratio = r.flops > 0 ? static_cast<double>(*dense) / static_cast<double>(r.flops) : 0.0;
    rows.insert(rows.begin(), {"dense", *dense, 1.0});
    return rows;
}

}  // namespace spe
