#include "spe/network.hpp"

#include <string>

#include "json.hpp"
#include "spe/error.hpp"
#include "spe/io.hpp"
#include "spe/rng.hpp"

namespace spe {

using nlohmann::json;

const char* to_string(ConvMode m) {
    switch (m) {
    case ConvMode::Dense: return "dense";
    case ConvMode::SparseFull: return "sparse";
    case ConvMode::SubM: return "subm";
    case ConvMode::SD: return "sd";
    }
    return "?";
}

const char* to_string(LayerOp op) { return op == LayerOp::Conv ? "conv" : "deconv"; }

std::optional<ConvMode> parse_conv_mode(std::string_view s) {
    if (s == "dense") return ConvMode::Dense;
    if (s == "sparse") return ConvMode::SparseFull;
    if (s == "subm") return ConvMode::SubM;
    if (s == "sd") return ConvMode::SD;
    return std::nullopt;
}

std::vector<LayerRef> flatten_layers(const NetworkSpec& spec) {
    std::vector<LayerRef> out;
    auto push = [&](std::string id, const LayerSpec& l) {
        out.push_back({std::move(id), out.size(), &l});
    };
    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& st = spec.stages[s];
        const std::string prefix = st.name.empty() ? "stage" + std::to_string(s + 1) : st.name;
        if (st.downsample) push(prefix + ".down", *st.downsample);
        for (size_t j = 0; j < st.body.size(); ++j) {
            push(prefix + "." + (st.body[j].name.empty() ? "conv" + std::to_string(j + 1) : st.body[j].name),
                 st.body[j]);
        }
    }
    for (size_t b = 0; b < spec.neck.branches.size(); ++b) {
        const auto& br = spec.neck.branches[b];
        for (size_t j = 0; j < br.layers.size(); ++j) {
            const auto& l = br.layers[j];
            push("neck.b" + std::to_string(b) + "." + (l.name.empty() ? std::to_string(j + 1) : l.name), l);
        }
    }
    for (size_t j = 0; j < spec.neck.post.size(); ++j) {
        const auto& l = spec.neck.post[j];
        push("neck.post" + (l.name.empty() ? std::to_string(j + 1) : l.name), l);
    }
    return out;
}

namespace {

[[noreturn]] void mismatch(const std::string& where, const std::string& what) {
    throw Error(Errc::SpecMismatch, where + ": " + what);
}

struct Shape {
    GridShape grid;
    int32_t channels;
};

Shape check_layer(const std::string& where, const LayerSpec& l, Shape in) {
    const KernelShape& k = l.kernel;
    if (k.k_h <= 0 || k.k_w <= 0 || k.stride <= 0 || l.c_in <= 0 || l.c_out <= 0) {
        mismatch(where, "kernel extents, stride and channels must be positive");
    }
    if (l.c_in != in.channels) {
        mismatch(where, "expects " + std::to_string(l.c_in) + " input channels, receives " +
                            std::to_string(in.channels));
    }
    if (l.mode == ConvMode::SD && l.sd.source == SelectionMode::TopK &&
        !(l.sd.value >= 0.0 && l.sd.value <= 100.0)) {
        mismatch(where, "SD ratio must lie in [0, 100]");
    }
    const bool is_2x2_s2 = k.k_h == 2 && k.k_w == 2 && k.stride == 2;
    if (l.op == LayerOp::Deconv) {
        if (!is_2x2_s2) mismatch(where, "transposed layers must be 2x2 with stride 2");
        if (l.mode == ConvMode::SubM || l.mode == ConvMode::SD) {
            mismatch(where, "transposed layers run dense or sparse only");
        }
        return {{in.grid.height * 2, in.grid.width * 2}, l.c_out};
    }
    if (k.stride == 1) {
        if (!k.odd()) mismatch(where, "stride-1 layers need an odd kernel");
    } else if (l.mode != ConvMode::Dense) {
        if (!is_2x2_s2) mismatch(where, "sparse strided layers must be 2x2 with stride 2");
        if (l.mode != ConvMode::SparseFull) mismatch(where, "SubM and SD layers must have stride 1");
    }
    return {conv_output_shape(in.grid, k), l.c_out};
}

Shape check_chain(const std::string& where, const std::vector<LayerSpec>& layers, Shape in) {
    for (size_t j = 0; j < layers.size(); ++j) {
        in = check_layer(where + "[" + std::to_string(j) + "]", layers[j], in);
    }
    return in;
}

}  // namespace

void validate(const NetworkSpec& spec) {
    if (spec.height <= 0 || spec.width <= 0 || spec.channels <= 0) {
        mismatch(spec.name, "input dimensions must be positive");
    }
    Shape cur{{spec.height, spec.width}, spec.channels};
    std::vector<Shape> stage_out;
    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& st = spec.stages[s];
        const std::string where = "stage " + std::to_string(s + 1);
        if (st.downsample) cur = check_layer(where + " downsample", *st.downsample, cur);
        cur = check_chain(where + " body", st.body, cur);
        stage_out.push_back(cur);
    }
    if (spec.neck.branches.empty()) {
        if (!spec.neck.post.empty()) mismatch("neck", "post layers need at least one branch");
        return;
    }
    std::optional<GridShape> neck_grid;
    int32_t neck_channels = 0;
    for (size_t b = 0; b < spec.neck.branches.size(); ++b) {
        const auto& br = spec.neck.branches[b];
        const std::string where = "neck branch " + std::to_string(b);
        if (br.from_stage < 0 || static_cast<size_t>(br.from_stage) >= stage_out.size()) {
            mismatch(where, "refers to missing stage " + std::to_string(br.from_stage));
        }
        const Shape out = check_chain(where, br.layers, stage_out[static_cast<size_t>(br.from_stage)]);
        if (neck_grid && !(*neck_grid == out.grid)) {
            mismatch(where, "output grid " + std::to_string(out.grid.height) + "x" +
                                std::to_string(out.grid.width) + " differs from the other branches");
        }
        neck_grid = out.grid;
        neck_channels += out.channels;
    }
    check_chain("neck post", spec.neck.post, {*neck_grid, neck_channels});
}

Kernel layer_kernel(const NetworkSpec& spec, const LayerRef& ref, const std::filesystem::path& base_dir) {
    const LayerSpec& l = *ref.layer;
    if (!l.weights_file.empty()) {
        std::filesystem::path p(l.weights_file);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        Kernel k = load_krn(p);
        if (!(k.shape == l.kernel) || k.c_in != l.c_in || k.c_out != l.c_out) {
            mismatch(ref.id, "weights file " + p.string() + " does not match the layer shape");
        }
        return k;
    }
    return Kernel::random(l.kernel, l.c_in, l.c_out, derive_seed(spec.weight_seed, ref.ordinal),
                          spec.bias_scale);
}

namespace {

template <typename F>
void for_each_layer(NetworkSpec& spec, F&& f) {
    for (LayerSpec* l : mutable_layers(spec)) f(*l);
}

}  // namespace

std::vector<LayerSpec*> mutable_layers(NetworkSpec& spec) {
    std::vector<LayerSpec*> out;
    for (auto& st : spec.stages) {
        if (st.downsample) out.push_back(&*st.downsample);
        for (auto& l : st.body) out.push_back(&l);
    }
    for (auto& br : spec.neck.branches) {
        for (auto& l : br.layers) out.push_back(&l);
    }
    for (auto& l : spec.neck.post) out.push_back(&l);
    return out;
}

NetworkSpec with_mode(NetworkSpec spec, ConvMode mode) {
    for_each_layer(spec, [mode](LayerSpec& l) {
        if (l.fixed) return;
        if (mode == ConvMode::Dense) {
            l.mode = ConvMode::Dense;
            return;
        }
        const bool spatial_stride1 = l.op == LayerOp::Conv && l.kernel.stride == 1 && l.kernel.odd() &&
                                     l.kernel.volume() > 1;
        l.mode = spatial_stride1 ? mode : ConvMode::SparseFull;
    });
    return spec;
}

NetworkSpec with_sd_ratio(NetworkSpec spec, double t_percent) {
    for_each_layer(spec, [t_percent](LayerSpec& l) {
        if (l.mode != ConvMode::SD) return;
        l.sd.source = SelectionMode::TopK;
        l.sd.value = t_percent;
    });
    return spec;
}

// ---- presets -------------------------------------------------------------

namespace {

LayerSpec conv3(int32_t cin, int32_t cout, ConvMode mode, double t) {
    LayerSpec l;
    l.kernel = {3, 3, 1};
    l.c_in = cin;
    l.c_out = cout;
    l.mode = mode;
    l.sd.value = t;
    return l;
}

LayerSpec conv1(int32_t cin, int32_t cout) {
    LayerSpec l;
    l.kernel = {1, 1, 1};
    l.c_in = cin;
    l.c_out = cout;
    l.mode = ConvMode::SparseFull;
    return l;
}

LayerSpec down2(int32_t cin, int32_t cout) {
    LayerSpec l;
    l.kernel = {2, 2, 2};
    l.c_in = cin;
    l.c_out = cout;
    l.mode = ConvMode::SparseFull;
    return l;
}

LayerSpec deconv2(int32_t cin, int32_t cout) {
    LayerSpec l = down2(cin, cout);
    l.op = LayerOp::Deconv;
    return l;
}

// Three-stage pillar backbone (3/5/5 stride-1 layers at 64/128/256 channels)
// with 128-channel upsampling branches concatenated at half resolution.
NetworkSpec pillar_backbone(std::string name, int32_t h, int32_t w, int32_t channels, double t) {
    NetworkSpec s;
    s.name = std::move(name);
    s.height = h;
    s.width = w;
    s.channels = channels;
    const int32_t widths[3] = {64, 128, 256};
    const int32_t depth[3] = {3, 5, 5};
    int32_t cin = channels;
    for (int i = 0; i < 3; ++i) {
        StageSpec st;
        st.name = "stage" + std::to_string(i + 1);
        st.downsample = down2(cin, widths[i]);
        for (int j = 0; j < depth[i]; ++j) st.body.push_back(conv3(widths[i], widths[i], ConvMode::SD, t));
        s.stages.push_back(std::move(st));
        cin = widths[i];
    }
    s.neck.branches.push_back({0, {conv1(64, 128)}});
    s.neck.branches.push_back({1, {deconv2(128, 128)}});
    s.neck.branches.push_back({2, {deconv2(256, 128), deconv2(128, 128)}});
    return s;
}

// SubM encoder (fixed) at 32..256 channels over five stages, SD neck on the
// 1/8 and 1/16 features.
NetworkSpec pillarnet(int32_t h, int32_t w, int32_t channels) {
    NetworkSpec s;
    s.name = "pillarnet-neck";
    s.height = h;
    s.width = w;
    s.channels = channels;
    const int32_t widths[5] = {32, 64, 128, 256, 256};
    int32_t cin = channels;
    for (int i = 0; i < 5; ++i) {
        StageSpec st;
        st.name = "enc" + std::to_string(i + 1);
        if (i > 0) {
            st.downsample = down2(cin, widths[i]);
            st.downsample->fixed = true;
            cin = widths[i];
        }
        for (int j = 0; j < 2; ++j) {
            auto l = conv3(cin, widths[i], ConvMode::SubM, 0.0);
            l.fixed = true;
            st.body.push_back(l);
            cin = widths[i];
        }
        s.stages.push_back(std::move(st));
    }
    const double t = 4.0;
    s.neck.branches.push_back({3, {conv3(256, 128, ConvMode::SD, t)}});
    s.neck.branches.push_back({4, {conv3(256, 256, ConvMode::SD, t), conv3(256, 256, ConvMode::SD, t), deconv2(256, 128)}});
    s.neck.post = {conv3(256, 256, ConvMode::SD, t), conv3(256, 256, ConvMode::SD, t)};
    return s;
}

}  // namespace

std::vector<std::string> network_preset_names() {
    return {"pointpillars", "centerpoint-backbone", "pillarnet-neck"};
}

std::optional<NetworkSpec> network_preset(std::string_view name, int32_t height, int32_t width,
                                          int32_t channels) {
    if (name == "pointpillars") return pillar_backbone("pointpillars", height, width, channels, 2.0);
    if (name == "centerpoint-backbone") {
        return pillar_backbone("centerpoint-backbone", height, width, channels, 4.0);
    }
    if (name == "pillarnet-neck") return pillarnet(height, width, channels);
    return std::nullopt;
}

// ---- JSON ----------------------------------------------------------------

namespace {

[[noreturn]] void bad_json(const std::string& what) { throw Error(Errc::ParseError, what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad_json(std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) bad_json(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad_json(std::string("field '") + key + "': " + e.what());
    }
}

LayerSpec layer_from_json(const json& j) {
    if (!j.is_object()) bad_json("layer must be an object");
    LayerSpec l;
    l.name = get_or<std::string>(j, "name", "");
    const auto op = get_or<std::string>(j, "op", "conv");
    if (op == "conv") l.op = LayerOp::Conv;
    else if (op == "deconv") l.op = LayerOp::Deconv;
    else bad_json("unknown op '" + op + "'");
    const auto kernel = require<std::vector<int32_t>>(j, "kernel");
    if (kernel.size() != 2) bad_json("kernel must be [k_h, k_w]");
    l.kernel = {kernel[0], kernel[1], get_or<int32_t>(j, "stride", 1)};
    l.c_in = require<int32_t>(j, "c_in");
    l.c_out = require<int32_t>(j, "c_out");
    const auto mode = get_or<std::string>(j, "mode", "subm");
    const auto m = parse_conv_mode(mode);
    if (!m) bad_json("unknown mode '" + mode + "'");
    l.mode = *m;
    const auto act = get_or<std::string>(j, "activation", "relu");
    if (act == "relu") l.activation = Activation::ReLU;
    else if (act == "none") l.activation = Activation::None;
    else bad_json("unknown activation '" + act + "'");
    l.fixed = get_or<bool>(j, "fixed", false);
    l.weights_file = get_or<std::string>(j, "weights", "");
    if (j.contains("sd")) {
        const json& sd = j.at("sd");
        if (sd.contains("topk")) {
            l.sd.source = SelectionMode::TopK;
            l.sd.value = require<double>(sd, "topk");
        } else if (sd.contains("threshold")) {
            l.sd.source = SelectionMode::Threshold;
            l.sd.value = require<double>(sd, "threshold");
        } else {
            bad_json("sd needs 'topk' or 'threshold'");
        }
        if (sd.contains("importance")) {
            const json& imp = sd.at("importance");
            const auto measure = get_or<std::string>(imp, "measure", "mean_abs");
            if (measure == "mean_abs") l.sd.importance.measure = Measure::MeanAbs;
            else if (measure == "max_abs") l.sd.importance.measure = Measure::MaxAbs;
            else bad_json("unknown importance measure '" + measure + "'");
            const auto agg = get_or<std::string>(imp, "aggregate", "identity");
            if (agg == "identity") l.sd.importance.aggregate = Aggregate::Identity;
            else if (agg == "avg_pool") l.sd.importance.aggregate = Aggregate::AvgPool3x3;
            else if (agg == "max_pool") l.sd.importance.aggregate = Aggregate::MaxPool3x3;
            else bad_json("unknown importance aggregate '" + agg + "'");
        }
    }
    return l;
}

json layer_to_json(const LayerSpec& l) {
    json j;
    if (!l.name.empty()) j["name"] = l.name;
    j["op"] = to_string(l.op);
    j["kernel"] = {l.kernel.k_h, l.kernel.k_w};
    j["stride"] = l.kernel.stride;
    j["c_in"] = l.c_in;
    j["c_out"] = l.c_out;
    j["mode"] = to_string(l.mode);
    j["activation"] = l.activation == Activation::ReLU ? "relu" : "none";
    if (l.fixed) j["fixed"] = true;
    if (!l.weights_file.empty()) j["weights"] = l.weights_file;
    // kept on non-SD layers too: a later SD override picks them up
    if (l.mode == ConvMode::SD || !(l.sd == SdParams{})) {
        json sd;
        sd[l.sd.source == SelectionMode::TopK ? "topk" : "threshold"] = l.sd.value;
        const auto& imp = l.sd.importance;
        sd["importance"] = {
            {"measure", imp.measure == Measure::MeanAbs ? "mean_abs" : "max_abs"},
            {"aggregate", imp.aggregate == Aggregate::Identity     ? "identity"
                          : imp.aggregate == Aggregate::AvgPool3x3 ? "avg_pool"
                                                                   : "max_pool"}};
        j["sd"] = sd;
    }
    return j;
}

std::vector<LayerSpec> layers_from_json(const json& j, const char* key) {
    std::vector<LayerSpec> out;
    if (!j.contains(key)) return out;
    if (!j.at(key).is_array()) bad_json(std::string("'") + key + "' must be an array");
    for (const auto& l : j.at(key)) out.push_back(layer_from_json(l));
    return out;
}

json layers_to_json(const std::vector<LayerSpec>& ls) {
    json arr = json::array();
    for (const auto& l : ls) arr.push_back(layer_to_json(l));
    return arr;
}

}  // namespace

NetworkSpec network_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad_json(std::string("network spec: ") + e.what());
    }
    if (!j.is_object()) bad_json("network spec must be a JSON object");
    NetworkSpec s;
    s.name = get_or<std::string>(j, "name", "network");
    const json input = j.contains("input") ? j.at("input") : json::object();
    s.height = require<int32_t>(input, "height");
    s.width = require<int32_t>(input, "width");
    s.channels = require<int32_t>(input, "channels");
    s.weight_seed = get_or<uint64_t>(j, "weight_seed", 0);
    s.bias_scale = get_or<double>(j, "bias_scale", 0.1);
    if (j.contains("stages")) {
        for (const auto& st : j.at("stages")) {
            StageSpec stage;
            stage.name = get_or<std::string>(st, "name", "");
            if (st.contains("downsample") && !st.at("downsample").is_null()) {
                stage.downsample = layer_from_json(st.at("downsample"));
            }
            stage.body = layers_from_json(st, "body");
            s.stages.push_back(std::move(stage));
        }
    }
    if (j.contains("neck")) {
        const json& neck = j.at("neck");
        if (neck.contains("branches")) {
            for (const auto& br : neck.at("branches")) {
                s.neck.branches.push_back({require<int32_t>(br, "from"), layers_from_json(br, "layers")});
            }
        }
        s.neck.post = layers_from_json(neck, "post");
    }
    validate(s);
    return s;
}

std::string network_to_json(const NetworkSpec& s) {
    json j;
    j["name"] = s.name;
    j["input"] = {{"height", s.height}, {"width", s.width}, {"channels", s.channels}};
    j["weight_seed"] = s.weight_seed;
    j["bias_scale"] = s.bias_scale;
    json stages = json::array();
    for (const auto& st : s.stages) {
        json js;
        js["name"] = st.name;
        js["downsample"] = st.downsample ? layer_to_json(*st.downsample) : json(nullptr);
        js["body"] = layers_to_json(st.body);
        stages.push_back(js);
    }
    j["stages"] = stages;
    json branches = json::array();
    for (const auto& br : s.neck.branches) {
        branches.push_back({{"from", br.from_stage}, {"layers", layers_to_json(br.layers)}});
    }
    j["neck"] = {{"branches", branches}, {"post", layers_to_json(s.neck.post)}};
    return j.dump(2) + "\n";
}

NetworkSpec load_network(const std::filesystem::path& path) { return network_from_json(read_file(path)); }

}  // namespace spe
