#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "spe/backbone.hpp"
#include "spe/conv.hpp"
#include "spe/error.hpp"
#include "spe/io.hpp"
#include "spe/report.hpp"
#include "spe/scenegen.hpp"
#include "spe/spade_sim.hpp"

namespace fs = std::filesystem;
using namespace spe;
using spe::cli::RunManifest;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

uint64_t env_seed() {
    const char* s = std::getenv("SPE_SEED");
    if (!s || !*s) return 0;
    uint64_t v = 0;
    const char* end = s + std::char_traits<char>::length(s);
    const auto [p, ec] = std::from_chars(s, end, v);
    if (ec != std::errc() || p != end) throw UsageError(std::string("SPE_SEED is not an unsigned integer: ") + s);
    return v;
}

void emit(const std::string& text, const std::string& path, RunManifest& m) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_file(path, text);
    m.add_output(path);
}

bool check_golden(const std::string& text, const std::string& golden_path, RunManifest& m) {
    const std::string want = read_file(golden_path);
    m.add_input(golden_path);
    if (want == text) return true;
    std::istringstream a(text), b(want);
    std::string la, lb;
    for (size_t line = 1;; ++line) {
        const bool ga = static_cast<bool>(std::getline(a, la));
        const bool gb = static_cast<bool>(std::getline(b, lb));
        if (!ga && !gb) break;
        if (!ga || !gb || la != lb) {
            std::cerr << "golden mismatch against " << golden_path << " at line " << line << "\n"
                      << "  expected: " << (gb ? lb : "<end of file>") << "\n"
                      << "  actual:   " << (ga ? la : "<end of file>") << "\n";
            break;
        }
    }
    return false;
}

Measure parse_measure(const std::string& s) {
    if (s == "mean_abs") return Measure::MeanAbs;
    if (s == "max_abs") return Measure::MaxAbs;
    throw UsageError("unknown importance measure '" + s + "'");
}

Aggregate parse_aggregate(const std::string& s) {
    if (s == "identity") return Aggregate::Identity;
    if (s == "avg_pool") return Aggregate::AvgPool3x3;
    if (s == "max_pool") return Aggregate::MaxPool3x3;
    throw UsageError("unknown importance aggregate '" + s + "'");
}

ConvMode parse_mode(const std::string& s) {
    const auto m = parse_conv_mode(s);
    if (!m) throw UsageError("unknown mode '" + s + "' (dense, sparse, subm, sd)");
    return *m;
}

// ---- shared option groups ------------------------------------------------

struct NetworkOpts {
    std::string network = "pointpillars";
    std::string mode;
    std::optional<double> t;
    std::optional<uint64_t> weight_seed;

    void add(CLI::App* app, bool ratio_option = true) {
        app->add_option("--network", network, "Preset name or network JSON file")->capture_default_str();
        app->add_option("--mode", mode, "Override the mode of every non-fixed layer (dense|sparse|subm|sd)");
        if (ratio_option) app->add_option("--t", t, "Top-k ratio in percent for every SD layer");
        app->add_option("--weight-seed", weight_seed, "Seed for layers without a weights file");
    }

    // Preset grids follow the scene.
    NetworkSpec resolve(const PillarTensor& scene, fs::path& base_dir, RunManifest& m) const {
        NetworkSpec spec;
        if (auto p = network_preset(network, scene.height(), scene.width(), scene.channels())) {
            spec = *p;
        } else if (fs::exists(network)) {
            spec = load_network(network);
            base_dir = fs::path(network).parent_path();
            m.add_input(network);
        } else {
            std::string names;
            for (const auto& n : network_preset_names()) names += " " + n;
            throw UsageError("'" + network + "' is neither a preset (" + names.substr(1) + ") nor a file");
        }
        if (!mode.empty()) spec = with_mode(spec, parse_mode(mode));
        if (t) spec = with_sd_ratio(spec, *t);
        if (weight_seed) spec.weight_seed = *weight_seed;
        m.seeds["weight_seed"] = spec.weight_seed;
        validate(spec);
        return spec;
    }
};

struct SceneSetOpts {
    std::vector<std::string> files;
    std::string preset;
    int count = 10;
    uint64_t seed = 0;
    std::optional<int32_t> height, width;
    std::optional<double> density;

    void add(CLI::App* app) {
        app->add_option("--scenes", files, "PLT scene files");
        app->add_option("--preset", preset, "Generate scenes from a preset instead (kitti-like|nuscenes-like)");
        app->add_option("--count", count, "Generated scene count")->capture_default_str();
        app->add_option("--seed", seed, "First generated scene seed (default $SPE_SEED or 0)");
        app->add_option("--height", height, "Grid height override for generated scenes");
        app->add_option("--width", width, "Grid width override for generated scenes");
        app->add_option("--density", density, "Density override for generated scenes");
    }

    std::vector<PillarTensor> load(RunManifest& m) const {
        std::vector<PillarTensor> out;
        if (!files.empty() && !preset.empty()) throw UsageError("give either --scenes or --preset");
        for (const auto& f : files) {
            out.push_back(load_plt(f));
            m.add_input(f);
        }
        if (!preset.empty()) {
            auto s = scene_preset(preset);
            if (!s) throw UsageError("unknown scene preset '" + preset + "'");
            if (count < 0) throw UsageError("--count must be non-negative");
            if (height) s->height = *height;
            if (width) s->width = *width;
            if (density) s->density = *density;
            m.seeds["scene_seed"] = seed;
            for (int i = 0; i < count; ++i) {
                s->seed = seed + static_cast<uint64_t>(i);
                out.push_back(generate(*s));
            }
        }
        if (out.empty()) throw UsageError("no scenes given (--scenes or --preset)");
        for (const auto& sc : out) {
            if (sc.shape() != out.front().shape() || sc.channels() != out.front().channels()) {
                throw UsageError("all scenes must share grid size and channel count");
            }
        }
        return out;
    }
};

// ---- gen -----------------------------------------------------------------

struct GenOpts {
    std::string preset;
    std::optional<int32_t> height, width, channels;
    std::optional<double> density;
    std::string pattern;
    std::optional<int32_t> clusters, arcs;
    std::optional<double> spread;
    uint64_t seed = 0;
    std::string features = "gaussian";
    float value = 1.0f;
    std::string out;
};

int cmd_gen(const GenOpts& o, RunManifest& m) {
    SceneSpec s;
    if (!o.preset.empty()) {
        auto p = scene_preset(o.preset);
        if (!p) throw UsageError("unknown scene preset '" + o.preset + "'");
        s = *p;
    }
    if (o.height) s.height = *o.height;
    if (o.width) s.width = *o.width;
    if (o.channels) s.channels = *o.channels;
    if (o.density) s.density = *o.density;
    if (!o.pattern.empty()) {
        if (o.pattern == "uniform") s.pattern = ScenePattern::UniformRandom;
        else if (o.pattern == "clustered") s.pattern = ScenePattern::Clustered;
        else if (o.pattern == "arcs") s.pattern = ScenePattern::RingArcs;
        else throw UsageError("unknown pattern '" + o.pattern + "' (uniform, clustered, arcs)");
    }
    if (o.clusters) s.clusters = *o.clusters;
    if (o.spread) s.spread = *o.spread;
    if (o.arcs) s.arcs = *o.arcs;
    if (o.features == "gaussian") s.features = FeatureDist::UnitGaussian;
    else if (o.features == "constant") s.features = FeatureDist::Constant;
    else throw UsageError("unknown feature distribution '" + o.features + "' (gaussian, constant)");
    s.constant_value = o.value;
    s.seed = o.seed;
    m.seeds["scene_seed"] = s.seed;

    const PillarTensor t = generate(s);
    std::ostringstream os;
    write_plt(os, t);
    emit(os.str(), o.out, m);
    std::cerr << "generated " << t.size() << " pillars on " << t.height() << "x" << t.width() << " ("
              << format_real(density(t)) << " density)\n";
    return exit_ok;
}

// ---- run -----------------------------------------------------------------

struct RunOpts {
    std::string scene;
    NetworkOpts net;
    std::string out;
    std::string report;
    std::string format = "csv";
    std::string golden;
};

std::string format_report(const std::string& fmt, const NetworkSpec& spec, const std::vector<LayerReport>& r) {
    if (fmt == "csv") return report_csv(spec.name, r);
    if (fmt == "json") return report_json(spec.name, r);
    throw UsageError("unknown format '" + fmt + "' (csv, json)");
}

int cmd_run(const RunOpts& o, RunManifest& m) {
    const PillarTensor scene = load_plt(o.scene);
    m.add_input(o.scene);
    fs::path base;
    const NetworkSpec spec = o.net.resolve(scene, base, m);
    RunOptions opt;
    opt.base_dir = base;
    const NetworkResult res = run_network(scene, spec, opt);
    const std::string text = format_report(o.format, spec, res.reports);
    if (!o.out.empty()) {
        std::ostringstream os;
        write_plt(os, res.output);
        emit(os.str(), o.out, m);
    }
    emit(text, o.report, m);
    if (!o.golden.empty() && !check_golden(text, o.golden, m)) return exit_fail;
    return exit_ok;
}

// ---- verify --------------------------------------------------------------

struct VerifyOpts {
    std::string scene;
    std::string kernel_file;
    std::string kernel_size = "3x3";
    int32_t stride = 1;
    bool deconv = false;
    int32_t c_out = 0;
    uint64_t seed = 0;
    std::string mode = "sparse";
    std::optional<double> t;
    std::optional<double> threshold;
    std::string measure = "mean_abs";
    std::string aggregate = "identity";
    double tolerance = 1e-5;
};

KernelShape parse_kernel_size(const std::string& s, int32_t stride) {
    const auto x = s.find('x');
    int32_t kh = 0, kw = 0;
    const bool ok = x != std::string::npos &&
                    std::from_chars(s.data(), s.data() + x, kh).ec == std::errc() &&
                    std::from_chars(s.data() + x + 1, s.data() + s.size(), kw).ec == std::errc();
    if (!ok || kh <= 0 || kw <= 0) throw UsageError("kernel size must look like 3x3, got '" + s + "'");
    return {kh, kw, stride};
}

// Output set straight from the mode's definition on an occupancy grid.
std::vector<Coord> expected_outputs(const PillarTensor& x, const LayerSpec& l, GridShape out_shape,
                                    const std::vector<uint8_t>* dilate) {
    std::vector<uint8_t> occ(static_cast<size_t>(x.shape().cells()), 0);
    for (const Coord& c : x.coords()) occ[static_cast<size_t>(c.row) * x.width() + c.col] = 1;
    const auto active = [&](int32_t r, int32_t c) {
        return r >= 0 && c >= 0 && r < x.height() && c < x.width() && occ[static_cast<size_t>(r) * x.width() + c];
    };
    std::vector<Coord> out;
    const auto& k = l.kernel;
    switch (l.mode) {
    case ConvMode::Dense:
        for (int32_t r = 0; r < out_shape.height; ++r) {
            for (int32_t c = 0; c < out_shape.width; ++c) out.push_back({r, c});
        }
        return out;
    case ConvMode::SubM: return {x.coords().begin(), x.coords().end()};
    case ConvMode::SD: {
        std::vector<uint8_t> mark(static_cast<size_t>(out_shape.cells()), 0);
        for (size_t i = 0; i < x.size(); ++i) {
            const Coord p = x.coord(i);
            mark[static_cast<size_t>(p.row) * out_shape.width + p.col] = 1;
            if (!(*dilate)[i]) continue;
            for (int32_t dr = -k.pad_h(); dr <= k.pad_h(); ++dr) {
                for (int32_t dc = -k.pad_w(); dc <= k.pad_w(); ++dc) {
                    const Coord q{p.row + dr, p.col + dc};
                    if (out_shape.contains(q)) mark[static_cast<size_t>(q.row) * out_shape.width + q.col] = 1;
                }
            }
        }
        for (int32_t r = 0; r < out_shape.height; ++r) {
            for (int32_t c = 0; c < out_shape.width; ++c) {
                if (mark[static_cast<size_t>(r) * out_shape.width + c]) out.push_back({r, c});
            }
        }
        return out;
    }
    case ConvMode::SparseFull: break;
    }
    for (int32_t r = 0; r < out_shape.height; ++r) {
        for (int32_t c = 0; c < out_shape.width; ++c) {
            bool hit = false;
            if (l.op == LayerOp::Deconv) {
                hit = active(r / 2, c / 2);
            } else {
                for (int32_t kr = 0; kr < k.k_h && !hit; ++kr) {
                    for (int32_t kc = 0; kc < k.k_w && !hit; ++kc) {
                        hit = active(k.stride * r + kr - k.pad_h(), k.stride * c + kc - k.pad_w());
                    }
                }
            }
            if (hit) out.push_back({r, c});
        }
    }
    return out;
}

int cmd_verify(const VerifyOpts& o, RunManifest& m) {
    const PillarTensor scene = load_plt(o.scene);
    m.add_input(o.scene);

    LayerSpec l;
    l.op = o.deconv ? LayerOp::Deconv : LayerOp::Conv;
    l.mode = parse_mode(o.mode);
    l.activation = Activation::None;
    l.c_in = scene.channels();
    if (!o.kernel_file.empty()) {
        const Kernel k = load_krn(o.kernel_file);
        m.add_input(o.kernel_file);
        l.kernel = k.shape;
        l.c_out = k.c_out;
        l.weights_file = fs::absolute(o.kernel_file).string();
    } else {
        l.kernel = o.deconv ? KernelShape{2, 2, 2} : parse_kernel_size(o.kernel_size, o.stride);
        l.c_out = o.c_out > 0 ? o.c_out : scene.channels();
        m.seeds["kernel_seed"] = o.seed;
    }
    if (o.t && o.threshold) throw UsageError("give either --t or --threshold");
    if (o.threshold) {
        l.sd.source = SelectionMode::Threshold;
        l.sd.value = *o.threshold;
    } else {
        l.sd.value = o.t.value_or(2.0);
    }
    l.sd.importance = {parse_measure(o.measure), parse_aggregate(o.aggregate)};

    NetworkSpec spec;
    spec.name = "verify";
    spec.height = scene.height();
    spec.width = scene.width();
    spec.channels = scene.channels();
    spec.weight_seed = o.seed;
    spec.stages.push_back({"layer", std::nullopt, {l}});

    std::optional<Kernel> kernel;
    std::optional<std::vector<uint8_t>> dilate;
    RunOptions opt;
    opt.observer = [&](const LayerTrace& t) {
        kernel = t.kernel;
        if (t.dilate) dilate = *t.dilate;
    };
    const NetworkResult res = run_network(scene, spec, opt);
    const PillarTensor& y = res.output;

    const DenseGrid g = to_dense(scene);
    const DenseGrid ref = l.op == LayerOp::Deconv ? dense_deconv2x2_oracle(g, *kernel, y.shape())
                                                  : dense_conv_oracle(g, *kernel);
    double max_err = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const Coord c = y.coord(i);
        const float* want = ref.at(c.row, c.col);
        const auto got = y.feature(i);
        for (int32_t ch = 0; ch < y.channels(); ++ch) {
            max_err = std::max(max_err, std::fabs(static_cast<double>(got[ch]) - want[ch]));
        }
    }

    const auto expected = expected_outputs(scene, l, y.shape(), dilate ? &*dilate : nullptr);
    std::vector<Coord> missing, extra;
    std::set_difference(expected.begin(), expected.end(), y.coords().begin(), y.coords().end(),
                        std::back_inserter(missing));
    std::set_difference(y.coords().begin(), y.coords().end(), expected.begin(), expected.end(),
                        std::back_inserter(extra));
    const bool pass = missing.empty() && extra.empty() && max_err <= o.tolerance;

    std::cout << "mode=" << to_string(l.mode) << "\n"
              << "kernel=" << l.kernel.k_h << "x" << l.kernel.k_w << " stride=" << l.kernel.stride
              << (l.op == LayerOp::Deconv ? " transposed" : "") << " c_in=" << l.c_in << " c_out=" << l.c_out
              << "\n"
              << "inputs=" << scene.size() << " outputs=" << y.size() << " expected=" << expected.size() << "\n"
              << "missing=" << missing.size() << " extra=" << extra.size() << "\n"
              << "max_abs_error=" << format_real(max_err) << " tolerance=" << format_real(o.tolerance) << "\n";
    const auto show = [](const char* label, const std::vector<Coord>& v) {
        for (size_t i = 0; i < std::min<size_t>(v.size(), 10); ++i) {
            std::cout << "  " << label << " (" << v[i].row << "," << v[i].col << ")\n";
        }
    };
    show("missing", missing);
    show("extra", extra);
    std::cout << "result=" << (pass ? "pass" : "fail") << "\n";
    return pass ? exit_ok : exit_fail;
}

// ---- sweep ---------------------------------------------------------------

struct SweepOpts {
    SceneSetOpts scenes;
    NetworkOpts net;
    std::vector<double> ts{0, 1, 2, 3, 4, 5, 100};
    int jobs = 1;
    std::string out;
};

int cmd_sweep(const SweepOpts& o, RunManifest& m) {
    const auto scenes = o.scenes.load(m);
    fs::path base;
    const NetworkSpec spec = o.net.resolve(scenes.front(), base, m);

    struct Config {
        std::string label;
        NetworkSpec spec;
    };
    std::vector<Config> configs;
    configs.push_back({"subm", with_mode(spec, ConvMode::SubM)});
    for (double t : o.ts) {
        std::ostringstream label;
        label << "sd_t=" << t;
        configs.push_back({label.str(), with_sd_ratio(with_mode(spec, ConvMode::SD), t)});
    }
    configs.push_back({"sparse", with_mode(spec, ConvMode::SparseFull)});

    // flops[config][scene]
    std::vector<std::vector<uint64_t>> flops(configs.size(), std::vector<uint64_t>(scenes.size()));
    RunOptions opt;
    opt.base_dir = base;
    opt.compute_features = false;
    std::vector<uint64_t> dense(scenes.size(), 0);
    std::atomic<size_t> next{0};
    std::vector<std::string> errors(scenes.size());
    const auto worker = [&] {
        for (size_t s = next++; s < scenes.size(); s = next++) {
            try {
                for (size_t c = 0; c < configs.size(); ++c) {
                    const auto reports = run_network(scenes[s], configs[c].spec, opt).reports;
                    flops[c][s] = total_flops(reports);
                    if (c == 0) dense[s] = dense_reference_flops(configs[c].spec, reports);
                }
            } catch (const std::exception& e) {
                errors[s] = e.what();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(scenes.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (!e.empty()) throw std::runtime_error(e);
    }

    std::ostringstream os;
    os << "# sweep of " << spec.name << " over " << scenes.size() << " scenes\n";
    os << "# flops = 2 per multiply-accumulate + 1 per output-channel bias add; dense densifies every non-fixed layer\n";
    os << "config";
    for (size_t s = 0; s < scenes.size(); ++s) os << ",scene" << s;
    os << ",mean\n";
    const auto row = [&](const std::string& label, const std::vector<uint64_t>& v) {
        os << label;
        double sum = 0.0;
        for (uint64_t f : v) {
            os << ',' << f;
            sum += static_cast<double>(f);
        }
        os << ',' << format_real(sum / static_cast<double>(v.size())) << '\n';
    };
    row("dense", dense);
    for (size_t c = 0; c < configs.size(); ++c) row(configs[c].label, flops[c]);
    emit(os.str(), o.out, m);
    return exit_ok;
}

// ---- simulate ------------------------------------------------------------

struct SimulateOpts {
    std::string scene;
    NetworkOpts net;
    std::string config;
    std::string format = "csv";
    std::string golden;
    std::string out;
};

int cmd_simulate(const SimulateOpts& o, RunManifest& m) {
    const PillarTensor scene = load_plt(o.scene);
    m.add_input(o.scene);
    fs::path base;
    const NetworkSpec spec = o.net.resolve(scene, base, m);
    AcceleratorConfig cfg;
    if (!o.config.empty()) {
        cfg = accelerator_from_json(read_file(o.config));
        m.add_input(o.config);
    }
    RunOptions opt;
    opt.base_dir = base;
    opt.compute_features = false;
    const SpeedupReport rep = simulate_network(scene, spec, cfg, opt);
    std::string text;
    if (o.format == "csv") text = cycles_csv(rep, cfg);
    else if (o.format == "json") text = cycles_json(rep, cfg);
    else throw UsageError("unknown format '" + o.format + "' (csv, json)");
    emit(text, o.out, m);
    if (!o.golden.empty() && !check_golden(text, o.golden, m)) return exit_fail;
    return exit_ok;
}

// ---- calibrate -----------------------------------------------------------

struct CalibrateOpts {
    SceneSetOpts scenes;
    NetworkOpts net;
    bool use_network = false;
    double t = 2.0;
    std::string measure = "mean_abs";
    std::string aggregate = "identity";
    std::string emit_spec;
    std::string out;
};

int cmd_calibrate(const CalibrateOpts& o, RunManifest& m) {
    const auto scenes = o.scenes.load(m);
    std::ostringstream os;
    if (!o.use_network) {
        const ImportanceConfig cfg{parse_measure(o.measure), parse_aggregate(o.aggregate)};
        std::vector<std::vector<double>> pool;
        for (const auto& s : scenes) pool.push_back(pillar_importance(s, cfg).values);
        const double theta = calibrate_threshold(pool, o.t);
        size_t n = 0;
        for (const auto& p : pool) n += p.size();
        os << "# " << scenes.size() << " scenes, " << n << " pooled scores, t=" << format_real(o.t) << "\n";
        os << "theta=" << format_real(theta) << "\n";
        emit(os.str(), o.out, m);
        return exit_ok;
    }

    fs::path base;
    NetworkSpec spec = o.net.resolve(scenes.front(), base, m);
    const NetworkSpec topk = with_sd_ratio(spec, o.t);
    std::map<size_t, std::vector<std::vector<double>>> pools;
    std::map<size_t, std::string> ids;
    RunOptions opt;
    opt.base_dir = base;
    opt.compute_features = false;
    opt.observer = [&](const LayerTrace& tr) {
        if (!tr.scores) return;
        pools[tr.ref.ordinal].push_back(tr.scores->values);
        ids[tr.ref.ordinal] = tr.ref.id;
    };
    for (const auto& s : scenes) run_network(s, topk, opt);
    if (pools.empty()) throw UsageError(spec.name + " has no SD layers to calibrate");

    const auto layers = mutable_layers(spec);
    os << "# per-layer thresholds from top-k runs at t=" << format_real(o.t) << " over " << scenes.size()
       << " scenes\n";
    os << "layer,pool,theta\n";
    for (const auto& [ordinal, pool] : pools) {
        const double theta = calibrate_threshold(pool, o.t);
        size_t n = 0;
        for (const auto& p : pool) n += p.size();
        os << ids[ordinal] << ',' << n << ',' << format_real(theta) << '\n';
        layers[ordinal]->sd.source = SelectionMode::Threshold;
        layers[ordinal]->sd.value = theta;
    }
    emit(os.str(), o.out, m);
    if (!o.emit_spec.empty()) {
        write_file(o.emit_spec, network_to_json(spec));
        m.add_output(o.emit_spec);
    }
    return exit_ok;
}

// ---- network -------------------------------------------------------------

struct NetworkDumpOpts {
    std::string preset = "pointpillars";
    int32_t height = 496;
    int32_t width = 432;
    int32_t channels = 64;
    std::string out;
};

int cmd_network(const NetworkDumpOpts& o, RunManifest& m) {
    const auto spec = network_preset(o.preset, o.height, o.width, o.channels);
    if (!spec) throw UsageError("unknown network preset '" + o.preset + "'");
    validate(*spec);
    emit(network_to_json(*spec), o.out, m);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse pillar convolution engine: scenes, backbones, oracle checks and accelerator simulation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string manifest_path;
    app.add_option("--manifest", manifest_path, "Write a run manifest (JSON) to this file");

    uint64_t seed_default = 0;
    try {
        seed_default = env_seed();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }

    GenOpts gen;
    gen.seed = seed_default;
    auto* g = app.add_subcommand("gen", "Generate a synthetic pillar scene (PLT v1)");
    g->add_option("--preset", gen.preset, "kitti-like | nuscenes-like");
    g->add_option("--height", gen.height);
    g->add_option("--width", gen.width);
    g->add_option("--channels", gen.channels);
    g->add_option("--density", gen.density, "Fraction of active cells");
    g->add_option("--pattern", gen.pattern, "uniform | clustered | arcs");
    g->add_option("--clusters", gen.clusters);
    g->add_option("--spread", gen.spread, "Cluster sigma in cells");
    g->add_option("--arcs", gen.arcs);
    g->add_option("--seed", gen.seed, "Scene seed (default $SPE_SEED or 0)");
    g->add_option("--features", gen.features, "gaussian | constant")->capture_default_str();
    g->add_option("--value", gen.value, "Feature value for --features constant");
    g->add_option("-o,--out", gen.out, "Output file (default stdout)");

    RunOpts run;
    auto* r = app.add_subcommand("run", "Run a network over a scene and report per-layer FLOPs");
    r->add_option("--scene", run.scene, "PLT scene")->required();
    run.net.add(r);
    r->add_option("-o,--out", run.out, "Write the output tensor (PLT v1)");
    r->add_option("--report", run.report, "Report file (default stdout)");
    r->add_option("--format", run.format, "csv | json")->capture_default_str();
    r->add_option("--golden", run.golden, "Compare the report with this file; exit 1 on drift");

    VerifyOpts ver;
    ver.seed = seed_default;
    auto* v = app.add_subcommand("verify", "Check one sparse layer against the dense oracle");
    v->add_option("--scene", ver.scene, "PLT scene")->required();
    v->add_option("--kernel", ver.kernel_file, "KRN kernel file (default: seeded random kernel)");
    v->add_option("--kernel-size", ver.kernel_size, "Random kernel extent, e.g. 3x3")->capture_default_str();
    v->add_option("--stride", ver.stride, "Random kernel stride")->capture_default_str();
    v->add_flag("--deconv", ver.deconv, "2x2 stride-2 transposed layer");
    v->add_option("--c-out", ver.c_out, "Random kernel output channels (default: input channels)");
    v->add_option("--seed", ver.seed, "Random kernel seed (default $SPE_SEED or 0)");
    v->add_option("--mode", ver.mode, "dense | sparse | subm | sd")->capture_default_str();
    v->add_option("--t", ver.t, "SD top-k ratio in percent (default 2)");
    v->add_option("--threshold", ver.threshold, "SD importance threshold instead of top-k");
    v->add_option("--measure", ver.measure, "mean_abs | max_abs")->capture_default_str();
    v->add_option("--aggregate", ver.aggregate, "identity | avg_pool | max_pool")->capture_default_str();
    v->add_option("--tolerance", ver.tolerance, "Max abs error allowed")->capture_default_str();

    SweepOpts sw;
    sw.scenes.seed = seed_default;
    auto* s = app.add_subcommand("sweep", "Total FLOPs over a list of SD ratios");
    sw.scenes.add(s);
    sw.net.add(s);
    s->add_option("--ts", sw.ts, "SD ratios in percent")->delimiter(',')->capture_default_str();
    s->add_option("-j,--jobs", sw.jobs, "Scenes processed in parallel")->capture_default_str();
    s->add_option("-o,--out", sw.out, "Output file (default stdout)");

    SimulateOpts sim;
    auto* si = app.add_subcommand("simulate", "Cycle counts of the sparse accelerator against a dense baseline");
    si->add_option("--scene", sim.scene, "PLT scene")->required();
    sim.net.add(si);
    si->add_option("--config", sim.config, "Accelerator config JSON");
    si->add_option("--format", sim.format, "csv | json")->capture_default_str();
    si->add_option("--golden", sim.golden, "Compare output with this file; exit 1 on drift");
    si->add_option("-o,--out", sim.out, "Output file (default stdout)");

    CalibrateOpts cal;
    cal.scenes.seed = seed_default;
    auto* c = app.add_subcommand("calibrate", "Importance threshold matching a top-k ratio over a scene set");
    cal.scenes.add(c);
    c->add_flag("--per-layer", cal.use_network, "Calibrate every SD layer of --network");
    cal.net.add(c, false);
    c->add_option("--t", cal.t, "Target ratio in percent")->capture_default_str();
    c->add_option("--measure", cal.measure, "mean_abs | max_abs")->capture_default_str();
    c->add_option("--aggregate", cal.aggregate, "identity | avg_pool | max_pool")->capture_default_str();
    c->add_option("--emit-spec", cal.emit_spec, "With --per-layer: write the network with threshold SD layers");
    c->add_option("-o,--out", cal.out, "Output file (default stdout)");

    NetworkDumpOpts nd;
    auto* n = app.add_subcommand("network", "Print a network preset as JSON");
    n->add_option("--preset", nd.preset)->capture_default_str();
    n->add_option("--height", nd.height)->capture_default_str();
    n->add_option("--width", nd.width)->capture_default_str();
    n->add_option("--channels", nd.channels)->capture_default_str();
    n->add_option("-o,--out", nd.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    RunManifest manifest;
    manifest.command_line.assign(argv, argv + argc);
    int rc = exit_ok;
    try {
        if (g->parsed()) rc = cmd_gen(gen, manifest);
        else if (r->parsed()) rc = cmd_run(run, manifest);
        else if (v->parsed()) rc = cmd_verify(ver, manifest);
        else if (s->parsed()) rc = cmd_sweep(sw, manifest);
        else if (si->parsed()) rc = cmd_simulate(sim, manifest);
        else if (c->parsed()) rc = cmd_calibrate(cal, manifest);
        else if (n->parsed()) rc = cmd_network(nd, manifest);
        if (!manifest_path.empty()) manifest.write(manifest_path);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const spe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_fail;
    }
    return rc;
}
