#include "spe/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "spe/error.hpp"
#include "spe/io.hpp"

namespace spe {

using nlohmann::json;

namespace {

std::string kernel_label(const KernelShape& k) {
    return std::to_string(k.k_h) + "x" + std::to_string(k.k_w);
}

}  // namespace

std::string report_csv(std::string_view network, std::span<const LayerReport> reports) {
    std::ostringstream os;
    os << "# network " << network << "\n";
    os << "# flops = 2 per multiply-accumulate + 1 per output-channel bias add\n";
    os << "layer,op,mode,kernel,stride,c_in,c_out,out_h,out_w,active_in,active_out,density_out,rules,flops,"
          "selected\n";
    uint64_t rules = 0;
    for (const auto& r : reports) {
        os << r.id << ',' << to_string(r.op) << ',' << to_string(r.mode) << ',' << kernel_label(r.kernel) << ','
           << r.kernel.stride << ',' << r.c_in << ',' << r.c_out << ',' << r.out_shape.height << ','
           << r.out_shape.width << ',' << r.active_in << ',' << r.active_out << ',' << format_real(r.density_out)
           << ',' << r.rules << ',' << r.flops << ',';
        if (r.selected_count) os << *r.selected_count;
        os << '\n';
        rules += r.rules;
    }
    os << "total,,,,,,,,,,,," << rules << ',' << total_flops(reports) << ",\n";
    return os.str();
}

std::string report_json(std::string_view network, std::span<const LayerReport> reports) {
    json layers = json::array();
    for (const auto& r : reports) {
        json l = {{"layer", r.id},
                  {"op", to_string(r.op)},
                  {"mode", to_string(r.mode)},
                  {"kernel", {r.kernel.k_h, r.kernel.k_w}},
                  {"stride", r.kernel.stride},
                  {"c_in", r.c_in},
                  {"c_out", r.c_out},
                  {"out_shape", {r.out_shape.height, r.out_shape.width}},
                  {"active_in", r.active_in},
                  {"active_out", r.active_out},
                  {"density_out", r.density_out},
                  {"rules", r.rules},
                  {"flops", r.flops}};
        l["selected"] = r.selected_count ? json(*r.selected_count) : json(nullptr);
        layers.push_back(l);
    }
    const json j = {{"network", network}, {"layers", layers}, {"total_flops", total_flops(reports)}};
    return j.dump(2) + "\n";
}

std::string cycles_csv(const SpeedupReport& rep, const AcceleratorConfig& cfg) {
    std::ostringstream os;
    os << "# network " << rep.network << "\n";
    os << "# array " << cfg.array_rows << "x" << cfg.array_cols << ", sram " << cfg.sram_kbytes << " KB\n";
    os << "# layer sparse_total = mapping + gemm + fill + stall (phases back to back)\n";
    os << "# network sparse_total overlaps mapping of layer L with execution of L-1:"
          " mapping(first) + sum max(mapping(L), exec(L-1)) + exec(last), exec = gemm + fill + stall\n";
    os << "layer,mode,alignment,row_merge,dilation_check,column_dilation,mapping,tile_passes,gemm,fill,stall,"
          "sparse_total,dense_total,speedup,sparse_flops,dense_flops,ideal\n";
    for (const auto& l : rep.layers) {
        const auto& s = l.sparse;
        const auto& m = s.mapping;
        os << l.id << ',' << to_string(l.mode) << ',' << m.alignment << ',' << m.row_merge << ','
           << m.dilation_check << ',' << m.column_dilation << ',' << m.total << ',' << s.tile_passes << ','
           << s.gemm_cycles << ',' << s.fill_cycles << ',' << s.stall_cycles << ',' << s.total() << ','
           << l.dense.total() << ',' << format_real(l.speedup()) << ',' << l.sparse_flops << ','
           << l.dense_flops << ',' << format_real(l.ideal()) << '\n';
    }
    os << "total,,,,,,,,,,," << rep.sparse_total << ',' << rep.dense_total << ',' << format_real(rep.speedup())
       << ',' << rep.sparse_flops << ',' << rep.dense_flops << ',' << format_real(rep.ideal()) << '\n';
    return os.str();
}

std::string cycles_json(const SpeedupReport& rep, const AcceleratorConfig& cfg) {
    json layers = json::array();
    for (const auto& l : rep.layers) {
        const auto& s = l.sparse;
        const auto& m = s.mapping;
        layers.push_back({{"layer", l.id},
                          {"mode", to_string(l.mode)},
                          {"mapping",
                           {{"alignment", m.alignment},
                            {"row_merge", m.row_merge},
                            {"dilation_check", m.dilation_check},
                            {"column_dilation", m.column_dilation},
                            {"total", m.total}}},
                          {"tile_passes", s.tile_passes},
                          {"gemm", s.gemm_cycles},
                          {"fill", s.fill_cycles},
                          {"stall", s.stall_cycles},
                          {"sparse_total", s.total()},
                          {"dense_total", l.dense.total()},
                          {"speedup", l.speedup()},
                          {"sparse_flops", l.sparse_flops},
                          {"dense_flops", l.dense_flops},
                          {"ideal", l.ideal()}});
    }
    const json j = {{"network", rep.network},
                    {"config", json::parse(accelerator_to_json(cfg))},
                    {"overlap_model", "mapping(first) + sum max(mapping(L), exec(L-1)) + exec(last)"},
                    {"layers", layers},
                    {"sparse_total", rep.sparse_total},
                    {"dense_total", rep.dense_total},
                    {"speedup", rep.speedup()},
                    {"sparse_flops", rep.sparse_flops},
                    {"dense_flops", rep.dense_flops},
                    {"ideal", rep.ideal()}};
    return j.dump(2) + "\n";
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::IoError, "sha256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

}  // namespace spe
