#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "spe/sparse_tensor.hpp"

namespace spe {

/// Spatial extent and stride of a convolution kernel.
///
/// Weight offset index w enumerates kernel taps row-major: w = kr * k_w + kc.
/// Odd kernels are centred (tap offset kr - k_h/2); even kernels are anchored
/// at the top-left (tap offset kr). A conv output at (R, C) reads the input at
/// (stride*R + off_r, stride*C + off_c).
struct KernelShape {
    int32_t k_h = 1;
    int32_t k_w = 1;
    int32_t stride = 1;

    int32_t volume() const { return k_h * k_w; }
    bool odd() const { return (k_h % 2 == 1) && (k_w % 2 == 1); }
    int32_t pad_h() const { return k_h % 2 == 1 ? k_h / 2 : 0; }
    int32_t pad_w() const { return k_w % 2 == 1 ? k_w / 2 : 0; }

    Coord offset(int32_t w) const { return {w / k_w - pad_h(), w % k_w - pad_w()}; }

    /// Inverse of offset(); -1 when the tap lies outside the kernel.
    int32_t index_of(Coord off) const {
        const int32_t kr = off.row + pad_h();
        const int32_t kc = off.col + pad_w();
        if (kr < 0 || kr >= k_h || kc < 0 || kc >= k_w) return -1;
        return kr * k_w + kc;
    }

    friend bool operator==(const KernelShape&, const KernelShape&) = default;
};

/// Output grid of a forward conv with same-style padding: ceil(H / stride).
GridShape conv_output_shape(GridShape in, const KernelShape& k);

/// Weights laid out (kr, kc, c_in, c_out) row-major, plus one bias per output channel.
struct Kernel {
    KernelShape shape;
    int32_t c_in = 0;
    int32_t c_out = 0;
    std::vector<float> weights;
    std::vector<float> bias;

    Kernel() = default;
    Kernel(KernelShape s, int32_t cin, int32_t cout);

    /// c_in x c_out matrix for one tap.
    const float* tap(int32_t w) const {
        return weights.data() + static_cast<size_t>(w) * c_in * c_out;
    }

    /// Throws BadVectorLength when the arrays do not match the shape.
    void validate() const;

    /// 1x1 identity, zero bias.
    static Kernel identity(int32_t channels);

    /// He-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)]; bias uniform in
    /// [-bias_scale, bias_scale]. Deterministic in seed.
    static Kernel random(KernelShape s, int32_t cin, int32_t cout, uint64_t seed,
                         double bias_scale = 0.1);

    friend bool operator==(const Kernel&, const Kernel&) = default;
};

// KRN v1 text format:
//   KRN v1 <k_h> <k_w> <c_in> <c_out> <stride>
//   weights, one line per (kr, kc, c_in) holding c_out values
//   bias line with c_out values
void write_krn(std::ostream& os, const Kernel& k);
Kernel read_krn(std::istream& is);
void save_krn(const std::filesystem::path& path, const Kernel& k);
Kernel load_krn(const std::filesystem::path& path);

}  // namespace spe
