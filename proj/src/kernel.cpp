#include "spe/kernel.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "spe/error.hpp"
#include "spe/io.hpp"
#include "spe/rng.hpp"

namespace spe {

GridShape conv_output_shape(GridShape in, const KernelShape& k) {
    const int32_t s = k.stride;
    return {(in.height + s - 1) / s, (in.width + s - 1) / s};
}

Kernel::Kernel(KernelShape s, int32_t cin, int32_t cout)
    : shape(s),
      c_in(cin),
      c_out(cout),
      weights(static_cast<size_t>(s.volume()) * cin * cout, 0.0f),
      bias(static_cast<size_t>(cout), 0.0f) {}

void Kernel::validate() const {
    if (shape.k_h <= 0 || shape.k_w <= 0 || shape.stride <= 0 || c_in <= 0 || c_out <= 0) {
        throw Error(Errc::BadKernelShape, "kernel dimensions must be positive");
    }
    if (weights.size() != static_cast<size_t>(shape.volume()) * c_in * c_out) {
        throw Error(Errc::BadVectorLength, "kernel weight array has " + std::to_string(weights.size()) +
                                               " values");
    }
    if (bias.size() != static_cast<size_t>(c_out)) {
        throw Error(Errc::BadVectorLength, "kernel bias has " + std::to_string(bias.size()) + " values");
    }
}

Kernel Kernel::identity(int32_t channels) {
    Kernel k({1, 1, 1}, channels, channels);
    for (int32_t c = 0; c < channels; ++c) k.weights[static_cast<size_t>(c) * channels + c] = 1.0f;
    return k;
}

Kernel Kernel::random(KernelShape s, int32_t cin, int32_t cout, uint64_t seed, double bias_scale) {
    Kernel k(s, cin, cout);
    SplitMix64 rng(seed);
    const double bound = std::sqrt(6.0 / (static_cast<double>(s.volume()) * cin));
    for (float& w : k.weights) w = static_cast<float>(rng.uniform(-bound, bound));
    for (float& b : k.bias) b = static_cast<float>(rng.uniform(-bias_scale, bias_scale));
    return k;
}

void write_krn(std::ostream& os, const Kernel& k) {
    os << "KRN v1 " << k.shape.k_h << ' ' << k.shape.k_w << ' ' << k.c_in << ' ' << k.c_out << ' '
       << k.shape.stride << '\n';
    const size_t rows = static_cast<size_t>(k.shape.volume()) * k.c_in;
    for (size_t r = 0; r < rows; ++r) {
        for (int32_t o = 0; o < k.c_out; ++o) {
            if (o) os << ' ';
            os << format_real(k.weights[r * k.c_out + o]);
        }
        os << '\n';
    }
    for (int32_t o = 0; o < k.c_out; ++o) {
        if (o) os << ' ';
        os << format_real(k.bias[o]);
    }
    os << '\n';
}

Kernel read_krn(std::istream& is) {
    std::string magic, version;
    KernelShape s;
    int32_t cin = 0, cout = 0;
    if (!(is >> magic >> version) || magic != "KRN" || version != "v1") {
        throw Error(Errc::ParseError, "expected 'KRN v1' header");
    }
    if (!(is >> s.k_h >> s.k_w >> cin >> cout >> s.stride)) {
        throw Error(Errc::ParseError, "malformed KRN header");
    }
    if (s.k_h <= 0 || s.k_w <= 0 || s.stride <= 0 || cin <= 0 || cout <= 0) {
        throw Error(Errc::BadKernelShape, "kernel dimensions must be positive");
    }
    Kernel k(s, cin, cout);
    auto read_value = [&](float& dst) {
        std::string tok;
        if (!(is >> tok)) throw Error(Errc::ParseError, "truncated KRN body");
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), dst);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw Error(Errc::ParseError, "malformed number '" + tok + "'");
        }
    };
    for (float& w : k.weights) read_value(w);
    for (float& b : k.bias) read_value(b);
    std::string extra;
    if (is >> extra) throw Error(Errc::ParseError, "trailing data after KRN bias line");
    return k;
}

void save_krn(const std::filesystem::path& path, const Kernel& k) {
    std::ostringstream os;
    write_krn(os, k);
    write_file(path, os.str());
}

Kernel load_krn(const std::filesystem::path& path) {
    std::istringstream is(read_file(path));
    return read_krn(is);
}

}  // namespace spe
