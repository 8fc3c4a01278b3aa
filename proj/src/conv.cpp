#include "spe/conv.hpp"

#include <string>
#include <vector>

#include "spe/error.hpp"

namespace spe {

namespace {

void check_rulebook_inputs(const Rulebook& rb, const PillarTensor& input, const Kernel& k) {
    k.validate();
    if (input.channels() != k.c_in) {
        throw Error(Errc::ShapeMismatch, "input has " + std::to_string(input.channels()) +
                                             " channels, kernel expects " + std::to_string(k.c_in));
    }
    if (rb.kernel_volume != k.shape.volume()) {
        throw Error(Errc::ShapeMismatch, "rulebook built for a kernel of volume " +
                                             std::to_string(rb.kernel_volume));
    }
    rb.validate(input.size());
}

inline void accumulate(double* __restrict acc, const float* __restrict tap, const float* __restrict x, int32_t c_in,
                       int32_t c_out) {
    for (int32_t ci = 0; ci < c_in; ++ci) {
        const double xv = x[ci];
        const float* wrow = tap + static_cast<size_t>(ci) * c_out;
        for (int32_t co = 0; co < c_out; ++co) acc[co] += static_cast<double>(wrow[co]) * xv;
    }
}

void check_dense(const DenseGrid& g, const Kernel& k) {
    k.validate();
    if (g.channels != k.c_in) {
        throw Error(Errc::ShapeMismatch, "grid has " + std::to_string(g.channels) +
                                             " channels, kernel expects " + std::to_string(k.c_in));
    }
    if (g.data.size() != static_cast<size_t>(g.height) * g.width * g.channels) {
        throw Error(Errc::ShapeMismatch, "dense grid size does not match its dimensions");
    }
}

void check_deconv(const DenseGrid& g, const Kernel& k) {
    check_dense(g, k);
    if (k.shape.k_h != 2 || k.shape.k_w != 2 || k.shape.stride != 2) {
        throw Error(Errc::BadKernelShape, "expected a 2x2 kernel with stride 2");
    }
}

}  // namespace

PillarTensor execute_rulebook(const Rulebook& rb, const PillarTensor& input, const Kernel& k) {
    check_rulebook_inputs(rb, input, k);
    const size_t n_out = rb.output_coords.size();
    const int32_t c_in = k.c_in;
    const int32_t c_out = k.c_out;

    // rules are sorted by output, so each output owns one contiguous run
    std::vector<size_t> run_start(n_out + 1, 0);
    for (const Rule& r : rb.rules) ++run_start[static_cast<size_t>(r.out) + 1];
    for (size_t o = 1; o <= n_out; ++o) run_start[o] += run_start[o - 1];

    std::vector<float> out(n_out * static_cast<size_t>(c_out));
    const float* in = input.features().data();
    const auto n = static_cast<std::ptrdiff_t>(n_out);

#pragma omp parallel
    {
        std::vector<double> acc(static_cast<size_t>(c_out));
#pragma omp for schedule(static)
        for (std::ptrdiff_t o = 0; o < n; ++o) {
            for (int32_t co = 0; co < c_out; ++co) acc[co] = k.bias[co];
            for (size_t j = run_start[o]; j < run_start[o + 1]; ++j) {
                const Rule& r = rb.rules[j];
                accumulate(acc.data(), k.tap(r.w), in + static_cast<size_t>(r.in) * c_in, c_in, c_out);
            }
            float* dst = out.data() + static_cast<size_t>(o) * c_out;
            for (int32_t co = 0; co < c_out; ++co) dst[co] = static_cast<float>(acc[co]);
        }
    }
    return PillarTensor::from_sorted(rb.out_shape.height, rb.out_shape.width, c_out,
                                     rb.output_coords, std::move(out));
}

PillarTensor execute_rulebook_serial(const Rulebook& rb, const PillarTensor& input, const Kernel& k) {
    check_rulebook_inputs(rb, input, k);
    const size_t n_out = rb.output_coords.size();
    std::vector<double> acc(n_out * static_cast<size_t>(k.c_out));
    for (size_t o = 0; o < n_out; ++o) {
        for (int32_t co = 0; co < k.c_out; ++co) acc[o * k.c_out + co] = k.bias[co];
    }
    for (const Rule& r : rb.rules) {
        for (int32_t ci = 0; ci < k.c_in; ++ci) {
            const double x = input.feature(static_cast<size_t>(r.in))[ci];
            for (int32_t co = 0; co < k.c_out; ++co) {
                const float w = k.weights[(static_cast<size_t>(r.w) * k.c_in + ci) * k.c_out + co];
                acc[static_cast<size_t>(r.out) * k.c_out + co] += static_cast<double>(w) * x;
            }
        }
    }
    std::vector<float> out(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
    return PillarTensor::from_sorted(rb.out_shape.height, rb.out_shape.width, k.c_out,
                                     rb.output_coords, std::move(out));
}

DenseGrid dense_conv(const DenseGrid& g, const Kernel& k) {
    check_dense(g, k);
    const GridShape os = conv_output_shape(g.shape(), k.shape);
    DenseGrid out(os.height, os.width, k.c_out);
    const KernelShape& ks = k.shape;

#pragma omp parallel
    {
        std::vector<double> acc(static_cast<size_t>(k.c_out));
#pragma omp for schedule(static)
        for (int32_t r = 0; r < os.height; ++r) {
            for (int32_t c = 0; c < os.width; ++c) {
                for (int32_t co = 0; co < k.c_out; ++co) acc[co] = k.bias[co];
                for (int32_t w = 0; w < ks.volume(); ++w) {
                    const Coord off = ks.offset(w);
                    const int32_t ir = ks.stride * r + off.row;
                    const int32_t ic = ks.stride * c + off.col;
                    if (ir < 0 || ir >= g.height || ic < 0 || ic >= g.width) continue;
                    accumulate(acc.data(), k.tap(w), g.at(ir, ic), k.c_in, k.c_out);
                }
                float* dst = out.at(r, c);
                for (int32_t co = 0; co < k.c_out; ++co) dst[co] = static_cast<float>(acc[co]);
            }
        }
    }
    return out;
}

DenseGrid dense_conv_oracle(const DenseGrid& g, const Kernel& k) {
    check_dense(g, k);
    const KernelShape& ks = k.shape;
    const int32_t s = ks.stride;
    const int32_t out_h = (g.height + s - 1) / s;
    const int32_t out_w = (g.width + s - 1) / s;
    DenseGrid out(out_h, out_w, k.c_out);
    for (int32_t r = 0; r < out_h; ++r) {
        for (int32_t c = 0; c < out_w; ++c) {
            for (int32_t co = 0; co < k.c_out; ++co) {
                double acc = k.bias[co];
                for (int32_t kr = 0; kr < ks.k_h; ++kr) {
                    for (int32_t kc = 0; kc < ks.k_w; ++kc) {
                        const int32_t ir = s * r + kr - ks.pad_h();
                        const int32_t ic = s * c + kc - ks.pad_w();
                        const bool inside = ir >= 0 && ir < g.height && ic >= 0 && ic < g.width;
                        for (int32_t ci = 0; ci < k.c_in; ++ci) {
                            const double x = inside ? g.data[(static_cast<size_t>(ir) * g.width + ic) * g.channels + ci] : 0.0;
                            const size_t wi = ((static_cast<size_t>(kr) * ks.k_w + kc) * k.c_in + ci) * k.c_out + co;
                            acc += static_cast<double>(k.weights[wi]) * x;
                        }
                    }
                }
                out.data[(static_cast<size_t>(r) * out_w + c) * k.c_out + co] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

DenseGrid dense_deconv2x2(const DenseGrid& g, const Kernel& k, GridShape out_shape) {
    check_deconv(g, k);
    DenseGrid out(out_shape.height, out_shape.width, k.c_out);

#pragma omp parallel
    {
        std::vector<double> acc(static_cast<size_t>(k.c_out));
#pragma omp for schedule(static)
        for (int32_t r = 0; r < out_shape.height; ++r) {
            for (int32_t c = 0; c < out_shape.width; ++c) {
                for (int32_t co = 0; co < k.c_out; ++co) acc[co] = k.bias[co];
                const int32_t ir = r / 2;
                const int32_t ic = c / 2;
                if (ir < g.height && ic < g.width) {
                    accumulate(acc.data(), k.tap((r % 2) * 2 + (c % 2)), g.at(ir, ic), k.c_in, k.c_out);
                }
                float* dst = out.at(r, c);
                for (int32_t co = 0; co < k.c_out; ++co) dst[co] = static_cast<float>(acc[co]);
            }
        }
    }
    return out;
}

DenseGrid dense_deconv2x2_oracle(const DenseGrid& g, const Kernel& k, GridShape out_shape) {
    check_deconv(g, k);
    DenseGrid out(out_shape.height, out_shape.width, k.c_out);
    std::vector<double> acc(out.data.size());
    for (int32_t r = 0; r < out_shape.height; ++r) {
        for (int32_t c = 0; c < out_shape.width; ++c) {
            for (int32_t co = 0; co < k.c_out; ++co) {
                acc[(static_cast<size_t>(r) * out_shape.width + c) * k.c_out + co] = k.bias[co];
            }
        }
    }
    // scatter form: every input stamps its 2x2 block
    for (int32_t r = 0; r < g.height; ++r) {
        for (int32_t c = 0; c < g.width; ++c) {
            for (int32_t dr = 0; dr < 2; ++dr) {
                for (int32_t dc = 0; dc < 2; ++dc) {
                    const int32_t orow = 2 * r + dr;
                    const int32_t ocol = 2 * c + dc;
                    if (orow >= out_shape.height || ocol >= out_shape.width) continue;
                    for (int32_t ci = 0; ci < k.c_in; ++ci) {
                        const double x = g.data[(static_cast<size_t>(r) * g.width + c) * g.channels + ci];
                        for (int32_t co = 0; co < k.c_out; ++co) {
                            const size_t wi = ((static_cast<size_t>(dr) * 2 + dc) * k.c_in + ci) * k.c_out + co;
                            acc[(static_cast<size_t>(orow) * out_shape.width + ocol) * k.c_out + co] +=
                                static_cast<double>(k.weights[wi]) * x;
                        }
                    }
                }
            }
        }
    }
    for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);
    return out;
}

}  // namespace spe
