#pragma once

#include "spe/kernel.hpp"
#include "spe/rulebook.hpp"
#include "spe/sparse_tensor.hpp"

namespace spe {

// Every kernel here accumulates in double and rounds to float once per output
// value. The per-output accumulation order is fixed (taps ascending, then
// input channel ascending), so the OpenMP kernels are bitwise identical to
// their serial references for any thread count.

/// Gather-GEMM-scatter over a rulebook. Parallel over output entries.
PillarTensor execute_rulebook(const Rulebook& rb, const PillarTensor& input, const Kernel& k);

/// Serial reference: walks the rule list once in order.
PillarTensor execute_rulebook_serial(const Rulebook& rb, const PillarTensor& input, const Kernel& k);

/// Dense cross-correlation with same-style zero padding, output ceil(H/s) x ceil(W/s).
/// Parallel over output rows.
DenseGrid dense_conv(const DenseGrid& g, const Kernel& k);

/// Direct six-loop convolution; no sparsity shortcuts. Reference for everything above.
DenseGrid dense_conv_oracle(const DenseGrid& g, const Kernel& k);

/// Dense 2x2 / stride-2 transposed conv into an out_shape grid.
DenseGrid dense_deconv2x2(const DenseGrid& g, const Kernel& k, GridShape out_shape);
DenseGrid dense_deconv2x2_oracle(const DenseGrid& g, const Kernel& k, GridShape out_shape);

}  // namespace spe
