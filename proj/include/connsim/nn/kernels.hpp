#pragma once

#include <cstddef>
#include <span>

/// Dense kernels of the connectome classifier.
///
/// Tensor layout is channel-major and contiguous: an edge tensor with C
/// channels over q nodes is `in[(c * q + i) * q + j]`, a node tensor is
/// `in[c * q + i]`. Filters of the cross-shaped layers are stored per
/// (output filter f, input channel c) as length-q vectors at `(f * C + c) * q`.
///
/// Forward kernels write pre-activations (no nonlinearity). Backward kernels
/// take the gradient with respect to those pre-activations and *accumulate*
/// into parameter and input gradients; pass an empty `d_in` to skip the input
/// gradient, and empty parameter-gradient spans to compute only `d_in`.
///
/// The functions in `connsim::nn` are OpenMP-parallel over independent output
/// slices, so results do not depend on the thread count. `connsim::nn::reference`
/// evaluates the layer formulas literally, serially, for tests and benchmarks.
namespace connsim::nn {

struct CrossShape {
    std::size_t nodes = 0;     // q
    std::size_t in_ch = 0;     // C
    std::size_t filters = 0;   // F
};

struct DenseShape {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
};

/// Edge-to-edge: out[f](i,j) = b[f] + sum_c sum_k row[f,c][k] in[c](i,k) + col[f,c][k] in[c](k,j)
void edge2edge_forward(const CrossShape& s, std::span<const double> in, std::span<const double> row,
                       std::span<const double> col, std::span<const double> bias,
                       std::span<double> out);
void edge2edge_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> row, std::span<const double> col,
                        std::span<const double> d_out, std::span<double> d_row,
                        std::span<double> d_col, std::span<double> d_bias,
                        std::span<double> d_in);

/// Edge-to-node: out[f](i) = b[f] + sum_c sum_j w[f,c][j] in[c](i,j)
void edge2node_forward(const CrossShape& s, std::span<const double> in,
                       std::span<const double> weight, std::span<const double> bias,
                       std::span<double> out);
void edge2node_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> weight, std::span<const double> d_out,
                        std::span<double> d_weight, std::span<double> d_bias,
                        std::span<double> d_in);

/// out[o] = b[o] + sum_i W[o * inputs + i] in[i]
void dense_forward(const DenseShape& s, std::span<const double> in, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> out);
void dense_backward(const DenseShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out,
                    std::span<double> d_weight, std::span<double> d_bias, std::span<double> d_in);

namespace reference {

void edge2edge_forward(const CrossShape& s, std::span<const double> in, std::span<const double> row,
                       std::span<const double> col, std::span<const double> bias,
                       std::span<double> out);
void edge2edge_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> row, std::span<const double> col,
                        std::span<const double> d_out, std::span<double> d_row,
                        std::span<double> d_col, std::span<double> d_bias,
                        std::span<double> d_in);
void edge2node_forward(const CrossShape& s, std::span<const double> in,
                       std::span<const double> weight, std::span<const double> bias,
                       std::span<double> out);
void edge2node_backward(const CrossShape& s, std::span<const double> in,
                        std::span<const double> weight, std::span<const double> d_out,
                        std::span<double> d_weight, std::span<double> d_bias,
                        std::span<double> d_in);
void dense_forward(const DenseShape& s, std::span<const double> in, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> out);
void dense_backward(const DenseShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out,
                    std::span<double> d_weight, std::span<double> d_bias, std::span<double> d_in);

}  // namespace reference

}  // namespace connsim::nn
