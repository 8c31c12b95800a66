#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cap/tape.hpp"
#include "cap/tensor.hpp"

// Differentiable primitives. Every function records one node on the tape of
// its operands and returns the result handle. Feature maps are laid out
// height x width x channels.

namespace cap {

namespace kernels {

// Raw dense products on row-major buffers; results are accumulated into c.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
// c[m x n] += a^T b, with a stored k x m.
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
// c[m x n] += a b^T, with b stored n x k.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);

}  // namespace kernels

enum class Unary { tanh, sigmoid, relu };
enum class Binary { add, mul };
enum class Padding { same, valid };

/// [m x k] . [k x n] -> [m x n]
Var matmul(Var a, Var b);
/// Rank-2 transpose.
Var transpose(Var a);

/// Pointwise unary map with exact derivative.
Var elementwise(Var x, Unary kind);
Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
Var log(Var x);

/**
 * Pointwise binary op. Shapes must match, or `b` must broadcast along the
 * trailing axes of `a` (its shape is a suffix of a's shape, or it holds a
 * single element). No other broadcasting is supported.
 */
Var elementwise(Var a, Var b, Binary kind);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

/// Max-subtracted softmax along `axis`.
Var softmax(Var x, std::size_t axis);

Var sum(Var x);
Var mean(Var x);
/// Mean over one axis; the axis is removed from the result shape.
Var mean_axis(Var x, std::size_t axis);
Var reshape(Var x, Shape shape);

/// [h x w x C] -> [C], per-channel spatial mean.
Var global_avg_pool(Var x);

/// Per-pixel linear map: [H x W x Cin], w [Cin x Cout], b [Cout] -> [H x W x Cout].
Var conv1x1(Var x, Var w, Var b);

/// 3x3 cross-correlation: w is [3 x 3 x Cin x Cout], b is [Cout].
Var conv3x3(Var x, Var w, Var b, std::size_t stride = 1, Padding padding = Padding::same);
Shape conv3x3_output_shape(const Shape& input, std::size_t out_channels, std::size_t stride,
                           Padding padding);

/// 2x2 max pooling with stride 2 (odd trailing rows/columns are dropped).
Var max_pool2x2(Var x);

/// Stack equal-shaped values along a new leading axis.
Var stack(std::span<const Var> xs);
/// Slice index i of the leading axis.
Var row(Var x, std::size_t i);
/// Single flat element as a [1] tensor.
Var pick(Var x, std::size_t flat_index);

/// q [R x d], k [S x d] -> [R x S x d] with out[r][s] = q[r] + k[s].
Var pairwise_sum(Var q, Var k);

}  // namespace cap
