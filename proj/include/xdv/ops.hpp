// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "xdv/tape.hpp"

// Differentiable operations over tape values. Operands are viewed as matrices
// (rank 0 is 1x1, rank 1 is a 1xn row). Shape errors throw DimensionError
// naming both operands.
namespace xdv {

Var matmul(Var a, Var b);
Var transpose(Var a);

/// a + b; b may also be a single row broadcast over every row of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

/// Max-shifted softmax. axis 0 normalises each column, axis 1 each row; a
/// rank-1 input is normalised over all of its elements.
Var softmax(Var a, int axis = -1);

/// Sum of all elements, as a scalar.
Var sum(Var a);
/// Column sums, [1 x cols].
Var sum_rows(Var a);
/// Row sums, [rows x 1].
Var sum_cols(Var a);
Var mean_rows(Var a);
/// Sum of squared elements, as a scalar.
Var squared_norm(Var a);

Var row(Var a, std::size_t index);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Row-major flattening to [1 x rows*cols].
Var flatten(Var a);

/// Rows of `table` selected by `ids`, [ids.size() x table.cols].
Var gather_rows(Var table, std::span<const int> ids);

/// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
Var cross_entropy(Var logits, std::span<const int> targets);

/// Fused GRU gate arithmetic on packed pre-activations.
///
/// `gx` = x W_x + b and `gh` = h W_h, both [n x 3d] with blocks ordered
/// (update, reset, candidate); `h` is the previous state [n x d]. Returns
///   u = sigmoid(gx_u + gh_u), r = sigmoid(gx_r + gh_r)
///   c = tanh(gx_c + r * gh_c)
///   h' = u * h + (1 - u) * c
Var gru_gates(Var gx, Var gh, Var h);

}  // namespace xdv
