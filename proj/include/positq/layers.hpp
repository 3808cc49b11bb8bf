#pragma once

// Forward-only CNN kernels over CHW tensors.
//
// Convolution is cross-correlation (no kernel flip). Conv and dense layers
// accumulate in double in a fixed order, so results do not depend on threading.

#include <cstddef>

#include "positq/tensor.hpp"

namespace positq {

enum class Padding { kValid, kSame };

// input [C, H, W], kernel [K, C, kH, kW], bias [K] -> [K, H', W'] with
// H' = floor((H + 2p - kH) / stride) + 1. Same padding uses p = (k - 1) / 2
// per dimension and requires odd kernel sizes.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              Padding padding);

// Non-overlapping or strided max pooling over [C, H, W] without padding.
Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride);

Tensor relu(const Tensor& input);

// Any shape -> [N].
Tensor flatten(const Tensor& input);

// input [N], weights [M, N], bias [M] -> [M].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

// exp(z - max z) normalized over all elements. Throws ShapeError if empty.
Tensor softmax(const Tensor& logits);

// Output shapes, for validating a layer chain without running it.
Shape conv2d_shape(const Shape& input, const Shape& kernel, const Shape& bias, std::size_t stride,
                   Padding padding);
Shape maxpool2d_shape(const Shape& input, std::size_t window, std::size_t stride);
Shape dense_shape(const Shape& input, const Shape& weights, const Shape& bias);

}  // namespace positq
