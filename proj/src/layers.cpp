#include "positq/layers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

namespace {

std::size_t pad_for(std::size_t kernel, Padding padding) {
    return padding == Padding::kSame ? (kernel - 1) / 2 : 0;
}

// Output positions o with 0 <= o * stride + offset < extent, as [first, last).
std::pair<std::size_t, std::size_t> valid_range(std::ptrdiff_t offset, std::size_t stride,
                                                std::size_t extent, std::size_t out_extent) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    std::ptrdiff_t first = 0;
    if (offset < 0) first = (-offset + s - 1) / s;
    const std::ptrdiff_t limit = static_cast<std::ptrdiff_t>(extent) - offset;  // need o*s < limit
    std::ptrdiff_t last = limit <= 0 ? 0 : (limit + s - 1) / s;
    last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(out_extent));
    first = std::min(first, last);
    return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

}  // namespace

Shape conv2d_shape(const Shape& input, const Shape& kernel, const Shape& bias, std::size_t stride,
                   Padding padding) {
    if (input.size() != 3 || kernel.size() != 4 || bias.size() != 1) {
        throw ShapeError(fmt::format("conv2d expects input [C,H,W], kernel [K,C,kH,kW], bias [K]; got {}, {}, {}",
                                     to_string(input), to_string(kernel), to_string(bias)));
    }
    if (stride == 0) throw ShapeError("conv2d stride must be >= 1");
    if (kernel[1] != input[0]) {
        throw ShapeError(fmt::format("conv2d channel mismatch: input {} vs kernel {}", to_string(input),
                                     to_string(kernel)));
    }
    if (bias[0] != kernel[0]) {
        throw ShapeError(fmt::format("conv2d bias {} does not match kernel {}", to_string(bias), to_string(kernel)));
    }
    if (padding == Padding::kSame && (kernel[2] % 2 == 0 || kernel[3] % 2 == 0)) {
        throw ShapeError(fmt::format("conv2d same padding needs odd kernel sizes, got {}", to_string(kernel)));
    }
    const std::size_t ph = pad_for(kernel[2], padding);
    const std::size_t pw = pad_for(kernel[3], padding);
    if (input[1] + 2 * ph < kernel[2] || input[2] + 2 * pw < kernel[3] || kernel[2] == 0 || kernel[3] == 0) {
        throw ShapeError(fmt::format("conv2d kernel {} does not fit input {}", to_string(kernel), to_string(input)));
    }
    return {kernel[0], (input[1] + 2 * ph - kernel[2]) / stride + 1, (input[2] + 2 * pw - kernel[3]) / stride + 1};
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              Padding padding) {
    const Shape out_shape = conv2d_shape(input.shape(), kernel.shape(), bias.shape(), stride, padding);
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t filters = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
    const std::size_t out_h = out_shape[1], out_w = out_shape[2];
    const std::size_t plane = out_h * out_w;
    const std::size_t taps = channels * kh * kw;
    const auto ph = static_cast<std::ptrdiff_t>(pad_for(kh, padding));
    const auto pw = static_cast<std::ptrdiff_t>(pad_for(kw, padding));

    // im2col: row t = (c, ky, kx) holds the input sample under that tap for every output
    // position (zero where it falls in the padding).
    std::vector<double> patches(taps * plane, 0.0);
    const double* in = input.data().data();
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
            const auto [oy_first, oy_last] = valid_range(static_cast<std::ptrdiff_t>(ky) - ph, stride, height, out_h);
            for (std::size_t kx = 0; kx < kw; ++kx) {
                const std::ptrdiff_t x_off = static_cast<std::ptrdiff_t>(kx) - pw;
                const auto [ox_first, ox_last] = valid_range(x_off, stride, width, out_w);
                double* row = patches.data() + ((c * kh + ky) * kw + kx) * plane;
                for (std::size_t oy = oy_first; oy < oy_last; ++oy) {
                    const std::size_t iy = oy * stride + ky - static_cast<std::size_t>(ph);
                    const double* irow = in + (c * height + iy) * width;
                    for (std::size_t ox = ox_first; ox < ox_last; ++ox) {
                        row[oy * out_w + ox] = irow[static_cast<std::ptrdiff_t>(ox * stride) + x_off];
                    }
                }
            }
        }
    }

    // Each output accumulates bias first, then taps in (c, ky, kx) order. Filters are
    // processed four at a time so each patch row is loaded once per group.
    Tensor out(out_shape);
    const double* w = kernel.data().data();
    double* acc = out.data().data();
    for (std::size_t k = 0; k < filters; ++k) std::fill(acc + k * plane, acc + (k + 1) * plane, bias[k]);
    std::size_t k = 0;
    for (; k + 4 <= filters; k += 4) {
        double* a0 = acc + k * plane;
        double* a1 = a0 + plane;
        double* a2 = a1 + plane;
        double* a3 = a2 + plane;
        const double* w0 = w + k * taps;
        for (std::size_t t = 0; t < taps; ++t) {
            const double v0 = w0[t], v1 = w0[taps + t], v2 = w0[2 * taps + t], v3 = w0[3 * taps + t];
            const double* row = patches.data() + t * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                const double r = row[j];
                a0[j] += v0 * r;
                a1[j] += v1 * r;
                a2[j] += v2 * r;
                a3[j] += v3 * r;
            }
        }
    }
    for (; k < filters; ++k) {
        double* a = acc + k * plane;
        const double* wk = w + k * taps;
        for (std::size_t t = 0; t < taps; ++t) {
            const double wv = wk[t];
            const double* row = patches.data() + t * plane;
            for (std::size_t j = 0; j < plane; ++j) a[j] += wv * row[j];
        }
    }
    return out;
}

Shape maxpool2d_shape(const Shape& input, std::size_t window, std::size_t stride) {
    if (input.size() != 3) throw ShapeError(fmt::format("maxpool2d expects [C,H,W], got {}", to_string(input)));
    if (window == 0 || stride == 0) throw ShapeError("maxpool2d window and stride must be >= 1");
    if (input[1] < window || input[2] < window) {
        throw ShapeError(fmt::format("maxpool2d window {} larger than input {}", window, to_string(input)));
    }
    return {input[0], (input[1] - window) / stride + 1, (input[2] - window) / stride + 1};
}

Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
    const Shape out_shape = maxpool2d_shape(input.shape(), window, stride);
    const std::size_t height = input.dim(1), width = input.dim(2);
    Tensor out(out_shape);
    std::size_t i = 0;
    for (std::size_t c = 0; c < out_shape[0]; ++c) {
        for (std::size_t oy = 0; oy < out_shape[1]; ++oy) {
            for (std::size_t ox = 0; ox < out_shape[2]; ++ox) {
                double best = -INFINITY;
                for (std::size_t dy = 0; dy < window; ++dy) {
                    const std::size_t row = (c * height + oy * stride + dy) * width + ox * stride;
                    for (std::size_t dx = 0; dx < window; ++dx) best = std::max(best, input[row + dx]);
                }
                out[i++] = best;
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor flatten(const Tensor& input) { return input.reshaped({input.size()}); }

Shape dense_shape(const Shape& input, const Shape& weights, const Shape& bias) {
    if (input.size() != 1 || weights.size() != 2 || bias.size() != 1 || weights[1] != input[0] ||
        bias[0] != weights[0]) {
        throw ShapeError(fmt::format("dense expects input [N], weights [M,N], bias [M]; got {}, {}, {}",
                                     to_string(input), to_string(weights), to_string(bias)));
    }
    return {weights[0]};
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const Shape out_shape = dense_shape(input.shape(), weights.shape(), bias.shape());
    const std::size_t rows = weights.dim(0), cols = weights.dim(1);
    Tensor out(out_shape);
    const double* x = input.data().data();
    for (std::size_t o = 0; o < rows; ++o) {
        const double* w = weights.data().data() + o * cols;
        // Four interleaved partial sums in a fixed order keep the result reproducible.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            s0 += w[i] * x[i];
            s1 += w[i + 1] * x[i + 1];
            s2 += w[i + 2] * x[i + 2];
            s3 += w[i + 3] * x[i + 3];
        }
        for (; i < cols; ++i) s0 += w[i] * x[i];
        out[o] = bias[o] + ((s0 + s1) + (s2 + s3));
    }
    return out;
}

Tensor softmax(const Tensor& logits) {
    if (logits.empty()) throw ShapeError("softmax of an empty tensor");
    const auto z = logits.data();
    const double top = *std::max_element(z.begin(), z.end());
    Tensor out(logits.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - top);
        total += out[i];
    }
    for (double& v : out.data()) v /= total;
    return out;
}

}  // namespace positq
