#pragma once

// Weight quantization as a store-and-reload round trip: every parameter is
// encoded with a codec and immediately decoded back to double, so inference
// runs in wide floating point on exactly the values the codec can store.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "positq/fixed_point.hpp"
#include "positq/model.hpp"
#include "positq/posit.hpp"
#include "positq/tensor.hpp"

namespace positq {

enum class CodecKind { kIdentity, kPosit, kNormalizedPosit, kFixed };

class Codec {
public:
    static Codec identity();
    static Codec posit(PositFormat format);
    static Codec normalized_posit(PositFormat format);
    static Codec fixed(FixedFormat format);

    CodecKind kind() const { return kind_; }
    // Storage bits per weight: 32 for identity (float32 on disk), n for posits, 1 + f for fixed.
    int bits() const;
    // Family label used in CSV output, e.g. "normalized-posit-es0", "fixed", "identity".
    std::string family() const;
    // Family plus width, e.g. "normalized-posit-es0/5".
    std::string label() const;

    const std::optional<PositFormat>& posit_format() const { return posit_; }
    const std::optional<FixedFormat>& fixed_format() const { return fixed_; }

    // The representable value this codec stores for x. Identity returns x unchanged.
    double round_trip(double x) const;

    friend bool operator==(const Codec&, const Codec&) = default;

private:
    Codec(CodecKind kind, std::optional<PositFormat> posit, std::optional<FixedFormat> fixed)
        : kind_(kind), posit_(posit), fixed_(fixed) {}

    CodecKind kind_;
    std::optional<PositFormat> posit_;
    std::optional<FixedFormat> fixed_;
};

struct QuantizationReport {
    int bits_per_weight = 0;
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
    std::size_t weight_count = 0;
};

struct QuantizedTensor {
    Tensor values;
    QuantizationReport report;
};

// Throws DataError naming the tensor and flat index of the first non-finite element.
QuantizedTensor quantize_tensor(const Tensor& tensor, const Codec& codec, std::string_view name = "tensor");

struct QuantizedModel {
    Model model;
    QuantizationReport report;  // aggregated over every quantized parameter
};

// Quantizes every parameter; with skip_bias, conv/dense biases are left as stored.
QuantizedModel quantize_model(const Model& model, const Codec& codec, bool skip_bias = false);

// 100 * (1 - bits_a / bits_b). Throws DomainError if bits_b <= 0 or bits_a is outside [0, bits_b].
double memory_reduction(int bits_a, int bits_b);

// One decimal place with a percent sign, e.g. "28.6%".
std::string format_percent(double percent);

}  // namespace positq
