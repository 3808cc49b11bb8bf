#include "positq/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

Codec Codec::identity() { return Codec(CodecKind::kIdentity, std::nullopt, std::nullopt); }
Codec Codec::posit(PositFormat format) { return Codec(CodecKind::kPosit, format, std::nullopt); }
Codec Codec::normalized_posit(PositFormat format) { return Codec(CodecKind::kNormalizedPosit, format, std::nullopt); }
Codec Codec::fixed(FixedFormat format) { return Codec(CodecKind::kFixed, std::nullopt, format); }

int Codec::bits() const {
    switch (kind_) {
        case CodecKind::kIdentity:
            return 32;
        case CodecKind::kPosit:
        case CodecKind::kNormalizedPosit:
            return posit_->n();
        case CodecKind::kFixed:
            return fixed_->total_bits();
    }
    return 0;
}

std::string Codec::family() const {
    switch (kind_) {
        case CodecKind::kIdentity:
            return "identity";
        case CodecKind::kPosit:
            return fmt::format("posit-es{}", posit_->es());
        case CodecKind::kNormalizedPosit:
            return fmt::format("normalized-posit-es{}", posit_->es());
        case CodecKind::kFixed:
            return "fixed";
    }
    return {};
}

std::string Codec::label() const { return fmt::format("{}/{}", family(), bits()); }

double Codec::round_trip(double x) const {
    switch (kind_) {
        case CodecKind::kIdentity:
            return x;
        case CodecKind::kPosit:
            return decode_posit(encode_posit(x, *posit_));
        case CodecKind::kNormalizedPosit:
            return decode_normalized(encode_normalized(x, *posit_));
        case CodecKind::kFixed:
            return dequantize_fixed(quantize_fixed(x, *fixed_));
    }
    return x;
}

QuantizedTensor quantize_tensor(const Tensor& tensor, const Codec& codec, std::string_view name) {
    const auto in = tensor.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!std::isfinite(in[i])) {
            throw DataError(fmt::format("tensor '{}' has non-finite value {} at index {}", name, in[i], i));
        }
    }

    QuantizedTensor out{tensor, {}};
    out.report.bits_per_weight = codec.bits();
    out.report.weight_count = in.size();
    if (codec.kind() == CodecKind::kIdentity) return out;

    double total_error = 0.0;
    auto values = out.values.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = codec.round_trip(in[i]);
        const double err = std::fabs(values[i] - in[i]);
        out.report.max_abs_error = std::max(out.report.max_abs_error, err);
        total_error += err;
    }
    if (!values.empty()) out.report.mean_abs_error = total_error / static_cast<double>(values.size());
    return out;
}

QuantizedModel quantize_model(const Model& model, const Codec& codec, bool skip_bias) {
    const auto biases = model.bias_names();
    ParameterMap params;
    QuantizationReport total{codec.bits(), 0.0, 0.0, 0};
    double error_sum = 0.0;
    for (const auto& [name, tensor] : model.parameters()) {
        if (skip_bias && std::find(biases.begin(), biases.end(), name) != biases.end()) {
            params.emplace(name, tensor);
            continue;
        }
        auto q = quantize_tensor(tensor, codec, name);
        total.max_abs_error = std::max(total.max_abs_error, q.report.max_abs_error);
        total.weight_count += q.report.weight_count;
        error_sum += q.report.mean_abs_error * static_cast<double>(q.report.weight_count);
        params.emplace(name, std::move(q.values));
    }
    if (total.weight_count > 0) total.mean_abs_error = error_sum / static_cast<double>(total.weight_count);
    return {model.with_parameters(std::move(params)), total};
}

double memory_reduction(int bits_a, int bits_b) {
    if (bits_b <= 0) throw DomainError(fmt::format("memory_reduction: reference width {} must be positive", bits_b));
    if (bits_a < 0 || bits_a > bits_b) {
        throw DomainError(fmt::format("memory_reduction: width {} must lie in [0, {}]", bits_a, bits_b));
    }
    return 100.0 * (1.0 - static_cast<double>(bits_a) / static_cast<double>(bits_b));
}

std::string format_percent(double percent) { return fmt::format("{:.1f}%", percent); }

}  // namespace positq
