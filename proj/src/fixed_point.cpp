#include "positq/fixed_point.hpp"

#include <cmath>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

FixedFormat::FixedFormat(int fraction_bits) : f_(fraction_bits) {
    if (fraction_bits < 0 || fraction_bits > kMaxFractionBits) {
        throw FormatError(
            fmt::format("fixed-point fraction bits f={} outside [0, {}]", fraction_bits, kMaxFractionBits));
    }
}

double FixedFormat::step() const { return std::ldexp(1.0, -f_); }

FixedCode::FixedCode(std::int32_t value, FixedFormat format) : value_(value), format_(format) {
    if (value < format.min_code() || value > format.max_code()) {
        throw FormatError(fmt::format("fixed code {} outside Q1.{} range [{}, {}]", value,
                                      format.fraction_bits(), format.min_code(), format.max_code()));
    }
}

std::uint32_t FixedCode::bits() const {
    const auto width_mask = (std::uint32_t{1} << format_.total_bits()) - 1;
    return static_cast<std::uint32_t>(value_) & width_mask;
}

FixedCode quantize_fixed(double x, FixedFormat format) {
    if (!std::isfinite(x)) {
        throw DomainError(fmt::format("cannot quantize non-finite value {} to fixed point", x));
    }
    const double lo = format.min_code();
    const double hi = format.max_code();
    // Scaling by 2^f is exact; clamp before rounding so huge inputs never reach the integer cast.
    const double scaled = std::ldexp(x, format.fraction_bits());
    if (scaled <= lo) return FixedCode(format.min_code(), format);
    if (scaled >= hi) return FixedCode(format.max_code(), format);

    double rounded = std::floor(scaled);
    const double rest = scaled - rounded;  // exact for |scaled| < 2^16
    if (rest > 0.5 || (rest == 0.5 && std::fmod(rounded, 2.0) != 0.0)) rounded += 1.0;
    return FixedCode(static_cast<std::int32_t>(rounded), format);
}

double dequantize_fixed(FixedCode code) {
    return std::ldexp(static_cast<double>(code.value()), -code.format().fraction_bits());
}

}  // namespace positq
