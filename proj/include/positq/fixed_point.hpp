#pragma once

// Q1.f fixed point: one two's-complement integer/sign bit plus f fraction bits.
// Codes cover [-1, 1 - 2^-f] in uniform steps of 2^-f.

#include <cstdint>

namespace positq {

class FixedFormat {
public:
    static constexpr int kMaxFractionBits = 15;

    // Throws FormatError unless 0 <= f <= 15.
    explicit FixedFormat(int fraction_bits);

    int fraction_bits() const { return f_; }
    int total_bits() const { return f_ + 1; }
    double step() const;

    // Smallest and largest integer codes: -2^f and 2^f - 1.
    std::int32_t min_code() const { return -(std::int32_t{1} << f_); }
    std::int32_t max_code() const { return (std::int32_t{1} << f_) - 1; }

    friend bool operator==(const FixedFormat&, const FixedFormat&) = default;

private:
    int f_;
};

class FixedCode {
public:
    // Throws FormatError if value is outside [min_code, max_code].
    FixedCode(std::int32_t value, FixedFormat format);

    // Signed integer whose scaled value is value * 2^-f.
    std::int32_t value() const { return value_; }
    const FixedFormat& format() const { return format_; }

    // The (1 + f)-bit two's-complement pattern.
    std::uint32_t bits() const;

    friend bool operator==(const FixedCode&, const FixedCode&) = default;

private:
    std::int32_t value_;
    FixedFormat format_;
};

// Nearest code, ties to even, saturating to the representable range.
// Throws DomainError for non-finite x.
FixedCode quantize_fixed(double x, FixedFormat format);

double dequantize_fixed(FixedCode code);

}  // namespace positq
