#pragma once

// Posit codec: exact conversion between doubles and P(n, es) bit patterns.
//
// Bit layout, MSB first: [sign | regime run + terminator | es exponent bits | fraction].
// Negative values are the two's complement of the whole n-bit pattern, so
// ordering codes as signed n-bit integers orders their values.

#include <cstdint>

namespace positq {

// useed = 2^(2^es). Throws FormatError unless 0 <= es <= 3.
std::uint64_t useed(int es);

class PositFormat {
public:
    static constexpr int kMinBits = 2;
    static constexpr int kMaxBits = 32;
    static constexpr int kMaxExponentBits = 3;

    // Throws FormatError unless 2 <= n <= 32, 0 <= es <= 3 and es <= n - 2.
    PositFormat(int n, int es);

    int n() const { return n_; }
    int es() const { return es_; }

    // Number of distinct bit patterns, 2^n.
    std::uint64_t code_count() const { return std::uint64_t{1} << n_; }
    std::uint32_t mask() const { return static_cast<std::uint32_t>(code_count() - 1); }
    std::uint32_t nar_bits() const { return std::uint32_t{1} << (n_ - 1); }

    friend bool operator==(const PositFormat&, const PositFormat&) = default;

private:
    int n_;
    int es_;
};

class PositCode {
public:
    // Throws FormatError if bits does not fit in format.n() bits.
    PositCode(std::uint32_t bits, PositFormat format);

    std::uint32_t bits() const { return bits_; }
    const PositFormat& format() const { return format_; }

    bool is_zero() const { return bits_ == 0; }
    bool is_nar() const { return bits_ == format_.nar_bits(); }
    bool is_negative() const { return (bits_ & format_.nar_bits()) != 0 && !is_nar(); }

    // The pattern as an n-bit two's-complement integer (sign-extended).
    std::int32_t as_signed() const;

    friend bool operator==(const PositCode&, const PositCode&) = default;

private:
    std::uint32_t bits_;
    PositFormat format_;
};

// Two's complement of the n-bit pattern; maps the code of v to the code of -v.
PositCode negate(PositCode code);

// Field view of a non-zero, non-NaR posit.
struct DecodedPosit {
    int sign = 1;                 // +1 or -1
    int regime = 0;               // r_value: k - 1 for a run of k ones, -k for k zeros
    std::uint32_t exponent = 0;   // < 2^es
    double fraction = 0.0;        // in [0, 1)
    int es = 0;

    // sign * useed^regime * 2^exponent * (1 + fraction)
    double value() const;
};

// Throws NotARealError for NaR and DomainError for zero (which has no fields).
DecodedPosit decompose(PositCode code);

// Exact value of the code; 0 for the zero pattern. Throws NotARealError for NaR.
double decode_posit(PositCode code);

// Nearest representable posit, ties to the even code. Saturates to +/-maxpos
// above range and to +/-minpos below it; only exact zero encodes to zero.
// Never returns NaR. Throws DomainError for non-finite x.
PositCode encode_posit(double x, PositFormat format);

// useed^(n-2) and its reciprocal.
double maxpos(PositFormat format);
double minpos(PositFormat format);

// Normalized posits rescale P(n, es) by 1/maxpos so every format spans [-1, 1].
double decode_normalized(PositCode code);
PositCode encode_normalized(double x, PositFormat format);

}  // namespace positq
