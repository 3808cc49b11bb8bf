#include "positq/posit.hpp"

#include <cmath>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

namespace {

constexpr int kFractionBits = 52;  // explicit significand bits of a double

std::uint64_t low_mask(int width) {
    return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::uint64_t useed(int es) {
    if (es < 0 || es > PositFormat::kMaxExponentBits) {
        throw FormatError(fmt::format("es={} outside [0, {}]", es, PositFormat::kMaxExponentBits));
    }
    return std::uint64_t{1} << (1 << es);
}

PositFormat::PositFormat(int n, int es) : n_(n), es_(es) {
    if (n < kMinBits || n > kMaxBits) {
        throw FormatError(fmt::format("posit width n={} outside [{}, {}]", n, kMinBits, kMaxBits));
    }
    if (es < 0 || es > kMaxExponentBits) {
        throw FormatError(fmt::format("posit es={} outside [0, {}]", es, kMaxExponentBits));
    }
    if (es > n - 2) {
        throw FormatError(fmt::format("P({},{}): es must not exceed n-2", n, es));
    }
}

PositCode::PositCode(std::uint32_t bits, PositFormat format) : bits_(bits), format_(format) {
    if (bits > format.mask()) {
        throw FormatError(fmt::format("bit pattern {:#x} does not fit in {} bits", bits, format.n()));
    }
}

std::int32_t PositCode::as_signed() const {
    const int n = format_.n();
    if (n == 32) return static_cast<std::int32_t>(bits_);
    const auto sign = std::uint32_t{1} << (n - 1);
    return static_cast<std::int32_t>(bits_ ^ sign) - static_cast<std::int32_t>(sign);
}

PositCode negate(PositCode code) {
    return PositCode((~code.bits() + 1u) & code.format().mask(), code.format());
}

double DecodedPosit::value() const {
    const int scale = regime * (1 << es) + static_cast<int>(exponent);
    return std::ldexp(sign * (1.0 + fraction), scale);
}

DecodedPosit decompose(PositCode code) {
    if (code.is_nar()) throw NotARealError("cannot decode NaR");
    if (code.is_zero()) throw DomainError("zero has no regime/exponent/fraction fields");

    const PositFormat& fmt = code.format();
    const int n = fmt.n();
    const int es = fmt.es();

    DecodedPosit out;
    out.es = es;
    std::uint32_t bits = code.bits();
    if (code.is_negative()) {
        bits = negate(code).bits();
        out.sign = -1;
    }

    // Regime: run of identical bits right after the sign bit.
    int pos = n - 2;
    const bool run_bit = ((bits >> pos) & 1u) != 0;
    int run = 0;
    while (pos >= 0 && (((bits >> pos) & 1u) != 0) == run_bit) {
        ++run;
        --pos;
    }
    out.regime = run_bit ? run - 1 : -run;
    if (pos >= 0) --pos;  // terminator
    int remaining = pos + 1;

    // Exponent bits cut off by the end of the pattern are implicit zeros.
    const int exp_bits = std::min(es, remaining);
    remaining -= exp_bits;
    const auto exp_field = static_cast<std::uint32_t>((bits >> remaining) & low_mask(exp_bits));
    out.exponent = exp_field << (es - exp_bits);

    const auto frac_field = bits & low_mask(remaining);
    out.fraction = std::ldexp(static_cast<double>(frac_field), -remaining);
    return out;
}

double decode_posit(PositCode code) {
    if (code.is_zero()) return 0.0;
    return decompose(code).value();
}

double maxpos(PositFormat format) {
    return std::ldexp(1.0, (format.n() - 2) * (1 << format.es()));
}

double minpos(PositFormat format) {
    return std::ldexp(1.0, -(format.n() - 2) * (1 << format.es()));
}

PositCode encode_posit(double x, PositFormat format) {
    if (!std::isfinite(x)) {
        throw DomainError(fmt::format("cannot encode non-finite value {} as a posit", x));
    }
    if (x == 0.0) return PositCode(0, format);

    const double a = std::fabs(x);
    const int m = format.n() - 1;  // bits after the sign
    std::uint32_t magnitude = 0;

    if (a >= maxpos(format)) {
        magnitude = static_cast<std::uint32_t>(low_mask(m));
    } else if (a <= minpos(format)) {
        magnitude = 1;
    } else {
        // a = 2^scale * (1 + mant / 2^52); split scale into regime and exponent.
        const int es = format.es();
        const int scale = std::ilogb(a);
        const int k = floor_div(scale, 1 << es);
        const auto exponent = static_cast<std::uint64_t>(scale - k * (1 << es));
        const auto mant = static_cast<std::uint64_t>(std::ldexp(a, kFractionBits - scale)) -
                          (std::uint64_t{1} << kFractionBits);

        std::uint64_t head = 0;
        int head_len = 0;
        if (k >= 0) {
            head = low_mask(k + 1) << 1;  // k+1 ones, then a zero
            head_len = k + 2;
        } else {
            head = 1;  // -k zeros, then a one
            head_len = -k + 1;
        }
        head = (head << es) | exponent;
        head_len += es;

        // Truncate the unbounded pattern to m bits, remembering whether anything was dropped.
        std::uint64_t truncated = 0;
        bool inexact = false;
        if (head_len >= m) {
            const int drop = head_len - m;
            truncated = head >> drop;
            inexact = (head & low_mask(drop)) != 0 || mant != 0;
        } else {
            const int keep = m - head_len;
            const int drop = kFractionBits - keep;
            truncated = (head << keep) | (mant >> drop);
            inexact = (mant & low_mask(drop)) != 0;
        }
        magnitude = static_cast<std::uint32_t>(truncated);

        if (inexact) {
            // a lies strictly between the truncated code and its successor; pick the nearer value.
            const double lo = decode_posit(PositCode(magnitude, format));
            const double hi = decode_posit(PositCode(magnitude + 1, format));
            const double twice = 2.0 * a;
            const double mid_sum = lo + hi;  // exact: both have short significands
            if (twice > mid_sum || (twice == mid_sum && (magnitude & 1u) != 0)) ++magnitude;
        }
    }

    PositCode code(magnitude, format);
    return x < 0 ? negate(code) : code;
}

double decode_normalized(PositCode code) {
    return decode_posit(code) / maxpos(code.format());
}

PositCode encode_normalized(double x, PositFormat format) {
    if (!std::isfinite(x)) {
        throw DomainError(fmt::format("cannot encode non-finite value {} as a normalized posit", x));
    }
    return encode_posit(x * maxpos(format), format);
}

}  // namespace positq
