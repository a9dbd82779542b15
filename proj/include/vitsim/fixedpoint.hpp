#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vitsim {

using int128 = __int128;

// Rounding applied when discarding fractional bits. Truncation (floor) is the
// default everywhere; round-half-even is reserved for the divider datapath.
enum class RoundingMode {
    TruncateTowardNegInf,
    GaussianRoundHalfEven,
};

// Signed two's-complement fixed-point format Q<int_bits>.<frac_bits>.
// int_bits includes the sign bit, so Q18.21 is a 39-bit word with 21
// fractional bits. Raw codes live in an int64_t regardless of width.
struct QFormat {
    int int_bits;
    int frac_bits;

    constexpr QFormat(int ib, int fb) : int_bits(ib), frac_bits(fb) {
        if (ib < 1 || fb < 0 || ib + fb < 1 || ib + fb > 64)
            throw std::invalid_argument("QFormat: need 1 <= int_bits, 0 <= frac_bits, total <= 64");
    }

    constexpr int total_bits() const { return int_bits + frac_bits; }

    // Symmetric range: the most negative code is never produced, so
    // min_raw == -max_raw.
    constexpr int64_t max_raw() const {
        return static_cast<int64_t>((static_cast<uint64_t>(1) << (total_bits() - 1)) - 1);
    }
    constexpr int64_t min_raw() const { return -max_raw(); }

    double resolution() const { return std::ldexp(1.0, -frac_bits); }
    double max_value() const { return std::ldexp(static_cast<double>(max_raw()), -frac_bits); }
    double min_value() const { return -max_value(); }

    constexpr bool operator==(const QFormat&) const = default;

    std::string str() const {
        return "Q" + std::to_string(int_bits) + "." + std::to_string(frac_bits);
    }
    // Parses "Q<int>.<frac>", e.g. "Q18.21".
    static QFormat parse(std::string_view s);
};

// A raw code tagged with its format. value = raw * 2^-frac_bits.
struct FixedValue {
    int64_t raw = 0;
    QFormat format{1, 0};

    double value() const { return std::ldexp(static_cast<double>(raw), -format.frac_bits); }
};

// Arithmetic result: the saturated value plus a sticky overflow indicator.
struct FxResult {
    FixedValue value;
    bool overflow = false;
};

namespace fx {

// Clamp a wide intermediate into the format's symmetric range.
inline FxResult saturate(int128 raw, QFormat fmt) {
    const int64_t hi = fmt.max_raw();
    if (raw > hi) return {{hi, fmt}, true};
    if (raw < -static_cast<int128>(hi)) return {{-hi, fmt}, true};
    return {{static_cast<int64_t>(raw), fmt}, false};
}

// Drop `shift` low bits of a wide intermediate under the given rounding mode.
// Shifts of zero or negative are exact left shifts.
inline int128 shift_right_rounded(int128 v, int shift, RoundingMode mode) {
    if (shift <= 0) return v << (-shift);
    if (mode == RoundingMode::TruncateTowardNegInf) return v >> shift;
    const int128 q = v >> shift;
    const int128 rem = v - (q << shift);          // in [0, 2^shift)
    const int128 half = static_cast<int128>(1) << (shift - 1);
    if (rem > half) return q + 1;
    if (rem == half) return q + (q & 1);
    return q;
}

// Quantize a real value (exact value of the double) to the format:
// round(x * 2^frac) under `mode`, then saturate. Scaling by a power of two is
// exact in binary floating point, so no double rounding sneaks in.
inline FxResult quantize(double x, QFormat fmt, RoundingMode mode = RoundingMode::TruncateTowardNegInf) {
    if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite input");
    const double scaled = std::ldexp(x, fmt.frac_bits);
    // Outside +/-2^63 the result saturates regardless of rounding detail.
    if (scaled >= 9.2e18) return {{fmt.max_raw(), fmt}, true};
    if (scaled <= -9.2e18) return {{fmt.min_raw(), fmt}, true};
    int128 raw;
    if (mode == RoundingMode::TruncateTowardNegInf) {
        raw = static_cast<int128>(std::floor(scaled));
    } else {
        const double fl = std::floor(scaled);
        const double rem = scaled - fl;
        raw = static_cast<int128>(fl);
        if (rem > 0.5) raw += 1;
        else if (rem == 0.5) raw += (raw & 1);
    }
    return saturate(raw, fmt);
}

// Add two values of the same format. Mixed formats are a caller error.
inline FxResult add(FixedValue a, FixedValue b) {
    if (!(a.format == b.format)) throw std::invalid_argument("fx::add: format mismatch");
    return saturate(static_cast<int128>(a.raw) + b.raw, a.format);
}

inline FxResult sub(FixedValue a, FixedValue b) {
    if (!(a.format == b.format)) throw std::invalid_argument("fx::sub: format mismatch");
    return saturate(static_cast<int128>(a.raw) - b.raw, a.format);
}

// Multiply two values of the same format: double-width product, discard the
// low frac_bits with rounding, saturate.
inline FxResult mul(FixedValue a, FixedValue b, RoundingMode mode = RoundingMode::TruncateTowardNegInf) {
    if (!(a.format == b.format)) throw std::invalid_argument("fx::mul: format mismatch");
    const int128 prod = static_cast<int128>(a.raw) * b.raw;
    return saturate(shift_right_rounded(prod, a.format.frac_bits, mode), a.format);
}

// Re-format a value. Widening the fraction is exact; narrowing rounds under
// `mode`; the integer field saturates symmetrically.
inline FxResult cast(FixedValue v, QFormat target, RoundingMode mode = RoundingMode::TruncateTowardNegInf) {
    const int shift = v.format.frac_bits - target.frac_bits;
    return saturate(shift_right_rounded(v.raw, shift, mode), target);
}

inline FixedValue from_raw(int64_t raw, QFormat fmt) {
    if (raw > fmt.max_raw() || raw < fmt.min_raw())
        throw std::invalid_argument("from_raw: code outside symmetric range of " + fmt.str());
    return {raw, fmt};
}

inline FixedValue zero(QFormat fmt) { return {0, fmt}; }
inline FixedValue one(QFormat fmt) {
    return fx::quantize(1.0, fmt).value;
}

}  // namespace fx

}  // namespace vitsim
