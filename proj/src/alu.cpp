#include "vitsim/alu.hpp"

#include <cmath>

namespace vitsim::alu {

namespace {

// Nearest integer to n/d with ties to even, exact in integers. d != 0.
int128 div_round_half_even(int128 n, int128 d) {
    int128 q = n / d;  // truncates toward zero
    int128 r = n % d;  // same sign as n
    const int128 ad = d < 0 ? -d : d;
    const int128 ar = r < 0 ? -r : r;
    const int128 step = ((n < 0) != (d < 0)) ? -1 : 1;
    if (2 * ar > ad) q += step;
    else if (2 * ar == ad && (q & 1)) q += step;
    return q;
}

// floor(sqrt(x)) by the restoring digit-by-digit method: two radicand bits
// in, one root bit out per step.
uint64_t isqrt_u128(unsigned __int128 x) {
    unsigned __int128 rem = 0, root = 0;
    for (int s = 126; s >= 0; s -= 2) {
        rem = (rem << 2) | ((x >> s) & 3);
        root <<= 1;
        const unsigned __int128 trial = (root << 1) | 1;
        if (rem >= trial) {
            rem -= trial;
            root |= 1;
        }
    }
    return static_cast<uint64_t>(root);
}

}  // namespace

AluResult divide(FixedValue a, FixedValue b, ActivityTrace* trace) {
    if (!(a.format == b.format)) throw std::invalid_argument("alu::divide: format mismatch");
    const QFormat fmt = a.format;
    AluResult res;
    res.cycles = divide_cycles(fmt);
    if (trace) trace->charge(Unit::Divider, res.cycles);

    if (b.raw == 0) {
        res.value = {a.raw < 0 ? fmt.min_raw() : fmt.max_raw(), fmt};
        res.divide_by_zero = true;
        return res;
    }
    const int128 num = static_cast<int128>(a.raw) << fmt.frac_bits;
    const auto [val, ovf] = fx::saturate(div_round_half_even(num, b.raw), fmt);
    res.value = val;
    res.overflow = ovf;
    return res;
}

AluResult exponential(FixedValue x, int taylor_terms, ActivityTrace* trace) {
    if (taylor_terms < kMinTaylorTerms || taylor_terms > kMaxTaylorTerms)
        throw std::invalid_argument("alu::exponential: taylor_terms outside [1, 8]");
    const QFormat fmt = x.format;
    const int q = fmt.frac_bits;
    AluResult res;
    res.cycles = kExpCycles;
    if (trace) {
        trace->charge(Unit::Exponential, res.cycles);
        trace->charge(Unit::Multiplier, static_cast<uint64_t>(taylor_terms) + 1);
        if (taylor_terms > 1) trace->charge(Unit::Adder, static_cast<uint64_t>(taylor_terms) - 1);
    }

    // z = x / ln2 via multiplication by the quantized reciprocal.
    const FixedValue recip_ln2 = fx::quantize(1.4426950408889634, fmt).value;
    const auto z = fx::mul(x, recip_ln2);
    res.overflow |= z.overflow;

    const int64_t i_part = z.value.raw >> q;  // floor(z)
    const int64_t f_raw = z.value.raw - (i_part << q);  // fraction in [0, 2^q)

    // Split the fraction: top four bits index the 2^(j/16) constant, the rest
    // feed the polynomial.
    int64_t j, lo_raw;
    if (q >= 4) {
        j = f_raw >> (q - 4);
        lo_raw = f_raw - (j << (q - 4));
    } else {
        j = f_raw << (4 - q);
        lo_raw = 0;
    }
    const FixedValue f_lo{lo_raw, fmt};

    // Horner evaluation of sum_k (ln2)^k / k! * f_lo^k, k < taylor_terms.
    double coeff = 1.0;  // (ln2)^k / k!
    double coeffs[kMaxTaylorTerms];
    for (int k = 0; k < taylor_terms; ++k) {
        coeffs[k] = coeff;
        coeff *= 0.6931471805599453 / (k + 1);
    }
    FixedValue acc = fx::quantize(coeffs[taylor_terms - 1], fmt).value;
    for (int k = taylor_terms - 2; k >= 0; --k) {
        const auto m = fx::mul(acc, f_lo);
        res.overflow |= m.overflow;
        const auto s = fx::add(m.value, fx::quantize(coeffs[k], fmt).value);
        res.overflow |= s.overflow;
        acc = s.value;
    }

    const FixedValue table = fx::quantize(std::exp2(static_cast<double>(j) / 16.0), fmt).value;
    const auto scaled = fx::mul(acc, table);
    res.overflow |= scaled.overflow;

    // Apply 2^i as a shift. Positive shifts can overflow; negative shifts
    // underflow toward zero silently.
    int128 raw = scaled.value.raw;
    if (i_part >= 0) {
        if (i_part > 100) {
            raw = raw == 0 ? 0 : static_cast<int128>(fmt.max_raw()) + 1;
        } else {
            raw <<= static_cast<int>(i_part);
        }
    } else {
        const int sh = static_cast<int>(-i_part);
        raw = sh >= 127 ? 0 : raw >> sh;
    }
    const auto [val, ovf] = fx::saturate(raw, fmt);
    res.value = val;
    res.overflow |= ovf;
    return res;
}

AluResult square_root(FixedValue x, ActivityTrace* trace) {
    const QFormat fmt = x.format;
    AluResult res;
    res.cycles = sqrt_cycles(fmt);
    if (trace) trace->charge(Unit::Sqrt, res.cycles);

    if (x.raw < 0) {
        res.value = {0, fmt};
        res.negative_radicand = true;
        return res;
    }
    const auto widened = static_cast<unsigned __int128>(x.raw) << fmt.frac_bits;
    res.value = {static_cast<int64_t>(isqrt_u128(widened)), fmt};
    return res;
}

}  // namespace vitsim::alu
