#pragma once

#include "vitsim/fixedpoint.hpp"
#include "vitsim/profiling.hpp"

namespace vitsim {

// Result of a scalar functional unit: value, latency in cycles, and any
// flags raised. Flags are reported, never thrown; the pipeline keeps going
// with the saturated/defaulted value.
struct AluResult {
    FixedValue value;
    uint32_t cycles = 0;
    bool overflow = false;
    bool divide_by_zero = false;
    bool negative_radicand = false;
};

namespace alu {

// Sequential long division: one quotient bit per cycle over the widened
// operand, plus setup/round stages.
inline uint32_t divide_cycles(QFormat fmt) {
    return static_cast<uint32_t>(fmt.total_bits() + fmt.frac_bits + 3);
}

// Restoring square root retires one result bit per cycle; the radicand is
// pre-shifted by frac_bits so the root comes out in the same format.
inline uint32_t sqrt_cycles(QFormat fmt) {
    return static_cast<uint32_t>((fmt.total_bits() + fmt.frac_bits) / 2 + 1);
}

inline constexpr uint32_t kExpCycles = 24;

inline constexpr int kMinTaylorTerms = 1;
inline constexpr int kMaxTaylorTerms = 8;

// a / b. The only place round-half-even is used: the quotient
// (a.raw << frac) / b.raw is rounded to the nearest code, ties to even.
// b == 0 yields sign(a) * max with the divide_by_zero flag (sign(0) = +1).
AluResult divide(FixedValue a, FixedValue b, ActivityTrace* trace = nullptr);

// e^x via 2^(x/ln2). With z = x/ln2: i = floor(z) becomes a shift, the top
// four fractional bits of z select a precomputed 2^(j/16) constant, and the
// residual r in [0, 1/16) is closed with the Taylor polynomial of 2^r whose
// coefficients are (ln2)^k / k!, truncated to `taylor_terms` terms.
AluResult exponential(FixedValue x, int taylor_terms = 3, ActivityTrace* trace = nullptr);

// floor(sqrt(x)) at full format precision: the integer square root of
// raw << frac_bits. Negative input yields 0 with the negative_radicand flag.
AluResult square_root(FixedValue x, ActivityTrace* trace = nullptr);

}  // namespace alu

}  // namespace vitsim
