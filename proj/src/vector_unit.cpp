#include "vitsim/vector_unit.hpp"

namespace vitsim {

namespace {
constexpr uint64_t kMacOverhead = 8;
constexpr uint64_t kBiasOverhead = 4;
constexpr uint64_t kSwishExtra = 7;     // beyond the exponential and divide
constexpr uint64_t kSoftmaxOverhead = 263;
constexpr uint64_t kLayerNormOverhead = 1274;
}  // namespace

uint64_t VectorUnit::mac_cycles(uint32_t len, Activation act) const {
    const QFormat cf = mem_.compute_format();
    uint64_t c = len + kMacOverhead;
    if (act != Activation::None) c += kBiasOverhead;
    if (act == Activation::Swish) c += alu::kExpCycles + alu::divide_cycles(cf) + kSwishExtra;
    return c;
}

uint64_t VectorUnit::softmax_cycles(uint32_t len) const {
    const QFormat cf = mem_.compute_format();
    return static_cast<uint64_t>(len) * alu::kExpCycles + alu::divide_cycles(cf) + len +
           kSoftmaxOverhead;
}

uint64_t VectorUnit::layernorm_cycles(uint32_t len) const {
    const QFormat cf = mem_.compute_format();
    return 7ull * len + 3ull * alu::divide_cycles(cf) + alu::sqrt_cycles(cf) + 1 +
           kLayerNormOverhead;
}

void VectorUnit::wr(const Operand& o, uint32_t k, FixedValue v, VectorOpResult& r) {
    if (mem_.write(*o.tensor, o.offset + k * o.stride, v)) {
        r.overflow = true;
        if (trace_) trace_->raise(Unit::Memory, FlagKind::Overflow);
    }
}

VectorOpResult VectorUnit::mac(Operand a, Operand b, uint32_t len, Activation act,
                               const TensorDescriptor* bias, uint32_t bias_index) {
    if (len == 0) throw std::invalid_argument("mac: zero length");
    const QFormat cf = mem_.compute_format();
    VectorOpResult res;
    res.cycles = mac_cycles(len, act);
    if (trace_) trace_->charge(Unit::Mac, res.cycles);

    // First product seeds the accumulator; the rest chain through the shared
    // adder, truncating and saturating at every step.
    FixedValue acc{0, cf};
    for (uint32_t k = 0; k < len; ++k) {
        const auto prod = fx::mul(rd(a, k), rd(b, k));
        res.overflow |= prod.overflow;
        if (trace_) trace_->charge(Unit::Multiplier, 1);
        if (k == 0) {
            acc = prod.value;
        } else {
            const auto sum = fx::add(acc, prod.value);
            res.overflow |= sum.overflow;
            acc = sum.value;
            if (trace_) trace_->charge(Unit::Adder, 1);
        }
    }

    if (act != Activation::None) {
        if (!bias) throw std::invalid_argument("mac: activation requires a bias operand");
        const auto biased = fx::add(acc, mem_.read(*bias, bias_index));
        res.overflow |= biased.overflow;
        acc = biased.value;
        if (trace_) trace_->charge(Unit::Adder, 1);
    }

    if (act == Activation::Swish) {
        // u * sigmoid(u), sigmoid(u) = 1 / (1 + e^(-u)).
        const FixedValue u = acc;
        const FixedValue neg_u{-u.raw, cf};
        const auto e = alu::exponential(neg_u, taylor_terms_, trace_);
        res.overflow |= e.overflow;
        const auto den = fx::add(fx::one(cf), e.value);
        res.overflow |= den.overflow;
        if (trace_) trace_->charge(Unit::Adder, 1);
        const auto sig = alu::divide(fx::one(cf), den.value, trace_);
        res.overflow |= sig.overflow;
        res.divide_by_zero |= sig.divide_by_zero;
        const auto out = fx::mul(u, sig.value);
        res.overflow |= out.overflow;
        if (trace_) trace_->charge(Unit::Multiplier, 1);
        acc = out.value;
    }

    res.value = acc;
    return res;
}

VectorOpResult VectorUnit::softmax(Operand in, Operand out, uint32_t len,
                                   std::span<FixedValue> computed) {
    if (len == 0) throw std::invalid_argument("softmax: zero length");
    const QFormat cf = mem_.compute_format();
    VectorOpResult res;
    res.cycles = softmax_cycles(len);
    if (trace_) trace_->charge(Unit::Softmax, res.cycles);

    std::vector<FixedValue> exps(len);
    FixedValue sum{0, cf};
    for (uint32_t k = 0; k < len; ++k) {
        const auto e = alu::exponential(rd(in, k), taylor_terms_, trace_);
        res.overflow |= e.overflow;
        exps[k] = e.value;
        if (k == 0) {
            sum = e.value;
        } else {
            const auto s = fx::add(sum, e.value);
            res.overflow |= s.overflow;
            sum = s.value;
            if (trace_) trace_->charge(Unit::Adder, 1);
        }
    }

    // One reciprocal, then one multiply per output.
    const auto recip = alu::divide(fx::one(cf), sum, trace_);
    res.overflow |= recip.overflow;
    res.divide_by_zero |= recip.divide_by_zero;

    for (uint32_t k = 0; k < len; ++k) {
        const auto o = fx::mul(exps[k], recip.value);
        res.overflow |= o.overflow;
        if (trace_) trace_->charge(Unit::Multiplier, 1);
        if (!computed.empty()) computed[k] = o.value;
        wr(out, k, o.value, res);
    }
    return res;
}

VectorOpResult VectorUnit::layernorm(Operand in, Operand out, uint32_t len, Operand gamma,
                                     Operand beta) {
    if (len == 0) throw std::invalid_argument("layernorm: zero length");
    const QFormat cf = mem_.compute_format();
    VectorOpResult res;
    res.cycles = layernorm_cycles(len);
    if (trace_) trace_->charge(Unit::LayerNorm, res.cycles);

    const FixedValue len_fx = fx::quantize(static_cast<double>(len), cf).value;

    FixedValue sum{0, cf};
    for (uint32_t k = 0; k < len; ++k) {
        const auto s = fx::add(sum, rd(in, k));
        res.overflow |= s.overflow;
        sum = s.value;
        if (trace_) trace_->charge(Unit::Adder, 1);
    }
    const auto mean = alu::divide(sum, len_fx, trace_);
    res.overflow |= mean.overflow;

    FixedValue sq_sum{0, cf};
    std::vector<FixedValue> centered(len);
    for (uint32_t k = 0; k < len; ++k) {
        const auto c = fx::sub(rd(in, k), mean.value);
        res.overflow |= c.overflow;
        centered[k] = c.value;
        if (trace_) trace_->charge(Unit::Adder, 1);
        const auto sq = fx::mul(c.value, c.value);
        res.overflow |= sq.overflow;
        if (trace_) trace_->charge(Unit::Multiplier, 1);
        const auto s = fx::add(sq_sum, sq.value);
        res.overflow |= s.overflow;
        sq_sum = s.value;
        if (trace_) trace_->charge(Unit::Adder, 1);
    }
    const auto var = alu::divide(sq_sum, len_fx, trace_);
    res.overflow |= var.overflow;

    // var + eps keeps the root strictly positive; eps is one compute LSB.
    const auto var_eps = fx::add(var.value, FixedValue{1, cf});
    res.overflow |= var_eps.overflow;
    if (trace_) trace_->charge(Unit::Adder, 1);
    const auto sigma = alu::square_root(var_eps.value, trace_);
    res.negative_radicand |= sigma.negative_radicand;
    const auto inv_sigma = alu::divide(fx::one(cf), sigma.value, trace_);
    res.overflow |= inv_sigma.overflow;
    res.divide_by_zero |= inv_sigma.divide_by_zero;

    for (uint32_t k = 0; k < len; ++k) {
        const auto normed = fx::mul(centered[k], inv_sigma.value);
        res.overflow |= normed.overflow;
        const auto scaled = fx::mul(normed.value, rd(gamma, k));
        res.overflow |= scaled.overflow;
        if (trace_) trace_->charge(Unit::Multiplier, 2);
        const auto shifted = fx::add(scaled.value, rd(beta, k));
        res.overflow |= shifted.overflow;
        if (trace_) trace_->charge(Unit::Adder, 1);
        wr(out, k, shifted.value, res);
    }
    return res;
}

}  // namespace vitsim
