#pragma once

#include <cstdint>
#include <span>

#include "vitsim/alu.hpp"
#include "vitsim/memory.hpp"
#include "vitsim/profiling.hpp"

namespace vitsim {

enum class Activation : uint8_t { None, Linear, Swish };

// Outcome of one vector operation. `cycles` is the unit's occupancy (the
// closed-form latency); result write-back is charged by the scheduler.
struct VectorOpResult {
    FixedValue value;  // MAC result; unused for softmax/layernorm
    uint64_t cycles = 0;
    bool overflow = false;
    bool divide_by_zero = false;
    bool negative_radicand = false;

    void absorb_flags(const VectorOpResult& o) {
        overflow |= o.overflow;
        divide_by_zero |= o.divide_by_zero;
        negative_radicand |= o.negative_radicand;
    }
};

// A strided window over a tensor: element k of the operand is
// tensor[offset + k*stride].
struct Operand {
    const TensorDescriptor* tensor;
    uint32_t offset = 0;
    uint32_t stride = 1;
};

// The three pipelined vector operations. All element math happens in the
// compute format with truncation and symmetric saturation at every step, in
// strictly ascending index order; latencies are affine in the length.
class VectorUnit {
  public:
    VectorUnit(MemorySystem& mem, int taylor_terms, ActivityTrace* trace = nullptr)
        : mem_(mem), taylor_terms_(taylor_terms), trace_(trace) {}

    // Latency: len + 8 (None), len + 12 (Linear adds the bias),
    // len + 12 + exp + divide + 7 (Swish: (d+b) * sigmoid(d+b)).
    uint64_t mac_cycles(uint32_t len, Activation act) const;
    // Latency: len*exp + divide + len + 263 (exponentials, one reciprocal
    // of the sum, one multiply per output, pipeline overhead).
    uint64_t softmax_cycles(uint32_t len) const;
    // Latency: 7*len + 3*divide + sqrt + 1 + 1274 (seven shared-unit passes
    // per element; mean, variance and 1/sigma divides; one sqrt).
    uint64_t layernorm_cycles(uint32_t len) const;

    // Dot product of two windows, optionally + bias, optionally activated.
    VectorOpResult mac(Operand a, Operand b, uint32_t len, Activation act,
                       const TensorDescriptor* bias = nullptr, uint32_t bias_index = 0);

    // Numerically unstabilized softmax: e^z_i * (1 / sum e^z_j). Outputs go
    // through `out`'s storage format; `computed`, when given, also receives
    // the compute-format outputs before storage quantization.
    VectorOpResult softmax(Operand in, Operand out, uint32_t len,
                           std::span<FixedValue> computed = {});

    // (x - mean) / sqrt(var + eps) * gamma + beta, eps = one compute LSB.
    VectorOpResult layernorm(Operand in, Operand out, uint32_t len, Operand gamma, Operand beta);

  private:
    FixedValue rd(const Operand& o, uint32_t k) const {
        return mem_.read(*o.tensor, o.offset + k * o.stride);
    }
    void wr(const Operand& o, uint32_t k, FixedValue v, VectorOpResult& r);

    MemorySystem& mem_;
    int taylor_terms_;
    ActivityTrace* trace_;
};

}  // namespace vitsim
