#pragma once

#include <string>
#include <vector>

#include "vitsim/oracle.hpp"

namespace vitsim {

struct SweepRange {
    int lo = 2;
    int hi = 16;
};

struct SweepPoint {
    int weight_bits = 0;
    int act_bits = 0;
    double agreement = 0;  // fraction of epochs whose argmax matches the reference
    double mse = 0;        // mean squared class-probability error vs the reference
};

// Width scaling rule: Qa.b of native width N redistributed to width w keeps
// a' = max(1, round(a*w/N)) integer bits and b' = w-a' fractional bits.
QFormat scale_qformat(QFormat f, int target_bits);

// The default tensor map with every storage format rescaled: weight tensors
// to weight_bits, single-width activations to act_bits, double-width ones to
// 2*act_bits. Addresses are reallocated for the new widths.
std::vector<TensorDescriptor> scaled_tensor_map(const ModelConfig& cfg, int weight_bits,
                                                int act_bits);

// Quantize the float weights at (weight_bits, act_bits), run every epoch,
// and score argmax agreement and probability MSE against the precomputed
// reference outputs. Uses enlarged bank geometry: the study varies word
// width, not the chip's physical capacity.
SweepPoint run_sweep_point(const ModelConfig& cfg, const FloatWeights& fw,
                           const std::vector<Epoch>& epochs,
                           const std::vector<OracleOutput>& refs, int weight_bits, int act_bits);

// Full grid. Points are independent, so the grid fans out across OpenMP
// workers, each owning a private engine; results are identical to the serial
// variant below, which is kept as the reference implementation.
std::vector<SweepPoint> sweep_bitwidths(const ModelConfig& cfg, const FloatWeights& fw,
                                        const std::vector<Epoch>& epochs, SweepRange weight_bits,
                                        SweepRange act_bits);
std::vector<SweepPoint> sweep_bitwidths_serial(const ModelConfig& cfg, const FloatWeights& fw,
                                               const std::vector<Epoch>& epochs,
                                               SweepRange weight_bits, SweepRange act_bits);

std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace vitsim
