#pragma once

#include <array>
#include <span>
#include <vector>

#include "vitsim/eeg.hpp"
#include "vitsim/model.hpp"
#include "vitsim/weights.hpp"

namespace vitsim {

// Double-precision reference of the exact same computation graph the engine
// schedules: patch embedding, pre-norm encoder blocks, CLS/mean head,
// softmax. No fixed-point effects, no storage quantization, no filter.
struct OracleOutput {
    std::vector<double> probs;
    int stage = 0;
};

OracleOutput reference_infer(const ModelConfig& cfg, const FloatWeights& fw,
                             std::span<const uint16_t> samples);

// Reference outputs for a batch of epochs, computed once and shared by all
// quantized variants scored against them.
std::vector<OracleOutput> reference_outputs(const ModelConfig& cfg, const FloatWeights& fw,
                                            const std::vector<Epoch>& epochs);

// The exponential unit's range reduction and truncated series evaluated in
// double precision, isolating the algorithmic error from format effects.
double exponential_real(double x, int terms);

// Max and mean abs error of exp over a uniform grid on [lo, hi], for the
// real-valued algorithm and for the fixed-point unit at the given format.
struct ExpErrorPoint {
    int terms = 0;
    double max_err_real = 0;
    double mean_err_real = 0;
    double max_err_fixed = 0;
    double mean_err_fixed = 0;
};
std::vector<ExpErrorPoint> exp_error_study(QFormat fmt, double lo, double hi, int grid_points,
                                           int min_terms, int max_terms);

}  // namespace vitsim
