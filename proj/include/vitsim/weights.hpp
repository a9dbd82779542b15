#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vitsim/memory.hpp"
#include "vitsim/model.hpp"

namespace vitsim {

// Real-valued weights keyed by tensor name, in tensor-map order. These are
// the pre-quantization values the double-precision reference runs on.
struct FloatWeights {
    std::map<std::string, std::vector<double>> tensors;
};

// Deterministic uniform draw in [-scale, scale): mt19937_64 with an explicit
// 53-bit mantissa mapping, so identical seeds give identical bytes on every
// platform. One value is drawn per weight element, walking the weight-bank
// tensors in map order.
FloatWeights generate_float_weights(const ModelConfig& cfg, uint64_t seed, double scale = 0.25);

// Quantize into the engine's weight banks through each tensor's storage
// format. Returns the number of elements that saturated.
uint64_t load_float_weights(MemorySystem& mem, const FloatWeights& fw);

// Read the quantized weights back as doubles (exact), for running the
// reference model against a weight file of unknown provenance.
FloatWeights dequantize_weights(const MemorySystem& mem);

// Weight file: one text line "VITWGT1 <header_bytes>\n", a JSON header of
// exactly that many bytes (model config, bank geometry, every tensor
// descriptor), then the raw bytes of each weights bank in index order.
// See docs/weight-file.md for the byte-level layout.
struct WeightFile {
    ModelConfig config;
    MemoryGeometry geometry;
    std::vector<TensorDescriptor> tensor_map;
    std::vector<std::vector<uint8_t>> weight_banks;
    uint64_t seed = 0;  // generator provenance, informational
    double scale = 0.0;
};

WeightFile snapshot_weights(const ModelConfig& cfg, const MemorySystem& mem, uint64_t seed,
                            double scale);
void write_weight_file(const std::string& path, const WeightFile& wf);
WeightFile read_weight_file(const std::string& path);

// Build an engine from a loaded file: registers the file's tensor map and
// copies the weight-bank payload.
std::unique_ptr<Engine> make_engine(const WeightFile& wf);

}  // namespace vitsim
