#pragma once

#include <array>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vitsim/memory.hpp"
#include "vitsim/profiling.hpp"
#include "vitsim/vector_unit.hpp"

namespace vitsim {

// Hyperparameters of the sleep-staging transformer plus the clocking and
// arithmetic configuration of the chip it runs on.
struct ModelConfig {
    int sample_rate = 128;        // Hz
    double epoch_seconds = 30.0;  // one scoring window
    int patch_len = 64;
    int d_model = 64;
    int num_heads = 8;
    int num_layers = 1;
    int mlp_dim = 32;
    int num_classes = 4;
    int avg_depth = 3;  // rolling output filter depth
    bool use_cls_token = true;
    int taylor_terms = 3;
    uint64_t clock_hz = 100000000;
    QFormat compute_format{18, 21};

    int samples_per_epoch() const {
        return static_cast<int>(static_cast<double>(sample_rate) * epoch_seconds);
    }
    int num_patches() const { return samples_per_epoch() / patch_len; }
    int num_tokens() const { return num_patches() + (use_cls_token ? 1 : 0); }
    int head_dim() const { return d_model / num_heads; }
    uint64_t period_cycles() const {
        return static_cast<uint64_t>(epoch_seconds * static_cast<double>(clock_hz));
    }

    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
    static ModelConfig from_json_file(const std::string& path);
};

// The fixed address/format assignment of every tensor, weights and
// activations, allocated bump-style per bank set with 4-word alignment.
std::vector<TensorDescriptor> build_tensor_map(const ModelConfig& cfg);

// Trainable parameter count of the weight-bank tensors.
uint64_t count_parameters(const ModelConfig& cfg);

// Input mapping: unsigned 16-bit ADC codes to (u - 32768) / 32768, exact in
// the compute format.
std::vector<FixedValue> normalize_input(std::span<const uint16_t> samples, QFormat fmt);

struct EpochResult {
    std::vector<FixedValue> probs;     // per class, compute format, unfiltered
    std::vector<FixedValue> filtered;  // rolling mean of the last <= avg_depth probs
    int stage = 0;                     // argmax of filtered
    int stage_unfiltered = 0;
    uint64_t cycles = 0;        // cycles this epoch
    uint64_t flags_raised = 0;  // flag events this epoch
};

// The accelerator: banked memories, one shared scalar/vector datapath, and
// the serialized inference schedule with full cycle accounting.
class Engine {
  public:
    explicit Engine(const ModelConfig& cfg);
    Engine(const ModelConfig& cfg, const std::vector<TensorDescriptor>& map,
           const MemoryGeometry& geom);

    // The vector unit aliases the memory system; pin the object.
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const ModelConfig& config() const { return cfg_; }
    MemorySystem& memory() { return mem_; }
    const MemorySystem& memory() const { return mem_; }
    const ActivityTrace& trace() const { return trace_; }

    void set_filter_enabled(bool on) { filter_enabled_ = on; }
    void reset_filter() { filter_.clear(); }

    // Called after each pipeline phase; used for instrumentation.
    using PhaseHook = std::function<void(Phase, Engine&)>;
    void set_phase_hook(PhaseHook hook) { phase_hook_ = std::move(hook); }

    EpochResult infer(std::span<const uint16_t> samples);

    std::vector<FixedValue> dump_tensor(std::string_view name) const;

  private:
    void run_embedding(std::span<const uint16_t> samples);
    void run_attention(int layer);
    void run_mlp(int layer);
    EpochResult run_head();

    const TensorDescriptor& t(const std::string& name) const { return mem_.tensor(name); }
    // Scalar read-modify-write step on the shared adder or multiplier:
    // one compute cycle plus one write-back cycle.
    void scalar_add_into(const TensorDescriptor& dst, uint32_t idx, FixedValue addend);
    void end_phase(Phase p);
    static int argmax(const std::vector<FixedValue>& v);

    ModelConfig cfg_;
    MemorySystem mem_;
    ActivityTrace trace_;
    VectorUnit vu_;
    bool filter_enabled_ = true;
    std::deque<std::vector<FixedValue>> filter_;
    PhaseHook phase_hook_;
};

}  // namespace vitsim
