#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vitsim {

// Functional units tracked by the activity trace. Memory is "busy" for the
// whole inference window by definition (both SRAMs stay enabled throughout).
enum class Unit : uint8_t {
    Adder,
    Multiplier,
    Divider,
    Exponential,
    Sqrt,
    Mac,
    Softmax,
    LayerNorm,
    Memory,
};
inline constexpr int kNumUnits = 9;
const char* unit_name(Unit u);

enum class Phase : uint8_t { Embedding, Attention, Mlp, Head };
inline constexpr int kNumPhases = 4;
const char* phase_name(Phase p);

enum class FlagKind : uint8_t { Overflow, DivideByZero, NegativeRadicand };
inline constexpr int kNumFlagKinds = 3;
const char* flag_name(FlagKind f);

struct FlagEvent {
    Phase phase;
    Unit unit;
    FlagKind kind;
    uint64_t cycle;
};

// Cycle ledger for one engine. `total` advances only with the serialized
// schedule; per-unit busy counters can overlap it (the shared adder/multiplier
// are also credited while a vector op occupies the window).
struct ActivityTrace {
    std::array<uint64_t, kNumUnits> busy{};
    std::array<uint64_t, kNumPhases> phase_cycles{};
    uint64_t total = 0;
    Phase current_phase = Phase::Embedding;

    std::array<std::array<uint64_t, kNumFlagKinds>, kNumUnits> flag_counts{};
    uint64_t flag_total = 0;
    std::vector<FlagEvent> flag_log;  // capped; flag_total keeps the full count
    static constexpr size_t kFlagLogCap = 1024;

    void charge(Unit u, uint64_t cycles) { busy[static_cast<int>(u)] += cycles; }
    void advance(uint64_t cycles) {
        total += cycles;
        phase_cycles[static_cast<int>(current_phase)] += cycles;
    }
    void raise(Unit u, FlagKind f) {
        flag_counts[static_cast<int>(u)][static_cast<int>(f)]++;
        flag_total++;
        if (flag_log.size() < kFlagLogCap) flag_log.push_back({current_phase, u, f, total});
    }
    // Memory is modeled as active for every cycle of the inference window.
    void finalize_memory() { busy[static_cast<int>(Unit::Memory)] = total; }

    uint64_t busy_of(Unit u) const { return busy[static_cast<int>(u)]; }
};

// Per-unit power constants in microwatts, plus the chip totals used for the
// effective-power estimate. Dynamic power applies while a unit is busy;
// leakage applies always, scaled by what power gating leaves on.
struct PowerModel {
    struct UnitPower {
        double dynamic_uw;
        double leakage_uw;
    };
    std::array<UnitPower, kNumUnits> units{{
        {9.83, 23.7},     // adder
        {50.1, 245.0},    // multiplier
        {9.1, 50.1},      // divider
        {20.4, 75.3},     // exponential
        {9.6, 41.8},      // sqrt
        {75.4, 113.0},    // MAC
        {106.2, 562.0},   // softmax
        {51.6, 97.9},     // layernorm
        {5790.0 + 18.8, 6870.0 + 2750.0},  // both SRAMs
    }};
    double total_dynamic_mw = 6.54;
    double total_leakage_mw = 11.0;
    double gating_efficiency = 0.95;
};

struct ActivityRow {
    std::string unit;
    uint64_t busy_cycles;
    double ratio_vs_inference;  // busy / total inference cycles
    double ratio_vs_period;     // busy / (epoch_period * clock)
};

struct PowerReport {
    double duty;                 // inference cycles / period cycles
    double active_power_mw;      // dynamic + leakage while awake
    double gated_leakage_mw;     // residual leakage while asleep
    double effective_power_mw;   // duty-weighted average over the period
};

std::vector<ActivityRow> activity_report(const ActivityTrace& t, uint64_t period_cycles);

double duty_cycle(uint64_t inference_cycles, uint64_t period_cycles);

// Duty-weighted average power over one epoch period: the full chip (dynamic +
// leakage) while inferring, and the ungated fraction of leakage while idle.
PowerReport effective_power(double duty, const PowerModel& pm = {});

double latency_seconds(uint64_t cycles, uint64_t clock_hz);

// Locale-independent shortest-round-trip formatting for report output.
std::string format_double(double v);

std::string activity_csv(const std::vector<ActivityRow>& rows);
std::string power_csv(const PowerReport& p);
// Human-readable block: latency, duty, effective power.
std::string summary_block(uint64_t inference_cycles, uint64_t clock_hz, double period_seconds,
                          const PowerReport& p);

}  // namespace vitsim
