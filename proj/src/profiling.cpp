#include "vitsim/profiling.hpp"

#include <charconv>
#include <sstream>

namespace vitsim {

const char* unit_name(Unit u) {
    switch (u) {
        case Unit::Adder: return "adder";
        case Unit::Multiplier: return "multiplier";
        case Unit::Divider: return "divider";
        case Unit::Exponential: return "exponential";
        case Unit::Sqrt: return "sqrt";
        case Unit::Mac: return "mac";
        case Unit::Softmax: return "softmax";
        case Unit::LayerNorm: return "layernorm";
        case Unit::Memory: return "memory";
    }
    return "?";
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Embedding: return "embedding";
        case Phase::Attention: return "attention";
        case Phase::Mlp: return "mlp";
        case Phase::Head: return "head";
    }
    return "?";
}

const char* flag_name(FlagKind f) {
    switch (f) {
        case FlagKind::Overflow: return "overflow";
        case FlagKind::DivideByZero: return "divide_by_zero";
        case FlagKind::NegativeRadicand: return "negative_radicand";
    }
    return "?";
}

std::vector<ActivityRow> activity_report(const ActivityTrace& t, uint64_t period_cycles) {
    std::vector<ActivityRow> rows;
    rows.reserve(kNumUnits);
    for (int i = 0; i < kNumUnits; ++i) {
        const auto u = static_cast<Unit>(i);
        const uint64_t b = t.busy_of(u);
        rows.push_back({unit_name(u), b,
                        t.total ? static_cast<double>(b) / static_cast<double>(t.total) : 0.0,
                        period_cycles ? static_cast<double>(b) / static_cast<double>(period_cycles) : 0.0});
    }
    return rows;
}

double duty_cycle(uint64_t inference_cycles, uint64_t period_cycles) {
    return period_cycles ? static_cast<double>(inference_cycles) / static_cast<double>(period_cycles)
                         : 0.0;
}

PowerReport effective_power(double duty, const PowerModel& pm) {
    PowerReport r;
    r.duty = duty;
    r.active_power_mw = pm.total_dynamic_mw + pm.total_leakage_mw;
    r.gated_leakage_mw = (1.0 - pm.gating_efficiency) * pm.total_leakage_mw;
    r.effective_power_mw = duty * r.active_power_mw + (1.0 - duty) * r.gated_leakage_mw;
    return r;
}

double latency_seconds(uint64_t cycles, uint64_t clock_hz) {
    return static_cast<double>(cycles) / static_cast<double>(clock_hz);
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string activity_csv(const std::vector<ActivityRow>& rows) {
    std::string out = "unit,busy_cycles,ratio_vs_inference,ratio_vs_period\n";
    for (const auto& r : rows) {
        out += r.unit;
        out += ',';
        out += std::to_string(r.busy_cycles);
        out += ',';
        out += format_double(r.ratio_vs_inference);
        out += ',';
        out += format_double(r.ratio_vs_period);
        out += '\n';
    }
    return out;
}

std::string power_csv(const PowerReport& p) {
    std::string out = "duty,active_power_mw,gated_leakage_mw,effective_power_mw\n";
    out += format_double(p.duty);
    out += ',';
    out += format_double(p.active_power_mw);
    out += ',';
    out += format_double(p.gated_leakage_mw);
    out += ',';
    out += format_double(p.effective_power_mw);
    out += '\n';
    return out;
}

std::string summary_block(uint64_t inference_cycles, uint64_t clock_hz, double period_seconds,
                          const PowerReport& p) {
    std::ostringstream os;
    os << "inference cycles      : " << inference_cycles << "\n";
    os << "clock (Hz)            : " << clock_hz << "\n";
    os << "latency (ms)          : " << format_double(latency_seconds(inference_cycles, clock_hz) * 1e3)
       << "\n";
    os << "epoch period (s)      : " << format_double(period_seconds) << "\n";
    os << "duty cycle            : " << format_double(p.duty) << "\n";
    os << "active power (mW)     : " << format_double(p.active_power_mw) << "\n";
    os << "gated leakage (mW)    : " << format_double(p.gated_leakage_mw) << "\n";
    os << "effective power (mW)  : " << format_double(p.effective_power_mw) << "\n";
    return os.str();
}

}  // namespace vitsim
