// Release gate: every shipping requirement checked end to end, one verdict
// line each. Exit status is the number of failed checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vitsim/alu.hpp"
#include "vitsim/eeg.hpp"
#include "vitsim/memory.hpp"
#include "vitsim/model.hpp"
#include "vitsim/oracle.hpp"
#include "vitsim/profiling.hpp"
#include "vitsim/sweep.hpp"
#include "vitsim/vector_unit.hpp"
#include "vitsim/weights.hpp"

using namespace vitsim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int n, const std::string& what, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
}

template <typename F>
void checked(int n, const std::string& what, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        verdict(n, what, false, std::string("exception: ") + e.what());
    }
}

std::string fmt_g(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Independent integer reference arithmetic. Everything below recomputes the
// datapath results from the definitions, sharing no code with the library.

constexpr int64_t kMax44 = 127;  // 8-bit symmetric range

int64_t clamp_sym(__int128 v, int64_t hi, bool& ovf) {
    if (v > hi) {
        ovf = true;
        return hi;
    }
    if (v < -static_cast<__int128>(hi)) {
        ovf = true;
        return -hi;
    }
    return static_cast<int64_t>(v);
}

// floor division by a power of two, any sign
__int128 floor_shift(__int128 v, int shift) {
    if (shift <= 0) return v << -shift;
    return v >> shift;
}

// nearest integer to n/d, ties to even, via magnitude comparison
int64_t ref_div_round(__int128 n, __int128 d, int64_t hi, bool& ovf) {
    const bool neg = (n < 0) != (d < 0);
    unsigned __int128 un = n < 0 ? static_cast<unsigned __int128>(-n) : static_cast<unsigned __int128>(n);
    unsigned __int128 ud = d < 0 ? static_cast<unsigned __int128>(-d) : static_cast<unsigned __int128>(d);
    unsigned __int128 q = un / ud;
    const unsigned __int128 r = un % ud;
    if (2 * r > ud) ++q;
    else if (2 * r == ud) q += (q & 1);
    const __int128 signed_q = neg ? -static_cast<__int128>(q) : static_cast<__int128>(q);
    return clamp_sym(signed_q, hi, ovf);
}

// floor(sqrt(v)) seeded from the FPU and corrected exactly
uint64_t ref_isqrt(uint64_t v) {
    uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(v)));
    while (r > 0 && static_cast<unsigned __int128>(r) * r > v) --r;
    while (static_cast<unsigned __int128>(r + 1) * (r + 1) <= v) ++r;
    return r;
}

// ---------------------------------------------------------------------------

void criterion_latency_constants() {
    const std::string what = "scalar and vector latencies match the golden table at Q18.21, length 64";
    checked(1, what, [&] {
        const QFormat cf{18, 21};
        bool ok = true;
        std::string detail;
        auto expect = [&](const char* name, uint64_t got, uint64_t want) {
            if (got != want) {
                ok = false;
                detail += std::string(name) + "=" + std::to_string(got) + " want " +
                          std::to_string(want) + "; ";
            }
        };

        const auto half = fx::quantize(0.5, cf).value;
        const auto three = fx::quantize(3.0, cf).value;
        expect("divide", alu::divide(half, three).cycles, 63);
        expect("exp", alu::exponential(half, 3).cycles, 24);
        expect("sqrt", alu::square_root(three).cycles, 31);

        MemorySystem mem(cf);
        const StorageFormat wide{cf, 5};
        mem.add_tensor({"va", BankSetKind::IntermediateResults, 0, 64, wide});
        mem.add_tensor({"vb", BankSetKind::IntermediateResults, 400, 64, wide});
        mem.add_tensor({"vg", BankSetKind::IntermediateResults, 800, 64, wide});
        mem.add_tensor({"vo", BankSetKind::IntermediateResults, 1200, 64, wide});
        const auto& va = mem.tensor("va");
        const auto& vb = mem.tensor("vb");
        const auto& vg = mem.tensor("vg");
        const auto& vo = mem.tensor("vo");
        VectorUnit vu(mem, 3);
        for (uint32_t i = 0; i < 64; ++i) {
            mem.write(va, i, fx::quantize(0.01 * i - 0.3, cf).value);
            mem.write(vb, i, fx::quantize(0.02 * i - 0.6, cf).value);
            mem.write(vg, i, fx::quantize(1.0, cf).value);
        }
        expect("mac", vu.mac({&va}, {&vb}, 64, Activation::None).cycles, 72);
        expect("mac+bias", vu.mac({&va}, {&vb}, 64, Activation::Linear, &vg, 0).cycles, 76);
        expect("mac+swish", vu.mac({&va}, {&vb}, 64, Activation::Swish, &vg, 0).cycles, 170);
        expect("softmax", vu.softmax({&va}, {&vo}, 64).cycles, 1926);
        expect("layernorm", vu.layernorm({&va}, {&vo}, 64, {&vg}, {&vg}).cycles, 1943);
        verdict(1, what, ok, detail);
    });
}

void criterion_latency_closed_forms() {
    const std::string what = "divider and square root latency closed forms hold across formats";
    checked(2, what, [&] {
        struct Row {
            QFormat fmt;
            uint32_t div, sqr;
        };
        const Row rows[] = {
            {{4, 4}, 15, 7}, {{8, 8}, 27, 13}, {{1, 7}, 18, 8}, {{6, 2}, 13, 6}, {{5, 3}, 14, 6},
        };
        bool ok = true;
        std::string detail;
        for (const auto& r : rows) {
            const uint32_t div_form =
                static_cast<uint32_t>(r.fmt.total_bits() + r.fmt.frac_bits + 3);
            const uint32_t sqr_form =
                static_cast<uint32_t>((r.fmt.total_bits() + r.fmt.frac_bits) / 2 + 1);
            const auto x = fx::quantize(0.5, r.fmt).value;
            const auto y = fx::quantize(0.25, r.fmt).value;
            const bool row_ok = alu::divide_cycles(r.fmt) == r.div && div_form == r.div &&
                                alu::divide(x, x).cycles == r.div &&
                                alu::sqrt_cycles(r.fmt) == r.sqr && sqr_form == r.sqr &&
                                alu::square_root(y).cycles == r.sqr;
            if (!row_ok) {
                ok = false;
                detail += r.fmt.str() + " mismatch; ";
            }
        }
        verdict(2, what, ok, detail);
    });
}

struct InferenceProbe {
    uint64_t cycles = 0;
    double duty = 0;
    ActivityTrace trace;
    bool valid = false;
};

InferenceProbe g_probe;

void criterion_inference_window() {
    const std::string what = "single-epoch inference lands in the expected cycle and duty window";
    checked(3, what, [&] {
        ModelConfig cfg;
        Engine eng(cfg);
        load_float_weights(eng.memory(), generate_float_weights(cfg, 1234, 0.25));
        const auto epoch = generate_epochs(99, 1, cfg.samples_per_epoch())[0];
        const auto r = eng.infer(epoch);
        g_probe.cycles = r.cycles;
        g_probe.duty = duty_cycle(r.cycles, cfg.period_cycles());
        g_probe.trace = eng.trace();
        g_probe.valid = true;

        const double target_cycles = 0.0456 * 1e8;  // 45.6 ms at 100 MHz
        const bool cycles_ok =
            r.cycles >= 0.85 * target_cycles && r.cycles <= 1.15 * target_cycles;
        const bool duty_ok = g_probe.duty >= 0.85 * 0.0015 && g_probe.duty <= 1.15 * 0.0015;
        verdict(3, what, cycles_ok && duty_ok,
                std::to_string(r.cycles) + " cycles, duty " + fmt_g(100.0 * g_probe.duty) + "%");
    });
}

void criterion_effective_power() {
    const std::string what = "duty-weighted effective power lands in [0.53, 0.60] mW";
    checked(4, what, [&] {
        if (!g_probe.valid) {
            verdict(4, what, false, "no inference measurement");
            return;
        }
        const auto p = effective_power(g_probe.duty);
        verdict(4, what, p.effective_power_mw >= 0.53 && p.effective_power_mw <= 0.60,
                fmt_g(p.effective_power_mw) + " mW");
    });
}

void criterion_arithmetic_oracle() {
    const std::string what = "arithmetic matches the arbitrary-precision oracle with zero mismatches";
    checked(5, what, [&] {
        uint64_t mismatches = 0, cases = 0;
        const QFormat q44{4, 4};

        const QFormat cast_targets[] = {{8, 8}, {1, 7}, {6, 2}, {5, 3}, {2, 6}, {18, 21}, {4, 4}};
        for (int64_t a = -kMax44; a <= kMax44; ++a) {
            const FixedValue fa{a, q44};
            for (const auto& tgt : cast_targets) {
                ++cases;
                bool ovf = false;
                const int64_t want =
                    clamp_sym(floor_shift(a, 4 - tgt.frac_bits), tgt.max_raw(), ovf);
                const auto got = fx::cast(fa, tgt);
                if (got.value.raw != want || got.overflow != ovf) ++mismatches;
            }
            for (int64_t b = -kMax44; b <= kMax44; ++b) {
                const FixedValue fb{b, q44};
                cases += 2;
                bool ovf_add = false;
                const int64_t want_add = clamp_sym(a + b, kMax44, ovf_add);
                const auto got_add = fx::add(fa, fb);
                if (got_add.value.raw != want_add || got_add.overflow != ovf_add) ++mismatches;

                bool ovf_mul = false;
                const int64_t want_mul =
                    clamp_sym(floor_shift(static_cast<__int128>(a) * b, 4), kMax44, ovf_mul);
                const auto got_mul = fx::mul(fa, fb);
                if (got_mul.value.raw != want_mul || got_mul.overflow != ovf_mul) ++mismatches;
            }
        }

        const QFormat cf{18, 21};
        const int64_t hi = cf.max_raw();
        std::mt19937_64 rng(2024);
        std::uniform_int_distribution<int64_t> draw(-hi, hi);
        for (int t = 0; t < 100000; ++t) {
            const int64_t a = draw(rng), b = draw(rng);
            ++cases;
            const auto got = alu::divide(FixedValue{a, cf}, FixedValue{b, cf});
            if (b == 0) {
                const int64_t want = a < 0 ? -hi : hi;
                if (got.value.raw != want || !got.divide_by_zero) ++mismatches;
            } else {
                bool ovf = false;
                const int64_t want =
                    ref_div_round(static_cast<__int128>(a) << cf.frac_bits, b, hi, ovf);
                if (got.value.raw != want || got.overflow != ovf || got.divide_by_zero)
                    ++mismatches;
            }

            const int64_t x = draw(rng);
            ++cases;
            const auto gs = alu::square_root(FixedValue{x, cf});
            if (x < 0) {
                if (gs.value.raw != 0 || !gs.negative_radicand) ++mismatches;
            } else {
                const uint64_t want =
                    ref_isqrt(static_cast<uint64_t>(x) << cf.frac_bits);
                if (gs.value.raw != static_cast<int64_t>(want) || gs.negative_radicand)
                    ++mismatches;
            }
        }
        verdict(5, what, mismatches == 0,
                std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches");
    });
}

void criterion_exponential_study() {
    const std::string what = "exponential error falls with series length and plateaus in fixed point";
    checked(6, what, [&] {
        const auto pts = exp_error_study(QFormat{18, 21}, -1.0, 1.0, 1025, 1, 6);
        bool decreasing = pts.size() == 6;
        for (size_t i = 1; i < pts.size(); ++i)
            decreasing = decreasing && pts[i].max_err_real < pts[i - 1].max_err_real;
        const double plateau = std::abs(pts[2].max_err_fixed - pts[5].max_err_fixed);
        const bool plateau_ok = plateau < std::ldexp(1.0, -14);
        verdict(6, what, decreasing && plateau_ok,
                "real err " + fmt_g(pts.front().max_err_real) + " -> " +
                    fmt_g(pts.back().max_err_real) + ", fixed |err3-err6| " + fmt_g(plateau));
    });
}

void criterion_softmax_normalization() {
    const std::string what = "softmax outputs stay normalized and order-preserving";
    checked(7, what, [&] {
        const QFormat cf{18, 21};
        MemorySystem mem(cf);
        const StorageFormat wide{cf, 5};
        mem.add_tensor({"in", BankSetKind::IntermediateResults, 0, 64, wide});
        mem.add_tensor({"out", BankSetKind::IntermediateResults, 400, 64, wide});
        const auto& vin = mem.tensor("in");
        const auto& vout = mem.tensor("out");
        ActivityTrace trace;
        VectorUnit vu(mem, 3, &trace);

        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const int64_t one = INT64_C(1) << cf.frac_bits;
        const int64_t tol = 64 * (INT64_C(1) << (cf.frac_bits - 20));
        int64_t worst = 0;
        int bad_sum = 0, bad_argmax = 0, flagged = 0;
        for (int t = 0; t < 10000; ++t) {
            int arg_in = 0;
            int64_t best_in = INT64_MIN;
            for (uint32_t i = 0; i < 64; ++i) {
                const auto v = fx::quantize(dist(rng), cf).value;
                mem.write(vin, i, v);
                if (v.raw > best_in) {
                    best_in = v.raw;
                    arg_in = static_cast<int>(i);
                }
            }
            const auto r = vu.softmax({&vin}, {&vout}, 64);
            if (r.overflow) ++flagged;

            int64_t sum = 0, best_out = INT64_MIN;
            for (uint32_t i = 0; i < 64; ++i) {
                const int64_t o = mem.read(vout, i).raw;
                sum += o;
                best_out = std::max(best_out, o);
            }
            worst = std::max(worst, std::abs(sum - one));
            if (std::abs(sum - one) > tol) ++bad_sum;
            if (mem.read(vout, static_cast<uint32_t>(arg_in)).raw != best_out) ++bad_argmax;
        }
        const bool ok = bad_sum == 0 && bad_argmax == 0 && flagged == 0 && trace.flag_total == 0;
        verdict(7, what, ok,
                "worst |sum-1| " + fmt_g(std::ldexp(static_cast<double>(worst), -cf.frac_bits)) +
                    ", bad sums " + std::to_string(bad_sum) + ", argmax breaks " +
                    std::to_string(bad_argmax));
    });
}

void criterion_residual_identity() {
    const std::string what = "zeroing the attention projection and second mlp layer leaves tokens unchanged";
    checked(8, what, [&] {
        ModelConfig cfg;
        auto fw = generate_float_weights(cfg, 7);
        for (const char* n :
             {"enc0.proj.kernel", "enc0.proj.bias", "enc0.mlp2.kernel", "enc0.mlp2.bias"})
            for (double& v : fw.tensors.at(n)) v = 0.0;
        Engine eng(cfg);
        load_float_weights(eng.memory(), fw);
        std::vector<FixedValue> before, after;
        eng.set_phase_hook([&](Phase p, Engine& e) {
            if (p == Phase::Embedding) before = e.dump_tensor("act.tokens");
            if (p == Phase::Mlp) after = e.dump_tensor("act.tokens");
        });
        eng.infer(generate_epochs(3, 1, cfg.samples_per_epoch())[0]);

        double max_abs = 0;
        if (before.size() != after.size() || before.empty()) {
            verdict(8, what, false, "token snapshots missing");
            return;
        }
        for (size_t i = 0; i < before.size(); ++i)
            max_abs = std::max(max_abs, std::abs(before[i].value() - after[i].value()));
        verdict(8, what, max_abs <= std::ldexp(1.0, -7), "max |delta| " + fmt_g(max_abs));
    });
}

void criterion_reference_agreement() {
    const std::string what = "fixed-point argmax agrees with the double-precision reference";
    checked(9, what, [&] {
        ModelConfig cfg;
        const auto fw = generate_float_weights(cfg, 1234, 0.25);
        const auto epochs = generate_epochs(99, 1000, cfg.samples_per_epoch());
        const auto refs = reference_outputs(cfg, fw, epochs);
        const auto p8 = run_sweep_point(cfg, fw, epochs, refs, 8, 8);
        const auto p16 = run_sweep_point(cfg, fw, epochs, refs, 16, 16);
        const double gap = std::abs(p8.agreement - p16.agreement);
        verdict(9, what, p8.agreement >= 0.95 && gap <= 0.01,
                "(8,8) " + fmt_g(p8.agreement) + ", (16,16) " + fmt_g(p16.agreement) + ", gap " +
                    fmt_g(gap));
    });
}

void criterion_activity_ordering() {
    const std::string what = "activity profile orders the functional units as expected";
    checked(10, what, [&] {
        if (!g_probe.valid) {
            verdict(10, what, false, "no inference measurement");
            return;
        }
        const auto& t = g_probe.trace;
        const bool memory_full = t.busy_of(Unit::Memory) == t.total && t.total > 0;
        const uint64_t sq = t.busy_of(Unit::Sqrt);
        bool sqrt_least = sq > 0;
        for (const Unit u : {Unit::Adder, Unit::Multiplier, Unit::Divider, Unit::Exponential,
                             Unit::Mac, Unit::Softmax, Unit::LayerNorm})
            sqrt_least = sqrt_least && sq < t.busy_of(u);
        const bool ordered = t.busy_of(Unit::Multiplier) > t.busy_of(Unit::Adder) &&
                             t.busy_of(Unit::Adder) > t.busy_of(Unit::Divider);
        verdict(10, what, memory_full && sqrt_least && ordered,
                "mult " + std::to_string(t.busy_of(Unit::Multiplier)) + ", add " +
                    std::to_string(t.busy_of(Unit::Adder)) + ", div " +
                    std::to_string(t.busy_of(Unit::Divider)) + ", sqrt " + std::to_string(sq));
    });
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + VITSIM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    const std::string what = "identical command lines produce byte-identical outputs";
    checked(11, what, [&] {
        const auto root = fs::temp_directory_path() / "vitsim_acceptance";
        fs::remove_all(root);
        std::vector<fs::path> dirs = {root / "a", root / "b"};
        for (const auto& d : dirs) {
            fs::create_directories(d);
            const std::string w = (d / "w.bin").string();
            if (run_cli("gen-weights --seed 5 --out " + w) != 0 ||
                run_cli("infer --weights " + w + " --synth 3 --seed 11 --emit-trace "
                        "--emit-power --out-dir " + d.string()) != 0 ||
                run_cli("report --weights " + w + " --synth 3 --seed 11 --out-dir " +
                        d.string()) != 0) {
                verdict(11, what, false, "command failed under " + d.string());
                return;
            }
        }
        bool ok = true;
        std::string detail;
        for (const char* f : {"w.bin", "synth.results.csv", "synth.activity.csv",
                              "synth.power.csv", "activity.csv", "latency.csv", "power.csv",
                              "summary.txt"}) {
            const auto a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
            if (a.empty() || a != b) {
                ok = false;
                detail += std::string(f) + " differs; ";
            }
        }
        verdict(11, what, ok, detail.empty() ? "8 files compared" : detail);
    });
}

}  // namespace

int main() {
    std::cout << "release gate: fixed-point transformer accelerator simulator\n";
    criterion_latency_constants();
    criterion_latency_closed_forms();
    criterion_inference_window();
    criterion_effective_power();
    criterion_arithmetic_oracle();
    criterion_exponential_study();
    criterion_softmax_normalization();
    criterion_residual_identity();
    criterion_reference_agreement();
    criterion_activity_ordering();
    criterion_determinism();
    std::cout << (failures == 0 ? "all criteria passed\n"
                                : std::to_string(failures) + " criteria failed\n");
    return failures;
}
