// Command-line front end: inference over epoch streams, weight generation,
// activity/power reports, exponential error study, and bit-width sweeps.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vitsim/eeg.hpp"
#include "vitsim/model.hpp"
#include "vitsim/oracle.hpp"
#include "vitsim/profiling.hpp"
#include "vitsim/sweep.hpp"
#include "vitsim/weights.hpp"

namespace {

using namespace vitsim;
namespace fs = std::filesystem;

// Exit codes: 1 usage, 2 input parse/IO, 3 config or capacity, 4 flags raised
// under --strict.
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitFlags = 4;

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::string default_out_dir() {
    if (const char* env = std::getenv("VITSIM_OUT_DIR")) return env;
    return ".";
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CliError(kExitInput, "cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw CliError(kExitInput, "write failed for '" + path.string() + "'");
}

ModelConfig load_config(const std::string& path) {
    if (path.empty()) return ModelConfig{};
    try {
        return ModelConfig::from_json_file(path);
    } catch (const std::exception& e) {
        throw CliError(kExitConfig, std::string("config: ") + e.what());
    }
}

std::pair<int, int> parse_range(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CliError(kExitUsage, std::string(what) + ": expected lo:hi, got '" + text + "'");
    try {
        return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw CliError(kExitUsage, std::string(what) + ": expected lo:hi, got '" + text + "'");
    }
}

const char* stage_label(int stage) {
    switch (stage) {
        case 0: return "wake";
        case 1: return "light";
        case 2: return "deep";
        case 3: return "rem";
        default: return "class";
    }
}

// One input stream: epochs processed in order through a private engine, the
// rolling filter carried across them.
struct StreamJob {
    std::string name;
    std::vector<Epoch> epochs;
    std::vector<EpochResult> rows;
    ActivityTrace trace;
    std::string error;
};

std::string stream_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

std::string results_csv(const std::vector<EpochResult>& rows, int num_classes) {
    std::string out = "epoch,stage,stage_label,stage_unfiltered,cycles,flags";
    for (int c = 0; c < num_classes; ++c) out += ",p" + std::to_string(c);
    for (int c = 0; c < num_classes; ++c) out += ",f" + std::to_string(c);
    out += '\n';
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out += std::to_string(i);
        out += ',' + std::to_string(r.stage);
        out += ',';
        out += stage_label(r.stage);
        out += ',' + std::to_string(r.stage_unfiltered);
        out += ',' + std::to_string(r.cycles);
        out += ',' + std::to_string(r.flags_raised);
        for (const auto& p : r.probs) out += ',' + format_double(p.value());
        for (const auto& f : r.filtered) out += ',' + format_double(f.value());
        out += '\n';
    }
    return out;
}

nlohmann::json results_json(const std::vector<EpochResult>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        nlohmann::json row;
        row["epoch"] = i;
        row["stage"] = r.stage;
        row["stage_label"] = stage_label(r.stage);
        row["stage_unfiltered"] = r.stage_unfiltered;
        row["cycles"] = r.cycles;
        row["flags"] = r.flags_raised;
        auto& p = row["probs"] = nlohmann::json::array();
        for (const auto& v : r.probs) p.push_back(v.value());
        auto& f = row["filtered"] = nlohmann::json::array();
        for (const auto& v : r.filtered) f.push_back(v.value());
        arr.push_back(std::move(row));
    }
    return arr;
}

// Shared manifest for infer/report: where the weights come from, which
// epochs to run, and where outputs land.
struct RunOpts {
    std::string config_path;
    std::string weights_path;
    std::vector<std::string> inputs;
    int synth_epochs = 0;
    std::string out_dir = default_out_dir();
    uint64_t seed = 1;
    double scale = 0.25;
    bool no_filter = false;
    bool strict = false;
    bool json = false;
    bool emit_trace = false;
    bool emit_power = false;
};

void add_run_options(CLI::App* cmd, RunOpts& o, bool trace_flags) {
    cmd->add_option("--config", o.config_path, "model configuration JSON");
    cmd->add_option("--weights", o.weights_path,
                    "weight file; omitted: random weights from --seed/--scale");
    cmd->add_option("--input,-i", o.inputs, "epoch stream (.csv/.txt text or .bin u16le)");
    cmd->add_option("--synth", o.synth_epochs, "append a synthetic stream of N seeded epochs");
    cmd->add_option("--out-dir,-o", o.out_dir, "output directory (env VITSIM_OUT_DIR)");
    cmd->add_option("--seed", o.seed, "seed for random weights and synthetic epochs");
    cmd->add_option("--scale", o.scale, "uniform range for random weights");
    cmd->add_flag("--no-filter", o.no_filter, "argmax on raw probabilities");
    cmd->add_flag("--strict", o.strict, "nonzero exit when arithmetic flags are raised");
    cmd->add_flag("--json", o.json, "also write JSON mirrors of the CSV outputs");
    if (trace_flags) {
        cmd->add_flag("--emit-trace", o.emit_trace, "also write per-stream activity CSV");
        cmd->add_flag("--emit-power", o.emit_power, "also write per-stream power CSV");
    }
}

// Builds the weight file the run executes from: load it, or generate and
// snapshot one in memory.
WeightFile resolve_weights(const RunOpts& o, const ModelConfig& cfg_from_flag) {
    if (!o.weights_path.empty()) {
        try {
            return read_weight_file(o.weights_path);
        } catch (const std::exception& e) {
            throw CliError(kExitInput, std::string("weights: ") + e.what());
        }
    }
    try {
        Engine eng(cfg_from_flag);
        const auto fw = generate_float_weights(cfg_from_flag, o.seed, o.scale);
        load_float_weights(eng.memory(), fw);
        return snapshot_weights(cfg_from_flag, eng.memory(), o.seed, o.scale);
    } catch (const std::exception& e) {
        throw CliError(kExitConfig, std::string("weights: ") + e.what());
    }
}

std::vector<StreamJob> collect_streams(const RunOpts& o, const ModelConfig& cfg) {
    std::vector<StreamJob> jobs;
    for (const auto& path : o.inputs) {
        StreamJob j;
        j.name = stream_stem(path);
        try {
            j.epochs = load_epochs(path, cfg.samples_per_epoch());
        } catch (const std::exception& e) {
            throw CliError(kExitInput, path + ": " + e.what());
        }
        jobs.push_back(std::move(j));
    }
    if (o.synth_epochs > 0) {
        StreamJob j;
        j.name = "synth";
        j.epochs = generate_epochs(o.seed, o.synth_epochs, cfg.samples_per_epoch());
        jobs.push_back(std::move(j));
    }
    if (jobs.empty())
        throw CliError(kExitUsage, "no input: pass --input files and/or --synth N");
    return jobs;
}

// Streams are independent pipelines with private engines and filter state;
// run them in parallel, keep all output in input order.
void run_streams(std::vector<StreamJob>& jobs, const WeightFile& wf, bool no_filter) {
    const int n = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int s = 0; s < n; ++s) {
        auto& j = jobs[s];
        try {
            const auto eng = make_engine(wf);
            eng->set_filter_enabled(!no_filter);
            j.rows.reserve(j.epochs.size());
            for (const auto& ep : j.epochs) j.rows.push_back(eng->infer(ep));
            j.trace = eng->trace();
        } catch (const std::exception& e) {
            j.error = e.what();
        }
    }
    for (const auto& j : jobs)
        if (!j.error.empty()) throw CliError(kExitConfig, j.name + ": " + j.error);
}

uint64_t total_flags(const std::vector<StreamJob>& jobs) {
    uint64_t n = 0;
    for (const auto& j : jobs)
        for (const auto& r : j.rows) n += r.flags_raised;
    return n;
}

int cmd_infer(const RunOpts& o) {
    const ModelConfig flag_cfg = load_config(o.config_path);
    const WeightFile wf = resolve_weights(o, flag_cfg);
    const ModelConfig& cfg = wf.config;
    auto jobs = collect_streams(o, cfg);
    run_streams(jobs, wf, o.no_filter);

    fs::create_directories(o.out_dir);
    for (const auto& j : jobs) {
        const fs::path base = fs::path(o.out_dir) / j.name;
        write_text_file(base.string() + ".results.csv", results_csv(j.rows, cfg.num_classes));
        if (o.json)
            write_text_file(base.string() + ".results.json", results_json(j.rows).dump(2) + "\n");
        if (o.emit_trace)
            write_text_file(base.string() + ".activity.csv",
                            activity_csv(activity_report(
                                j.trace, cfg.period_cycles() * j.rows.size())));
        if (o.emit_power) {
            const double duty = duty_cycle(j.trace.total,
                                           cfg.period_cycles() * j.rows.size());
            write_text_file(base.string() + ".power.csv", power_csv(effective_power(duty)));
        }
        std::cout << j.name << ": " << j.rows.size() << " epoch(s), last stage "
                  << j.rows.back().stage << " (" << stage_label(j.rows.back().stage) << "), "
                  << j.trace.total << " cycles total\n";
    }
    if (o.strict && total_flags(jobs) > 0)
        throw CliError(kExitFlags,
                       "strict: " + std::to_string(total_flags(jobs)) + " flag event(s) raised");
    return 0;
}

int cmd_report(const RunOpts& o) {
    const ModelConfig flag_cfg = load_config(o.config_path);
    const WeightFile wf = resolve_weights(o, flag_cfg);
    const ModelConfig& cfg = wf.config;
    auto jobs = collect_streams(o, cfg);
    run_streams(jobs, wf, o.no_filter);

    // Aggregate the trace over every stream and epoch.
    uint64_t cycles = 0, epochs = 0;
    ActivityTrace agg;
    for (const auto& j : jobs) {
        cycles += j.trace.total;
        epochs += j.rows.size();
        for (size_t u = 0; u < kNumUnits; ++u) agg.busy[u] += j.trace.busy[u];
        for (size_t p = 0; p < 4; ++p) agg.phase_cycles[p] += j.trace.phase_cycles[p];
        agg.total += j.trace.total;
        agg.flag_total += j.trace.flag_total;
    }
    const uint64_t period = cfg.period_cycles() * epochs;
    const auto rows = activity_report(agg, period);
    const double duty = duty_cycle(cycles, period);
    const auto power = effective_power(duty);

    std::string latency = "epoch,cycles,seconds\n";
    uint64_t idx = 0;
    for (const auto& j : jobs)
        for (const auto& r : j.rows) {
            latency += std::to_string(idx++) + ',' + std::to_string(r.cycles) + ',' +
                       format_double(latency_seconds(r.cycles, cfg.clock_hz)) + '\n';
        }

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    write_text_file(dir / "activity.csv", activity_csv(rows));
    write_text_file(dir / "latency.csv", latency);
    write_text_file(dir / "power.csv", power_csv(power));
    const std::string summary = summary_block(cycles / epochs, cfg.clock_hz, cfg.epoch_seconds,
                                              power);
    write_text_file(dir / "summary.txt", summary);
    if (o.json) {
        nlohmann::json doc;
        for (const auto& r : rows)
            doc["activity"].push_back({{"unit", r.unit},
                                       {"busy_cycles", r.busy_cycles},
                                       {"ratio_vs_inference", r.ratio_vs_inference},
                                       {"ratio_vs_period", r.ratio_vs_period}});
        doc["power"] = {{"duty", power.duty},
                        {"active_power_mw", power.active_power_mw},
                        {"gated_leakage_mw", power.gated_leakage_mw},
                        {"effective_power_mw", power.effective_power_mw}};
        doc["mean_cycles_per_epoch"] = cycles / epochs;
        write_text_file(dir / "report.json", doc.dump(2) + "\n");
    }
    std::cout << summary;
    if (o.strict && total_flags(jobs) > 0)
        throw CliError(kExitFlags,
                       "strict: " + std::to_string(total_flags(jobs)) + " flag event(s) raised");
    return 0;
}

int cmd_gen_weights(const std::string& config_path, uint64_t seed, double scale,
                    const std::string& out_path) {
    if (scale <= 0) throw CliError(kExitUsage, "gen-weights: --scale must be > 0");
    const ModelConfig cfg = load_config(config_path);
    try {
        Engine eng(cfg);
        const auto fw = generate_float_weights(cfg, seed, scale);
        const auto saturated = load_float_weights(eng.memory(), fw);
        const auto wf = snapshot_weights(cfg, eng.memory(), seed, scale);
        write_weight_file(out_path, wf);
        const auto fp = eng.memory().footprint();
        std::cout << "wrote " << out_path << "\n"
                  << "tensors            : " << wf.tensor_map.size() << "\n"
                  << "parameters         : " << count_parameters(cfg) << "\n"
                  << "weight words       : " << fp.weights_words_used << " / "
                  << fp.weights_words_total << "\n"
                  << "intermediate words : " << fp.inter_words_used << " / "
                  << fp.inter_words_total << "\n"
                  << "saturated on load  : " << saturated << "\n";
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        throw CliError(kExitConfig, std::string("gen-weights: ") + e.what());
    }
    return 0;
}

int cmd_exp_error(const std::string& config_path, const std::string& terms_text,
                  const std::string& range_text, int grid, const std::string& out_dir,
                  bool json) {
    const auto [t_lo, t_hi] = parse_range(terms_text, "--terms");
    const auto [r_lo, r_hi] = parse_range(range_text, "--range");
    const ModelConfig cfg = load_config(config_path);
    std::vector<ExpErrorPoint> pts;
    try {
        pts = exp_error_study(cfg.compute_format, r_lo, r_hi, grid, t_lo, t_hi);
    } catch (const std::exception& e) {
        throw CliError(kExitUsage, std::string("exp-error: ") + e.what());
    }
    std::string csv = "terms,max_err_fixed,mean_err_fixed,max_err_real,mean_err_real\n";
    for (const auto& p : pts)
        csv += std::to_string(p.terms) + ',' + format_double(p.max_err_fixed) + ',' +
               format_double(p.mean_err_fixed) + ',' + format_double(p.max_err_real) + ',' +
               format_double(p.mean_err_real) + '\n';
    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / "exp_error.csv", csv);
    if (json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : pts)
            arr.push_back({{"terms", p.terms},
                           {"max_err_fixed", p.max_err_fixed},
                           {"mean_err_fixed", p.mean_err_fixed},
                           {"max_err_real", p.max_err_real},
                           {"mean_err_real", p.mean_err_real}});
        write_text_file(fs::path(out_dir) / "exp_error.json", arr.dump(2) + "\n");
    }
    std::cout << csv;
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& sweep_text, int epochs,
              uint64_t seed, double scale, bool serial, const std::string& out_dir, bool json) {
    const auto comma = sweep_text.find(',');
    if (comma == std::string::npos)
        throw CliError(kExitUsage, "--sweep: expected wb_lo:wb_hi,ab_lo:ab_hi");
    const auto [w_lo, w_hi] = parse_range(sweep_text.substr(0, comma), "--sweep weights");
    const auto [a_lo, a_hi] = parse_range(sweep_text.substr(comma + 1), "--sweep activations");
    if (epochs < 1) throw CliError(kExitUsage, "--epochs must be >= 1");
    const ModelConfig cfg = load_config(config_path);

    std::vector<SweepPoint> points;
    try {
        const auto fw = generate_float_weights(cfg, seed, scale);
        const auto eps = generate_epochs(seed, epochs, cfg.samples_per_epoch());
        points = serial
                     ? sweep_bitwidths_serial(cfg, fw, eps, {w_lo, w_hi}, {a_lo, a_hi})
                     : sweep_bitwidths(cfg, fw, eps, {w_lo, w_hi}, {a_lo, a_hi});
    } catch (const std::exception& e) {
        throw CliError(kExitConfig, std::string("sweep: ") + e.what());
    }
    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / "sweep.csv", sweep_csv(points));
    if (json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : points)
            arr.push_back({{"weight_bits", p.weight_bits},
                           {"act_bits", p.act_bits},
                           {"agreement", p.agreement},
                           {"mse", p.mse}});
        write_text_file(fs::path(out_dir) / "sweep.json", arr.dump(2) + "\n");
    }
    const auto best = std::max_element(points.begin(), points.end(),
                                       [](const SweepPoint& x, const SweepPoint& y) {
                                           return x.agreement < y.agreement;
                                       });
    std::cout << points.size() << " grid point(s), " << epochs << " epoch(s) each\n"
              << "best agreement " << format_double(best->agreement) << " at ("
              << best->weight_bits << "," << best->act_bits << ") bits\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed-point transformer accelerator simulator"};
    app.require_subcommand(1);

    RunOpts infer_opts;
    auto* infer = app.add_subcommand("infer", "run inference over epoch streams");
    add_run_options(infer, infer_opts, true);

    RunOpts report_opts;
    auto* report = app.add_subcommand("report", "activity, latency, and power reports");
    add_run_options(report, report_opts, false);

    std::string gw_config, gw_out = (fs::path(default_out_dir()) / "weights.bin").string();
    uint64_t gw_seed = 1;
    double gw_scale = 0.25;
    auto* gen = app.add_subcommand("gen-weights", "write a seeded random weight file");
    gen->add_option("--config", gw_config, "model configuration JSON");
    gen->add_option("--seed", gw_seed, "generator seed");
    gen->add_option("--scale", gw_scale, "uniform range [-scale, scale]");
    gen->add_option("--out", gw_out, "output path");

    std::string ee_config, ee_terms = "1:8", ee_range = "-1:1",
                ee_out = default_out_dir();
    int ee_grid = 1025;
    bool ee_json = false;
    auto* expe = app.add_subcommand("exp-error",
                                    "exponential approximation error vs term count");
    expe->add_option("--config", ee_config, "model configuration JSON");
    expe->add_option("--terms", ee_terms, "term-count range lo:hi within 1:8");
    expe->add_option("--range", ee_range, "evaluation interval lo:hi");
    expe->add_option("--grid", ee_grid, "grid points over the interval");
    expe->add_option("--out-dir,-o", ee_out, "output directory");
    expe->add_flag("--json", ee_json, "also write a JSON mirror");

    std::string sw_config, sw_spec = "2:16,2:16", sw_out = default_out_dir();
    int sw_epochs = 25;
    uint64_t sw_seed = 1;
    double sw_scale = 0.25;
    bool sw_serial = false, sw_json = false;
    auto* sweep = app.add_subcommand("sweep", "bit-width grid vs oracle agreement");
    sweep->add_option("--config", sw_config, "model configuration JSON");
    sweep->add_option("--sweep", sw_spec, "grid as wb_lo:wb_hi,ab_lo:ab_hi");
    sweep->add_option("--epochs", sw_epochs, "epochs per grid point");
    sweep->add_option("--seed", sw_seed, "seed for weights and epochs");
    sweep->add_option("--scale", sw_scale, "uniform range for random weights");
    sweep->add_flag("--serial", sw_serial, "single-threaded driver");
    sweep->add_option("--out-dir,-o", sw_out, "output directory");
    sweep->add_flag("--json", sw_json, "also write a JSON mirror");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*infer) return cmd_infer(infer_opts);
        if (*report) return cmd_report(report_opts);
        if (*gen) return cmd_gen_weights(gw_config, gw_seed, gw_scale, gw_out);
        if (*expe) return cmd_exp_error(ee_config, ee_terms, ee_range, ee_grid, ee_out, ee_json);
        if (*sweep)
            return cmd_sweep(sw_config, sw_spec, sw_epochs, sw_seed, sw_scale, sw_serial, sw_out,
                             sw_json);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitUsage;
}
