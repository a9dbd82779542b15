#include "vitsim/sweep.hpp"

#include <cmath>
#include <stdexcept>

#include "vitsim/profiling.hpp"

namespace vitsim {

QFormat scale_qformat(QFormat f, int target_bits) {
    if (target_bits < 2 || target_bits > 32)
        throw std::invalid_argument("scale_qformat: width outside [2, 32]");
    const double ratio = static_cast<double>(target_bits) / f.total_bits();
    int a = static_cast<int>(std::llround(f.int_bits * ratio));
    if (a < 1) a = 1;
    if (a > target_bits) a = target_bits;
    return QFormat(a, target_bits - a);
}

std::vector<TensorDescriptor> scaled_tensor_map(const ModelConfig& cfg, int weight_bits,
                                                int act_bits) {
    std::vector<TensorDescriptor> map = build_tensor_map(cfg);
    uint32_t cursors[2] = {0, 0};
    for (auto& t : map) {
        const bool is_w = t.bank_set == BankSetKind::Weights;
        const int target = is_w ? weight_bits : act_bits * t.storage.word_count;
        t.storage = StorageFormat::of(scale_qformat(t.storage.fmt, target));
        uint32_t& cursor = cursors[is_w ? 0 : 1];
        cursor = (cursor + 3u) & ~3u;
        t.base_word = cursor;
        cursor += t.footprint_words();
    }
    return map;
}

SweepPoint run_sweep_point(const ModelConfig& cfg, const FloatWeights& fw,
                           const std::vector<Epoch>& epochs,
                           const std::vector<OracleOutput>& refs, int weight_bits, int act_bits) {
    if (refs.size() != epochs.size())
        throw std::invalid_argument("run_sweep_point: reference/epochs size mismatch");
    MemoryGeometry geom;
    geom.weights_words_per_bank *= 4;
    geom.inter_words_per_bank *= 4;
    Engine eng(cfg, scaled_tensor_map(cfg, weight_bits, act_bits), geom);
    eng.set_filter_enabled(false);
    load_float_weights(eng.memory(), fw);

    SweepPoint pt;
    pt.weight_bits = weight_bits;
    pt.act_bits = act_bits;
    size_t matches = 0;
    double sq_err = 0;
    size_t n_probs = 0;
    for (size_t i = 0; i < epochs.size(); ++i) {
        const auto res = eng.infer(epochs[i]);
        if (res.stage_unfiltered == refs[i].stage) ++matches;
        for (size_t c = 0; c < refs[i].probs.size(); ++c) {
            const double d = res.probs[c].value() - refs[i].probs[c];
            sq_err += d * d;
            ++n_probs;
        }
    }
    pt.agreement = static_cast<double>(matches) / static_cast<double>(epochs.size());
    pt.mse = sq_err / static_cast<double>(n_probs);
    return pt;
}

namespace {

std::vector<SweepPoint> sweep_impl(const ModelConfig& cfg, const FloatWeights& fw,
                                   const std::vector<Epoch>& epochs, SweepRange wb, SweepRange ab,
                                   bool parallel) {
    if (wb.lo < 2 || wb.hi < wb.lo || ab.lo < 2 || ab.hi < ab.lo)
        throw std::invalid_argument("sweep: bad bit-width range");
    const auto refs = reference_outputs(cfg, fw, epochs);
    const int nw = wb.hi - wb.lo + 1;
    const int na = ab.hi - ab.lo + 1;
    std::vector<SweepPoint> points(static_cast<size_t>(nw) * na);

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int idx = 0; idx < nw * na; ++idx)
            points[idx] = run_sweep_point(cfg, fw, epochs, refs, wb.lo + idx / na,
                                          ab.lo + idx % na);
    } else {
        for (int idx = 0; idx < nw * na; ++idx)
            points[idx] = run_sweep_point(cfg, fw, epochs, refs, wb.lo + idx / na,
                                          ab.lo + idx % na);
    }
    return points;
}

}  // namespace

std::vector<SweepPoint> sweep_bitwidths(const ModelConfig& cfg, const FloatWeights& fw,
                                        const std::vector<Epoch>& epochs, SweepRange weight_bits,
                                        SweepRange act_bits) {
    return sweep_impl(cfg, fw, epochs, weight_bits, act_bits, true);
}

std::vector<SweepPoint> sweep_bitwidths_serial(const ModelConfig& cfg, const FloatWeights& fw,
                                               const std::vector<Epoch>& epochs,
                                               SweepRange weight_bits, SweepRange act_bits) {
    return sweep_impl(cfg, fw, epochs, weight_bits, act_bits, false);
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "weight_bits,act_bits,agreement,mse\n";
    for (const auto& p : points) {
        out += std::to_string(p.weight_bits);
        out += ',';
        out += std::to_string(p.act_bits);
        out += ',';
        out += format_double(p.agreement);
        out += ',';
        out += format_double(p.mse);
        out += '\n';
    }
    return out;
}

}  // namespace vitsim
