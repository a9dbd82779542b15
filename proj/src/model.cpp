#include "vitsim/model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vitsim/alu.hpp"

#include "json.hpp"

namespace vitsim {

using nlohmann::json;

void ModelConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
    if (sample_rate <= 0 || epoch_seconds <= 0) fail("sample_rate and epoch_seconds must be positive");
    if (patch_len <= 0 || d_model <= 0 || num_heads <= 0 || num_layers <= 0 || mlp_dim <= 0)
        fail("model dimensions must be positive");
    if (num_classes < 2) fail("need at least two classes");
    if (avg_depth < 1) fail("avg_depth must be >= 1");
    if (samples_per_epoch() % patch_len != 0) fail("epoch length not divisible by patch_len");
    if (d_model % num_heads != 0) fail("d_model not divisible by num_heads");
    if (taylor_terms < 1 || taylor_terms > 8) fail("taylor_terms outside [1, 8]");
    if (clock_hz == 0) fail("clock_hz must be positive");
    // Exact input normalization needs 2^-15 representable.
    if (compute_format.frac_bits < 15) fail("compute format needs >= 15 fractional bits");
}

std::string ModelConfig::to_json() const {
    json j;
    j["sample_rate"] = sample_rate;
    j["epoch_seconds"] = epoch_seconds;
    j["patch_len"] = patch_len;
    j["d_model"] = d_model;
    j["num_heads"] = num_heads;
    j["num_layers"] = num_layers;
    j["mlp_dim"] = mlp_dim;
    j["num_classes"] = num_classes;
    j["avg_depth"] = avg_depth;
    j["use_cls_token"] = use_cls_token;
    j["taylor_terms"] = taylor_terms;
    j["clock_hz"] = clock_hz;
    j["compute_format"] = compute_format.str();
    return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ModelConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("sample_rate", c.sample_rate);
    get("epoch_seconds", c.epoch_seconds);
    get("patch_len", c.patch_len);
    get("d_model", c.d_model);
    get("num_heads", c.num_heads);
    get("num_layers", c.num_layers);
    get("mlp_dim", c.mlp_dim);
    get("num_classes", c.num_classes);
    get("avg_depth", c.avg_depth);
    get("use_cls_token", c.use_cls_token);
    get("taylor_terms", c.taylor_terms);
    get("clock_hz", c.clock_hz);
    if (j.contains("compute_format"))
        c.compute_format = QFormat::parse(j.at("compute_format").get<std::string>());
    c.validate();
    return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

namespace {

// Default storage formats: embedding/attention weights Q2.6, MLP weights
// Q3.5, classifier head Q5.3; the residual stream is double-width Q8.8,
// Q/K/V are Q4.4, raw attention scores Q6.2, post-softmax weights and class
// probabilities Q1.7, MLP hidden activations Q6.2.
constexpr QFormat kEmbedFmt{2, 6};
constexpr QFormat kMlpFmt{3, 5};
constexpr QFormat kHeadFmt{5, 3};
constexpr QFormat kInputFmt{1, 7};
constexpr QFormat kResidualFmt{8, 8};
constexpr QFormat kQkvFmt{4, 4};
constexpr QFormat kScoreFmt{6, 2};
constexpr QFormat kAttnFmt{1, 7};
constexpr QFormat kHiddenFmt{6, 2};

class MapBuilder {
  public:
    void add(const std::string& name, BankSetKind bank, uint32_t length, QFormat fmt) {
        const StorageFormat sf = StorageFormat::of(fmt);
        uint32_t& cursor = bank == BankSetKind::Weights ? w_cursor_ : i_cursor_;
        cursor = (cursor + 3u) & ~3u;  // 4-word alignment
        map_.push_back({name, bank, cursor, length, sf});
        cursor += length * static_cast<uint32_t>(sf.word_count);
    }
    std::vector<TensorDescriptor> take() { return std::move(map_); }

  private:
    std::vector<TensorDescriptor> map_;
    uint32_t w_cursor_ = 0;
    uint32_t i_cursor_ = 0;
};

}  // namespace

std::vector<TensorDescriptor> build_tensor_map(const ModelConfig& cfg) {
    cfg.validate();
    const auto W = BankSetKind::Weights;
    const auto I = BankSetKind::IntermediateResults;
    const uint32_t D = cfg.d_model, P = cfg.patch_len, T = cfg.num_tokens(), M = cfg.mlp_dim,
                   C = cfg.num_classes, S = cfg.samples_per_epoch();
    MapBuilder b;

    b.add("embed.kernel", W, D * P, kEmbedFmt);  // row o holds the weights of output o
    b.add("embed.bias", W, D, kEmbedFmt);
    if (cfg.use_cls_token) b.add("embed.cls", W, D, kEmbedFmt);
    b.add("embed.pos", W, T * D, kEmbedFmt);
    for (int l = 0; l < cfg.num_layers; ++l) {
        const std::string p = "enc" + std::to_string(l) + ".";
        b.add(p + "ln1.gamma", W, D, kEmbedFmt);
        b.add(p + "ln1.beta", W, D, kEmbedFmt);
        for (const char* n : {"wq", "wk", "wv", "proj"}) {
            b.add(p + n + ".kernel", W, D * D, kEmbedFmt);
            b.add(p + n + ".bias", W, D, kEmbedFmt);
        }
        b.add(p + "ln2.gamma", W, D, kEmbedFmt);
        b.add(p + "ln2.beta", W, D, kEmbedFmt);
        b.add(p + "mlp1.kernel", W, M * D, kMlpFmt);
        b.add(p + "mlp1.bias", W, M, kMlpFmt);
        b.add(p + "mlp2.kernel", W, D * M, kMlpFmt);
        b.add(p + "mlp2.bias", W, D, kMlpFmt);
    }
    b.add("head.kernel", W, C * D, kHeadFmt);
    b.add("head.bias", W, C, kHeadFmt);

    b.add("act.input", I, S, kInputFmt);
    b.add("act.tokens", I, T * D, kResidualFmt);
    b.add("act.norm", I, T * D, kResidualFmt);
    b.add("act.q", I, T * D, kQkvFmt);
    b.add("act.k", I, T * D, kQkvFmt);
    b.add("act.v", I, T * D, kQkvFmt);
    b.add("act.scores", I, T * T, kScoreFmt);  // one head at a time
    b.add("act.attn", I, T * T, kAttnFmt);
    b.add("act.heads", I, T * D, kResidualFmt);
    b.add("act.mlp", I, T * M, kHiddenFmt);
    b.add("act.logits", I, C, kResidualFmt);
    b.add("act.probs", I, C, kAttnFmt);
    return b.take();
}

uint64_t count_parameters(const ModelConfig& cfg) {
    uint64_t n = 0;
    for (const auto& t : build_tensor_map(cfg))
        if (t.bank_set == BankSetKind::Weights) n += t.length;
    return n;
}

std::vector<FixedValue> normalize_input(std::span<const uint16_t> samples, QFormat fmt) {
    std::vector<FixedValue> out;
    out.reserve(samples.size());
    for (const uint16_t u : samples) {
        const double x = (static_cast<int>(u) - 32768) / 32768.0;
        out.push_back(fx::quantize(x, fmt).value);
    }
    return out;
}

Engine::Engine(const ModelConfig& cfg) : Engine(cfg, build_tensor_map(cfg), MemoryGeometry{}) {}

Engine::Engine(const ModelConfig& cfg, const std::vector<TensorDescriptor>& map,
               const MemoryGeometry& geom)
    : cfg_(cfg), mem_(cfg.compute_format, geom), vu_(mem_, cfg.taylor_terms, &trace_) {
    cfg_.validate();
    for (const auto& d : map) mem_.add_tensor(d);
}

void Engine::end_phase(Phase p) {
    if (phase_hook_) phase_hook_(p, *this);
}

int Engine::argmax(const std::vector<FixedValue>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i].raw > v[best].raw) best = i;
    return best;
}

void Engine::scalar_add_into(const TensorDescriptor& dst, uint32_t idx, FixedValue addend) {
    const auto sum = fx::add(mem_.read(dst, idx), addend);
    trace_.charge(Unit::Adder, 1);
    if (sum.overflow) trace_.raise(Unit::Adder, FlagKind::Overflow);
    if (mem_.write(dst, idx, sum.value)) trace_.raise(Unit::Memory, FlagKind::Overflow);
    trace_.advance(2);
}

namespace {
// Flag bookkeeping for a finished vector/scalar unit op.
void absorb(ActivityTrace& tr, Unit u, const VectorOpResult& r) {
    if (r.overflow) tr.raise(u, FlagKind::Overflow);
    if (r.divide_by_zero) tr.raise(u, FlagKind::DivideByZero);
    if (r.negative_radicand) tr.raise(u, FlagKind::NegativeRadicand);
}
void absorb(ActivityTrace& tr, Unit u, const AluResult& r) {
    if (r.overflow) tr.raise(u, FlagKind::Overflow);
    if (r.divide_by_zero) tr.raise(u, FlagKind::DivideByZero);
    if (r.negative_radicand) tr.raise(u, FlagKind::NegativeRadicand);
}
}  // namespace

EpochResult Engine::infer(std::span<const uint16_t> samples) {
    if (static_cast<int>(samples.size()) != cfg_.samples_per_epoch())
        throw std::invalid_argument("epoch has " + std::to_string(samples.size()) +
                                    " samples, expected " +
                                    std::to_string(cfg_.samples_per_epoch()));
    const uint64_t cycles0 = trace_.total;
    const uint64_t flags0 = trace_.flag_total;

    run_embedding(samples);
    for (int l = 0; l < cfg_.num_layers; ++l) {
        run_attention(l);
        run_mlp(l);
    }
    EpochResult out = run_head();
    trace_.finalize_memory();
    out.cycles = trace_.total - cycles0;
    out.flags_raised = trace_.flag_total - flags0;
    return out;
}

void Engine::run_embedding(std::span<const uint16_t> samples) {
    trace_.current_phase = Phase::Embedding;
    const uint32_t D = cfg_.d_model, P = cfg_.patch_len;
    const auto& input = t("act.input");
    const auto& tokens = t("act.tokens");

    const auto normed = normalize_input(samples, cfg_.compute_format);
    for (uint32_t s = 0; s < normed.size(); ++s) {
        if (mem_.write(input, s, normed[s])) trace_.raise(Unit::Memory, FlagKind::Overflow);
        trace_.advance(1);
    }

    uint32_t first_patch_token = 0;
    if (cfg_.use_cls_token) {
        const auto& cls = t("embed.cls");
        for (uint32_t d = 0; d < D; ++d) {
            if (mem_.write(tokens, d, mem_.read(cls, d)))
                trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(1);
        }
        first_patch_token = 1;
    }

    const auto& kern = t("embed.kernel");
    const auto& bias = t("embed.bias");
    for (uint32_t p = 0; p < static_cast<uint32_t>(cfg_.num_patches()); ++p) {
        for (uint32_t o = 0; o < D; ++o) {
            const auto r = vu_.mac({&input, p * P, 1}, {&kern, o * P, 1}, P, Activation::Linear,
                                   &bias, o);
            absorb(trace_, Unit::Mac, r);
            if (mem_.write(tokens, (p + first_patch_token) * D + o, r.value))
                trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(r.cycles + 1);
        }
    }

    const auto& pos = t("embed.pos");
    const uint32_t TD = static_cast<uint32_t>(cfg_.num_tokens()) * D;
    for (uint32_t i = 0; i < TD; ++i) scalar_add_into(tokens, i, mem_.read(pos, i));
    end_phase(Phase::Embedding);
}

void Engine::run_attention(int layer) {
    trace_.current_phase = Phase::Attention;
    const std::string pre = "enc" + std::to_string(layer) + ".";
    const uint32_t D = cfg_.d_model, T = cfg_.num_tokens(), H = cfg_.num_heads,
                   HD = cfg_.head_dim();
    const QFormat cf = cfg_.compute_format;
    const auto& tokens = t("act.tokens");
    const auto& norm = t("act.norm");

    const auto& g1 = t(pre + "ln1.gamma");
    const auto& b1 = t(pre + "ln1.beta");
    for (uint32_t row = 0; row < T; ++row) {
        const auto r = vu_.layernorm({&tokens, row * D, 1}, {&norm, row * D, 1}, D, {&g1, 0, 1},
                                     {&b1, 0, 1});
        absorb(trace_, Unit::LayerNorm, r);
        trace_.advance(r.cycles + D);
    }

    const char* proj_names[3] = {"wq", "wk", "wv"};
    const char* dst_names[3] = {"act.q", "act.k", "act.v"};
    for (int m = 0; m < 3; ++m) {
        const auto& kern = t(pre + proj_names[m] + std::string(".kernel"));
        const auto& bias = t(pre + proj_names[m] + std::string(".bias"));
        const auto& dst = t(dst_names[m]);
        for (uint32_t ti = 0; ti < T; ++ti) {
            for (uint32_t o = 0; o < D; ++o) {
                const auto r = vu_.mac({&norm, ti * D, 1}, {&kern, o * D, 1}, D,
                                       Activation::Linear, &bias, o);
                absorb(trace_, Unit::Mac, r);
                if (mem_.write(dst, ti * D + o, r.value))
                    trace_.raise(Unit::Memory, FlagKind::Overflow);
                trace_.advance(r.cycles + 1);
            }
        }
    }

    // 1 / sqrt(head_dim), computed once and applied as a multiplier.
    const auto root = alu::square_root(fx::quantize(cfg_.head_dim(), cf).value, &trace_);
    absorb(trace_, Unit::Sqrt, root);
    const auto inv_scale = alu::divide(fx::one(cf), root.value, &trace_);
    absorb(trace_, Unit::Divider, inv_scale);
    trace_.advance(root.cycles + inv_scale.cycles);

    const auto& q = t("act.q");
    const auto& k = t("act.k");
    const auto& v = t("act.v");
    const auto& scores = t("act.scores");
    const auto& attn = t("act.attn");
    const auto& heads = t("act.heads");
    for (uint32_t h = 0; h < H; ++h) {
        for (uint32_t ti = 0; ti < T; ++ti) {
            for (uint32_t tu = 0; tu < T; ++tu) {
                const auto r =
                    vu_.mac({&q, ti * D + h * HD, 1}, {&k, tu * D + h * HD, 1}, HD,
                            Activation::None);
                absorb(trace_, Unit::Mac, r);
                const auto scaled = fx::mul(r.value, inv_scale.value);
                trace_.charge(Unit::Multiplier, 1);
                if (scaled.overflow) trace_.raise(Unit::Multiplier, FlagKind::Overflow);
                if (mem_.write(scores, ti * T + tu, scaled.value))
                    trace_.raise(Unit::Memory, FlagKind::Overflow);
                trace_.advance(r.cycles + 2);
            }
        }
        for (uint32_t ti = 0; ti < T; ++ti) {
            const auto r = vu_.softmax({&scores, ti * T, 1}, {&attn, ti * T, 1}, T);
            absorb(trace_, Unit::Softmax, r);
            trace_.advance(r.cycles + T);
        }
        for (uint32_t ti = 0; ti < T; ++ti) {
            for (uint32_t j = 0; j < HD; ++j) {
                const auto r =
                    vu_.mac({&attn, ti * T, 1}, {&v, h * HD + j, D}, T, Activation::None);
                absorb(trace_, Unit::Mac, r);
                if (mem_.write(heads, ti * D + h * HD + j, r.value))
                    trace_.raise(Unit::Memory, FlagKind::Overflow);
                trace_.advance(r.cycles + 1);
            }
        }
    }

    const auto& pk = t(pre + "proj.kernel");
    const auto& pb = t(pre + "proj.bias");
    for (uint32_t ti = 0; ti < T; ++ti) {
        for (uint32_t o = 0; o < D; ++o) {
            const auto r =
                vu_.mac({&heads, ti * D, 1}, {&pk, o * D, 1}, D, Activation::Linear, &pb, o);
            absorb(trace_, Unit::Mac, r);
            const auto sum = fx::add(r.value, mem_.read(tokens, ti * D + o));
            trace_.charge(Unit::Adder, 1);
            if (sum.overflow) trace_.raise(Unit::Adder, FlagKind::Overflow);
            if (mem_.write(tokens, ti * D + o, sum.value))
                trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(r.cycles + 2);
        }
    }
    end_phase(Phase::Attention);
}

void Engine::run_mlp(int layer) {
    trace_.current_phase = Phase::Mlp;
    const std::string pre = "enc" + std::to_string(layer) + ".";
    const uint32_t D = cfg_.d_model, T = cfg_.num_tokens(), M = cfg_.mlp_dim;
    const auto& tokens = t("act.tokens");
    const auto& norm = t("act.norm");
    const auto& hidden = t("act.mlp");

    const auto& g2 = t(pre + "ln2.gamma");
    const auto& b2 = t(pre + "ln2.beta");
    for (uint32_t row = 0; row < T; ++row) {
        const auto r = vu_.layernorm({&tokens, row * D, 1}, {&norm, row * D, 1}, D, {&g2, 0, 1},
                                     {&b2, 0, 1});
        absorb(trace_, Unit::LayerNorm, r);
        trace_.advance(r.cycles + D);
    }

    const auto& k1 = t(pre + "mlp1.kernel");
    const auto& bias1 = t(pre + "mlp1.bias");
    for (uint32_t ti = 0; ti < T; ++ti) {
        for (uint32_t j = 0; j < M; ++j) {
            const auto r = vu_.mac({&norm, ti * D, 1}, {&k1, j * D, 1}, D, Activation::Swish,
                                   &bias1, j);
            absorb(trace_, Unit::Mac, r);
            if (mem_.write(hidden, ti * M + j, r.value))
                trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(r.cycles + 1);
        }
    }

    const auto& k2 = t(pre + "mlp2.kernel");
    const auto& bias2 = t(pre + "mlp2.bias");
    for (uint32_t ti = 0; ti < T; ++ti) {
        for (uint32_t o = 0; o < D; ++o) {
            const auto r = vu_.mac({&hidden, ti * M, 1}, {&k2, o * M, 1}, M, Activation::Linear,
                                   &bias2, o);
            absorb(trace_, Unit::Mac, r);
            const auto sum = fx::add(r.value, mem_.read(tokens, ti * D + o));
            trace_.charge(Unit::Adder, 1);
            if (sum.overflow) trace_.raise(Unit::Adder, FlagKind::Overflow);
            if (mem_.write(tokens, ti * D + o, sum.value))
                trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(r.cycles + 2);
        }
    }
    end_phase(Phase::Mlp);
}

EpochResult Engine::run_head() {
    trace_.current_phase = Phase::Head;
    const uint32_t D = cfg_.d_model, T = cfg_.num_tokens(), C = cfg_.num_classes;
    const QFormat cf = cfg_.compute_format;
    const auto& tokens = t("act.tokens");

    // Classifier input: the CLS token, or a mean pool over all tokens.
    const TensorDescriptor* src = &tokens;
    if (!cfg_.use_cls_token) {
        const auto& norm = t("act.norm");
        const auto t_fx = fx::quantize(static_cast<double>(T), cf).value;
        for (uint32_t d = 0; d < D; ++d) {
            FixedValue s{0, cf};
            for (uint32_t ti = 0; ti < T; ++ti) {
                const auto a = fx::add(s, mem_.read(tokens, ti * D + d));
                if (a.overflow) trace_.raise(Unit::Adder, FlagKind::Overflow);
                s = a.value;
                trace_.charge(Unit::Adder, 1);
                trace_.advance(1);
            }
            const auto mean = alu::divide(s, t_fx, &trace_);
            absorb(trace_, Unit::Divider, mean);
            if (mem_.write(norm, d, mean.value)) trace_.raise(Unit::Memory, FlagKind::Overflow);
            trace_.advance(mean.cycles + 1);
        }
        src = &norm;
    }

    const auto& hk = t("head.kernel");
    const auto& hb = t("head.bias");
    const auto& logits = t("act.logits");
    const auto& probs = t("act.probs");
    for (uint32_t c = 0; c < C; ++c) {
        const auto r = vu_.mac({src, 0, 1}, {&hk, c * D, 1}, D, Activation::Linear, &hb, c);
        absorb(trace_, Unit::Mac, r);
        if (mem_.write(logits, c, r.value)) trace_.raise(Unit::Memory, FlagKind::Overflow);
        trace_.advance(r.cycles + 1);
    }

    EpochResult out;
    out.probs.assign(C, FixedValue{0, cf});
    const auto r = vu_.softmax({&logits, 0, 1}, {&probs, 0, 1}, C, out.probs);
    absorb(trace_, Unit::Softmax, r);
    trace_.advance(r.cycles + C);

    if (filter_enabled_) {
        filter_.push_back(out.probs);
        while (static_cast<int>(filter_.size()) > cfg_.avg_depth) filter_.pop_front();
        const auto k_fx = fx::quantize(static_cast<double>(filter_.size()), cf).value;
        out.filtered.assign(C, FixedValue{0, cf});
        for (uint32_t c = 0; c < C; ++c) {
            FixedValue s = filter_[0][c];
            for (size_t m = 1; m < filter_.size(); ++m) {
                const auto a = fx::add(s, filter_[m][c]);
                if (a.overflow) trace_.raise(Unit::Adder, FlagKind::Overflow);
                s = a.value;
                trace_.charge(Unit::Adder, 1);
                trace_.advance(1);
            }
            const auto mean = alu::divide(s, k_fx, &trace_);
            absorb(trace_, Unit::Divider, mean);
            out.filtered[c] = mean.value;
            trace_.advance(mean.cycles);
        }
    } else {
        out.filtered = out.probs;
    }

    out.stage = argmax(out.filtered);
    out.stage_unfiltered = argmax(out.probs);
    end_phase(Phase::Head);
    return out;
}

std::vector<FixedValue> Engine::dump_tensor(std::string_view name) const {
    const auto& d = mem_.tensor(name);
    std::vector<FixedValue> out;
    out.reserve(d.length);
    for (uint32_t i = 0; i < d.length; ++i) out.push_back(mem_.read(d, i));
    return out;
}

}  // namespace vitsim
