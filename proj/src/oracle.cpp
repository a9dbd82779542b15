#include "vitsim/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "vitsim/alu.hpp"

namespace vitsim {

namespace {

const std::vector<double>& at(const FloatWeights& fw, const std::string& name) {
    const auto it = fw.tensors.find(name);
    if (it == fw.tensors.end())
        throw std::invalid_argument("reference: missing weights for '" + name + "'");
    return it->second;
}

void layer_norm(std::vector<double>& row, const std::vector<double>& gamma,
                const std::vector<double>& beta, double eps) {
    const size_t n = row.size();
    double mean = 0;
    for (const double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (const double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (size_t i = 0; i < n; ++i) row[i] = (row[i] - mean) * inv * gamma[i] + beta[i];
}

void softmax(std::vector<double>& v) {
    double sum = 0;
    for (double& x : v) {
        x = std::exp(x);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

// out[o] = dot(x, kernel row o) + bias[o]; kernels are stored output-major.
std::vector<double> linear(const std::vector<double>& x, const std::vector<double>& kernel,
                           const std::vector<double>& bias) {
    const size_t out_dim = bias.size();
    const size_t in_dim = x.size();
    std::vector<double> out(out_dim);
    for (size_t o = 0; o < out_dim; ++o) {
        double acc = 0;
        for (size_t i = 0; i < in_dim; ++i) acc += x[i] * kernel[o * in_dim + i];
        out[o] = acc + bias[o];
    }
    return out;
}

}  // namespace

OracleOutput reference_infer(const ModelConfig& cfg, const FloatWeights& fw,
                             std::span<const uint16_t> samples) {
    if (static_cast<int>(samples.size()) != cfg.samples_per_epoch())
        throw std::invalid_argument("reference: wrong epoch length");
    const int D = cfg.d_model, T = cfg.num_tokens(), P = cfg.patch_len, H = cfg.num_heads,
              HD = cfg.head_dim(), M = cfg.mlp_dim, C = cfg.num_classes;
    const double eps = std::ldexp(1.0, -cfg.compute_format.frac_bits);

    std::vector<double> x(samples.size());
    for (size_t i = 0; i < samples.size(); ++i)
        x[i] = (static_cast<int>(samples[i]) - 32768) / 32768.0;

    // tokens[t][d]
    std::vector<std::vector<double>> tokens(T, std::vector<double>(D));
    const auto& ek = at(fw, "embed.kernel");
    const auto& eb = at(fw, "embed.bias");
    int tok0 = 0;
    if (cfg.use_cls_token) {
        tokens[0] = at(fw, "embed.cls");
        tok0 = 1;
    }
    for (int p = 0; p < cfg.num_patches(); ++p) {
        const std::vector<double> patch(x.begin() + p * P, x.begin() + (p + 1) * P);
        tokens[p + tok0] = linear(patch, ek, eb);
    }
    const auto& pos = at(fw, "embed.pos");
    for (int t = 0; t < T; ++t)
        for (int d = 0; d < D; ++d) tokens[t][d] += pos[t * D + d];

    for (int l = 0; l < cfg.num_layers; ++l) {
        const std::string pre = "enc" + std::to_string(l) + ".";

        // Attention sublayer.
        std::vector<std::vector<double>> normed = tokens;
        for (auto& row : normed)
            layer_norm(row, at(fw, pre + "ln1.gamma"), at(fw, pre + "ln1.beta"), eps);

        std::vector<std::vector<double>> q(T), k(T), v(T);
        for (int t = 0; t < T; ++t) {
            q[t] = linear(normed[t], at(fw, pre + "wq.kernel"), at(fw, pre + "wq.bias"));
            k[t] = linear(normed[t], at(fw, pre + "wk.kernel"), at(fw, pre + "wk.bias"));
            v[t] = linear(normed[t], at(fw, pre + "wv.kernel"), at(fw, pre + "wv.bias"));
        }

        const double scale = 1.0 / std::sqrt(static_cast<double>(HD));
        std::vector<std::vector<double>> heads(T, std::vector<double>(D));
        std::vector<double> srow(T);
        for (int h = 0; h < H; ++h) {
            for (int ti = 0; ti < T; ++ti) {
                for (int tu = 0; tu < T; ++tu) {
                    double acc = 0;
                    for (int j = 0; j < HD; ++j) acc += q[ti][h * HD + j] * k[tu][h * HD + j];
                    srow[tu] = acc * scale;
                }
                softmax(srow);
                for (int j = 0; j < HD; ++j) {
                    double acc = 0;
                    for (int tu = 0; tu < T; ++tu) acc += srow[tu] * v[tu][h * HD + j];
                    heads[ti][h * HD + j] = acc;
                }
            }
        }

        for (int t = 0; t < T; ++t) {
            const auto proj =
                linear(heads[t], at(fw, pre + "proj.kernel"), at(fw, pre + "proj.bias"));
            for (int d = 0; d < D; ++d) tokens[t][d] += proj[d];
        }

        // MLP sublayer.
        normed = tokens;
        for (auto& row : normed)
            layer_norm(row, at(fw, pre + "ln2.gamma"), at(fw, pre + "ln2.beta"), eps);
        for (int t = 0; t < T; ++t) {
            auto hid = linear(normed[t], at(fw, pre + "mlp1.kernel"), at(fw, pre + "mlp1.bias"));
            for (auto& u : hid) u = u / (1.0 + std::exp(-u));  // swish
            const auto out =
                linear(hid, at(fw, pre + "mlp2.kernel"), at(fw, pre + "mlp2.bias"));
            for (int d = 0; d < D; ++d) tokens[t][d] += out[d];
        }
        (void)M;
    }

    std::vector<double> pooled;
    if (cfg.use_cls_token) {
        pooled = tokens[0];
    } else {
        pooled.assign(D, 0.0);
        for (int t = 0; t < T; ++t)
            for (int d = 0; d < D; ++d) pooled[d] += tokens[t][d];
        for (double& p : pooled) p /= static_cast<double>(T);
    }

    OracleOutput out;
    out.probs = linear(pooled, at(fw, "head.kernel"), at(fw, "head.bias"));
    softmax(out.probs);
    out.stage = 0;
    for (int c = 1; c < C; ++c)
        if (out.probs[c] > out.probs[out.stage]) out.stage = c;
    return out;
}

std::vector<OracleOutput> reference_outputs(const ModelConfig& cfg, const FloatWeights& fw,
                                            const std::vector<Epoch>& epochs) {
    std::vector<OracleOutput> outs(epochs.size());
    for (size_t i = 0; i < epochs.size(); ++i) outs[i] = reference_infer(cfg, fw, epochs[i]);
    return outs;
}

double exponential_real(double x, int terms) {
    if (terms < alu::kMinTaylorTerms || terms > alu::kMaxTaylorTerms)
        throw std::invalid_argument("exponential_real: terms out of range");
    constexpr double kLn2 = 0.6931471805599453;
    const double z = x / kLn2;
    const double i_part = std::floor(z);
    const double f = z - i_part;
    const double seg = std::floor(f * 16.0);
    const double lo = f - seg / 16.0;
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < terms; ++k) {
        sum += term;
        term *= lo * kLn2 / (k + 1);
    }
    return std::ldexp(std::exp2(seg / 16.0) * sum, static_cast<int>(i_part));
}

std::vector<ExpErrorPoint> exp_error_study(QFormat fmt, double lo, double hi, int grid_points,
                                           int min_terms, int max_terms) {
    if (grid_points < 2 || hi <= lo) throw std::invalid_argument("exp_error_study: bad grid");
    if (min_terms > max_terms) throw std::invalid_argument("exp_error_study: bad term range");
    std::vector<ExpErrorPoint> points;
    for (int t = min_terms; t <= max_terms; ++t) {
        ExpErrorPoint p;
        p.terms = t;
        for (int g = 0; g < grid_points; ++g) {
            const double x = lo + (hi - lo) * g / (grid_points - 1);
            const double exact = std::exp(x);
            const double er = std::fabs(exponential_real(x, t) - exact);
            if (er > p.max_err_real) p.max_err_real = er;
            p.mean_err_real += er;
            const auto q = fx::quantize(x, fmt);
            const auto r = alu::exponential(q.value, t);
            const double ef = std::fabs(r.value.value() - exact);
            if (ef > p.max_err_fixed) p.max_err_fixed = ef;
            p.mean_err_fixed += ef;
        }
        p.mean_err_real /= grid_points;
        p.mean_err_fixed /= grid_points;
        points.push_back(p);
    }
    return points;
}

}  // namespace vitsim
