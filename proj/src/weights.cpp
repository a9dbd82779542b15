#include "vitsim/weights.hpp"

#include <fstream>
#include <random>

#include "json.hpp"

namespace vitsim {

using nlohmann::json;

namespace {

double next_uniform(std::mt19937_64& rng) {
    // 53 random mantissa bits -> [0, 1).
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

FloatWeights generate_float_weights(const ModelConfig& cfg, uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    FloatWeights fw;
    for (const auto& t : build_tensor_map(cfg)) {
        if (t.bank_set != BankSetKind::Weights) continue;
        std::vector<double> vals(t.length);
        for (auto& v : vals) v = (2.0 * next_uniform(rng) - 1.0) * scale;
        fw.tensors.emplace(t.name, std::move(vals));
    }
    return fw;
}

uint64_t load_float_weights(MemorySystem& mem, const FloatWeights& fw) {
    uint64_t saturated = 0;
    for (const auto& t : mem.tensors()) {
        if (t.bank_set != BankSetKind::Weights) continue;
        const auto it = fw.tensors.find(t.name);
        if (it == fw.tensors.end())
            throw std::invalid_argument("no float weights for tensor '" + t.name + "'");
        if (it->second.size() != t.length)
            throw std::invalid_argument("float weights for '" + t.name + "' have wrong length");
        for (uint32_t i = 0; i < t.length; ++i) {
            const auto q = fx::quantize(it->second[i], mem.compute_format());
            const bool sat = mem.write(t, i, q.value);
            if (sat || q.overflow) ++saturated;
        }
    }
    return saturated;
}

FloatWeights dequantize_weights(const MemorySystem& mem) {
    FloatWeights fw;
    for (const auto& t : mem.tensors()) {
        if (t.bank_set != BankSetKind::Weights) continue;
        std::vector<double> vals(t.length);
        for (uint32_t i = 0; i < t.length; ++i) vals[i] = mem.read(t, i).value();
        fw.tensors.emplace(t.name, std::move(vals));
    }
    return fw;
}

WeightFile snapshot_weights(const ModelConfig& cfg, const MemorySystem& mem, uint64_t seed,
                            double scale) {
    WeightFile wf;
    wf.config = cfg;
    wf.geometry = mem.geometry();
    wf.tensor_map = mem.tensors();
    wf.seed = seed;
    wf.scale = scale;
    for (int b = 0; b < wf.geometry.weights_banks; ++b)
        wf.weight_banks.push_back(mem.bank_bytes(BankSetKind::Weights, b));
    return wf;
}

namespace {

json descriptor_to_json(const TensorDescriptor& t) {
    json j;
    j["name"] = t.name;
    j["bank_set"] = bank_set_name(t.bank_set);
    j["base"] = t.base_word;
    j["length"] = t.length;
    j["format"] = t.storage.fmt.str();
    j["words_per_element"] = t.storage.word_count;
    return j;
}

TensorDescriptor descriptor_from_json(const json& j) {
    TensorDescriptor t;
    t.name = j.at("name").get<std::string>();
    t.bank_set = parse_bank_set(j.at("bank_set").get<std::string>());
    t.base_word = j.at("base").get<uint32_t>();
    t.length = j.at("length").get<uint32_t>();
    t.storage.fmt = QFormat::parse(j.at("format").get<std::string>());
    t.storage.word_count = j.at("words_per_element").get<int>();
    return t;
}

constexpr const char* kMagic = "VITWGT1";

}  // namespace

void write_weight_file(const std::string& path, const WeightFile& wf) {
    json j;
    j["config"] = json::parse(wf.config.to_json());
    j["geometry"] = {{"weights_banks", wf.geometry.weights_banks},
                     {"weights_words_per_bank", wf.geometry.weights_words_per_bank},
                     {"inter_banks", wf.geometry.inter_banks},
                     {"inter_words_per_bank", wf.geometry.inter_words_per_bank}};
    j["generator"] = {{"seed", wf.seed}, {"scale", wf.scale}};
    json tensors = json::array();
    for (const auto& t : wf.tensor_map) tensors.push_back(descriptor_to_json(t));
    j["tensors"] = std::move(tensors);
    const std::string header = j.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight file '" + path + "'");
    out << kMagic << ' ' << header.size() << '\n';
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& bank : wf.weight_banks)
        out.write(reinterpret_cast<const char*>(bank.data()),
                  static_cast<std::streamsize>(bank.size()));
    if (!out) throw std::runtime_error("short write to weight file '" + path + "'");
}

WeightFile read_weight_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file '" + path + "'");
    std::string magic;
    size_t header_len = 0;
    in >> magic >> header_len;
    if (magic != kMagic) throw std::runtime_error("'" + path + "' is not a weight file");
    in.ignore(1, '\n');
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("truncated weight file header in '" + path + "'");

    json j;
    try {
        j = json::parse(header);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("weight file header: " + std::string(e.what()));
    }
    WeightFile wf;
    wf.config = ModelConfig::from_json(j.at("config").dump());
    const auto& g = j.at("geometry");
    wf.geometry.weights_banks = g.at("weights_banks").get<int>();
    wf.geometry.weights_words_per_bank = g.at("weights_words_per_bank").get<uint32_t>();
    wf.geometry.inter_banks = g.at("inter_banks").get<int>();
    wf.geometry.inter_words_per_bank = g.at("inter_words_per_bank").get<uint32_t>();
    if (j.contains("generator")) {
        wf.seed = j["generator"].value("seed", uint64_t{0});
        wf.scale = j["generator"].value("scale", 0.0);
    }
    for (const auto& tj : j.at("tensors")) wf.tensor_map.push_back(descriptor_from_json(tj));

    for (int b = 0; b < wf.geometry.weights_banks; ++b) {
        std::vector<uint8_t> bank(wf.geometry.weights_words_per_bank);
        in.read(reinterpret_cast<char*>(bank.data()), static_cast<std::streamsize>(bank.size()));
        if (!in) throw std::runtime_error("truncated weight payload in '" + path + "'");
        wf.weight_banks.push_back(std::move(bank));
    }
    return wf;
}

std::unique_ptr<Engine> make_engine(const WeightFile& wf) {
    auto eng = std::make_unique<Engine>(wf.config, wf.tensor_map, wf.geometry);
    if (static_cast<int>(wf.weight_banks.size()) != wf.geometry.weights_banks)
        throw std::runtime_error("weight file payload bank count mismatch");
    for (int b = 0; b < wf.geometry.weights_banks; ++b) {
        auto& dst = eng->memory().bank_bytes_mut(BankSetKind::Weights, b);
        if (wf.weight_banks[b].size() != dst.size())
            throw std::runtime_error("weight file bank size mismatch");
        dst = wf.weight_banks[b];
    }
    return eng;
}

}  // namespace vitsim
