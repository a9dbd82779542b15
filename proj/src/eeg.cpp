#include "vitsim/eeg.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <stdexcept>

namespace vitsim {

namespace {

bool has_text_extension(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return false;
    const std::string ext = path.substr(dot + 1);
    return ext == "csv" || ext == "txt";
}

std::vector<Epoch> split_epochs(std::vector<uint16_t>&& samples, int spe,
                                const std::string& path) {
    if (samples.empty()) throw std::runtime_error("'" + path + "': no samples");
    if (samples.size() % static_cast<size_t>(spe) != 0)
        throw std::runtime_error("'" + path + "': " + std::to_string(samples.size()) +
                                 " samples is not a whole number of epochs of " +
                                 std::to_string(spe));
    std::vector<Epoch> epochs;
    epochs.reserve(samples.size() / spe);
    for (size_t i = 0; i < samples.size(); i += spe)
        epochs.emplace_back(samples.begin() + static_cast<long>(i),
                            samples.begin() + static_cast<long>(i + spe));
    return epochs;
}

std::vector<Epoch> load_csv(const std::string& path, int spe) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<uint16_t> samples;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        uint32_t v = 0;
        const auto r = std::from_chars(line.data(), line.data() + line.size(), v);
        if (r.ec != std::errc{} || r.ptr != line.data() + line.size() || v > 65535)
            throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) +
                                     ": expected a value in [0, 65535], got '" + line + "'");
        samples.push_back(static_cast<uint16_t>(v));
    }
    return split_epochs(std::move(samples), spe, path);
}

std::vector<Epoch> load_binary(const std::string& path, int spe) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() % 2 != 0)
        throw std::runtime_error("'" + path + "': odd byte count " +
                                 std::to_string(bytes.size()) + ", expected uint16 pairs");
    std::vector<uint16_t> samples(bytes.size() / 2);
    for (size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    return split_epochs(std::move(samples), spe, path);
}

}  // namespace

std::vector<Epoch> load_epochs(const std::string& path, int samples_per_epoch) {
    return has_text_extension(path) ? load_csv(path, samples_per_epoch)
                                    : load_binary(path, samples_per_epoch);
}

void write_epochs_csv(const std::string& path, const std::vector<Epoch>& epochs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& e : epochs)
        for (const uint16_t v : e) out << v << '\n';
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_epochs_binary(const std::string& path, const std::vector<Epoch>& epochs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& e : epochs) {
        for (const uint16_t v : e) {
            const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
            out.write(b, 2);
        }
    }
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

std::vector<Epoch> generate_epochs(uint64_t seed, int count, int samples_per_epoch) {
    std::mt19937_64 rng(seed);
    std::vector<Epoch> epochs(count);
    for (auto& e : epochs) {
        e.resize(samples_per_epoch);
        for (auto& s : e) s = static_cast<uint16_t>(rng() & 0xffff);
    }
    return epochs;
}

}  // namespace vitsim
