#include "vitsim/memory.hpp"

#include <algorithm>
#include <stdexcept>

namespace vitsim {

const char* bank_set_name(BankSetKind k) {
    return k == BankSetKind::Weights ? "weights" : "intermediate";
}

BankSetKind parse_bank_set(std::string_view s) {
    if (s == "weights") return BankSetKind::Weights;
    if (s == "intermediate") return BankSetKind::IntermediateResults;
    throw std::invalid_argument("unknown bank set '" + std::string(s) + "'");
}

MemorySystem::MemorySystem(QFormat compute_fmt, MemoryGeometry geom)
    : compute_fmt_(compute_fmt), geom_(geom) {
    weight_banks_.assign(geom_.weights_banks, std::vector<uint8_t>(geom_.weights_words_per_bank, 0));
    inter_banks_.assign(geom_.inter_banks, std::vector<uint8_t>(geom_.inter_words_per_bank, 0));
}

const TensorDescriptor& MemorySystem::add_tensor(const TensorDescriptor& desc) {
    if (desc.name.empty()) throw std::invalid_argument("tensor needs a name");
    if (by_name_.count(desc.name)) throw std::invalid_argument("duplicate tensor '" + desc.name + "'");
    if (desc.length == 0) throw std::invalid_argument("tensor '" + desc.name + "' has zero length");
    const auto& sf = desc.storage;
    if (sf.word_count < 1 || sf.word_count > 8 || sf.fmt.total_bits() > 8 * sf.word_count)
        throw std::invalid_argument("tensor '" + desc.name + "': format " + sf.fmt.str() +
                                    " does not fit " + std::to_string(sf.word_count) + " word(s)");
    // Widening to the compute format must be exact.
    if (sf.fmt.int_bits > compute_fmt_.int_bits || sf.fmt.frac_bits > compute_fmt_.frac_bits)
        throw std::invalid_argument("tensor '" + desc.name + "': storage " + sf.fmt.str() +
                                    " exceeds compute format " + compute_fmt_.str());
    if (desc.base_word % sf.word_count != 0)
        throw std::invalid_argument("tensor '" + desc.name + "': base not aligned to element width");
    const uint64_t end = static_cast<uint64_t>(desc.base_word) + desc.footprint_words();
    if (end > geom_.words(desc.bank_set))
        throw std::invalid_argument("tensor '" + desc.name + "' exceeds " +
                                    std::string(bank_set_name(desc.bank_set)) + " capacity (" +
                                    std::to_string(end) + " > " +
                                    std::to_string(geom_.words(desc.bank_set)) + " words)");
    for (const auto& t : tensors_) {
        if (t.bank_set != desc.bank_set) continue;
        const uint64_t t_end = static_cast<uint64_t>(t.base_word) + t.footprint_words();
        if (desc.base_word < t_end && t.base_word < end)
            throw std::invalid_argument("tensor '" + desc.name + "' overlaps '" + t.name + "'");
    }
    tensors_.push_back(desc);
    by_name_.emplace(desc.name, tensors_.size() - 1);
    return tensors_.back();
}

const TensorDescriptor& MemorySystem::tensor(std::string_view name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end())
        throw std::out_of_range("no tensor named '" + std::string(name) + "'");
    return tensors_[it->second];
}

bool MemorySystem::has_tensor(std::string_view name) const { return by_name_.count(name) > 0; }

MemorySystem::WordRef MemorySystem::locate(BankSetKind k, uint32_t word_addr) const {
    const int nbanks = geom_.banks(k);
    return {static_cast<int>(word_addr % nbanks), word_addr / nbanks};
}

FixedValue MemorySystem::read(const TensorDescriptor& d, uint32_t index) const {
    if (index >= d.length)
        throw std::out_of_range("read past end of tensor '" + d.name + "'");
    const auto& banks = d.bank_set == BankSetKind::Weights ? weight_banks_ : inter_banks_;
    const uint32_t word = d.base_word + index * d.storage.word_count;
    int64_t raw = 0;
    for (int i = 0; i < d.storage.word_count; ++i) {
        const auto [bank, off] = locate(d.bank_set, word + i);
        raw = (raw << 8) | banks[bank][off];
    }
    // Sign-extend from the element's byte width; stored codes already carry
    // the sign in their top byte.
    const int bits = 8 * d.storage.word_count;
    raw = (raw << (64 - bits)) >> (64 - bits);
    // Exact widening into the compute format.
    const int shift = compute_fmt_.frac_bits - d.storage.fmt.frac_bits;
    return {raw << shift, compute_fmt_};
}

bool MemorySystem::write(const TensorDescriptor& d, uint32_t index, FixedValue v) {
    if (index >= d.length)
        throw std::out_of_range("write past end of tensor '" + d.name + "'");
    if (!(v.format == compute_fmt_))
        throw std::invalid_argument("write to '" + d.name + "': value not in compute format");
    auto& banks = d.bank_set == BankSetKind::Weights ? weight_banks_ : inter_banks_;
    const auto narrowed = fx::cast(v, d.storage.fmt);
    const uint32_t word = d.base_word + index * d.storage.word_count;
    uint64_t raw = static_cast<uint64_t>(narrowed.value.raw);
    for (int i = d.storage.word_count - 1; i >= 0; --i) {
        const auto [bank, off] = locate(d.bank_set, word + i);
        banks[bank][off] = static_cast<uint8_t>(raw & 0xff);
        raw >>= 8;
    }
    return narrowed.overflow;
}

const std::vector<uint8_t>& MemorySystem::bank_bytes(BankSetKind k, int bank) const {
    const auto& banks = k == BankSetKind::Weights ? weight_banks_ : inter_banks_;
    return banks.at(static_cast<size_t>(bank));
}

std::vector<uint8_t>& MemorySystem::bank_bytes_mut(BankSetKind k, int bank) {
    auto& banks = k == BankSetKind::Weights ? weight_banks_ : inter_banks_;
    return banks.at(static_cast<size_t>(bank));
}

FootprintReport MemorySystem::footprint() const {
    FootprintReport r;
    r.weights_words_total = geom_.words(BankSetKind::Weights);
    r.inter_words_total = geom_.words(BankSetKind::IntermediateResults);
    for (const auto& t : tensors_) {
        if (t.bank_set == BankSetKind::Weights) r.weights_words_used += t.footprint_words();
        else r.inter_words_used += t.footprint_words();
    }
    return r;
}

}  // namespace vitsim
