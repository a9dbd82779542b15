#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vitsim/fixedpoint.hpp"

namespace vitsim {

enum class BankSetKind : uint8_t { Weights, IntermediateResults };
const char* bank_set_name(BankSetKind k);
BankSetKind parse_bank_set(std::string_view s);

// On-chip storage format of one tensor. Words are 8 bits; an element spans
// word_count consecutive word addresses, most significant byte first.
// Consecutive addresses interleave across banks, so the bytes of a single- or
// double-width element land in distinct banks. The chip uses 1 (single) or
// 2 (double) words per element; study variants may widen elements up to 8
// words to host the compute format directly.
struct StorageFormat {
    QFormat fmt{1, 7};
    int word_count = 1;

    static StorageFormat of(QFormat f) {
        return {f, (f.total_bits() + 7) / 8};
    }
};

struct TensorDescriptor {
    std::string name;
    BankSetKind bank_set = BankSetKind::Weights;
    uint32_t base_word = 0;  // flat word address within the bank set
    uint32_t length = 0;     // elements
    StorageFormat storage;

    uint32_t footprint_words() const { return length * static_cast<uint32_t>(storage.word_count); }
};

struct MemoryGeometry {
    int weights_banks = 2;
    uint32_t weights_words_per_bank = 15872;
    int inter_banks = 4;
    uint32_t inter_words_per_bank = 14336;

    uint32_t words(BankSetKind k) const {
        return k == BankSetKind::Weights ? weights_words_per_bank * weights_banks
                                         : inter_words_per_bank * inter_banks;
    }
    int banks(BankSetKind k) const {
        return k == BankSetKind::Weights ? weights_banks : inter_banks;
    }
};

struct FootprintReport {
    uint32_t weights_words_used = 0;
    uint32_t weights_words_total = 0;
    uint32_t inter_words_used = 0;
    uint32_t inter_words_total = 0;
};

// Two banked SRAM sets plus the tensor registry. Every access goes through a
// descriptor; reads widen into the compute format (always exact), writes
// narrow with truncation and symmetric saturation. One access costs one
// cycle regardless of width (the bytes of an element live in distinct banks).
class MemorySystem {
  public:
    MemorySystem(QFormat compute_fmt, MemoryGeometry geom = {});

    const QFormat& compute_format() const { return compute_fmt_; }
    const MemoryGeometry& geometry() const { return geom_; }

    // Validates format compatibility, capacity, alignment, and overlap
    // against every tensor already registered. Returned references (also the
    // ones from tensor()) are invalidated by later add_tensor calls; look
    // descriptors up once registration is complete, or copy them.
    const TensorDescriptor& add_tensor(const TensorDescriptor& desc);
    const TensorDescriptor& tensor(std::string_view name) const;
    bool has_tensor(std::string_view name) const;
    const std::vector<TensorDescriptor>& tensors() const { return tensors_; }

    FixedValue read(const TensorDescriptor& d, uint32_t index) const;
    // Returns true when the stored value saturated.
    bool write(const TensorDescriptor& d, uint32_t index, FixedValue v);

    // Raw storage of one bank, for weight-file serialization.
    const std::vector<uint8_t>& bank_bytes(BankSetKind k, int bank) const;
    std::vector<uint8_t>& bank_bytes_mut(BankSetKind k, int bank);

    FootprintReport footprint() const;

  private:
    struct WordRef {
        int bank;
        uint32_t offset;
    };
    WordRef locate(BankSetKind k, uint32_t word_addr) const;

    QFormat compute_fmt_;
    MemoryGeometry geom_;
    std::vector<std::vector<uint8_t>> weight_banks_;
    std::vector<std::vector<uint8_t>> inter_banks_;
    std::vector<TensorDescriptor> tensors_;
    std::map<std::string, size_t, std::less<>> by_name_;
};

}  // namespace vitsim
