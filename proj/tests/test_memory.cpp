#include <stdexcept>

#include "doctest.h"
#include "vitsim/memory.hpp"

using namespace vitsim;

namespace {
const QFormat kCompute{18, 21};

MemorySystem make_mem() { return MemorySystem(kCompute, MemoryGeometry{}); }
}  // namespace

TEST_CASE("tensor registration validates its inputs") {
    auto mem = make_mem();
    mem.add_tensor({"a", BankSetKind::Weights, 0, 16, {QFormat{2, 6}, 1}});
    CHECK(mem.has_tensor("a"));
    CHECK(mem.tensor("a").length == 16);
    CHECK_THROWS_AS(mem.tensor("nope"), std::out_of_range);

    // duplicate name, zero length, unnamed
    CHECK_THROWS_AS(mem.add_tensor({"a", BankSetKind::Weights, 64, 4, {QFormat{2, 6}, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(mem.add_tensor({"b", BankSetKind::Weights, 64, 0, {QFormat{2, 6}, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(mem.add_tensor({"", BankSetKind::Weights, 64, 4, {QFormat{2, 6}, 1}}),
                    std::invalid_argument);

    // format must fit the element width
    CHECK_THROWS_AS(mem.add_tensor({"b", BankSetKind::Weights, 64, 4, {QFormat{8, 8}, 1}}),
                    std::invalid_argument);
    // storage may not exceed the compute format's integer or fraction field
    CHECK_THROWS_AS(mem.add_tensor({"b", BankSetKind::Weights, 64, 4, {QFormat{20, 4}, 3}}),
                    std::invalid_argument);
    // base must be element-aligned
    CHECK_THROWS_AS(mem.add_tensor({"b", BankSetKind::Weights, 65, 4, {QFormat{8, 8}, 2}}),
                    std::invalid_argument);
    // capacity
    CHECK_THROWS_AS(mem.add_tensor({"b", BankSetKind::Weights, 31740, 3, {QFormat{8, 8}, 2}}),
                    std::invalid_argument);
}

TEST_CASE("overlap is rejected within a bank set only") {
    auto mem = make_mem();
    mem.add_tensor({"w", BankSetKind::Weights, 0, 16, {QFormat{2, 6}, 1}});
    CHECK_THROWS_AS(mem.add_tensor({"w2", BankSetKind::Weights, 8, 16, {QFormat{2, 6}, 1}}),
                    std::invalid_argument);
    // same addresses, other bank set: fine
    CHECK_NOTHROW(mem.add_tensor({"x", BankSetKind::IntermediateResults, 0, 16,
                                  {QFormat{2, 6}, 1}}));
    // adjacent, no overlap
    CHECK_NOTHROW(mem.add_tensor({"w3", BankSetKind::Weights, 16, 16, {QFormat{2, 6}, 1}}));
}

TEST_CASE("reads widen exactly into the compute format") {
    auto mem = make_mem();
    const auto& t = mem.add_tensor({"t", BankSetKind::IntermediateResults, 0, 8,
                                    {QFormat{1, 7}, 1}});
    const auto q = fx::quantize(-0.0703125, kCompute).value;
    CHECK_FALSE(mem.write(t, 3, q));
    const auto v = mem.read(t, 3);
    CHECK(v.format == kCompute);
    CHECK(v.value() == doctest::Approx(-0.0703125));
    CHECK(v.raw == -9 * (int64_t{1} << 14));  // Q1.7 code -9, fraction widened 7 -> 21

    CHECK_THROWS_AS(mem.read(t, 8), std::out_of_range);
    CHECK_THROWS_AS(mem.write(t, 8, q), std::out_of_range);
    CHECK_THROWS_AS(mem.write(t, 0, fx::zero(QFormat{4, 4})), std::invalid_argument);
}

TEST_CASE("writes truncate to the storage resolution and saturate") {
    auto mem = make_mem();
    const auto& t = mem.add_tensor({"t", BankSetKind::IntermediateResults, 0, 4,
                                    {QFormat{1, 7}, 1}});
    // one compute LSB above a Q1.7 code floors back to that code
    const auto v = fx::from_raw((9 << 14) + 1, kCompute);
    CHECK_FALSE(mem.write(t, 0, v));
    CHECK(mem.read(t, 0).value() == doctest::Approx(0.0703125));
    // out of range: clamps to the symmetric max and reports saturation
    CHECK(mem.write(t, 1, fx::quantize(2.0, kCompute).value));
    CHECK(mem.read(t, 1).value() == doctest::Approx(127.0 / 128.0));
    CHECK(mem.write(t, 2, fx::quantize(-2.0, kCompute).value));
    CHECK(mem.read(t, 2).value() == doctest::Approx(-127.0 / 128.0));
}

TEST_CASE("consecutive words interleave across banks") {
    auto mem = make_mem();
    mem.add_tensor({"s", BankSetKind::IntermediateResults, 0, 4, {QFormat{1, 7}, 1}});
    mem.add_tensor({"d", BankSetKind::IntermediateResults, 4, 2, {QFormat{8, 8}, 2}});

    // single-width: element i sits at word i, bank i mod 4
    const auto& s = mem.tensor("s");
    for (uint32_t i = 0; i < 4; ++i)
        mem.write(s, i, fx::from_raw(int64_t(i + 1) << 14, kCompute));
    for (int b = 0; b < 4; ++b)
        CHECK(mem.bank_bytes(BankSetKind::IntermediateResults, b)[0] == b + 1);

    // double-width: high byte then low byte in adjacent banks
    const auto& d = mem.tensor("d");
    const auto val = fx::from_raw(int64_t{0x1234} << 13, kCompute);  // Q8.8 code 0x1234
    mem.write(d, 0, val);
    CHECK(mem.bank_bytes(BankSetKind::IntermediateResults, 0)[1] == 0x12);  // word 4
    CHECK(mem.bank_bytes(BankSetKind::IntermediateResults, 1)[1] == 0x34);  // word 5
    CHECK(mem.read(d, 0).raw == val.raw);

    // negative codes survive the round trip through the top byte's sign
    mem.write(d, 1, fx::quantize(-1.5, kCompute).value);
    CHECK(mem.read(d, 1).value() == doctest::Approx(-1.5));
}

TEST_CASE("weight banks default to the chip geometry") {
    auto mem = make_mem();
    const auto fp = mem.footprint();
    CHECK(fp.weights_words_total == 31744);   // 2 banks x 15872
    CHECK(fp.inter_words_total == 57344);     // 4 banks x 14336
    CHECK(fp.weights_words_used == 0);
    mem.add_tensor({"w", BankSetKind::Weights, 0, 100, {QFormat{8, 8}, 2}});
    CHECK(mem.footprint().weights_words_used == 200);
}
