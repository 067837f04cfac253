#include <gtest/gtest.h>

#include "support.hpp"
#include "wmutate/builder.hpp"
#include "wmutate/codec.hpp"
#include "wmutate/mutator.hpp"

namespace {

using namespace wmutate;
using wmutate::testing::corpus;

Bytes header() { return Bytes(std::begin(kWasmHeader), std::end(kWasmHeader)); }

TEST(Codec, EmptyModule) {
  const WasmModule m = parse_module(header());
  EXPECT_TRUE(m.functions.empty());
  EXPECT_EQ(encode_module(m), header());
}

TEST(Codec, CorpusRoundTrips) {
  ASSERT_GE(corpus().size(), 10u);
  for (const auto& p : corpus()) {
    const Bytes once = encode_module(p.module);
    const WasmModule again = parse_module(once);
    WasmModule expected = p.module;
    normalize_layout(expected);
    EXPECT_EQ(again, expected) << p.name;
    EXPECT_EQ(encode_module(again), once) << p.name;
  }
}

TEST(Codec, MutatedModulesRoundTrip) {
  for (const auto& p : corpus()) {
    MutationConfig cfg;
    cfg.seed = 11;
    Rng rng(cfg.seed);
    WasmModule cur = p.module;
    for (int i = 0; i < 40; ++i) {
      cur = mutate(cur, cfg, rng).variant;
      const Bytes b = encode_module(cur);
      ASSERT_EQ(parse_module(b), cur) << p.name << " step " << i;
    }
  }
}

TEST(Codec, BuilderModuleRoundTrips) {
  ModuleBuilder b;
  const auto print = b.import_func("env", "println", {ValType::I32}, {});
  b.memory(1, 2);
  b.table(2);
  const auto g = b.global(ValType::I64, true, 42);
  using namespace ops;
  const auto f = b.func({}, {}, {ValType::I32, ValType::I32, ValType::F64},
                        {i32(-5), set(0), gget(g), op(Opcode::I32WrapI64), call(print)});
  b.export_func("_start", f);
  b.elem(0, {f});
  b.data(8, {1, 2, 3});
  b.custom("name", {0x00, 0x01}, SectionId::Export);
  const WasmModule m = b.build();
  const Bytes bytes = encode_module(m);
  WasmModule expected = m;
  normalize_layout(expected);
  EXPECT_EQ(parse_module(bytes), expected);
}

TEST(Codec, RejectsBadMagic) {
  Bytes b = header();
  b[0] = 0x01;
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, RejectsBadVersion) {
  Bytes b = header();
  b[4] = 0x02;
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, RejectsTruncatedSection) {
  Bytes b = header();
  b.insert(b.end(), {0x01, 0x05, 0x01, 0x60});
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, RejectsUnknownSection) {
  Bytes b = header();
  b.insert(b.end(), {0x0D, 0x00});
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, RejectsOutOfOrderSections) {
  Bytes b = header();
  b.insert(b.end(), {0x03, 0x01, 0x00, 0x01, 0x01, 0x00});
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, RejectsFunctionCodeCountMismatch) {
  Bytes b = header();
  // type () -> (), one function declared, no code section
  b.insert(b.end(), {0x01, 0x04, 0x01, 0x60, 0x00, 0x00, 0x03, 0x02, 0x01, 0x00});
  EXPECT_THROW(parse_module(b), MalformedBinary);
}

TEST(Codec, PostMvpOpcodeIsUnsupported) {
  Bytes b = header();
  b.insert(b.end(), {0x01, 0x04, 0x01, 0x60, 0x00, 0x00, 0x03, 0x02, 0x01, 0x00});
  // body: no locals, 0xFC 0x00 (saturating truncation prefix), end
  b.insert(b.end(), {0x0A, 0x06, 0x01, 0x04, 0x00, 0xFC, 0x00, 0x0B});
  EXPECT_THROW(parse_module(b), UnsupportedFeature);
}

TEST(Codec, MalformedReportsOffset) {
  Bytes b = header();
  b.push_back(0x01);
  try {
    parse_module(b);
    FAIL();
  } catch (const MalformedBinary& e) {
    EXPECT_GE(e.offset(), 8u);
  }
}

TEST(Codec, EncodingIsMinimal) {
  ModuleBuilder b;
  using namespace ops;
  const auto f = b.func({}, {ValType::I32}, {}, {i32(-1)});
  b.export_func("f", f);
  const Bytes bytes = encode_module(b.build());
  // i32.const -1 must be the single byte 0x7F
  const Bytes needle{0x41, 0x7F, 0x0B};
  EXPECT_NE(std::search(bytes.begin(), bytes.end(), needle.begin(), needle.end()), bytes.end());
}

TEST(Codec, CustomSectionsKeepPosition) {
  ModuleBuilder b;
  b.custom("first", {1}, SectionId::Custom);
  b.type({}, {});
  b.custom("after-type", {2}, SectionId::Type);
  const Bytes bytes = encode_module(b.build());
  const WasmModule m = parse_module(bytes);
  ASSERT_EQ(m.customs.size(), 2u);
  EXPECT_EQ(m.customs[0].name, "first");
  EXPECT_EQ(m.customs[0].after, SectionId::Custom);
  EXPECT_EQ(m.customs[1].after, SectionId::Type);
  EXPECT_EQ(bytes[8], 0x00);
}

}  // namespace
