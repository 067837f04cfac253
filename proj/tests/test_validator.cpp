#include <gtest/gtest.h>

#include "support.hpp"
#include "wmutate/builder.hpp"
#include "wmutate/validator.hpp"

namespace {

using namespace wmutate;
using namespace wmutate::ops;

ValidationReport check(std::vector<ValType> results, std::vector<ValType> locals, std::vector<Instruction> code) {
  ModuleBuilder b;
  b.memory(1);
  b.global(ValType::I32, false, 0);
  b.func({}, std::move(results), std::move(locals), std::move(code));
  return static_validate(b.build());
}

TEST(Validator, CorpusIsValid) {
  for (const auto& p : wmutate::testing::corpus()) EXPECT_TRUE(static_validate(p.module).ok()) << p.name;
}

TEST(Validator, AcceptsWellTypedBody) {
  EXPECT_TRUE(check({ValType::I32}, {ValType::I32}, {i32(1), i32(2), op(Opcode::I32Add), tee(0)}).ok());
}

TEST(Validator, RejectsOperandTypeMismatch) {
  const auto r = check({ValType::I32}, {}, {i32(1), i64(2), op(Opcode::I32Add)});
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.to_string().empty());
}

TEST(Validator, RejectsStackUnderflow) { EXPECT_FALSE(check({}, {}, {op(Opcode::Drop)}).ok()); }

TEST(Validator, RejectsLeftoverValues) { EXPECT_FALSE(check({}, {}, {i32(1)}).ok()); }

TEST(Validator, RejectsUnknownLocal) { EXPECT_FALSE(check({ValType::I32}, {}, {get(3)}).ok()); }

TEST(Validator, RejectsWriteToImmutableGlobal) { EXPECT_FALSE(check({}, {}, {i32(1), gset(0)}).ok()); }

TEST(Validator, RejectsBranchDepthOutOfRange) { EXPECT_FALSE(check({}, {}, {block(), br(2), end()}).ok()); }

TEST(Validator, UnreachableMakesStackPolymorphic) {
  EXPECT_TRUE(check({ValType::I64}, {}, {op(Opcode::Unreachable), op(Opcode::I64Add)}).ok());
}

TEST(Validator, IfWithResultNeedsElse) {
  EXPECT_FALSE(check({ValType::I32}, {}, {i32(1), if_(ValType::I32), i32(2), end()}).ok());
  EXPECT_TRUE(check({ValType::I32}, {},
                    {i32(1), if_(ValType::I32), i32(2), Instruction::simple(Opcode::Else), i32(3), end()})
                  .ok());
}

TEST(Validator, MisalignedMemoryAccessIsRejected) {
  EXPECT_FALSE(check({ValType::I32}, {}, {i32(0), Instruction::mem(Opcode::I32Load, 3, 0)}).ok());
}

TEST(Validator, ExportOfMissingFunction) {
  ModuleBuilder b;
  b.export_func("f", 4);
  EXPECT_FALSE(static_validate(b.build()).ok());
}

TEST(Validator, DataOutsideMissingMemory) {
  WasmModule m;
  DataSegment d;
  d.offset.instr = Instruction::i32_const(0);
  d.bytes = {1};
  m.data.push_back(d);
  EXPECT_FALSE(static_validate(m).ok());
}

}  // namespace
