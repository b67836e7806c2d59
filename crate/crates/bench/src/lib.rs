//! Fixtures shared by the criterion benchmarks under `benches/`.

use pim_core::{ArchConfig, DType, MacroInstruction, MemoryState, Opcode, RangeMask};

/// `opcode` over every user row of every crossbar, `r2 = op(r0, r1)`
/// (mux reads `r3` as its third operand).
pub fn full_memory(cfg: &ArchConfig, opcode: Opcode, dtype: DType) -> MacroInstruction {
    let srcs = [0, 1, 3][..opcode.arity()].to_vec();
    MacroInstruction::RType {
        opcode,
        dtype,
        dst: 2,
        srcs,
        warp_mask: RangeMask::first(cfg.num_crossbars),
        thread_mask: RangeMask::first(cfg.user_rows()),
    }
}

/// Memory with a deterministic pseudo-random pattern in every cell.
pub fn scrambled_memory(cfg: &ArchConfig) -> MemoryState {
    let mut mem = MemoryState::new(cfg);
    let mut x = 0x9E37_79B9_7F4A_7C15u64;
    mem.fill_with(|_, _, _| {
        // xorshift64
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    });
    mem
}
