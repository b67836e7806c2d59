//! Bit-accurate simulation of a memristive processing-in-memory architecture,
//! a host driver that lowers thread-level instructions to micro-ops, and a
//! tensor library on top.
//!
//! ```
//! use pim_core::{ArchConfig, DType, Session};
//! # fn main() -> Result<(), pim_core::TensorError> {
//! let mut s = Session::new(&ArchConfig::default());
//! let x = s.zeros(8, DType::Float32)?;
//! s.set_f32(x, 2, 2.5)?;
//! s.set_f32(x, 4, 2.25)?;
//! let even = x.slice(0, usize::MAX, 2);
//! assert_eq!(s.sum_f32(even)?, 4.75);
//! s.sort(even)?;
//! assert_eq!(s.to_f32(even)?, [0.0, 0.0, 2.25, 2.5]);
//!
//! let y = s.from_f32(&[0.5; 8])?;
//! let xy = s.mul(x, y)?;
//! let z = s.add(xy, x)?;
//! let (_, cycles) = s.profile(|s| s.add(z, 1.0f32))?;
//! assert!(cycles.total() > 0);
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod driver;
pub mod geometry;
pub mod microop;
pub mod sim;
pub mod tensor;

pub use geometry::{ArchConfig, ColumnAddress, GeometryError};
pub use microop::{decode, encode, HGate, HLogic, MicroOp, OpKind, RangeMask, VGate};
pub use sim::{MemoryState, ProfileCounters, SimError};
pub use driver::{DType, Driver, DriverError, MacroInstruction, Opcode};
pub use tensor::{Operand, ReduceOp, Session, Tensor, TensorError, View};
pub use bench::{run_benchmark, throughput, BenchReport, BenchSpec};
