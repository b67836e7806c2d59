//! Published upper bounds on lowered stream length, per routine.
//!
//! A bound counts every micro-op of an R-type lowering, including its two
//! mask ops. When the destination aliases a source, the copy that protects
//! the source costs `alias_extra` more ops.

use std::fmt;

use super::isa::{DType, Opcode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutineBudget {
    pub opcode: Opcode,
    pub dtype: DType,
    pub max_ops: usize,
    pub alias_extra: usize,
    pub formula: &'static str,
}

impl RoutineBudget {
    pub fn limit(&self, aliased: bool) -> usize {
        self.max_ops + if aliased { self.alias_extra } else { 0 }
    }
}

impl fmt::Display for RoutineBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<5} {:<7} {:>6}  (+{} aliased)  {}",
            self.opcode.name(),
            self.dtype.name(),
            self.max_ops,
            self.alias_extra,
            self.formula
        )
    }
}

/// Budget of one routine at word width `n`, `None` if unsupported.
pub fn budget(opcode: Opcode, dtype: DType, n: usize) -> Option<RoutineBudget> {
    use Opcode::*;
    if !opcode.supports(dtype) {
        return None;
    }
    let add = 12 * n + 2;
    let mux = 6 * n + 2;
    let (max_ops, formula) = match (dtype, opcode) {
        (_, Not) => (4, "2 + masks"),
        (_, Or) => (6, "4 + masks"),
        (_, And) => (8, "6 + masks"),
        (_, Xor) => (12, "10 + masks"),
        (_, Mux) => (mux, "6N+2"),
        (DType::Int32, Add | Sub) => (add, "9N+3N+2"),
        (DType::Int32, Mul) => (n * add + 4 * n, "N*add+4N"),
        (DType::Int32, Div | Mod) => (n * (add + mux) + 6 * n, "N*(sub+mux)+6N"),
        (DType::Int32, Neg | Sign) => (5 * n + 2, "5N+2"),
        (DType::Int32, Lt | Le | Gt | Ge | Eq) => (8 * n + 2, "8N+2"),
        (DType::Int32, Zero) => (3 * n + 2, "3N+2"),
        (DType::Int32, Abs) => (9 * n + 2, "9N+2"),
        (DType::Float32, Add | Sub) => (140 * n + 2, "140N+2"),
        (DType::Float32, Mul) => (n * add + 4 * n, "N*add(int32)+4N"),
        (DType::Float32, Div) => (n * (add + mux) + 6 * n, "N*(sub(int32)+mux)+6N"),
        (DType::Float32, Neg) => (6 * n + 2, "6N+2"),
        (DType::Float32, Lt | Gt) => (21 * n + 2, "21N+2"),
        (DType::Float32, Le | Ge) => (28 * n + 2, "28N+2"),
        (DType::Float32, Eq) => (14 * n + 2, "14N+2"),
        (DType::Float32, Sign) => (4 * n + 2, "4N+2"),
        (DType::Float32, Zero | Abs) => (3 * n + 2, "3N+2"),
        (DType::Float32, Mod) => return None,
    };
    Some(RoutineBudget { opcode, dtype, max_ops, alias_extra: 4, formula })
}

/// Every supported routine's budget.
pub fn budget_table(n: usize) -> Vec<RoutineBudget> {
    [DType::Int32, DType::Float32]
        .into_iter()
        .flat_map(|d| Opcode::ALL.into_iter().filter_map(move |o| budget(o, d, n)))
        .collect()
}
