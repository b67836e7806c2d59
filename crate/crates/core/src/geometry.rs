//! Architecture parameters and address arithmetic.
//!
//! A row of `w` cells is divided into `N` partitions of `w / N` cells each.
//! An `N`-bit word lives at one intra-partition index with bit `j` stored in
//! partition `j`, so the columns of a word form a stride-`w / N` progression.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("partition {partition} out of range (N = {word_n})")]
    PartitionOutOfRange { partition: usize, word_n: usize },
    #[error("intra-partition index {index} out of range (w/N = {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("column {column} out of range (w = {cols})")]
    ColumnOutOfRange { column: usize, cols: usize },
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config io: {0}")]
    Io(String),
}

/// Physical and ISA-level parameters of the simulated memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchConfig {
    /// Crossbar rows (threads per warp).
    pub rows_h: usize,
    /// Crossbar columns.
    pub cols_w: usize,
    /// Word size, equal to the partition count.
    pub word_n: usize,
    /// Number of crossbars (warps); a power of four.
    pub num_crossbars: usize,
    pub clock_hz: u64,
    /// Registers visible to the ISA; the remaining intra-partition indices
    /// are driver scratch.
    pub user_regs: usize,
    /// Rows at the bottom of every crossbar reserved for the driver.
    pub scratch_rows: usize,
    /// Reject NOR/NOT whose output cell was not initialized to 1.
    pub strict_init: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            rows_h: 1024,
            cols_w: 1024,
            word_n: 32,
            num_crossbars: 16,
            clock_hz: 300_000_000,
            user_regs: 16,
            scratch_rows: 2,
            strict_init: true,
        }
    }
}

/// A cell position expressed as (partition, intra-partition index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnAddress {
    pub partition: usize,
    pub intra_index: usize,
}

impl ColumnAddress {
    pub const fn new(partition: usize, intra_index: usize) -> Self {
        ColumnAddress { partition, intra_index }
    }
}

impl fmt::Display for ColumnAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}:{}", self.partition, self.intra_index)
    }
}

/// Number of bits needed to hold any value in `0..n`.
pub fn index_bits(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl ArchConfig {
    /// Small configuration used by unit tests of the gate-level machinery.
    pub fn small(rows_h: usize, cols_w: usize, word_n: usize, num_crossbars: usize) -> Self {
        let regs = cols_w / word_n.max(1);
        ArchConfig {
            rows_h,
            cols_w,
            word_n,
            num_crossbars,
            user_regs: regs / 2,
            ..ArchConfig::default()
        }
    }

    /// Intra-partition indices per row (`w / N`), i.e. registers per thread.
    pub fn regs_per_row(&self) -> usize {
        self.cols_w / self.word_n
    }

    pub fn scratch_regs(&self) -> std::ops::Range<usize> {
        self.user_regs..self.regs_per_row()
    }

    /// Rows usable by tensors.
    pub fn user_rows(&self) -> usize {
        self.rows_h - self.scratch_rows
    }

    /// Driver scratch rows, highest row first.
    pub fn scratch_row(&self, k: usize) -> usize {
        self.rows_h - 1 - k
    }

    pub fn total_rows(&self) -> u64 {
        (self.num_crossbars * self.rows_h) as u64
    }

    pub fn word_mask(&self) -> u64 {
        if self.word_n >= 64 {
            u64::MAX
        } else {
            (1u64 << self.word_n) - 1
        }
    }

    pub fn column_of(&self, partition: usize, intra_index: usize) -> Result<usize, GeometryError> {
        if partition >= self.word_n {
            return Err(GeometryError::PartitionOutOfRange { partition, word_n: self.word_n });
        }
        let limit = self.regs_per_row();
        if intra_index >= limit {
            return Err(GeometryError::IndexOutOfRange { index: intra_index, limit });
        }
        Ok(partition * limit + intra_index)
    }

    /// Inverse of [`ArchConfig::column_of`].
    pub fn decompose(&self, column: usize) -> Result<ColumnAddress, GeometryError> {
        if column >= self.cols_w {
            return Err(GeometryError::ColumnOutOfRange { column, cols: self.cols_w });
        }
        let limit = self.regs_per_row();
        Ok(ColumnAddress::new(column / limit, column % limit))
    }

    /// Columns holding the word at `intra_index`, bit 0 first.
    pub fn word_columns(&self, intra_index: usize) -> Result<Vec<usize>, GeometryError> {
        (0..self.word_n).map(|j| self.column_of(j, intra_index)).collect()
    }

    pub fn row_bits(&self) -> u32 {
        index_bits(self.rows_h)
    }

    pub fn crossbar_bits(&self) -> u32 {
        index_bits(self.num_crossbars)
    }

    pub fn partition_bits(&self) -> u32 {
        index_bits(self.word_n)
    }

    pub fn intra_bits(&self) -> u32 {
        index_bits(self.regs_per_row())
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let mut diags = Vec::new();
        if self.word_n == 0 || self.cols_w == 0 || self.rows_h == 0 {
            diags.push("rows, cols and word must be positive".to_string());
        } else {
            if !self.cols_w.is_multiple_of(self.word_n) {
                diags.push("N must divide w".to_string());
            }
            if self.user_regs + 1 > self.cols_w / self.word_n {
                diags.push(format!(
                    "user_regs ({}) leaves no driver scratch register within w/N = {}",
                    self.user_regs,
                    self.cols_w / self.word_n
                ));
            }
        }
        if self.num_crossbars == 0 || !is_power_of_four(self.num_crossbars) {
            diags.push("crossbar count must be a power of 4".to_string());
        }
        if self.scratch_rows < 1 {
            diags.push("scratch_rows must be at least 1".to_string());
        }
        if self.scratch_rows >= self.rows_h {
            diags.push("rows - scratch_rows must be at least 1".to_string());
        }
        if self.clock_hz == 0 {
            diags.push("clock_hz must be positive".to_string());
        }
        if diags.is_empty() {
            let widths = crate::microop::payload_widths(self);
            for (kind, bits) in widths {
                if bits > 61 {
                    diags.push(format!("{kind} payload needs {bits} bits (> 61)"));
                }
            }
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(GeometryError::Invalid(diags))
        }
    }

    /// Parses `key=value` lines; `#` starts a comment. Unset keys keep the
    /// defaults.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut cfg = ArchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| GeometryError::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let value = value.trim();
            let num = || {
                value
                    .replace('_', "")
                    .parse::<u64>()
                    .map_err(|e| err(format!("{}: {e}", key.trim())))
            };
            match key.trim() {
                "rows" => cfg.rows_h = num()? as usize,
                "cols" => cfg.cols_w = num()? as usize,
                "word" => cfg.word_n = num()? as usize,
                "crossbars" => cfg.num_crossbars = num()? as usize,
                "clock_hz" => cfg.clock_hz = num()?,
                "user_regs" => cfg.user_regs = num()? as usize,
                "scratch_rows" => cfg.scratch_rows = num()? as usize,
                "strict_init" => {
                    cfg.strict_init = match value {
                        "1" | "true" | "on" => true,
                        "0" | "false" | "off" => false,
                        _ => return Err(err(format!("strict_init: bad value `{value}`"))),
                    }
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn to_config_text(&self) -> String {
        format!(
            "rows={}\ncols={}\nword={}\ncrossbars={}\nclock_hz={}\nuser_regs={}\nscratch_rows={}\nstrict_init={}\n",
            self.rows_h,
            self.cols_w,
            self.word_n,
            self.num_crossbars,
            self.clock_hz,
            self.user_regs,
            self.scratch_rows,
            self.strict_init
        )
    }
}

pub fn is_power_of_four(n: usize) -> bool {
    n.is_power_of_two() && n.trailing_zeros().is_multiple_of(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strided_columns_match_read_figure() {
        let cfg = ArchConfig::small(16, 16, 4, 1);
        assert_eq!(cfg.column_of(0, 2).unwrap(), 2);
        assert_eq!(cfg.column_of(1, 2).unwrap(), 6);
        assert_eq!(cfg.column_of(2, 2).unwrap(), 10);
        assert_eq!(cfg.column_of(3, 2).unwrap(), 14);
        assert_eq!(cfg.word_columns(2).unwrap(), vec![2, 6, 10, 14]);
        assert_eq!(cfg.column_of(0, 0).unwrap(), 0);
        assert_eq!(cfg.word_columns(0).unwrap(), vec![0, 4, 8, 12]);
    }

    #[test]
    fn full_scale_columns() {
        let cfg = ArchConfig::default();
        assert_eq!(cfg.column_of(31, 31).unwrap(), 1023);
        let cols = cfg.word_columns(5).unwrap();
        assert_eq!(cols.len(), 32);
        assert_eq!(cols[0], 5);
        assert_eq!(cols[1], 37);
        assert_eq!(*cols.last().unwrap(), 997);
        assert!(cols.windows(2).all(|p| p[1] - p[0] == 32));
    }

    #[test]
    fn out_of_range_rejected() {
        let cfg = ArchConfig::small(16, 16, 4, 1);
        assert!(matches!(cfg.column_of(4, 0), Err(GeometryError::PartitionOutOfRange { .. })));
        assert!(matches!(cfg.column_of(0, 4), Err(GeometryError::IndexOutOfRange { .. })));
        assert!(cfg.word_columns(4).is_err());
        assert!(cfg.decompose(16).is_err());
    }

    #[test]
    fn bijective_and_disjoint() {
        for cfg in [ArchConfig::small(16, 16, 4, 1), ArchConfig::default()] {
            let mut seen = vec![false; cfg.cols_w];
            for r in 0..cfg.regs_per_row() {
                for c in cfg.word_columns(r).unwrap() {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
            for c in 0..cfg.cols_w {
                let a = cfg.decompose(c).unwrap();
                assert_eq!(cfg.column_of(a.partition, a.intra_index).unwrap(), c);
            }
        }
    }

    #[test]
    fn validation_reports_all() {
        assert!(ArchConfig::default().validate().is_ok());
        let bad = ArchConfig { word_n: 3, cols_w: 16, num_crossbars: 8, ..ArchConfig::default() };
        match bad.validate() {
            Err(GeometryError::Invalid(d)) => {
                assert!(d.iter().any(|m| m.contains("N must divide w")));
                assert!(d.iter().any(|m| m.contains("power of 4")));
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = ArchConfig { num_crossbars: 8, ..ArchConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let cfg = ArchConfig { num_crossbars: 64, strict_init: false, ..ArchConfig::default() };
        assert_eq!(ArchConfig::parse(&cfg.to_config_text()).unwrap(), cfg);
        let parsed = ArchConfig::parse("# desk\ncrossbars = 4\n").unwrap();
        assert_eq!(parsed.num_crossbars, 4);
        assert!(matches!(ArchConfig::parse("bogus=1"), Err(GeometryError::Parse { line: 1, .. })));
    }
}
