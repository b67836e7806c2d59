//! Text form of macro-instructions, one per line:
//!
//! ```text
//! add int32 r2 r0 r1 warps=0:3:1 threads=0:1021:1
//! mux float32 r3 r0 r1 r2 warps=0 threads=0:9:1
//! move.intra r0 r1 warps=0:15:1 pairs=3>5,4>6
//! move.inter r0 r1 warps=1:13:4 dest=2 thread=3>4
//! read r3 warp=0 thread=4
//! write r3 0x8 warps=0 threads=4
//! ```
//!
//! Masks are `start:stop:step` or a single index. `#` starts a comment.

use std::collections::HashMap;
use std::fmt;

use crate::microop::RangeMask;

use super::isa::{DType, MacroInstruction, Opcode};
use super::DriverError;

fn parse_mask(s: &str) -> Result<RangeMask, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad number `{t}`"));
    match parts.as_slice() {
        [a] => Ok(RangeMask::single(num(a)?)),
        [a, b] => Ok(RangeMask::new(num(a)?, num(b)?, 1)),
        [a, b, c] => Ok(RangeMask::new(num(a)?, num(b)?, num(c)?)),
        _ => Err(format!("bad mask `{s}`")),
    }
}

fn parse_reg(s: &str) -> Result<usize, String> {
    s.strip_prefix('r')
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| format!("expected a register like r3, got `{s}`"))
}

fn parse_value(s: &str) -> Result<u64, String> {
    if let Some(h) = s.strip_prefix("0x") {
        return u64::from_str_radix(h, 16).map_err(|e| e.to_string());
    }
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v as u32 as u64);
    }
    if let Ok(f) = s.trim_end_matches('f').parse::<f32>() {
        return Ok(f.to_bits() as u64);
    }
    Err(format!("bad value `{s}`"))
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('>').ok_or_else(|| format!("expected src>dst, got `{s}`"))?;
    let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad number `{t}`"));
    Ok((num(a)?, num(b)?))
}

fn parse_line(line: &str) -> Result<MacroInstruction, String> {
    let mut positional = Vec::new();
    let mut keys = HashMap::new();
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some((k, v)) => {
                keys.insert(k, v);
            }
            None => positional.push(tok),
        }
    }
    let key = |k: &str| keys.get(k).copied().ok_or_else(|| format!("missing `{k}=`"));
    let head = positional.first().copied().ok_or("empty instruction")?;
    let regs = |from: usize| positional[from..].iter().map(|t| parse_reg(t)).collect::<Result<Vec<_>, _>>();
    match head {
        "move.intra" => {
            let r = regs(1)?;
            let [src_reg, dst_reg] = r[..] else { return Err("move.intra takes two registers".into()) };
            let pairs = match keys.get("pairs") {
                Some(p) if !p.is_empty() => p.split(',').map(parse_pair).collect::<Result<_, _>>()?,
                _ => Vec::new(),
            };
            Ok(MacroInstruction::MoveIntraWarp { pairs, src_reg, dst_reg, warp_mask: parse_mask(key("warps")?)? })
        }
        "move.inter" => {
            let r = regs(1)?;
            let [src_reg, dst_reg] = r[..] else { return Err("move.inter takes two registers".into()) };
            let (src_thread, dst_thread) = parse_pair(key("thread")?)?;
            Ok(MacroInstruction::MoveInterWarp {
                warp_mask: parse_mask(key("warps")?)?,
                warp_dest: key("dest")?.parse().map_err(|_| "bad dest")?,
                src_thread,
                dst_thread,
                src_reg,
                dst_reg,
            })
        }
        "read" => {
            let r = regs(1)?;
            let [reg] = r[..] else { return Err("read takes one register".into()) };
            Ok(MacroInstruction::Read {
                warp: key("warp")?.parse().map_err(|_| "bad warp")?,
                thread: key("thread")?.parse().map_err(|_| "bad thread")?,
                reg,
            })
        }
        "write" => {
            if positional.len() != 3 {
                return Err("write takes a register and a value".into());
            }
            Ok(MacroInstruction::Write {
                warp_mask: parse_mask(key("warps")?)?,
                thread_mask: parse_mask(key("threads")?)?,
                reg: parse_reg(positional[1])?,
                value: parse_value(positional[2])?,
            })
        }
        op => {
            let opcode: Opcode = op.parse()?;
            let dtype: DType = positional.get(1).ok_or("missing dtype")?.parse()?;
            let r = regs(2)?;
            let (&dst, srcs) = r.split_first().ok_or("missing destination")?;
            Ok(MacroInstruction::RType {
                opcode,
                dtype,
                dst,
                srcs: srcs.to_vec(),
                warp_mask: parse_mask(key("warps")?)?,
                thread_mask: parse_mask(key("threads")?)?,
            })
        }
    }
}

pub fn parse_program(text: &str) -> Result<Vec<MacroInstruction>, DriverError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_line(line).map_err(|msg| DriverError::Parse { line: i + 1, msg })?);
    }
    Ok(out)
}

struct M(RangeMask);

impl fmt::Display for M {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.start == self.0.stop {
            write!(f, "{}", self.0.start)
        } else {
            write!(f, "{}:{}:{}", self.0.start, self.0.stop, self.0.step)
        }
    }
}

impl fmt::Display for MacroInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MacroInstruction::RType { opcode, dtype, dst, srcs, warp_mask, thread_mask } => {
                write!(f, "{opcode} {dtype} r{dst}")?;
                for s in srcs {
                    write!(f, " r{s}")?;
                }
                write!(f, " warps={} threads={}", M(*warp_mask), M(*thread_mask))
            }
            MacroInstruction::MoveIntraWarp { pairs, src_reg, dst_reg, warp_mask } => {
                write!(f, "move.intra r{src_reg} r{dst_reg} warps={} pairs=", M(*warp_mask))?;
                for (i, (s, d)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}>{d}")?;
                }
                Ok(())
            }
            MacroInstruction::MoveInterWarp { warp_mask, warp_dest, src_thread, dst_thread, src_reg, dst_reg } => {
                write!(
                    f,
                    "move.inter r{src_reg} r{dst_reg} warps={} dest={warp_dest} thread={src_thread}>{dst_thread}",
                    M(*warp_mask)
                )
            }
            MacroInstruction::Read { warp, thread, reg } => write!(f, "read r{reg} warp={warp} thread={thread}"),
            MacroInstruction::Write { warp_mask, thread_mask, reg, value } => {
                write!(f, "write r{reg} {value:#x} warps={} threads={}", M(*warp_mask), M(*thread_mask))
            }
        }
    }
}
