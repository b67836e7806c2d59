//! Combinational NOR/NOT dataflow graphs that routines are written in.
//!
//! Nodes are hash-consed and constant-folded on construction, so building the
//! same expression twice, or an expression with constant operands, costs
//! nothing extra. Each node carries a home partition used by the scheduler as
//! a placement hint.

use std::collections::HashMap;

pub type Sig = u32;
/// Bits of a word, least significant first.
pub type Word = Vec<Sig>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Const(bool),
    Input { src: u8, bit: u8 },
    Not(Sig),
    Nor(Sig, Sig),
}

#[derive(Debug, Clone)]
pub struct Netlist {
    nodes: Vec<Node>,
    homes: Vec<u16>,
    memo: HashMap<Node, Sig>,
    home: usize,
    partitions: usize,
    spread: usize,
}

pub const FALSE: Sig = 0;
pub const TRUE: Sig = 1;

impl Netlist {
    pub fn new(partitions: usize) -> Self {
        let mut n = Netlist { nodes: Vec::new(), homes: Vec::new(), memo: HashMap::new(), home: 0, partitions, spread: partitions };
        n.intern(Node::Const(false));
        n.intern(Node::Const(true));
        n
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, s: Sig) -> Node {
        self.nodes[s as usize]
    }

    pub fn home_of(&self, s: Sig) -> usize {
        self.homes[s as usize] as usize
    }

    /// Sets the home partition for nodes created from now on (clamped).
    pub fn at(&mut self, partition: usize) -> &mut Self {
        self.home = partition.min(self.partitions - 1);
        self
    }

    pub fn home(&self) -> usize {
        self.home
    }

    /// Word helpers home bit `i` at `i * partitions / spread`; wider internal
    /// words set `spread` to their width to stay spread over the row.
    pub fn set_spread(&mut self, width: usize) {
        self.spread = width.max(self.partitions);
    }

    pub fn at_bit(&mut self, i: usize) -> &mut Self {
        let p = i * self.partitions / self.spread;
        self.at(p)
    }

    fn intern(&mut self, node: Node) -> Sig {
        if let Some(&s) = self.memo.get(&node) {
            return s;
        }
        let s = self.nodes.len() as Sig;
        let home = match node {
            Node::Input { bit, .. } => bit as usize,
            _ => self.home,
        };
        self.nodes.push(node);
        self.homes.push(home as u16);
        self.memo.insert(node, s);
        s
    }

    pub fn constant(&mut self, v: bool) -> Sig {
        if v {
            TRUE
        } else {
            FALSE
        }
    }

    pub fn input(&mut self, src: usize, bit: usize) -> Sig {
        self.intern(Node::Input { src: src as u8, bit: bit as u8 })
    }

    pub fn input_word(&mut self, src: usize, width: usize) -> Word {
        (0..width).map(|j| self.input(src, j)).collect()
    }

    pub fn const_word(&mut self, value: u64, width: usize) -> Word {
        (0..width).map(|j| if value >> j & 1 == 1 { TRUE } else { FALSE }).collect()
    }

    pub fn as_const(&self, s: Sig) -> Option<bool> {
        match self.node(s) {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    fn complement_of(&self, x: Sig, y: Sig) -> bool {
        self.node(x) == Node::Not(y) || self.node(y) == Node::Not(x)
    }

    pub fn not(&mut self, x: Sig) -> Sig {
        match self.node(x) {
            Node::Const(v) => self.constant(!v),
            Node::Not(y) => y,
            _ => self.intern(Node::Not(x)),
        }
    }

    pub fn nor(&mut self, x: Sig, y: Sig) -> Sig {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match (self.as_const(x), self.as_const(y)) {
            (Some(true), _) | (_, Some(true)) => return FALSE,
            (Some(false), _) => return self.not(y),
            (_, Some(false)) => return self.not(x),
            _ => {}
        }
        if x == y {
            return self.not(x);
        }
        if self.complement_of(x, y) {
            return FALSE;
        }
        self.intern(Node::Nor(x, y))
    }

    pub fn or(&mut self, x: Sig, y: Sig) -> Sig {
        let n = self.nor(x, y);
        self.not(n)
    }

    pub fn and(&mut self, x: Sig, y: Sig) -> Sig {
        let (nx, ny) = (self.not(x), self.not(y));
        self.nor(nx, ny)
    }

    /// `x AND NOT y` in one gate when `NOT x` is at hand.
    pub fn and_not(&mut self, x: Sig, y: Sig) -> Sig {
        let nx = self.not(x);
        self.nor(nx, y)
    }

    pub fn xnor(&mut self, a: Sig, b: Sig) -> Sig {
        let n1 = self.nor(a, b);
        let n2 = self.nor(a, n1);
        let n3 = self.nor(b, n1);
        self.nor(n2, n3)
    }

    pub fn xor(&mut self, a: Sig, b: Sig) -> Sig {
        let x = self.xnor(a, b);
        self.not(x)
    }

    /// `c ? a : b`, given `NOT c` precomputed or not.
    pub fn mux(&mut self, c: Sig, a: Sig, b: Sig) -> Sig {
        if a == b {
            return a;
        }
        let nc = self.not(c);
        let t1 = self.nor(nc, a);
        let t2 = self.nor(c, b);
        self.nor(t1, t2)
    }

    /// Nine-NOR full adder. The carry is homed one partition to the right.
    pub fn full_add(&mut self, a: Sig, b: Sig, c: Sig) -> (Sig, Sig) {
        let n1 = self.nor(a, b);
        let n2 = self.nor(a, n1);
        let n3 = self.nor(b, n1);
        let n4 = self.nor(n2, n3);
        let n5 = self.nor(n4, c);
        let n6 = self.nor(n4, n5);
        let n7 = self.nor(c, n5);
        let sum = self.nor(n6, n7);
        let here = self.home;
        self.at(here + 1);
        let carry = self.nor(n1, n5);
        self.at(here);
        (sum, carry)
    }

    /// Majority of three without the sum (six gates).
    pub fn carry_only(&mut self, a: Sig, b: Sig, c: Sig) -> Sig {
        let n1 = self.nor(a, b);
        let n2 = self.nor(a, n1);
        let n3 = self.nor(b, n1);
        let n4 = self.nor(n2, n3);
        let n5 = self.nor(n4, c);
        let here = self.home;
        self.at(here + 1);
        let carry = self.nor(n1, n5);
        self.at(here);
        carry
    }

    /// Number of gate nodes reachable from `outputs`.
    pub fn gate_count(&self, outputs: &[Sig]) -> usize {
        self.reachable(outputs)
            .iter()
            .enumerate()
            .filter(|&(i, &r)| r && matches!(self.nodes[i], Node::Not(_) | Node::Nor(..)))
            .count()
    }

    pub fn reachable(&self, outputs: &[Sig]) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        for &o in outputs {
            live[o as usize] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if !live[i] {
                continue;
            }
            match self.nodes[i] {
                Node::Not(x) => live[x as usize] = true,
                Node::Nor(x, y) => {
                    live[x as usize] = true;
                    live[y as usize] = true;
                }
                _ => {}
            }
        }
        live
    }

    /// Bitsliced evaluation: `inputs[src][bit]` holds 64 independent lanes.
    pub fn eval_lanes(&self, inputs: &[Vec<u64>], outputs: &[Sig]) -> Vec<u64> {
        let mut v = vec![0u64; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            v[i] = match *node {
                Node::Const(b) => {
                    if b {
                        !0
                    } else {
                        0
                    }
                }
                Node::Input { src, bit } => inputs[src as usize][bit as usize],
                Node::Not(x) => !v[x as usize],
                Node::Nor(x, y) => !(v[x as usize] | v[y as usize]),
            };
        }
        outputs.iter().map(|&o| v[o as usize]).collect()
    }

    /// Evaluates `outputs` as a word for up to 64 operand tuples at once.
    /// `operands[k][src]` is the `k`-th tuple.
    pub fn eval_words(&self, operands: &[Vec<u64>], outputs: &[Sig]) -> Vec<u64> {
        assert!(operands.len() <= 64);
        let srcs = operands.first().map_or(0, Vec::len);
        let width = self.partitions;
        let mut lanes = vec![vec![0u64; width]; srcs];
        for (k, tuple) in operands.iter().enumerate() {
            for (s, &val) in tuple.iter().enumerate() {
                for (j, lane) in lanes[s].iter_mut().enumerate() {
                    *lane |= (val >> j & 1) << k;
                }
            }
        }
        let bits = self.eval_lanes(&lanes, outputs);
        (0..operands.len())
            .map(|k| bits.iter().enumerate().fold(0u64, |acc, (j, &l)| acc | (l >> k & 1) << j))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_and_sharing() {
        let mut n = Netlist::new(4);
        let a = n.input(0, 0);
        let b = n.input(1, 0);
        assert_eq!(n.nor(a, b), n.nor(b, a));
        let na = n.not(a);
        assert_eq!(n.not(na), a);
        assert_eq!(n.nor(a, na), FALSE);
        assert_eq!(n.nor(a, FALSE), na);
        assert_eq!(n.nor(a, TRUE), FALSE);
        assert_eq!(n.nor(a, a), na);
    }

    #[test]
    fn full_adder_truth_table_and_cost() {
        let mut n = Netlist::new(4);
        let (a, b, c) = (n.input(0, 0), n.input(1, 0), n.input(2, 0));
        let (s, co) = n.full_add(a, b, c);
        assert_eq!(n.gate_count(&[s, co]), 9);
        for v in 0..8u64 {
            let ins: Vec<Vec<u64>> = (0..3).map(|k| vec![if v >> k & 1 == 1 { !0 } else { 0 }]).collect();
            let out = n.eval_lanes(&ins, &[s, co]);
            let total = v.count_ones() as u64;
            assert_eq!(out[0] & 1, total & 1);
            assert_eq!(out[1] & 1, total >> 1);
        }
    }

    #[test]
    fn mux_selects() {
        let mut n = Netlist::new(1);
        let (c, a, b) = (n.input(0, 0), n.input(1, 0), n.input(2, 0));
        let m = n.mux(c, a, b);
        let tuples: Vec<Vec<u64>> = (0..8).map(|v| vec![v & 1, v >> 1 & 1, v >> 2 & 1]).collect();
        let got = n.eval_words(&tuples, &[m]);
        for (t, g) in tuples.iter().zip(got) {
            assert_eq!(g, if t[0] == 1 { t[1] } else { t[2] });
        }
    }
}
