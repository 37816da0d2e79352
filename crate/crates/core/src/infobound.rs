//! Information-theoretic lower bound on the degree of a tolerant automaton.
//!
//! The state of a cell at time `t` is a function of the initial bit through
//! a layered circuit of noisy gates (one layer per time step). Mutual
//! information between the initial bit and the output decays at least as
//! fast as the sum over input-output paths of `(1 - 2 eps)^(2|p|)`, while
//! remembering the bit with error `delta` needs at least `1 - h(delta)`.

use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{binary_entropy, fano_floor};
use crate::engine::{Automaton, CellRule};
use crate::error::{Error, Result};
use crate::transition::BooleanTable;

/// Largest circuit [`exact_mi`] will enumerate.
pub const MAX_EXACT_GATES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wire {
    /// The input terminal.
    Input,
    /// Gate `index` of layer `layer` (0-based); must be an earlier layer.
    Gate { layer: u32, index: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateFn {
    /// Output 1 iff at least this many wires carry 1.
    Threshold(u32),
    /// Wire `j` is bit `j` of the table index.
    Table(Arc<BooleanTable>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    /// Automaton cell this gate computes, if unrolled from one.
    pub cell: Option<u32>,
    pub func: GateFn,
    pub wires: Vec<Wire>,
}

/// Gates in layers; the last layer holds the single output gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCircuit {
    layers: Vec<Vec<Gate>>,
}

impl LayeredCircuit {
    pub fn new(layers: Vec<Vec<Gate>>) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::InfoBound("circuit has no layers".into()))?;
        if last.len() != 1 {
            return Err(Error::InfoBound(format!(
                "the output layer must hold one gate, found {}",
                last.len()
            )));
        }
        for (s, layer) in layers.iter().enumerate() {
            for (i, g) in layer.iter().enumerate() {
                if g.wires.is_empty() {
                    return Err(Error::InfoBound(format!("gate {i} of layer {s} has no wires")));
                }
                for w in &g.wires {
                    if let Wire::Gate { layer, index } = *w {
                        if layer as usize >= s || index as usize >= layers[layer as usize].len() {
                            return Err(Error::InfoBound(format!(
                                "gate {i} of layer {s} reads missing or later gate ({layer}, {index})"
                            )));
                        }
                    }
                }
                match &g.func {
                    GateFn::Table(t) if t.arity() as usize != g.wires.len() => {
                        return Err(Error::InfoBound(format!(
                            "gate {i} of layer {s}: table arity {} with {} wires",
                            t.arity(),
                            g.wires.len()
                        )));
                    }
                    GateFn::Threshold(k) if *k as usize > g.wires.len() + 1 => {
                        return Err(Error::InfoBound(format!(
                            "gate {i} of layer {s}: threshold {k} with {} wires",
                            g.wires.len()
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { layers })
    }

    /// `t` noisy copies in series.
    pub fn chain(t: u32) -> Result<Self> {
        let layers = (0..t)
            .map(|s| {
                let wire = if s == 0 {
                    Wire::Input
                } else {
                    Wire::Gate { layer: s - 1, index: 0 }
                };
                vec![Gate {
                    cell: None,
                    func: GateFn::Threshold(1),
                    wires: vec![wire],
                }]
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn depth(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Global index of each layer's first gate.
    fn layer_starts(&self) -> Vec<usize> {
        let mut starts = Vec::with_capacity(self.layers.len());
        let mut n = 0;
        for l in &self.layers {
            starts.push(n);
            n += l.len();
        }
        starts
    }
}

/// The circuit computing `root`'s state at time `t` from the common
/// initial state: layer `s` holds the cells `root` depends on through
/// `t - s` steps, and the first layer reads only the input terminal.
pub fn unroll_circuit(automaton: &Automaton, root: usize, t: u32) -> Result<LayeredCircuit> {
    if t == 0 {
        return Err(Error::InfoBound("horizon must be at least 1".into()));
    }
    if root >= automaton.cell_count() {
        return Err(Error::InfoBound(format!("root {root} out of range")));
    }
    // cells per layer, output layer first
    let mut cells: Vec<Vec<u32>> = vec![vec![root as u32]];
    for _ in 1..t {
        let mut next: Vec<u32> = cells
            .last()
            .unwrap()
            .iter()
            .flat_map(|&c| automaton.inputs(c as usize).iter().copied())
            .collect();
        next.sort_unstable();
        next.dedup();
        cells.push(next);
    }
    cells.reverse();
    if let Some(&c) = cells.iter().flatten().find(|&&c| automaton.is_boundary(c as usize)) {
        return Err(Error::TruncationTooSmall(format!(
            "cell {c} is a truncation boundary inside the {t}-step dependency cone of {root}"
        )));
    }
    let mut layers = Vec::with_capacity(t as usize);
    for (s, layer) in cells.iter().enumerate() {
        let gates = layer
            .iter()
            .map(|&c| {
                let wires = automaton
                    .inputs(c as usize)
                    .iter()
                    .map(|w| {
                        if s == 0 {
                            Wire::Input
                        } else {
                            let index = cells[s - 1].binary_search(w).expect("input in previous layer");
                            Wire::Gate {
                                layer: s as u32 - 1,
                                index: index as u32,
                            }
                        }
                    })
                    .collect();
                let func = match automaton.rule(c as usize) {
                    CellRule::Threshold(k) => GateFn::Threshold(*k),
                    CellRule::Table(tab) => GateFn::Table(tab.clone()),
                };
                Gate {
                    cell: Some(c),
                    func,
                    wires,
                }
            })
            .collect();
        layers.push(gates);
    }
    LayeredCircuit::new(layers)
}

/// Number of directed paths from the input terminal to the output gate.
pub fn count_paths(circuit: &LayeredCircuit) -> BigUint {
    let mut counts: Vec<Vec<BigUint>> = Vec::with_capacity(circuit.layers.len());
    for layer in &circuit.layers {
        let row = layer
            .iter()
            .map(|g| {
                g.wires.iter().fold(BigUint::from(0u32), |acc, w| match *w {
                    Wire::Input => acc + 1u32,
                    Wire::Gate { layer, index } => acc + &counts[layer as usize][index as usize],
                })
            })
            .collect();
        counts.push(row);
    }
    counts.pop().unwrap().pop().unwrap()
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `sum over input-output paths p of (1 - 2 eps)^(2|p|)`, with `|p|` the
/// number of gates on `p`.
pub fn es_bound(circuit: &LayeredCircuit, eps: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::InfoBound(format!("eps must lie in [0, 1/2], got {eps}")));
    }
    let attenuation = 2.0 * (1.0 - 2.0 * eps).ln();
    if attenuation == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let mut logs: Vec<Vec<f64>> = Vec::with_capacity(circuit.layers.len());
    for layer in &circuit.layers {
        let row = layer
            .iter()
            .map(|g| {
                attenuation
                    + log_sum_exp(g.wires.iter().map(|w| match *w {
                        Wire::Input => 0.0,
                        Wire::Gate { layer, index } => logs[layer as usize][index as usize],
                    }))
            })
            .collect();
        logs.push(row);
    }
    Ok(logs.last().unwrap()[0].exp())
}

/// Fault-pattern counts of a circuit: `counts[x][y][k]` is the number of
/// patterns with `k` faulty gates under which input `x` yields output `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelCounts {
    pub gates: usize,
    pub counts: [[Vec<u64>; 2]; 2],
}

impl ChannelCounts {
    /// `P(y | x)` when each gate fails independently with probability `eps`.
    pub fn channel(&self, eps: f64) -> [[f64; 2]; 2] {
        let g = self.gates as i32;
        let weight = |k: usize| eps.powi(k as i32) * (1.0 - eps).powi(g - k as i32);
        let mut p = [[0.0; 2]; 2];
        for (x, row) in p.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell = self.counts[x][y]
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c as f64 * weight(k))
                    .sum();
            }
        }
        p
    }

    /// `I(X; Y)` in bits with `X` uniform.
    pub fn mutual_information(&self, eps: f64) -> f64 {
        let ch = self.channel(eps);
        let py = [(ch[0][0] + ch[1][0]) / 2.0, (ch[0][1] + ch[1][1]) / 2.0];
        let mut mi = 0.0;
        for row in &ch {
            for y in 0..2 {
                let joint = row[y] / 2.0;
                if joint > 0.0 && py[y] > 0.0 {
                    mi += joint * (joint / (0.5 * py[y])).log2();
                }
            }
        }
        mi.max(0.0)
    }
}

/// Lanes whose index has bit `g` set, for `g < 6`.
const LANE_BITS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Lanes whose index has `j` bits set.
fn lane_popcount_masks() -> [u64; 7] {
    let mut m = [0u64; 7];
    for lane in 0..64u32 {
        m[lane.count_ones() as usize] |= 1 << lane;
    }
    m
}

/// Bit-sliced `count(wires set) >= k` over 64 lanes.
fn threshold_sliced(inputs: &[u64], k: u32) -> u64 {
    if k == 0 {
        return u64::MAX;
    }
    if k as usize > inputs.len() {
        return 0;
    }
    let bits = (usize::BITS - inputs.len().leading_zeros()) as usize;
    let mut counter = vec![0u64; bits];
    for &x in inputs {
        let mut carry = x;
        for c in counter.iter_mut() {
            let sum = *c ^ carry;
            carry &= *c;
            *c = sum;
        }
    }
    let mut gt = 0u64;
    let mut eq = u64::MAX;
    for i in (0..bits).rev() {
        if k >> i & 1 == 0 {
            gt |= eq & counter[i];
            eq &= !counter[i];
        } else {
            eq &= counter[i];
        }
    }
    gt | eq
}

fn table_sliced(inputs: &[u64], table: &BooleanTable) -> u64 {
    let mut out = 0u64;
    for x in 0..1u32 << table.arity() {
        if table.eval_index(x) {
            out |= inputs
                .iter()
                .enumerate()
                .fold(u64::MAX, |acc, (j, &w)| acc & if x >> j & 1 == 1 { w } else { !w });
        }
    }
    out
}

/// Enumerates every fault pattern, 64 at a time.
pub fn channel_counts(circuit: &LayeredCircuit) -> Result<ChannelCounts> {
    let g = circuit.gate_count();
    if g > MAX_EXACT_GATES {
        return Err(Error::InfoBound(format!(
            "{g} gates exceeds the exhaustive limit of {MAX_EXACT_GATES}"
        )));
    }
    let starts = circuit.layer_starts();
    let gates: Vec<&Gate> = circuit.layers.iter().flatten().collect();
    let wires: Vec<Vec<Option<usize>>> = gates
        .iter()
        .map(|gate| {
            gate.wires
                .iter()
                .map(|w| match *w {
                    Wire::Input => None,
                    Wire::Gate { layer, index } => Some(starts[layer as usize] + index as usize),
                })
                .collect()
        })
        .collect();
    let low = g.min(6);
    let lanes_valid = if low == 6 { u64::MAX } else { (1u64 << (1 << low)) - 1 };
    let popmasks = lane_popcount_masks();
    let batches = 1u64 << (g - low);

    let zero = || [[vec![0u64; g + 1], vec![0u64; g + 1]], [vec![0u64; g + 1], vec![0u64; g + 1]]];
    let counts = (0..batches)
        .into_par_iter()
        .fold(
            || (zero(), vec![0u64; g], Vec::new()),
            |(mut acc, mut values, mut scratch): (_, Vec<u64>, Vec<u64>), b| {
                let base = b.count_ones() as usize;
                for x in 0..2usize {
                    let input = if x == 1 { u64::MAX } else { 0 };
                    for i in 0..g {
                        scratch.clear();
                        scratch.extend(wires[i].iter().map(|w| w.map_or(input, |j| values[j])));
                        let out = match &gates[i].func {
                            GateFn::Threshold(k) => threshold_sliced(&scratch, *k),
                            GateFn::Table(t) => table_sliced(&scratch, t),
                        };
                        let fault = if i < 6 {
                            LANE_BITS[i]
                        } else if b >> (i - 6) & 1 == 1 {
                            u64::MAX
                        } else {
                            0
                        };
                        values[i] = out ^ fault;
                    }
                    let y = values[g - 1];
                    for (j, &m) in popmasks.iter().enumerate().take(low + 1) {
                        let m = m & lanes_valid;
                        acc[x][1][base + j] += u64::from((y & m).count_ones());
                        acc[x][0][base + j] += u64::from((!y & m).count_ones());
                    }
                }
                (acc, values, scratch)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(zero, |mut a, b| {
            for x in 0..2 {
                for y in 0..2 {
                    a[x][y].iter_mut().zip(&b[x][y]).for_each(|(p, q)| *p += q);
                }
            }
            a
        });
    Ok(ChannelCounts { gates: g, counts })
}

/// Exact `I(X; Y)` for a uniform input bit when every gate's output is
/// complemented independently with probability `eps`.
pub fn exact_mi(circuit: &LayeredCircuit, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InfoBound(format!("eps must lie in [0, 1], got {eps}")));
    }
    Ok(channel_counts(circuit)?.mutual_information(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    /// Remembering with error `delta` is impossible by this horizon.
    ExcludedAt(u32),
    NotExcluded,
}

fn check_margin(xi: f64, delta: f64) -> Result<()> {
    if !(xi > 0.0 && xi <= 0.5) {
        return Err(Error::InfoBound(format!("xi must lie in (0, 1/2], got {xi}")));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InfoBound(format!("delta must lie in [0, 1/2), got {delta}")));
    }
    Ok(())
}

/// Least `t` with `d^t (2 xi)^(2t) < 1 - h(delta)` when `d (2 xi)^2 < 1`.
pub fn tolerance_feasible(d: u32, xi: f64, delta: f64) -> Result<Feasibility> {
    check_margin(xi, delta)?;
    if d == 0 {
        return Err(Error::InfoBound("degree must be positive".into()));
    }
    let rate = (d as f64).ln() + 2.0 * (2.0 * xi).ln();
    if rate >= 0.0 {
        return Ok(Feasibility::NotExcluded);
    }
    let floor = fano_floor(delta)?.ln();
    let mut t = (floor / rate).floor().max(1.0) as u32;
    while t > 1 && (t - 1) as f64 * rate < floor {
        t -= 1;
    }
    while t as f64 * rate >= floor {
        t += 1;
    }
    Ok(Feasibility::ExcludedAt(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoBoundReport {
    pub d: u32,
    pub xi: f64,
    pub delta: f64,
    pub t: u32,
    #[serde(serialize_with = "decimal")]
    pub path_count: BigUint,
    pub es_bound: f64,
    pub fano_floor: f64,
    /// `es_bound >= fano_floor`: the bound alone does not rule out
    /// remembering through horizon `t`.
    pub feasible: bool,
    pub verdict: Feasibility,
}

fn decimal<S: serde::Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_str_radix(10))
}

impl InfoBoundReport {
    /// Bound for a cell of fan-in `d` unrolled `t` steps, every gate at
    /// fault rate `1/2 - xi`.
    pub fn uniform(d: u32, xi: f64, delta: f64, t: u32) -> Result<Self> {
        check_margin(xi, delta)?;
        let es = ((t as f64) * ((d as f64).ln() + 2.0 * (2.0 * xi).ln())).exp();
        Self::assemble(d, xi, delta, t, BigUint::from(d).pow(t), es)
    }

    /// Bound for an explicit circuit.
    pub fn for_circuit(circuit: &LayeredCircuit, xi: f64, delta: f64) -> Result<Self> {
        check_margin(xi, delta)?;
        let d = circuit.layers.last().unwrap()[0].wires.len() as u32;
        let es = es_bound(circuit, 0.5 - xi)?;
        Self::assemble(d, xi, delta, circuit.depth(), count_paths(circuit), es)
    }

    fn assemble(d: u32, xi: f64, delta: f64, t: u32, path_count: BigUint, es_bound: f64) -> Result<Self> {
        let floor = fano_floor(delta)?;
        Ok(Self {
            d,
            xi,
            delta,
            t,
            path_count,
            es_bound,
            fano_floor: floor,
            feasible: es_bound >= floor,
            verdict: tolerance_feasible(d, xi, delta)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `1 - h((1 - (1 - 2 eps)^t) / 2)`: information through `t` binary
/// symmetric channels in series.
pub fn chain_mi(t: u32, eps: f64) -> Result<f64> {
    let flip = (1.0 - (1.0 - 2.0 * eps).powi(t as i32)) / 2.0;
    Ok(1.0 - binary_entropy(flip)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Automaton;
    use crate::lattice::{build_toom, build_tree};
    use crate::treeify::treeify;

    #[test]
    fn chain_shapes() {
        let c = LayeredCircuit::chain(5).unwrap();
        assert_eq!(c.layer_sizes(), vec![1; 5]);
        assert_eq!(count_paths(&c), BigUint::from(1u32));
        assert!((es_bound(&LayeredCircuit::chain(3).unwrap(), 0.3).unwrap() - 0.004096).abs() < 1e-15);
    }

    #[test]
    fn tree_unroll() {
        let rules = treeify(&build_tree(5, 3).unwrap(), 0).unwrap();
        let auto = Automaton::from_tree(&rules, false).unwrap();
        let c = unroll_circuit(&auto, 0, 2).unwrap();
        assert_eq!(c.layer_sizes(), vec![5, 1]);
        assert_eq!(count_paths(&c), BigUint::from(20u32));
        let c = unroll_circuit(&auto, 0, 3).unwrap();
        assert_eq!(count_paths(&c), BigUint::from(5u32 * 4 * 4));
        assert!(matches!(unroll_circuit(&auto, 0, 4), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn toom_unroll() {
        let auto = Automaton::majority(&build_toom(8, 8).unwrap()).unwrap();
        let c = unroll_circuit(&auto, 0, 3).unwrap();
        assert!(c.layers().iter().flatten().all(|g| g.wires.len() == 3));
        assert_eq!(c.layer_sizes(), vec![6, 3, 1]);
        let c2 = unroll_circuit(&auto, 0, 2).unwrap();
        assert_eq!(count_paths(&c2), BigUint::from(9u32));
    }

    #[test]
    fn es_bound_limits() {
        let auto = Automaton::majority(&build_toom(8, 8).unwrap()).unwrap();
        let c = unroll_circuit(&auto, 0, 3).unwrap();
        assert_eq!(es_bound(&c, 0.5).unwrap(), 0.0);
        assert!((es_bound(&c, 0.0).unwrap() - 27.0).abs() < 1e-12);
        assert!(es_bound(&c, 0.6).is_err());
    }

    #[test]
    fn chain_information() {
        let c = LayeredCircuit::chain(1).unwrap();
        assert!((exact_mi(&c, 0.3).unwrap() - 0.118_709).abs() < 1e-6);
        for t in 1..=8 {
            let c = LayeredCircuit::chain(t).unwrap();
            assert!((exact_mi(&c, 0.0).unwrap() - 1.0).abs() < 1e-12);
            assert!(exact_mi(&c, 0.5).unwrap().abs() < 1e-12);
            assert!((exact_mi(&c, 0.2).unwrap() - chain_mi(t, 0.2).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn sliced_threshold_matches_counting() {
        for n in 1..=9usize {
            let inputs: Vec<u64> = (0..n).map(|j| LANE_BITS[j % 6].rotate_left(j as u32 * 7)).collect();
            for k in 0..=n as u32 + 1 {
                let got = threshold_sliced(&inputs, k);
                for lane in 0..64 {
                    let ones = inputs.iter().filter(|&&w| w >> lane & 1 == 1).count() as u32;
                    assert_eq!(got >> lane & 1 == 1, ones >= k, "n={n} k={k} lane={lane}");
                }
            }
        }
    }

    #[test]
    fn exhaustive_small_circuit() {
        // majority of three noisy copies, checked against a direct sum
        let copy = |_: u32| Gate {
            cell: None,
            func: GateFn::Threshold(1),
            wires: vec![Wire::Input],
        };
        let maj = Gate {
            cell: None,
            func: GateFn::Threshold(2),
            wires: (0..3).map(|i| Wire::Gate { layer: 0, index: i }).collect(),
        };
        let c = LayeredCircuit::new(vec![(0..3).map(copy).collect(), vec![maj]]).unwrap();
        let e: f64 = 0.1;
        let ch = channel_counts(&c).unwrap().channel(e);
        // P(wrong) = P(majority of copies wrong) xor output fault
        let copies_wrong = 3.0 * e * e * (1.0 - e) + e.powi(3);
        let wrong = copies_wrong * (1.0 - e) + (1.0 - copies_wrong) * e;
        assert!((ch[0][1] - wrong).abs() < 1e-15);
        assert!((ch[1][0] - wrong).abs() < 1e-15);
    }

    #[test]
    fn gate_cap() {
        let c = LayeredCircuit::chain(25).unwrap();
        assert!(exact_mi(&c, 0.1).is_err());
    }

    #[test]
    fn feasibility() {
        assert_eq!(tolerance_feasible(1, 0.3, 0.25).unwrap(), Feasibility::ExcludedAt(2));
        assert_eq!(tolerance_feasible(25, 0.1, 0.25).unwrap(), Feasibility::NotExcluded);
        assert!(matches!(tolerance_feasible(24, 0.1, 0.25).unwrap(), Feasibility::ExcludedAt(_)));
        assert!(tolerance_feasible(3, 0.3, 0.5).is_err());
    }

    #[test]
    fn report_json() {
        let r = InfoBoundReport::uniform(31, 0.05, 0.25, 4).unwrap();
        assert_eq!(r.path_count, BigUint::from(923_521u32));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["path_count"], "923521");
        assert_eq!(v["verdict"]["excluded_at"], serde_json::json!(match r.verdict {
            Feasibility::ExcludedAt(t) => t,
            _ => unreachable!(),
        }));
    }
}
