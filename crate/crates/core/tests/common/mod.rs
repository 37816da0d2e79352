#![allow(dead_code)]

use std::sync::Arc;

use faultmem::engine::{Automaton, Configuration};
use faultmem::infobound::{Gate, GateFn, LayeredCircuit, Wire};
use faultmem::transition::BooleanTable;
use rand::Rng;

/// Random layered circuit with at most `max_gates` gates; every gate reads
/// one to four wires from the input or earlier layers.
pub fn random_circuit(rng: &mut impl Rng, max_gates: usize) -> LayeredCircuit {
    let depth = rng.gen_range(1..=5usize).min(max_gates);
    let mut budget = max_gates - depth;
    let mut layers: Vec<Vec<Gate>> = Vec::with_capacity(depth);
    for s in 0..depth {
        let size = if s + 1 == depth {
            1
        } else {
            let extra = rng.gen_range(0..=budget.min(5));
            budget -= extra;
            1 + extra
        };
        let gates = (0..size)
            .map(|_| {
                let fan_in = rng.gen_range(1..=4usize);
                let wires: Vec<Wire> = (0..fan_in)
                    .map(|_| {
                        let src = rng.gen_range(0..=s);
                        if src == 0 {
                            Wire::Input
                        } else {
                            let layer = (src - 1) as u32;
                            Wire::Gate { layer, index: rng.gen_range(0..layers[src - 1].len()) as u32 }
                        }
                    })
                    .collect();
                let func = if rng.gen_bool(0.5) {
                    GateFn::Threshold(rng.gen_range(0..=fan_in as u32 + 1))
                } else {
                    let bits = (0..1usize << fan_in).map(|_| rng.gen_bool(0.5)).collect();
                    GateFn::Table(Arc::new(BooleanTable::new(fan_in as u32, bits).unwrap()))
                };
                Gate { cell: None, func, wires }
            })
            .collect();
        layers.push(gates);
    }
    LayeredCircuit::new(layers).unwrap()
}

fn gate_value(g: &Gate, values: &[Vec<bool>], x: bool) -> bool {
    let bits: Vec<bool> = g
        .wires
        .iter()
        .map(|w| match *w {
            Wire::Input => x,
            Wire::Gate { layer, index } => values[layer as usize][index as usize],
        })
        .collect();
    match &g.func {
        GateFn::Threshold(k) => bits.iter().filter(|&&b| b).count() as u32 >= *k,
        GateFn::Table(t) => t.eval(&bits).unwrap(),
    }
}

/// Output for input `x` when the gates set in `pattern` (global index,
/// layer by layer) are complemented.
pub fn evaluate(circuit: &LayeredCircuit, x: bool, pattern: u64) -> bool {
    let mut values: Vec<Vec<bool>> = Vec::new();
    let mut idx = 0;
    for layer in circuit.layers() {
        let row = layer
            .iter()
            .map(|g| {
                let flip = pattern >> idx & 1 == 1;
                idx += 1;
                gate_value(g, &values, x) ^ flip
            })
            .collect();
        values.push(row);
    }
    values.last().unwrap()[0]
}

/// Mutual information between a uniform input and the output, by summing
/// over every fault pattern one at a time.
pub fn brute_force_mi(circuit: &LayeredCircuit, eps: f64) -> f64 {
    let g = circuit.gate_count();
    let mut p = [[0.0f64; 2]; 2];
    for pattern in 0u64..1 << g {
        let k = pattern.count_ones() as i32;
        let w = eps.powi(k) * (1.0 - eps).powi(g as i32 - k);
        for x in 0..2 {
            let y = evaluate(circuit, x == 1, pattern);
            p[x][usize::from(y)] += w;
        }
    }
    let h = |q: f64| if q <= 0.0 || q >= 1.0 { 0.0 } else { -q * q.log2() - (1.0 - q) * (1.0 - q).log2() };
    h((p[0][1] + p[1][1]) / 2.0) - (h(p[0][1]) + h(p[1][1])) / 2.0
}

/// Lengths (gate counts) of every input-to-output path, by depth-first
/// search from the output.
pub fn path_lengths(circuit: &LayeredCircuit) -> Vec<u32> {
    fn walk(c: &LayeredCircuit, layer: usize, index: usize, len: u32, out: &mut Vec<u32>) {
        for w in &c.layers()[layer][index].wires {
            match *w {
                Wire::Input => out.push(len),
                Wire::Gate { layer, index } => walk(c, layer as usize, index as usize, len + 1, out),
            }
        }
    }
    let mut out = Vec::new();
    walk(circuit, circuit.layers().len() - 1, 0, 1, &mut out);
    out
}

pub fn leq(x: &Configuration, y: &Configuration) -> bool {
    (0..x.len()).all(|i| !x.get(i) || y.get(i))
}

fn config_from_mask(n: usize, mask: u32) -> Configuration {
    let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
    Configuration::from_bits(&bits, 0)
}

/// Checks `x <= y => step(x) <= step(y)` for every ordered pair of
/// configurations, over `steps` fault-free steps and both boundary values.
pub fn monotone_coupling_exhaustive(auto: &Automaton, steps: u32) -> bool {
    let n = auto.cell_count();
    assert!(n <= 16);
    for boundary in [false, true] {
        for y in 0u32..1 << n {
            let mut x = y;
            loop {
                let (mut cx, mut cy) = (config_from_mask(n, x), config_from_mask(n, y));
                for _ in 0..steps {
                    cx = auto.step_with(&cx, boundary, |_, c| c);
                    cy = auto.step_with(&cy, boundary, |_, c| c);
                    if !leq(&cx, &cy) {
                        return false;
                    }
                }
                if x == 0 {
                    break;
                }
                x = (x - 1) & y;
            }
        }
    }
    true
}

/// Runs `horizon` steps from all-zero with the cells in `faults[t]` (a
/// mask) set to the matching bits of `forced[t]` at step `t + 1`.
pub fn forced_run(auto: &Automaton, horizon: usize, faults: &[u64], forced: &[u64], boundary: bool) -> Vec<Configuration> {
    let mut c = Configuration::uniform(auto.cell_count(), false, 0);
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        c = auto.step_with(&c, boundary, |v, computed| {
            if faults[t] >> v & 1 == 1 {
                forced[t] >> v & 1 == 1
            } else {
                computed
            }
        });
        out.push(c.clone());
    }
    out
}

/// For every fault set over the interior cells and every adversary choice
/// on it, checks that forcing every fault to 1 leaves at least as many
/// cells in error at every time (remembered bit 0).
pub fn greedy_optimal_exhaustive(auto: &Automaton, horizon: usize) -> bool {
    let interior: Vec<usize> = (0..auto.cell_count()).filter(|&v| !auto.is_boundary(v)).collect();
    let positions: Vec<(usize, usize)> = (0..horizon).flat_map(|t| interior.iter().map(move |&v| (t, v))).collect();
    assert!(positions.len() <= 20);
    let masks = |sel: u32| {
        let mut m = vec![0u64; horizon];
        for (j, &(t, v)) in positions.iter().enumerate() {
            if sel >> j & 1 == 1 {
                m[t] |= 1 << v;
            }
        }
        m
    };
    for boundary in [false, true] {
        for f in 0u32..1 << positions.len() {
            let faults = masks(f);
            let greedy = forced_run(auto, horizon, &faults, &faults, boundary);
            let mut s = f;
            loop {
                let run = forced_run(auto, horizon, &faults, &masks(s), boundary);
                if (0..horizon).any(|t| !leq(&run[t], &greedy[t])) {
                    return false;
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & f;
            }
        }
    }
    true
}
