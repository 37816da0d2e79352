//! Synchronous simulation of faulty automata.
//!
//! Cells hold one bit in a packed configuration. Each step every cell
//! evaluates its rule on its arguments' states at time `t` and the fault
//! model is applied to the result; boundary cells are clamped instead.
//! All randomness comes from [`FaultRealization`], so a replicate is a pure
//! function of `(seed, replicate)` and the result does not depend on the
//! order or thread in which replicates run.
//!
//! A replicate only updates the cells that can still influence an observed
//! cell before the horizon: at the step producing time `t`, those within
//! `T - t` steps of an observed cell.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::{recursion_step, RecursionMode};
use crate::error::{Error, Result};
use crate::faults::{FaultModel, FaultRealization, FaultSpec};
use crate::lattice::{Lattice, LatticeKind};
use crate::transition::{analyze_boolean, full_majority_rule, BooleanTable};
use crate::treeify::TreeRuleSet;

/// `z` for a two-sided 95% interval.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellRule {
    /// Output 1 iff at least this many arguments are 1. Zero and
    /// `arity + 1` give the constant rules.
    Threshold(u32),
    Table(Arc<BooleanTable>),
}

/// A rule applied to every cell of a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSpec {
    Majority,
    Threshold(u32),
    Table(BooleanTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryPolicy {
    /// Boundary cells hold the error value from time 1 on.
    #[default]
    ClampToError,
    /// Boundary cells hold the remembered value.
    ClampToA,
}

impl BoundaryPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryPolicy::ClampToError => "clamp_to_error",
            BoundaryPolicy::ClampToA => "clamp_to_a",
        }
    }

    pub fn value(self, spec: &FaultSpec) -> bool {
        match self {
            BoundaryPolicy::ClampToError => spec.error_value(),
            BoundaryPolicy::ClampToA => spec.remembered(),
        }
    }
}

/// Bit-packed cell states at one time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
    pub t: u32,
}

impl Configuration {
    pub fn uniform(len: usize, value: bool, t: u32) -> Self {
        let fill = if value { u64::MAX } else { 0 };
        let mut c = Self {
            words: vec![fill; len.div_ceil(64)],
            len,
            t,
        };
        c.mask_tail();
        c
    }

    pub fn from_bits(bits: &[bool], t: u32) -> Self {
        let mut c = Self::uniform(bits.len(), false, t);
        for (i, &b) in bits.iter().enumerate() {
            c.set(i, b);
        }
        c
    }

    fn mask_tail(&mut self) {
        if !self.len.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let w = &mut self.words[i / 64];
        let bit = 1u64 << (i % 64);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

/// Cells, their arguments and rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    offsets: Vec<usize>,
    inputs: Vec<u32>,
    rules: Vec<CellRule>,
    boundary: Vec<bool>,
    keys: Vec<u64>,
    root: usize,
    monotone: bool,
    /// Set when the rules only make sense for one remembered bit.
    remembered: Option<bool>,
    kind: LatticeKind,
}

impl Automaton {
    fn from_lattice(lattice: &Lattice, rules: Vec<CellRule>, remembered: Option<bool>) -> Self {
        let n = lattice.vertex_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut inputs = Vec::with_capacity(lattice.edge_count());
        offsets.push(0);
        for v in 0..n {
            inputs.extend_from_slice(lattice.out_edges(v));
            offsets.push(inputs.len());
        }
        let monotone = rules.iter().all(|r| match r {
            CellRule::Threshold(_) => true,
            CellRule::Table(t) => analyze_boolean(t).monotone,
        });
        let root = (0..n).find(|&v| lattice.shell(v) == Some(0)).unwrap_or(0);
        Self {
            offsets,
            inputs,
            rules,
            boundary: lattice.boundary_flags().to_vec(),
            keys: (0..n as u64).collect(),
            root,
            monotone,
            remembered,
            kind: lattice.kind().clone(),
        }
    }

    /// Full majority on every cell; arguments are the out-edges, so an
    /// interior cell needs an odd out-degree (a self-loop included).
    pub fn majority(lattice: &Lattice) -> Result<Self> {
        let mut rules = Vec::with_capacity(lattice.vertex_count());
        for v in 0..lattice.vertex_count() {
            let d = lattice.out_degree(v) as u32;
            if lattice.is_boundary(v) {
                rules.push(CellRule::Threshold(d / 2 + 1));
                continue;
            }
            let rule = full_majority_rule(d, false).map_err(|e| {
                Error::Engine(format!("cell {v}: {}", e))
            })?;
            rules.push(CellRule::Threshold(rule.ones_threshold()));
        }
        Ok(Self::from_lattice(lattice, rules, None))
    }

    pub fn uniform(lattice: &Lattice, rule: &RuleSpec) -> Result<Self> {
        let (k, table) = match rule {
            RuleSpec::Majority => return Self::majority(lattice),
            RuleSpec::Threshold(k) => (*k, None),
            RuleSpec::Table(t) => (0, Some(Arc::new(t.clone()))),
        };
        let mut rules = Vec::with_capacity(lattice.vertex_count());
        for v in 0..lattice.vertex_count() {
            let d = lattice.out_degree(v) as u32;
            let interior = !lattice.is_boundary(v);
            match &table {
                Some(t) => {
                    if interior && t.arity() != d {
                        return Err(Error::Engine(format!(
                            "cell {v} has {d} arguments but the table has arity {}",
                            t.arity()
                        )));
                    }
                    rules.push(CellRule::Table(t.clone()));
                }
                None => {
                    if interior && (k == 0 || k > d) {
                        return Err(Error::Engine(format!(
                            "threshold {k} is outside 1..={d} at cell {v}"
                        )));
                    }
                    rules.push(CellRule::Threshold(k));
                }
            }
        }
        Ok(Self::from_lattice(lattice, rules, None))
    }

    /// Threshold rules of a treeified system remembering `remembered`:
    /// the deleted arguments sit at the error value, so `h(v)` retained
    /// children in error force an error.
    pub fn from_tree(rules: &TreeRuleSet, remembered: bool) -> Result<Self> {
        let cells = (0..rules.vertex_count())
            .map(|v| {
                let (d, h) = (rules.out_degree[v], rules.threshold[v]);
                if remembered {
                    CellRule::Threshold(d + 1 - h.min(d + 1))
                } else {
                    CellRule::Threshold(h)
                }
            })
            .collect();
        let mut a = Self::from_lattice(&rules.tree, cells, Some(remembered));
        a.root = rules.root;
        Ok(a)
    }

    /// Keys used to address faults; give a light cone the source indices
    /// so it sees the same faults as the lattice it was cut from.
    pub fn with_vertex_keys(mut self, keys: Vec<u64>) -> Result<Self> {
        if keys.len() != self.cell_count() {
            return Err(Error::Engine(format!(
                "{} keys for {} cells",
                keys.len(),
                self.cell_count()
            )));
        }
        self.keys = keys;
        Ok(self)
    }

    pub fn cell_count(&self) -> usize {
        self.rules.len()
    }

    pub fn inputs(&self, v: usize) -> &[u32] {
        &self.inputs[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn rule(&self, v: usize) -> &CellRule {
        &self.rules[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn key(&self, v: usize) -> u64 {
        self.keys[v]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn remembered(&self) -> Option<bool> {
        self.remembered
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    /// Fault-free output of cell `v` given states at the previous time.
    #[inline]
    pub fn eval(&self, v: usize, cur: &Configuration) -> bool {
        let args = self.inputs(v);
        match &self.rules[v] {
            CellRule::Threshold(k) => {
                let ones = args.iter().filter(|&&w| cur.get(w as usize)).count() as u32;
                ones >= *k
            }
            CellRule::Table(t) => {
                let x = args
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (j, &w)| acc | (u32::from(cur.get(w as usize)) << j));
                t.eval_index(x)
            }
        }
    }

    /// One synchronous step with an explicit fault strategy: `decide(v,
    /// computed)` gives each interior cell's new state, boundary cells take
    /// `boundary_value`.
    pub fn step_with(
        &self,
        cur: &Configuration,
        boundary_value: bool,
        mut decide: impl FnMut(usize, bool) -> bool,
    ) -> Configuration {
        let mut next = Configuration::uniform(self.cell_count(), false, cur.t + 1);
        for v in 0..self.cell_count() {
            let s = if self.boundary[v] {
                boundary_value
            } else {
                decide(v, self.eval(v, cur))
            };
            next.set(v, s);
        }
        next
    }

    /// One synchronous step under a fault model.
    pub fn step(
        &self,
        cur: &Configuration,
        realization: &FaultRealization,
        spec: &FaultSpec,
        policy: BoundaryPolicy,
    ) -> Result<Configuration> {
        if cur.len() != self.cell_count() {
            return Err(Error::Engine(format!(
                "configuration has {} cells, automaton {}",
                cur.len(),
                self.cell_count()
            )));
        }
        let t = cur.t + 1;
        let mut failure = None;
        let next = self.step_with(cur, policy.value(spec), |v, computed| {
            let key = self.keys[v];
            let fault = realization.transient(key, t);
            let mfg = spec.beta() > 0.0 && realization.manufacturing(key);
            crate::faults::apply_fault(computed, fault, mfg, spec).unwrap_or_else(|e| {
                failure = Some(e);
                computed
            })
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(next),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observed {
    Root,
    NonBoundary,
    Cells(Vec<u32>),
}

#[derive(Debug, Clone)]
pub struct SimPlan {
    pub automaton: Arc<Automaton>,
    pub spec: FaultSpec,
    pub horizon: u32,
    pub replicates: u64,
    /// Observed cells, as automaton indices.
    pub observed: Vec<u32>,
    pub seed: u64,
    pub boundary_policy: BoundaryPolicy,
    /// Cells sorted by distance to the nearest observed cell, and the
    /// number of cells within each distance.
    order: Vec<u32>,
    within: Vec<usize>,
}

impl SimPlan {
    pub fn new(
        automaton: Arc<Automaton>,
        spec: FaultSpec,
        horizon: u32,
        replicates: u64,
        observed: Observed,
        seed: u64,
        boundary_policy: BoundaryPolicy,
    ) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::Engine("at least one replicate is required".into()));
        }
        if spec.model() == FaultModel::Adversarial && !automaton.is_monotone() {
            return Err(Error::Engine(
                "the greedy adversary is only optimal for monotone rules; use the pure-probabilistic model".into(),
            ));
        }
        if let Some(a) = automaton.remembered() {
            if a != spec.remembered() {
                return Err(Error::Engine(format!(
                    "rules were built for remembered bit {}, fault spec remembers {}",
                    u8::from(a),
                    u8::from(spec.remembered())
                )));
            }
        }
        let n = automaton.cell_count();
        let observed = match observed {
            Observed::Root => vec![automaton.root() as u32],
            Observed::NonBoundary => (0..n as u32).filter(|&v| !automaton.is_boundary(v as usize)).collect(),
            Observed::Cells(c) => c,
        };
        if observed.is_empty() {
            return Err(Error::Engine("no cells to observe".into()));
        }
        if let Some(&v) = observed.iter().find(|&&v| v as usize >= n) {
            return Err(Error::Engine(format!("observed cell {v} out of range ({n} cells)")));
        }

        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for &o in &observed {
            if dist[o as usize] == u32::MAX {
                dist[o as usize] = 0;
                queue.push_back(o as usize);
            }
        }
        while let Some(v) = queue.pop_front() {
            if dist[v] >= horizon {
                continue;
            }
            for &w in automaton.inputs(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        let mut order: Vec<u32> = (0..n as u32).filter(|&v| dist[v as usize] != u32::MAX).collect();
        order.sort_by_key(|&v| (dist[v as usize], v));
        let within = (0..=horizon)
            .map(|k| order.partition_point(|&v| dist[v as usize] <= k))
            .collect();

        Ok(Self {
            automaton,
            spec,
            horizon,
            replicates,
            observed,
            seed,
            boundary_policy,
            order,
            within,
        })
    }

    /// Cells updated at the step producing time `t`.
    fn active(&self, t: u32) -> &[u32] {
        &self.order[..self.within[(self.horizon - t) as usize]]
    }
}

/// Per-time error bits of the observed cells in one replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicateTrace {
    pub horizon: u32,
    pub observed: usize,
    /// `errors[t * observed + i]`
    pub errors: Vec<bool>,
}

impl ReplicateTrace {
    pub fn error(&self, t: u32, i: usize) -> bool {
        self.errors[t as usize * self.observed + i]
    }
}

struct Scratch {
    cur: Configuration,
    next: Configuration,
    manufactured: Vec<bool>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            cur: Configuration::uniform(n, false, 0),
            next: Configuration::uniform(n, false, 0),
            manufactured: vec![false; n],
        }
    }
}

/// Runs one replicate, calling `record(t, i, error)` for every observed
/// cell at every time.
fn simulate(plan: &SimPlan, replicate: u64, scratch: &mut Scratch, mut record: impl FnMut(u32, usize, bool)) {
    let auto = &plan.automaton;
    let spec = &plan.spec;
    let a = spec.remembered();
    let n = auto.cell_count();
    let realization = FaultRealization::new(plan.seed, replicate, spec);

    scratch.cur = Configuration::uniform(n, a, 0);
    scratch.next = Configuration::uniform(n, a, 0);
    if spec.beta() > 0.0 && plan.horizon > 0 {
        for &v in plan.active(1) {
            let v = v as usize;
            scratch.manufactured[v] = !auto.is_boundary(v) && realization.manufacturing(auto.key(v));
        }
    }
    for (i, _) in plan.observed.iter().enumerate() {
        record(0, i, false);
    }
    let boundary_value = plan.boundary_policy.value(spec);
    let adversarial = spec.model() == FaultModel::Adversarial;
    let error_value = spec.error_value();
    for t in 1..=plan.horizon {
        for &v in plan.active(t) {
            let v = v as usize;
            let s = if auto.is_boundary(v) {
                boundary_value
            } else {
                let computed = auto.eval(v, &scratch.cur);
                let fault = spec.alpha() > 0.0 && realization.transient(auto.key(v), t);
                if adversarial {
                    if fault || scratch.manufactured[v] {
                        error_value
                    } else {
                        computed
                    }
                } else {
                    computed ^ fault
                }
            };
            scratch.next.set(v, s);
        }
        std::mem::swap(&mut scratch.cur, &mut scratch.next);
        scratch.cur.t = t;
        for (i, &o) in plan.observed.iter().enumerate() {
            record(t, i, scratch.cur.get(o as usize) != a);
        }
    }
    if spec.beta() > 0.0 {
        scratch.manufactured.iter_mut().for_each(|m| *m = false);
    }
}

pub fn run_replicate(plan: &SimPlan, replicate: u64) -> ReplicateTrace {
    let obs = plan.observed.len();
    let mut errors = vec![false; (plan.horizon as usize + 1) * obs];
    let mut scratch = Scratch::new(plan.automaton.cell_count());
    simulate(plan, replicate, &mut scratch, |t, i, e| errors[t as usize * obs + i] = e);
    ReplicateTrace {
        horizon: plan.horizon,
        observed: obs,
        errors,
    }
}

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorEstimate {
    pub horizon: u32,
    /// Fault keys of the observed cells (source indices for light cones).
    pub vertices: Vec<u64>,
    pub replicates: u64,
    /// `counts[t * vertices.len() + i]`: replicates with cell `i` in error at `t`.
    pub counts: Vec<u64>,
}

impl ErrorEstimate {
    pub fn count(&self, t: u32, i: usize) -> u64 {
        self.counts[t as usize * self.vertices.len() + i]
    }

    pub fn freq(&self, t: u32, i: usize) -> f64 {
        self.count(t, i) as f64 / self.replicates as f64
    }

    pub fn wilson(&self, t: u32, i: usize) -> (f64, f64) {
        wilson_interval(self.count(t, i), self.replicates)
    }

    /// Largest distance from the frequency to an end of its interval.
    pub fn half_width(&self, t: u32, i: usize) -> f64 {
        let (lo, hi) = self.wilson(t, i);
        let f = self.freq(t, i);
        (f - lo).max(hi - f)
    }

    /// Mean error frequency over observed cells at time `t`.
    pub fn mean_freq(&self, t: u32) -> f64 {
        let k = self.vertices.len();
        let total: u64 = self.counts[t as usize * k..(t as usize + 1) * k].iter().sum();
        total as f64 / (k as f64 * self.replicates as f64)
    }

    /// `t,vertex,freq,wilson_lo,wilson_hi,replicates`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,vertex,freq,wilson_lo,wilson_hi,replicates\n");
        for t in 0..=self.horizon {
            for (i, v) in self.vertices.iter().enumerate() {
                let (lo, hi) = self.wilson(t, i);
                let _ = writeln!(out, "{t},{v},{},{lo},{hi},{}", self.freq(t, i), self.replicates);
            }
        }
        out
    }
}

/// Error frequencies over all replicates of a plan, computed in parallel.
/// Counts are integers, so the result is identical for any thread count.
pub fn estimate_error(plan: &SimPlan) -> ErrorEstimate {
    let obs = plan.observed.len();
    let len = (plan.horizon as usize + 1) * obs;
    let n = plan.automaton.cell_count();
    let counts = (0..plan.replicates)
        .into_par_iter()
        .fold(
            || (Scratch::new(n), vec![0u64; len]),
            |(mut scratch, mut counts), r| {
                simulate(plan, r, &mut scratch, |t, i, e| counts[t as usize * obs + i] += u64::from(e));
                (scratch, counts)
            },
        )
        .map(|(_, c)| c)
        .reduce(
            || vec![0u64; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    ErrorEstimate {
        horizon: plan.horizon,
        vertices: plan.observed.iter().map(|&v| plan.automaton.key(v as usize)).collect(),
        replicates: plan.replicates,
        counts,
    }
}

/// `P_0..P_T` for a cell of a uniform directed tree where each cell has
/// `d` children and errs when at least `h` of them do.
pub fn exact_tree_marginal(d: u32, h: u32, spec: &FaultSpec, horizon: u32) -> Result<Vec<f64>> {
    if h > d + 1 {
        return Err(Error::Engine(format!("threshold {h} exceeds d + 1 = {}", d + 1)));
    }
    if spec.beta() > 0.0 {
        return Err(Error::Engine(
            "manufacturing faults correlate a cell across time; the tree recursion is exact only for beta = 0".into(),
        ));
    }
    let mode = match spec.model() {
        FaultModel::Adversarial => RecursionMode::ExactGreedy,
        FaultModel::PureProbabilistic => RecursionMode::ExactPure,
    };
    let eps = spec.epsilon();
    let mut out = Vec::with_capacity(horizon as usize + 1);
    out.push(0.0);
    let mut p = 0.0;
    for _ in 0..horizon {
        p = recursion_step(p, d, h, eps, mode)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_toom, build_tree, Lattice, LatticeKind};
    use crate::treeify::treeify;

    fn no_faults(model: FaultModel, a: bool) -> FaultSpec {
        FaultSpec::new(0.0, 0.0, model, a).unwrap()
    }

    #[test]
    fn configuration_bits() {
        let mut c = Configuration::uniform(130, true, 0);
        assert_eq!(c.count_ones(), 130);
        c.set(129, false);
        c.set(0, false);
        assert_eq!(c.count_ones(), 128);
        assert!(!c.get(129) && c.get(128));
        let bits = c.to_bits();
        assert_eq!(Configuration::from_bits(&bits, 0), c);
    }

    #[test]
    fn fault_free_steps_are_fixed_points() {
        let l = build_tree(3, 3).unwrap();
        let auto = Automaton::majority(&l).unwrap();
        for a in [false, true] {
            let spec = no_faults(FaultModel::PureProbabilistic, a);
            let r = FaultRealization::new(0, 0, &spec);
            let c = Configuration::uniform(l.vertex_count(), a, 0);
            let next = auto.step(&c, &r, &spec, BoundaryPolicy::ClampToA).unwrap();
            assert_eq!(next.to_bits(), c.to_bits());
            assert_eq!(next.t, 1);
        }
    }

    #[test]
    fn toom_erases_a_single_error() {
        let l = build_toom(4, 4).unwrap();
        let auto = Automaton::majority(&l).unwrap();
        let spec = no_faults(FaultModel::PureProbabilistic, false);
        let r = FaultRealization::new(0, 0, &spec);
        let mut c = Configuration::uniform(16, false, 0);
        c.set(0, true);
        for _ in 0..2 {
            c = auto.step(&c, &r, &spec, BoundaryPolicy::ClampToA).unwrap();
        }
        assert_eq!(c.count_ones(), 0);
    }

    #[test]
    fn even_degree_majority_is_rejected() {
        let l = Lattice::from_parts(LatticeKind::Custom, vec![vec![1, 0], vec![0, 1]], vec![None; 2], vec![false; 2]).unwrap();
        assert!(Automaton::majority(&l).is_err());
        let l = build_tree(3, 1).unwrap();
        assert!(Automaton::uniform(&l, &RuleSpec::Threshold(4)).is_err());
        let maj3 = BooleanTable::from_hex(3, "e8").unwrap();
        assert!(Automaton::uniform(&l, &RuleSpec::Table(maj3)).is_ok());
    }

    fn plan(auto: Automaton, spec: FaultSpec, t: u32, r: u64) -> SimPlan {
        SimPlan::new(Arc::new(auto), spec, t, r, Observed::Root, 5, BoundaryPolicy::ClampToError).unwrap()
    }

    #[test]
    fn replicate_edge_cases() {
        let l = build_tree(3, 4).unwrap();
        let spec = no_faults(FaultModel::Adversarial, false);
        let tr = run_replicate(&plan(Automaton::majority(&l).unwrap(), spec, 0, 1), 0);
        assert_eq!(tr.errors, vec![false]);
        let tr = run_replicate(&plan(Automaton::majority(&l).unwrap(), spec, 4, 1), 0);
        assert!(tr.errors.iter().all(|&e| !e));
        let always = FaultSpec::new(1.0, 0.0, FaultModel::Adversarial, false).unwrap();
        let tr = run_replicate(&plan(Automaton::majority(&l).unwrap(), always, 4, 1), 3);
        assert!(!tr.error(0, 0));
        assert!((1..=4).all(|t| tr.error(t, 0)));
    }

    #[test]
    fn isolated_cell_errs_at_rate_epsilon() {
        let l = Lattice::from_parts(LatticeKind::Custom, vec![vec![0]], vec![Some(0)], vec![false]).unwrap();
        let spec = FaultSpec::new(0.2, 0.0, FaultModel::PureProbabilistic, false).unwrap();
        let est = estimate_error(&plan(Automaton::majority(&l).unwrap(), spec, 1, 20_000));
        let f = est.freq(1, 0);
        let sigma = (0.2f64 * 0.8 / 20_000.0).sqrt();
        assert!((f - 0.2).abs() < 3.0 * sigma, "{f}");
        assert_eq!(est.freq(0, 0), 0.0);
    }

    #[test]
    fn estimate_matches_replicates() {
        let l = build_tree(3, 3).unwrap();
        let spec = FaultSpec::new(0.3, 0.0, FaultModel::PureProbabilistic, false).unwrap();
        let p = plan(Automaton::majority(&l).unwrap(), spec, 3, 50);
        let est = estimate_error(&p);
        let by_hand: u64 = (0..50).map(|r| u64::from(run_replicate(&p, r).error(3, 0))).sum();
        assert_eq!(est.count(3, 0), by_hand);
    }

    #[test]
    fn pruning_does_not_change_observed_states() {
        // observing every cell updates everything; the root's trace must agree
        let l = build_tree(3, 4).unwrap();
        let spec = FaultSpec::new(0.2, 0.1, FaultModel::Adversarial, false).unwrap();
        let auto = Arc::new(Automaton::majority(&l).unwrap());
        let root_only = SimPlan::new(auto.clone(), spec, 4, 1, Observed::Root, 9, BoundaryPolicy::ClampToError).unwrap();
        let all = SimPlan::new(
            auto,
            spec,
            4,
            1,
            Observed::Cells((0..l.vertex_count() as u32).collect()),
            9,
            BoundaryPolicy::ClampToError,
        )
        .unwrap();
        for r in 0..40 {
            let a = run_replicate(&root_only, r);
            let b = run_replicate(&all, r);
            for t in 0..=4 {
                assert_eq!(a.error(t, 0), b.error(t, 0));
            }
        }
    }

    #[test]
    fn adversary_needs_monotone_rules() {
        let l = build_tree(3, 1).unwrap();
        let parity = BooleanTable::from_hex(3, "96").unwrap();
        let auto = Automaton::uniform(&l, &RuleSpec::Table(parity)).unwrap();
        let spec = FaultSpec::new(0.1, 0.0, FaultModel::Adversarial, false).unwrap();
        assert!(SimPlan::new(Arc::new(auto), spec, 1, 1, Observed::Root, 0, BoundaryPolicy::ClampToError).is_err());
    }

    #[test]
    fn tree_rules_need_matching_bit() {
        let rules = treeify(&build_tree(3, 2).unwrap(), 0).unwrap();
        let auto = Automaton::from_tree(&rules, true).unwrap();
        let spec = FaultSpec::new(0.1, 0.0, FaultModel::Adversarial, false).unwrap();
        assert!(SimPlan::new(Arc::new(auto), spec, 1, 1, Observed::Root, 0, BoundaryPolicy::ClampToError).is_err());
    }

    #[test]
    fn wilson_properties() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        let w = |n: u64| {
            let (lo, hi) = wilson_interval(n / 4, n);
            hi - lo
        };
        assert!(w(100) > w(1000) && w(1000) > w(10_000));
    }

    #[test]
    fn exact_marginal_examples() {
        let adv = FaultSpec::new(0.1, 0.0, FaultModel::Adversarial, false).unwrap();
        let p = exact_tree_marginal(3, 2, &adv, 2).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.1).abs() < 1e-15);
        assert!((p[2] - 0.1252).abs() < 1e-12);
        let half = FaultSpec::new(0.5, 0.0, FaultModel::PureProbabilistic, false).unwrap();
        let p = exact_tree_marginal(5, 3, &half, 6).unwrap();
        assert!(p[1..].iter().all(|&x| (x - 0.5).abs() < 1e-12));
        let combined = FaultSpec::new(0.05, 0.05, FaultModel::Adversarial, false).unwrap();
        assert!(exact_tree_marginal(3, 2, &combined, 2).is_err());
        assert!(exact_tree_marginal(3, 5, &adv, 2).is_err());
    }

    #[test]
    fn csv_shape() {
        let l = build_tree(3, 2).unwrap();
        let spec = FaultSpec::new(0.1, 0.0, FaultModel::Adversarial, false).unwrap();
        let est = estimate_error(&plan(Automaton::majority(&l).unwrap(), spec, 2, 10));
        let csv = est.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,vertex,freq,wilson_lo,wilson_hi,replicates");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,0,"));
    }
}
