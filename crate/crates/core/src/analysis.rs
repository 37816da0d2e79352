//! Closed-form machinery: binomial tails, the per-cell error recursion on
//! trees, the induction-step inequality, and the degree-bound calculators.
//!
//! Degree bounds use natural logarithms; entropies are in bits.

use crate::error::{Error, Result};

/// `sum_{k=h}^{d} C(d,k) p^k (1-p)^(d-k)`.
///
/// Sums whichever tail is shorter in probability mass and works in log
/// space, so it stays accurate for large `d`.
pub fn binomial_tail(d: u32, h: u32, p: f64) -> Result<f64> {
    if h > d + 1 {
        return Err(Error::Analysis(format!("tail start {h} exceeds d + 1 = {}", d + 1)));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Analysis(format!("probability out of range: {p}")));
    }
    if h == 0 {
        return Ok(1.0);
    }
    if h > d {
        return Ok(0.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut ln_fact = Vec::with_capacity(d as usize + 1);
    ln_fact.push(0.0f64);
    for k in 1..=d {
        ln_fact.push(ln_fact[k as usize - 1] + (k as f64).ln());
    }
    let ln_term =
        |k: u32| ln_fact[d as usize] - ln_fact[k as usize] - ln_fact[(d - k) as usize] + k as f64 * lp + (d - k) as f64 * lq;
    let sum = |range: std::ops::RangeInclusive<u32>| {
        let terms: Vec<f64> = range.map(ln_term).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>()
    };
    // the mean sits at d*p; sum the side that excludes it
    if h as f64 > d as f64 * p {
        Ok(sum(h..=d).min(1.0))
    } else {
        Ok((1.0 - sum(0..=h - 1)).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecursionMode {
    /// `eps + BinTail(d, h, P)`: the first union bound in the tree argument.
    PaperBound,
    /// `eps + 2^m (4P(1-P))^((d-m)/2)`: the closed-form bound the induction
    /// is carried out with.
    ChernoffBound { m: u32 },
    /// `eps + (1 - eps) BinTail`: exact on trees with the greedy adversary.
    ExactGreedy,
    /// `eps (1 - BinTail) + (1 - eps) BinTail`: exact with complementing faults.
    ExactPure,
}

impl RecursionMode {
    pub fn name(&self) -> &'static str {
        match self {
            RecursionMode::PaperBound => "paper_bound",
            RecursionMode::ChernoffBound { .. } => "chernoff_bound",
            RecursionMode::ExactGreedy => "exact_greedy",
            RecursionMode::ExactPure => "exact_pure",
        }
    }
}

/// One step of the error recursion, clamped to `[0, 1]`.
pub fn recursion_step(p: f64, d: u32, h: u32, eps: f64, mode: RecursionMode) -> Result<f64> {
    let next = match mode {
        RecursionMode::PaperBound => eps + binomial_tail(d, h, p)?,
        RecursionMode::ChernoffBound { m } => {
            if m > d {
                return Err(Error::Analysis(format!("m = {m} exceeds d = {d}")));
            }
            eps + 2f64.powi(m as i32) * (4.0 * p * (1.0 - p)).powf((d - m) as f64 / 2.0)
        }
        RecursionMode::ExactGreedy => eps + (1.0 - eps) * binomial_tail(d, h, p)?,
        RecursionMode::ExactPure => {
            let tail = binomial_tail(d, h, p)?;
            eps * (1.0 - tail) + (1.0 - eps) * tail
        }
    };
    Ok(next.clamp(0.0, 1.0))
}

pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionParams {
    pub d: u32,
    pub h: u32,
    pub m: u32,
    pub xi: f64,
    /// Error ceiling; defaults to `1/2 - xi/2`.
    pub ceiling: Option<f64>,
}

impl RecursionParams {
    pub fn new(d: u32, h: u32, m: u32, xi: f64) -> Self {
        Self {
            d,
            h,
            m,
            xi,
            ceiling: None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        0.5 - self.xi
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling.unwrap_or(0.5 - self.xi / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Tolerant,
    /// First time the ceiling was exceeded.
    Violated { t: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrace {
    pub params: RecursionParams,
    pub mode: RecursionMode,
    pub epsilon: f64,
    /// `P_0 = 0, P_1, ...`
    pub sequence: Vec<f64>,
    pub verdict: Verdict,
    /// Last value, when the iteration converged before the cap.
    pub fixed_point: Option<f64>,
}

impl RecursionTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,p\n");
        for (t, p) in self.sequence.iter().enumerate() {
            s.push_str(&format!("{t},{p:.17e}\n"));
        }
        s
    }
}

/// Iterates the recursion from `P_0 = 0` until it settles (`|dP| < 1e-12`)
/// or `t_max` steps, recording the first time it exceeds the ceiling.
pub fn iterate_recursion(params: RecursionParams, mode: RecursionMode, t_max: u32) -> Result<RecursionTrace> {
    if !(params.xi > 0.0 && params.xi <= 0.5) {
        return Err(Error::Analysis(format!("xi must lie in (0, 1/2], got {}", params.xi)));
    }
    let eps = params.epsilon();
    let ceiling = params.ceiling();
    let t_max = t_max.min(MAX_ITERATIONS);
    let mut sequence = vec![0.0];
    let mut verdict = Verdict::Tolerant;
    let mut fixed_point = None;
    let mut p = 0.0;
    for t in 1..=t_max {
        let next = recursion_step(p, params.d, params.h, eps, mode)?;
        sequence.push(next);
        if next > ceiling && verdict == Verdict::Tolerant {
            verdict = Verdict::Violated { t };
        }
        if (next - p).abs() < FIXED_POINT_TOLERANCE {
            fixed_point = Some(next);
            break;
        }
        p = next;
    }
    Ok(RecursionTrace {
        params,
        mode,
        epsilon: eps,
        sequence,
        verdict,
        fixed_point,
    })
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 0.5) {
        return Err(Error::Analysis(format!("xi must lie in (0, 1/2), got {xi}")));
    }
    Ok(())
}

/// `xi/2 - 2^m (1 - xi^2)^((d-m)/2)`; nonnegative exactly when the
/// induction step `P <= 1/2 - xi/2 => P' <= 1/2 - xi/2` closes.
pub fn induction_gap(xi: f64, m: u32, d: u32) -> Result<f64> {
    check_xi(xi)?;
    if d <= m {
        return Err(Error::Analysis(format!("need d > m, got d = {d}, m = {m}")));
    }
    Ok(xi / 2.0 - 2f64.powi(m as i32) * (1.0 - xi * xi).powf((d - m) as f64 / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

/// Least integer `>= bound` (with the given parity, if any), confirmed
/// minimal by re-checking the predecessor against `holds`.
fn least_integer(bound: f64, parity: Option<Parity>, holds: impl Fn(u64) -> bool) -> u64 {
    let mut n = bound.ceil().max(0.0) as u64;
    let fits = |n: u64| match parity {
        None => true,
        Some(Parity::Odd) => n % 2 == 1,
        Some(Parity::Even) => n.is_multiple_of(2),
    };
    while !fits(n) || !holds(n) {
        n += 1;
    }
    let step = if parity.is_some() { 2 } else { 1 };
    while n >= step && holds(n - step) {
        n -= step;
    }
    n
}

/// Least `d` with `d >= m + (2/xi^2) ln(2^(m+1)/xi)`.
pub fn prop21_min_degree(xi: f64, m: u32) -> Result<u64> {
    check_xi(xi)?;
    let rhs = m as f64 + 2.0 / (xi * xi) * ((m + 1) as f64 * std::f64::consts::LN_2 - xi.ln());
    Ok(least_integer(rhs, None, |d| d as f64 >= rhs))
}

/// Least out-degree `s` for a majority automaton that becomes a directed
/// tree after deleting at most `r` out-edges per vertex:
/// `s >= 3r - 1 + (2/xi^2) ln(2^(2r)/xi)`.
pub fn thm22_min_out_degree(xi: f64, r: u32, parity: Option<Parity>) -> Result<u64> {
    check_xi(xi)?;
    if r == 0 {
        return Err(Error::Analysis("deletion budget r must be at least 1".into()));
    }
    let rhs = (3 * r) as f64 - 1.0 + 2.0 / (xi * xi) * ((2 * r) as f64 * std::f64::consts::LN_2 - xi.ln());
    Ok(least_integer(rhs, parity, |s| s as f64 >= rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityBounds {
    pub odd_q: u64,
    pub even_q: u64,
}

/// Least odd / even vertex degree of the regular tree with full majority
/// voting certified tolerant at `eps = 1/2 - xi`. Odd `q` loses only the
/// parent edge (`r = 1`); even `q` adds a self-loop (`s = q + 1`) and loses it
/// too (`r = 2`).
pub fn cor23_min_q(xi: f64) -> Result<ParityBounds> {
    Ok(ParityBounds {
        odd_q: thm22_min_out_degree(xi, 1, Some(Parity::Odd))?,
        even_q: least_even_with_self_loop(xi, 2)?,
    })
}

/// As [`cor23_min_q`] for `{p,q}` tessellations, where shells cost up to two
/// parents, two same-shell neighbors and one shared child (`r = 5`), plus
/// the self-loop for even `q` (`r = 6`).
pub fn cor24_min_q(xi: f64) -> Result<ParityBounds> {
    Ok(ParityBounds {
        odd_q: thm22_min_out_degree(xi, 5, Some(Parity::Odd))?,
        even_q: least_even_with_self_loop(xi, 6)?,
    })
}

fn least_even_with_self_loop(xi: f64, r: u32) -> Result<u64> {
    // out-degree s = q + 1 must satisfy the bound; q even
    let s_min = thm22_min_out_degree(xi, r, None)?;
    let q = s_min.saturating_sub(1);
    Ok(if q % 2 == 0 { q } else { q + 1 })
}

/// `ceil(1 / (4 xi^2))`: no automaton of smaller degree tolerates
/// transient faults at `eps = 1/2 - xi`.
pub fn thm42_min_degree(xi: f64) -> Result<u64> {
    check_xi(xi)?;
    let bound = 1.0 / (4.0 * xi * xi);
    Ok(least_integer(bound, None, |d| d as f64 * 4.0 * xi * xi >= 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    Prop21,
    Cor23Odd,
    Cor23Even,
    Cor24Odd,
    Cor24Even,
    Thm42Lower,
}

impl Formula {
    pub fn name(self) -> &'static str {
        match self {
            Formula::Prop21 => "prop21",
            Formula::Cor23Odd => "cor23_odd",
            Formula::Cor23Even => "cor23_even",
            Formula::Cor24Odd => "cor24_odd",
            Formula::Cor24Even => "cor24_even",
            Formula::Thm42Lower => "thm42_lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub xi: f64,
    pub m: Option<u32>,
    pub parity: Option<Parity>,
    pub required: u64,
    pub formula: Formula,
}

/// Every bound at one `xi`, in table column order
/// (`prop21` for m = 0..=3, then the corollaries, then the lower bound).
pub fn bound_table_row(xi: f64) -> Result<Vec<BoundReport>> {
    let mut row = Vec::with_capacity(9);
    for m in 0..=3 {
        row.push(BoundReport {
            xi,
            m: Some(m),
            parity: None,
            required: prop21_min_degree(xi, m)?,
            formula: Formula::Prop21,
        });
    }
    let c23 = cor23_min_q(xi)?;
    let c24 = cor24_min_q(xi)?;
    for (formula, parity, required) in [
        (Formula::Cor23Odd, Parity::Odd, c23.odd_q),
        (Formula::Cor23Even, Parity::Even, c23.even_q),
        (Formula::Cor24Odd, Parity::Odd, c24.odd_q),
        (Formula::Cor24Even, Parity::Even, c24.even_q),
    ] {
        row.push(BoundReport {
            xi,
            m: None,
            parity: Some(parity),
            required,
            formula,
        });
    }
    row.push(BoundReport {
        xi,
        m: None,
        parity: None,
        required: thm42_min_degree(xi)?,
        formula: Formula::Thm42Lower,
    });
    Ok(row)
}

pub const BOUND_TABLE_HEADER: &str =
    "xi,prop21_m0,prop21_m1,prop21_m2,prop21_m3,cor23_odd,cor23_even,cor24_odd,cor24_even,thm42_lower";

pub fn bound_table_csv(xis: &[f64]) -> Result<String> {
    let mut out = String::from(BOUND_TABLE_HEADER);
    out.push('\n');
    for &xi in xis {
        let row = bound_table_row(xi)?;
        out.push_str(&xi.to_string());
        for r in row {
            out.push_str(&format!(",{}", r.required));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Analysis(format!("probability out of range: {p}")));
    }
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// `1 - h(delta)`: the least mutual information between a uniform bit and
/// any estimate of it that errs with probability at most `delta < 1/2`.
pub fn fano_floor(delta: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Analysis(format!(
            "error target must lie in [0, 1/2), got {delta}"
        )));
    }
    Ok(1.0 - binary_entropy(delta)?)
}
