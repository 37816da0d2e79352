//! Fault models.
//!
//! Transient faults hit each (cell, time) independently at rate `alpha`;
//! manufacturing faults hit each cell once, at rate `beta`, and hand that
//! cell to the adversary forever. In the pure-probabilistic model a fault
//! complements the computed value. In the adversarial model a fault lets
//! the adversary pick the value; for monotone rules started from all-`a`
//! the greedy choice (always the error value `1 - a`) is optimal, so that
//! is the only adversary implemented.

use crate::error::{Error, Result};
use crate::rng::{CounterRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultModel {
    PureProbabilistic,
    Adversarial,
}

impl FaultModel {
    pub fn name(self) -> &'static str {
        match self {
            FaultModel::PureProbabilistic => "pure_probabilistic",
            FaultModel::Adversarial => "adversarial",
        }
    }
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Faults(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// `1 - (1 - alpha)(1 - beta)`: the chance a cell is subject to either
/// kind of fault at a given step.
pub fn combined_rate(alpha: f64, beta: f64) -> Result<f64> {
    check_probability("alpha", alpha)?;
    check_probability("beta", beta)?;
    Ok(1.0 - (1.0 - alpha) * (1.0 - beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    alpha: f64,
    beta: f64,
    model: FaultModel,
    remembered: bool,
    xi: Option<f64>,
}

impl FaultSpec {
    pub fn new(alpha: f64, beta: f64, model: FaultModel, remembered: bool) -> Result<Self> {
        combined_rate(alpha, beta)?;
        if model == FaultModel::PureProbabilistic && beta > 0.0 {
            return Err(Error::Faults(
                "manufacturing faults give the cell to the adversary, so beta must be 0 under the pure-probabilistic model".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            model,
            remembered,
            xi: None,
        })
    }

    /// Transient faults only, at rate `1/2 - xi`.
    pub fn from_xi(xi: f64, model: FaultModel, remembered: bool) -> Result<Self> {
        if !(xi > 0.0 && xi <= 0.5) {
            return Err(Error::Faults(format!("xi must lie in (0, 1/2], got {xi}")));
        }
        let mut spec = Self::new(0.5 - xi, 0.0, model, remembered)?;
        spec.xi = Some(xi);
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        1.0 - (1.0 - self.alpha) * (1.0 - self.beta)
    }

    /// The margin `1/2 - epsilon` (or the margin this `FaultSpec` was built from).
    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or(0.5 - self.epsilon())
    }

    pub fn model(&self) -> FaultModel {
        self.model
    }

    pub fn remembered(&self) -> bool {
        self.remembered
    }

    pub fn error_value(&self) -> bool {
        !self.remembered
    }

    pub fn with_remembered(mut self, remembered: bool) -> Self {
        self.remembered = remembered;
        self
    }

    /// Fails unless `epsilon < 1/2`, as tolerance experiments require.
    pub fn require_tolerance_regime(&self) -> Result<()> {
        if self.epsilon() >= 0.5 {
            return Err(Error::Faults(format!(
                "combined fault rate {} is not below 1/2",
                self.epsilon()
            )));
        }
        Ok(())
    }
}

/// Value a cell takes after faults are applied to its computed value.
#[inline]
pub fn apply_fault(computed: bool, fault: bool, manufacturing: bool, spec: &FaultSpec) -> Result<bool> {
    match spec.model {
        FaultModel::PureProbabilistic if manufacturing => Err(Error::Faults(
            "manufacturing fault under the pure-probabilistic model".into(),
        )),
        FaultModel::PureProbabilistic => Ok(computed ^ fault),
        FaultModel::Adversarial if fault || manufacturing => Ok(spec.error_value()),
        FaultModel::Adversarial => Ok(computed),
    }
}

/// Deterministic fault oracle for one replicate.
///
/// Vertices are addressed by a 64-bit key (normally the vertex index in
/// the largest lattice of an experiment), so light cones of a lattice see
/// the same faults as the lattice itself.
#[derive(Debug, Clone)]
pub struct FaultRealization {
    rng: CounterRng,
    alpha: f64,
    beta: f64,
}

impl FaultRealization {
    pub fn new(seed: u64, replicate: u64, spec: &FaultSpec) -> Self {
        Self {
            rng: CounterRng::new(seed, replicate),
            alpha: spec.alpha,
            beta: spec.beta,
        }
    }

    /// Transient fault at the transition producing time `t` (t >= 1).
    #[inline]
    pub fn transient(&self, key: u64, t: u32) -> bool {
        self.rng.bernoulli(key, t as u64, Stream::Transient, self.alpha)
    }

    #[inline]
    pub fn manufacturing(&self, key: u64) -> bool {
        self.rng.bernoulli(key, 0, Stream::Manufacturing, self.beta)
    }
}

/// Vertices of a `vertex_count`-cell lattice hit by manufacturing faults in
/// replicate 0 of `seed`.
pub fn sample_manufacturing(vertex_count: usize, beta: f64, seed: u64) -> Result<Vec<usize>> {
    check_probability("beta", beta)?;
    let rng = CounterRng::new(seed, 0);
    Ok((0..vertex_count)
        .filter(|&v| rng.bernoulli(v as u64, 0, Stream::Manufacturing, beta))
        .collect())
}
