//! Boolean transition functions.
//!
//! Simulation only ever evaluates threshold rules ("output 1 iff at least
//! `k` inputs are 1"); arbitrary truth tables exist for analysis and for
//! pure-probabilistic experiments with non-monotone rules.

use crate::error::{Error, Result};

/// Largest arity accepted by exhaustive analysis.
pub const MAX_TABLE_ARITY: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThresholdRule {
    arity: u32,
    ones_threshold: u32,
}

impl ThresholdRule {
    pub fn new(arity: u32, ones_threshold: u32) -> Result<Self> {
        if arity == 0 || ones_threshold == 0 || ones_threshold > arity {
            return Err(Error::Transition(format!(
                "threshold rule needs 1 <= threshold <= arity, got threshold {ones_threshold} with arity {arity}"
            )));
        }
        Ok(Self {
            arity,
            ones_threshold,
        })
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn ones_threshold(&self) -> u32 {
        self.ones_threshold
    }

    #[inline]
    pub fn eval_count(&self, ones: u32) -> bool {
        ones >= self.ones_threshold
    }

    pub fn to_table(&self) -> Result<BooleanTable> {
        BooleanTable::from_fn(self.arity, |x| self.eval_count(x.count_ones()))
    }
}

/// Majority over all neighbors, with the cell's own state added when
/// `include_self` is set. The effective arity must be odd.
pub fn full_majority_rule(degree: u32, include_self: bool) -> Result<ThresholdRule> {
    let arity = degree + u32::from(include_self);
    if arity.is_multiple_of(2) {
        return Err(Error::Transition(format!(
            "majority over {arity} votes has no tie-free threshold; add or drop the self vote"
        )));
    }
    ThresholdRule::new(arity, arity.div_ceil(2))
}

pub fn eval_rule(rule: &ThresholdRule, inputs: &[bool]) -> Result<bool> {
    if inputs.len() != rule.arity as usize {
        return Err(Error::Transition(format!(
            "rule of arity {} given {} inputs",
            rule.arity,
            inputs.len()
        )));
    }
    Ok(rule.eval_count(inputs.iter().filter(|&&b| b).count() as u32))
}

/// A Boolean function of `arity` arguments. Entry `x` is the output when
/// argument `j` equals bit `j` of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanTable {
    arity: u32,
    bits: Vec<bool>,
}

impl BooleanTable {
    pub fn new(arity: u32, bits: Vec<bool>) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::Transition(format!(
                "table arity {arity} exceeds the limit of {MAX_TABLE_ARITY}"
            )));
        }
        if bits.len() != 1usize << arity {
            return Err(Error::Transition(format!(
                "table of arity {arity} needs {} entries, got {}",
                1usize << arity,
                bits.len()
            )));
        }
        Ok(Self { arity, bits })
    }

    pub fn from_fn(arity: u32, f: impl Fn(u32) -> bool) -> Result<Self> {
        if arity > MAX_TABLE_ARITY {
            return Err(Error::Transition(format!(
                "table arity {arity} exceeds the limit of {MAX_TABLE_ARITY}"
            )));
        }
        Self::new(arity, (0..1u32 << arity).map(f).collect())
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    #[inline]
    pub fn eval_index(&self, x: u32) -> bool {
        self.bits[x as usize]
    }

    pub fn eval(&self, inputs: &[bool]) -> Result<bool> {
        if inputs.len() != self.arity as usize {
            return Err(Error::Transition(format!(
                "table of arity {} given {} inputs",
                self.arity,
                inputs.len()
            )));
        }
        let x = inputs
            .iter()
            .enumerate()
            .fold(0u32, |acc, (j, &b)| acc | (u32::from(b) << j));
        Ok(self.eval_index(x))
    }

    /// Parses the table as a big-endian hex number whose bit `x` is entry
    /// `x`, e.g. `e8` is 3-input majority. An optional `0x` prefix is allowed.
    pub fn from_hex(arity: u32, hex: &str) -> Result<Self> {
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        let n = 1usize << arity.min(MAX_TABLE_ARITY + 1);
        let digits = n.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Transition(format!(
                "arity {arity} table needs {digits} hex digits, got {}",
                hex.len()
            )));
        }
        let mut bits = vec![false; n];
        for (i, c) in hex.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::Transition(format!("bad hex digit {c:?}")))?;
            for b in 0..4 {
                let idx = 4 * i + b;
                let set = nibble >> b & 1 == 1;
                if idx < n {
                    bits[idx] = set;
                } else if set {
                    return Err(Error::Transition(format!(
                        "hex value has bits beyond the {n} table entries"
                    )));
                }
            }
        }
        Self::new(arity, bits)
    }

    pub fn to_hex(&self) -> String {
        let n = self.bits.len();
        let digits = n.div_ceil(4);
        (0..digits)
            .rev()
            .map(|i| {
                let nibble = (0..4)
                    .filter(|b| 4 * i + b < n && self.bits[4 * i + b])
                    .fold(0u32, |acc, b| acc | 1 << b);
                std::char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }
}

/// Result of [`analyze_boolean`]. A threshold of `None` means no number of
/// arguments forces that output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableAnalysis {
    pub monotone: bool,
    pub self_dual: bool,
    pub zero_threshold: Option<u32>,
    pub one_threshold: Option<u32>,
}

impl TableAnalysis {
    /// min of the two a-thresholds.
    pub fn threshold(&self) -> Option<u32> {
        match (self.zero_threshold, self.one_threshold) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

pub fn analyze_boolean(table: &BooleanTable) -> TableAnalysis {
    let k = table.arity;
    let n = 1u32 << k;
    let full = n - 1;
    let f = &table.bits;

    let monotone = (0..n).all(|x| {
        (0..k).all(|j| x >> j & 1 == 1 || !f[x as usize] || f[(x | 1 << j) as usize])
    });
    let self_dual = (0..n).all(|x| f[(x ^ full) as usize] != f[x as usize]);

    // forces1[s]: every input with the arguments in s set to 1 gives 1
    let mut forces1: Vec<bool> = f.clone();
    // zeros_ok[u]: every input supported inside u (arguments outside u at 0) gives 0
    let mut zeros_ok: Vec<bool> = f.iter().map(|&b| !b).collect();
    for j in 0..k {
        let bit = 1u32 << j;
        for s in 0..n {
            if s & bit == 0 {
                forces1[s as usize] &= forces1[(s | bit) as usize];
            } else {
                zeros_ok[s as usize] &= zeros_ok[(s ^ bit) as usize];
            }
        }
    }
    let one_threshold = (0..n)
        .filter(|&s| forces1[s as usize])
        .map(u32::count_ones)
        .min();
    let zero_threshold = (0..n)
        .filter(|&u| zeros_ok[u as usize])
        .map(|u| k - u.count_ones())
        .min();
    TableAnalysis {
        monotone,
        self_dual,
        zero_threshold,
        one_threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn majority_constructor() {
        let r = full_majority_rule(3, false).unwrap();
        assert_eq!((r.arity(), r.ones_threshold()), (3, 2));
        let r = full_majority_rule(4, true).unwrap();
        assert_eq!((r.arity(), r.ones_threshold()), (5, 3));
        assert_eq!(full_majority_rule(31, false).unwrap().ones_threshold(), 16);
        assert!(full_majority_rule(4, false).is_err());
        assert!(full_majority_rule(3, true).is_err());
    }

    #[test]
    fn evaluation() {
        let maj3 = full_majority_rule(3, false).unwrap();
        assert!(!eval_rule(&maj3, &[false, false, true]).unwrap());
        assert!(eval_rule(&maj3, &[true, true, false]).unwrap());
        let maj5 = full_majority_rule(5, false).unwrap();
        assert!(eval_rule(&maj5, &[true, true, false, false, true]).unwrap());
        assert!(eval_rule(&maj3, &[true, true]).is_err());
    }

    #[test]
    fn threshold_rule_bounds() {
        assert!(ThresholdRule::new(3, 0).is_err());
        assert!(ThresholdRule::new(3, 4).is_err());
        assert!(ThresholdRule::new(0, 0).is_err());
    }

    #[test]
    fn analyze_majority_xor_constant() {
        let maj3 = BooleanTable::from_hex(3, "e8").unwrap();
        assert_eq!(maj3, full_majority_rule(3, false).unwrap().to_table().unwrap());
        let a = analyze_boolean(&maj3);
        assert!(a.monotone && a.self_dual);
        assert_eq!((a.zero_threshold, a.one_threshold), (Some(2), Some(2)));

        let xor2 = BooleanTable::from_hex(2, "6").unwrap();
        assert!(!analyze_boolean(&xor2).monotone);

        let zero = BooleanTable::from_fn(3, |_| false).unwrap();
        let a = analyze_boolean(&zero);
        assert_eq!((a.zero_threshold, a.one_threshold), (Some(0), None));
    }

    #[test]
    fn dictator_and_and() {
        // f(x) = x0: setting argument 0 forces either value
        let dict = BooleanTable::from_fn(3, |x| x & 1 == 1).unwrap();
        let a = analyze_boolean(&dict);
        assert!(a.monotone && a.self_dual);
        assert_eq!((a.zero_threshold, a.one_threshold), (Some(1), Some(1)));
        let and3 = BooleanTable::from_fn(3, |x| x == 7).unwrap();
        let a = analyze_boolean(&and3);
        assert!(a.monotone && !a.self_dual);
        assert_eq!((a.zero_threshold, a.one_threshold), (Some(1), Some(3)));
    }

    #[test]
    fn non_monotone_thresholds_use_forcing_definition() {
        // x0 AND NOT x1: setting both arguments is needed to force 1
        let t = BooleanTable::from_fn(2, |x| x == 1).unwrap();
        let a = analyze_boolean(&t);
        assert!(!a.monotone);
        assert_eq!(a.one_threshold, None);
        assert_eq!(a.zero_threshold, Some(1));
    }

    #[test]
    fn hex_round_trip_and_errors() {
        let t = BooleanTable::from_hex(4, "0x8ee8").unwrap();
        assert_eq!(t.to_hex(), "8ee8");
        assert_eq!(BooleanTable::from_hex(1, "2").unwrap().to_hex(), "2");
        assert!(BooleanTable::from_hex(1, "4").is_err());
        assert!(BooleanTable::from_hex(3, "e").is_err());
        assert!(BooleanTable::from_hex(3, "zz").is_err());
        assert!(BooleanTable::from_fn(21, |_| true).is_err());
    }

    #[test]
    fn threshold_rules_are_monotone_and_majority_self_dual() {
        for d in 1..=15u32 {
            for k in 1..=d {
                let a = analyze_boolean(&ThresholdRule::new(d, k).unwrap().to_table().unwrap());
                assert!(a.monotone, "d={d} k={k}");
                assert_eq!(a.self_dual, d % 2 == 1 && k == d.div_ceil(2), "d={d} k={k}");
                assert_eq!(a.one_threshold, Some(k));
                assert_eq!(a.zero_threshold, Some(d - k + 1));
            }
            if d % 2 == 1 {
                let maj = full_majority_rule(d, false).unwrap().to_table().unwrap();
                assert_eq!(analyze_boolean(&maj).threshold(), Some(d.div_ceil(2)));
            }
        }
    }

    proptest! {
        #[test]
        fn eval_is_permutation_symmetric(
            inputs in proptest::collection::vec(any::<bool>(), 1..24),
            seed in any::<u64>(),
            k in 1u32..24,
        ) {
            let d = inputs.len() as u32;
            let rule = ThresholdRule::new(d, k.min(d)).unwrap();
            let mut shuffled = inputs.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(eval_rule(&rule, &inputs).unwrap(), eval_rule(&rule, &shuffled).unwrap());
        }

        #[test]
        fn hex_round_trips(arity in 0u32..8, seed in any::<u64>()) {
            let t = BooleanTable::from_fn(arity, |x| (seed.rotate_left(x) ^ x as u64) & 1 == 1).unwrap();
            prop_assert_eq!(BooleanTable::from_hex(arity, &t.to_hex()).unwrap(), t);
        }
    }
}
