//! Randomized-evaluation equivalence of expressions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Bindings, Expr};

/// Number of sample points used by [`equivalent`].
pub const EQUIV_POINTS: usize = 64;
/// Resamples allowed per point after an evaluation fault.
pub const EQUIV_RETRIES: usize = 8;
const REL_TOL: f64 = 1e-9;

/// A closed interval for one symbol. Samples are always drawn strictly inside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: true }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let u: f64 = rng.gen();
            let x = self.lo + u * (self.hi - self.lo);
            if x > self.lo && x < self.hi {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("interval for `{name}` has empty interior: [{lo}, {hi}]")]
    Empty { name: String, lo: f64, hi: f64 },
    #[error("symbol `{0}` is not covered by the domain")]
    Uncovered(String),
}

/// Sampling box: one interval per symbol.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Domain {
    intervals: BTreeMap<String, Interval>,
}

impl Domain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, interval: Interval) -> Self {
        self.insert(name, interval);
        self
    }

    pub fn insert(&mut self, name: &str, interval: Interval) {
        self.intervals.insert(name.to_string(), interval);
    }

    pub fn get(&self, name: &str) -> Option<&Interval> {
        self.intervals.get(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.intervals.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Interval)> {
        self.intervals.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        for (name, iv) in &self.intervals {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
                return Err(DomainError::Empty { name: name.clone(), lo: iv.lo, hi: iv.hi });
            }
        }
        Ok(())
    }

    pub fn covers(&self, e: &Expr) -> Result<(), DomainError> {
        match e.free_symbols().into_iter().find(|s| !self.intervals.contains_key(s)) {
            Some(s) => Err(DomainError::Uncovered(s)),
            None => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Bindings {
        self.intervals
            .iter()
            .map(|(k, iv)| (k.clone(), Complex64::new(iv.sample(rng), 0.0)))
            .collect()
    }

    /// Deterministic RNG used by every sampling routine in the crate.
    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

/// Outcome of a randomized equivalence test.
#[derive(Clone, Debug, PartialEq)]
pub enum Equivalence {
    Equivalent,
    /// The first sample point where the two sides disagree.
    Different { point: BTreeMap<String, f64>, lhs: Complex64, rhs: Complex64 },
    /// Evaluation faulted at some point even after resampling.
    Inconclusive { reason: String },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }

    pub fn witness(&self) -> Option<String> {
        match self {
            Equivalence::Equivalent => None,
            Equivalence::Different { point, lhs, rhs } => {
                let at: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                Some(format!("at {}: {} vs {}", at.join(", "), lhs, rhs))
            }
            Equivalence::Inconclusive { reason } => Some(reason.clone()),
        }
    }
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= REL_TOL * (1.0 + a.norm() + b.norm())
}

/// Tests `e1 ≡ e2` on `dom` at [`EQUIV_POINTS`] seeded sample points.
///
/// Agreement means `|e1 − e2| ≤ 1e−9·(1 + |e1| + |e2|)` at every point. A
/// point where either side faults is resampled up to [`EQUIV_RETRIES`]
/// times before the result is declared inconclusive.
pub fn equivalent(e1: &Expr, e2: &Expr, dom: &Domain, seed: u64) -> Result<Equivalence, DomainError> {
    dom.covers(e1)?;
    dom.covers(e2)?;
    if e1 == e2 {
        return Ok(Equivalence::Equivalent);
    }
    let mut rng = Domain::rng(seed);
    for _ in 0..EQUIV_POINTS {
        let mut last_fault = None;
        let mut evaluated = None;
        for _ in 0..=EQUIV_RETRIES {
            let point = dom.sample(&mut rng);
            match (e1.eval(&point), e2.eval(&point)) {
                (Ok(a), Ok(b)) => {
                    evaluated = Some((point, a, b));
                    break;
                }
                (Err(e), _) | (_, Err(e)) => last_fault = Some(e),
            }
        }
        let Some((point, a, b)) = evaluated else {
            let reason = last_fault.map(|e| e.to_string()).unwrap_or_default();
            return Ok(Equivalence::Inconclusive { reason: format!("no evaluable sample point: {reason}") });
        };
        if !close(a, b) {
            let point = point.into_iter().map(|(k, v)| (k, v.re)).collect();
            return Ok(Equivalence::Different { point, lhs: a, rhs: b });
        }
    }
    Ok(Equivalence::Equivalent)
}
