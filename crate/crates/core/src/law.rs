//! Exact finite probability laws with rational masses.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, Result};

/// Builds the rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Outcome types that can be written out as a single string.
pub trait Outcome: Ord + Clone {
    fn label(&self) -> String;
}

impl Outcome for usize {
    fn label(&self) -> String {
        self.to_string()
    }
}

impl Outcome for Vec<usize> {
    fn label(&self) -> String {
        self.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl Outcome for (usize, usize) {
    fn label(&self) -> String {
        format!("{},{}", self.0, self.1)
    }
}

/// One serialized entry: decimal digit strings keep full precision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LawEntry {
    pub outcome: String,
    pub num: String,
    pub den: String,
}

/// A probability law on finitely many outcomes. Masses are nonnegative and
/// sum to exactly one; zero-mass outcomes are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactLaw<O: Outcome> {
    probs: BTreeMap<O, BigRational>,
}

impl<O: Outcome> ExactLaw<O> {
    pub fn from_map(probs: BTreeMap<O, BigRational>) -> Result<Self> {
        let mut total = BigRational::zero();
        for p in probs.values() {
            if p.is_negative() {
                return domain("probabilities must be nonnegative");
            }
            total += p;
        }
        if !total.is_one() {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            probs: probs.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        })
    }

    pub fn point_mass(outcome: O) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(outcome, BigRational::one());
        Self { probs }
    }

    /// Probability of `outcome`; zero outside the support.
    pub fn prob(&self, outcome: &O) -> BigRational {
        self.probs.get(outcome).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &O> {
        self.probs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, &BigRational)> {
        self.probs.iter()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Image law under `f`.
    pub fn push_forward<P: Outcome>(&self, f: impl Fn(&O) -> P) -> ExactLaw<P> {
        let mut probs: BTreeMap<P, BigRational> = BTreeMap::new();
        for (o, p) in &self.probs {
            *probs.entry(f(o)).or_insert_with(BigRational::zero) += p;
        }
        ExactLaw { probs }
    }

    /// Exact expectation of `f`.
    pub fn expect(&self, f: impl Fn(&O) -> BigRational) -> BigRational {
        self.probs
            .iter()
            .fold(BigRational::zero(), |acc, (o, p)| acc + f(o) * p)
    }

    pub fn entries(&self) -> Vec<LawEntry> {
        self.probs
            .iter()
            .map(|(o, p)| LawEntry {
                outcome: o.label(),
                num: p.numer().to_string(),
                den: p.denom().to_string(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries()).expect("law entries always serialize")
    }
}
