//! Per-replicate statistics shared by the command line and the suites.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::coalescent::{
    hat_external_length, sample_merge_history, sample_rho_single, sample_waiting_times,
    scaled_point_pattern, single_branch_length, total_external_length, window_external_length,
};
use crate::error::{check_sample_size, domain, Error, Result};
use crate::runner::run_replicates;
use crate::urn::{sample_urn_path, tau};

/// Stream domain for `simulate` runs; the suites use their own.
pub const SIMULATE_DOMAIN: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatisticKind {
    /// Total external length `L_n`.
    #[serde(rename = "L")]
    L,
    /// `L_n^{alpha,beta}`.
    #[serde(rename = "L_window")]
    LWindow,
    /// `hat L_n^{alpha,beta}`.
    #[serde(rename = "L_hat")]
    LHat,
    /// `tau_n` of the urn chain.
    #[serde(rename = "tau")]
    Tau,
    /// `rho(1)`.
    #[serde(rename = "rho")]
    Rho,
    /// `R_n = T_rho`.
    #[serde(rename = "R")]
    R,
    /// `U_k`.
    #[serde(rename = "urn_marginal")]
    UrnMarginal,
    /// `eta_n([a, b))`.
    #[serde(rename = "eta_count")]
    EtaCount,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 8] = [
        StatisticKind::L,
        StatisticKind::LWindow,
        StatisticKind::LHat,
        StatisticKind::Tau,
        StatisticKind::Rho,
        StatisticKind::R,
        StatisticKind::UrnMarginal,
        StatisticKind::EtaCount,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::L => "L",
            StatisticKind::LWindow => "L_window",
            StatisticKind::LHat => "L_hat",
            StatisticKind::Tau => "tau",
            StatisticKind::Rho => "rho",
            StatisticKind::R => "R",
            StatisticKind::UrnMarginal => "urn_marginal",
            StatisticKind::EtaCount => "eta_count",
        }
    }

    /// Whether every value is an integer.
    pub fn is_integral(&self) -> bool {
        matches!(self, StatisticKind::Tau | StatisticKind::Rho | StatisticKind::UrnMarginal | StatisticKind::EtaCount)
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown statistic {s:?}")))
    }
}

/// A statistic together with every parameter it may need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticSpec {
    pub kind: StatisticKind,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub k: usize,
}

impl StatisticSpec {
    pub fn new(kind: StatisticKind, n: usize) -> Self {
        Self { kind, n, alpha: 0.0, beta: 1.0, a: 1.0, b: 2.0, k: 1 }
    }

    pub fn window(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn interval(mut self, a: f64, b: f64) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn level(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Checks the parameters the statistic uses, before any sampling.
    pub fn validate(&self) -> Result<()> {
        check_sample_size(self.n)?;
        match self.kind {
            StatisticKind::LWindow | StatisticKind::LHat => {
                if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) || self.alpha >= self.beta {
                    return domain(format!(
                        "need 0 <= alpha < beta <= 1, got alpha = {}, beta = {}",
                        self.alpha, self.beta
                    ));
                }
            }
            StatisticKind::EtaCount => {
                if !(self.a > 0.0 && self.a < self.b) {
                    return domain(format!("need 0 < a < b, got a = {}, b = {}", self.a, self.b));
                }
            }
            StatisticKind::UrnMarginal => {
                if self.k > self.n {
                    return domain(format!("k = {} outside 0..=n", self.k));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// One replicate. The spec must have passed [`StatisticSpec::validate`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let n = self.n;
        let value = match self.kind {
            StatisticKind::L | StatisticKind::LWindow | StatisticKind::LHat | StatisticKind::EtaCount => {
                let times = sample_waiting_times(n, rng)?;
                let hist = sample_merge_history(n, rng)?;
                match self.kind {
                    StatisticKind::L => total_external_length(&times, &hist)?,
                    StatisticKind::LWindow => window_external_length(&times, &hist, self.alpha, self.beta)?,
                    StatisticKind::LHat => hat_external_length(&times, &hist, self.alpha, self.beta)?,
                    _ => scaled_point_pattern(&times, &hist)?.count_in(self.a, self.b) as f64,
                }
            }
            StatisticKind::Tau => tau(&sample_urn_path(n, rng)?) as f64,
            StatisticKind::Rho => sample_rho_single(n, rng)? as f64,
            StatisticKind::R => {
                let rho = sample_rho_single(n, rng)?;
                let times = sample_waiting_times(n, rng)?;
                single_branch_length(&times, rho)?.0
            }
            StatisticKind::UrnMarginal => sample_urn_path(n, rng)?.get(self.k) as f64,
        };
        Ok(value)
    }
}

/// `reps` values of `spec`, replicate `r` on stream `(seed, SIMULATE_DOMAIN, r)`.
pub fn simulate(spec: &StatisticSpec, reps: usize, seed: u64, threads: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    run_replicates(reps, seed, SIMULATE_DOMAIN, threads, |_, rng| spec.sample(rng))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in StatisticKind::ALL {
            assert_eq!(k.name().parse::<StatisticKind>().unwrap(), k);
        }
        assert!("nope".parse::<StatisticKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(StatisticSpec::new(StatisticKind::L, 1).validate().is_err());
        assert!(StatisticSpec::new(StatisticKind::LWindow, 10).window(0.5, 0.5).validate().is_err());
        assert!(StatisticSpec::new(StatisticKind::EtaCount, 10).interval(0.0, 1.0).validate().is_err());
        assert!(StatisticSpec::new(StatisticKind::UrnMarginal, 10).level(11).validate().is_err());
        assert!(StatisticSpec::new(StatisticKind::UrnMarginal, 10).level(10).validate().is_ok());
    }

    #[test]
    fn simulate_is_thread_independent() {
        let spec = StatisticSpec::new(StatisticKind::L, 30);
        assert_eq!(simulate(&spec, 200, 9, 1).unwrap(), simulate(&spec, 200, 9, 4).unwrap());
    }
}
