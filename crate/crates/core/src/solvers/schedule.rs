use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `γ_k = R_{k−1} / (G √(n₀ + 1))`
    Asa,
    /// `β_k = R_{k−1} √n₀ / (2G)`
    Asa2,
    /// `γ_k = R_{k−1} / (G √n₀)`
    Asa3,
}

/// `(m, n₀)` with `m = ⌊½ log₂(2n / log₂ n)⌋ − 1` and `n₀ = ⌊n/m⌋`.
///
/// `m` is 0 (and `n₀` undefined) for small `n`; callers must reject that.
pub fn stage_count(n: u64) -> (usize, u64) {
    if n < 3 {
        return (0, 0);
    }
    let nf = n as f64;
    let inner = 0.5 * (2.0 * nf / nf.log2()).log2();
    let m = inner.floor() as i64 - 1;
    if m <= 0 {
        return (0, 0);
    }
    (m as usize, n / m as u64)
}

/// The multi-stage driver state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub rule: StepRule,
    pub n: u64,
    pub m: usize,
    pub n0: u64,
    pub g: f64,
    pub r0: f64,
    /// `R_0, …, R_m`.
    pub radii: Vec<f64>,
    /// Step parameter of stages `1..=m` (`γ_k`, or `β_k` for ASA2).
    pub steps: Vec<f64>,
}

impl StageSchedule {
    pub fn new(rule: StepRule, n: u64, r0: f64, g: f64) -> Result<Self> {
        if n < 100 {
            return Err(Error::Precondition(format!(
                "the adaptive rate guarantee needs n >= 100, got {n}"
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) || !(g > 0.0 && g.is_finite()) {
            return Err(Error::Precondition(format!(
                "R0 and G must be positive, got R0={r0}, G={g}"
            )));
        }
        let (m, n0) = stage_count(n);
        if m == 0 {
            return Err(Error::Precondition(format!("stage count is 0 for n = {n}")));
        }
        let radii: Vec<f64> = (0..=m).map(|k| r0 / 2f64.powi(k as i32)).collect();
        let n0f = n0 as f64;
        let steps = radii[..m]
            .iter()
            .map(|r| match rule {
                StepRule::Asa => r / (g * (n0f + 1.0).sqrt()),
                StepRule::Asa2 => r * n0f.sqrt() / (2.0 * g),
                StepRule::Asa3 => r / (g * n0f.sqrt()),
            })
            .collect();
        Ok(Self {
            rule,
            n,
            m,
            n0,
            g,
            r0,
            radii,
            steps,
        })
    }

    pub fn samples(&self) -> u64 {
        self.m as u64 * self.n0
    }
}

/// High-probability SSG bound `R₀G(1 + 4√(2 log(2/δ)))/√(T+1)` for the step
/// `γ = R₀/(G√(T+1))`.
pub fn ssg_tail_bound(r0: f64, g: f64, t: u64, delta: f64) -> f64 {
    r0 * g * (1.0 + 4.0 * (2.0 * (2.0 / delta).ln()).sqrt()) / ((t + 1) as f64).sqrt()
}
