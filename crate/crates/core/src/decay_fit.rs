//! Power-law fits `value = β τ^α` in log-log space and two-regime breakpoint search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceCurve;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<F> {
    pub alpha: F,
    pub beta: F,
    /// Mean squared residual of `ln value`.
    pub mse: F,
    pub n_points: usize,
}

/// Ordinary least squares of `ln value` on `ln τ`.
pub fn power_law_fit<F: Real>(points: &[(F, F)]) -> Result<PowerLawFit<F>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!("need >= 2 points, got {}", points.len())));
    }
    if let Some((t, v)) = points.iter().find(|(t, v)| !(*t > F::zero() && *v > F::zero())) {
        return Err(Error::InvalidArgument(format!("non-positive point ({t}, {v})")));
    }
    let logs: Vec<(F, F)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    fit_logs(&logs)
}

fn fit_logs<F: Real>(logs: &[(F, F)]) -> Result<PowerLawFit<F>> {
    let n = F::of_usize(logs.len());
    let mx = logs.iter().map(|p| p.0).sum::<F>() / n;
    let my = logs.iter().map(|p| p.1).sum::<F>() / n;
    let (mut sxx, mut sxy) = (F::zero(), F::zero());
    for &(x, y) in logs {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if sxx <= F::zero() {
        return Err(Error::InvalidArgument("degenerate fit: a single distinct lag".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let mse = logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + alpha * x);
            r * r
        })
        .sum::<F>()
        / n;
    Ok(PowerLawFit { alpha, beta: intercept.exp(), mse, n_points: logs.len() })
}

/// Controls the breakpoint scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakpointSearch {
    /// Minimum points on each side of the breakpoint.
    pub min_segment: usize,
    /// Optional inclusive range of candidate breakpoints.
    pub candidates: Option<(usize, usize)>,
}

impl Default for BreakpointSearch {
    fn default() -> Self {
        Self { min_segment: 5, candidates: None }
    }
}

/// Two power laws split at `tau_plat`: the first covers `τ < tau_plat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<F> {
    pub alpha1: F,
    pub beta1: F,
    pub alpha2: F,
    pub beta2: F,
    pub tau_plat: usize,
    pub mse1: F,
    pub mse2: F,
    pub n1: usize,
    pub n2: usize,
    /// Lags excluded because their value was zero.
    pub dropped_lags: usize,
}

impl<F: Real> DecayFit<F> {
    pub fn objective(&self) -> F {
        (self.mse1 + self.mse2) / F::of(2.0)
    }
}

/// Scans every feasible breakpoint and keeps the one minimizing `(mse₁ + mse₂) / 2`;
/// ties go to the smallest breakpoint. Points with zero value are dropped first.
pub fn two_regime_fit_points<F: Real>(points: &[(usize, F)], search: &BreakpointSearch) -> Result<DecayFit<F>> {
    if search.min_segment < 2 {
        return Err(Error::InvalidArgument("minimum segment length must be >= 2".into()));
    }
    if points.iter().any(|&(t, v)| t == 0 || v < F::zero() || !v.is_finite()) {
        return Err(Error::InvalidArgument("lags must be >= 1 and values finite and >= 0".into()));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("lags must be strictly increasing".into()));
    }
    let kept: Vec<(usize, F)> = points.iter().copied().filter(|&(_, v)| v > F::zero()).collect();
    let dropped = points.len() - kept.len();
    let logs: Vec<(F, F)> = kept.iter().map(|&(t, v)| (F::of_usize(t).ln(), v.ln())).collect();

    let m = search.min_segment;
    let mut best: Option<DecayFit<F>> = None;
    for split in m..=kept.len().saturating_sub(m) {
        let tau = kept[split].0;
        if let Some((lo, hi)) = search.candidates {
            if tau < lo || tau > hi {
                continue;
            }
        }
        let first = fit_logs(&logs[..split])?;
        let second = fit_logs(&logs[split..])?;
        let fit = DecayFit {
            alpha1: first.alpha,
            beta1: first.beta,
            alpha2: second.alpha,
            beta2: second.beta,
            tau_plat: tau,
            mse1: first.mse,
            mse2: second.mse,
            n1: split,
            n2: kept.len() - split,
            dropped_lags: dropped,
        };
        if best.as_ref().is_none_or(|b| fit.objective() < b.objective()) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| {
        Error::Numeric(format!(
            "no feasible breakpoint: {} positive points, minimum segment {m}",
            kept.len()
        ))
    })
}

/// Two-regime fit of a persistence curve over lags `τ >= 1`.
pub fn two_regime_fit<F: Real>(curve: &PersistenceCurve<F>, search: &BreakpointSearch) -> Result<DecayFit<F>> {
    let points: Vec<(usize, F)> = curve.points().collect();
    two_regime_fit_points(&points, search)
}
