//! Synthetic price panels from a slowly drifting sector factor model.
//!
//! Daily log-return of asset `i` in sector `s`:
//!
//! ```text
//! r_i(t) = vol · (m · M_t + b_i(t) · S_{s,t} + e · ε_{i,t} + d · sin(2π t / P_μ + ψ_s))
//! b_i(t) = b · (1 + a · sin(2π t / P_b + φ_i))
//! ```
//!
//! with independent standard normal market `M`, sector `S`, idiosyncratic
//! `ε` shocks. An optional planted block gives the first assets of sector 0 a
//! much stronger common factor, with loadings falling linearly from `L` on the
//! first block asset to `L / 2` on the last.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AssetMeta, PricePanel};
use crate::scalar::Real;
use crate::seeding::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedBlock {
    pub size: usize,
    /// Largest loading on the block factor, in units of idiosyncratic noise.
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_assets: usize,
    /// Number of price dates (returns are one fewer).
    pub n_dates: usize,
    pub n_sectors: usize,
    pub seed: u64,
    pub daily_vol: f64,
    pub market_loading: f64,
    pub sector_loading: f64,
    pub idio_loading: f64,
    /// Relative amplitude of the slow oscillation of sector loadings.
    pub loading_drift: f64,
    pub loading_period: f64,
    /// Amplitude of the sector mean-return cycle, in units of `daily_vol`.
    pub mean_drift: f64,
    pub mean_period: f64,
    pub planted_block: Option<PlantedBlock>,
    pub start_date: NaiveDate,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_assets: 20,
            n_dates: 300,
            n_sectors: 4,
            seed: 1,
            daily_vol: 0.01,
            market_loading: 0.4,
            sector_loading: 0.8,
            idio_loading: 1.0,
            loading_drift: 0.6,
            loading_period: 400.0,
            mean_drift: 1.0,
            mean_period: 250.0,
            planted_block: None,
            start_date: NaiveDate::from_ymd_opt(2014, 1, 3).expect("valid date"),
        }
    }
}

/// Weekdays starting at `start` (inclusive if it is a weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets < 1 || self.n_dates < 2 || self.n_sectors < 1 || self.n_sectors > self.n_assets {
            return Err(Error::Config(format!(
                "synthetic panel needs >= 1 asset, >= 2 dates and 1..=n_assets sectors (got {} assets, {} dates, {} sectors)",
                self.n_assets, self.n_dates, self.n_sectors
            )));
        }
        if let Some(b) = self.planted_block {
            if b.size < 2 || b.size > self.n_assets {
                return Err(Error::Config(format!("planted block size {} invalid", b.size)));
            }
        }
        if !(self.daily_vol > 0.0 && self.loading_period > 0.0 && self.mean_period > 0.0) {
            return Err(Error::Config("volatility and periods must be positive".into()));
        }
        Ok(())
    }

    pub fn sector_of(&self, asset: usize) -> usize {
        asset * self.n_sectors / self.n_assets
    }

    pub fn ticker(asset: usize) -> String {
        format!("A{asset:03}")
    }

    pub fn sector_name(sector: usize) -> String {
        format!("SECTOR_{sector}")
    }

    /// Assets of the planted block: the first `size` assets, which start sector 0.
    pub fn block_assets(&self) -> Vec<usize> {
        self.planted_block.map(|b| (0..b.size).collect()).unwrap_or_default()
    }

    /// Log-returns, assets × (n_dates - 1).
    pub fn log_returns(&self) -> Result<Array2<f64>> {
        self.validate()?;
        let (n, len) = (self.n_assets, self.n_dates - 1);
        let tau = std::f64::consts::TAU;
        let mut shocks = rng_for(self.seed, &[0]);
        let mut phases = rng_for(self.seed, &[1]);
        let phi: Vec<f64> = (0..n).map(|_| phases.random::<f64>() * tau).collect();
        let psi: Vec<f64> = (0..self.n_sectors).map(|_| phases.random::<f64>() * tau).collect();
        let block = self.block_assets();
        let mut out = Array2::zeros((n, len));
        for t in 0..len {
            let tf = t as f64;
            let market: f64 = shocks.sample(StandardNormal);
            let sector: Vec<f64> = (0..self.n_sectors).map(|_| shocks.sample(StandardNormal)).collect();
            let block_factor: f64 = shocks.sample(StandardNormal);
            for i in 0..n {
                let s = self.sector_of(i);
                let b = self.sector_loading * (1.0 + self.loading_drift * (tau * tf / self.loading_period + phi[i]).sin());
                let eps: f64 = shocks.sample(StandardNormal);
                let mut x = self.market_loading * market + b * sector[s] + self.idio_loading * eps;
                if let (Some(pb), true) = (self.planted_block, block.contains(&i)) {
                    let grade = 1.0 - 0.5 * i as f64 / (pb.size - 1) as f64;
                    x += pb.loading * grade * block_factor;
                }
                let mu = self.mean_drift * (tau * tf / self.mean_period + psi[s]).sin();
                out[[i, t]] = self.daily_vol * (x + mu);
            }
        }
        Ok(out)
    }

    /// Price panel starting at 100 plus `ticker,sector` metadata.
    pub fn generate<F: Real>(&self) -> Result<(PricePanel<F>, Vec<AssetMeta>)> {
        let returns = self.log_returns()?;
        let (n, len) = returns.dim();
        let mut prices = Array2::<F>::zeros((n, len + 1));
        for i in 0..n {
            let mut log_p = 100f64.ln();
            prices[[i, 0]] = F::of(100.0);
            for t in 0..len {
                log_p += returns[[i, t]];
                prices[[i, t + 1]] = F::of(log_p.exp());
            }
        }
        let dates = business_days(self.start_date, self.n_dates);
        let assets: Vec<String> = (0..n).map(Self::ticker).collect();
        let meta = (0..n)
            .map(|i| AssetMeta { ticker: Self::ticker(i), sector: Some(Self::sector_name(self.sector_of(i))) })
            .collect();
        Ok((PricePanel::new(dates, assets, prices)?, meta))
    }
}
