//! Link-level channel models: free-space path loss and Rayleigh fading.
//!
//! All powers are linear (milliwatts) and all SNRs are linear ratios; the
//! dB helpers at the bottom exist for the command-line boundary only.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::scenario::Placement;

/// Transmit power, noise floor and path-loss law shared by every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    tx_power_mw: f64,
    noise_power_mw: f64,
    beta: f64,
    ple: u32,
}

impl LinkBudget {
    pub fn new(tx_power_mw: f64, noise_power_mw: f64, beta: f64, ple: u32) -> Result<Self> {
        for (name, value) in [
            ("transmit power", tx_power_mw),
            ("noise power", noise_power_mw),
            ("beta", beta),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {value}")));
            }
        }
        if ple == 0 {
            return Err(invalid("path-loss exponent", "must be >= 1"));
        }
        Ok(Self {
            tx_power_mw,
            noise_power_mw,
            beta,
            ple,
        })
    }

    pub fn tx_power_mw(&self) -> f64 {
        self.tx_power_mw
    }

    pub fn noise_power_mw(&self) -> f64 {
        self.noise_power_mw
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ple(&self) -> u32 {
        self.ple
    }

    /// `β P_T / P_noise`: the SNR one metre from the transmitter.
    pub fn reference_snr(&self) -> f64 {
        self.beta * self.tx_power_mw / self.noise_power_mw
    }

    /// Mean received SNR at distance `d`, without validating `d`.
    pub(crate) fn mean_snr_at(&self, d: f64) -> f64 {
        self.reference_snr() / d.powi(self.ple as i32)
    }
}

impl Default for LinkBudget {
    /// 33 dBm transmitter, 0.01 mW noise floor, β = 10, free-space exponent 2.
    fn default() -> Self {
        Self {
            tx_power_mw: dbm_to_mw(33.0),
            noise_power_mw: 0.01,
            beta: 10.0,
            ple: 2,
        }
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistance(d))
    }
}

/// Received SNR `β P_T / (d^α P_noise)` of the path-loss-only channel.
pub fn deterministic_snr(d: f64, budget: &LinkBudget) -> Result<f64> {
    check_distance(d)?;
    Ok(budget.mean_snr_at(d))
}

/// Distance at which the deterministic SNR equals `psi`.
pub fn unit_disc_range(budget: &LinkBudget, psi: f64) -> Result<f64> {
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(invalid(
            "SNR threshold",
            format!("must be positive and finite, got {psi}"),
        ));
    }
    Ok((budget.reference_snr() / psi).powf(1.0 / budget.ple as f64))
}

/// One exponential SNR draw whose mean is the deterministic SNR at `d`.
pub fn sample_rayleigh_snr<R: Rng + ?Sized>(d: f64, budget: &LinkBudget, rng: &mut R) -> Result<f64> {
    check_distance(d)?;
    Ok(rayleigh_draw(budget.mean_snr_at(d), rng))
}

fn rayleigh_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    // 1 - [0, 1) keeps the argument of ln in (0, 1].
    let u = 1.0 - rng.random::<f64>();
    -mean * u.ln()
}

/// Which channel turns distances into received SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelModel {
    UnitDisc,
    Rayleigh,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 2] = [ChannelModel::UnitDisc, ChannelModel::Rayleigh];

    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelModel::UnitDisc => "unit_disc",
            ChannelModel::Rayleigh => "rayleigh",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "unit_disc" | "ud" | "unitdisc" => Ok(ChannelModel::UnitDisc),
            "rayleigh" | "ray" => Ok(ChannelModel::Rayleigh),
            other => Err(invalid("channel model", format!("unknown model `{other}`"))),
        }
    }
}

/// Symmetric matrix of received SNR per vehicle pair. The diagonal is unused
/// and held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrMatrix(DMatrix<f64>);

impl SnrMatrix {
    /// Wraps an existing matrix after checking it is square and symmetric.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(invalid("SNR matrix", "must be square"));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if a != b && !(a.is_nan() && b.is_nan()) {
                    return Err(Error::AsymmetricSnr { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Path-loss SNR for every pair of a placement.
    pub fn deterministic(placement: &Placement, budget: &LinkBudget) -> Self {
        Self::fill(placement.n_vehicles(), |i, j| {
            snr_or_infinite(placement.distance(i, j), |d| budget.mean_snr_at(d))
        })
    }

    /// Independent Rayleigh draw per unordered pair, reused in both
    /// directions. Pairs are drawn in row-major upper-triangle order.
    pub fn rayleigh<R: Rng + ?Sized>(placement: &Placement, budget: &LinkBudget, rng: &mut R) -> Self {
        Self::fill(placement.n_vehicles(), |i, j| {
            snr_or_infinite(placement.distance(i, j), |d| rayleigh_draw(budget.mean_snr_at(d), rng))
        })
    }

    pub fn sample<R: Rng + ?Sized>(
        model: ChannelModel,
        placement: &Placement,
        budget: &LinkBudget,
        rng: &mut R,
    ) -> Self {
        match model {
            ChannelModel::UnitDisc => Self::deterministic(placement, budget),
            ChannelModel::Rayleigh => Self::rayleigh(placement, budget, rng),
        }
    }

    fn fill(n: usize, mut value: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = value(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

// Co-located vehicles (a zero headway) are always in range.
fn snr_or_infinite(d: f64, snr: impl FnOnce(f64) -> f64) -> f64 {
    if d > 0.0 {
        snr(d)
    } else {
        f64::INFINITY
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
