//! Free-flow traffic: exponential headways, vehicle placements and the
//! Erlang law of the distance to the m-th neighbour.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channel::{unit_disc_range, LinkBudget};
use crate::error::{invalid, Error, Result};
use crate::numerics::log_factorial;

/// Default highway segment length in metres.
pub const DEFAULT_ROAD_LENGTH_M: f64 = 10_000.0;

/// One operating point: traffic density, road, link budget and SNR threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    rho: f64,
    road_length: f64,
    n_vehicles: usize,
    budget: LinkBudget,
    psi: f64,
}

impl ScenarioParams {
    /// `rho` in vehicles/m, `road_length` in m, `psi` as a linear SNR.
    /// The vehicle count is `max(2, round(rho * road_length))`.
    pub fn new(rho: f64, road_length: f64, budget: LinkBudget, psi: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid(
                "vehicle density",
                format!("must be positive and finite, got {rho}"),
            ));
        }
        if !(road_length > 0.0) || !road_length.is_finite() {
            return Err(invalid(
                "road length",
                format!("must be positive and finite, got {road_length}"),
            ));
        }
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(invalid(
                "SNR threshold",
                format!("must be positive and finite, got {psi}"),
            ));
        }
        let expected = (rho * road_length).round();
        if expected > u32::MAX as f64 {
            return Err(invalid(
                "vehicle density",
                "implies an unreasonably large vehicle count",
            ));
        }
        let n_vehicles = (expected as usize).max(2);
        Ok(Self {
            rho,
            road_length,
            n_vehicles,
            budget,
            psi,
        })
    }

    /// Default link budget on a 10 km road.
    pub fn with_defaults(rho: f64, psi: f64) -> Result<Self> {
        Self::new(rho, DEFAULT_ROAD_LENGTH_M, LinkBudget::default(), psi)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Unit-disc communication range; also the scale `λ` of the fading
    /// exponent `(x/λ)^α`.
    pub fn range(&self) -> f64 {
        unit_disc_range(&self.budget, self.psi).expect("psi validated at construction")
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(rho, self.road_length, self.budget, self.psi)
    }

    pub fn with_psi(&self, psi: f64) -> Result<Self> {
        Self::new(self.rho, self.road_length, self.budget, psi)
    }
}

/// Draws the `N - 1` spacings of one snapshot, i.i.d. Exponential(rho), by
/// inverse CDF.
pub fn sample_headways<R: Rng + ?Sized>(params: &ScenarioParams, rng: &mut R) -> Vec<f64> {
    let rho = params.rho();
    (0..params.n_vehicles() - 1)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            -u.ln() / rho
        })
        .collect()
}

/// Vehicle positions and pairwise distances for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    headways: Vec<f64>,
    positions: Vec<f64>,
    distances: DMatrix<f64>,
}

impl Placement {
    pub fn headways(&self) -> &[f64] {
        &self.headways
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[(i, j)]
    }

    pub fn n_vehicles(&self) -> usize {
        self.positions.len()
    }
}

/// Builds the distance matrix the way a row-wise running sum would: for
/// `j > i`, `W[i][j] = headways[i] + ... + headways[j - 1]`.
pub fn placement_from_headways(headways: &[f64]) -> Result<Placement> {
    if headways.is_empty() {
        return Err(Error::TooFewVehicles(headways.len() + 1));
    }
    if let Some((index, &value)) = headways
        .iter()
        .enumerate()
        .find(|(_, h)| !(**h >= 0.0) || !h.is_finite())
    {
        return Err(Error::InvalidHeadway { index, value });
    }

    let n = headways.len() + 1;
    let mut distances = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in (i + 1)..n {
            acc += headways[j - 1];
            distances[(i, j)] = acc;
            distances[(j, i)] = acc;
        }
    }
    let positions = (0..n).map(|j| distances[(0, j)]).collect();

    Ok(Placement {
        headways: headways.to_vec(),
        positions,
        distances,
    })
}

/// Erlang density of the distance to the `m`-th neighbour, evaluated in log
/// space so large `m` does not overflow.
pub fn erlang_pdf(x: f64, m: u32, rho: f64) -> Result<f64> {
    if m < 1 {
        return Err(invalid("neighbor index", "must be >= 1"));
    }
    if !(rho > 0.0) {
        return Err(invalid("vehicle density", format!("must be positive, got {rho}")));
    }
    if !(x >= 0.0) {
        return Ok(0.0);
    }
    if x == 0.0 {
        return Ok(if m == 1 { rho } else { 0.0 });
    }
    let m_f = m as f64;
    let ln_pdf = m_f * rho.ln() + (m_f - 1.0) * x.ln() - rho * x - log_factorial(u64::from(m) - 1);
    Ok(ln_pdf.exp())
}
