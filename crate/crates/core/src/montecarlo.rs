//! Monte-Carlo ensembles of vehicle snapshots.
//!
//! Trial `t` of a run with master seed `s` draws from ChaCha8 stream `t` of
//! key `s`, so results do not depend on scheduling or thread count. Both
//! channel models consume the stream the same way up to the headways, which
//! gives common random numbers across models at the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::SideTruncation;
use crate::channel::{ChannelModel, SnrMatrix};
use crate::error::{invalid, Error, Result};
use crate::graph::{adjacency_from_snr, decide, ConnectivityDecider, GraphMatrices, ZeroTolerance};
use crate::scenario::{placement_from_headways, sample_headways, ScenarioParams};

pub const DEFAULT_TRIALS: usize = 1000;

/// Two-sided 95% standard-normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Everything recorded from one snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub n_vehicles: usize,
    pub connected: bool,
    pub decider_mismatch: bool,
    pub degrees: Vec<u32>,
    /// Entry `m - 1` counts linked pairs `(i, i + m)`, for `m = 1..N-1`.
    pub links_by_offset: Vec<u32>,
    /// Vehicles with degree zero.
    pub isolated_two_side: u32,
    /// Vehicles `0..N-1` with no link to any vehicle ahead (higher index).
    pub isolated_forward: u32,
    /// Vehicles `1..N` with no link to any vehicle behind.
    pub isolated_backward: u32,
    /// Every vehicle is linked to its immediate successor.
    pub successor_chain: bool,
}

impl TrialOutcome {
    fn from_graph(g: &GraphMatrices, connected: bool, decider_mismatch: bool) -> Self {
        let n = g.n();
        let mut links_by_offset = vec![0u32; n.saturating_sub(1)];
        let mut has_forward = vec![false; n];
        let mut has_backward = vec![false; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if g.has_edge(i, j) {
                    links_by_offset[j - i - 1] += 1;
                    has_forward[i] = true;
                    has_backward[j] = true;
                }
            }
        }
        let degrees = g.degrees().to_vec();
        let count = |flags: &[bool]| flags.iter().filter(|&&f| !f).count() as u32;
        Self {
            n_vehicles: n,
            connected,
            decider_mismatch,
            isolated_two_side: degrees.iter().filter(|&&d| d == 0).count() as u32,
            isolated_forward: count(&has_forward[..n - 1]),
            isolated_backward: count(&has_backward[1..]),
            successor_chain: links_by_offset.first().is_some_and(|&c| c as usize == n - 1),
            degrees,
            links_by_offset,
        }
    }
}

/// Per-trial settings besides the scenario and channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOptions {
    pub decider: ConnectivityDecider,
    pub zero_tol: ZeroTolerance,
}

/// Random stream for trial `trial` of master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Samples headways, the SNR matrix and the thresholded graph of one snapshot.
pub fn sample_graph<R: rand::Rng + ?Sized>(
    params: &ScenarioParams,
    model: ChannelModel,
    rng: &mut R,
) -> Result<GraphMatrices> {
    let headways = sample_headways(params, rng);
    let placement = placement_from_headways(&headways)?;
    let snr = SnrMatrix::sample(model, &placement, params.budget(), rng);
    Ok(adjacency_from_snr(&snr, params.psi()))
}

/// One snapshot decided by the Laplacian spectrum.
pub fn run_trial<R: rand::Rng + ?Sized>(
    params: &ScenarioParams,
    model: ChannelModel,
    rng: &mut R,
) -> Result<TrialOutcome> {
    run_trial_with(params, model, TrialOptions::default(), rng)
}

pub fn run_trial_with<R: rand::Rng + ?Sized>(
    params: &ScenarioParams,
    model: ChannelModel,
    options: TrialOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let g = sample_graph(params, model, rng)?;
    let verdict = decide(&g, options.decider, options.zero_tol)?;
    Ok(TrialOutcome::from_graph(&g, verdict.connected, verdict.mismatch))
}

/// A binomial-type proportion with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleEstimate {
    pub trials: usize,
    pub successes: u64,
    /// Number of Bernoulli observations pooled into the estimate: `trials`
    /// for per-snapshot events, more for per-vehicle or per-pair events.
    pub observations: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl EnsembleEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

/// Wilson score interval at 95% for `successes` out of `n`; `n` may be an
/// effective (non-integer) sample size.
pub fn wilson_interval(p_hat: f64, n: f64) -> (f64, f64) {
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p_hat + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p_hat), (centre + half).min(1.0).max(p_hat))
}

/// Which vehicles count as isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VehicleSide {
    /// No link at all.
    Two,
    /// No link to any vehicle ahead; the lead vehicle is not eligible.
    Forward,
    /// No link to any vehicle behind; the last vehicle is not eligible.
    Backward,
}

impl VehicleSide {
    /// One-side isolation looks forward unless stated otherwise.
    pub const ONE_SIDE: VehicleSide = VehicleSide::Forward;
}

/// Which vehicles enter a degree average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeSelection {
    All,
    /// Vehicles at least `margin` positions away from either end.
    Interior(usize),
}

/// Outcomes of `trials` snapshots at one operating point, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    params: ScenarioParams,
    model: ChannelModel,
    seed: u64,
    outcomes: Vec<TrialOutcome>,
}

/// Runs `trials` independent snapshots on the current rayon pool.
pub fn run_ensemble(
    params: &ScenarioParams,
    model: ChannelModel,
    trials: usize,
    seed: u64,
    options: TrialOptions,
) -> Result<Ensemble> {
    if trials == 0 {
        return Err(invalid("trial count", "must be >= 1"));
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial_with(params, model, options, &mut trial_rng(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        params: *params,
        model,
        seed,
        outcomes,
    })
}

impl Ensemble {
    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn outcomes(&self) -> &[TrialOutcome] {
        &self.outcomes
    }

    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn decider_mismatches(&self) -> usize {
        self.outcomes.iter().filter(|o| o.decider_mismatch).count()
    }

    /// Fraction of connected snapshots.
    pub fn connectivity(&self) -> EnsembleEstimate {
        let successes = self.outcomes.iter().filter(|o| o.connected).count() as u64;
        let n = self.trials() as f64;
        let p = successes as f64 / n;
        let (ci_lo, ci_hi) = wilson_interval(p, n);
        EnsembleEstimate {
            trials: self.trials(),
            successes,
            observations: self.trials() as u64,
            estimate: p,
            ci_lo,
            ci_hi,
            std_error: (p * (1.0 - p) / n).sqrt(),
            seed: self.seed,
        }
    }

    /// Fraction of pairs `(i, i + m)` that are linked.
    pub fn single_link(&self, m: usize) -> Result<EnsembleEstimate> {
        let n = self.params.n_vehicles();
        if m == 0 || m >= n {
            return Err(Error::NeighborOutOfRange { m, max: n - 1 });
        }
        let eligible = (n - m) as u64;
        Ok(self.pooled(eligible, |o| u64::from(o.links_by_offset[m - 1])))
    }

    /// Fraction of vehicles that are not isolated in the given sense.
    pub fn vehicle_connectivity(&self, side: VehicleSide) -> EnsembleEstimate {
        let n = self.params.n_vehicles() as u64;
        match side {
            VehicleSide::Two => self.pooled(n, |o| n - u64::from(o.isolated_two_side)),
            VehicleSide::Forward => self.pooled(n - 1, |o| n - 1 - u64::from(o.isolated_forward)),
            VehicleSide::Backward => self.pooled(n - 1, |o| n - 1 - u64::from(o.isolated_backward)),
        }
    }

    /// Mean degree over the selected vehicles, averaged over trials; the
    /// standard error comes from the spread of the per-trial means.
    pub fn node_degree(&self, selection: NodeSelection) -> Result<MeanEstimate> {
        let n = self.params.n_vehicles();
        let range = match selection {
            NodeSelection::All => 0..n,
            NodeSelection::Interior(margin) => {
                if 2 * margin >= n {
                    return Err(invalid(
                        "interior margin",
                        format!("{margin} leaves no vehicles out of {n}"),
                    ));
                }
                margin..n - margin
            }
        };
        let width = range.len() as f64;
        let per_trial: Vec<f64> = self
            .outcomes
            .iter()
            .map(|o| o.degrees[range.clone()].iter().map(|&d| f64::from(d)).sum::<f64>() / width)
            .collect();
        let (mean, std_error) = mean_and_se(&per_trial);
        Ok(MeanEstimate {
            trials: self.trials(),
            mean,
            std_error,
            seed: self.seed,
        })
    }

    /// Pools per-trial counts out of `eligible` observations each. Events
    /// within a snapshot are correlated, so the interval uses the effective
    /// sample size implied by the between-trial spread of the fractions,
    /// capped at the raw observation count.
    fn pooled(&self, eligible: u64, successes: impl Fn(&TrialOutcome) -> u64) -> EnsembleEstimate {
        let counts: Vec<u64> = self.outcomes.iter().map(successes).collect();
        let total: u64 = counts.iter().sum();
        let observations = eligible * self.trials() as u64;
        let p = total as f64 / observations as f64;
        let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / eligible as f64).collect();
        let (_, std_error) = mean_and_se(&fractions);
        let variance = p * (1.0 - p);
        let n_eff = if std_error > 0.0 && variance > 0.0 {
            (variance / (std_error * std_error)).clamp(1.0, observations as f64)
        } else {
            observations as f64
        };
        let (ci_lo, ci_hi) = wilson_interval(p, n_eff);
        EnsembleEstimate {
            trials: self.trials(),
            successes: total,
            observations,
            estimate: p,
            ci_lo,
            ci_hi,
            std_error,
            seed: self.seed,
        }
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_connectivity(
    params: &ScenarioParams,
    model: ChannelModel,
    trials: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    Ok(run_ensemble(params, model, trials, seed, TrialOptions::default())?.connectivity())
}

pub fn estimate_single_link(
    params: &ScenarioParams,
    model: ChannelModel,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    let n = params.n_vehicles();
    if m == 0 || m >= n {
        return Err(Error::NeighborOutOfRange { m, max: n - 1 });
    }
    run_ensemble(params, model, trials, seed, TrialOptions::default())?.single_link(m)
}

/// Degree averaged over every vehicle and trial.
pub fn estimate_node_degree(
    params: &ScenarioParams,
    model: ChannelModel,
    trials: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    run_ensemble(params, model, trials, seed, TrialOptions::default())?.node_degree(NodeSelection::All)
}

pub fn estimate_vehicle_connectivity(
    params: &ScenarioParams,
    model: ChannelModel,
    side: VehicleSide,
    trials: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    Ok(run_ensemble(params, model, trials, seed, TrialOptions::default())?.vehicle_connectivity(side))
}

/// Settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub trials: usize,
    pub seed: u64,
    pub big_m: SideTruncation,
    pub trial: TrialOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            big_m: SideTruncation::default(),
            trial: TrialOptions::default(),
        }
    }
}

/// Every estimate produced at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimates {
    pub connectivity: EnsembleEstimate,
    pub vehicle_two_side: EnsembleEstimate,
    pub vehicle_one_side: EnsembleEstimate,
    pub node_degree: MeanEstimate,
    /// `(m, estimate)` for `m = 1..=min(M, N-1)`.
    pub single_link: Vec<(usize, EnsembleEstimate)>,
    pub decider_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: ScenarioParams,
    pub model: ChannelModel,
    pub result: Result<PointEstimates>,
}

/// Runs one ensemble per (grid point, model), grid-major. A failing point is
/// recorded in its row and the sweep moves on.
pub fn sweep(grid: &[ScenarioParams], models: &[ChannelModel], options: SweepOptions) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(invalid("sweep grid", "must not be empty"));
    }
    if models.is_empty() {
        return Err(invalid("channel models", "at least one is required"));
    }
    let mut rows = Vec::with_capacity(grid.len() * models.len());
    for params in grid {
        for &model in models {
            rows.push(SweepRow {
                params: *params,
                model,
                result: sweep_point(params, model, options),
            });
        }
    }
    Ok(rows)
}

fn sweep_point(params: &ScenarioParams, model: ChannelModel, options: SweepOptions) -> Result<PointEstimates> {
    let ens = run_ensemble(params, model, options.trials, options.seed, options.trial)?;
    let max_m = (options.big_m.get() as usize).min(params.n_vehicles() - 1);
    let single_link = (1..=max_m)
        .map(|m| Ok((m, ens.single_link(m)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointEstimates {
        connectivity: ens.connectivity(),
        vehicle_two_side: ens.vehicle_connectivity(VehicleSide::Two),
        vehicle_one_side: ens.vehicle_connectivity(VehicleSide::ONE_SIDE),
        node_degree: ens.node_degree(NodeSelection::All)?,
        single_link,
        decider_mismatches: ens.decider_mismatches(),
    })
}
