//! CSV writers for both subcommands.

use std::io::Write;

use vanet_connectivity::analytic::{self, MeanSnr, NeighborIndex};
use vanet_connectivity::montecarlo::{EnsembleEstimate, MeanEstimate, SweepRow};
use vanet_connectivity::{ChannelModel, ConnectivityDecider, Error, ScenarioParams};

use crate::config::RunConfig;
use crate::CliError;

pub const ANALYTIC_HEADER: [&str; 6] = ["model", "rho", "psi_db", "m_or_M", "metric", "value"];
pub const SIMULATION_HEADER: [&str; 10] = [
    "model",
    "rho",
    "psi_db",
    "n_vehicles",
    "trials",
    "metric",
    "estimate",
    "ci_lo",
    "ci_hi",
    "seed",
];

/// Writes every analytic metric per grid point and model; returns how many
/// metrics failed to evaluate.
pub fn write_analytic<W: Write>(config: &RunConfig, out: W) -> Result<usize, CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANALYTIC_HEADER)?;
    let mut failures = 0;
    for (rho, psi_db, params) in &config.grid {
        for &model in &config.models {
            let mut emit = |metric: &str, index: String, value: Result<String, Error>| -> Result<(), CliError> {
                let value = match value {
                    Ok(v) => v,
                    Err(e) => {
                        failures += 1;
                        eprintln!("{model} rho={rho} psi_db={psi_db} {metric} {index}: {e}");
                        w.write_record([
                            model.as_str(),
                            &rho.to_string(),
                            &psi_db.to_string(),
                            &index,
                            "error",
                            &e.to_string(),
                        ])?;
                        return Ok(());
                    }
                };
                w.write_record([
                    model.as_str(),
                    &rho.to_string(),
                    &psi_db.to_string(),
                    &index,
                    metric,
                    &value,
                ])?;
                Ok(())
            };
            analytic_rows(params, model, config.big_m.get(), &mut emit)?;
        }
    }
    w.flush()?;
    Ok(failures)
}

fn analytic_rows(
    params: &ScenarioParams,
    model: ChannelModel,
    big_m: u32,
    emit: &mut impl FnMut(&str, String, Result<String, Error>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let num = |v: f64| Ok(v.to_string());
    let snr = |v: MeanSnr| {
        Ok(match v {
            MeanSnr::Finite(x) => x.to_string(),
            MeanSnr::Diverges => "diverges".to_string(),
        })
    };
    let indices = || (1..=big_m).map(|m| NeighborIndex::new(m).expect("m >= 1"));
    match model {
        ChannelModel::UnitDisc => {
            emit("p_network_ud", String::new(), num(analytic::p_network_ud(params)))?;
            emit("p_vehicle_ud", String::new(), num(analytic::p_vehicle_ud(params)))?;
            for m in indices() {
                emit(
                    "p_sl_ud_mth",
                    m.get().to_string(),
                    num(analytic::p_sl_ud_mth(params, m)),
                )?;
            }
            for m in indices() {
                emit("avg_snr_ud", m.get().to_string(), snr(analytic::avg_snr_ud(params, m)))?;
            }
        }
        ChannelModel::Rayleigh => {
            for m in indices() {
                emit(
                    "p_sl_rayleigh",
                    m.get().to_string(),
                    analytic::p_sl_rayleigh(params, m).map(|v| v.to_string()),
                )?;
            }
            if params.budget().ple() == 2 {
                for m in indices() {
                    match analytic::p_sl_rayleigh_closed_alpha2(params, m) {
                        Ok(v) => emit("p_sl_rayleigh_closed", m.get().to_string(), num(v))?,
                        Err(Error::ClosedFormOverflow { exponent, .. }) => {
                            eprintln!(
                                "warning: closed form skipped at rho={} (exponent {exponent:.1}); quadrature rows stand",
                                params.rho()
                            );
                            break;
                        }
                        Err(e) => emit("p_sl_rayleigh_closed", m.get().to_string(), Err(e))?,
                    }
                }
            }
            for m in indices() {
                emit(
                    "avg_snr_rayleigh",
                    m.get().to_string(),
                    snr(analytic::avg_snr_rayleigh(params, m)),
                )?;
            }
            emit(
                "avg_node_degree",
                String::new(),
                analytic::avg_node_degree(params).map(|v| v.to_string()),
            )?;
            let side = analytic::SideTruncation::new(big_m).expect("validated");
            emit(
                "p_vehicle_one_side_rayleigh",
                big_m.to_string(),
                analytic::p_vehicle_one_side_rayleigh(params, side).map(|v| v.to_string()),
            )?;
            emit(
                "p_vehicle_rayleigh",
                big_m.to_string(),
                analytic::p_vehicle_rayleigh(params, side).map(|v| v.to_string()),
            )?;
        }
    }
    emit(
        "node_degree_finite",
        String::new(),
        analytic::expected_mean_degree_finite(params, model).map(|v| v.to_string()),
    )
}

/// Writes one block of estimates per sweep row; returns the number of failed
/// rows.
pub fn write_simulation<W: Write>(
    config: &RunConfig,
    rows: &[SweepRow],
    decider: ConnectivityDecider,
    out: W,
) -> Result<usize, CliError> {
    let with_mismatch = decider == ConnectivityDecider::Both;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SIMULATION_HEADER.to_vec();
    if with_mismatch {
        header.push("decider_mismatches");
    }
    w.write_record(&header)?;

    let models = config.models.len();
    let mut failures = 0;
    for (k, row) in rows.iter().enumerate() {
        let (rho, psi_db, _) = config.grid[k / models];
        let lead = [
            row.model.as_str().to_string(),
            rho.to_string(),
            psi_db.to_string(),
            row.params.n_vehicles().to_string(),
        ];
        let mut record = |trials: String, metric: &str, est: [String; 3], seed: String, mismatch: String| {
            let mut r: Vec<String> = lead.to_vec();
            r.extend([trials, metric.to_string()]);
            r.extend(est);
            r.push(seed);
            if with_mismatch {
                r.push(mismatch);
            }
            w.write_record(&r)
        };
        match &row.result {
            Ok(est) => {
                let mm = est.decider_mismatches.to_string();
                let prop = |e: &EnsembleEstimate| [e.estimate.to_string(), e.ci_lo.to_string(), e.ci_hi.to_string()];
                let mean = |e: &MeanEstimate| {
                    let half = 1.959_963_984_540_054 * e.std_error;
                    [
                        e.mean.to_string(),
                        (e.mean - half).to_string(),
                        (e.mean + half).to_string(),
                    ]
                };
                let c = &est.connectivity;
                record(
                    c.trials.to_string(),
                    "network_connectivity",
                    prop(c),
                    c.seed.to_string(),
                    mm.clone(),
                )?;
                let v = &est.vehicle_two_side;
                record(
                    v.trials.to_string(),
                    "vehicle_two_side",
                    prop(v),
                    v.seed.to_string(),
                    mm.clone(),
                )?;
                let v = &est.vehicle_one_side;
                record(
                    v.trials.to_string(),
                    "vehicle_one_side",
                    prop(v),
                    v.seed.to_string(),
                    mm.clone(),
                )?;
                let d = &est.node_degree;
                record(
                    d.trials.to_string(),
                    "node_degree",
                    mean(d),
                    d.seed.to_string(),
                    mm.clone(),
                )?;
                for (m, s) in &est.single_link {
                    record(
                        s.trials.to_string(),
                        &format!("single_link_m{m}"),
                        prop(s),
                        s.seed.to_string(),
                        mm.clone(),
                    )?;
                }
            }
            Err(e) => {
                failures += 1;
                eprintln!("{} rho={rho} psi_db={psi_db}: {e}", row.model);
                record(
                    String::new(),
                    "error",
                    [e.to_string(), String::new(), String::new()],
                    String::new(),
                    String::new(),
                )?;
            }
        }
    }
    w.flush()?;
    Ok(failures)
}
