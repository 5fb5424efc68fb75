use clap::{Args, ValueEnum};
use vanet_connectivity::analytic::SideTruncation;
use vanet_connectivity::{db_to_linear, dbm_to_mw, ChannelModel, ConnectivityDecider, LinkBudget, ScenarioParams};

use crate::CliError;

/// Canned parameter grids; explicit flags still override them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Both channels over ρ = 0.002..0.03 step 0.004 at 5 and 15 dB.
    Dominance,
    /// Unit disc at ρ ∈ {0.005, 0.01, 0.019, 0.03}, 5 and 15 dB.
    UnitDisc,
    /// Rayleigh at ρ = 0.005..0.025 step 0.005, 15 dB.
    Vehicle,
}

impl Preset {
    fn rho(self) -> &'static str {
        match self {
            Preset::Dominance => "0.002:0.03:0.004",
            Preset::UnitDisc => "0.005,0.01,0.019,0.03",
            Preset::Vehicle => "0.005:0.025:0.005",
        }
    }

    fn psi_db(self) -> &'static str {
        match self {
            Preset::Vehicle => "15",
            _ => "5,15",
        }
    }

    fn model(self) -> &'static str {
        match self {
            Preset::Dominance => "both",
            Preset::UnitDisc => "unit_disc",
            Preset::Vehicle => "rayleigh",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Channel model(s): unit_disc, rayleigh, both, or a comma list.
    #[arg(long)]
    pub model: Option<String>,
    /// Density in vehicles/m: a value, a comma list, or start:stop:step.
    #[arg(long)]
    pub rho: Option<String>,
    /// SNR threshold(s) in dB, comma separated.
    #[arg(long = "psi-db", allow_hyphen_values = true)]
    pub psi_db: Option<String>,
    /// Transmit power in dBm.
    #[arg(long = "tx-dbm", default_value_t = 33.0, allow_hyphen_values = true)]
    pub tx_dbm: f64,
    /// Noise power in mW.
    #[arg(long = "noise-mw", default_value_t = 0.01)]
    pub noise_mw: f64,
    /// Path-loss constant.
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 2)]
    pub alpha: u32,
    /// Road length in metres.
    #[arg(long = "length-m", default_value_t = 10_000.0)]
    pub length_m: f64,
    /// Neighbours per side in vehicle-connectivity products and single-link
    /// tables.
    #[arg(long = "big-m", default_value_t = 10)]
    pub big_m: u32,
    /// Parameter preset applied before the explicit flags.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

/// Fully parsed run configuration in linear units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub models: Vec<ChannelModel>,
    /// `(ρ, Ψ in dB, parameters)` in grid order: ρ outer, Ψ inner.
    pub grid: Vec<(f64, f64, ScenarioParams)>,
    pub big_m: SideTruncation,
    pub out: Option<std::path::PathBuf>,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self, CliError> {
        let preset = args.preset;
        let pick = |explicit: &Option<String>, from_preset: fn(Preset) -> &'static str, default: &str| {
            explicit
                .clone()
                .or_else(|| preset.map(|p| from_preset(p).to_string()))
                .unwrap_or_else(|| default.to_string())
        };
        let models = parse_models(&pick(&args.model, Preset::model, "both"))?;
        let rhos = parse_rho(&pick(&args.rho, Preset::rho, "0.019"))?;
        let psis = parse_list(&pick(&args.psi_db, Preset::psi_db, "5,15"), "--psi-db")?;
        if rhos.is_empty() || psis.is_empty() {
            return Err(CliError::Usage("the (rho, psi) grid is empty".into()));
        }

        let budget = LinkBudget::new(dbm_to_mw(args.tx_dbm), args.noise_mw, args.beta, args.alpha)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let big_m = SideTruncation::new(args.big_m).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut grid = Vec::with_capacity(rhos.len() * psis.len());
        for &rho in &rhos {
            for &psi_db in &psis {
                let params = ScenarioParams::new(rho, args.length_m, budget, db_to_linear(psi_db))
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                grid.push((rho, psi_db, params));
            }
        }
        Ok(Self {
            models,
            grid,
            big_m,
            out: args.out.clone(),
        })
    }
}

pub fn parse_models(s: &str) -> Result<Vec<ChannelModel>, CliError> {
    let mut models = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("both") || part.eq_ignore_ascii_case("all") {
            models.extend(ChannelModel::ALL);
        } else {
            models.push(
                part.parse()
                    .map_err(|e: vanet_connectivity::Error| CliError::Usage(e.to_string()))?,
            );
        }
    }
    models.dedup();
    if models.is_empty() {
        return Err(CliError::Usage("no channel model given".into()));
    }
    Ok(models)
}

pub fn parse_decider(s: &str) -> Result<ConnectivityDecider, CliError> {
    s.parse()
        .map_err(|e: vanet_connectivity::Error| CliError::Usage(e.to_string()))
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{flag}: cannot parse {p:?} as a number")))
        })
        .collect()
}

/// A value, a comma list, or an inclusive `start:stop:step` range.
pub fn parse_rho(s: &str) -> Result<Vec<f64>, CliError> {
    if !s.contains(':') {
        return parse_list(s, "--rho");
    }
    let parts = parse_list(&s.replace(':', ","), "--rho")?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Usage(format!("--rho: expected start:stop:step, got {s:?}")));
    };
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(CliError::Usage(format!("--rho: empty or unbounded range {s:?}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(CliError::Usage(format!("--rho: range {s:?} has too many points")));
    }
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
