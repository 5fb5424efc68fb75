//! Closed-form and semi-analytic connectivity probabilities.
//!
//! Distances to the m-th neighbour are Erlang(m, ρ); under the unit disc a
//! link exists iff that distance is within the range `r`, under Rayleigh
//! fading it exists with probability `exp(-(x/λ)^α)` at distance `x`, where
//! `λ = (β P_T / (Ψ P_noise))^(1/α)` is numerically the unit-disc range.
//! Most integrals are taken after the change of variable `u = ρx`, which
//! makes the integrands dimensionless.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{invalid, Error, Result};
use crate::numerics::{integrate_semi_infinite, log_factorial, QuadratureSpec};
use crate::scenario::ScenarioParams;

/// Default number of one-side neighbours in the vehicle-connectivity product.
pub const DEFAULT_SIDE_TRUNCATION: u32 = 10;

/// The closed form carries a factor `exp(ρ²λ²/4)`; beyond this exponent the
/// double-precision result would overflow and callers must use quadrature.
pub const CLOSED_FORM_EXPONENT_LIMIT: f64 = 700.0;

/// Tail mass `exp(-TAIL_EXPONENT)` is discarded by the quadrature cutoffs.
const TAIL_EXPONENT: f64 = 50.0;

/// Index `m >= 1` of a neighbour on one side of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeighborIndex(u32);

impl NeighborIndex {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("neighbor index", "must be >= 1"));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for NeighborIndex {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

/// Number `M >= 1` of one-side neighbours kept in the vehicle-connectivity
/// product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SideTruncation(u32);

impl SideTruncation {
    pub fn new(big_m: u32) -> Result<Self> {
        if big_m == 0 {
            return Err(invalid("side truncation", "must be >= 1"));
        }
        Ok(Self(big_m))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl Default for SideTruncation {
    fn default() -> Self {
        Self(DEFAULT_SIDE_TRUNCATION)
    }
}

/// Average SNR of the m-th neighbour: finite only for `m >= α + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanSnr {
    Finite(f64),
    Diverges,
}

impl MeanSnr {
    pub fn finite(self) -> Option<f64> {
        match self {
            MeanSnr::Finite(v) => Some(v),
            MeanSnr::Diverges => None,
        }
    }
}

/// `P(Z_m <= z / ρ)` for `Z_m ~ Erlang(m, ρ)`, i.e. the regularized lower
/// incomplete gamma `P(m, z)`, with terms summed in log space.
pub fn erlang_cdf(m: u32, z: f64) -> f64 {
    assert!(m >= 1, "erlang_cdf needs m >= 1");
    if !(z > 0.0) {
        return 0.0;
    }
    if z.is_infinite() {
        return 1.0;
    }
    if m == 1 {
        return -(-z).exp_m1();
    }
    let term = |k: u32| (k as f64 * z.ln() - z - log_factorial(u64::from(k))).exp();
    if z < m as f64 {
        // Lower tail directly: e^(-z) Σ_{k>=m} z^k / k!, no cancellation.
        let mut k = m;
        let mut t = term(k);
        let mut sum = 0.0;
        while t > sum * 1e-17 && k < m + 10_000 {
            sum += t;
            k += 1;
            t *= z / k as f64;
        }
        sum.min(1.0)
    } else {
        let upper: f64 = (0..m).map(term).sum();
        (1.0 - upper).clamp(0.0, 1.0)
    }
}

/// Unit-disc link probability to the immediate successor, `1 - e^(-ρr)`.
pub fn p_sl_ud_first(params: &ScenarioParams) -> f64 {
    erlang_cdf(1, params.rho() * params.range())
}

/// Unit-disc network connectivity `(1 - e^(-ρr))^(N-1)`.
pub fn p_network_ud(params: &ScenarioParams) -> f64 {
    let z = params.rho() * params.range();
    let links = (params.n_vehicles() - 1) as f64;
    (links * (-(-z).exp()).ln_1p()).exp()
}

/// Unit-disc link probability to the m-th neighbour: the Erlang CDF at `r`.
pub fn p_sl_ud_mth(params: &ScenarioParams, m: NeighborIndex) -> f64 {
    erlang_cdf(m.get(), params.rho() * params.range())
}

/// Unit-disc vehicle connectivity; identical to [`p_sl_ud_first`].
pub fn p_vehicle_ud(params: &ScenarioParams) -> f64 {
    p_sl_ud_first(params)
}

/// Rayleigh link probability to the m-th neighbour by quadrature:
/// `ρ^m/(m-1)! ∫₀^∞ x^(m-1) exp(-ρx - Ψ x^α P_noise / (β P_T)) dx`.
pub fn p_sl_rayleigh(params: &ScenarioParams, m: NeighborIndex) -> Result<f64> {
    p_sl_rayleigh_with(params, m, &QuadratureSpec::default())
}

pub fn p_sl_rayleigh_with(params: &ScenarioParams, m: NeighborIndex, spec: &QuadratureSpec) -> Result<f64> {
    let scale = params.rho() * params.range();
    let alpha = params.budget().ple() as i32;
    let m = m.get();
    let shape = (m - 1) as f64;
    let ln_norm = -log_factorial(u64::from(m) - 1);

    // Erlang tail beyond 50 + 4(m-1) and fading tail beyond scale·50^(1/α)
    // both weigh less than e^-50; the smaller cutoff keeps narrow integrands
    // resolved.
    let erlang_cut = TAIL_EXPONENT + 4.0 * shape;
    let fading_cut = scale * TAIL_EXPONENT.powf(1.0 / alpha as f64);
    let cutoff = erlang_cut.min(fading_cut);

    let integrand = |u: f64| {
        if u <= 0.0 {
            return if m == 1 { 1.0 } else { 0.0 };
        }
        let fading = (u / scale).powi(alpha);
        (shape * u.ln() - u - fading + ln_norm).exp()
    };
    let q = integrate_semi_infinite(integrand, cutoff, spec)?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// Closed form of the Rayleigh link probability for path-loss exponent 2.
///
/// With `z = ρλ` and `a = z/2`,
///
/// ```text
/// P = z^(2m-1) / (2^m (m-1)!) · e^(a²) · Σ_{k=0}^{m-1} C(m-1, k) (-1)^(m-1-k) (2/z)^k Γ((k+1)/2, a²)
/// ```
///
/// The alternating sum cancels by many orders of magnitude (about 10^15 at
/// `ρ = 0.019`, `Ψ = 5 dB`, `m = 10`), so it is evaluated in MPFR with the
/// working precision grown with `m` and `a`. The scaled functions
/// `e^x Γ(s, x)` at half-integer and integer `s` are built by upward
/// recurrence from `√π e^x erfc(√x)` and `1`.
pub fn p_sl_rayleigh_closed_alpha2(params: &ScenarioParams, m: NeighborIndex) -> Result<f64> {
    let ple = params.budget().ple();
    if ple != 2 {
        return Err(Error::UnsupportedPathLossExponent(ple));
    }
    let z = params.rho() * params.range();
    let a = 0.5 * z;
    let exponent = a * a;
    if !(exponent < CLOSED_FORM_EXPONENT_LIMIT) {
        return Err(Error::ClosedFormOverflow {
            exponent,
            limit: CLOSED_FORM_EXPONENT_LIMIT,
        });
    }

    let m = m.get();
    let bits_per_term = 2 * ((a + 2.0).log2().ceil() as u32) + 2;
    let prec = 128 + m.saturating_mul(bits_per_term).min(1 << 16);

    let a_mp = Float::with_val(prec, a);
    let x = Float::with_val(prec, &a_mp * &a_mp);

    // scaled[k] = e^x Γ((k+1)/2, x) for k = 0..m-1.
    let sqrt_pi = Float::with_val(prec, Constant::Pi).sqrt();
    let mut half = sqrt_pi * Float::with_val(prec, a_mp.erfc_ref()) * Float::with_val(prec, x.exp_ref());
    let mut whole = Float::with_val(prec, 1);
    let mut scaled = Vec::with_capacity(m as usize);
    for k in 0..m {
        let j = k / 2;
        if k % 2 == 0 {
            if j > 0 {
                // Γ(s+1) = s Γ(s) + x^s with s = j - 1/2.
                let s = Float::with_val(prec, j) - 0.5;
                let pow = Float::with_val(prec, (&a_mp).pow(2 * j - 1));
                half = half * s + pow;
            }
            scaled.push(half.clone());
        } else {
            if j > 0 {
                let pow = Float::with_val(prec, (&x).pow(j));
                whole = whole * j + pow;
            }
            scaled.push(whole.clone());
        }
    }

    let mut sum = Float::with_val(prec, 0);
    let mut binom = Float::with_val(prec, 1);
    let neg_a = Float::with_val(prec, -&a_mp);
    for (k, g) in scaled.iter().enumerate() {
        let k = k as u32;
        let power = Float::with_val(prec, (&neg_a).pow(m - 1 - k));
        sum += Float::with_val(prec, &binom * &power) * g;
        binom = binom * (m - 1 - k) / (k + 1);
    }

    let z_mp = Float::with_val(prec, z);
    let fact = Float::with_val(prec, Float::factorial(m - 1));
    let prefactor = Float::with_val(prec, (&z_mp).pow(m)) / (fact * 2u32);
    let p = (prefactor * sum).to_f64();
    Ok(p.clamp(0.0, 1.0))
}

/// Mean received SNR of the m-th neighbour under Rayleigh fading:
/// `(β P_T ρ^α / P_noise) Π_{j=1}^{α} 1/(m-j)` for `m >= α + 1`.
pub fn avg_snr_rayleigh(params: &ScenarioParams, m: NeighborIndex) -> MeanSnr {
    let alpha = params.budget().ple();
    let m = m.get();
    if m <= alpha {
        return MeanSnr::Diverges;
    }
    let product: f64 = (1..=alpha).map(|j| 1.0 / f64::from(m - j)).product();
    MeanSnr::Finite(params.budget().reference_snr() * params.rho().powi(alpha as i32) * product)
}

/// Mean received SNR of the m-th neighbour under the unit disc. The SNR is
/// the deterministic function `β P_T / (Z_m^α P_noise)` of the Erlang
/// distance, so its mean is the negative moment
/// `E[Z_m^-α] = ρ^α Γ(m-α) / Γ(m)`, finite for `m >= α + 1`.
pub fn avg_snr_ud(params: &ScenarioParams, m: NeighborIndex) -> MeanSnr {
    let alpha = params.budget().ple();
    let m = m.get();
    if m <= alpha {
        return MeanSnr::Diverges;
    }
    let moment_ratio = (log_factorial(u64::from(m - alpha - 1)) - log_factorial(u64::from(m - 1))).exp();
    MeanSnr::Finite(params.budget().reference_snr() * params.rho().powi(alpha as i32) * moment_ratio)
}

/// Mean received SNR of the m-th neighbour by quadrature of the conditional
/// mean against the Erlang density. Divergent for `m <= α`, where the
/// integrand behaves like `u^(m-1-α)` at the origin.
pub fn avg_snr_quadrature(params: &ScenarioParams, m: NeighborIndex) -> Result<MeanSnr> {
    let alpha = params.budget().ple();
    let m = m.get();
    if m <= alpha {
        return Ok(MeanSnr::Diverges);
    }
    let shape = f64::from(m - 1 - alpha);
    let ln_norm = -log_factorial(u64::from(m) - 1);
    let cutoff = TAIL_EXPONENT + 4.0 * f64::from(m - 1);
    let integrand = |u: f64| {
        if u <= 0.0 {
            return if shape == 0.0 { ln_norm.exp() } else { 0.0 };
        }
        (shape * u.ln() - u + ln_norm).exp()
    };
    let q = integrate_semi_infinite(integrand, cutoff, &QuadratureSpec::default())?;
    Ok(MeanSnr::Finite(
        params.budget().reference_snr() * params.rho().powi(alpha as i32) * q.value,
    ))
}

/// Expected number of linked neighbours of a vehicle on an unbounded road
/// under Rayleigh fading: `ρ ∫ exp(-|x/λ|^α) dx`, equal to `ρλ√π` for α = 2.
pub fn avg_node_degree(params: &ScenarioParams) -> Result<f64> {
    let alpha = params.budget().ple() as i32;
    let cutoff = TAIL_EXPONENT.powf(1.0 / alpha as f64);
    let q = integrate_semi_infinite(|t| (-t.powi(alpha)).exp(), cutoff, &QuadratureSpec::default())?;
    Ok(2.0 * params.rho() * params.range() * q.value)
}

/// One-side vehicle connectivity under Rayleigh fading, treating the links to
/// the first `M` neighbours as independent.
pub fn p_vehicle_one_side_rayleigh(params: &ScenarioParams, big_m: SideTruncation) -> Result<f64> {
    Ok(1.0 - one_side_isolation(params, big_m)?)
}

/// Two-side vehicle connectivity under Rayleigh fading with independent sides.
pub fn p_vehicle_rayleigh(params: &ScenarioParams, big_m: SideTruncation) -> Result<f64> {
    let isolated = one_side_isolation(params, big_m)?;
    Ok(1.0 - isolated * isolated)
}

fn one_side_isolation(params: &ScenarioParams, big_m: SideTruncation) -> Result<f64> {
    (1..=big_m.get()).try_fold(1.0, |acc, m| {
        let p = p_sl_rayleigh(params, NeighborIndex(m))?;
        Ok(acc * (1.0 - p))
    })
}

/// Link probability to the m-th neighbour under either channel.
pub fn p_single_link(params: &ScenarioParams, model: crate::ChannelModel, m: NeighborIndex) -> Result<f64> {
    match model {
        crate::ChannelModel::UnitDisc => Ok(p_sl_ud_mth(params, m)),
        crate::ChannelModel::Rayleigh => p_sl_rayleigh(params, m),
    }
}

/// Expected node degree averaged over all `N` vehicles of a finite platoon:
/// `(2/N) Σ_{m=1}^{N-1} (N - m) P_SL(m)`. Lower than the unbounded-road value
/// because vehicles near either end miss neighbours.
pub fn expected_mean_degree_finite(params: &ScenarioParams, model: crate::ChannelModel) -> Result<f64> {
    let n = params.n_vehicles();
    let mut total = 0.0;
    for m in 1..n {
        let p = p_single_link(params, model, NeighborIndex(m as u32))?;
        total += (n - m) as f64 * p;
        // Link probabilities decay in m; stop once the remaining terms are
        // negligible.
        if m as f64 > params.rho() * params.range() && p * (n - m) as f64 * (n - m) as f64 <= 1e-15 * total {
            break;
        }
    }
    Ok(2.0 * total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{db_to_linear, LinkBudget};
    use crate::scenario::erlang_pdf;
    use crate::ChannelModel;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn at(rho: f64, psi_db: f64) -> ScenarioParams {
        ScenarioParams::with_defaults(rho, db_to_linear(psi_db)).unwrap()
    }

    fn nb(m: u32) -> NeighborIndex {
        NeighborIndex::new(m).unwrap()
    }

    #[test]
    fn newtypes_reject_zero() {
        assert!(NeighborIndex::new(0).is_err());
        assert!(NeighborIndex::try_from(0u32).is_err());
        assert!(SideTruncation::new(0).is_err());
        assert_eq!(SideTruncation::default().get(), 10);
    }

    #[test]
    fn erlang_cdf_edge_cases() {
        assert!((erlang_cdf(1, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-16);
        assert_eq!(erlang_cdf(3, 0.0), 0.0);
        assert_eq!(erlang_cdf(3, f64::INFINITY), 1.0);
        // Both summation branches agree across the switch point.
        let below = erlang_cdf(5, 5.0 - 1e-9);
        let above = erlang_cdf(5, 5.0);
        assert!((below - above).abs() < 1e-9);
        // Small-z tail keeps relative precision: P(3, 1e-3) ≈ z³/6.
        assert!(rel(erlang_cdf(3, 1e-3), 1e-9 / 6.0) < 1e-3);
    }

    #[test]
    fn unit_disc_first_link() {
        let p = at(0.019, 15.0);
        let z = p.rho() * p.range();
        assert!((z - 4.7726).abs() < 1e-3, "{z}");
        assert!((p_sl_ud_first(&p) - 0.991_54).abs() < 1e-4);
        assert_eq!(p_vehicle_ud(&p), p_sl_ud_first(&p));
        // ρr = 1 exactly.
        let q = ScenarioParams::with_defaults(1.0 / p.range(), p.psi()).unwrap();
        assert!((p_sl_ud_first(&q) - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert_eq!(erlang_cdf(1, 0.0), 0.0);
    }

    #[test]
    fn unit_disc_network() {
        let p = at(0.019, 15.0);
        assert_eq!(p.n_vehicles(), 190);
        let v = p_network_ud(&p);
        assert!((v - 0.2008).abs() < 1e-3, "{v}");
        let two = ScenarioParams::new(0.019, 100.0, *p.budget(), p.psi()).unwrap();
        assert_eq!(two.n_vehicles(), 2);
        assert!(rel(p_network_ud(&two), p_sl_ud_first(&two)) < 1e-14);
        let huge_range = at(0.019, -120.0);
        assert!(p_network_ud(&huge_range) > 1.0 - 1e-12);
    }

    #[test]
    fn unit_disc_mth_neighbor() {
        let p = at(0.019, 15.0);
        assert!(rel(p_sl_ud_mth(&p, nb(1)), p_sl_ud_first(&p)) < 1e-15);
        let z = p.rho() * p.range();
        let two = p_sl_ud_mth(&p, nb(2));
        assert!(rel(two, 1.0 - (-z).exp() * (1.0 + z)) < 1e-13);
        assert!((two - 0.951).abs() < 1e-3);
        let mut prev = 1.0;
        for m in 1..=40 {
            let v = p_sl_ud_mth(&p, nb(m));
            assert!(v <= prev, "m = {m}");
            prev = v;
        }
    }

    #[test]
    fn unit_disc_mth_matches_erlang_density_quadrature() {
        let p = at(0.019, 15.0);
        let r = p.range();
        let spec = QuadratureSpec::default();
        for m in [1u32, 2, 3, 5, 10] {
            let oracle = crate::numerics::integrate(|x| erlang_pdf(x, m, p.rho()).unwrap(), 0.0, r, &spec)
                .unwrap()
                .value;
            assert!((p_sl_ud_mth(&p, nb(m)) - oracle).abs() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn rayleigh_single_link_reference_values() {
        // 50-digit reference values for ρ = 0.019 (Ψ = 15 dB and 5 dB).
        let p15 = at(0.019, 15.0);
        let p5 = at(0.019, 5.0);
        let cases = [
            (&p15, 1, 0.928_796_846_082_041_3),
            (&p15, 2, 0.810_917_060_110_149_7),
            (&p15, 5, 0.401_608_834_529_931_9),
            (&p15, 10, 0.060_131_471_580_028_25),
            (&p5, 1, 0.991_441_148_187_037),
            (&p5, 10, 0.643_302_928_563_996_7),
        ];
        for (params, m, expected) in cases {
            let v = p_sl_rayleigh(params, nb(m)).unwrap();
            assert!(rel(v, expected) < 1e-9, "m = {m}: {v} vs {expected}");
        }
        let first = p_sl_rayleigh(&p15, nb(1)).unwrap();
        assert!((first - 0.93).abs() < 0.005);
        assert!(first < p_sl_ud_mth(&p15, nb(1)));
        assert!(p_sl_rayleigh(&p15, nb(10)).unwrap() > p_sl_ud_mth(&p15, nb(10)));
    }

    #[test]
    fn rayleigh_single_link_limits() {
        let tiny_psi = at(0.019, -200.0);
        for m in [1, 3, 10] {
            assert!(p_sl_rayleigh(&tiny_psi, nb(m)).unwrap() > 1.0 - 1e-9);
        }
        let sparse = at(1e-9, 15.0);
        for m in [1, 3, 10] {
            assert!(p_sl_rayleigh(&sparse, nb(m)).unwrap() < 1e-6);
            assert!(p_sl_rayleigh_closed_alpha2(&sparse, nb(m)).unwrap() < 1e-6);
        }
    }

    #[test]
    fn closed_form_first_neighbor_is_erfc_expression() {
        // m = 1: (ρλ√π/2) e^(ρ²λ²/4) erfc(ρλ/2), evaluated independently at 50
        // digits for ρ = 0.019, Ψ = 15 dB.
        let p = at(0.019, 15.0);
        let v = p_sl_rayleigh_closed_alpha2(&p, nb(1)).unwrap();
        assert!(rel(v, 0.928_796_846_082_041_3) < 1e-13, "{v}");
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        for rho in [0.005, 0.019, 0.05] {
            for psi_db in [5.0, 15.0, 25.0] {
                let p = at(rho, psi_db);
                for m in 1..=10 {
                    let quad = p_sl_rayleigh(&p, nb(m)).unwrap();
                    let closed = p_sl_rayleigh_closed_alpha2(&p, nb(m)).unwrap();
                    assert!(
                        rel(closed, quad) <= 1e-8,
                        "rho {rho}, psi {psi_db} dB, m {m}: {closed} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_guards() {
        let b = LinkBudget::new(1995.26, 0.01, 10.0, 3).unwrap();
        let p = ScenarioParams::new(0.019, 1e4, b, 31.6).unwrap();
        assert_eq!(
            p_sl_rayleigh_closed_alpha2(&p, nb(1)),
            Err(Error::UnsupportedPathLossExponent(3))
        );
        // ρλ/2 = 0.2 · 794 / 2 ≈ 79, far past the exponent limit.
        let dense = at(0.2, 5.0);
        assert!(matches!(
            p_sl_rayleigh_closed_alpha2(&dense, nb(2)),
            Err(Error::ClosedFormOverflow { .. })
        ));
        assert!(p_sl_rayleigh(&dense, nb(2)).is_ok());
    }

    #[test]
    fn crossover_index_exists() {
        let p = at(0.019, 15.0);
        let diffs: Vec<f64> = (1..=15)
            .map(|m| p_sl_rayleigh(&p, nb(m)).unwrap() - p_sl_ud_mth(&p, nb(m)))
            .collect();
        let first_positive = diffs.iter().position(|&d| d > 0.0).expect("reversal");
        assert!(first_positive > 0);
        assert!(diffs[..first_positive].iter().all(|&d| d < 0.0));
        assert!(diffs[first_positive..].iter().all(|&d| d > 0.0), "{diffs:?}");
    }

    #[test]
    fn average_snr_closed_form() {
        let p = at(0.019, 15.0);
        let v = avg_snr_rayleigh(&p, nb(3)).finite().unwrap();
        // 10 · 1995.26 · 0.019² / 0.01 / 2.
        assert!((v - 360.1).abs() < 0.1, "{v}");
        assert_eq!(avg_snr_rayleigh(&p, nb(2)), MeanSnr::Diverges);
        assert_eq!(avg_snr_ud(&p, nb(2)), MeanSnr::Diverges);
        assert_eq!(avg_snr_ud(&p, nb(1)), MeanSnr::Diverges);
        assert!(avg_snr_ud(&p, nb(3)).finite().is_some());
    }

    #[test]
    fn average_snr_routes_agree() {
        let p = at(0.019, 15.0);
        for m in 3..=12 {
            let closed = avg_snr_rayleigh(&p, nb(m)).finite().unwrap();
            let moment = avg_snr_ud(&p, nb(m)).finite().unwrap();
            let quad = avg_snr_quadrature(&p, nb(m)).unwrap().finite().unwrap();
            assert!(rel(moment, closed) < 1e-12, "m = {m}");
            assert!(rel(quad, closed) < 1e-9, "m = {m}: {quad} vs {closed}");
        }
        assert_eq!(avg_snr_quadrature(&p, nb(2)).unwrap(), MeanSnr::Diverges);
    }

    #[test]
    fn average_snr_scaling() {
        let b1 = LinkBudget::new(100.0, 0.01, 10.0, 2).unwrap();
        let b2 = LinkBudget::new(200.0, 0.01, 10.0, 2).unwrap();
        let p1 = ScenarioParams::new(0.01, 1e4, b1, 10.0).unwrap();
        let p2 = ScenarioParams::new(0.01, 1e4, b2, 10.0).unwrap();
        let p3 = ScenarioParams::new(0.02, 1e4, b1, 10.0).unwrap();
        let v = |p: &ScenarioParams| avg_snr_ud(p, nb(5)).finite().unwrap();
        assert!(rel(v(&p2), 2.0 * v(&p1)) < 1e-14);
        assert!(rel(v(&p3), 4.0 * v(&p1)) < 1e-14);
        let w = |p: &ScenarioParams| avg_snr_rayleigh(p, nb(5)).finite().unwrap();
        assert!(rel(w(&p2), 2.0 * w(&p1)) < 1e-14);
    }

    #[test]
    fn node_degree() {
        let p = at(0.019, 15.0);
        let d = avg_node_degree(&p).unwrap();
        let closed = p.rho() * p.range() * std::f64::consts::PI.sqrt();
        assert!(rel(d, closed) < 1e-10);
        assert!((d - 8.46).abs() < 0.01, "{d}");
        let doubled = avg_node_degree(&at(0.038, 15.0)).unwrap();
        assert!(rel(doubled, 2.0 * d) < 1e-12);
        assert!(avg_node_degree(&at(1e-12, 15.0)).unwrap() < 1e-8);
    }

    #[test]
    fn node_degree_is_twice_the_sum_of_link_probabilities() {
        let p = at(0.019, 15.0);
        let sum: f64 = (1..=80).map(|m| p_sl_rayleigh(&p, nb(m)).unwrap()).sum();
        assert!(rel(2.0 * sum, avg_node_degree(&p).unwrap()) < 1e-8);
    }

    #[test]
    fn vehicle_connectivity() {
        let p = at(0.019, 15.0);
        let one = p_vehicle_one_side_rayleigh(&p, SideTruncation::new(1).unwrap()).unwrap();
        assert!(rel(one, p_sl_rayleigh(&p, nb(1)).unwrap()) < 1e-15);
        let mut prev = 0.0;
        for big_m in 1..=12 {
            let v = p_vehicle_one_side_rayleigh(&p, SideTruncation::new(big_m).unwrap()).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let two = p_vehicle_rayleigh(&p, SideTruncation::default()).unwrap();
        let one = p_vehicle_one_side_rayleigh(&p, SideTruncation::default()).unwrap();
        assert!(((1.0 - two) - (1.0 - one).powi(2)).abs() < 1e-15);
        assert!(p_vehicle_rayleigh(&at(1e-9, 15.0), SideTruncation::default()).unwrap() < 1e-6);
        assert!(p_vehicle_rayleigh(&at(0.019, -200.0), SideTruncation::default()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn finite_platoon_degree_is_below_unbounded_value() {
        let p = at(0.019, 15.0);
        let finite = expected_mean_degree_finite(&p, ChannelModel::Rayleigh).unwrap();
        let unbounded = avg_node_degree(&p).unwrap();
        assert!(finite < unbounded);
        assert!(unbounded - finite < 0.2, "{finite} vs {unbounded}");
        let ud = expected_mean_degree_finite(&p, ChannelModel::UnitDisc).unwrap();
        let r = p.range();
        assert!(ud < 2.0 * p.rho() * r);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn probabilities_are_monotone(
                rho in 0.002f64..0.04,
                drho in 0.0005f64..0.01,
                psi_db in 0.0f64..25.0,
                dpsi in 0.5f64..5.0,
                m in 1u32..8,
            ) {
                let base = at(rho, psi_db);
                let denser = at(rho + drho, psi_db);
                let stricter = at(rho, psi_db + dpsi);
                let m = nb(m);
                let checks: [(f64, f64, f64); 3] = [
                    (p_sl_ud_mth(&base, m), p_sl_ud_mth(&denser, m), p_sl_ud_mth(&stricter, m)),
                    (
                        p_sl_rayleigh(&base, m).unwrap(),
                        p_sl_rayleigh(&denser, m).unwrap(),
                        p_sl_rayleigh(&stricter, m).unwrap(),
                    ),
                    (
                        p_vehicle_rayleigh(&base, SideTruncation::default()).unwrap(),
                        p_vehicle_rayleigh(&denser, SideTruncation::default()).unwrap(),
                        p_vehicle_rayleigh(&stricter, SideTruncation::default()).unwrap(),
                    ),
                ];
                for (b, d, s) in checks {
                    prop_assert!((0.0..=1.0).contains(&b));
                    prop_assert!(d >= b - 1e-12, "density: {} -> {}", b, d);
                    prop_assert!(s <= b + 1e-12, "threshold: {} -> {}", b, s);
                }
                let nd = p_network_ud(&base);
                prop_assert!((0.0..=1.0).contains(&nd));
                prop_assert!(p_sl_ud_first(&denser) >= p_sl_ud_first(&base));
            }
        }
    }
}
