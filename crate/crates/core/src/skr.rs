//! Secret key rates: instantaneous per-sub-channel rates, the Monte Carlo
//! MIMO aggregate over channel realisations, and the high-modulation
//! asymptotic expressions including the two-way/one-way differential rate.

use crate::bounds::{entropy_lower, entropy_upper, mi_bound, VarianceConvention};
use crate::channel::ChannelSampler;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::eve::holevo;
use crate::noise::{poisson_weights, HybridNoiseParams, Protocol, ProtocolParams};
use crate::numeric::KahanSum;
use crate::symplectic::von_neumann_entropy;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Component terms of one instantaneous rate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SkrBreakdown {
    pub mi_bound: f64,
    pub holevo: f64,
    pub skr: f64,
}

/// Instantaneous rate terms at fixed transmissivity:
/// skr = β·I_B − χ. Negative values are returned as-is.
pub fn skr_breakdown(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
    convention: VarianceConvention,
) -> Result<SkrBreakdown> {
    let mi = mi_bound(protocol, t, p, hn, tail_tol, convention)?;
    let chi = holevo(protocol, t, p, hn)?;
    Ok(SkrBreakdown {
        mi_bound: mi,
        holevo: chi,
        skr: p.reconciliation_efficiency * mi - chi,
    })
}

/// Instantaneous secret key rate at fixed transmissivity (bits/use).
pub fn skr_instant(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
    convention: VarianceConvention,
) -> Result<f64> {
    Ok(skr_breakdown(protocol, t, p, hn, tail_tol, convention)?.skr)
}

// ---------------------------------------------------------------------------
// MIMO Monte Carlo
// ---------------------------------------------------------------------------

/// Per-sub-channel Monte Carlo statistics.
#[derive(Debug, Clone, Copy)]
pub struct SubchannelStats {
    pub mean_skr: f64,
    pub std_error: f64,
    pub mean_mi: f64,
    pub mean_holevo: f64,
    /// Mean of max(skr, 0); reported for plotting parity only.
    pub mean_skr_clamped: f64,
}

/// Aggregated MIMO secret key rate.
#[derive(Debug, Clone)]
pub struct SkrResult {
    pub protocol: Protocol,
    pub per_subchannel: Vec<SubchannelStats>,
    /// Sum of the per-sub-channel means (exactly).
    pub total_skr: f64,
    /// Batch-means standard error of the total.
    pub total_std_error: f64,
    pub total_mi: f64,
    pub total_holevo: f64,
    pub total_skr_clamped: f64,
    pub realizations: usize,
    /// Sub-channel transmissivities that hit the [0, 1] clamp.
    pub clamp_events: usize,
    /// Set when every sampled sub-channel transmissivity was exactly zero.
    pub degenerate: bool,
    pub fingerprint: String,
}

/// Standard error of the mean by non-overlapping batch means (up to 64
/// batches), robust to the heavy tails the clamped transmissivities induce.
fn batch_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let b = n.min(64);
    let mut means = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * n / b;
        let hi = ((k + 1) * n / b).max(lo + 1);
        let mut acc = KahanSum::new();
        for x in &xs[lo..hi] {
            acc.add(*x);
        }
        means.push(acc.value() / (hi - lo) as f64);
    }
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

struct RealizationOutcome {
    /// [protocol][slot] -> (skr, mi, chi)
    values: Vec<Vec<(f64, f64, f64)>>,
    clamp_events: usize,
    any_active: bool,
}

fn evaluate_mimo(
    sampler: &ChannelSampler,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
    convention: VarianceConvention,
    n_realizations: usize,
    seed: u64,
    fingerprint: &str,
    protocols: &[Protocol],
) -> Result<Vec<SkrResult>> {
    if n_realizations == 0 {
        return Err(Error::domain("n_realizations must be >= 1"));
    }
    let n_slots = sampler.subchannel_slots();

    // Independent per-realization RNG substreams keep the draw sequence
    // identical regardless of worker scheduling.
    let outcomes: Vec<RealizationOutcome> = (0..n_realizations)
        .into_par_iter()
        .map(|idx| -> Result<RealizationOutcome> {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64 + 1);
            let real = sampler.realize(&mut rng)?;
            let mut values = vec![Vec::with_capacity(n_slots); protocols.len()];
            let mut any_active = false;
            for slot in 0..n_slots {
                match real.effective_t.get(slot) {
                    Some(&t) => {
                        if t > 0.0 {
                            any_active = true;
                        }
                        for (pi, &proto) in protocols.iter().enumerate() {
                            let b = skr_breakdown(proto, t, p, hn, tail_tol, convention)?;
                            values[pi].push((b.skr, b.mi_bound, b.holevo));
                        }
                    }
                    None => {
                        for v in values.iter_mut() {
                            v.push((0.0, 0.0, 0.0));
                        }
                    }
                }
            }
            Ok(RealizationOutcome {
                values,
                clamp_events: real.clamp_events,
                any_active,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let nf = n_realizations as f64;
    let clamp_events: usize = outcomes.iter().map(|o| o.clamp_events).sum();
    let degenerate = !outcomes.iter().any(|o| o.any_active);

    let mut results = Vec::with_capacity(protocols.len());
    for (pi, &proto) in protocols.iter().enumerate() {
        let mut per_subchannel = Vec::with_capacity(n_slots);
        let mut totals_per_realization = vec![0.0f64; n_realizations];
        for slot in 0..n_slots {
            let mut skr_sum = KahanSum::new();
            let mut mi_sum = KahanSum::new();
            let mut chi_sum = KahanSum::new();
            let mut clamped_sum = KahanSum::new();
            let mut series = Vec::with_capacity(n_realizations);
            for (r, outcome) in outcomes.iter().enumerate() {
                let (skr, mi, chi) = outcome.values[pi][slot];
                skr_sum.add(skr);
                mi_sum.add(mi);
                chi_sum.add(chi);
                clamped_sum.add(skr.max(0.0));
                totals_per_realization[r] += skr;
                series.push(skr);
            }
            per_subchannel.push(SubchannelStats {
                mean_skr: skr_sum.value() / nf,
                std_error: batch_se(&series),
                mean_mi: mi_sum.value() / nf,
                mean_holevo: chi_sum.value() / nf,
                mean_skr_clamped: clamped_sum.value() / nf,
            });
        }
        let total_skr: f64 = per_subchannel.iter().map(|s| s.mean_skr).sum();
        let total_mi: f64 = per_subchannel.iter().map(|s| s.mean_mi).sum();
        let total_holevo: f64 = per_subchannel.iter().map(|s| s.mean_holevo).sum();
        let total_skr_clamped: f64 = per_subchannel.iter().map(|s| s.mean_skr_clamped).sum();
        results.push(SkrResult {
            protocol: proto,
            per_subchannel,
            total_skr,
            total_std_error: batch_se(&totals_per_realization),
            total_mi,
            total_holevo,
            total_skr_clamped,
            realizations: n_realizations,
            clamp_events,
            degenerate,
            fingerprint: fingerprint.to_string(),
        });
    }
    Ok(results)
}

/// Monte Carlo MIMO secret key rate: average the instantaneous rate over
/// channel realisations per sub-channel and sum over sub-channels.
pub fn skr_mimo(
    protocol: Protocol,
    config: &SystemConfig,
    n_realizations: usize,
    seed: u64,
) -> Result<SkrResult> {
    let sampler = config.build_sampler()?;
    skr_mimo_with_sampler(protocol, &sampler, config, n_realizations, seed)
}

/// Same as [`skr_mimo`] but reusing a prebuilt sampler.
pub fn skr_mimo_with_sampler(
    protocol: Protocol,
    sampler: &ChannelSampler,
    config: &SystemConfig,
    n_realizations: usize,
    seed: u64,
) -> Result<SkrResult> {
    let p = config.protocol_params()?;
    let hn = config.hybrid_noise()?;
    Ok(evaluate_mimo(
        sampler,
        &p,
        &hn,
        config.tail_tol,
        config.convention,
        n_realizations,
        seed,
        &config.fingerprint(),
        &[protocol],
    )?
    .pop()
    .expect("one protocol requested"))
}

/// Evaluate both protocols on identical channel realisations (paired
/// comparison; the channel draw sequence is protocol-independent).
pub fn skr_mimo_paired(
    sampler: &ChannelSampler,
    config: &SystemConfig,
    n_realizations: usize,
    seed: u64,
) -> Result<(SkrResult, SkrResult)> {
    let p = config.protocol_params()?;
    let hn = config.hybrid_noise()?;
    let mut v = evaluate_mimo(
        sampler,
        &p,
        &hn,
        config.tail_tol,
        config.convention,
        n_realizations,
        seed,
        &config.fingerprint(),
        &[Protocol::OneWay, Protocol::TwoWay],
    )?;
    let two = v.pop().expect("two protocols requested");
    let one = v.pop().expect("two protocols requested");
    Ok((one, two))
}

// ---------------------------------------------------------------------------
// High-modulation asymptotics
// ---------------------------------------------------------------------------

/// Asymptotic quantities in the high-modulation limit, with validity flags.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticReport {
    pub mutual_information: f64,
    pub holevo: f64,
    pub skr: f64,
    /// Two-way minus one-way rate in the ν = 1, V_0 ≈ ν regime.
    pub delta_skr: f64,
    /// Small-transmissivity simplification ½ log₂(1 + T² V_0).
    pub delta_skr_small_t: f64,
    /// V_s at least 10³ × max(V_0, ν, σ_g²).
    pub high_modulation_valid: bool,
    /// ν = 1 and V_0 ≈ ν hold, as the differential-rate expressions assume.
    pub delta_assumptions_met: bool,
}

/// One-way spectrum approximations in the high-modulation limit:
/// [ν, (1−T)V_s] for the unconditional state and [ν, √((1−T)V_s ν / T)]
/// for the conditional one.
pub fn asymptotic_spectrum_one_way(t: f64, p: &ProtocolParams) -> [f64; 4] {
    let vs = p.modulation_variance;
    let nu = p.eve_variance;
    [nu, (1.0 - t) * vs, nu, ((1.0 - t) * vs * nu / t).sqrt()]
}

/// The bounded conditional eigenvalue of the two-way spectrum approximation.
pub fn asymptotic_lambda6(t: f64, p: &ProtocolParams) -> f64 {
    let nu = p.eve_variance;
    let v0 = p.vacuum_variance;
    let t3 = t * t * t;
    (((1.0 + t3) * nu + (1.0 - t) * t * t * v0 * nu * nu)
        / ((1.0 - t) * t * t * v0 + (1.0 + t3) * nu))
        .sqrt()
}

fn asymptotic_mi(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
) -> Result<f64> {
    let vs = p.modulation_variance;
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let sg = hn.gaussian_variance;
    let (sigma_b2, sigma_n2) = match protocol {
        Protocol::OneWay => (t * t * vs, (1.0 - t * t) * nu + sg),
        Protocol::TwoWay => (t * vs, t * t * v0 + (1.0 - t * t) * nu + (1.0 + t) * sg),
    };
    Ok(entropy_upper(sigma_b2, hn.poisson_mean, tail_tol)?
        - entropy_lower(sigma_n2, hn.poisson_mean, tail_tol)?)
}

fn asymptotic_holevo(protocol: Protocol, t: f64, p: &ProtocolParams) -> Result<f64> {
    let vs = p.modulation_variance;
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    match protocol {
        Protocol::OneWay => Ok(0.5 * (t * (1.0 - t) * vs / nu).log2()),
        Protocol::TwoWay => {
            let denom = t * t * v0 + nu + t * t * t * (nu - v0);
            let lambda6 = asymptotic_lambda6(t, p);
            Ok(
                0.5 * (t * (1.0 - t) * vs / denom).log2() + von_neumann_entropy(nu)?
                    - von_neumann_entropy(lambda6)?,
            )
        }
    }
}

/// Evaluate the high-modulation approximations at fixed transmissivity.
/// Requires 0 < T < 1 (the expressions carry 1/T and 1/(1−T) factors).
pub fn asymptotic_report(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
) -> Result<AsymptoticReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!(
            "asymptotics need 0 < T < 1, got {t}"
        )));
    }
    let mi = asymptotic_mi(protocol, t, p, hn, tail_tol)?;
    let chi = asymptotic_holevo(protocol, t, p)?;
    let delta = delta_skr(t, p, hn, tail_tol)?;
    let scale = p
        .vacuum_variance
        .max(p.eve_variance)
        .max(hn.gaussian_variance);
    Ok(AsymptoticReport {
        mutual_information: mi,
        holevo: chi,
        skr: p.reconciliation_efficiency * mi - chi,
        delta_skr: delta.value,
        delta_skr_small_t: delta.small_t,
        high_modulation_valid: p.modulation_variance >= 1e3 * scale,
        delta_assumptions_met: delta.assumptions_met,
    })
}

/// Differential rate between the protocols in the high-modulation limit.
#[derive(Debug, Clone, Copy)]
pub struct DeltaSkr {
    /// Full expression: weighted kernel-ratio term plus ½ log₂(1 + T²V_0).
    pub value: f64,
    /// Small-T simplification ½ log₂(1 + T²V_0).
    pub small_t: f64,
    /// ν = 1 and V_0 ≈ ν, the regime the expression is derived in.
    pub assumptions_met: bool,
}

/// Two-way minus one-way asymptotic rate. The kernel-ratio term compares
/// the effective-noise mixtures of the two protocols (one-way variance
/// T·V_0 + (1−T)ν + σ_g², two-way T²·V_0 + (1−T²)ν + (1+T)σ_g²) and
/// vanishes as T → 0; the remainder is ½ log₂(1 + T²V_0).
pub fn delta_skr(
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
) -> Result<DeltaSkr> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmissivity {t} outside [0, 1]")));
    }
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let sg = hn.gaussian_variance;
    let w = poisson_weights(hn.poisson_mean, tail_tol)?;

    let v1 = t * v0 + (1.0 - t) * nu + sg;
    let v2 = t * t * v0 + (1.0 - t * t) * nu + (1.0 + t) * sg;

    let kernel_sum = |k: usize, v: f64| -> f64 {
        w.iter()
            .enumerate()
            .map(|(l, wl)| {
                let d = (k as f64 - l as f64) * (k as f64 - l as f64);
                wl * (-d / (4.0 * v)).exp()
            })
            .sum()
    };

    let mut ratio_term = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let s1: f64 = kernel_sum(k, v1);
        let s2: f64 = kernel_sum(k, v2);
        ratio_term += wk * (0.5 * (v1 / v2).log2() + (s2 / s1).log2());
    }

    let small_t = 0.5 * (1.0 + t * t * v0).log2();
    let assumptions_met = (p.eve_variance - 1.0).abs() < 1e-6 && (v0 - nu).abs() <= 0.01 * nu;
    Ok(DeltaSkr {
        value: ratio_term + small_t,
        small_t,
        assumptions_met,
    })
}
