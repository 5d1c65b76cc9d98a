//! Truncated-series entropy bounds for Poisson–Gaussian mixtures, the
//! mutual-information bounds assembled from them, and independent quadrature
//! oracles used to verify both.
//!
//! All quantities are in bits.
//!
//! Two variance conventions coexist in the underlying expressions: the
//! mixture densities carry T-linear received/effective variances, while the
//! assembled mutual-information bound uses T²-weighted variances. The two do
//! not agree and are deliberately not reconciled here; [`VarianceConvention`]
//! selects which set feeds the bound, with [`VarianceConvention::AsPrinted`]
//! (the T² form, which the secret-key-rate expressions build on) as default.

use crate::error::{Error, Result};
use crate::noise::{
    effective_noise_variance, received_signal_variance, HybridNoiseParams, MixturePdf, Protocol,
    ProtocolParams,
};
use crate::numeric::integrate_segmented;
use std::f64::consts::{E, PI};

const LN2: f64 = std::f64::consts::LN_2;

/// Selects the variance bookkeeping used inside the mutual-information bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceConvention {
    /// T²-weighted variances, as used by the key-rate expressions.
    #[default]
    AsPrinted,
    /// Variances of the actual received/effective-noise densities
    /// (moment-matched to the simulated channel relations).
    MomentMatched,
}

impl std::fmt::Display for VarianceConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarianceConvention::AsPrinted => write!(f, "as-printed"),
            VarianceConvention::MomentMatched => write!(f, "moment-matched"),
        }
    }
}

fn log_weights(lambda0: f64, count: usize) -> Vec<f64> {
    if lambda0 == 0.0 {
        return vec![0.0];
    }
    (0..count)
        .map(|k| -lambda0 + k as f64 * lambda0.ln() - libm::lgamma(k as f64 + 1.0))
        .collect()
}

/// Upper bound on the differential entropy of a Poisson–Gaussian mixture
/// with the given shared variance: the Gaussian component entropy plus the
/// discrete entropy of the mixing weights.
pub fn entropy_upper(shared_variance: f64, lambda0: f64, tail_tol: f64) -> Result<f64> {
    if !(shared_variance > 0.0) {
        return Err(Error::domain("shared_variance must be > 0"));
    }
    let w = crate::noise::poisson_weights(lambda0, tail_tol)?;
    let lw = log_weights(lambda0, w.len());
    let gauss = 0.5 * (2.0 * PI * E * shared_variance).log2();
    let mut acc = 0.0;
    for (wk, lwk) in w.iter().zip(&lw) {
        acc += wk * (-lwk / LN2 + gauss);
    }
    Ok(acc)
}

/// Lower bound on the differential entropy of the same mixture, from the
/// pairwise-Gaussian overlap kernel with variance 2·shared_variance.
/// Evaluated in log-space with max-subtraction so tiny variances do not
/// underflow.
pub fn entropy_lower(shared_variance: f64, lambda0: f64, tail_tol: f64) -> Result<f64> {
    if !(shared_variance > 0.0) {
        return Err(Error::domain("shared_variance must be > 0"));
    }
    let w = crate::noise::poisson_weights(lambda0, tail_tol)?;
    let lw = log_weights(lambda0, w.len());
    let log_norm = -0.5 * (4.0 * PI * shared_variance).ln();
    let inv4v = 1.0 / (4.0 * shared_variance);

    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        // log sum over l of w_l * exp(-(k-l)^2 / 4v) / sqrt(4 pi v)
        let mut max_term = f64::NEG_INFINITY;
        let terms: Vec<f64> = lw
            .iter()
            .enumerate()
            .map(|(l, lwl)| {
                let d = (k as f64 - l as f64) * (k as f64 - l as f64);
                let t = lwl - d * inv4v + log_norm;
                if t > max_term {
                    max_term = t;
                }
                t
            })
            .collect();
        let log_inner = max_term + terms.iter().map(|t| (t - max_term).exp()).sum::<f64>().ln();
        acc -= wk * log_inner / LN2;
    }
    Ok(acc)
}

/// Received-signal and effective-noise variances used by the bound, under
/// the chosen convention: `(sigma_b2, sigma_n2)`.
pub fn mi_bound_variances(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    convention: VarianceConvention,
) -> (f64, f64) {
    let va = p.composite_variance();
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let sg = hn.gaussian_variance;
    match convention {
        VarianceConvention::AsPrinted => match protocol {
            Protocol::OneWay => (
                t * t * va + (1.0 - t * t) * nu + sg,
                (1.0 - t * t) * nu + sg,
            ),
            Protocol::TwoWay => (
                t * va + t * t * v0 + (1.0 - t * t) * nu + (1.0 + t) * sg,
                t * t * v0 + (1.0 - t * t) * nu + (1.0 + t) * sg,
            ),
        },
        VarianceConvention::MomentMatched => (
            received_signal_variance(protocol, t, p, hn),
            effective_noise_variance(protocol, t, p, hn),
        ),
    }
}

/// Bound on the mutual information between the sent and received variables:
/// upper entropy bound of the received density minus lower entropy bound of
/// the effective noise.
pub fn mi_bound(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
    convention: VarianceConvention,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmissivity {t} outside [0, 1]")));
    }
    let (sigma_b2, sigma_n2) = mi_bound_variances(protocol, t, p, hn, convention);
    Ok(entropy_upper(sigma_b2, hn.poisson_mean, tail_tol)?
        - entropy_lower(sigma_n2, hn.poisson_mean, tail_tol)?)
}

/// Differential entropy of a mixture density by adaptive quadrature,
/// independent of the series bounds. Absolute tolerance ~1e-6 bits.
pub fn entropy_oracle(pdf: &MixturePdf) -> Result<f64> {
    let (lo, hi) = pdf.evaluation_domain();
    // Panels aligned to the component lattice so narrow components are
    // always sampled.
    let mut breaks = vec![lo];
    let first_mean = pdf.means().first().copied().unwrap_or(0.0);
    let mut x = first_mean - 0.5;
    while x > lo {
        x -= 1.0;
    }
    x += 1.0;
    while x < hi {
        if x > lo {
            breaks.push(x);
        }
        x += 0.5;
    }
    breaks.push(hi);
    let r = integrate_segmented(
        |x| {
            let p = pdf.pdf(x);
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        },
        &breaks,
        1e-8,
        1e-9,
    )?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TAIL: f64 = 1e-12;

    fn protocol_defaults() -> ProtocolParams {
        ProtocolParams::new(1000.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn noise_defaults() -> HybridNoiseParams {
        HybridNoiseParams::new(1.0, 0.0, 0.001).unwrap()
    }

    /// Discrete Poisson entropy in bits by direct summation (independent of
    /// the weight-truncation code path).
    fn poisson_entropy_bits(lambda0: f64) -> f64 {
        if lambda0 == 0.0 {
            return 0.0;
        }
        let mut h = 0.0;
        for k in 0..200 {
            let lw = -lambda0 + k as f64 * lambda0.ln() - libm::lgamma(k as f64 + 1.0);
            h -= lw.exp() * lw / LN2;
        }
        h
    }

    // -- entropy_upper --------------------------------------------------------

    #[test]
    fn gaussian_limit_of_upper_bound() {
        let h = entropy_upper(1.0, 0.0, TAIL).unwrap();
        assert_relative_eq!(h, 0.5 * (2.0 * PI * E).log2(), epsilon = 1e-12);
        assert!((h - 2.0471).abs() < 1e-4);
    }

    #[test]
    fn upper_bound_adds_poisson_entropy() {
        let h = entropy_upper(1.0, 1.0, TAIL).unwrap();
        let expect = poisson_entropy_bits(1.0) + 0.5 * (2.0 * PI * E).log2();
        assert!((h - expect).abs() < 1e-9, "h={h} expect={expect}");
        assert!((h - 3.93).abs() < 0.01);
    }

    #[test]
    fn upper_bound_increases_with_variance() {
        let mut prev = f64::NEG_INFINITY;
        for s in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let h = entropy_upper(s, 1.0, TAIL).unwrap();
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn doubling_variance_adds_exactly_half_bit() {
        for lambda0 in [0.0, 1.0, 2.0] {
            let a = entropy_upper(0.37, lambda0, TAIL).unwrap();
            let b = entropy_upper(0.74, lambda0, TAIL).unwrap();
            assert_relative_eq!(b - a, 0.5, epsilon = 1e-12);
        }
    }

    // -- entropy_lower --------------------------------------------------------

    #[test]
    fn gaussian_limit_of_lower_bound() {
        let h = entropy_lower(1.0, 0.0, TAIL).unwrap();
        assert_relative_eq!(h, 0.5 * (4.0 * PI).log2(), epsilon = 1e-12);
        assert!((h - 1.8257).abs() < 1e-4);
    }

    #[test]
    fn degenerate_gap_is_half_log_e_over_two() {
        for s in [0.01, 1.0, 100.0] {
            let gap = entropy_upper(s, 0.0, TAIL).unwrap() - entropy_lower(s, 0.0, TAIL).unwrap();
            assert_relative_eq!(gap, 0.5 * (E / 2.0).log2(), epsilon = 1e-12);
        }
    }

    #[test]
    fn bounds_sandwich_quadrature_entropy() {
        for lambda0 in [0.5, 1.0, 2.0] {
            for s in [0.01, 1.0, 100.0] {
                let lo = entropy_lower(s, lambda0, TAIL).unwrap();
                let hi = entropy_upper(s, lambda0, TAIL).unwrap();
                let pdf = MixturePdf::new(lambda0, 0.0, s, TAIL).unwrap();
                let mid = entropy_oracle(&pdf).unwrap();
                assert!(
                    lo <= mid + 1e-6 && mid <= hi + 1e-6,
                    "λ0={lambda0} σ²={s}: {lo} <= {mid} <= {hi}"
                );
                // The lower margin stays macroscopic for a true mixture; the
                // upper one collapses once components stop overlapping
                // (σ² ≪ 1), so only demand it where it is resolvable.
                assert!(
                    mid - lo > 1e-4,
                    "λ0={lambda0} σ²={s}: lower margin {}",
                    mid - lo
                );
                if s >= 1.0 {
                    assert!(
                        hi - mid > 1e-4,
                        "λ0={lambda0} σ²={s}: upper margin {}",
                        hi - mid
                    );
                }
            }
        }
    }

    #[test]
    fn truncation_stability() {
        for s in [0.001, 1.0] {
            let u12 = entropy_upper(s, 1.0, 1e-12).unwrap();
            let u14 = entropy_upper(s, 1.0, 1e-14).unwrap();
            assert!((u12 - u14).abs() < 1e-9);
            let l12 = entropy_lower(s, 1.0, 1e-12).unwrap();
            let l14 = entropy_lower(s, 1.0, 1e-14).unwrap();
            assert!((l12 - l14).abs() < 1e-9);
        }
    }

    // -- mi_bound -------------------------------------------------------------

    #[test]
    fn zero_transmissivity_bound_is_entropy_gap() {
        let p = protocol_defaults();
        let hn = noise_defaults();
        for conv in [
            VarianceConvention::AsPrinted,
            VarianceConvention::MomentMatched,
        ] {
            let b = mi_bound(Protocol::OneWay, 0.0, &p, &hn, TAIL, conv).unwrap();
            let gap =
                entropy_upper(1.001, 1.0, TAIL).unwrap() - entropy_lower(1.001, 1.0, TAIL).unwrap();
            assert_relative_eq!(b, gap, epsilon = 1e-12);
            assert!(b >= 0.0);
        }
    }

    #[test]
    fn bound_increases_with_modulation_variance() {
        let hn = noise_defaults();
        let mut prev = f64::NEG_INFINITY;
        for vs in [10.0, 100.0, 1000.0, 10000.0] {
            let p = ProtocolParams::new(vs, 1.0, 1.0, 1.0).unwrap();
            let b = mi_bound(Protocol::OneWay, 0.4, &p, &hn, TAIL, Default::default()).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn bound_nonnegative_across_transmissivities() {
        let p = protocol_defaults();
        let hn = noise_defaults();
        for proto in [Protocol::OneWay, Protocol::TwoWay] {
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                let b = mi_bound(proto, t, &p, &hn, TAIL, Default::default()).unwrap();
                assert!(b >= 0.0, "{proto} T={t}: {b}");
            }
        }
    }

    #[test]
    fn bound_dominates_true_mutual_information() {
        // True MI of the additive mixture channel via the entropy oracle on
        // the actual received/effective densities, at small V_s.
        let p = ProtocolParams::new(10.0, 1.0, 1.0, 1.0).unwrap();
        let hn = noise_defaults();
        let t = 0.5;
        let received =
            crate::noise::received_signal_params(Protocol::OneWay, t, &p, &hn, TAIL).unwrap();
        let effective =
            crate::noise::effective_noise_params(Protocol::OneWay, t, &p, &hn, TAIL).unwrap();
        let true_mi = entropy_oracle(&received).unwrap() - entropy_oracle(&effective).unwrap();
        let b = mi_bound(
            Protocol::OneWay,
            t,
            &p,
            &hn,
            TAIL,
            VarianceConvention::AsPrinted,
        )
        .unwrap();
        assert!(b >= true_mi, "bound {b} < true {true_mi}");
        assert!(true_mi > 0.0);
    }

    // -- entropy_oracle -------------------------------------------------------

    #[test]
    fn oracle_matches_gaussian_closed_form() {
        let pdf = MixturePdf::new(0.0, 0.0, 1.0, TAIL).unwrap();
        let h = entropy_oracle(&pdf).unwrap();
        assert!((h - 0.5 * (2.0 * PI * E).log2()).abs() < 1e-6);
    }

    #[test]
    fn oracle_within_bounds_for_narrow_mixture() {
        // components disjoint: the oracle sits on the upper bound, within
        // quadrature tolerance
        let pdf = MixturePdf::new(1.0, 0.0, 0.001, TAIL).unwrap();
        let h = entropy_oracle(&pdf).unwrap();
        let lo = entropy_lower(0.001, 1.0, TAIL).unwrap();
        let hi = entropy_upper(0.001, 1.0, TAIL).unwrap();
        assert!(lo <= h + 1e-6 && h <= hi + 1e-6, "{lo} <= {h} <= {hi}");
    }

    #[test]
    fn oracle_is_shift_invariant() {
        let a = MixturePdf::new(1.0, 0.0, 0.3, TAIL).unwrap();
        let b = MixturePdf::new(1.0, 2.75, 0.3, TAIL).unwrap();
        let ha = entropy_oracle(&a).unwrap();
        let hb = entropy_oracle(&b).unwrap();
        assert!((ha - hb).abs() < 1e-6);
    }
}
