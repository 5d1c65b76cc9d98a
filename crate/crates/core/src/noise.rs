//! Hybrid Poisson–Gaussian receiver noise, the effective-noise and
//! received-signal mixture densities for both protocols, and a
//! quadrature-level Monte Carlo simulator of the beam-splitter relations.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use std::f64::consts::PI;

/// Largest admissible Poisson truncation order.
pub const MAX_POISSON_TERMS: usize = 4096;

/// Which of the two key-exchange protocols is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    OneWay,
    TwoWay,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::OneWay => write!(f, "one-way"),
            Protocol::TwoWay => write!(f, "two-way"),
        }
    }
}

/// Hybrid quantum noise: a Poisson-distributed photon count plus classical
/// Gaussian noise, entering the quadrature samples additively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridNoiseParams {
    /// Poisson mean (photon-count units).
    pub poisson_mean: f64,
    /// Mean of the classical Gaussian component.
    pub gaussian_mean: f64,
    /// Variance of the classical Gaussian component.
    pub gaussian_variance: f64,
}

impl HybridNoiseParams {
    pub fn new(poisson_mean: f64, gaussian_mean: f64, gaussian_variance: f64) -> Result<Self> {
        if !(poisson_mean >= 0.0) {
            return Err(Error::domain("poisson_mean must be >= 0"));
        }
        if !(gaussian_variance > 0.0) {
            return Err(Error::domain("gaussian_variance must be > 0"));
        }
        Ok(Self {
            poisson_mean,
            gaussian_mean,
            gaussian_variance,
        })
    }
}

/// Modulation and protocol-level parameters shared by both protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Gaussian modulation variance of each quadrature (V_s).
    pub modulation_variance: f64,
    /// Vacuum/thermal variance of a prepared coherent state (V_0).
    pub vacuum_variance: f64,
    /// Variance of each mode of the eavesdropper's entangled ancilla (>= 1).
    pub eve_variance: f64,
    /// Reconciliation efficiency in [0, 1].
    pub reconciliation_efficiency: f64,
}

impl ProtocolParams {
    pub fn new(
        modulation_variance: f64,
        vacuum_variance: f64,
        eve_variance: f64,
        reconciliation_efficiency: f64,
    ) -> Result<Self> {
        if !(modulation_variance > 0.0) {
            return Err(Error::domain("modulation_variance must be > 0"));
        }
        if !(vacuum_variance >= 1.0) {
            return Err(Error::domain("vacuum_variance must be >= 1"));
        }
        if !(eve_variance >= 1.0) {
            return Err(Error::domain("eve_variance must be >= 1"));
        }
        if !(0.0..=1.0).contains(&reconciliation_efficiency) {
            return Err(Error::domain("reconciliation_efficiency must be in [0, 1]"));
        }
        Ok(Self {
            modulation_variance,
            vacuum_variance,
            eve_variance,
            reconciliation_efficiency,
        })
    }

    /// Composite signal variance V_a = V_s + V_0.
    pub fn composite_variance(&self) -> f64 {
        self.modulation_variance + self.vacuum_variance
    }
}

// ---------------------------------------------------------------------------
// Poisson weights and mixture densities
// ---------------------------------------------------------------------------

/// Truncated Poisson weights {e^{-λ} λ^k / k!} for k = 0..K, where K is the
/// smallest index leaving a cumulative tail below `tail_tol`. Not
/// renormalised: the sum lies in [1 - tail_tol, 1].
pub fn poisson_weights(lambda0: f64, tail_tol: f64) -> Result<Vec<f64>> {
    if !(lambda0 >= 0.0) {
        return Err(Error::domain("poisson mean must be >= 0"));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::domain("tail_tol must be in (0, 1)"));
    }
    if lambda0 == 0.0 {
        return Ok(vec![1.0]);
    }
    // Log-space recurrence; exponentiate per term so sub-normal tails of
    // very large λ do not zero the leading weights.
    let ln_l = lambda0.ln();
    let mut log_w = -lambda0;
    let mut cum = log_w.exp();
    let mut weights = vec![cum];
    let mut k = 0usize;
    while 1.0 - cum >= tail_tol {
        k += 1;
        if k >= MAX_POISSON_TERMS {
            return Err(Error::config(format!(
                "poisson mean {lambda0} needs more than {MAX_POISSON_TERMS} mixture terms \
                 at tail tolerance {tail_tol:e}"
            )));
        }
        log_w += ln_l - (k as f64).ln();
        let w = log_w.exp();
        cum += w;
        weights.push(w);
    }
    Ok(weights)
}

/// A Poisson-weighted mixture of equal-variance Gaussians.
#[derive(Debug, Clone)]
pub struct MixturePdf {
    weights: Vec<f64>,
    means: Vec<f64>,
    shared_variance: f64,
    poisson_mean: f64,
}

impl MixturePdf {
    /// Mixture with means k + `mean_offset` and the given shared variance.
    pub fn new(
        lambda0: f64,
        mean_offset: f64,
        shared_variance: f64,
        tail_tol: f64,
    ) -> Result<Self> {
        if !(shared_variance > 0.0) {
            return Err(Error::domain("shared variance must be > 0"));
        }
        let weights = poisson_weights(lambda0, tail_tol)?;
        let means = (0..weights.len()).map(|k| k as f64 + mean_offset).collect();
        Ok(Self {
            weights,
            means,
            shared_variance,
            poisson_mean: lambda0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn shared_variance(&self) -> f64 {
        self.shared_variance
    }

    pub fn poisson_mean(&self) -> f64 {
        self.poisson_mean
    }

    /// Density value at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        let norm = 1.0 / (2.0 * PI * self.shared_variance).sqrt();
        let inv2v = 0.5 / self.shared_variance;
        let mut acc = 0.0;
        for (w, m) in self.weights.iter().zip(&self.means) {
            let d = x - m;
            acc += w * (-d * d * inv2v).exp();
        }
        acc * norm
    }

    /// Domain over which the density carries all but a negligible mass:
    /// component-mean span widened by 12 standard deviations.
    pub fn evaluation_domain(&self) -> (f64, f64) {
        let sd = self.shared_variance.sqrt();
        let lo = self.means.first().copied().unwrap_or(0.0) - 12.0 * sd;
        let hi = self.means.last().copied().unwrap_or(0.0) + 12.0 * sd;
        (lo, hi)
    }

    /// Total variance of the mixture: shared variance plus the spread of the
    /// component means (≈ λ0 for the Poisson lattice).
    pub fn total_variance(&self) -> f64 {
        let wsum: f64 = self.weights.iter().sum();
        let mean: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum::<f64>()
            / wsum;
        let spread: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * (m - mean) * (m - mean))
            .sum::<f64>()
            / wsum;
        self.shared_variance + spread
    }

    /// Draw one sample (component index from the Poisson law, then Gaussian).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = sample_poisson(self.poisson_mean, rng);
        let offset = self.means[0];
        let g = Normal::new(0.0, self.shared_variance.sqrt())
            .unwrap()
            .sample(rng);
        k as f64 + offset + g
    }
}

/// Density of the bare hybrid noise n = n_p + n_g at `n`.
pub fn hybrid_noise_pdf(n: f64, params: &HybridNoiseParams, tail_tol: f64) -> Result<f64> {
    let pdf = MixturePdf::new(
        params.poisson_mean,
        params.gaussian_mean,
        params.gaussian_variance,
        tail_tol,
    )?;
    Ok(pdf.pdf(n))
}

fn check_transmissivity(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmissivity {t} outside [0, 1]")));
    }
    Ok(())
}

/// Shared variance of the effective (signal-independent) noise seen after
/// homodyne detection and post-processing.
pub fn effective_noise_variance(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> f64 {
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let sg = hn.gaussian_variance;
    match protocol {
        Protocol::OneWay => t * v0 + (1.0 - t) * nu + sg,
        Protocol::TwoWay => (t + t * t) * v0 + (1.0 - t * t) * nu + (1.0 + t * t) * sg,
    }
}

/// Shared variance of the received signal before conditioning on the sent
/// symbol.
pub fn received_signal_variance(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> f64 {
    let va = p.composite_variance();
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let sg = hn.gaussian_variance;
    match protocol {
        Protocol::OneWay => t * va + (1.0 - t) * nu + sg,
        Protocol::TwoWay => t * va + t * t * v0 + (1.0 - t * t) * nu + (1.0 + t * t) * sg,
    }
}

fn mixture_mean_offset(protocol: Protocol, t: f64, hn: &HybridNoiseParams) -> f64 {
    match protocol {
        Protocol::OneWay => hn.gaussian_mean,
        Protocol::TwoWay => (1.0 + t.sqrt()) * hn.gaussian_mean,
    }
}

/// Mixture density of the effective additive noise for the given protocol.
pub fn effective_noise_params(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
) -> Result<MixturePdf> {
    check_transmissivity(t)?;
    MixturePdf::new(
        hn.poisson_mean,
        mixture_mean_offset(protocol, t, hn),
        effective_noise_variance(protocol, t, p, hn),
        tail_tol,
    )
}

/// Mixture density of the received signal at the detecting party.
pub fn received_signal_params(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    tail_tol: f64,
) -> Result<MixturePdf> {
    check_transmissivity(t)?;
    MixturePdf::new(
        hn.poisson_mean,
        mixture_mean_offset(protocol, t, hn),
        received_signal_variance(protocol, t, p, hn),
        tail_tol,
    )
}

// ---------------------------------------------------------------------------
// Quadrature-level Monte Carlo
// ---------------------------------------------------------------------------

/// Paired quadrature samples from the simulated channel relations.
#[derive(Debug, Clone)]
pub struct QuadratureSamples {
    /// The sender's key variable per trial.
    pub alice: Vec<f64>,
    /// The receiver's post-processed variable per trial.
    pub bob: Vec<f64>,
    /// Eavesdropper tap of the (first) pass.
    pub eve_first: Vec<f64>,
    /// Eavesdropper tap of the return pass (two-way only).
    pub eve_second: Option<Vec<f64>>,
}

fn sample_poisson<R: Rng + ?Sized>(lambda0: f64, rng: &mut R) -> u64 {
    if lambda0 <= 0.0 {
        return 0;
    }
    Poisson::new(lambda0).unwrap().sample(rng) as u64
}

fn sample_hybrid<R: Rng + ?Sized>(hn: &HybridNoiseParams, rng: &mut R) -> f64 {
    let k = sample_poisson(hn.poisson_mean, rng) as f64;
    let g = Normal::new(hn.gaussian_mean, hn.gaussian_variance.sqrt())
        .unwrap()
        .sample(rng);
    k + g
}

/// Simulate `n_trials` channel uses at the quadrature level.
///
/// One-way: b = √T (a + a0) + √(1-T) e_in + n, with the eavesdropper tap
/// e_o = -√(1-T) (a + a0) + √T e_in. Two-way runs the forward and return
/// passes with independent noise instances and returns the receiver variable
/// after subtracting the known input modulation.
pub fn simulate_quadratures<R: Rng + ?Sized>(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
    n_trials: usize,
    rng: &mut R,
) -> Result<QuadratureSamples> {
    check_transmissivity(t)?;
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be >= 1"));
    }
    let signal = Normal::new(0.0, p.modulation_variance.sqrt()).unwrap();
    let vacuum = Normal::new(0.0, p.vacuum_variance.sqrt()).unwrap();
    let eve = Normal::new(0.0, p.eve_variance.sqrt()).unwrap();
    let rt = t.sqrt();
    let rr = (1.0 - t).sqrt();

    let mut alice = Vec::with_capacity(n_trials);
    let mut bob = Vec::with_capacity(n_trials);
    let mut eve_first = Vec::with_capacity(n_trials);
    let mut eve_second = match protocol {
        Protocol::OneWay => None,
        Protocol::TwoWay => Some(Vec::with_capacity(n_trials)),
    };

    for _ in 0..n_trials {
        match protocol {
            Protocol::OneWay => {
                let a = signal.sample(rng);
                let a0 = vacuum.sample(rng);
                let e_in = eve.sample(rng);
                let n = sample_hybrid(hn, rng);
                alice.push(a);
                bob.push(rt * (a + a0) + rr * e_in + n);
                eve_first.push(-rr * (a + a0) + rt * e_in);
            }
            Protocol::TwoWay => {
                // Forward pass: the far party modulates b1 on vacuum b0.
                let b1 = signal.sample(rng);
                let b0 = vacuum.sample(rng);
                let e1 = eve.sample(rng);
                let n1 = sample_hybrid(hn, rng);
                let a_recv = rt * (b1 + b0) + rr * e1 + n1;
                // Return pass: displacement by the key variable a on vacuum a0.
                let a = signal.sample(rng);
                let a0 = vacuum.sample(rng);
                let e2 = eve.sample(rng);
                let n2 = sample_hybrid(hn, rng);
                let a2 = a_recv + a + a0;
                let b2 = rt * a2 + rr * e2 + n2;
                alice.push(a);
                bob.push(b2 - t * b1);
                eve_first.push(-rr * (b1 + b0) + rt * e1);
                eve_second.as_mut().unwrap().push(-rr * a2 + rt * e2);
            }
        }
    }

    Ok(QuadratureSamples {
        alice,
        bob,
        eve_first,
        eve_second,
    })
}


#[cfg(test)]
mod tests {
    use super::stats::*;
    use super::*;
    use crate::numeric::integrate;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn default_noise() -> HybridNoiseParams {
        HybridNoiseParams::new(1.0, 0.0, 0.001).unwrap()
    }

    fn default_protocol() -> ProtocolParams {
        ProtocolParams::new(1000.0, 1.0, 1.0, 1.0).unwrap()
    }

    // -- poisson_weights -----------------------------------------------------

    #[test]
    fn degenerate_poisson_is_single_weight() {
        assert_eq!(poisson_weights(0.0, 1e-12).unwrap(), vec![1.0]);
    }

    #[test]
    fn truncation_matches_cumulative_oracle() {
        // Independent route: per-term weights via lgamma, scanned for the
        // smallest K with tail below tolerance.
        let lambda0: f64 = 1.0;
        let tol = 1e-12;
        let mut cum = 0.0;
        let mut expected_k = None;
        for k in 0..100 {
            let lw = -lambda0 + k as f64 * lambda0.ln() - libm::lgamma(k as f64 + 1.0);
            cum += lw.exp();
            if 1.0 - cum < tol {
                expected_k = Some(k);
                break;
            }
        }
        let w = poisson_weights(lambda0, tol).unwrap();
        assert_eq!(w.len() - 1, expected_k.unwrap());
        // "near 15" sanity on the magnitude of the truncation order
        assert!((12..=18).contains(&(w.len() - 1)), "K = {}", w.len() - 1);
    }

    #[test]
    fn weights_sum_within_tail_tolerance() {
        for lambda0 in [0.3, 1.0, 2.0, 17.5] {
            let w = poisson_weights(lambda0, 1e-12).unwrap();
            let s: f64 = w.iter().sum();
            assert!(s <= 1.0 + 1e-15 && s >= 1.0 - 1e-12, "sum {s}");
        }
    }

    #[test]
    fn oversized_poisson_mean_is_rejected() {
        assert!(matches!(
            poisson_weights(6000.0, 1e-12),
            Err(crate::error::Error::Config(_))
        ));
    }

    // -- hybrid_noise_pdf ----------------------------------------------------

    #[test]
    fn pure_gaussian_peak() {
        let hn = HybridNoiseParams::new(0.0, 0.3, 0.5).unwrap();
        let v = hybrid_noise_pdf(0.3, &hn, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0 / (2.0 * PI * 0.5).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn hybrid_pdf_value_at_origin() {
        let hn = default_noise();
        let v = hybrid_noise_pdf(0.0, &hn, 1e-12).unwrap();
        // k = 0 component dominates: e^{-1} / sqrt(2π·0.001); k >= 1 terms
        // are suppressed by e^{-500}.
        let expect = (-1.0f64).exp() / (2.0 * PI * 0.001).sqrt();
        assert_relative_eq!(v, expect, epsilon = 1e-10);
        assert!((v - 4.641).abs() < 1e-3);
    }

    #[test]
    fn mixture_normalises_over_domain() {
        let hn = HybridNoiseParams::new(1.0, 0.0, 0.001).unwrap();
        let pdf = MixturePdf::new(
            hn.poisson_mean,
            hn.gaussian_mean,
            hn.gaussian_variance,
            1e-12,
        )
        .unwrap();
        let k_max = pdf.weights().len() as f64;
        // Narrow components on a unit lattice: integrate each lattice cell.
        let mut breaks: Vec<f64> = vec![-10.0];
        let mut x = -0.5;
        while x < k_max + 10.0 {
            breaks.push(x);
            x += 0.5;
        }
        breaks.push(k_max + 10.0);
        let total = crate::numeric::integrate_segmented(|x| pdf.pdf(x), &breaks, 1e-9, 1e-9)
            .unwrap()
            .value;
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    // -- effective / received variances --------------------------------------

    #[test]
    fn zero_transmissivity_leaves_eve_plus_gaussian() {
        let p = default_protocol();
        let hn = default_noise();
        for proto in [Protocol::OneWay, Protocol::TwoWay] {
            let v = effective_noise_variance(proto, 0.0, &p, &hn);
            assert_relative_eq!(v, p.eve_variance + hn.gaussian_variance, epsilon = 1e-15);
        }
    }

    #[test]
    fn unit_transmissivity_substitutions() {
        let p = default_protocol();
        let hn = default_noise();
        let one = effective_noise_variance(Protocol::OneWay, 1.0, &p, &hn);
        assert_relative_eq!(
            one,
            p.vacuum_variance + hn.gaussian_variance,
            epsilon = 1e-15
        );
        let two = effective_noise_variance(Protocol::TwoWay, 1.0, &p, &hn);
        assert_relative_eq!(
            two,
            2.0 * p.vacuum_variance + 2.0 * hn.gaussian_variance,
            epsilon = 1e-15
        );
    }

    #[test]
    fn effective_variance_halfway_value() {
        let p = default_protocol();
        let hn = default_noise();
        // T V_0 + (1-T) ν + σ_g² = 0.5 + 0.5 + 0.001
        assert_relative_eq!(
            effective_noise_variance(Protocol::OneWay, 0.5, &p, &hn),
            1.001,
            epsilon = 1e-15
        );
    }

    #[test]
    fn received_variance_halfway_value() {
        let p = default_protocol();
        let hn = default_noise();
        assert_relative_eq!(
            received_signal_variance(Protocol::OneWay, 0.5, &p, &hn),
            0.5 * 1001.0 + 0.5 + 0.001,
            epsilon = 1e-12
        );
    }

    #[test]
    fn received_equals_effective_at_zero_transmissivity() {
        let p = default_protocol();
        let hn = default_noise();
        for proto in [Protocol::OneWay, Protocol::TwoWay] {
            let a = effective_noise_params(proto, 0.0, &p, &hn, 1e-12).unwrap();
            let b = received_signal_params(proto, 0.0, &p, &hn, 1e-12).unwrap();
            assert_eq!(a.weights(), b.weights());
            assert_relative_eq!(a.shared_variance(), b.shared_variance(), epsilon = 1e-15);
        }
    }

    #[test]
    fn received_minus_effective_is_t_vs() {
        let p = default_protocol();
        let hn = default_noise();
        for proto in [Protocol::OneWay, Protocol::TwoWay] {
            for t in [0.0, 0.1, 0.35, 0.5, 0.77, 1.0] {
                let d = received_signal_variance(proto, t, &p, &hn)
                    - effective_noise_variance(proto, t, &p, &hn);
                assert_relative_eq!(d, t * p.modulation_variance, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn transmissivity_out_of_range_rejected() {
        let p = default_protocol();
        let hn = default_noise();
        assert!(effective_noise_params(Protocol::OneWay, -0.1, &p, &hn, 1e-12).is_err());
        assert!(received_signal_params(Protocol::OneWay, 1.2, &p, &hn, 1e-12).is_err());
    }

    // -- simulate_quadratures -------------------------------------------------

    #[test]
    fn eve_output_variance_at_full_transmissivity() {
        let p = ProtocolParams::new(10.0, 1.0, 1.5, 1.0).unwrap();
        let hn = default_noise();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let s = simulate_quadratures(Protocol::OneWay, 1.0, &p, &hn, 200_000, &mut rng).unwrap();
        let v = variance(&s.eve_first);
        let se = se_variance(&s.eve_first);
        assert!((v - p.eve_variance).abs() < 3.0 * se, "v={v} se={se}");
    }

    #[test]
    fn signal_receiver_covariance() {
        let p = ProtocolParams::new(10.0, 1.0, 1.0, 1.0).unwrap();
        let hn = default_noise();
        for proto in [Protocol::OneWay, Protocol::TwoWay] {
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            let s = simulate_quadratures(proto, 0.6, &p, &hn, 400_000, &mut rng).unwrap();
            let c = covariance(&s.alice, &s.bob);
            let se = se_covariance(&s.alice, &s.bob);
            let expect = 0.6f64.sqrt() * p.modulation_variance;
            assert!(
                (c - expect).abs() < 3.0 * se,
                "{proto}: c={c} expect={expect} se={se}"
            );
        }
    }

    #[test]
    fn one_way_receiver_variance_matches_mixture_bookkeeping() {
        let p = ProtocolParams::new(10.0, 1.0, 1.0, 1.0).unwrap();
        let hn = default_noise();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let t = 0.5;
        let s = simulate_quadratures(Protocol::OneWay, t, &p, &hn, 400_000, &mut rng).unwrap();
        let v = variance(&s.bob);
        let se = se_variance(&s.bob);
        let expect = received_signal_variance(Protocol::OneWay, t, &p, &hn) + hn.poisson_mean;
        assert!(
            (v - expect).abs() < 3.0 * se,
            "v={v} expect={expect} se={se}"
        );
    }

    #[test]
    fn two_way_regression_slope_is_sqrt_t() {
        let p = ProtocolParams::new(10.0, 1.0, 1.0, 1.0).unwrap();
        let hn = default_noise();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let t = 0.49;
        let s = simulate_quadratures(Protocol::TwoWay, t, &p, &hn, 400_000, &mut rng).unwrap();
        let slope = covariance(&s.alice, &s.bob) / variance(&s.alice);
        let se = se_covariance(&s.alice, &s.bob) / variance(&s.alice);
        assert!((slope - t.sqrt()).abs() < 3.0 * se, "slope={slope} se={se}");
    }

    #[test]
    fn mixture_total_variance_identity_against_sampling() {
        let pdf = MixturePdf::new(1.0, 0.0, 0.4, 1e-12).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let xs: Vec<f64> = (0..1_000_000).map(|_| pdf.sample(&mut rng)).collect();
        let v = variance(&xs);
        let se = se_variance(&xs);
        let analytic = pdf.total_variance();
        assert!((analytic - (pdf.shared_variance() + 1.0)).abs() < 1e-9);
        assert!(
            (v - analytic).abs() < 3.0 * se,
            "v={v} analytic={analytic} se={se}"
        );
    }

    #[test]
    fn mixture_pdf_is_nonnegative_everywhere() {
        let pdf = MixturePdf::new(2.0, -0.3, 0.05, 1e-12).unwrap();
        let (lo, hi) = pdf.evaluation_domain();
        let mut x = lo;
        while x <= hi {
            assert!(pdf.pdf(x) >= 0.0);
            x += 0.01;
        }
    }

    #[test]
    fn integrate_smoke_normal_component() {
        // one Gaussian component integrates to its weight
        let pdf = MixturePdf::new(0.0, 0.0, 1.0, 1e-12).unwrap();
        let total = integrate(|x| pdf.pdf(x), -12.0, 12.0, 1e-10, 1e-10)
            .unwrap()
            .value;
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
    }
}
