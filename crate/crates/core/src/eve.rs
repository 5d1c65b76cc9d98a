//! The eavesdropper's Gaussian state under a collective attack with an
//! entangled two-mode ancilla: covariance construction for both protocols,
//! homodyne conditioning on the receiver's quadrature, and the resulting
//! Holevo information.

use crate::error::{Error, Result};
use crate::noise::{HybridNoiseParams, Protocol, ProtocolParams};
use crate::symplectic::{symplectic_eigenvalues, CovarianceMatrix};
use nalgebra::DMatrix;

/// Covariance matrix of the two-mode entangled ancilla with per-mode
/// variance ν: diagonal blocks ν·I₂, off-diagonal √(ν²−1)·Z.
pub fn epr_covariance(nu: f64) -> Result<CovarianceMatrix> {
    if !(nu >= 1.0) {
        return Err(Error::domain(format!("EPR variance {nu} must be >= 1")));
    }
    let c = (nu * nu - 1.0).sqrt();
    let mut m = DMatrix::zeros(4, 4);
    set_block(&mut m, 0, 0, BlockKind::Identity, nu);
    set_block(&mut m, 1, 1, BlockKind::Identity, nu);
    set_block(&mut m, 0, 1, BlockKind::Z, c);
    set_block(&mut m, 1, 0, BlockKind::Z, c);
    CovarianceMatrix::new(m)
}

#[derive(Clone, Copy)]
enum BlockKind {
    Identity,
    Z,
}

/// Write a scaled 2×2 block (I₂ or Z = diag(1, −1)) at mode position (i, j).
fn set_block(m: &mut DMatrix<f64>, i: usize, j: usize, kind: BlockKind, scale: f64) {
    let (r, c) = (2 * i, 2 * j);
    m[(r, c)] = scale;
    m[(r + 1, c + 1)] = match kind {
        BlockKind::Identity => scale,
        BlockKind::Z => -scale,
    };
    m[(r, c + 1)] = 0.0;
    m[(r + 1, c)] = 0.0;
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmissivity {t} outside [0, 1]")));
    }
    Ok(())
}

/// Covariance of all modes held in the eavesdropper's quantum memory.
///
/// One-way (4×4, modes e_out, e_kept): [[Λ I₂, c Z], [c Z, ν I₂]] with
/// Λ = Tν + (1−T)V_a and c = √(T(ν²−1)). Two-way (8×8): the pass-1 and
/// pass-2 tap/keep pairs with their cross-correlations; the second tap
/// carries the (1−T)(λ0+σ_g²) hybrid-noise contribution.
pub fn eve_covariance(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> Result<CovarianceMatrix> {
    check_t(t)?;
    let nu = p.eve_variance;
    let va = p.composite_variance();
    let c = (t * (nu * nu - 1.0)).max(0.0).sqrt();
    match protocol {
        Protocol::OneWay => {
            let lambda = t * nu + (1.0 - t) * va;
            let mut m = DMatrix::zeros(4, 4);
            set_block(&mut m, 0, 0, BlockKind::Identity, lambda);
            set_block(&mut m, 1, 1, BlockKind::Identity, nu);
            set_block(&mut m, 0, 1, BlockKind::Z, c);
            set_block(&mut m, 1, 0, BlockKind::Z, c);
            CovarianceMatrix::new(m)
        }
        Protocol::TwoWay => {
            let hybrid = hn.poisson_mean + hn.gaussian_variance;
            let s11 = (1.0 - t) * va + t * nu;
            let s21 = t.sqrt() * (1.0 - t) * (va - nu);
            let cbar = -(1.0 - t) * (nu * nu - 1.0).max(0.0).sqrt();
            let s22 = (1.0 - t * t) * va + (1.0 - t + t * t) * nu + (1.0 - t) * hybrid;
            let mut m = DMatrix::zeros(8, 8);
            // mode order: tap1, keep1, tap2, keep2
            set_block(&mut m, 0, 0, BlockKind::Identity, s11);
            set_block(&mut m, 1, 1, BlockKind::Identity, nu);
            set_block(&mut m, 2, 2, BlockKind::Identity, s22);
            set_block(&mut m, 3, 3, BlockKind::Identity, nu);
            set_block(&mut m, 0, 1, BlockKind::Z, c);
            set_block(&mut m, 1, 0, BlockKind::Z, c);
            set_block(&mut m, 0, 2, BlockKind::Identity, s21);
            set_block(&mut m, 2, 0, BlockKind::Identity, s21);
            set_block(&mut m, 1, 2, BlockKind::Z, cbar);
            set_block(&mut m, 2, 1, BlockKind::Z, cbar);
            set_block(&mut m, 2, 3, BlockKind::Z, c);
            set_block(&mut m, 3, 2, BlockKind::Z, c);
            CovarianceMatrix::new(m)
        }
    }
}

/// Variance of the receiver's post-processed homodyne variable, including
/// the hybrid-noise contribution λ0 + σ_g² (scaled by (1+T) for two-way).
pub fn bob_variance(protocol: Protocol, t: f64, p: &ProtocolParams, hn: &HybridNoiseParams) -> f64 {
    let va = p.composite_variance();
    let v0 = p.vacuum_variance;
    let nu = p.eve_variance;
    let hybrid = hn.poisson_mean + hn.gaussian_variance;
    match protocol {
        Protocol::OneWay => t * va + (1.0 - t) * nu + hybrid,
        Protocol::TwoWay => t * va + t * t * v0 + (1.0 - t * t) * nu + (1.0 + t) * hybrid,
    }
}

/// Cross-covariance of Eve's modes with the receiver variable, one 2×2 block
/// (scaled I₂ or Z) per Eve mode.
fn cross_blocks(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> Vec<(BlockKind, f64)> {
    let nu = p.eve_variance;
    let va = p.composite_variance();
    let v0 = p.vacuum_variance;
    match protocol {
        Protocol::OneWay => {
            let d1 = (t * (1.0 - t)).max(0.0).sqrt() * (nu - va);
            let d2 = ((1.0 - t) * (nu * nu - 1.0)).max(0.0).sqrt();
            vec![(BlockKind::Identity, d1), (BlockKind::Z, d2)]
        }
        Protocol::TwoWay => {
            let zeta = va + t * (v0 - nu) + hn.poisson_mean + hn.gaussian_variance;
            vec![
                (
                    BlockKind::Identity,
                    t * (1.0 - t).max(0.0).sqrt() * (nu - v0),
                ),
                (
                    BlockKind::Z,
                    (t * (1.0 - t) * (nu * nu - 1.0)).max(0.0).sqrt(),
                ),
                (BlockKind::Z, -(t * (1.0 - t)).max(0.0).sqrt() * zeta),
                (
                    BlockKind::Identity,
                    ((1.0 - t) * (nu * nu - 1.0)).max(0.0).sqrt(),
                ),
            ]
        }
    }
}

/// Assemble the 2n×2 cross-covariance matrix from the per-mode blocks.
fn cross_matrix(blocks: &[(BlockKind, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * blocks.len(), 2);
    for (i, &(kind, s)) in blocks.iter().enumerate() {
        m[(2 * i, 0)] = s;
        m[(2 * i + 1, 1)] = match kind {
            BlockKind::Identity => s,
            BlockKind::Z => -s,
        };
    }
    m
}

/// Eve's covariance conditioned on the receiver's q-quadrature homodyne
/// outcome: Ξ − (1/V_b)·Σ Π Σᵀ with Π = diag(1, 0).
pub fn eve_conditional_covariance(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> Result<CovarianceMatrix> {
    let v_b = bob_variance(protocol, t, p, hn);
    if !(v_b > 0.0) {
        return Err(Error::domain(format!(
            "receiver variance {v_b} must be > 0"
        )));
    }
    let unconditional = eve_covariance(protocol, t, p, hn)?.into_matrix();
    let sigma = cross_matrix(&cross_blocks(protocol, t, p, hn));
    let pi = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let update = &sigma * pi * sigma.transpose() / v_b;
    CovarianceMatrix::new(unconditional - update)
}

/// Holevo information χ = S(E) − S(E|b) in bits.
pub fn holevo(
    protocol: Protocol,
    t: f64,
    p: &ProtocolParams,
    hn: &HybridNoiseParams,
) -> Result<f64> {
    let s_e = symplectic_eigenvalues(&eve_covariance(protocol, t, p, hn)?)?.entropy()?;
    let s_cond =
        symplectic_eigenvalues(&eve_conditional_covariance(protocol, t, p, hn)?)?.entropy()?;
    Ok(s_e - s_cond)
}
