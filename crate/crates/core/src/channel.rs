//! MIMO free-space-optical channel model: Gaussian-beam field and its
//! band-limited angular-spectrum propagation, aperture-overlap channel
//! gains, misalignment and turbulence statistics, and sampled channel
//! realisations with per-sub-channel effective transmissivities.

use crate::error::{Error, Result};
use crate::numeric::{bessel_aligned_breaks, integrate_segmented, UniformSpline, UniformSplineC};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Absolute / relative tolerances for the field quadratures.
const QUAD_ABS_TOL: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Geometry and turbulence parameters
// ---------------------------------------------------------------------------

/// Transceiver-array geometry of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    /// Optical wavelength (m).
    pub wavelength: f64,
    /// Beam waist at each transmit sub-aperture (m).
    pub waist: f64,
    /// Number of transmit sub-apertures.
    pub tx_count: usize,
    /// Number of receive sub-apertures.
    pub rx_count: usize,
    /// Radius of each receiver lens (m).
    pub rx_lens_radius: f64,
    /// Link distance (m).
    pub link_distance: f64,
    /// Angular-spectrum band limit ρ_max (cycles/m).
    pub band_limit: f64,
    /// Planar coordinates of the transmit sub-aperture centres (m).
    pub tx_positions: Vec<[f64; 2]>,
    /// Planar coordinates of the receive sub-aperture centres (m).
    pub rx_positions: Vec<[f64; 2]>,
}

/// Centred square-grid positions for `count` elements at the given pitch,
/// row-major on the smallest enclosing square.
pub fn square_grid(count: usize, pitch: f64) -> Vec<[f64; 2]> {
    let side = (count as f64).sqrt().ceil() as usize;
    let offset = (side as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(count);
    'outer: for row in 0..side {
        for col in 0..side {
            out.push([(col as f64 - offset) * pitch, (row as f64 - offset) * pitch]);
            if out.len() == count {
                break 'outer;
            }
        }
    }
    out
}

impl BeamGeometry {
    /// Build a coaxial pair of concentric square-grid arrays. The band limit
    /// defaults to sin(λ/(πw))/λ and may be overridden; it must stay below
    /// the propagating-wave bound 2π·ρ_max < k.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wavelength: f64,
        waist: f64,
        tx_count: usize,
        rx_count: usize,
        rx_lens_radius: f64,
        link_distance: f64,
        tx_pitch: f64,
        rx_pitch: f64,
        band_limit_override: Option<f64>,
    ) -> Result<Self> {
        if !(wavelength > 0.0) || !(waist > 0.0) || !(rx_lens_radius > 0.0) {
            return Err(Error::config(
                "wavelength, waist and lens radius must be > 0",
            ));
        }
        if !(link_distance >= 0.0) {
            return Err(Error::config("link distance must be >= 0"));
        }
        if tx_count == 0 || rx_count == 0 {
            return Err(Error::config("array sizes must be >= 1"));
        }
        if !(tx_pitch >= 0.0 && rx_pitch >= 0.0) {
            return Err(Error::config("array pitches must be >= 0"));
        }
        let band_limit =
            band_limit_override.unwrap_or_else(|| Self::default_band_limit(wavelength, waist));
        if !(band_limit > 0.0) {
            return Err(Error::config("band limit must be > 0"));
        }
        let k = 2.0 * PI / wavelength;
        if 2.0 * PI * band_limit >= k {
            return Err(Error::config(format!(
                "band limit {band_limit} reaches the evanescent region (2π·ρ_max >= k)"
            )));
        }
        Ok(Self {
            wavelength,
            waist,
            tx_count,
            rx_count,
            rx_lens_radius,
            link_distance,
            band_limit,
            tx_positions: square_grid(tx_count, tx_pitch),
            rx_positions: square_grid(rx_count, rx_pitch),
        })
    }

    /// Band limit as a function of wavelength and waist: sin(λ/(πw))/λ.
    pub fn default_band_limit(wavelength: f64, waist: f64) -> f64 {
        (wavelength / (PI * waist)).sin() / wavelength
    }

    /// Optical wavenumber k = 2π/λ (rad/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Transmitter aperture radius R0 = √N_T · w (m).
    pub fn tx_aperture_radius(&self) -> f64 {
        (self.tx_count as f64).sqrt() * self.waist
    }
}

/// Atmospheric and receiver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    /// Refractive-index structure constant C_n² (m^{-2/3}).
    pub cn2: f64,
    /// Pointing jitter (rad).
    pub pointing_jitter: f64,
    /// Atmospheric attenuation coefficient (dB/m).
    pub attenuation_db_per_m: f64,
    /// Detector efficiency in [0, 1].
    pub detector_efficiency: f64,
}

impl TurbulenceParams {
    pub fn new(
        cn2: f64,
        pointing_jitter: f64,
        attenuation_db_per_m: f64,
        detector_efficiency: f64,
    ) -> Result<Self> {
        if !(cn2 >= 0.0) {
            return Err(Error::config("Cn2 must be >= 0"));
        }
        if !(pointing_jitter >= 0.0) {
            return Err(Error::config("pointing_jitter must be >= 0"));
        }
        if !(attenuation_db_per_m >= 0.0) {
            return Err(Error::config("attenuation coefficient must be >= 0"));
        }
        if !(0.0..=1.0).contains(&detector_efficiency) {
            return Err(Error::config("detector_efficiency must be in [0, 1]"));
        }
        Ok(Self {
            cn2,
            pointing_jitter,
            attenuation_db_per_m,
            detector_efficiency,
        })
    }
}

// ---------------------------------------------------------------------------
// Scalar channel statistics
// ---------------------------------------------------------------------------

/// Gaussian field amplitude at radial distance `r` for waist `w`:
/// √(2/(πw²))·exp(−r²/w²). Unit total power.
pub fn gaussian_beam_field(r: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::domain("waist must be > 0"));
    }
    if !(r >= 0.0) {
        return Err(Error::domain("radius must be >= 0"));
    }
    Ok((2.0 / (PI * w * w)).sqrt() * (-r * r / (w * w)).exp())
}

/// Standard deviation of the beam-centroid displacement: pointing jitter and
/// beam wander combined in quadrature.
pub fn misalignment_sigma(turb: &TurbulenceParams, geom: &BeamGeometry) -> f64 {
    let z = geom.link_distance;
    let sigma_p2 = (turb.pointing_jitter * z) * (turb.pointing_jitter * z);
    let sigma_tb2 = if turb.cn2 > 0.0 && z > 0.0 {
        let k = geom.wavenumber();
        let r_c = (0.423 * k * k * turb.cn2 * z).powf(-3.0 / 5.0);
        0.1337
            * geom.wavelength
            * geom.wavelength
            * z
            * z
            * geom.waist.powf(-1.0 / 3.0)
            * r_c.powf(-5.0 / 3.0)
    } else {
        0.0
    };
    (sigma_p2 + sigma_tb2).sqrt()
}

/// Draw a radial misalignment magnitude from the Rayleigh density
/// v/σ²·exp(−v²/(2σ²)).
pub fn sample_misalignment<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Draw a planar misalignment offset: Rayleigh magnitude, uniform direction.
pub fn sample_misalignment_vec<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> [f64; 2] {
    let v = sample_misalignment(sigma, rng);
    let theta: f64 = rng.random::<f64>() * 2.0 * PI;
    [v * theta.cos(), v * theta.sin()]
}

/// Log-irradiance variance of the aperture-averaged scintillation.
pub fn scintillation_variance(turb: &TurbulenceParams, geom: &BeamGeometry) -> Result<f64> {
    let z = geom.link_distance;
    if !(z > 0.0) {
        return Err(Error::domain("scintillation needs link_distance > 0"));
    }
    let k = geom.wavenumber();
    let chi2 = 1.23 * turb.cn2 * k.powf(7.0 / 6.0) * z.powf(11.0 / 6.0);
    let d = geom.rx_lens_radius * (k / z).sqrt();
    let d2 = d * d;
    let chi_12_5 = chi2.powf(6.0 / 5.0);
    let term1 = 0.49 * chi2 / (1.0 + 0.18 * d2 + 0.56 * chi_12_5).powf(7.0 / 6.0);
    let term2 = 0.51 * chi2 / (1.0 + 0.9 * d2 + 0.62 * d2 * chi_12_5).powf(5.0 / 6.0);
    // exp(x) - 1 evaluated without cancellation; the exponent is ~1e-5 in
    // the weak-turbulence regime
    Ok((term1 + term2).exp_m1())
}

/// Draw a unit-mean lognormal turbulence fade with log-variance σ².
pub fn sample_turbulence_fade<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> f64 {
    if sigma2 <= 0.0 {
        return 1.0;
    }
    let x = Normal::new(-sigma2 / 2.0, sigma2.sqrt())
        .unwrap()
        .sample(rng);
    x.exp()
}

/// Power transmission through atmospheric absorption: 10^(−δ·z/10).
pub fn atmospheric_attenuation(delta_db_per_m: f64, z: f64) -> f64 {
    10.0f64.powf(-delta_db_per_m * z / 10.0)
}

// ---------------------------------------------------------------------------
// Field propagation
// ---------------------------------------------------------------------------

/// Spatial-frequency spectrum of the transmit field over the aperture:
/// 2π ∫₀^{R0} r E(r) J0(2πrρ) dr, by adaptive quadrature with panels at the
/// Bessel oscillation nodes.
pub fn spatial_spectrum(rho: f64, geom: &BeamGeometry) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::domain("spatial frequency must be >= 0"));
    }
    let r0 = geom.tx_aperture_radius();
    let w = geom.waist;
    let amp = (2.0 / (PI * w * w)).sqrt();
    let breaks = bessel_aligned_breaks(0.0, r0, 2.0 * PI * rho, w / 2.0);
    let res = integrate_segmented(
        |r| r * amp * (-r * r / (w * w)).exp() * libm::j0(2.0 * PI * r * rho),
        &breaks,
        QUAD_ABS_TOL,
        QUAD_REL_TOL,
    )?;
    Ok(2.0 * PI * res.value)
}

/// Transmit-aperture power 2π ∫₀^{R0} r |E(r)|² dr (the squared Eq.-(1)
/// denominator), by quadrature.
pub fn aperture_power(geom: &BeamGeometry) -> Result<f64> {
    let w = geom.waist;
    let amp2 = 2.0 / (PI * w * w);
    let res = integrate_segmented(
        |r: f64| r * amp2 * (-2.0 * r * r / (w * w)).exp(),
        &[0.0, geom.tx_aperture_radius()],
        1e-14,
        1e-12,
    )?;
    Ok(2.0 * PI * res.value)
}

/// Precomputed spectrum table for one geometry, with band-limited
/// angular-spectrum propagation to the receiver plane.
#[derive(Debug, Clone)]
pub struct BeamField {
    wavenumber: f64,
    band_limit: f64,
    link_distance: f64,
    spectrum: UniformSpline,
    spectrum_knots: Vec<f64>,
}

impl BeamField {
    /// Tabulate the aperture spectrum on [0, ρ_max]. The spectrum is smooth
    /// on the waist scale, so a modest grid interpolates it to ~1e-9.
    pub fn new(geom: &BeamGeometry) -> Result<Self> {
        const N: usize = 512;
        let d_rho = geom.band_limit / N as f64;
        let mut values = Vec::with_capacity(N + 1);
        for i in 0..=N {
            values.push(spatial_spectrum(i as f64 * d_rho, geom)?);
        }
        let spectrum = UniformSpline::new(0.0, d_rho, values);
        let spectrum_knots = spectrum.knots();
        Ok(Self {
            wavenumber: geom.wavenumber(),
            band_limit: geom.band_limit,
            link_distance: geom.link_distance,
            spectrum,
            spectrum_knots,
        })
    }

    /// Interpolated spectrum value.
    pub fn spectrum(&self, rho: f64) -> f64 {
        self.spectrum.eval(rho)
    }

    /// Field at radial distance `r` in the plane at the link distance:
    /// 2π ∫₀^{ρmax} ρ F(ρ) J0(2πrρ) e^{j√(k²−(2πρ)²) z} dρ.
    ///
    /// Quadrature panels align with the spline knots (the integrand is
    /// analytic inside each knot interval) and with the Bessel/chirp
    /// oscillation nodes.
    pub fn propagated(&self, r: f64) -> Result<Complex64> {
        let z = self.link_distance;
        let k = self.wavenumber;
        // Cap panel width so the propagation chirp advances at most ~π per
        // panel; steepest slope |dφ/dρ| occurs at the band edge.
        let max_width = if z > 0.0 {
            let dphi_max = 4.0 * PI * PI * self.band_limit * z
                / (k * k - (2.0 * PI * self.band_limit).powi(2)).sqrt();
            if dphi_max > 0.0 {
                (PI / dphi_max).max(self.band_limit / 4000.0)
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        let osc_breaks = bessel_aligned_breaks(0.0, self.band_limit, 2.0 * PI * r, max_width);
        let breaks = crate::numeric::merge_breaks(&self.spectrum_knots, &osc_breaks);
        // The overall propagation phase k·z is huge; keep only the stable
        // chirp difference √(k²−u²)−k = −u²/(√(k²−u²)+k) inside the
        // integrand and restore the constant phase afterwards.
        let res = integrate_segmented(
            |rho| {
                let u2 = (2.0 * PI * rho) * (2.0 * PI * rho);
                let delta = -u2 * z / ((k * k - u2).sqrt() + k);
                let osc = Complex64::new(0.0, delta).exp();
                osc * (rho * self.spectrum.eval(rho) * libm::j0(2.0 * PI * r * rho))
            },
            &breaks,
            QUAD_ABS_TOL,
            QUAD_REL_TOL,
        )?;
        Ok(res.value * 2.0 * PI * Complex64::from_polar(1.0, k * z))
    }
}

/// Field at radial distance `r` after propagating over the geometry's link
/// distance. Convenience wrapper that tabulates the spectrum on each call;
/// use [`BeamField`] directly for repeated evaluations.
pub fn propagated_field(r: f64, geom: &BeamGeometry) -> Result<Complex64> {
    BeamField::new(geom)?.propagated(r)
}

// ---------------------------------------------------------------------------
// Aperture-overlap channel gain
// ---------------------------------------------------------------------------

/// Integral of a radially symmetric tabulated field over a disc of radius
/// `a` whose centre lies at distance `dist` from the field axis. The angular
/// integration is carried out exactly (circle-overlap arc length), leaving a
/// radial quadrature of the tabulated field.
fn disc_breaks(field_knots: &[f64], d: f64, a: f64) -> (f64, f64, Vec<f64>) {
    let lo = (d - a).max(0.0);
    let hi = d + a;
    // Panels at the field-table knots (piecewise-analytic integrand) plus
    // the kink of the arc-angle function where the circle of radius s around
    // the axis first leaves the disc.
    let kink = (a - d).abs();
    let first = field_knots.partition_point(|&x| x <= lo);
    let last = field_knots.partition_point(|&x| x < hi);
    let mut breaks = Vec::with_capacity(last - first + 3);
    breaks.push(lo);
    breaks.extend_from_slice(&field_knots[first..last]);
    if kink > lo && kink < hi {
        breaks.push(kink);
    }
    breaks.push(hi);
    breaks.sort_by(|p, q| p.total_cmp(q));
    (lo, hi, breaks)
}

#[inline]
fn arc_angle(s: f64, d: f64, a: f64) -> f64 {
    if d < 1e-15 || s + d <= a {
        2.0 * PI
    } else {
        let c = ((s * s + d * d - a * a) / (2.0 * s * d)).clamp(-1.0, 1.0);
        2.0 * c.acos()
    }
}

fn disc_overlap_integral(
    field: &UniformSplineC,
    field_knots: &[f64],
    dist: f64,
    a: f64,
) -> Result<Complex64> {
    let d = dist.abs();
    let (_, _, breaks) = disc_breaks(field_knots, d, a);
    let x_max = field.x_max();
    let res = integrate_segmented(
        |s: f64| {
            if s <= 0.0 || s > x_max {
                return Complex64::new(0.0, 0.0);
            }
            field.eval(s) * (s * arc_angle(s, d, a))
        },
        &breaks,
        QUAD_ABS_TOL,
        QUAD_REL_TOL,
    )?;
    Ok(res.value)
}

/// Disc integral of the field's squared magnitude (captured power).
fn disc_power_integral(
    field: &UniformSplineC,
    field_knots: &[f64],
    dist: f64,
    a: f64,
) -> Result<f64> {
    let d = dist.abs();
    let (_, _, breaks) = disc_breaks(field_knots, d, a);
    let x_max = field.x_max();
    let res = integrate_segmented(
        |s: f64| {
            if s <= 0.0 || s > x_max {
                return 0.0;
            }
            field.eval(s).norm_sqr() * s * arc_angle(s, d, a)
        },
        &breaks,
        QUAD_ABS_TOL,
        QUAD_REL_TOL,
    )?;
    Ok(res.value)
}

// ---------------------------------------------------------------------------
// Channel sampler and realisations
// ---------------------------------------------------------------------------

/// One sampled MIMO channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Complex gain matrix (rx × tx).
    pub gain_matrix: DMatrix<Complex64>,
    /// Squared singular values of the gain matrix, sorted descending.
    pub singular_transmittances: Vec<f64>,
    /// Numerical rank of the gain matrix.
    pub rank: usize,
    /// Turbulence fades, one per sub-channel (1..=rank).
    pub fades: Vec<f64>,
    /// Atmospheric absorption factor.
    pub atmospheric_attenuation: f64,
    /// Effective transmissivity per sub-channel, clamped to [0, 1].
    pub effective_t: Vec<f64>,
    /// Sampled planar beam-centroid offset (m).
    pub misalignment: [f64; 2],
    /// Number of sub-channels whose transmissivity hit the clamp.
    pub clamp_events: usize,
}

/// How the gain matrix of a realisation is produced.
#[derive(Debug, Clone)]
enum SamplerKind {
    /// Full field-propagation model.
    Physical {
        field_table: UniformSplineC,
        field_knots: Vec<f64>,
        denominator: f64,
        /// Captured power fraction vs. axis distance of the receiver disc.
        capture_profile: UniformSpline,
        /// Coherent aperture-overlap integral vs. axis distance.
        coherent_profile: UniformSplineC,
    },
    /// Fixed singular transmittances (diagnostics and matched-sub-channel
    /// studies); fades, absorption and efficiency still apply.
    Synthetic { betas: Vec<f64> },
}

/// Samples channel realisations for a fixed geometry and atmosphere.
/// Construction tabulates the propagated field once; sampling then only
/// draws misalignment and fades and evaluates overlap integrals.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    geom: BeamGeometry,
    turb: TurbulenceParams,
    kind: SamplerKind,
    sigma_misalign: f64,
    scint_var: f64,
    attenuation: f64,
}

impl ChannelSampler {
    /// Physical sampler: tabulates the propagated field on a radial grid
    /// covering every receiver disc plus the misalignment range.
    pub fn new(geom: BeamGeometry, turb: TurbulenceParams) -> Result<Self> {
        let sigma_misalign = misalignment_sigma(&turb, &geom);
        let scint_var = if turb.cn2 > 0.0 && geom.link_distance > 0.0 {
            scintillation_variance(&turb, &geom)?
        } else {
            0.0
        };
        let attenuation = atmospheric_attenuation(turb.attenuation_db_per_m, geom.link_distance);

        let beam = BeamField::new(&geom)?;
        let denominator = aperture_power(&geom)?.sqrt();

        // Radial extent: worst-case aperture separation, the lens radius,
        // the misalignment tail, and a spreading margin.
        let mut max_sep = 0.0f64;
        for q in &geom.rx_positions {
            for p in &geom.tx_positions {
                let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                max_sep = max_sep.max(d);
            }
        }
        // covers the farthest disc edge (profile distance + lens radius)
        let r_max =
            max_sep + 2.0 * geom.rx_lens_radius + 8.0 * sigma_misalign + 10.0 * geom.waist + 0.05;
        // Resolve the fastest radial oscillation J0(2π ρmax r).
        let dr = (1.0 / (24.0 * geom.band_limit)).min(geom.waist / 6.0);
        let n = (r_max / dr).ceil() as usize + 1;
        let values = (0..=n)
            .into_par_iter()
            .map(|i| beam.propagated(i as f64 * dr))
            .collect::<Result<Vec<Complex64>>>()?;
        let field_table = UniformSplineC::new(0.0, dr, &values);
        let field_knots = field_table.knots();

        // Realisations only need the overlap integrals as functions of the
        // scalar disc-to-axis distance; tabulate them once.
        let d_max = max_sep + 8.0 * sigma_misalign + geom.rx_lens_radius + 0.02;
        let dd = 1.0 / (12.0 * geom.band_limit);
        let nd = (d_max / dd).ceil() as usize + 1;
        let a = geom.rx_lens_radius;
        let pairs = (0..=nd)
            .into_par_iter()
            .map(|i| {
                let d = i as f64 * dd;
                let power = disc_power_integral(&field_table, &field_knots, d, a)?;
                let coherent = disc_overlap_integral(&field_table, &field_knots, d, a)?;
                Ok(((power / (denominator * denominator)).max(0.0), coherent))
            })
            .collect::<Result<Vec<(f64, Complex64)>>>()?;
        let capture_profile = UniformSpline::new(0.0, dd, pairs.iter().map(|p| p.0).collect());
        let coherent_values: Vec<Complex64> = pairs.iter().map(|p| p.1).collect();
        let coherent_profile = UniformSplineC::new(0.0, dd, &coherent_values);

        Ok(Self {
            geom,
            turb,
            kind: SamplerKind::Physical {
                field_table,
                field_knots,
                denominator,
                capture_profile,
                coherent_profile,
            },
            sigma_misalign,
            scint_var,
            attenuation,
        })
    }

    /// Synthetic sampler with fixed singular transmittances.
    pub fn synthetic(geom: BeamGeometry, turb: TurbulenceParams, betas: Vec<f64>) -> Result<Self> {
        if betas.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::config("synthetic betas must be >= 0"));
        }
        let sigma_misalign = misalignment_sigma(&turb, &geom);
        let scint_var = if turb.cn2 > 0.0 && geom.link_distance > 0.0 {
            scintillation_variance(&turb, &geom)?
        } else {
            0.0
        };
        let attenuation = atmospheric_attenuation(turb.attenuation_db_per_m, geom.link_distance);
        Ok(Self {
            geom,
            turb,
            kind: SamplerKind::Synthetic { betas },
            sigma_misalign,
            scint_var,
            attenuation,
        })
    }

    pub fn geometry(&self) -> &BeamGeometry {
        &self.geom
    }

    pub fn turbulence(&self) -> &TurbulenceParams {
        &self.turb
    }

    pub fn misalignment_sigma(&self) -> f64 {
        self.sigma_misalign
    }

    pub fn scintillation_variance(&self) -> f64 {
        self.scint_var
    }

    /// Upper bound on the number of spatial sub-channels a realisation can
    /// produce (the rank never exceeds it).
    pub fn subchannel_slots(&self) -> usize {
        match &self.kind {
            SamplerKind::Physical { .. } => self.geom.tx_count.min(self.geom.rx_count),
            SamplerKind::Synthetic { betas } => betas.len(),
        }
    }

    /// Sampler for the same geometry under different atmospheric parameters.
    /// Reuses the tabulated field when it still covers the misalignment
    /// range, otherwise rebuilds.
    pub fn with_turbulence(&self, turb: TurbulenceParams) -> Result<ChannelSampler> {
        let sigma_misalign = misalignment_sigma(&turb, &self.geom);
        let scint_var = if turb.cn2 > 0.0 && self.geom.link_distance > 0.0 {
            scintillation_variance(&turb, &self.geom)?
        } else {
            0.0
        };
        let attenuation =
            atmospheric_attenuation(turb.attenuation_db_per_m, self.geom.link_distance);

        match &self.kind {
            SamplerKind::Synthetic { betas } => {
                ChannelSampler::synthetic(self.geom.clone(), turb, betas.clone())
            }
            SamplerKind::Physical { field_table, .. } => {
                let mut max_sep = 0.0f64;
                for q in &self.geom.rx_positions {
                    for p in &self.geom.tx_positions {
                        let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                        max_sep = max_sep.max(d);
                    }
                }
                let needed = max_sep + 2.0 * self.geom.rx_lens_radius + 8.0 * sigma_misalign;
                let profile_needed = max_sep + 8.0 * sigma_misalign;
                let covered = match &self.kind {
                    SamplerKind::Physical {
                        capture_profile, ..
                    } => needed <= field_table.x_max() && profile_needed <= capture_profile.x_max(),
                    SamplerKind::Synthetic { .. } => unreachable!(),
                };
                if !covered {
                    return ChannelSampler::new(self.geom.clone(), turb);
                }
                Ok(ChannelSampler {
                    geom: self.geom.clone(),
                    turb,
                    kind: self.kind.clone(),
                    sigma_misalign,
                    scint_var,
                    attenuation,
                })
            }
        }
    }

    /// Complex channel gain between one transmit and one receive aperture
    /// for a given misalignment offset.
    pub fn channel_gain(&self, tx: usize, rx: usize, offset: [f64; 2]) -> Result<Complex64> {
        match &self.kind {
            SamplerKind::Physical {
                field_table,
                field_knots,
                denominator,
                ..
            } => {
                let p = self
                    .geom
                    .tx_positions
                    .get(tx)
                    .ok_or_else(|| Error::domain(format!("tx index {tx} out of range")))?;
                let q = self
                    .geom
                    .rx_positions
                    .get(rx)
                    .ok_or_else(|| Error::domain(format!("rx index {rx} out of range")))?;
                let dx = q[0] - p[0] - offset[0];
                let dy = q[1] - p[1] - offset[1];
                let dist = (dx * dx + dy * dy).sqrt();
                let num = disc_overlap_integral(
                    field_table,
                    field_knots,
                    dist,
                    self.geom.rx_lens_radius,
                )?;
                Ok(num / *denominator)
            }
            SamplerKind::Synthetic { .. } => Err(Error::domain(
                "synthetic channels have no per-aperture gains",
            )),
        }
    }

    /// Transmittance-scaled channel gain: magnitude² is the fraction of the
    /// transmit power captured by the receiver disc, phase is that of the
    /// coherent aperture overlap. This is what channel realisations use, so
    /// the squared singular values act as power transmittances.
    pub fn capture_gain(&self, tx: usize, rx: usize, offset: [f64; 2]) -> Result<Complex64> {
        match &self.kind {
            SamplerKind::Physical {
                field_table,
                field_knots,
                denominator,
                ..
            } => {
                let p = self
                    .geom
                    .tx_positions
                    .get(tx)
                    .ok_or_else(|| Error::domain(format!("tx index {tx} out of range")))?;
                let q = self
                    .geom
                    .rx_positions
                    .get(rx)
                    .ok_or_else(|| Error::domain(format!("rx index {rx} out of range")))?;
                let dx = q[0] - p[0] - offset[0];
                let dy = q[1] - p[1] - offset[1];
                let dist = (dx * dx + dy * dy).sqrt();
                let power =
                    disc_power_integral(field_table, field_knots, dist, self.geom.rx_lens_radius)?;
                let coherent = disc_overlap_integral(
                    field_table,
                    field_knots,
                    dist,
                    self.geom.rx_lens_radius,
                )?;
                let fraction = (power / (denominator * denominator)).max(0.0);
                let phase = if coherent.norm() > 1e-300 {
                    coherent / coherent.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                Ok(phase * fraction.sqrt())
            }
            SamplerKind::Synthetic { .. } => Err(Error::domain(
                "synthetic channels have no per-aperture gains",
            )),
        }
    }

    /// Draw one channel realisation: misalignment, gain matrix, singular
    /// transmittances, per-sub-channel fades, and effective transmissivities
    /// T = η·T_a·T_t·β clamped to [0, 1].
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        let (gain_matrix, misalignment) = match &self.kind {
            SamplerKind::Physical {
                capture_profile,
                coherent_profile,
                ..
            } => {
                let offset = sample_misalignment_vec(self.sigma_misalign, rng);
                let mut h = DMatrix::<Complex64>::zeros(self.geom.rx_count, self.geom.tx_count);
                for i in 0..self.geom.rx_count {
                    for j in 0..self.geom.tx_count {
                        let p = &self.geom.tx_positions[j];
                        let q = &self.geom.rx_positions[i];
                        let dx = q[0] - p[0] - offset[0];
                        let dy = q[1] - p[1] - offset[1];
                        let dist = (dx * dx + dy * dy).sqrt();
                        h[(i, j)] = if dist > capture_profile.x_max() {
                            Complex64::new(0.0, 0.0)
                        } else {
                            let fraction = capture_profile.eval(dist).max(0.0);
                            let coherent = coherent_profile.eval(dist);
                            let phase = if coherent.norm() > 1e-300 {
                                coherent / coherent.norm()
                            } else {
                                Complex64::new(1.0, 0.0)
                            };
                            phase * fraction.sqrt()
                        };
                    }
                }
                (h, offset)
            }
            SamplerKind::Synthetic { betas } => {
                let n = betas.len();
                let mut h = DMatrix::<Complex64>::zeros(n, n);
                for (m, b) in betas.iter().enumerate() {
                    h[(m, m)] = Complex64::new(b.sqrt(), 0.0);
                }
                (h, [0.0, 0.0])
            }
        };

        let svd = gain_matrix.clone().svd(false, false);
        let mut singular: Vec<f64> = svd.singular_values.iter().copied().collect();
        singular.sort_by(|a, b| b.total_cmp(a));
        let tol = singular.first().copied().unwrap_or(0.0)
            * f64::EPSILON
            * gain_matrix.nrows().max(gain_matrix.ncols()) as f64;
        let rank = singular.iter().filter(|s| **s > tol && **s > 0.0).count();
        let betas: Vec<f64> = singular[..rank].iter().map(|s| s * s).collect();

        let fades: Vec<f64> = (0..rank)
            .map(|_| sample_turbulence_fade(self.scint_var, rng))
            .collect();

        let eta = self.turb.detector_efficiency;
        let mut clamp_events = 0usize;
        let effective_t: Vec<f64> = betas
            .iter()
            .zip(&fades)
            .map(|(b, f)| {
                let t = eta * self.attenuation * f * b;
                if t > 1.0 {
                    clamp_events += 1;
                    1.0
                } else if t < 0.0 {
                    clamp_events += 1;
                    0.0
                } else {
                    t
                }
            })
            .collect();

        Ok(ChannelRealization {
            gain_matrix,
            singular_transmittances: betas,
            rank,
            fades,
            atmospheric_attenuation: self.attenuation,
            effective_t,
            misalignment,
            clamp_events,
        })
    }
}

/// Channel gain between aperture pair (tx, rx) at a given misalignment,
/// building the field tables on the fly. Use [`ChannelSampler`] for
/// repeated evaluations.
pub fn channel_gain(
    tx: usize,
    rx: usize,
    offset: [f64; 2],
    geom: &BeamGeometry,
    turb: &TurbulenceParams,
) -> Result<Complex64> {
    ChannelSampler::new(geom.clone(), *turb)?.channel_gain(tx, rx, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::stats::{mean, se_mean};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const LAMBDA: f64 = 1550e-9;
    const WAIST: f64 = 2.5e-3;

    fn geom(n: usize, z: f64) -> BeamGeometry {
        BeamGeometry::new(LAMBDA, WAIST, n, n, 0.1, z, 3.0 * WAIST, 3.0 * WAIST, None).unwrap()
    }

    fn turb_defaults() -> TurbulenceParams {
        TurbulenceParams::new(1e-15, 1e-5, 0.43e-3, 1.0).unwrap()
    }

    // -- gaussian_beam_field ---------------------------------------------------

    #[test]
    fn field_amplitude_at_origin() {
        let v = gaussian_beam_field(0.0, WAIST).unwrap();
        assert_relative_eq!(v, (2.0 / (PI * WAIST * WAIST)).sqrt(), epsilon = 1e-12);
        assert!((v - 319.15).abs() < 0.01);
    }

    #[test]
    fn field_e_fold_radius() {
        let v0 = gaussian_beam_field(0.0, WAIST).unwrap();
        let vw = gaussian_beam_field(WAIST, WAIST).unwrap();
        assert_relative_eq!(vw, v0 * (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn field_is_unit_power() {
        // closed form: 2π ∫ r (2/(πw²)) e^{-2r²/w²} dr = 1
        let w = WAIST;
        let quad = crate::numeric::integrate(
            |r: f64| r * 2.0 / (PI * w * w) * (-2.0 * r * r / (w * w)).exp(),
            0.0,
            10.0 * w,
            1e-14,
            1e-12,
        )
        .unwrap()
        .value
            * 2.0
            * PI;
        assert_relative_eq!(quad, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn field_rejects_bad_waist() {
        assert!(gaussian_beam_field(0.0, 0.0).is_err());
        assert!(gaussian_beam_field(0.0, -1.0).is_err());
    }

    // -- spatial_spectrum --------------------------------------------------------

    #[test]
    fn spectrum_dc_value() {
        // F(0) = w√(2π)(1 − e^{−N_T}); at N_T = 32 the truncation term is
        // below 1e-14.
        let g = geom(32, 200.0);
        let f0 = spatial_spectrum(0.0, &g).unwrap();
        assert_relative_eq!(f0, WAIST * (2.0 * PI).sqrt(), max_relative = 1e-8);
        assert!((f0 - 6.266e-3).abs() < 1e-6);
    }

    #[test]
    fn spectrum_decays_at_high_frequency() {
        let g = geom(32, 200.0);
        let f0 = spatial_spectrum(0.0, &g).unwrap();
        let f200 = spatial_spectrum(200.0, &g).unwrap();
        let f400 = spatial_spectrum(400.0, &g).unwrap();
        assert!(f200.abs() < 0.1 * f0);
        assert!(f400.abs() < 0.01 * f0);
    }

    #[test]
    fn hankel_round_trip_recovers_field() {
        // inverse transform over a wide enough band recovers E(r) inside the
        // aperture to 1e-6 relative
        let g = geom(32, 200.0);
        for &r in &[0.0, WAIST / 3.0, WAIST, 2.0 * WAIST] {
            let breaks = bessel_aligned_breaks(0.0, 700.0, 2.0 * PI * r, 5.0);
            let rec = integrate_segmented(
                |rho| rho * spatial_spectrum(rho, &g).unwrap() * libm::j0(2.0 * PI * r * rho),
                &breaks,
                1e-9,
                1e-9,
            )
            .unwrap()
            .value
                * 2.0
                * PI;
            let expect = gaussian_beam_field(r, WAIST).unwrap();
            assert_relative_eq!(rec, expect, max_relative = 1e-6);
        }
    }

    // -- propagated_field ---------------------------------------------------------

    #[test]
    fn zero_distance_band_limited_dc_matches_closed_form() {
        // With the spectrum a near-exact Gaussian (N_T = 32), the on-axis
        // band-limited reconstruction has the closed form
        // √(2π)(1 − e^{−s})/(πw), s = π²ρmax²w².
        let g = geom(32, 0.0);
        let field = BeamField::new(&g).unwrap();
        let got = field.propagated(0.0).unwrap();
        let s = (PI * g.band_limit * WAIST).powi(2);
        let expect = (2.0 * PI).sqrt() * (1.0 - (-s).exp()) / (PI * WAIST);
        assert_relative_eq!(got.re, expect, max_relative = 1e-6);
        assert!(got.im.abs() < 1e-9 * expect);
    }

    #[test]
    fn wide_band_reconstruction_matches_transmit_field() {
        // With the band limit overridden to 3/(πw) the excluded spectral
        // tail carries < 2e-4 of the amplitude, so the z = 0 field matches
        // E(r) to 1e-3 inside the waist.
        let g = BeamGeometry::new(
            LAMBDA,
            WAIST,
            32,
            32,
            0.1,
            0.0,
            3.0 * WAIST,
            3.0 * WAIST,
            Some(3.0 / (PI * WAIST)),
        )
        .unwrap();
        let field = BeamField::new(&g).unwrap();
        for &r in &[0.0, 0.3 * WAIST, 0.7 * WAIST, WAIST] {
            let got = field.propagated(r).unwrap();
            let expect = gaussian_beam_field(r, WAIST).unwrap();
            assert!(
                (got.re - expect).abs() / expect < 1e-3,
                "r={r}: {} vs {expect}",
                got.re
            );
            assert!(got.im.abs() < 1e-3 * expect);
        }
    }

    #[test]
    fn on_axis_amplitude_shrinks_with_distance() {
        let g0 = geom(4, 0.0);
        let g200 = geom(4, 200.0);
        let a0 = BeamField::new(&g0).unwrap().propagated(0.0).unwrap().norm();
        let a200 = BeamField::new(&g200)
            .unwrap()
            .propagated(0.0)
            .unwrap()
            .norm();
        // divergence oracle: w(z) = w√(1+(z/z_R)²) predicts a factor ~16 drop
        let z_r = PI * WAIST * WAIST / LAMBDA;
        let spread = (1.0 + (200.0 / z_r).powi(2)).sqrt();
        assert!(a200 < a0, "a200={a200} a0={a0}");
        assert!(
            a200 < a0 / (0.3 * spread),
            "decay weaker than divergence allows"
        );
    }

    #[test]
    fn band_power_is_conserved_under_propagation() {
        // The hard band limit gives G an algebraic radial tail, so both
        // distances integrate over the same generous radius.
        let band_power = |z: f64| -> f64 {
            let g = geom(4, z);
            let field = BeamField::new(&g).unwrap();
            crate::numeric::integrate(
                |r: f64| r * field.propagated(r).unwrap().norm_sqr(),
                0.0,
                0.6,
                1e-12,
                1e-7,
            )
            .unwrap()
            .value
                * 2.0
                * PI
        };
        let p0 = band_power(0.0);
        let p200 = band_power(200.0);
        assert_relative_eq!(p0, p200, max_relative = 1e-3);
    }

    // -- channel gain ---------------------------------------------------------------

    #[test]
    fn aperture_power_near_unity_at_large_arrays() {
        let g = geom(32, 200.0);
        let p = aperture_power(&g).unwrap();
        assert!((p.sqrt() - 1.0).abs() < 1e-10, "denominator {}", p.sqrt());
        // and the closed form
        assert_relative_eq!(p, 1.0 - (-2.0 * 32.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn gain_symmetric_in_misalignment_sign() {
        let g = BeamGeometry::new(LAMBDA, WAIST, 1, 1, 0.1, 200.0, 0.0, 0.0, None).unwrap();
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let h1 = s.channel_gain(0, 0, [0.013, -0.004]).unwrap();
        let h2 = s.channel_gain(0, 0, [-0.013, 0.004]).unwrap();
        assert_relative_eq!(h1.norm(), h2.norm(), max_relative = 1e-9);
    }

    #[test]
    fn gain_decreases_with_misalignment() {
        // Small lens far from the beam waist: |h| tracks the local field
        // magnitude, which decays monotonically over the swept range.
        let g = BeamGeometry::new(LAMBDA, WAIST, 1, 1, 2.0 * WAIST, 50.0, 0.0, 0.0, None).unwrap();
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let r = 5.0 * WAIST * i as f64 / 20.0;
            let h = s.channel_gain(0, 0, [r, 0.0]).unwrap().norm();
            assert!(h < prev, "|h| not decreasing at offset {r}: {h} vs {prev}");
            prev = h;
        }
    }

    // -- misalignment statistics ------------------------------------------------------

    #[test]
    fn misalignment_zero_turbulence_is_pointing_only() {
        let turb = TurbulenceParams::new(0.0, 1e-6, 0.0, 1.0).unwrap();
        let g = geom(4, 200.0);
        assert_relative_eq!(misalignment_sigma(&turb, &g), 2.0e-4, epsilon = 1e-18);
    }

    #[test]
    fn beam_wander_term_value() {
        // independent step-by-step evaluation of the wander formula
        let turb = TurbulenceParams::new(1e-15, 0.0, 0.0, 1.0).unwrap();
        let g = geom(4, 200.0);
        let k = 2.0 * PI / LAMBDA;
        let r_c = (0.423 * k * k * 1e-15 * 200.0).powf(-0.6);
        let expect = (0.1337
            * LAMBDA
            * LAMBDA
            * 200.0
            * 200.0
            * WAIST.powf(-1.0 / 3.0)
            * r_c.powf(-5.0 / 3.0))
        .sqrt();
        let got = misalignment_sigma(&turb, &g);
        assert_relative_eq!(got, expect, epsilon = 1e-18);
        assert!((got - 3.6e-4).abs() < 5e-6, "sigma_tb = {got}");
    }

    #[test]
    fn misalignment_dominates_components() {
        let g = geom(4, 500.0);
        for (cn2, jitter) in [(1e-15, 1e-6), (1e-14, 1e-5), (0.0, 1e-5), (1e-15, 0.0)] {
            let turb = TurbulenceParams::new(cn2, jitter, 0.0, 1.0).unwrap();
            let total = misalignment_sigma(&turb, &g);
            let p_only =
                misalignment_sigma(&TurbulenceParams::new(0.0, jitter, 0.0, 1.0).unwrap(), &g);
            let tb_only =
                misalignment_sigma(&TurbulenceParams::new(cn2, 0.0, 0.0, 1.0).unwrap(), &g);
            assert!(total >= p_only.max(tb_only) - 1e-18);
        }
    }

    #[test]
    fn rayleigh_moments() {
        let sigma = 3.7e-4;
        let mut rng = ChaCha12Rng::seed_from_u64(100);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_misalignment(sigma, &mut rng))
            .collect();
        let m = mean(&draws);
        let se = se_mean(&draws);
        assert!((m - sigma * (PI / 2.0).sqrt()).abs() < 3.0 * se);
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = sorted[sorted.len() / 2];
        // SE of the sample median ≈ 1/(2 f(m) √n)
        let fm = median / (sigma * sigma) * (-median * median / (2.0 * sigma * sigma)).exp();
        let se_med = 0.5 / (fm * (draws.len() as f64).sqrt());
        assert!((median - sigma * (2.0f64.ln() * 2.0).sqrt()).abs() < 3.0 * se_med);
    }

    #[test]
    fn degenerate_misalignment_is_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(sample_misalignment(0.0, &mut rng), 0.0);
    }

    #[test]
    fn rayleigh_passes_ks_test() {
        let sigma = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_misalignment(sigma, &mut rng))
            .collect();
        draws.sort_by(|a, b| a.total_cmp(b));
        let mut d_stat = 0.0f64;
        for (i, x) in draws.iter().enumerate() {
            let cdf = 1.0 - (-x * x / (2.0 * sigma * sigma)).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        // 1% critical value: 1.628/sqrt(n)
        assert!(d_stat < 1.628 / (n as f64).sqrt(), "KS statistic {d_stat}");
    }

    // -- scintillation ---------------------------------------------------------------

    #[test]
    fn scintillation_vanishes_without_turbulence() {
        let turb = TurbulenceParams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(scintillation_variance(&turb, &geom(4, 200.0)).unwrap(), 0.0);
    }

    #[test]
    fn scintillation_reference_value() {
        let turb = turb_defaults();
        let v = scintillation_variance(&turb, &geom(4, 200.0)).unwrap();
        assert!((v - 1.4e-5).abs() < 1e-6, "sigma2 = {v}");
    }

    #[test]
    fn scintillation_monotone_in_cn2() {
        let g = geom(4, 200.0);
        let mut prev = -1.0;
        let mut cn2 = 1e-17;
        while cn2 <= 1.001e-14 {
            let turb = TurbulenceParams::new(cn2, 0.0, 0.0, 1.0).unwrap();
            let v = scintillation_variance(&turb, &g).unwrap();
            assert!(v > prev);
            prev = v;
            cn2 *= 2.0;
        }
    }

    #[test]
    fn scintillation_rejects_zero_distance() {
        assert!(scintillation_variance(&turb_defaults(), &geom(4, 0.0)).is_err());
    }

    // -- turbulence fades ---------------------------------------------------------------

    #[test]
    fn fade_moments() {
        let sigma2 = 0.3;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_turbulence_fade(sigma2, &mut rng))
            .collect();
        let m = mean(&draws);
        assert!((m - 1.0).abs() < 3.0 * se_mean(&draws), "mean {m}");
        let v = crate::noise::stats::variance(&draws);
        let sev = crate::noise::stats::se_variance(&draws);
        assert!((v - (sigma2.exp() - 1.0)).abs() < 3.0 * sev, "var {v}");
    }

    #[test]
    fn fade_degenerate_case() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        assert_eq!(sample_turbulence_fade(0.0, &mut rng), 1.0);
    }

    #[test]
    fn fade_passes_ks_test() {
        let sigma2: f64 = 0.5;
        let sigma = sigma2.sqrt();
        let mut rng = ChaCha12Rng::seed_from_u64(2025);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_turbulence_fade(sigma2, &mut rng))
            .collect();
        draws.sort_by(|a, b| a.total_cmp(b));
        let mut d_stat = 0.0f64;
        for (i, x) in draws.iter().enumerate() {
            let zscore = (x.ln() + sigma2 / 2.0) / sigma;
            let cdf = 0.5 * (1.0 + libm::erf(zscore / std::f64::consts::SQRT_2));
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        assert!(d_stat < 1.628 / (n as f64).sqrt(), "KS statistic {d_stat}");
    }

    // -- atmospheric attenuation -----------------------------------------------------------

    #[test]
    fn attenuation_reference_value() {
        let t = atmospheric_attenuation(0.43e-3, 1000.0);
        assert_relative_eq!(t, 10f64.powf(-0.043), epsilon = 1e-12);
        assert!((t - 0.9057).abs() < 1e-4);
    }

    #[test]
    fn attenuation_edge_cases() {
        assert_eq!(atmospheric_attenuation(0.43e-3, 0.0), 1.0);
        assert_eq!(atmospheric_attenuation(0.0, 5000.0), 1.0);
    }

    // -- pure-function determinism ------------------------------------------------------------

    #[test]
    fn scalar_statistics_are_deterministic() {
        let g = geom(4, 200.0);
        let turb = turb_defaults();
        assert_eq!(
            misalignment_sigma(&turb, &g).to_bits(),
            misalignment_sigma(&turb, &g).to_bits()
        );
        assert_eq!(
            scintillation_variance(&turb, &g).unwrap().to_bits(),
            scintillation_variance(&turb, &g).unwrap().to_bits()
        );
        assert_eq!(
            atmospheric_attenuation(0.43e-3, 777.0).to_bits(),
            atmospheric_attenuation(0.43e-3, 777.0).to_bits()
        );
    }

    // -- realize ---------------------------------------------------------------------------

    #[test]
    fn synthetic_diagonal_channel_recovers_betas() {
        let g = geom(4, 200.0);
        let turb = TurbulenceParams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let s = ChannelSampler::synthetic(g, turb, vec![0.9, 0.5, 0.1, 0.02]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let r = s.realize(&mut rng).unwrap();
        assert_eq!(r.rank, 4);
        for (got, want) in r.singular_transmittances.iter().zip([0.9, 0.5, 0.1, 0.02]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        // no attenuation, no fading, full efficiency: T == beta
        for (t, b) in r.effective_t.iter().zip(&r.singular_transmittances) {
            assert_relative_eq!(*t, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn frobenius_norm_equals_beta_sum() {
        let g = geom(2, 200.0);
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let r = s.realize(&mut rng).unwrap();
        let frob: f64 = r.gain_matrix.iter().map(|c| c.norm_sqr()).sum();
        let beta_sum: f64 = r.singular_transmittances.iter().sum();
        assert_relative_eq!(frob, beta_sum, max_relative = 1e-12);
    }

    #[test]
    fn svd_reconstructs_gain_matrix() {
        let g = geom(2, 200.0);
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let r = s.realize(&mut rng).unwrap();
        let svd = r.gain_matrix.clone().svd(true, true);
        let rec = svd.recompose().unwrap();
        let scale = r
            .gain_matrix
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        for (a, b) in rec.iter().zip(r.gain_matrix.iter()) {
            assert!((a - b).norm() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn realizations_are_seed_deterministic() {
        let g = geom(2, 200.0);
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let r1 = s.realize(&mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        let r2 = s.realize(&mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        assert_eq!(r1.misalignment, r2.misalignment);
        assert_eq!(r1.effective_t, r2.effective_t);
    }

    #[test]
    fn effective_transmissivities_stay_in_range() {
        let g = geom(2, 200.0);
        let s = ChannelSampler::new(g, turb_defaults()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..20 {
            let r = s.realize(&mut rng).unwrap();
            for &t in &r.effective_t {
                assert!((0.0..=1.0).contains(&t));
            }
            for w in r.singular_transmittances.windows(2) {
                assert!(w[0] >= w[1]);
            }
            assert!(r.rank <= 2);
        }
    }

    // -- geometry validation ----------------------------------------------------------------

    #[test]
    fn band_limit_cannot_reach_evanescent_region() {
        let res = BeamGeometry::new(
            LAMBDA,
            WAIST,
            4,
            4,
            0.1,
            200.0,
            3.0 * WAIST,
            3.0 * WAIST,
            Some(1.0 / LAMBDA),
        );
        assert!(res.is_err());
    }

    #[test]
    fn grid_is_centred() {
        let pts = square_grid(4, 2.0);
        let cx: f64 = pts.iter().map(|p| p[0]).sum::<f64>() / 4.0;
        let cy: f64 = pts.iter().map(|p| p[1]).sum::<f64>() / 4.0;
        assert_relative_eq!(cx, 0.0, epsilon = 1e-12);
        assert_relative_eq!(cy, 0.0, epsilon = 1e-12);
        assert_eq!(pts.len(), 4);
    }
}
