//! System configuration: a flat `key = value` document with dotted key
//! paths, validated into a [`SystemConfig`]. Unset keys take the default
//! link parameters (1550 nm, 2.5 mm waist, 10 cm lenses, thermal vacuum
//! variance at 296 K, unit reconciliation efficiency, ...).

use crate::bounds::VarianceConvention;
use crate::channel::{BeamGeometry, ChannelSampler, TurbulenceParams};
use crate::error::{Error, Result};
use crate::noise::{HybridNoiseParams, ProtocolParams};
use sha2::{Digest, Sha256};

/// Speed of light (m/s) as used by the reference parameter set.
const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Planck constant (J·s), reference parameter set value.
const PLANCK: f64 = 6.63e-34;
/// Boltzmann constant (J/K), reference parameter set value.
const BOLTZMANN: f64 = 1.38e-23;
/// Ambient temperature (K) of the thermal-occupation model.
const AMBIENT_K: f64 = 296.0;

/// Vacuum/thermal variance V_0 = 2 n̄ + 1 with the Bose–Einstein occupation
/// n̄ at the carrier frequency of the given wavelength.
pub fn thermal_vacuum_variance(wavelength: f64) -> f64 {
    let f_c = SPEED_OF_LIGHT / wavelength;
    let x = PLANCK * f_c / (BOLTZMANN * AMBIENT_K);
    1.0 + 2.0 / (x.exp() - 1.0)
}

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Link distance z (m).
    Distance,
    /// Scintillation strength, driven by Cn² (the grid is in Cn² units; the
    /// reported axis value is the resulting log-irradiance variance σ²).
    Scintillation,
    /// Detector efficiency η.
    Efficiency,
    /// Signal-to-noise ratio in dB, mapped onto the modulation variance.
    Snr,
    /// Square MIMO size N (N_T = N_R = N).
    MimoSize,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::Scintillation => "scintillation",
            SweepAxis::Efficiency => "efficiency",
            SweepAxis::Snr => "snr",
            SweepAxis::MimoSize => "mimo_size",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SweepAxis::Distance),
            "scintillation" => Ok(SweepAxis::Scintillation),
            "efficiency" => Ok(SweepAxis::Efficiency),
            "snr" => Ok(SweepAxis::Snr),
            "mimo_size" => Ok(SweepAxis::MimoSize),
            other => Err(Error::config(format!(
                "sweep.axis: unknown axis `{other}` (expected distance, scintillation, \
                 efficiency, snr or mimo_size)"
            ))),
        }
    }
}

/// How the SNR axis maps to model parameters. A single mapping is defined:
/// linear SNR = V_s / (λ0 + σ_g²), i.e. modulation power over the total
/// additive hybrid-noise power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrMapping {
    #[default]
    SignalOverHybridNoise,
}

impl SnrMapping {
    pub fn name(&self) -> &'static str {
        "signal_over_hybrid_noise"
    }
}

/// Sweep grid description: exactly one axis per run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log_spacing: bool,
}

impl SweepSpec {
    /// The strictly monotone grid of axis input values.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = self.points;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if self.log_spacing {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// All physical and run-control parameters of a link study.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    // geometry
    pub wavelength: f64,
    pub waist: f64,
    pub tx_count: usize,
    pub rx_count: usize,
    pub rx_lens_radius: f64,
    pub link_distance: f64,
    pub tx_pitch: f64,
    pub rx_pitch: f64,
    pub band_limit_override: Option<f64>,
    // turbulence / receiver
    pub cn2: f64,
    pub pointing_jitter: f64,
    pub attenuation_db_per_m: f64,
    pub detector_efficiency: f64,
    // hybrid noise
    pub poisson_mean: f64,
    pub gaussian_mean: f64,
    pub gaussian_variance: f64,
    // protocol
    pub modulation_variance: f64,
    pub vacuum_variance: f64,
    pub eve_variance: f64,
    pub reconciliation_efficiency: f64,
    // run control
    pub seed: u64,
    pub realizations: usize,
    pub tail_tol: f64,
    pub convention: VarianceConvention,
    pub snr_mapping: SnrMapping,
    pub synthetic_betas: Option<Vec<f64>>,
    pub sweep: SweepSpec,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let wavelength = 1550e-9;
        let waist = 2.5e-3;
        let rx_lens_radius = 0.1;
        Self {
            wavelength,
            waist,
            tx_count: 4,
            rx_count: 4,
            rx_lens_radius,
            link_distance: 200.0,
            // matched square grids: each transmit beam axis meets its
            // receiver lens, and lanes stay decorrelated (cross-coupling
            // below 1% in power) out to the default distance range
            tx_pitch: 6.0 * rx_lens_radius,
            rx_pitch: 6.0 * rx_lens_radius,
            band_limit_override: None,
            cn2: 1e-15,
            pointing_jitter: 1e-6,
            attenuation_db_per_m: 0.43e-3,
            detector_efficiency: 1.0,
            poisson_mean: 1.0,
            gaussian_mean: 0.0,
            gaussian_variance: 0.001,
            modulation_variance: 1e3,
            vacuum_variance: thermal_vacuum_variance(wavelength),
            eve_variance: 1.0,
            reconciliation_efficiency: 1.0,
            seed: 1,
            realizations: 20_000,
            tail_tol: crate::DEFAULT_TAIL_TOL,
            convention: VarianceConvention::AsPrinted,
            snr_mapping: SnrMapping::SignalOverHybridNoise,
            synthetic_betas: None,
            sweep: SweepSpec {
                axis: SweepAxis::Distance,
                start: 50.0,
                stop: 2000.0,
                points: 20,
                log_spacing: false,
            },
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(format!("{key}: `{v}` is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.trim()
        .parse::<u64>()
        .map_err(|_| Error::config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::config(format!("{key}: `{other}` is not true/false"))),
    }
}

/// Parse a flat key-value document into a validated configuration.
/// Empty documents yield the defaults.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut cfg = SystemConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!(
                "line {}: expected `key = value`, got `{line}`",
                idx + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_key(cfg: &mut SystemConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "geometry.wavelength" => cfg.wavelength = parse_f64(key, value)?,
        "geometry.waist" => cfg.waist = parse_f64(key, value)?,
        "geometry.tx_count" => cfg.tx_count = parse_usize(key, value)?,
        "geometry.rx_count" => cfg.rx_count = parse_usize(key, value)?,
        "geometry.rx_lens_radius" => cfg.rx_lens_radius = parse_f64(key, value)?,
        "geometry.link_distance" => cfg.link_distance = parse_f64(key, value)?,
        "geometry.tx_pitch" => cfg.tx_pitch = parse_f64(key, value)?,
        "geometry.rx_pitch" => cfg.rx_pitch = parse_f64(key, value)?,
        "geometry.band_limit" => {
            cfg.band_limit_override = if value == "default" {
                None
            } else {
                Some(parse_f64(key, value)?)
            }
        }
        "turbulence.cn2" => cfg.cn2 = parse_f64(key, value)?,
        "turbulence.pointing_jitter" => cfg.pointing_jitter = parse_f64(key, value)?,
        "turbulence.attenuation_db_per_m" => cfg.attenuation_db_per_m = parse_f64(key, value)?,
        "turbulence.detector_efficiency" => cfg.detector_efficiency = parse_f64(key, value)?,
        "noise.poisson_mean" => cfg.poisson_mean = parse_f64(key, value)?,
        "noise.gaussian_mean" => cfg.gaussian_mean = parse_f64(key, value)?,
        "noise.gaussian_variance" => cfg.gaussian_variance = parse_f64(key, value)?,
        "protocol.modulation_variance" => cfg.modulation_variance = parse_f64(key, value)?,
        "protocol.vacuum_variance" => cfg.vacuum_variance = parse_f64(key, value)?,
        "protocol.eve_variance" => cfg.eve_variance = parse_f64(key, value)?,
        "protocol.reconciliation_efficiency" => {
            cfg.reconciliation_efficiency = parse_f64(key, value)?
        }
        "run.seed" => cfg.seed = parse_u64(key, value)?,
        "run.realizations" => cfg.realizations = parse_usize(key, value)?,
        "run.tail_tol" => cfg.tail_tol = parse_f64(key, value)?,
        "run.variance_convention" => {
            cfg.convention = match value {
                "as_printed" => VarianceConvention::AsPrinted,
                "moment_matched" => VarianceConvention::MomentMatched,
                other => {
                    return Err(Error::config(format!(
                        "run.variance_convention: unknown convention `{other}`"
                    )))
                }
            }
        }
        "run.snr_mapping" => {
            cfg.snr_mapping = match value {
                "signal_over_hybrid_noise" => SnrMapping::SignalOverHybridNoise,
                other => {
                    return Err(Error::config(format!(
                        "run.snr_mapping: unknown mapping `{other}`"
                    )))
                }
            }
        }
        "channel.synthetic_betas" => {
            if value.is_empty() || value == "none" {
                cfg.synthetic_betas = None;
            } else {
                let betas = value
                    .split(',')
                    .map(|s| parse_f64(key, s))
                    .collect::<Result<Vec<f64>>>()?;
                cfg.synthetic_betas = Some(betas);
            }
        }
        "sweep.axis" => cfg.sweep.axis = SweepAxis::parse(value)?,
        "sweep.start" => cfg.sweep.start = parse_f64(key, value)?,
        "sweep.stop" => cfg.sweep.stop = parse_f64(key, value)?,
        "sweep.points" => cfg.sweep.points = parse_usize(key, value)?,
        "sweep.log_spacing" => cfg.sweep.log_spacing = parse_bool(key, value)?,
        other => {
            return Err(Error::config(format!("unknown key `{other}`")));
        }
    }
    Ok(())
}

impl SystemConfig {
    /// Check every invariant, with key paths in the error messages.
    pub fn validate(&self) -> Result<()> {
        if !(self.cn2 >= 0.0) {
            return Err(Error::config("turbulence.cn2: Cn2 must be ≥ 0"));
        }
        self.geometry().map_err(|e| prefix("geometry", e))?;
        self.turbulence().map_err(|e| prefix("turbulence", e))?;
        self.hybrid_noise().map_err(|e| prefix("noise", e))?;
        self.protocol_params().map_err(|e| prefix("protocol", e))?;
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::config("run.tail_tol: must be in (0, 1)"));
        }
        if self.realizations == 0 {
            return Err(Error::config("run.realizations: must be >= 1"));
        }
        if let Some(betas) = &self.synthetic_betas {
            if betas.iter().any(|b| !(*b >= 0.0) || *b > 1.0) {
                return Err(Error::config(
                    "channel.synthetic_betas: entries must lie in [0, 1]",
                ));
            }
        }
        let s = &self.sweep;
        if s.points == 0 {
            return Err(Error::config("sweep.points: must be >= 1"));
        }
        if s.points > 1 && !(s.stop > s.start) {
            return Err(Error::config(
                "sweep.stop: grid must be strictly increasing",
            ));
        }
        if s.log_spacing && !(s.start > 0.0) {
            return Err(Error::config("sweep.start: log spacing needs start > 0"));
        }
        if matches!(s.axis, SweepAxis::MimoSize) {
            if s.start < 1.0 {
                return Err(Error::config("sweep.start: MIMO size must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<BeamGeometry> {
        BeamGeometry::new(
            self.wavelength,
            self.waist,
            self.tx_count,
            self.rx_count,
            self.rx_lens_radius,
            self.link_distance,
            self.tx_pitch,
            self.rx_pitch,
            self.band_limit_override,
        )
    }

    pub fn turbulence(&self) -> Result<TurbulenceParams> {
        TurbulenceParams::new(
            self.cn2,
            self.pointing_jitter,
            self.attenuation_db_per_m,
            self.detector_efficiency,
        )
    }

    pub fn hybrid_noise(&self) -> Result<HybridNoiseParams> {
        HybridNoiseParams::new(
            self.poisson_mean,
            self.gaussian_mean,
            self.gaussian_variance,
        )
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams> {
        ProtocolParams::new(
            self.modulation_variance,
            self.vacuum_variance,
            self.eve_variance,
            self.reconciliation_efficiency,
        )
    }

    /// Build the channel sampler this configuration describes (physical
    /// field model, or fixed synthetic transmittances when set).
    pub fn build_sampler(&self) -> Result<ChannelSampler> {
        let geom = self.geometry()?;
        let turb = self.turbulence()?;
        match &self.synthetic_betas {
            Some(betas) => ChannelSampler::synthetic(geom, turb, betas.clone()),
            None => ChannelSampler::new(geom, turb),
        }
    }

    /// Copy of this configuration with the sweep axis applied at `x`.
    pub fn with_axis_value(&self, x: f64) -> Result<SystemConfig> {
        let mut cfg = self.clone();
        match self.sweep.axis {
            SweepAxis::Distance => cfg.link_distance = x,
            SweepAxis::Scintillation => cfg.cn2 = x,
            SweepAxis::Efficiency => cfg.detector_efficiency = x,
            SweepAxis::Snr => {
                let snr_linear = 10f64.powf(x / 10.0);
                cfg.modulation_variance = snr_linear * (self.poisson_mean + self.gaussian_variance);
            }
            SweepAxis::MimoSize => {
                let n = x.round() as usize;
                cfg.tx_count = n;
                cfg.rx_count = n;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialisation: every key, fixed order, shortest
    /// round-trip number formatting.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("geometry.wavelength", self.wavelength.to_string());
        kv("geometry.waist", self.waist.to_string());
        kv("geometry.tx_count", self.tx_count.to_string());
        kv("geometry.rx_count", self.rx_count.to_string());
        kv("geometry.rx_lens_radius", self.rx_lens_radius.to_string());
        kv("geometry.link_distance", self.link_distance.to_string());
        kv("geometry.tx_pitch", self.tx_pitch.to_string());
        kv("geometry.rx_pitch", self.rx_pitch.to_string());
        kv(
            "geometry.band_limit",
            match self.band_limit_override {
                Some(b) => b.to_string(),
                None => "default".to_string(),
            },
        );
        kv("turbulence.cn2", self.cn2.to_string());
        kv(
            "turbulence.pointing_jitter",
            self.pointing_jitter.to_string(),
        );
        kv(
            "turbulence.attenuation_db_per_m",
            self.attenuation_db_per_m.to_string(),
        );
        kv(
            "turbulence.detector_efficiency",
            self.detector_efficiency.to_string(),
        );
        kv("noise.poisson_mean", self.poisson_mean.to_string());
        kv("noise.gaussian_mean", self.gaussian_mean.to_string());
        kv(
            "noise.gaussian_variance",
            self.gaussian_variance.to_string(),
        );
        kv(
            "protocol.modulation_variance",
            self.modulation_variance.to_string(),
        );
        kv("protocol.vacuum_variance", self.vacuum_variance.to_string());
        kv("protocol.eve_variance", self.eve_variance.to_string());
        kv(
            "protocol.reconciliation_efficiency",
            self.reconciliation_efficiency.to_string(),
        );
        kv("run.seed", self.seed.to_string());
        kv("run.realizations", self.realizations.to_string());
        kv("run.tail_tol", self.tail_tol.to_string());
        kv(
            "run.variance_convention",
            match self.convention {
                VarianceConvention::AsPrinted => "as_printed".to_string(),
                VarianceConvention::MomentMatched => "moment_matched".to_string(),
            },
        );
        kv("run.snr_mapping", self.snr_mapping.name().to_string());
        kv(
            "channel.synthetic_betas",
            match &self.synthetic_betas {
                Some(betas) => betas
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                None => "none".to_string(),
            },
        );
        kv("sweep.axis", self.sweep.axis.name().to_string());
        kv("sweep.start", self.sweep.start.to_string());
        kv("sweep.stop", self.sweep.stop.to_string());
        kv("sweep.points", self.sweep.points.to_string());
        kv("sweep.log_spacing", self.sweep.log_spacing.to_string());
        out
    }

    /// Short content hash of the canonical serialisation. Seeds are part of
    /// the serialisation, so runs with different seeds never share a
    /// fingerprint.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{section}: {msg}")),
        Error::Domain(msg) => Error::Config(format!("{section}: {msg}")),
        other => other,
    }
}
