//! Config-driven parameter sweeps: evaluate both protocols over a grid,
//! collect per-point statistics, and emit reproducible CSV tables and
//! self-rendered SVG plots with a content-hash manifest.

use crate::channel::ChannelSampler;
use crate::config::{SweepAxis, SystemConfig};
use crate::error::{Error, Result};
use crate::skr::skr_mimo_paired;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Fixed CSV column header.
pub const CSV_HEADER: &str =
    "axis,skr_1way,se_1way,skr_2way,se_2way,ratio,diff,mi_1way,holevo_1way,mi_2way,holevo_2way";

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub skr_1way: f64,
    pub se_1way: f64,
    pub skr_2way: f64,
    pub se_2way: f64,
    /// two-way / one-way, present only where the one-way rate is positive.
    pub ratio: Option<f64>,
    pub diff: f64,
    pub mi_1way: f64,
    pub holevo_1way: f64,
    pub mi_2way: f64,
    pub holevo_2way: f64,
    /// Set when evaluation failed at this point; numeric fields are NaN.
    pub failed: bool,
}

/// Completed sweep with reproducibility metadata.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub fingerprint: String,
    pub seed: u64,
    pub version: String,
}

/// Evaluate both protocols at every grid point. Points share the channel
/// realisation substreams (common random numbers), so point-to-point trends
/// are compared on identical fading draws; realisations within a point run
/// in parallel. A failing point is recorded with a failure marker and the
/// sweep continues.
pub fn run_sweep(config: &SystemConfig) -> Result<SweepTable> {
    config.validate()?;
    let grid = config.sweep.grid();
    let fingerprint = config.fingerprint();

    let mut rows = Vec::with_capacity(grid.len());
    let mut cached: Option<(SystemConfig, ChannelSampler)> = None;

    for &x in &grid {
        let point = match config.with_axis_value(x) {
            Ok(p) => p,
            Err(_) => {
                rows.push(failed_row(x));
                continue;
            }
        };
        match eval_point(&point, &mut cached) {
            Ok(row) => rows.push(row),
            Err(_) => rows.push(failed_row(x)),
        }
    }

    Ok(SweepTable {
        axis: config.sweep.axis,
        rows,
        fingerprint,
        seed: config.seed,
        version: crate::VERSION.to_string(),
    })
}

fn failed_row(x: f64) -> SweepRow {
    SweepRow {
        axis_value: x,
        skr_1way: f64::NAN,
        se_1way: f64::NAN,
        skr_2way: f64::NAN,
        se_2way: f64::NAN,
        ratio: None,
        diff: f64::NAN,
        mi_1way: f64::NAN,
        holevo_1way: f64::NAN,
        mi_2way: f64::NAN,
        holevo_2way: f64::NAN,
        failed: true,
    }
}

fn eval_point(
    point: &SystemConfig,
    cached: &mut Option<(SystemConfig, ChannelSampler)>,
) -> Result<SweepRow> {
    // Rebuild the sampler only when the field geometry changed; efficiency,
    // SNR and turbulence-statistics changes reuse the tabulated field.
    let reusable = cached.as_ref().is_some_and(|(c, _)| {
        c.wavelength == point.wavelength
            && c.waist == point.waist
            && c.tx_count == point.tx_count
            && c.rx_count == point.rx_count
            && c.rx_lens_radius == point.rx_lens_radius
            && c.link_distance == point.link_distance
            && c.tx_pitch == point.tx_pitch
            && c.rx_pitch == point.rx_pitch
            && c.band_limit_override == point.band_limit_override
            && c.synthetic_betas == point.synthetic_betas
    });
    let sampler = if reusable {
        let (_, base) = cached.as_ref().unwrap();
        base.with_turbulence(point.turbulence()?)?
    } else {
        point.build_sampler()?
    };

    let (one, two) = skr_mimo_paired(&sampler, point, point.realizations, point.seed)?;

    let axis_value = match point.sweep.axis {
        SweepAxis::Scintillation => sampler.scintillation_variance(),
        _ => point_axis_raw(point),
    };

    let row = SweepRow {
        axis_value,
        skr_1way: one.total_skr,
        se_1way: one.total_std_error,
        skr_2way: two.total_skr,
        se_2way: two.total_std_error,
        ratio: if one.total_skr > 0.0 {
            Some(two.total_skr / one.total_skr)
        } else {
            None
        },
        diff: two.total_skr - one.total_skr,
        mi_1way: one.total_mi,
        holevo_1way: one.total_holevo,
        mi_2way: two.total_mi,
        holevo_2way: two.total_holevo,
        failed: false,
    };
    *cached = Some((point.clone(), sampler));
    Ok(row)
}

fn point_axis_raw(point: &SystemConfig) -> f64 {
    match point.sweep.axis {
        SweepAxis::Distance => point.link_distance,
        SweepAxis::Scintillation => point.cn2,
        SweepAxis::Efficiency => point.detector_efficiency,
        SweepAxis::Snr => {
            let noise = point.poisson_mean + point.gaussian_variance;
            10.0 * (point.modulation_variance / noise).log10()
        }
        SweepAxis::MimoSize => point.tx_count as f64,
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        "NA".to_string()
    }
}

/// Render the table as CSV: a metadata comment line, the fixed header row,
/// then one row per grid point. LF line endings, '.' decimal separator,
/// shortest-round-trip number formatting.
pub fn write_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# skrsim v{} fingerprint={} seed={} axis={}",
        table.version,
        table.fingerprint,
        table.seed,
        table.axis.name()
    );
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let ratio = match row.ratio {
            Some(r) if r.is_finite() => r.to_string(),
            _ => "NA".to_string(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_num(row.axis_value),
            csv_num(row.skr_1way),
            csv_num(row.se_1way),
            csv_num(row.skr_2way),
            csv_num(row.se_2way),
            ratio,
            csv_num(row.diff),
            csv_num(row.mi_1way),
            csv_num(row.holevo_1way),
            csv_num(row.mi_2way),
            csv_num(row.holevo_2way),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// SVG plot
// ---------------------------------------------------------------------------

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{x:.2e}")
    }
}

/// Render both SKR curves against the axis as a standalone SVG document.
pub fn render_svg(table: &SweepTable) -> String {
    const W: f64 = 860.0;
    const H: f64 = 540.0;
    const ML: f64 = 80.0;
    const MR: f64 = 30.0;
    const MT: f64 = 40.0;
    const MB: f64 = 70.0;

    let pts: Vec<&SweepRow> = table
        .rows
        .iter()
        .filter(|r| !r.failed && r.axis_value.is_finite())
        .collect();

    let log_x = matches!(table.axis, SweepAxis::Scintillation)
        || (pts.len() > 1 && {
            let a = pts.first().unwrap().axis_value;
            let b = pts.last().unwrap().axis_value;
            a > 0.0 && b / a > 100.0
        });

    let xs: Vec<f64> = pts
        .iter()
        .map(|r| {
            if log_x {
                r.axis_value.log10()
            } else {
                r.axis_value
            }
        })
        .collect();
    let mut ys: Vec<f64> = Vec::new();
    for r in &pts {
        if r.skr_1way.is_finite() {
            ys.push(r.skr_1way);
        }
        if r.skr_2way.is_finite() {
            ys.push(r.skr_2way);
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let sx = |x: f64| ML + (x - x_lo) / (x_hi - x_lo).max(1e-300) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo).max(1e-300) * (H - MT - MB);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(
        svg,
        "<!-- skrsim v{} fingerprint={} seed={} -->",
        table.version, table.fingerprint, table.seed
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - ML - MR,
        H - MT - MB
    );

    // ticks
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let xpix = sx(xv);
        let ypix = sy(yv);
        let xlab = if log_x {
            tick_label(10f64.powf(xv))
        } else {
            tick_label(xv)
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{xpix}\" y1=\"{}\" x2=\"{xpix}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 6.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{xpix}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{xlab}</text>",
            H - MB + 22.0
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ypix}\" x2=\"{ML}\" y2=\"{ypix}\" stroke=\"black\"/>",
            ML - 6.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"13\">{}</text>",
            ML - 10.0,
            ypix + 4.0,
            tick_label(yv)
        );
    }

    // curves
    for (field, color, label, dy) in [
        (0usize, "#1f77b4", "one-way", 0.0),
        (1usize, "#d62728", "two-way", 18.0),
    ] {
        let path: String = pts
            .iter()
            .zip(&xs)
            .filter_map(|(r, &x)| {
                let y = if field == 0 { r.skr_1way } else { r.skr_2way };
                if y.is_finite() {
                    Some(format!("{:.2},{:.2}", sx(x), sy(y)))
                } else {
                    None
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            svg,
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>"
        );
        let ly = MT + 16.0 + dy;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            W - MR - 150.0,
            W - MR - 120.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\">{label}</text>",
            W - MR - 112.0,
            ly + 4.0
        );
    }

    let xlabel = match table.axis {
        SweepAxis::Distance => "link distance z (m)",
        SweepAxis::Scintillation => "log-irradiance variance σ²",
        SweepAxis::Efficiency => "detector efficiency η",
        SweepAxis::Snr => "SNR (dB)",
        SweepAxis::MimoSize => "MIMO size N",
    };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"15\">{xlabel}</text>",
        ML + (W - ML - MR) / 2.0,
        H - 18.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" font-size=\"15\" transform=\"rotate(-90 22 {})\">SKR (bits/use)</text>",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{ML}\" y=\"{}\" font-size=\"12\" fill=\"#555\">fingerprint {}</text>",
        MT - 14.0,
        table.fingerprint
    );
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

/// Which artifacts to write.
#[derive(Debug, Clone, Copy)]
pub struct OutputFormats {
    pub csv: bool,
    pub svg: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        Self {
            csv: true,
            svg: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

/// What was written where, with content hashes.
#[derive(Debug, Clone)]
pub struct FileManifest {
    pub entries: Vec<ManifestEntry>,
    pub fingerprint: String,
    pub rows: usize,
    pub manifest_path: PathBuf,
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write the requested artifacts into `out_dir` (created if missing) plus a
/// `manifest.txt` listing each path and content hash. An empty table
/// produces a header-only CSV and no plot.
pub fn emit_outputs(
    table: &SweepTable,
    out_dir: &Path,
    formats: OutputFormats,
) -> Result<FileManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;

    let mut entries = Vec::new();
    let base = format!("sweep_{}", table.axis.name());

    if formats.csv {
        let csv = write_csv(table);
        let path = out_dir.join(format!("{base}.csv"));
        write_file(&path, csv.as_bytes())?;
        entries.push(ManifestEntry {
            path,
            sha256: sha256_hex(csv.as_bytes()),
            bytes: csv.len(),
        });
    }
    if formats.svg && !table.rows.is_empty() {
        let svg = render_svg(table);
        let path = out_dir.join(format!("{base}.svg"));
        write_file(&path, svg.as_bytes())?;
        entries.push(ManifestEntry {
            path,
            sha256: sha256_hex(svg.as_bytes()),
            bytes: svg.len(),
        });
    }

    let mut manifest = String::new();
    let _ = writeln!(
        manifest,
        "# skrsim v{} fingerprint={} seed={}",
        table.version, table.fingerprint, table.seed
    );
    let _ = writeln!(manifest, "rows={}", table.rows.len());
    if table.rows.is_empty() {
        let _ = writeln!(manifest, "note=empty table, no plot emitted");
    }
    for e in &entries {
        let _ = writeln!(
            manifest,
            "{} sha256={} bytes={}",
            e.path.file_name().unwrap().to_string_lossy(),
            e.sha256,
            e.bytes
        );
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_file(&manifest_path, manifest.as_bytes())?;

    Ok(FileManifest {
        entries,
        fingerprint: table.fingerprint.clone(),
        rows: table.rows.len(),
        manifest_path,
    })
}
