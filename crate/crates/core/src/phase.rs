//! Parallel sweeps over the `(p, q)` square, CSV export and heatmaps.
//!
//! Each cell `(i, j)` of a Monte Carlo sweep draws its trials from
//! `cell_stream(seed, i, j, t)`, so a grid is a pure function of its axes,
//! trial count, threshold, seed and estimator, whatever the worker count.
//! The coupled estimator instead feeds every cell the streams of cell
//! `(0, 0)` through inverse-CDF sampling; the resulting grid is then
//! pathwise monotone in both `p` and `q`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::coop::{critical_curve, h_polynomial, survival_counts, CoopParams, CriticalPoint};
use crate::error::{Error, Result};

pub use crate::coop::SurvivalEstimate;

/// Default grid spacing for desk-scale runs.
pub const DEFAULT_GRID_STEP: f64 = 0.025;

/// Grid spacing of the full-resolution diagram, 801 points per axis.
pub const FULL_GRID_STEP: f64 = 0.00125;

/// Spacing of the `p` samples used to draw the critical curve.
pub const OVERLAY_P_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Survival frequency with independent per-cell streams.
    McSurvival,
    /// Survival frequency with the shared-uniform monotone coupling.
    CoupledMcSurvival,
    /// `h(p, q)` from the closed-form polynomial.
    HIndicator,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::McSurvival => "mc_survival",
            Estimator::CoupledMcSurvival => "coupled_mc_survival",
            Estimator::HIndicator => "h_indicator",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "mc_survival" | "mc" => Some(Estimator::McSurvival),
            "coupled_mc_survival" | "coupled" => Some(Estimator::CoupledMcSurvival),
            "h_indicator" | "h" => Some(Estimator::HIndicator),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeta {
    pub seed: u64,
    pub trials: u64,
    pub explosion_threshold: u64,
    pub grid_step: f64,
    pub estimator_name: String,
}

/// Rectangular grid of values; row index follows `p`, column index `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    p_axis: Vec<f64>,
    q_axis: Vec<f64>,
    values: Vec<f64>,
    meta: GridMeta,
}

impl PhaseGrid {
    pub fn new(p_axis: Vec<f64>, q_axis: Vec<f64>, values: Vec<f64>, meta: GridMeta) -> Result<Self> {
        if p_axis.is_empty() || q_axis.is_empty() {
            return Err(Error::Domain("grid axes must be nonempty".into()));
        }
        if values.len() != p_axis.len() * q_axis.len() {
            return Err(Error::Domain(format!(
                "{} values for a {}x{} grid",
                values.len(),
                p_axis.len(),
                q_axis.len()
            )));
        }
        Ok(Self {
            p_axis,
            q_axis,
            values,
            meta,
        })
    }

    pub fn p_axis(&self) -> &[f64] {
        &self.p_axis
    }

    pub fn q_axis(&self) -> &[f64] {
        &self.q_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    pub fn value(&self, p_index: usize, q_index: usize) -> f64 {
        self.values[p_index * self.q_axis.len() + q_index]
    }

    /// `(p, q, value)` in p-major, q-minor order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.p_axis.iter().enumerate().flat_map(move |(i, &p)| {
            self.q_axis
                .iter()
                .enumerate()
                .map(move |(j, &q)| (p, q, self.value(i, j)))
        })
    }

    /// Survival estimate of one Monte Carlo cell, rebuilt from its frequency.
    pub fn survival_estimate(&self, p_index: usize, q_index: usize) -> SurvivalEstimate {
        let trials = self.meta.trials.max(1);
        let successes = (self.value(p_index, q_index) * trials as f64).round() as u64;
        SurvivalEstimate::from_counts(successes, trials, self.meta.explosion_threshold, self.meta.seed)
    }
}

/// Equally spaced axis from `lo` to `hi` inclusive, `i`-th point
/// `lo + (hi - lo) · i / n` with `n = round((hi - lo) / step)`.
pub fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {step}")));
    }
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Domain(format!("range [{lo}, {hi}] must lie in [0, 1]")));
    }
    let n = ((hi - lo) / step).round() as usize;
    if n == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub p_range: (f64, f64),
    pub q_range: (f64, f64),
    pub step: f64,
    pub trials: u64,
    pub explosion_threshold: u64,
    pub seed: u64,
    pub estimator: Estimator,
    /// Worker threads; `None` uses the global pool. Never changes results.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p_range: (0.0, 1.0),
            q_range: (0.0, 1.0),
            step: DEFAULT_GRID_STEP,
            trials: crate::coop::DEFAULT_TRIALS,
            explosion_threshold: crate::coop::DEFAULT_EXPLOSION_THRESHOLD,
            seed: 0,
            estimator: Estimator::McSurvival,
            jobs: None,
        }
    }
}

pub fn sweep(config: &SweepConfig) -> Result<PhaseGrid> {
    let p_axis = axis(config.p_range.0, config.p_range.1, config.step)?;
    let q_axis = axis(config.q_range.0, config.q_range.1, config.step)?;
    let is_mc = config.estimator != Estimator::HIndicator;
    if is_mc && (config.trials == 0 || config.explosion_threshold < 2) {
        return Err(Error::Precondition(
            "Monte Carlo sweeps need trials >= 1 and threshold >= 2".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..p_axis.len())
        .flat_map(|i| (0..q_axis.len()).map(move |j| (i, j)))
        .collect();
    let compute = || -> Result<Vec<f64>> {
        cells
            .par_iter()
            .map(|&(i, j)| {
                let params = CoopParams::new(p_axis[i], q_axis[j])?;
                match config.estimator {
                    Estimator::HIndicator => Ok(h_polynomial(&params)),
                    Estimator::McSurvival => survival_counts(
                        &params,
                        config.trials,
                        config.explosion_threshold,
                        config.seed,
                        i as u64,
                        j as u64,
                        false,
                    )
                    .map(|e| e.estimate),
                    Estimator::CoupledMcSurvival => survival_counts(
                        &params,
                        config.trials,
                        config.explosion_threshold,
                        config.seed,
                        0,
                        0,
                        true,
                    )
                    .map(|e| e.estimate),
                }
            })
            .collect()
    };
    let values = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    let meta = GridMeta {
        seed: config.seed,
        trials: if is_mc { config.trials } else { 0 },
        explosion_threshold: if is_mc { config.explosion_threshold } else { 0 },
        grid_step: config.step,
        estimator_name: config.estimator.name().to_string(),
    };
    PhaseGrid::new(p_axis, q_axis, values, meta)
}

pub const CSV_HEADER: &str = "p,q,value,trials,threshold,seed";

/// CSV text: header then one row per cell in p-major, q-minor order, floats
/// in shortest round-trip form, LF line endings.
pub fn to_csv(grid: &PhaseGrid) -> String {
    let m = &grid.meta;
    let mut out = String::with_capacity(32 * (grid.values.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (p, q, v) in grid.cells() {
        let _ = writeln!(
            out,
            "{p:?},{q:?},{v:?},{},{},{}",
            m.trials, m.explosion_threshold, m.seed
        );
    }
    out
}

pub fn export_csv(grid: &PhaseGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(grid))?;
    Ok(())
}

/// Reads a grid written by [`export_csv`]. The estimator name is not part
/// of the file and is set to `"imported"`; the step is recovered from the
/// axes.
pub fn import_csv(path: impl AsRef<Path>) -> Result<PhaseGrid> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Parse(format!("expected header `{CSV_HEADER}`"))),
    }
    let mut p_axis: Vec<f64> = Vec::new();
    let mut q_axis: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    let mut meta = (0u64, 0u64, 0u64);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!("line {}: expected 6 fields", lineno + 2)));
        }
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        };
        let (p, q, v) = (float(fields[0])?, float(fields[1])?, float(fields[2])?);
        meta = (int(fields[3])?, int(fields[4])?, int(fields[5])?);
        if p_axis.last() != Some(&p) {
            p_axis.push(p);
        }
        if p_axis.len() == 1 {
            q_axis.push(q);
        }
        values.push(v);
    }
    let grid_step = match (p_axis.len(), q_axis.len()) {
        (n, _) if n > 1 => p_axis[1] - p_axis[0],
        (_, n) if n > 1 => q_axis[1] - q_axis[0],
        _ => 0.0,
    };
    PhaseGrid::new(
        p_axis,
        q_axis,
        values,
        GridMeta {
            seed: meta.2,
            trials: meta.0,
            explosion_threshold: meta.1,
            grid_step,
            estimator_name: "imported".into(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Svg,
}

impl ImageFormat {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ppm" => Some(ImageFormat::Ppm),
            "svg" => Some(ImageFormat::Svg),
            _ => None,
        }
    }
}

/// Critical-curve samples `p = 0.5, 0.51, ...` clipped to the grid's `p`
/// range; values without a crossing are skipped.
pub fn critical_overlay(grid: &PhaseGrid) -> Vec<CriticalPoint> {
    let lo = grid.p_axis[0].max(0.5);
    let hi = *grid.p_axis.last().expect("nonempty axis");
    if lo > hi {
        return Vec::new();
    }
    let n = ((hi - lo) / OVERLAY_P_STEP).round() as usize;
    let ps = (0..=n).map(move |i| if n == 0 { lo } else { lo + (hi - lo) * i as f64 / n as f64 });
    critical_curve(ps, crate::coop::DEFAULT_BISECTION_TOL)
}

/// Gray level in `0..=255`, light meaning survival. `h` grids are shown as
/// the indicator of `h > 1`.
fn gray(grid: &PhaseGrid, value: f64) -> u8 {
    let t = if grid.meta.estimator_name == Estimator::HIndicator.name() {
        if value > 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        value.clamp(0.0, 1.0)
    };
    (t * 255.0).round() as u8
}

const OVERLAY_RGB: [u8; 3] = [0, 170, 0];

/// Continuous pixel coordinates of `(q, p)`, cell centres at half-integers
/// times `scale`, `p` increasing upwards.
fn to_pixel(grid: &PhaseGrid, q: f64, p: f64, scale: f64) -> (f64, f64) {
    let span = |axis: &[f64], v: f64| {
        if axis.len() < 2 {
            0.5
        } else {
            let d = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
            (v - axis[0]) / d + 0.5
        }
    };
    let height = grid.p_axis.len() as f64 * scale;
    (span(&grid.q_axis, q) * scale, height - span(&grid.p_axis, p) * scale)
}

/// Binary PPM (P6, maxval 255) of `|q_axis|·scale` by `|p_axis|·scale`
/// pixels.
pub fn render_ppm(grid: &PhaseGrid, overlay: Option<&[CriticalPoint]>, scale: u32) -> Vec<u8> {
    let scale = scale.max(1) as usize;
    let (w, h) = (grid.q_axis.len() * scale, grid.p_axis.len() * scale);
    let mut pixels = vec![0u8; w * h * 3];
    for row in 0..h {
        let i = grid.p_axis.len() - 1 - row / scale;
        for col in 0..w {
            let g = gray(grid, grid.value(i, col / scale));
            let k = (row * w + col) * 3;
            pixels[k..k + 3].copy_from_slice(&[g, g, g]);
        }
    }
    if let Some(points) = overlay {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .map(|c| to_pixel(grid, c.q, c.p, scale as f64))
            .collect();
        let mut plot = |x: f64, y: f64| {
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                let k = ((y as usize) * w + x as usize) * 3;
                pixels[k..k + 3].copy_from_slice(&OVERLAY_RGB);
            }
        };
        for pair in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                plot(x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            }
        }
        if let [(x, y)] = pts[..] {
            plot(x, y);
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    out
}

/// SVG 1.1 document: one `rect` per cell, the critical curve as a dashed
/// `polyline`, axis labels and a legend.
pub fn render_svg(grid: &PhaseGrid, overlay: Option<&[CriticalPoint]>, scale: u32) -> String {
    let s = f64::from(scale.max(1));
    let (margin_l, margin_b, margin_t) = (40.0, 40.0, 10.0);
    let w = grid.q_axis.len() as f64 * s;
    let h = grid.p_axis.len() as f64 * s;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}">"#,
        w + margin_l + 10.0,
        h + margin_b + margin_t
    );
    let _ = writeln!(out, r#"<g transform="translate({margin_l},{margin_t})">"#);
    for (i, _) in grid.p_axis.iter().enumerate() {
        let y = h - (i as f64 + 1.0) * s;
        for (j, _) in grid.q_axis.iter().enumerate() {
            let g = gray(grid, grid.value(i, j));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{y}" width="{s}" height="{s}" fill="rgb({g},{g},{g})"/>"#,
                j as f64 * s
            );
        }
    }
    if let Some(points) = overlay.filter(|p| !p.is_empty()) {
        let coords: Vec<String> = points
            .iter()
            .map(|c| {
                let (x, y) = to_pixel(grid, c.q, c.p, s);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="rgb(0,170,0)" stroke-width="2" stroke-dasharray="6,4"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="14" font-size="12" fill="rgb(0,170,0)">h(p,q)=1</text>"#,
            (w - 60.0).max(0.0)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">q</text>"#,
        margin_l + w / 2.0,
        margin_t + h + 28.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="14" text-anchor="middle">p</text>"#,
        margin_t + h / 2.0
    );
    out.push_str("</svg>\n");
    out
}

pub fn render_heatmap(
    grid: &PhaseGrid,
    path: impl AsRef<Path>,
    overlay: Option<&[CriticalPoint]>,
    format: ImageFormat,
    scale: u32,
) -> Result<()> {
    let mut file = fs::File::create(path)?;
    match format {
        ImageFormat::Ppm => file.write_all(&render_ppm(grid, overlay, scale))?,
        ImageFormat::Svg => file.write_all(render_svg(grid, overlay, scale).as_bytes())?,
    }
    Ok(())
}
