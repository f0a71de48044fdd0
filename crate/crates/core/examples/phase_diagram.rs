//! Coarse phase diagram over the (p, q) square, written as CSV, PPM and SVG
//! with the critical curve drawn on top.
//!
//! ```bash
//! cargo run --release --example phase_diagram -- out/
//! ```

use std::path::PathBuf;

use branchsurv::phase::{
    critical_overlay, export_csv, render_heatmap, sweep, Estimator, ImageFormat, SweepConfig,
};

fn main() -> branchsurv::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out)?;

    let grid = sweep(&SweepConfig {
        step: 0.05,
        trials: 200,
        explosion_threshold: 100_000,
        seed: 11,
        estimator: Estimator::McSurvival,
        ..SweepConfig::default()
    })?;
    let overlay = critical_overlay(&grid);
    export_csv(&grid, out.join("phase.csv"))?;
    render_heatmap(&grid, out.join("phase.ppm"), Some(&overlay), ImageFormat::Ppm, 8)?;
    render_heatmap(&grid, out.join("phase.svg"), Some(&overlay), ImageFormat::Svg, 12)?;

    let h = sweep(&SweepConfig {
        step: 0.01,
        estimator: Estimator::HIndicator,
        ..SweepConfig::default()
    })?;
    render_heatmap(&h, out.join("h_region.ppm"), Some(&overlay), ImageFormat::Ppm, 2)?;

    // crude text rendering, high p on top
    for i in (0..grid.p_axis().len()).rev().step_by(2) {
        let row: String = (0..grid.q_axis().len())
            .map(|j| match grid.value(i, j) {
                v if v > 0.5 => '#',
                v if v > 0.05 => '+',
                _ => '.',
            })
            .collect();
        println!("{:.2} {row}", grid.p_axis()[i]);
    }
    println!("wrote phase.csv, phase.ppm, phase.svg, h_region.ppm to {}", out.display());
    Ok(())
}
