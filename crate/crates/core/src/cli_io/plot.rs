use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::output::{list_snapshots, read_diagnostics, read_snapshot, DIAGNOSTICS_FILE};
use crate::Error;

fn draw_err(path: &Path) -> impl Fn(String) -> Error + '_ {
    move |msg| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(msg),
    }
}

fn range(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        1e-12_f64.max(lo.abs() * 1e-6)
    };
    (lo - pad, hi + pad)
}

fn line_chart(
    path: &Path,
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    y_label: &str,
) -> Result<(), Error> {
    let err = draw_err(path);
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(e.to_string()))?;
    chart
        .configure_mesh()
        .y_desc(y_label)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(e.to_string()))?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    root.present().map_err(|e| err(e.to_string()))?;
    Ok(())
}

/// Reads the outputs of a run in `dir` and writes `energy.svg`, `alpha.svg` and
/// `velocity.svg` next to them. Returns the written paths.
pub fn plot_outputs(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let diag = read_diagnostics(&dir.join(DIAGNOSTICS_FILE))?;
    let mut written = Vec::new();

    let p = dir.join("energy.svg");
    let pts: Vec<(f64, f64)> = diag.iter().map(|d| (d.t, d.energy)).collect();
    line_chart(&p, "total energy", &[("E".into(), pts)], "E")?;
    written.push(p);

    let snaps = list_snapshots(dir)?;
    let mut alpha = Vec::new();
    let mut vel = Vec::new();
    for s in &snaps {
        let snap = read_snapshot(s)?;
        let name = s
            .file_stem()
            .and_then(|n| n.to_str())
            .unwrap_or("snapshot")
            .to_string();
        // alpha / rho is flat for a homogeneous stretch, which makes deviations visible
        alpha.push((
            name.clone(),
            snap.rho
                .iter()
                .zip(&snap.alpha)
                .skip(1)
                .map(|(r, a)| (*r, a / r))
                .collect(),
        ));
        vel.push((
            name,
            snap.rho
                .iter()
                .copied()
                .zip(snap.v.iter().copied())
                .collect(),
        ));
    }
    let p = dir.join("alpha.svg");
    line_chart(&p, "alpha / rho", &alpha, "alpha/rho")?;
    written.push(p);
    let p = dir.join("velocity.svg");
    line_chart(&p, "velocity", &vel, "v")?;
    written.push(p);
    Ok(written)
}
