//! SVG figures drawn from the CSV artifacts of a run.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::analysis::{reference_distribution, RmtKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct PlotReport {
    /// Paths relative to the output directory.
    pub written: Vec<PathBuf>,
    pub notes: Vec<String>,
}

type Series = (String, Vec<(f64, f64)>);

const PALETTE: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn num(s: &str) -> f64 {
    s.trim().parse().unwrap_or(f64::NAN)
}

fn plot_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Io(std::io::Error::other(format!("plot: {e:?}")))
}

fn bounds(series: &[Series], extra: &[f64], log_y: bool) -> Option<((f64, f64), (f64, f64))> {
    let pts = || series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0));
    let x0 = pts().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x1 = pts().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut y0 = pts().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut y1 = pts().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !x0.is_finite() {
        return None;
    }
    for &e in extra {
        y0 = y0.min(e);
        y1 = y1.max(e);
    }
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
    if log_y {
        return Some(((x0, x1), (y0 * 0.8, y1 * 1.25)));
    }
    let pad = ((y1 - y0) * 0.08).max(1e-3);
    Some(((x0, x1), (y0 - pad, y1 + pad)))
}

fn line_plot(path: &Path, title: &str, labels: (&str, &str), series: &[Series], hlines: &[(String, f64)], log: bool) -> Result<bool> {
    let extra: Vec<f64> = hlines.iter().map(|h| h.1).collect();
    let Some(((x0, x1), (y0, y1))) = bounds(series, &extra, log) else {
        return Ok(false);
    };
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(60);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(labels.0).y_desc(labels.1).draw().map_err(plot_err)?;
            for (k, (name, pts)) in series.iter().enumerate() {
                let c = PALETTE[k % PALETTE.len()];
                let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1.is_finite() && (!log || p.1 > 0.0)).collect();
                chart
                    .draw_series(LineSeries::new(pts, c.stroke_width(2)))
                    .map_err(plot_err)?
                    .label(name.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
            }
            for (k, (name, y)) in hlines.iter().enumerate() {
                let c = PALETTE[(series.len() + k) % PALETTE.len()];
                chart
                    .draw_series(LineSeries::new(vec![(x0, *y), (x1, *y)], c.stroke_width(1)))
                    .map_err(plot_err)?
                    .label(name.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
            }
            chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
        }};
    }
    if log {
        draw!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale()).map_err(plot_err)?);
    } else {
        draw!(builder.build_cartesian_2d(x0..x1, y0..y1).map_err(plot_err)?);
    }
    root.present().map_err(plot_err)?;
    Ok(true)
}

fn histogram_plot(path: &Path, title: &str, bars: &[(f64, f64)], refs: &[Series]) -> Result<bool> {
    if bars.is_empty() {
        return Ok(false);
    }
    let width = if bars.len() > 1 { bars[1].0 - bars[0].0 } else { 1.0 };
    let ymax = bars.iter().map(|b| b.1).chain(refs.iter().flat_map(|r| r.1.iter().map(|p| p.1))).fold(0.0, f64::max);
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..1.0, 0.0..ymax * 1.1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("r").y_desc("P(r)").draw().map_err(plot_err)?;
    chart
        .draw_series(bars.iter().map(|&(c, d)| {
            Rectangle::new([(c - width / 2.0, 0.0), (c + width / 2.0, d)], BLUE.mix(0.35).filled())
        }))
        .map_err(plot_err)?;
    for (k, (name, pts)) in refs.iter().enumerate() {
        let c = PALETTE[(k + 1) % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.clone(), c.stroke_width(2)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(true)
}

fn csv_files(dir: &Path, prefix: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        .collect();
    out.sort();
    Ok(out)
}

/// Draws every figure whose data exists in `dir`. Empty datasets are skipped
/// with a note rather than producing an empty figure.
pub fn emit_plots(dir: &Path) -> Result<PlotReport> {
    let mut report = PlotReport::default();
    let finish = |report: &mut PlotReport, csv: &str, drawn: bool| {
        let svg = csv.replace(".csv", ".svg");
        if drawn {
            report.written.push(PathBuf::from(svg));
        } else {
            report.notes.push(format!("{csv}: no finite data, figure skipped"));
        }
    };
    let reference: Vec<(RmtKind, f64)> =
        [RmtKind::Poisson, RmtKind::Gue].iter().map(|&k| (k, reference_distribution(k).mean)).collect();

    for csv in csv_files(dir, "gap_ratio_")? {
        let rows = read_csv(&dir.join(&csv))?;
        let pts = rows.iter().map(|r| (num(&r[0]), num(&r[1]))).collect();
        let hl: Vec<(String, f64)> = reference.iter().map(|(k, m)| (format!("{} mean", k.name()), *m)).collect();
        let drawn = line_plot(&dir.join(csv.replace(".csv", ".svg")), "mean gap ratio", ("g t", "<r>"), &[("data".into(), pts)], &hl, false)?;
        finish(&mut report, &csv, drawn);
    }
    for csv in csv_files(dir, "entropy_")? {
        let rows = read_csv(&dir.join(&csv))?;
        let series: Vec<Series> = ["S_vN", "S_sym", "S_dist"]
            .iter()
            .enumerate()
            .map(|(k, n)| (n.to_string(), rows.iter().map(|r| (num(&r[0]), num(&r[k + 1]))).collect()))
            .collect();
        let drawn = line_plot(&dir.join(csv.replace(".csv", ".svg")), "entanglement entropy", ("g t", "S"), &series, &[], false)?;
        finish(&mut report, &csv, drawn);
    }
    for csv in csv_files(dir, "observables_")? {
        let rows = read_csv(&dir.join(&csv))?;
        let mut qubits: Vec<usize> = rows.iter().filter_map(|r| r[1].parse().ok()).collect();
        qubits.sort();
        qubits.dedup();
        let series: Vec<Series> = qubits
            .iter()
            .map(|&q| {
                let pts = rows.iter().filter(|r| r[1].parse() == Ok(q)).map(|r| (num(&r[0]), num(&r[2]))).collect();
                (format!("Z{q}"), pts)
            })
            .collect();
        let drawn = line_plot(&dir.join(csv.replace(".csv", ".svg")), "single-site Z", ("g t", "<Z>"), &series, &[], false)?;
        finish(&mut report, &csv, drawn);
    }
    for csv in csv_files(dir, "esff_")? {
        let rows = read_csv(&dir.join(&csv))?;
        let pts = rows.iter().map(|r| (num(&r[0]), num(&r[1]))).collect();
        let drawn = line_plot(&dir.join(csv.replace(".csv", ".svg")), "spectral form factor", ("theta", "F"), &[("mean".into(), pts)], &[], true)?;
        finish(&mut report, &csv, drawn);
    }
    let refs: Vec<Series> = [RmtKind::Poisson, RmtKind::Goe, RmtKind::Gue]
        .iter()
        .map(|&k| {
            let d = reference_distribution(k);
            (k.name().to_string(), (0..=100).map(|i| i as f64 / 100.0).map(|r| (r, d.density(r))).collect())
        })
        .collect();
    for csv in csv_files(dir, "egrd_")? {
        let rows = read_csv(&dir.join(&csv))?;
        let mut regimes: Vec<String> = rows.iter().map(|r| r[0].clone()).collect();
        regimes.dedup();
        if regimes.is_empty() {
            finish(&mut report, &csv, false);
        }
        for reg in regimes {
            let bars: Vec<(f64, f64)> = rows.iter().filter(|r| r[0] == reg).map(|r| (num(&r[1]), num(&r[2]))).collect();
            let name = csv.replace(".csv", &format!("_regime{reg}.csv"));
            let drawn = histogram_plot(&dir.join(name.replace(".csv", ".svg")), &format!("gap ratio distribution, regime {reg}"), &bars, &refs)?;
            finish(&mut report, &name, drawn);
        }
    }
    Ok(report)
}
