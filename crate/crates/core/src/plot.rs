//! SVG figures for each command.

use std::f64::consts::PI;
use std::ops::Range;
use std::path::Path;

use plotters::coord::Shift;
use plotters::prelude::*;

use crate::analysis::{PhaseBoundary, Spectrum};
use crate::experiment::{EpsilonScan, PeakReport, Z2z2Result};
use crate::propagate::TimeSeries;
use crate::{Error, Result};

type Area<'a> = DrawingArea<SVGBackend<'a>, Shift>;

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn padded(lo: f64, hi: f64) -> Range<f64> {
    if !(hi > lo) {
        return lo - 1.0..lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    lo - pad..hi + pad
}

fn bounds(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn series_panel(area: &Area, title: &str, series: &[&TimeSeries]) -> Result<()> {
    let (t0, t1) = bounds(series.iter().flat_map(|s| s.times.iter().copied()));
    let (v0, v1) = bounds(series.iter().flat_map(|s| s.values.iter().copied()));
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(padded(t0, t1), padded(v0, v1))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("t (us)")
        .y_desc("<Sx>")
        .draw()
        .map_err(plot_err)?;
    for (k, s) in series.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(
                s.times.iter().copied().zip(s.values.iter().copied()),
                color.stroke_width(1),
            ))
            .map_err(plot_err)?
            .label(s.observable.label())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
    }
    if series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    Ok(())
}

/// Magnitude against ν/ω₁ with vertical markers at `marks` (in units of ω₁).
fn spectrum_panel(area: &Area, title: &str, spec: &Spectrum, omega1: f64, marks: &[f64]) -> Result<()> {
    let x: Vec<f64> = spec.frequencies().iter().map(|f| f / omega1).collect();
    let (_, m1) = bounds(spec.magnitudes.iter().copied());
    let top = if m1 > 0.0 { 1.05 * m1 } else { 1.0 };
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(x[0]..*x.last().unwrap_or(&1.0), 0.0..top)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("omega / omega1")
        .y_desc("|S|")
        .draw()
        .map_err(plot_err)?;
    for &m in marks {
        chart
            .draw_series(LineSeries::new(vec![(m, 0.0), (m, top)], RED.mix(0.5).stroke_width(1)))
            .map_err(plot_err)?;
    }
    chart
        .draw_series(LineSeries::new(
            x.iter().copied().zip(spec.magnitudes.iter().copied()),
            BLUE.stroke_width(1),
        ))
        .map_err(plot_err)?;
    Ok(())
}

/// f(ε) for several labelled curves, with the threshold as a dashed level.
fn fraction_panel(area: &Area, title: &str, curves: &[(String, Vec<(f64, f64)>)], threshold: f64) -> Result<()> {
    let (e0, e1) = bounds(curves.iter().flat_map(|c| c.1.iter().map(|p| p.0)));
    let (_, f1) = bounds(curves.iter().flat_map(|c| c.1.iter().map(|p| p.1)));
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(padded(e0, e1), 0.0..(f1.max(threshold) * 1.1))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("epsilon")
        .y_desc("f")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(DashedLineSeries::new(
            vec![(e0, threshold), (e1, threshold)],
            4,
            4,
            BLACK.stroke_width(1),
        ))
        .map_err(plot_err)?;
    for (k, (label, curve)) in curves.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(curve.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
        chart
            .draw_series(curve.iter().map(|&p| Circle::new(p, 2, color.filled())))
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

fn finish(root: Area) -> Result<()> {
    root.present().map_err(plot_err)
}

/// Time trace above its spectrum, predicted lines marked.
pub fn plot_trace(path: &Path, series: &TimeSeries, spectrum: &Spectrum, tau1: f64, peaks: &[PeakReport]) -> Result<()> {
    let root = SVGBackend::new(path, (900, 700)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(330);
    series_panel(&top, "disorder-averaged trace", &[series])?;
    let marks: Vec<f64> = peaks.iter().map(|p| p.predicted_over_omega1).collect();
    spectrum_panel(&bottom, "spectrum (red: predicted lines)", spectrum, 2.0 * PI / tau1, &marks)?;
    finish(root)
}

/// ε against ν/ω₁ coloured by magnitude, with f(ε) for each peak below.
pub fn plot_scan(path: &Path, scan: &EpsilonScan, threshold: f64) -> Result<()> {
    let root = SVGBackend::new(path, (900, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(450);
    let omega1 = 2.0 * PI / scan.tau1;
    let grid = scan.spectra[0].grid;
    let (x0, x1) = (grid.start / omega1, grid.end() / omega1);
    let dx = grid.step / omega1;
    let eps = &scan.epsilons;
    let de = if eps.len() > 1 { (eps[eps.len() - 1] - eps[0]) / (eps.len() - 1) as f64 } else { 0.01 };
    let mut chart = ChartBuilder::on(&top)
        .caption(format!("spectra vs epsilon, tau1 = {} us", scan.tau1), ("sans-serif", 16))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, (eps[0] - 0.5 * de)..(eps[eps.len() - 1] + 0.5 * de))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("omega / omega1")
        .y_desc("epsilon")
        .draw()
        .map_err(plot_err)?;
    for (e, spec) in eps.iter().zip(&scan.spectra) {
        let (_, peak) = bounds(spec.magnitudes.iter().copied());
        let norm = if peak > 0.0 { peak } else { 1.0 };
        chart
            .draw_series(spec.magnitudes.iter().enumerate().map(|(k, m)| {
                let x = grid.at(k) / omega1;
                let c = ViridisRGB::get_color((m / norm).sqrt() as f32);
                Rectangle::new([(x - 0.5 * dx, e - 0.5 * de), (x + 0.5 * dx, e + 0.5 * de)], c.filled())
            }))
            .map_err(plot_err)?;
    }
    let curves: Vec<(String, Vec<(f64, f64)>)> = scan
        .peaks
        .iter()
        .enumerate()
        .map(|(k, p)| (p.label(), scan.curve(k)))
        .collect();
    fraction_panel(&bottom, "crystalline fraction", &curves, threshold)?;
    finish(root)
}

/// ε_c⁻ and ε_c⁺ against τ₁ for each peak.
pub fn plot_boundaries(path: &Path, boundaries: &[PhaseBoundary]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (t0, t1) = bounds(boundaries.iter().flat_map(|b| b.tau1_values.iter().copied()));
    let (e0, e1) = bounds(
        boundaries
            .iter()
            .flat_map(|b| b.eps_c_minus.iter().chain(&b.eps_c_plus).copied()),
    );
    let mut chart = ChartBuilder::on(&root)
        .caption("phase boundary", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(padded(t0, t1), padded(e0, e1))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("tau1 (us)")
        .y_desc("epsilon_c")
        .draw()
        .map_err(plot_err)?;
    for (k, b) in boundaries.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        for side in [&b.eps_c_minus, &b.eps_c_plus] {
            let pts: Vec<(f64, f64)> = b.tau1_values.iter().copied().zip(side.iter().copied()).collect();
            chart
                .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
                .map_err(plot_err)?;
            chart
                .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
        chart
            .draw_series(std::iter::once(PathElement::new(Vec::<(f64, f64)>::new(), color)))
            .map_err(plot_err)?
            .label(b.peak.label())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    finish(root)
}

/// Group traces, both spectra, and f(ε) with and without interactions.
pub fn plot_z2z2(path: &Path, z: &Z2z2Result, phi: f64, threshold: f64) -> Result<()> {
    let root = SVGBackend::new(path, (1200, 900)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((2, 2));
    let shown: Vec<&TimeSeries> = z.traces[..3].iter().collect();
    series_panel(&panels[0], "dense-sampled traces, epsilon = 0", &shown)?;
    let omega1 = 2.0 * PI / z.tau1;
    let lines: Vec<f64> = crate::experiment::z2z2_predicted(phi).iter().map(|l| l.1).collect();
    spectrum_panel(&panels[1], "total Sx, dense sampling", &z.dense_spectrum, omega1, &lines)?;
    spectrum_panel(&panels[2], "total Sx, pulse-time sampling", &z.quasi_spectrum, omega1, &lines)?;
    let curves = vec![
        ("interacting".to_string(), z.interacting.curve(0)),
        ("decoupled".to_string(), z.decoupled.curve(0)),
    ];
    fraction_panel(&panels[3], "f at omega1/2", &curves, threshold)?;
    finish(root)
}
