//! SVG figures from result CSVs and decision-region maps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use plotters::prelude::*;
use ponsim::detection::DecisionRegionMap;

use crate::output::{read_rows, ResultRow, SCHEMA_LINE};

const PALETTE: [RGBColor; 8] = [
    RGBColor(0, 0, 0),
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(140, 86, 75),
    RGBColor(23, 190, 207),
];

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn series(rows: &[&ResultRow], by_beta2: bool) -> Series {
    let mut s: Series = BTreeMap::new();
    for r in rows {
        let x = if by_beta2 { r.beta2_ps2_per_km.unwrap_or(f64::NAN).abs() } else { r.power_dbm };
        let label = if r.metric == "air_th" || r.metric == "air_rs" {
            format!("{} {}", r.model, r.metric)
        } else if rows.iter().any(|o| o.tod != r.tod) {
            format!("{} tod={}", r.model, r.tod)
        } else {
            r.model.clone()
        };
        s.entry(label).or_default().push((x, r.value));
    }
    for v in s.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    s
}

fn bounds(s: &Series, log: bool) -> (f64, f64) {
    let vals = s.values().flatten().map(|p| p.1).filter(|v| v.is_finite() && (!log || *v > 0.0));
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return if log { (1e-12, 1.0) } else { (0.0, 1.0) };
    }
    if log {
        (lo / 2.0, hi * 2.0)
    } else if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn xbounds(s: &Series) -> (f64, f64) {
    let (lo, hi) = s
        .values()
        .flatten()
        .map(|p| p.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn line_plot(path: &Path, title: &str, xlabel: &str, ylabel: &str, s: &Series, log_x: bool, log_y: bool) -> Result<()> {
    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let (x0, x1) = xbounds(s);
    let (y0, y1) = bounds(s, log_y);
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 22)).margin(15).x_label_area_size(45).y_label_area_size(80);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw()?;
            for (i, (label, pts)) in s.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| !log_y || p.1 > 0.0).collect();
                chart
                    .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))?
                    .label(label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
            }
            chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
        }};
    }
    match (log_x, log_y) {
        (false, false) => draw!(builder.build_cartesian_2d(x0..x1, y0..y1)?),
        (false, true) => draw!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale())?),
        (true, false) => draw!(builder.build_cartesian_2d((x0..x1).log_scale(), y0..y1)?),
        (true, true) => draw!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())?),
    }
    root.present()?;
    Ok(())
}

const REGION_COLORS: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(255, 187, 120),
];

/// Decision map as horizontal runs of equal decisions.
fn region_plot(path: &Path, title: &str, map: &DecisionRegionMap) -> Result<()> {
    let root = SVGBackend::new(path, (700, 700)).into_drawing_area();
    root.fill(&WHITE)?;
    let half = map.bins as f64 / 2.0 * 0.01;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(-half..half, -half..half)?;
    chart.configure_mesh().x_desc("In-phase").y_desc("Quadrature").disable_mesh().draw()?;
    let n = map.bins;
    let step = 2.0 * half / n as f64;
    let mut rects = Vec::new();
    for r in 0..n {
        let row = &map.indices[r * n..(r + 1) * n];
        let mut c = 0;
        while c < n {
            let v = row[c];
            let start = c;
            while c < n && row[c] == v {
                c += 1;
            }
            let (x0, x1) = (-half + start as f64 * step, -half + c as f64 * step);
            let (y0, y1) = (-half + r as f64 * step, -half + (r + 1) as f64 * step);
            rects.push(Rectangle::new([(x0, y0), (x1, y1)], REGION_COLORS[v as usize % 4].filled()));
        }
    }
    chart.draw_series(rects)?;
    root.present()?;
    Ok(())
}

/// Writes one SVG per figure found in `csv`; returns the files written.
pub fn emit_plots(csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let text = std::fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let stem = csv.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    if text.starts_with("# decision-region-map") {
        let map = DecisionRegionMap::read_csv(&text)?;
        let path = out_dir.join(format!("{stem}.svg"));
        region_plot(&path, &stem, &map)?;
        return Ok(vec![path]);
    }
    if !text.starts_with(SCHEMA_LINE) {
        bail!("{}: not a results or decision-map CSV", csv.display());
    }
    let rows = read_rows(csv)?;
    if rows.is_empty() {
        bail!("{}: no result rows", csv.display());
    }
    let mut out = Vec::new();
    let pick = |metrics: &[&str]| -> Vec<&ResultRow> { rows.iter().filter(|r| metrics.contains(&r.metric.as_str())).collect() };
    let nsd = pick(&["nsd_percent"]);
    if !nsd.is_empty() {
        let by_b2 = nsd.iter().all(|r| r.beta2_ps2_per_km.is_some());
        let path = out_dir.join(format!("{stem}-nsd.svg"));
        let xl = if by_b2 { "|beta2| [ps^2/km]" } else { "Launch power [dBm]" };
        line_plot(&path, &format!("{stem}: NSD"), xl, "NSD [%]", &series(&nsd, by_b2), by_b2, true)?;
        out.push(path);
    }
    let ber = pick(&["ber"]);
    if !ber.is_empty() {
        let path = out_dir.join(format!("{stem}-ber.svg"));
        line_plot(&path, &format!("{stem}: BER"), "Launch power [dBm]", "BER", &series(&ber, false), false, true)?;
        out.push(path);
    }
    let air = pick(&["air_th", "air_rs"]);
    if !air.is_empty() {
        let path = out_dir.join(format!("{stem}-air.svg"));
        line_plot(&path, &format!("{stem}: AIR"), "Launch power [dBm]", "AIR [bit/symbol]", &series(&air, false), false, false)?;
        out.push(path);
    }
    if out.is_empty() {
        bail!("{}: nothing to plot", csv.display());
    }
    Ok(out)
}
