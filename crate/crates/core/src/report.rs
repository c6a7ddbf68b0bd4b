//! CSV and SVG artifacts: rate tables, spectra, sparsity plots and rate plots.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::RateRecord;
use crate::eigsolve::Spectrum;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const RATE_HEADER: &str = "n_c,lambda_next,theory_rate,robust_rate,rho_exact,err_rate,res_rate,iters";

/// Writes records as CSV. Floats use Rust's shortest round-trip formatting,
/// so reading them back is lossless.
pub fn write_rates_csv(out: impl Write, records: &[RateRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // explicit header so an empty table still reads back
    w.write_record(RATE_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rates_csv(input: impl Read) -> Result<Vec<RateRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != RATE_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header `{}`", header.join(",")) });
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

pub fn save_rates_csv(path: &Path, records: &[RateRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_rates_csv(&mut buf, records)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Columns `index,lambda,norm_sign,imag`; `imag` is zero outside complex blocks.
pub fn write_spectrum_csv(out: impl Write, spec: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "lambda", "norm_sign", "imag"])?;
    for i in 0..spec.len() {
        w.write_record([
            i.to_string(),
            spec.values[i].to_string(),
            spec.norm_signs[i].to_string(),
            spec.imag[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Square,
    Triangle,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub marker: Marker,
    pub line: bool,
    pub color: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InvalidArgument("plot has no series".into()));
        }
        for s in &self.series {
            if s.points.is_empty() {
                return Err(Error::InvalidArgument(format!("series `{}` is empty", s.name)));
            }
            if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(Error::InvalidArgument(format!("series `{}` has non-finite points", s.name)));
            }
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const SVG_OPEN: &str = r#"<?xml version="1.0" encoding="UTF-8"?>"#;

/// SVG spy plot with one square per stored entry. With `block_k`, the
/// quadrant boundaries of a `2k x 2k` block operator are drawn.
pub fn spy_svg_string(m: &SparseMatrix, block_k: Option<usize>) -> String {
    let (rows, cols) = (m.n_rows().max(1), m.n_cols().max(1));
    let plot = 480.0;
    let margin = 50.0;
    let cell_w = plot / cols as f64;
    let cell_h = plot / rows as f64;
    let size = plot + 2.0 * margin;
    let mut s = String::new();
    writeln!(s, "{SVG_OPEN}").unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(s, r#"<g id="marks" fill="navy">"#).unwrap();
    for (i, j, _) in m.triplets() {
        writeln!(
            s,
            r#"<rect class="nz" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
            margin + j as f64 * cell_w,
            margin + i as f64 * cell_h,
            cell_w,
            cell_h
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    if let Some(k) = block_k {
        let x = margin + k as f64 * cell_w;
        let y = margin + k as f64 * cell_h;
        writeln!(
            s,
            r#"<g id="blocks" stroke="firebrick" stroke-dasharray="4 3"><line x1="{x:.3}" y1="{margin}" x2="{x:.3}" y2="{:.3}"/><line x1="{margin}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}"/></g>"#,
            margin + plot,
            margin + plot
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">columns (n = {})</text>"#,
        margin + plot / 2.0,
        margin - 15.0,
        m.n_cols()
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 {:.1} {:.1})">rows (n = {})</text>"#,
        margin - 15.0,
        margin + plot / 2.0,
        margin - 15.0,
        margin + plot / 2.0,
        m.n_rows()
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">nnz = {}</text>"#,
        margin + plot / 2.0,
        margin + plot + 30.0,
        m.nnz()
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}

pub fn spy_svg(m: &SparseMatrix, block_k: Option<usize>, out_path: &Path) -> Result<()> {
    fs::write(out_path, spy_svg_string(m, block_k))?;
    Ok(())
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn marker_svg(s: &mut String, marker: Marker, x: f64, y: f64, color: &str) {
    let r = 4.0;
    match marker {
        Marker::Circle => {
            writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="{color}"/>"#)
        }
        Marker::Square => writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="none" stroke="{color}"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        Marker::Triangle => writeln!(
            s,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}"/>"#,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r
        ),
        Marker::Cross => writeln!(
            s,
            r#"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="{color}"/>"#,
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        ),
    }
    .unwrap();
}

/// Line/scatter chart with linear axes and a legend.
pub fn plot_svg_string(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let (w, h) = (640.0, 440.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let pts = spec.series.iter().flat_map(|s| s.points.iter());
    let (xmin, xmax, ymin, ymax) = pts.fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let (xmin, xmax) = nice_range(xmin, xmax);
    // rates are nonnegative; keep zero on the axis
    let (ymin, ymax) = nice_range(ymin.min(0.0), ymax);
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| top + ph - (y - ymin) / (ymax - ymin) * ph;

    let mut s = String::new();
    writeln!(s, "{SVG_OPEN}").unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(&spec.title)
    )
    .unwrap();
    writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)
        .unwrap();

    for t in 0..=5 {
        let f = t as f64 / 5.0;
        let xv = xmin + f * (xmax - xmin);
        let yv = ymin + f * (ymax - ymin);
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            format_tick(xv)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            format_tick(yv)
        )
        .unwrap();
        writeln!(
            s,
            r##"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            sy(yv),
            left + pw,
            sy(yv)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        left + pw / 2.0,
        h - 18.0,
        escape(&spec.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&spec.y_label)
    )
    .unwrap();

    for (k, series) in spec.series.iter().enumerate() {
        writeln!(s, r#"<g class="series" id="series-{k}">"#).unwrap();
        if series.line && series.points.len() > 1 {
            let path: Vec<String> =
                series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}"/>"#,
                path.join(" "),
                series.color
            )
            .unwrap();
        }
        for &(x, y) in &series.points {
            marker_svg(&mut s, series.marker, sx(x), sy(y), series.color);
        }
        writeln!(s, "</g>").unwrap();

        let ly = top + 14.0 + 20.0 * k as f64;
        let lx = left + pw + 15.0;
        marker_svg(&mut s, series.marker, lx + 6.0, ly - 4.0, series.color);
        writeln!(
            s,
            r#"<text class="legend" x="{:.1}" y="{ly:.1}" font-size="12">{}</text>"#,
            lx + 16.0,
            escape(&series.name)
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

fn format_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".to_owned()
    } else {
        format!("{r}")
    }
}

/// Theory, exact, and both power-method rates against `n_c`.
pub fn rates_plot(records: &[RateRecord]) -> Result<PlotSpec> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no rate records to plot".into()));
    }
    let series = |name: &str, marker, line, color, f: fn(&RateRecord) -> f64| Series {
        name: name.to_owned(),
        points: records.iter().map(|r| (r.n_c as f64, f(r))).collect(),
        marker,
        line,
        color,
    };
    Ok(PlotSpec {
        title: "Two-grid convergence rate versus coarse space size".into(),
        x_label: "n_c".into(),
        y_label: "rate".into(),
        series: vec![
            series("theory 1 - lambda", Marker::Cross, true, "black", |r| r.theory_rate),
            series("rho(E_TG)", Marker::Square, false, "seagreen", |r| r.rho_exact),
            series("error rate", Marker::Circle, false, "steelblue", |r| r.err_rate),
            series("residual rate", Marker::Triangle, false, "darkorange", |r| r.res_rate),
        ],
    })
}

pub fn rates_svg(records: &[RateRecord], out_path: &Path) -> Result<()> {
    fs::write(out_path, plot_svg_string(&rates_plot(records)?)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n_c: usize, rate: f64) -> RateRecord {
        RateRecord {
            n_c,
            lambda_next: 1.0 - rate,
            theory_rate: rate,
            robust_rate: rate,
            rho_exact: rate,
            err_rate: rate,
            res_rate: rate,
            iters: 10,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let recs = vec![record(1, 0.1 + 0.2), record(3, 1.0 / 3.0)];
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), RATE_HEADER);
        assert_eq!(read_rates_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn csv_with_wrong_header_is_rejected() {
        assert!(read_rates_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn spy_counts_marks() {
        let svg = spy_svg_string(&SparseMatrix::identity(4), None);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let marks = doc.descendants().filter(|n| n.attribute("class") == Some("nz")).count();
        assert_eq!(marks, 4);

        let svg = spy_svg_string(&SparseMatrix::zeros(3, 3), Some(1));
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("nz")).count(), 0);
    }

    #[test]
    fn rates_plot_single_and_zero() {
        let svg = plot_svg_string(&rates_plot(&[record(5, 0.0)]).unwrap()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let groups: Vec<_> =
            doc.descendants().filter(|n| n.attribute("class") == Some("series")).collect();
        assert_eq!(groups.len(), 4);
        for g in groups {
            assert_eq!(g.children().filter(|c| c.is_element()).count(), 1);
        }
        assert!(rates_plot(&[]).is_err());
    }

    #[test]
    fn plot_rejects_non_finite() {
        let mut spec = rates_plot(&[record(1, 0.5)]).unwrap();
        spec.series[0].points[0].1 = f64::NAN;
        assert!(plot_svg_string(&spec).is_err());
    }
}
