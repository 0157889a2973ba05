//! CSV and JSON serialization of fields, kernels and solutions, plus a
//! minimal SVG line plot.
//!
//! Field CSV columns are the node coordinates `x1[, x2]` followed by
//! `re_c, im_c` per channel. Kernel CSV uses `re_a_b, im_a_b` per entry and
//! solution CSV starts with a `t` column. Numbers use 17 significant digits.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BoundaryField, BoundaryGrid, GridError, HalfSpaceField, KernelMatrix, C64};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("malformed field file: {0}")]
    Malformed(String),
}

/// Grid metadata written next to a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub spacing: f64,
    pub channels: usize,
}

impl FieldHeader {
    pub fn of(field: &BoundaryField) -> Self {
        let g = field.grid();
        Self {
            dim: g.dim(),
            half_width: g.half_width(),
            points_per_axis: g.points_per_axis(),
            spacing: g.spacing(),
            channels: field.channels(),
        }
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|a| format!("x{a}")).collect()
}

fn coords(grid: &BoundaryGrid, k: usize) -> Vec<String> {
    let x = grid.node(k);
    (0..grid.dim()).map(|a| fmt_num(x[a])).collect()
}

pub fn write_field_csv(field: &BoundaryField, out: impl Write) -> Result<(), IoError> {
    let grid = field.grid();
    let m = field.channels();
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_header(grid.dim());
    for c in 0..m {
        header.push(format!("re_{c}"));
        header.push(format!("im_{c}"));
    }
    w.write_record(&header)?;
    for k in 0..grid.node_count() {
        let mut row = coords(grid, k);
        for v in field.at(k) {
            row.push(fmt_num(v.re));
            row.push(fmt_num(v.im));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_kernel_csv(kernel: &KernelMatrix, out: impl Write) -> Result<(), IoError> {
    let grid = kernel.grid();
    let m = kernel.m();
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_header(grid.dim());
    for a in 0..m {
        for b in 0..m {
            header.push(format!("re_{a}_{b}"));
            header.push(format!("im_{a}_{b}"));
        }
    }
    w.write_record(&header)?;
    for k in 0..grid.node_count() {
        let mut row = coords(grid, k);
        for a in 0..m {
            for b in 0..m {
                let v = kernel.entry(k, a, b);
                row.push(fmt_num(v.re));
                row.push(fmt_num(v.im));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_halfspace_csv(u: &HalfSpaceField, out: impl Write) -> Result<(), IoError> {
    let grid = u.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(coord_header(grid.dim()));
    for c in 0..u.channels() {
        header.push(format!("re_{c}"));
        header.push(format!("im_{c}"));
    }
    w.write_record(&header)?;
    for (i, &t) in u.heights().iter().enumerate() {
        let slice = u.slice(i);
        for k in 0..grid.node_count() {
            let mut row = vec![fmt_num(t)];
            row.extend(coords(grid, k));
            for v in slice.at(k) {
                row.push(fmt_num(v.re));
                row.push(fmt_num(v.im));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a field CSV. The grid is recovered from the coordinates: `N` is
/// the number of distinct `x1` values and `R = -min x1`. Rows may come in
/// any order; an `im_c` column may be omitted.
pub fn read_field_csv(input: impl Read) -> Result<BoundaryField, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let dim = header.iter().take_while(|h| h.starts_with('x')).count();
    if !(1..=2).contains(&dim) {
        return Err(IoError::Malformed(format!("expected 1 or 2 coordinate columns, found {dim}")));
    }
    let mut re_cols = Vec::new();
    let mut im_cols = Vec::new();
    for c in 0.. {
        let Some(re) = header.iter().position(|h| *h == format!("re_{c}")) else { break };
        re_cols.push(re);
        im_cols.push(header.iter().position(|h| *h == format!("im_{c}")));
    }
    if re_cols.is_empty() {
        return Err(IoError::Malformed("no re_0 column".into()));
    }
    let m = re_cols.len();
    let mut rows: Vec<(Vec<f64>, Vec<C64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, IoError> {
            rec.get(i)
                .ok_or_else(|| IoError::Malformed(format!("missing column {i}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| IoError::Malformed(format!("bad number in column {i}: {e}")))
        };
        let x = (0..dim).map(num).collect::<Result<Vec<_>, _>>()?;
        let mut v = Vec::with_capacity(m);
        for c in 0..m {
            let im = match im_cols[c] {
                Some(i) => num(i)?,
                None => 0.0,
            };
            v.push(C64::new(num(re_cols[c])?, im));
        }
        rows.push((x, v));
    }
    let distinct: BTreeSet<u64> = rows.iter().map(|(x, _)| x[0].to_bits()).collect();
    let n = distinct.len();
    let lo = rows.iter().map(|(x, _)| x[0]).fold(f64::INFINITY, f64::min);
    let grid = BoundaryGrid::new(dim, -lo, n)?;
    if rows.len() != grid.node_count() {
        return Err(IoError::Malformed(format!(
            "{} rows for a grid with {} nodes",
            rows.len(),
            grid.node_count()
        )));
    }
    let h = grid.spacing();
    let mut values = vec![C64::new(0.0, 0.0); grid.node_count() * m];
    let mut seen = vec![false; grid.node_count()];
    for (x, v) in rows {
        let mut idx = [0usize; 2];
        for a in 0..dim {
            let f = (x[a] + grid.half_width()) / h;
            let i = f.round();
            if (f - i).abs() > 1e-6 || i < 0.0 || i as usize >= n {
                return Err(IoError::Malformed(format!("coordinate {} is not a grid node", x[a])));
            }
            idx[a] = i as usize;
        }
        let k = grid.index_of(idx);
        if seen[k] {
            return Err(IoError::Malformed(format!("node {k} appears twice")));
        }
        seen[k] = true;
        values[k * m..(k + 1) * m].copy_from_slice(&v);
    }
    Ok(BoundaryField::new(grid, m, values)?)
}

/// One named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Static SVG line plot with linear axes.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 56.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    ));
    out.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = H - PAD,
        r = W - PAD
    ));
    for (v, anchor_x, anchor_y, extra) in [
        (x0, sx(x0), H - PAD + 16.0, "middle"),
        (x1, sx(x1), H - PAD + 16.0, "middle"),
    ] {
        out.push_str(&format!(
            "<text x=\"{anchor_x:.1}\" y=\"{anchor_y:.1}\" text-anchor=\"{extra}\" font-family=\"sans-serif\" font-size=\"11\">{v:.3e}</text>\n"
        ));
    }
    for v in [y0, y1] {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{v:.3e}</text>\n",
            PAD - 4.0,
            sy(v) + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        W / 2.0,
        H - 12.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        escape(y_label)
    ));
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            W - PAD - 120.0,
            PAD + 14.0 * i as f64,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    #[test]
    fn field_round_trip() {
        let grid = BoundaryGrid::new(2, 2.0, 8).unwrap();
        let f = sample(&grid, 2, |x, out| {
            out[0] = C64::new(x[0].sin(), x[1]);
            out[1] = C64::new(1.0 / 3.0, -x[0] * x[1]);
        })
        .unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let g = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(g.grid(), f.grid());
        assert!(g.sub(&f).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rejects_off_grid_rows() {
        let text = "x1,re_0\n-1.0,0\n-0.5,0\n0.1,0\n0.5,0\n0.7,0\n0.9,0\n1.1,0\n1.3,0\n";
        assert!(read_field_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let s = svg_line_plot(
            "t",
            "x",
            "y",
            &[
                Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] },
                Series { label: "b<c".into(), points: vec![(0.0, 0.0), (1.0, 1.0)] },
            ],
        );
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("b&lt;c"));
    }
}
