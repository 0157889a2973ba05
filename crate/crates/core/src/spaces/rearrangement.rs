//! Decreasing rearrangements of grid data as step functions on `[0, inf)`.

use serde::Serialize;

use crate::grid::BoundaryField;
use crate::maxop::Weight;

/// Nonincreasing step function: value `values[i]` on `[breaks[i-1], breaks[i])`
/// with `breaks[-1] = 0`, and zero after the last break.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rearrangement {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl Rearrangement {
    /// Build from `(value, mass)` pieces in any order. Zero values and zero
    /// masses are dropped; equal values are merged.
    pub fn from_pieces(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.retain(|(v, m)| *v > 0.0 && *m > 0.0);
        pieces.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breaks: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (v, m) in pieces {
            acc += m;
            if values.last() == Some(&v) {
                *breaks.last_mut().unwrap() = acc;
            } else {
                values.push(v);
                breaks.push(acc);
            }
        }
        Self { breaks, values }
    }

    /// Steps given by nonincreasing values and the lengths of their intervals.
    pub fn from_steps(values: &[f64], lengths: &[f64]) -> Self {
        Self::from_pieces(values.iter().copied().zip(lengths.iter().copied()).collect())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// `(left, right, value)` for every step.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            let left = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            (left, self.breaks[i], *v)
        })
    }

    pub fn value_at(&self, s: f64) -> f64 {
        let i = self.breaks.partition_point(|b| *b <= s);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Measure of the support.
    pub fn support(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `int_0^inf f*(s) ds`.
    pub fn integral(&self) -> f64 {
        self.steps().map(|(a, b, v)| v * (b - a)).sum()
    }

    /// `D_t f*(s) = f*(s / t)`.
    pub fn dilate(&self, t: f64) -> Self {
        Self {
            breaks: self.breaks.iter().map(|b| b * t).collect(),
            values: self.values.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::from_pieces(Vec::new());
        }
        Self {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| v * c.abs()).collect(),
        }
    }
}

/// Rearrangement of `|f|` with respect to `h^dim` cell masses, or `w h^dim`
/// when a weight is supplied.
pub fn decreasing_rearrangement(f: &BoundaryField, w: Option<&Weight>) -> Rearrangement {
    let cell = f.grid().cell_volume();
    let vals = f.modulus();
    let masses: Vec<f64> = match w {
        Some(w) => w.values().iter().map(|v| v * cell).collect(),
        None => vec![cell; vals.len()],
    };
    Rearrangement::from_pieces(vals.into_iter().zip(masses).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_real, BoundaryGrid};

    #[test]
    fn two_level_step() {
        let g = BoundaryGrid::new(1, 8.0, 1024).unwrap();
        let f = sample_real(&g, |x| {
            if (0.0..1.0).contains(&x[0]) {
                3.0
            } else if (1.0..3.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let r = decreasing_rearrangement(&f, None);
        let h = g.spacing();
        assert_eq!(r.values(), &[3.0, 1.0]);
        assert!((r.breaks()[0] - 1.0).abs() <= h && (r.breaks()[1] - 3.0).abs() <= h);
        assert_eq!(r.value_at(0.5), 3.0);
        assert_eq!(r.value_at(2.0), 1.0);
        assert_eq!(r.value_at(3.5), 0.0);
    }

    #[test]
    fn zero_field() {
        let g = BoundaryGrid::new(1, 1.0, 8).unwrap();
        let r = decreasing_rearrangement(&BoundaryField::zeros(&g, 1), None);
        assert!(r.is_zero());
        assert_eq!(r.value_at(0.0), 0.0);
        assert_eq!(r.integral(), 0.0);
    }

    #[test]
    fn dilation_scales_breaks() {
        let r = Rearrangement::from_steps(&[2.0, 1.0], &[1.0, 1.0]);
        let d = r.dilate(3.0);
        assert_eq!(d.breaks(), &[3.0, 6.0]);
        assert!((d.integral() - 3.0 * r.integral()).abs() < 1e-14);
    }
}
