//! Boyd index estimates from a finite probe family of rearrangements.
//!
//! `h(t)` is the largest observed `||D_t f|| / ||f||` over the probes, so it
//! is a lower bound for the dilation norm. Then
//! `p_X = sup_{t>1} log t / log h(t)` and `q_X = inf_{t<1} log t / log h(t)`.

use serde::Serialize;

use super::{rearranged_norm, NormSpec, Rearrangement, SpaceError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoydEstimate {
    pub p_x: f64,
    pub q_x: f64,
    /// `log t / log h(t)` at the largest and smallest `t` of the grid.
    pub p_tail: f64,
    pub q_tail: f64,
    /// `(t, h(t))` pairs.
    pub dilation_norms: Vec<(f64, f64)>,
}

/// `t = 2^{k/4}` for `k = -24..=24`, `k != 0`.
pub fn default_t_grid() -> Vec<f64> {
    (-24..=24).filter(|k| *k != 0).map(|k| 2f64.powf(k as f64 / 4.0)).collect()
}

fn probes() -> Vec<Rearrangement> {
    let mut out: Vec<Rearrangement> = (-12..=12)
        .map(|k| Rearrangement::from_steps(&[1.0], &[2f64.powi(k)]))
        .collect();
    // s^{-gamma} on [2^-10, 2^10], piecewise constant on quarter octaves
    let knots: Vec<f64> = (-40..=40).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
    for gamma in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let mut values = vec![knots[0].powf(-gamma)];
        let mut lengths = vec![knots[0]];
        for w in knots.windows(2) {
            values.push((w[0] * w[1]).sqrt().powf(-gamma));
            lengths.push(w[1] - w[0]);
        }
        out.push(Rearrangement::from_steps(&values, &lengths));
    }
    out
}

fn ratio(t: f64, h: f64) -> f64 {
    let lh = h.ln();
    if t > 1.0 && lh <= 0.0 || t < 1.0 && lh >= 0.0 {
        f64::INFINITY
    } else {
        t.ln() / lh
    }
}

pub fn boyd_indices(spec: &NormSpec, t_grid: &[f64]) -> Result<BoydEstimate, SpaceError> {
    let spec = match spec {
        NormSpec::WeightedRi { base, .. } => base.as_ref(),
        other => other,
    };
    if !spec.is_rearrangement_invariant() {
        return Err(SpaceError::SpecViolation("Boyd indices need a rearrangement-invariant norm".into()));
    }
    if t_grid.iter().any(|t| !(*t > 0.0) || *t == 1.0) {
        return Err(SpaceError::SpecViolation("dilation parameters must be positive and != 1".into()));
    }
    let probes = probes();
    let base: Vec<f64> = probes
        .iter()
        .map(|f| rearranged_norm(f, spec))
        .collect::<Result<_, _>>()?;
    let mut dilation_norms = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut h = 0.0f64;
        for (f, nf) in probes.iter().zip(&base) {
            h = h.max(rearranged_norm(&f.dilate(t), spec)? / nf);
        }
        dilation_norms.push((t, h));
    }
    let mut p_x = f64::NEG_INFINITY;
    let mut q_x = f64::INFINITY;
    let (mut t_hi, mut t_lo) = ((1.0, f64::NAN), (1.0, f64::NAN));
    for &(t, h) in &dilation_norms {
        let r = ratio(t, h);
        if t > 1.0 {
            p_x = p_x.max(r);
            if t > t_hi.0 {
                t_hi = (t, r);
            }
        } else {
            q_x = q_x.min(r);
            if t < t_lo.0 {
                t_lo = (t, r);
            }
        }
    }
    Ok(BoydEstimate {
        p_x,
        q_x,
        p_tail: t_hi.1,
        q_tail: t_lo.1,
        dilation_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_indices_exact() {
        let est = boyd_indices(&NormSpec::Lebesgue { p: 2.0 }, &default_t_grid()).unwrap();
        assert!((est.p_x - 2.0).abs() < 1e-9 && (est.q_x - 2.0).abs() < 1e-9);
        for (t, h) in &est.dilation_norms {
            assert!((h - t.sqrt()).abs() < 1e-12 * h);
        }
    }

    #[test]
    fn lorentz_indices() {
        let est = boyd_indices(&NormSpec::Lorentz { p: 3.0, q: 1.0 }, &default_t_grid()).unwrap();
        assert!((est.p_x - 3.0).abs() < 1e-9 && (est.q_x - 3.0).abs() < 1e-9);
    }

    #[test]
    fn indices_are_ordered() {
        for spec in [NormSpec::Zygmund { p: 2.0, alpha: 1.0 }, NormSpec::Lorentz { p: 2.0, q: 4.0 }] {
            let est = boyd_indices(&spec, &default_t_grid()).unwrap();
            assert!(1.0 <= est.p_x && est.p_x <= est.q_x + 1e-12, "{spec:?} {est:?}");
        }
    }

    #[test]
    fn rejects_non_ri_and_bad_t() {
        let v = NormSpec::VariableExponent {
            exponent: crate::spaces::ExponentProfile::Constant { p: 2.0 },
        };
        assert!(boyd_indices(&v, &default_t_grid()).is_err());
        assert!(boyd_indices(&NormSpec::Lebesgue { p: 2.0 }, &[1.0]).is_err());
    }
}
