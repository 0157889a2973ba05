//! Function norms on grid data: Lebesgue (plain, weighted, variable
//! exponent), Lorentz, Orlicz/Zygmund and weighted rearrangement-invariant
//! norms, together with Hölder pairings, Boyd indices and atoms.

mod atoms;
mod boyd;
mod rearrangement;

pub use atoms::{
    beurling_norm, random_h1_atom, validate_atom, xw_decay_check, Atom, AtomFlavor, DecayCheck,
};
pub use boyd::{boyd_indices, default_t_grid, BoydEstimate};
pub use rearrangement::{decreasing_rearrangement, Rearrangement};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{BoundaryField, BoundaryGrid, GridError};
use crate::maxop::{MaxOpError, Weight};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("Luxemburg bisection did not bracket the norm (modular stays above 1)")]
    NonConvergedBisection,
    #[error("invalid norm specification: {0}")]
    SpecViolation(String),
    #[error("no Köthe dual implemented for this norm")]
    NoDualImplemented,
    #[error("atom candidate has mass outside its cube (node {node})")]
    SupportViolation { node: usize },
    #[error("atom candidate violates its size condition: {0}")]
    SizeViolation(String),
    #[error("atom candidate does not have mean zero: |int a| = {mean}, tolerance {tol}")]
    MeanNotZero { mean: f64, tol: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    MaxOp(#[from] MaxOpError),
}

/// Serializes `f64::INFINITY` as the string `"inf"`.
mod exponent {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad exponent {t:?}"))),
        }
    }
}

/// Young functions for Luxemburg norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungFunction {
    /// `t^p`
    Power { p: f64 },
    /// `t^p log(e + t)^alpha`
    PowerLog { p: f64, alpha: f64 },
    /// `e^t - 1`
    Exponential,
}

impl YoungFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungFunction::Power { p } => t.powf(p),
            YoungFunction::PowerLog { p, alpha } => t.powf(p) * (std::f64::consts::E + t).ln().powf(alpha),
            YoungFunction::Exponential => t.exp_m1(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            YoungFunction::Power { p } => format!("t^{p}"),
            YoungFunction::PowerLog { p, alpha } => format!("t^{p} log(e+t)^{alpha}"),
            YoungFunction::Exponential => "exp(t)-1".into(),
        }
    }

    /// `Phi(0) = 0`, strict increase and midpoint convexity on a log grid.
    pub fn check(&self) -> Result<(), SpaceError> {
        let bad = |m: &str| Err(SpaceError::SpecViolation(format!("{}: {m}", self.label())));
        if self.eval(0.0) != 0.0 {
            return bad("Phi(0) != 0");
        }
        let ts: Vec<f64> = (-40..=40).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
        for w in ts.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            if !b.is_finite() {
                break;
            }
            if !(b > a) {
                return bad("not strictly increasing");
            }
            let mid = self.eval(0.5 * (w[0] + w[1]));
            if mid > 0.5 * (a + b) * (1.0 + 1e-12) {
                return bad("not convex");
            }
        }
        Ok(())
    }
}

/// Weight description resolved against a grid at evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightProfile {
    Unit,
    /// `|x|^gamma` at cell midpoints.
    Power { gamma: f64 },
    /// Explicit node values.
    Values { values: Vec<f64> },
}

impl WeightProfile {
    pub fn resolve(&self, grid: &BoundaryGrid) -> Result<Weight, SpaceError> {
        Ok(match self {
            WeightProfile::Unit => Weight::unit(grid),
            WeightProfile::Power { gamma } => Weight::power(grid, *gamma)?,
            WeightProfile::Values { values } => {
                Weight::new(BoundaryField::from_real(grid, values.clone())?, "values")?
            }
        })
    }
}

/// Variable exponent `p(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentProfile {
    Constant { p: f64 },
    /// `p_inf + (p0 - p_inf) / (1 + |x|)`
    Radial { p0: f64, p_inf: f64 },
    Values { values: Vec<f64> },
}

impl ExponentProfile {
    pub fn resolve(&self, grid: &BoundaryGrid) -> Result<Vec<f64>, SpaceError> {
        let vals: Vec<f64> = match self {
            ExponentProfile::Constant { p } => vec![*p; grid.node_count()],
            ExponentProfile::Radial { p0, p_inf } => (0..grid.node_count())
                .map(|k| p_inf + (p0 - p_inf) / (1.0 + grid.node_norm(k)))
                .collect(),
            ExponentProfile::Values { values } => {
                if values.len() != grid.node_count() {
                    return Err(GridError::ShapeMismatch {
                        expected: grid.node_count(),
                        got: values.len(),
                    }
                    .into());
                }
                values.clone()
            }
        };
        if vals.iter().any(|p| !(*p > 1.0 && p.is_finite())) {
            return Err(SpaceError::SpecViolation("variable exponent must lie in (1, inf)".into()));
        }
        Ok(vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Lebesgue {
        p: f64,
    },
    WeightedLebesgue {
        p: f64,
        weight: WeightProfile,
    },
    Lorentz {
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
    },
    Orlicz {
        young: YoungFunction,
    },
    /// Orlicz space of `t^p log(e + t)^alpha`.
    Zygmund {
        p: f64,
        alpha: f64,
    },
    VariableExponent {
        exponent: ExponentProfile,
    },
    WeightedRi {
        base: Box<NormSpec>,
        weight: WeightProfile,
    },
}

fn check_p(p: f64, what: &str) -> Result<(), SpaceError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(SpaceError::SpecViolation(format!("{what} = {p} outside [1, inf)")))
    }
}

impl NormSpec {
    pub fn is_rearrangement_invariant(&self) -> bool {
        matches!(
            self,
            NormSpec::Lebesgue { .. } | NormSpec::Lorentz { .. } | NormSpec::Orlicz { .. } | NormSpec::Zygmund { .. }
        )
    }

    /// Parameter checks that do not depend on a grid.
    pub fn validate(&self) -> Result<(), SpaceError> {
        match self {
            NormSpec::Lebesgue { p } | NormSpec::WeightedLebesgue { p, .. } => check_p(*p, "p"),
            NormSpec::Lorentz { p, q } => {
                check_p(*p, "p")?;
                if !(*q >= 1.0) {
                    return Err(SpaceError::SpecViolation(format!("q = {q} below 1")));
                }
                Ok(())
            }
            NormSpec::Orlicz { young } => young.check(),
            NormSpec::Zygmund { p, alpha } => {
                check_p(*p, "p")?;
                self.young().unwrap().check().map_err(|_| {
                    SpaceError::SpecViolation(format!("t^{p} log(e+t)^{alpha} is not a Young function"))
                })
            }
            NormSpec::VariableExponent { .. } => Ok(()),
            NormSpec::WeightedRi { base, .. } => {
                if !base.is_rearrangement_invariant() {
                    return Err(SpaceError::SpecViolation(
                        "weighted base must be Lebesgue, Lorentz, Orlicz or Zygmund".into(),
                    ));
                }
                base.validate()
            }
        }
    }

    fn young(&self) -> Option<YoungFunction> {
        match self {
            NormSpec::Orlicz { young } => Some(young.clone()),
            NormSpec::Zygmund { p, alpha } => Some(YoungFunction::PowerLog { p: *p, alpha: *alpha }),
            NormSpec::Lebesgue { p } => Some(YoungFunction::Power { p: *p }),
            _ => None,
        }
    }
}

/// Smallest `lambda` with `modular(lambda) <= 1`, by bisection on
/// `log lambda` over `[1e-12 scale, 1e12 scale]` with 60 halvings.
pub fn luxemburg(modular: impl Fn(f64) -> f64, scale: f64) -> Result<f64, SpaceError> {
    if scale == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = ((1e-12 * scale).ln(), (1e12 * scale).ln());
    if !(modular(hi.exp()) <= 1.0) {
        return Err(SpaceError::NonConvergedBisection);
    }
    if modular(lo.exp()) <= 1.0 {
        return Ok(lo.exp());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if modular(mid.exp()) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

fn orlicz_of_steps(steps: &[(f64, f64)], young: &YoungFunction) -> Result<f64, SpaceError> {
    let scale = steps.iter().map(|s| s.0).fold(0.0, f64::max);
    luxemburg(
        |lam| steps.iter().map(|(v, m)| young.eval(v / lam) * m).sum(),
        scale,
    )
}

/// Norm of a rearrangement-invariant space evaluated on `f*`.
pub fn rearranged_norm(r: &Rearrangement, spec: &NormSpec) -> Result<f64, SpaceError> {
    spec.validate()?;
    if r.is_zero() {
        return Ok(0.0);
    }
    match spec {
        NormSpec::Lebesgue { p } => {
            Ok(r.steps().map(|(a, b, v)| v.powf(*p) * (b - a)).sum::<f64>().powf(1.0 / p))
        }
        NormSpec::Lorentz { p, q } => {
            if q.is_infinite() {
                Ok(r.steps().map(|(_, b, v)| v * b.powf(1.0 / p)).fold(0.0, f64::max))
            } else {
                let e = q / p;
                let s: f64 = r
                    .steps()
                    .map(|(a, b, v)| v.powf(*q) * (b.powf(e) - a.powf(e)) / e)
                    .sum();
                Ok(s.powf(1.0 / q))
            }
        }
        NormSpec::Orlicz { .. } | NormSpec::Zygmund { .. } => {
            let steps: Vec<(f64, f64)> = r.steps().map(|(a, b, v)| (v, b - a)).collect();
            orlicz_of_steps(&steps, &spec.young().unwrap())
        }
        _ => Err(SpaceError::SpecViolation("not a rearrangement-invariant norm".into())),
    }
}

/// `||f||` for any implemented norm.
pub fn norm(f: &BoundaryField, spec: &NormSpec) -> Result<f64, SpaceError> {
    spec.validate()?;
    let grid = f.grid();
    let cell = grid.cell_volume();
    let vals = f.modulus();
    match spec {
        NormSpec::Lebesgue { p } => Ok((vals.iter().map(|v| v.powf(*p)).sum::<f64>() * cell).powf(1.0 / p)),
        NormSpec::WeightedLebesgue { p, weight } => {
            let w = weight.resolve(grid)?.values();
            let s: f64 = vals.iter().zip(&w).map(|(v, w)| v.powf(*p) * w).sum();
            Ok((s * cell).powf(1.0 / p))
        }
        NormSpec::Lorentz { .. } => rearranged_norm(&decreasing_rearrangement(f, None), spec),
        NormSpec::Orlicz { .. } | NormSpec::Zygmund { .. } => {
            let steps: Vec<(f64, f64)> = vals.iter().map(|v| (*v, cell)).collect();
            orlicz_of_steps(&steps, &spec.young().unwrap())
        }
        NormSpec::VariableExponent { exponent } => {
            let ps = exponent.resolve(grid)?;
            let scale = vals.iter().fold(0.0, |a: f64, b| a.max(*b));
            luxemburg(
                |lam| vals.iter().zip(&ps).map(|(v, p)| (v / lam).powf(*p)).sum::<f64>() * cell,
                scale,
            )
        }
        NormSpec::WeightedRi { base, weight } => {
            let w = weight.resolve(grid)?;
            rearranged_norm(&decreasing_rearrangement(f, Some(&w)), base)
        }
    }
}

/// The Köthe dual for the pairs with a closed form.
pub fn dual_spec(spec: &NormSpec) -> Result<NormSpec, SpaceError> {
    let conj = |p: f64| if p == 1.0 { f64::INFINITY } else if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    match spec {
        NormSpec::Lebesgue { p } if *p > 1.0 => Ok(NormSpec::Lebesgue { p: conj(*p) }),
        NormSpec::Lorentz { p, q } if *p > 1.0 => Ok(NormSpec::Lorentz { p: conj(*p), q: conj(*q) }),
        NormSpec::WeightedLebesgue { p, weight } if *p > 1.0 => {
            let pp = conj(*p);
            let weight = match weight {
                WeightProfile::Unit => WeightProfile::Unit,
                WeightProfile::Power { gamma } => WeightProfile::Power { gamma: gamma * (1.0 - pp) },
                WeightProfile::Values { values } => WeightProfile::Values {
                    values: values.iter().map(|w| w.powf(1.0 - pp)).collect(),
                },
            };
            Ok(NormSpec::WeightedLebesgue { p: pp, weight })
        }
        _ => Err(SpaceError::NoDualImplemented),
    }
}

/// `(int |f g|, ||f||_X ||g||_X')`.
pub fn holder_pairing(f: &BoundaryField, g: &BoundaryField, spec: &NormSpec) -> Result<(f64, f64), SpaceError> {
    if f.grid() != g.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let dual = dual_spec(spec)?;
    let lhs: f64 = f
        .modulus()
        .iter()
        .zip(g.modulus())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.grid().cell_volume();
    let rhs = norm(f, spec)? * norm(g, &dual)?;
    Ok((lhs, rhs))
}

/// Local `L log L` average `inf{lambda : |Q|^{-1} int_Q Phi(|f|/lambda) <= 1}`
/// with `Phi(t) = t log(e + t)`, over the nodes with `mask[k]`.
pub fn llogl_local_norm(f: &BoundaryField, mask: &[bool]) -> Result<f64, SpaceError> {
    let vals = f.modulus();
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Ok(0.0);
    }
    let young = YoungFunction::PowerLog { p: 1.0, alpha: 1.0 };
    let steps: Vec<(f64, f64)> = vals
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| (*v, 1.0 / count as f64))
        .collect();
    orlicz_of_steps(&steps, &young)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cube_indicator, sample_real};

    fn grid() -> BoundaryGrid {
        BoundaryGrid::new(1, 8.0, 1024).unwrap()
    }

    #[test]
    fn lebesgue_indicator() {
        let g = grid();
        // [-1, 1) holds exactly 2/h nodes
        let f = sample_real(&g, |x| if (-1.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        for p in [1.0, 2.0, 3.0] {
            assert!((norm(&f, &NormSpec::Lebesgue { p }).unwrap() - 2f64.powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentz_indicator_closed_form() {
        let g = grid();
        let f = sample_real(&g, |x| if (0.0..2.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let v = norm(&f, &NormSpec::Lorentz { p: 2.0, q: 1.0 }).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{v}");
        let v = norm(&f, &NormSpec::Lorentz { p: 2.0, q: f64::INFINITY }).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orlicz_power_is_lebesgue() {
        let g = grid();
        let f = sample_real(&g, |x| (x[0] * 2.1).sin() * (-x[0].abs()).exp()).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let a = norm(&f, &NormSpec::Orlicz { young: YoungFunction::Power { p } }).unwrap();
            let b = norm(&f, &NormSpec::Lebesgue { p }).unwrap();
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn luxemburg_failure_and_zero() {
        assert_eq!(luxemburg(|_| 2.0, 1.0), Err(SpaceError::NonConvergedBisection));
        assert_eq!(luxemburg(|_| 2.0, 0.0), Ok(0.0));
        let g = grid();
        assert_eq!(norm(&BoundaryField::zeros(&g, 1), &NormSpec::Zygmund { p: 2.0, alpha: 1.0 }), Ok(0.0));
    }

    #[test]
    fn weighted_ri_with_unit_weight_matches_base() {
        let g = grid();
        let f = sample_real(&g, |x| 1.0 / (1.0 + x[0] * x[0])).unwrap();
        for base in [
            NormSpec::Lebesgue { p: 2.0 },
            NormSpec::Lorentz { p: 3.0, q: 1.0 },
            NormSpec::Zygmund { p: 2.0, alpha: 1.0 },
        ] {
            let a = norm(&f, &base).unwrap();
            let b = norm(
                &f,
                &NormSpec::WeightedRi {
                    base: Box::new(base.clone()),
                    weight: WeightProfile::Unit,
                },
            )
            .unwrap();
            assert!((a - b).abs() <= 1e-9 * a, "{base:?}");
        }
    }

    #[test]
    fn variable_exponent_constant_matches_lebesgue() {
        let g = grid();
        let f = sample_real(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let a = norm(&f, &NormSpec::VariableExponent { exponent: ExponentProfile::Constant { p: 2.5 } }).unwrap();
        let b = norm(&f, &NormSpec::Lebesgue { p: 2.5 }).unwrap();
        assert!((a - b).abs() < 1e-9 * b);
        let bad = NormSpec::VariableExponent { exponent: ExponentProfile::Constant { p: 1.0 } };
        assert!(matches!(norm(&f, &bad), Err(SpaceError::SpecViolation(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(NormSpec::Lebesgue { p: 0.5 }.validate().is_err());
        assert!(NormSpec::Lorentz { p: 2.0, q: 0.5 }.validate().is_err());
        let nested = NormSpec::WeightedRi {
            base: Box::new(NormSpec::WeightedLebesgue { p: 2.0, weight: WeightProfile::Unit }),
            weight: WeightProfile::Unit,
        };
        assert!(nested.validate().is_err());
        assert!(YoungFunction::Exponential.check().is_ok());
    }

    #[test]
    fn holder_examples() {
        let g = grid();
        let f = cube_indicator(&g, &[0.5 - 0.5 * g.spacing()], 1.0);
        let (lhs, rhs) = holder_pairing(&f, &f, &NormSpec::Lebesgue { p: 2.0 }).unwrap();
        assert!((lhs - 1.0).abs() < 1e-12 && (rhs - 1.0).abs() < 1e-12);
        let z = BoundaryField::zeros(&g, 1);
        assert_eq!(holder_pairing(&z, &f, &NormSpec::Lebesgue { p: 3.0 }).unwrap().0, 0.0);
        assert_eq!(
            holder_pairing(&f, &f, &NormSpec::Zygmund { p: 2.0, alpha: 1.0 }),
            Err(SpaceError::NoDualImplemented)
        );
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = NormSpec::WeightedRi {
            base: Box::new(NormSpec::Lorentz { p: 2.0, q: f64::INFINITY }),
            weight: WeightProfile::Power { gamma: 0.5 },
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<NormSpec>(&text).unwrap(), spec);
        let lz: NormSpec = serde_json::from_str(r#"{"kind":"zygmund","p":2,"alpha":1}"#).unwrap();
        assert_eq!(lz, NormSpec::Zygmund { p: 2.0, alpha: 1.0 });
    }

    #[test]
    fn llogl_of_constant() {
        let g = grid();
        let f = BoundaryField::from_real(&g, vec![1.0; 1024]).unwrap();
        let v = llogl_local_norm(&f, &vec![true; 1024]).unwrap();
        // (1/v) log(e + 1/v) = 1
        assert!(((1.0 / v) * (std::f64::consts::E + 1.0 / v).ln() - 1.0).abs() < 1e-9);
    }
}
