//! Constant-coefficient second-order systems
//! `(L u)_a = d_r (A^{ab}_{rs} d_s u_b)`, their symbols and ellipticity checks.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::C64;
use crate::util::{angles_from_unit, nelder_mead, sphere_points, unit_from_angles};

pub type CMat = DMatrix<Complex64>;

/// Threshold on `min |det L(xi)|` over unit `xi` for weak ellipticity.
pub const WEAK_ELLIPTICITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("space dimension must be 2 or 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("system size must be at least 1")]
    EmptySystem,
    #[error("coefficient array has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("coefficient index ({alpha},{beta},{r},{s}) out of range")]
    IndexOutOfRange { alpha: usize, beta: usize, r: usize, s: usize },
}

/// Coefficient tensor `a[alpha][beta][r][s]`, all indices zero-based here.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticSystem {
    n: usize,
    m: usize,
    coeff: Vec<C64>,
    label: String,
}

impl EllipticSystem {
    pub fn zeros(n: usize, m: usize) -> Result<Self, SystemError> {
        if !(2..=3).contains(&n) {
            return Err(SystemError::UnsupportedDimension(n));
        }
        if m == 0 {
            return Err(SystemError::EmptySystem);
        }
        Ok(Self {
            n,
            m,
            coeff: vec![C64::new(0.0, 0.0); m * m * n * n],
            label: String::from("custom"),
        })
    }

    pub fn from_fn(
        n: usize,
        m: usize,
        f: impl Fn(usize, usize, usize, usize) -> C64,
    ) -> Result<Self, SystemError> {
        let mut sys = Self::zeros(n, m)?;
        for a in 0..m {
            for b in 0..m {
                for r in 0..n {
                    for s in 0..n {
                        let v = f(a, b, r, s);
                        if !(v.re.is_finite() && v.im.is_finite()) {
                            return Err(SystemError::NonFinite);
                        }
                        let i = sys.idx(a, b, r, s);
                        sys.coeff[i] = v;
                    }
                }
            }
        }
        Ok(sys)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn idx(&self, a: usize, b: usize, r: usize, s: usize) -> usize {
        ((a * self.m + b) * self.n + r) * self.n + s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coeff(&self, a: usize, b: usize, r: usize, s: usize) -> C64 {
        self.coeff[self.idx(a, b, r, s)]
    }

    /// `L(xi)_{ab} = sum_{r,s} a^{ab}_{rs} xi_r xi_s`.
    pub fn symbol(&self, xi: &[f64]) -> CMat {
        let (n, m) = (self.n, self.m);
        DMatrix::from_fn(m, m, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                for s in 0..n {
                    acc += self.coeff(a, b, r, s) * (xi[r] * xi[s]);
                }
            }
            acc
        })
    }

    /// The block `a^{ab}_{nn}` multiplying the second normal derivative.
    pub fn normal_block(&self) -> CMat {
        let l = self.n - 1;
        DMatrix::from_fn(self.m, self.m, |a, b| self.coeff(a, b, l, l))
    }

    /// `sum_{r<n} xi_r (a_{rn} + a_{nr})` for a tangential frequency `xi'`.
    pub fn mixed_block(&self, xi_t: &[f64]) -> CMat {
        let l = self.n - 1;
        DMatrix::from_fn(self.m, self.m, |a, b| {
            (0..l)
                .map(|r| (self.coeff(a, b, r, l) + self.coeff(a, b, l, r)) * xi_t[r])
                .sum()
        })
    }

    /// `sum_{r,s<n} xi_r xi_s a_{rs}`.
    pub fn tangential_block(&self, xi_t: &[f64]) -> CMat {
        let l = self.n - 1;
        DMatrix::from_fn(self.m, self.m, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..l {
                for s in 0..l {
                    acc += self.coeff(a, b, r, s) * (xi_t[r] * xi_t[s]);
                }
            }
            acc
        })
    }

    /// `a^T[a][b][r][s] = a[b][a][s][r]`.
    pub fn transpose(&self) -> Self {
        let mut out = self.clone();
        for a in 0..self.m {
            for b in 0..self.m {
                for r in 0..self.n {
                    for s in 0..self.n {
                        let i = out.idx(a, b, r, s);
                        out.coeff[i] = self.coeff(b, a, s, r);
                    }
                }
            }
        }
        out.label = format!("{}^T", self.label);
        out
    }

    /// True when the operator is `Delta I_M` (possibly written with a
    /// different but equivalent symmetric split is not detected).
    pub fn is_laplacian(&self) -> bool {
        match laplacian(self.n, self.m) {
            Ok(lap) => self
                .coeff
                .iter()
                .zip(&lap.coeff)
                .all(|(a, b)| (a - b).norm() < 1e-14),
            Err(_) => false,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeff
            .iter()
            .zip(&other.coeff)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `a^{ab}_{rs} = delta_{ab} delta_{rs}`.
pub fn laplacian(n: usize, m: usize) -> Result<EllipticSystem, SystemError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Ok(EllipticSystem::from_fn(n, m, |a, b, r, s| if a == b && r == s { one } else { zero })?
        .with_label(format!("laplacian(n={n},M={m})")))
}

/// Lame system `mu Delta u + (lambda + mu) grad div u`, written as
/// `a^{ab}_{rs} = mu delta_{rs} delta_{ab} + (lambda + mu) delta_{ra} delta_{sb}`.
/// Other tensor writings of the same operator differ by null-Lagrangian
/// rearrangements; this one is used throughout so kernels are reproducible.
/// Ellipticity is not enforced here.
pub fn lame(n: usize, mu: f64, lambda: f64) -> Result<EllipticSystem, SystemError> {
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Ok(EllipticSystem::from_fn(n, n, |a, b, r, s| {
        C64::new(mu * d(r, s) * d(a, b) + (lambda + mu) * d(r, a) * d(s, b), 0.0)
    })?
    .with_label(format!("lame(n={n},mu={mu},lambda={lambda})")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub kappa_o: f64,
    pub min_ratio: f64,
    pub argmin_xi: Vec<f64>,
    /// Interleaved `(re, im)` pairs of the unit minimizing vector.
    pub argmin_eta: Vec<[f64; 2]>,
    pub weakly_elliptic: bool,
}

/// `min_{|eta|=1} Re[eta^* L(xi) eta]` together with the minimizer.
fn min_form(sys: &EllipticSystem, xi: &[f64]) -> (f64, Vec<C64>) {
    let l = sys.symbol(xi);
    let herm = (&l + l.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let (i, v) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    let eta: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
    (v, eta)
}

/// Legendre-Hadamard constant estimate. The inner minimization over unit
/// `eta` is exact (smallest eigenvalue of the Hermitian part of the symbol);
/// the outer one over unit `xi` uses `samples` quasi-uniform directions and
/// `refine_iters` Nelder-Mead steps from the best sample.
pub fn legendre_hadamard(sys: &EllipticSystem, samples: usize, refine_iters: usize) -> EllipticityReport {
    let n = sys.n();
    let mut best = (f64::INFINITY, Vec::new());
    for xi in sphere_points(n, samples) {
        let (v, _) = min_form(sys, &xi);
        if v < best.0 {
            best = (v, xi);
        }
    }
    let objective = |ang: &[f64]| min_form(sys, &unit_from_angles(ang)).0;
    let start = angles_from_unit(&best.1);
    let step = std::f64::consts::PI / samples as f64;
    let (ang, val) = nelder_mead(objective, &start, step, refine_iters);
    let xi = if val < best.0 { unit_from_angles(&ang) } else { best.1 };
    let (min_ratio, eta) = min_form(sys, &xi);
    EllipticityReport {
        kappa_o: min_ratio.max(0.0),
        min_ratio,
        argmin_xi: xi,
        argmin_eta: eta.iter().map(|z| [z.re, z.im]).collect(),
        weakly_elliptic: weak_ellipticity(sys, samples),
    }
}

/// `min |det L(xi)|` over quasi-uniform unit directions.
pub fn min_symbol_det(sys: &EllipticSystem, samples: usize) -> f64 {
    sphere_points(sys.n(), samples)
        .iter()
        .map(|xi| sys.symbol(xi).determinant().norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn weak_ellipticity(sys: &EllipticSystem, samples: usize) -> bool {
    min_symbol_det(sys, samples) > WEAK_ELLIPTICITY_TOL
}

/// JSON layout `{n, M, entries: [[alpha, beta, r, s, re, im], ...], label}`
/// with one-based indices; omitted entries are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub entries: Vec<[f64; 6]>,
    #[serde(default)]
    pub label: String,
}

impl From<&EllipticSystem> for SystemJson {
    fn from(sys: &EllipticSystem) -> Self {
        let mut entries = Vec::new();
        for a in 0..sys.m {
            for b in 0..sys.m {
                for r in 0..sys.n {
                    for s in 0..sys.n {
                        let v = sys.coeff(a, b, r, s);
                        if v.re != 0.0 || v.im != 0.0 {
                            entries.push([
                                (a + 1) as f64,
                                (b + 1) as f64,
                                (r + 1) as f64,
                                (s + 1) as f64,
                                v.re,
                                v.im,
                            ]);
                        }
                    }
                }
            }
        }
        Self {
            n: sys.n,
            m: sys.m,
            entries,
            label: sys.label.clone(),
        }
    }
}

impl TryFrom<SystemJson> for EllipticSystem {
    type Error = SystemError;

    fn try_from(js: SystemJson) -> Result<Self, SystemError> {
        let mut sys = EllipticSystem::zeros(js.n, js.m)?;
        for e in &js.entries {
            let [a, b, r, s] = [e[0], e[1], e[2], e[3]].map(|v| v as usize);
            let bad = [a, b].iter().any(|&i| i == 0 || i > js.m) || [r, s].iter().any(|&i| i == 0 || i > js.n);
            if bad {
                return Err(SystemError::IndexOutOfRange { alpha: a, beta: b, r, s });
            }
            let v = C64::new(e[4], e[5]);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(SystemError::NonFinite);
            }
            let i = sys.idx(a - 1, b - 1, r - 1, s - 1);
            sys.coeff[i] = v;
        }
        if !js.label.is_empty() {
            sys.label = js.label;
        }
        Ok(sys)
    }
}

impl Serialize for EllipticSystem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SystemJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EllipticSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let js = SystemJson::deserialize(deserializer)?;
        EllipticSystem::try_from(js).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_coefficients() {
        let l = laplacian(2, 1).unwrap();
        for r in 0..2 {
            for s in 0..2 {
                let expect = if r == s { 1.0 } else { 0.0 };
                assert_eq!(l.coeff(0, 0, r, s).re, expect);
            }
        }
        let l3 = laplacian(3, 3).unwrap();
        assert_eq!(l3.coeff(1, 2, 0, 0).re, 0.0);
        assert_eq!(l3.coeff(2, 2, 1, 1).re, 1.0);
        assert!(l3.is_laplacian());
        assert_eq!(laplacian(4, 1).unwrap_err(), SystemError::UnsupportedDimension(4));
    }

    #[test]
    fn symbol_examples() {
        let s = laplacian(2, 1).unwrap().symbol(&[3.0, 4.0]);
        assert!((s[(0, 0)].re - 25.0).abs() < 1e-14);
        let s = lame(2, 1.0, 0.0).unwrap().symbol(&[1.0, 0.0]);
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((s[(1, 1)].re - 1.0).abs() < 1e-14);
        assert_eq!(s[(0, 1)].norm(), 0.0);
        assert_eq!(lame(3, 2.0, 1.0).unwrap().symbol(&[0.0; 3]).norm(), 0.0);
    }

    #[test]
    fn lame_symbol_matches_closed_form() {
        let (mu, lambda) = (1.3, -0.4);
        let sys = lame(3, mu, lambda).unwrap();
        let xi = [0.3, -1.2, 0.7];
        let s = sys.symbol(&xi);
        let norm2: f64 = xi.iter().map(|v| v * v).sum();
        for a in 0..3 {
            for b in 0..3 {
                let d = if a == b { 1.0 } else { 0.0 };
                let expect = mu * norm2 * d + (lambda + mu) * xi[a] * xi[b];
                assert!((s[(a, b)].re - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn legendre_hadamard_laplacian() {
        let rep = legendre_hadamard(&laplacian(3, 1).unwrap(), 2000, 50);
        assert!((rep.min_ratio - 1.0).abs() < 1e-6);
        assert!((rep.kappa_o - 1.0).abs() < 1e-6);
        let rep2 = legendre_hadamard(&laplacian(2, 1).unwrap(), 1000, 20);
        assert!((rep2.kappa_o - 1.0).abs() < 1e-6);
        let xi_norm: f64 = rep.argmin_xi.iter().map(|v| v * v).sum();
        let eta_norm: f64 = rep.argmin_eta.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
        assert!((xi_norm - 1.0).abs() < 1e-12 && (eta_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_hadamard_lame() {
        let good = legendre_hadamard(&lame(2, 1.0, 0.0).unwrap(), 1000, 50);
        assert!(good.min_ratio >= 1.0 * (1.0 - 1e-3));
        assert!(good.min_ratio <= 1.0 + 1e-9);
        let bad = legendre_hadamard(&lame(2, 1.0, -3.0).unwrap(), 1000, 50);
        assert!(bad.min_ratio < 0.0);
        assert_eq!(bad.kappa_o, 0.0);
        // det L(xi) = mu (2 mu + lambda) |xi|^4 = -1, still invertible
        assert!(bad.weakly_elliptic);
        assert!(legendre_hadamard(&lame(3, 2.0, -1.0).unwrap(), 1000, 50).min_ratio > 0.0);
    }

    #[test]
    fn weak_ellipticity_examples() {
        assert!(weak_ellipticity(&laplacian(2, 1).unwrap(), 1000));
        let lame_sys = lame(2, 1.0, 0.0).unwrap();
        assert!(weak_ellipticity(&lame_sys, 1000));
        assert!((min_symbol_det(&lame_sys, 1000) - 2.0).abs() < 1e-12);
        assert!(!weak_ellipticity(&EllipticSystem::zeros(2, 2).unwrap(), 1000));
    }

    #[test]
    fn transpose_properties() {
        let lap = laplacian(3, 2).unwrap();
        assert_eq!(lap.transpose().max_abs_diff(&lap), 0.0);
        let l = lame(3, 1.5, 0.25).unwrap();
        assert_eq!(l.transpose().max_abs_diff(&l), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let sys = lame(2, 1.0, 1.0).unwrap();
        let text = serde_json::to_string(&sys).unwrap();
        assert!(text.contains("\"M\":2"));
        let back: EllipticSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back.max_abs_diff(&sys), 0.0);
        assert_eq!(back.label(), sys.label());
        let bad = r#"{"n":2,"M":1,"entries":[[1,2,1,1,1.0,0.0]]}"#;
        assert!(serde_json::from_str::<EllipticSystem>(bad).is_err());
    }
}
