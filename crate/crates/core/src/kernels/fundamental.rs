//! Fundamental solutions: closed forms for the Laplacian and for scalar
//! operators `div(A grad)`, and a sphere-integral construction for systems.
//!
//! The sphere integral for `n = 3` is
//! `E(x) = -1/(16 pi^2) Delta_x int_{S^2} |x.xi| L(xi)^{-1} dsigma(xi)` and for
//! `n = 2` it is
//! `E(x) = 1/(8 pi^2) Delta_x int_{S^1} (x.xi)^2 log|x.xi| L(xi)^{-1} dsigma(xi)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::KernelError;
use crate::grid::C64;
use crate::systems::{laplacian, CMat, EllipticSystem};
use crate::util::{gauss_legendre, sphere_points};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Construction {
    HarmonicClosedForm,
    ScalarClosedForm,
    SphereQuadrature,
}

/// Half-sphere rule realigned to `x`: Gauss nodes in `u = cos(angle to x)`
/// over `[0, 1]` with a trapezoid in azimuth (n = 3), or Gauss nodes in the
/// angle itself over `[-pi/2, pi/2]` (n = 2).
#[derive(Clone, Debug)]
struct SphereRule {
    u_nodes: Vec<f64>,
    u_weights: Vec<f64>,
    azimuths: usize,
}

impl SphereRule {
    fn new(n: usize, quad_points: usize) -> Self {
        let (count, azimuths) = if n == 2 {
            ((quad_points / 2).max(8), 1)
        } else {
            let nu = ((quad_points as f64 / 4.0).sqrt().round() as usize).max(4);
            // an even azimuth count keeps the rule symmetric under xi -> -xi
            (nu, ((quad_points / (2 * nu)).max(8) + 1) & !1)
        };
        let (x, w) = gauss_legendre(count);
        // map [-1, 1] to [0, 1] (n = 3, in u) or to [-pi/2, pi/2] (n = 2, in angle)
        let (u_nodes, u_weights) = if n == 2 {
            (
                x.iter().map(|s| 0.5 * PI * s).collect(),
                w.iter().map(|v| 0.5 * PI * v).collect(),
            )
        } else {
            (
                x.iter().map(|s| 0.5 * (s + 1.0)).collect(),
                w.iter().map(|v| 0.5 * v).collect(),
            )
        };
        Self {
            u_nodes,
            u_weights,
            azimuths,
        }
    }
}

#[derive(Clone, Debug)]
enum Evaluator {
    Harmonic,
    /// `coef q^{(2-n)/2}` (n = 3) or `coef log q` (n = 2), `q = (S^{-1}x).x`.
    Scalar { s_inv: CMat, coef: C64 },
    Sphere { rule: SphereRule, fd_step: f64, offset: CMat },
}

#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    system: EllipticSystem,
    construction: Construction,
    radial: bool,
    eval: Evaluator,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `-1/(4 pi |x|)` for n = 3, `(1/(2 pi)) log|x|` for n = 2.
pub fn harmonic_closed_form(n: usize, r: f64) -> f64 {
    if n == 3 {
        -1.0 / (4.0 * PI * r)
    } else {
        r.ln() / (2.0 * PI)
    }
}

/// `Delta I_M` with its closed-form fundamental solution.
pub fn harmonic_fundamental_solution(n: usize, m: usize) -> Result<FundamentalSolution, KernelError> {
    let mut e = FundamentalSolution {
        system: laplacian(n, m)?,
        construction: Construction::HarmonicClosedForm,
        radial: false,
        eval: Evaluator::Harmonic,
    };
    e.radial = is_radial(&e, 16);
    Ok(e)
}

/// Closed form for `div(A grad u)` with constant complex `A` satisfying
/// `Re[A xi . xi] > 0` on sampled unit `xi`; uses the symmetric part of `A`
/// and principal branches.
pub fn scalar_fundamental_solution(a: &CMat) -> Result<FundamentalSolution, KernelError> {
    let n = a.nrows();
    if a.ncols() != n || !(2..=3).contains(&n) {
        return Err(KernelError::DimensionMismatch(format!("A must be 2x2 or 3x3, got {}x{}", n, a.ncols())));
    }
    let c_min = sphere_points(n, 1000)
        .iter()
        .map(|xi| {
            let v = DMatrix::from_fn(n, 1, |i, _| C64::new(xi[i], 0.0));
            (v.transpose() * a * &v)[(0, 0)].re
        })
        .fold(f64::INFINITY, f64::min);
    if !(c_min > 1e-9) {
        return Err(KernelError::NotStronglyElliptic(c_min));
    }
    let sym = (a + a.transpose()) * C64::new(0.5, 0.0);
    let s_inv = sym.clone().try_inverse().ok_or(KernelError::NotStronglyElliptic(c_min))?;
    let sqrt_det = sym.determinant().sqrt();
    let coef = if n == 3 {
        -C64::new(1.0, 0.0) / (sqrt_det * (4.0 * PI))
    } else {
        C64::new(1.0, 0.0) / (sqrt_det * (4.0 * PI))
    };
    let system = EllipticSystem::from_fn(n, 1, |_, _, r, s| a[(r, s)])?.with_label("scalar");
    let mut e = FundamentalSolution {
        system,
        construction: Construction::ScalarClosedForm,
        radial: false,
        eval: Evaluator::Scalar { s_inv, coef },
    };
    e.radial = is_radial(&e, 16);
    Ok(e)
}

/// Sphere-integral construction with `quad_points` nodes on the sphere and
/// a fourth-order central-difference Laplacian of step `fd_step |x|`. For
/// `n = 2` the additive constant is pinned so that `E(e_1) = 0`.
pub fn sphere_quadrature_fundamental_solution(
    sys: &EllipticSystem,
    quad_points: usize,
    fd_step: f64,
) -> Result<FundamentalSolution, KernelError> {
    if !crate::systems::weak_ellipticity(sys, 1000) {
        return Err(KernelError::NotWeaklyElliptic);
    }
    if !(fd_step > 0.0 && fd_step < 0.5) {
        return Err(KernelError::DimensionMismatch(format!("fd_step {fd_step} outside (0, 0.5)")));
    }
    let n = sys.n();
    let m = sys.m();
    let mut e = FundamentalSolution {
        system: sys.clone(),
        construction: Construction::SphereQuadrature,
        radial: false,
        eval: Evaluator::Sphere {
            rule: SphereRule::new(n, quad_points),
            fd_step,
            offset: DMatrix::zeros(m, m),
        },
    };
    if n == 2 {
        let at_ref = e.eval(&[1.0, 0.0])?;
        if let Evaluator::Sphere { offset, .. } = &mut e.eval {
            *offset = -at_ref;
        }
    }
    e.radial = is_radial(&e, 16);
    Ok(e)
}

/// Orthonormal frame whose last vector is `x / |x|`.
fn frame(x: &[f64]) -> Vec<Vec<f64>> {
    let r = norm(x);
    let e: Vec<f64> = x.iter().map(|v| v / r).collect();
    if x.len() == 2 {
        return vec![vec![-e[1], e[0]], e];
    }
    // pick the axis least aligned with e
    let k = (0..3)
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap();
    let mut a = vec![0.0; 3];
    a[k] = 1.0;
    let d: f64 = a.iter().zip(&e).map(|(p, q)| p * q).sum();
    let mut u: Vec<f64> = a.iter().zip(&e).map(|(p, q)| p - d * q).collect();
    let un = norm(&u);
    u.iter_mut().for_each(|v| *v /= un);
    let w = vec![
        e[1] * u[2] - e[2] * u[1],
        e[2] * u[0] - e[0] * u[2],
        e[0] * u[1] - e[1] * u[0],
    ];
    vec![u, w, e]
}

impl FundamentalSolution {
    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn m(&self) -> usize {
        self.system.m()
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    /// Whether `E(x)` was found to depend on `|x|` only.
    pub fn radial(&self) -> bool {
        self.radial
    }

    pub fn has_analytic_gradient(&self) -> bool {
        !matches!(self.eval, Evaluator::Sphere { .. })
    }

    pub fn eval(&self, x: &[f64]) -> Result<CMat, KernelError> {
        let n = self.n();
        if x.len() != n {
            return Err(KernelError::DimensionMismatch(format!("point has {} coordinates, expected {n}", x.len())));
        }
        let r = norm(x);
        if r == 0.0 {
            return Err(KernelError::ZeroArgument);
        }
        let m = self.m();
        match &self.eval {
            Evaluator::Harmonic => Ok(DMatrix::identity(m, m) * C64::new(harmonic_closed_form(n, r), 0.0)),
            Evaluator::Scalar { s_inv, coef } => {
                let q = quad_form(s_inv, x);
                let v = if n == 3 { coef / q.sqrt() } else { coef * q.ln() };
                Ok(DMatrix::from_element(1, 1, v))
            }
            Evaluator::Sphere { rule, fd_step, offset } => {
                let delta = fd_step * r;
                let mut lap = self.sphere_integral(rule, x)? * C64::new(-30.0 * n as f64, 0.0);
                for axis in 0..n {
                    for (shift, w) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
                        let mut y = x.to_vec();
                        y[axis] += shift * delta;
                        lap += self.sphere_integral(rule, &y)? * C64::new(w, 0.0);
                    }
                }
                let pref = if n == 3 { -1.0 / (16.0 * PI * PI) } else { 1.0 / (8.0 * PI * PI) };
                Ok(lap * C64::new(pref / (12.0 * delta * delta), 0.0) + offset)
            }
        }
    }

    /// `int g(x.xi) L(xi)^{-1} dsigma` with nodes realigned to `x`; the
    /// integrand is even in `xi`, so only `x.xi >= 0` is visited and doubled.
    fn sphere_integral(&self, rule: &SphereRule, x: &[f64]) -> Result<CMat, KernelError> {
        let n = self.n();
        let m = self.m();
        let r = norm(x);
        let fr = frame(x);
        let mut acc: CMat = DMatrix::zeros(m, m);
        for (&u, &wu) in rule.u_nodes.iter().zip(&rule.u_weights) {
            for j in 0..rule.azimuths {
                let (xi, s, w) = if n == 2 {
                    let xi: Vec<f64> = (0..2).map(|c| u.cos() * fr[1][c] + u.sin() * fr[0][c]).collect();
                    let s = r * u.cos();
                    (xi, s, wu)
                } else {
                    let phi = 2.0 * PI * j as f64 / rule.azimuths as f64;
                    let st = (1.0 - u * u).max(0.0).sqrt();
                    let xi: Vec<f64> = (0..3)
                        .map(|c| st * phi.cos() * fr[0][c] + st * phi.sin() * fr[1][c] + u * fr[2][c])
                        .collect();
                    (xi, r * u, wu * 2.0 * PI / rule.azimuths as f64)
                };
                let g = if n == 2 {
                    if s == 0.0 {
                        0.0
                    } else {
                        s * s * s.abs().ln()
                    }
                } else {
                    s.abs()
                };
                let sym = self.system.symbol(&xi);
                if sym.determinant().norm() < 1e-12 {
                    return Err(KernelError::SingularSymbol);
                }
                let inv = sym.try_inverse().ok_or(KernelError::SingularSymbol)?;
                acc += inv * C64::new(2.0 * g * w, 0.0);
            }
        }
        Ok(acc)
    }

    /// `d E / d x_n`: analytic for the closed forms, otherwise a central
    /// difference with step `1e-4`.
    pub fn normal_derivative(&self, x: &[f64], analytic: bool) -> Result<CMat, KernelError> {
        let n = self.n();
        let r = norm(x);
        if r == 0.0 {
            return Err(KernelError::ZeroArgument);
        }
        if analytic {
            match &self.eval {
                Evaluator::Harmonic => {
                    let d = if n == 3 {
                        x[n - 1] / (4.0 * PI * r.powi(3))
                    } else {
                        x[n - 1] / (2.0 * PI * r * r)
                    };
                    return Ok(DMatrix::identity(self.m(), self.m()) * C64::new(d, 0.0));
                }
                Evaluator::Scalar { s_inv, coef } => {
                    let q = quad_form(s_inv, x);
                    // (S^{-1} x)_n
                    let sx: C64 = (0..n).map(|j| s_inv[(n - 1, j)] * x[j]).sum();
                    let d = if n == 3 {
                        -coef * sx / (q * q.sqrt())
                    } else {
                        coef * sx * 2.0 / q
                    };
                    return Ok(DMatrix::from_element(1, 1, d));
                }
                Evaluator::Sphere { .. } => {}
            }
        }
        let step = 1e-4;
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[n - 1] += step;
        minus[n - 1] -= step;
        Ok((self.eval(&plus)? - self.eval(&minus)?) * C64::new(0.5 / step, 0.0))
    }
}

/// `(S^{-1} x) . x` without conjugation.
fn quad_form(s_inv: &CMat, x: &[f64]) -> C64 {
    let n = x.len();
    let mut q = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            q += s_inv[(i, j)] * (x[i] * x[j]);
        }
    }
    q
}

/// `E(x) = E(y)` within `1e-6` relative for seeded random pairs with
/// `|x| = |y|` in `[0.5, 2]`.
pub fn is_radial(e: &FundamentalSolution, samples: usize) -> bool {
    let n = e.n();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut pairs = Vec::with_capacity(samples);
    let mut scale = 0.0f64;
    for _ in 0..samples {
        let r: f64 = rng.gen_range(0.5..2.0);
        let mut pts = [vec![0.0; n], vec![0.0; n]];
        for p in pts.iter_mut() {
            for c in p.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let k = norm(p).max(1e-12);
            p.iter_mut().for_each(|c| *c *= r / k);
        }
        let (Ok(a), Ok(b)) = (e.eval(&pts[0]), e.eval(&pts[1])) else {
            return false;
        };
        scale = scale.max(a.norm()).max(b.norm());
        pairs.push((a, b));
    }
    pairs.iter().all(|(a, b)| (a - b).norm() <= 1e-6 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::lame;

    #[test]
    fn harmonic_values() {
        let e3 = harmonic_fundamental_solution(3, 1).unwrap();
        assert!((e3.eval(&[1.0, 0.0, 0.0]).unwrap()[(0, 0)].re + 0.079577).abs() < 1e-6);
        let e2 = harmonic_fundamental_solution(2, 1).unwrap();
        assert!(e2.eval(&[0.6, 0.8]).unwrap()[(0, 0)].norm() < 1e-15);
        assert!(e3.radial() && e2.radial());
        assert_eq!(e2.eval(&[0.0, 0.0]), Err(KernelError::ZeroArgument));
    }

    #[test]
    fn scalar_identity_matches_harmonic() {
        for n in [2, 3] {
            let e = scalar_fundamental_solution(&DMatrix::identity(n, n)).unwrap();
            let x: Vec<f64> = (0..n).map(|i| 0.3 + 0.4 * i as f64).collect();
            let v = e.eval(&x).unwrap()[(0, 0)];
            assert!((v.re - harmonic_closed_form(n, norm(&x))).abs() < 1e-14 && v.im.abs() < 1e-15);
            let d = e.normal_derivative(&x, true).unwrap()[(0, 0)].re;
            let fd = e.normal_derivative(&x, false).unwrap()[(0, 0)].re;
            assert!((d - fd).abs() < 1e-7 * d.abs());
        }
    }

    #[test]
    fn scalar_ellipse_level_sets() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(4.0, 0.0), C64::new(1.0, 0.0)]));
        let e = scalar_fundamental_solution(&a).unwrap();
        let v1 = e.eval(&[2.0, 0.0]).unwrap()[(0, 0)];
        let v2 = e.eval(&[0.0, 1.0]).unwrap()[(0, 0)];
        assert!((v1 - v2).norm() < 1e-14);
        assert!(!e.radial());
        let bad = -DMatrix::<C64>::identity(2, 2);
        assert!(matches!(scalar_fundamental_solution(&bad), Err(KernelError::NotStronglyElliptic(_))));
    }

    #[test]
    fn sphere_quadrature_laplacian_3d() {
        let e = sphere_quadrature_fundamental_solution(&laplacian(3, 1).unwrap(), 590, 1e-2).unwrap();
        for r in [0.5, 1.0, 2.5, 4.0] {
            let x = [0.3 * r, -0.5 * r, (1.0f64 - 0.34).sqrt() * r];
            let v = e.eval(&x).unwrap()[(0, 0)].re;
            let exact = harmonic_closed_form(3, r);
            assert!((v - exact).abs() < 1e-3 * exact.abs(), "r={r} {v} {exact}");
        }
        assert!(e.radial());
    }

    #[test]
    fn sphere_quadrature_laplacian_2d_pinned() {
        let e = sphere_quadrature_fundamental_solution(&laplacian(2, 1).unwrap(), 512, 1e-2).unwrap();
        for r in [0.5, 1.7, 4.0] {
            let v = e.eval(&[r * 0.6, -r * 0.8]).unwrap()[(0, 0)].re;
            assert!((v - harmonic_closed_form(2, r)).abs() < 1e-3 * harmonic_closed_form(2, r).abs().max(1e-2));
        }
    }

    #[test]
    fn lame_quadrature_is_even_and_not_radial() {
        let e = sphere_quadrature_fundamental_solution(&lame(3, 1.0, 1.0).unwrap(), 590, 1e-2).unwrap();
        let x = [0.4, 0.9, -0.3];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = e.eval(&x).unwrap();
        let b = e.eval(&y).unwrap();
        assert!((&a - &b).norm() < 1e-9 * a.norm());
        assert!(!e.radial());
    }
}
