//! Hardy-space and central Beurling atoms, the Beurling norm, and the
//! weighted decay check against `M^2(1_B)`.

use rand::Rng;
use serde::Serialize;

use super::{boyd_indices, default_t_grid, norm, NormSpec, SpaceError};
use crate::grid::{ball_indicator, integrate, BoundaryField, BoundaryGrid, C64};
use crate::maxop::{ap_constant, iterated_maximal, CubeRef};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AtomFlavor {
    /// `(1, q)`-atom: `||a||_q <= |Q|^{1/q - 1}`, `q` in `(1, inf]`.
    H1 { q: f64 },
    /// Central `(1, p)`-atom: cube centred at the origin with side at least 1.
    BeurlingCentral { p: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub field: BoundaryField,
    pub cube: CubeRef,
    pub flavor: AtomFlavor,
}

fn lq_norm(vals: &[f64], q: f64, cell: f64) -> f64 {
    if q.is_infinite() {
        vals.iter().fold(0.0, |a, b| a.max(*b))
    } else {
        (vals.iter().map(|v| v.powf(q)).sum::<f64>() * cell).powf(1.0 / q)
    }
}

/// Checks support (within one cell of the cube), size and cancellation
/// (`|int a| <= h ||a||_1` per channel).
pub fn validate_atom(candidate: &BoundaryField, cube: &CubeRef, flavor: AtomFlavor) -> Result<Atom, SpaceError> {
    let grid = candidate.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    if cube.center.len() != dim || !(cube.side > 0.0) {
        return Err(SpaceError::SpecViolation("cube does not match the grid dimension".into()));
    }
    let exponent = match flavor {
        AtomFlavor::H1 { q } => q,
        AtomFlavor::BeurlingCentral { p } => p,
    };
    if !(exponent > 1.0) {
        return Err(SpaceError::SpecViolation(format!("atom exponent {exponent} must exceed 1")));
    }
    if let AtomFlavor::BeurlingCentral { .. } = flavor {
        if cube.center.iter().any(|c| c.abs() > 0.5 * h) {
            return Err(SpaceError::SpecViolation("central atoms need a cube centred at the origin".into()));
        }
        if cube.side < 1.0 {
            return Err(SpaceError::SizeViolation(format!("side {} below 1", cube.side)));
        }
    }
    let modulus = candidate.modulus();
    for (k, v) in modulus.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let x = grid.node(k);
        if (0..dim).any(|a| (x[a] - cube.center[a]).abs() > 0.5 * cube.side + h) {
            return Err(SpaceError::SupportViolation { node: k });
        }
    }
    let cell = grid.cell_volume();
    let measure = cube.side.powi(dim as i32);
    let size = lq_norm(&modulus, exponent, cell);
    let bound = measure.powf(1.0 / exponent - 1.0);
    if size > bound * (1.0 + 1e-9) {
        return Err(SpaceError::SizeViolation(format!("norm {size} exceeds {bound}")));
    }
    let l1 = modulus.iter().sum::<f64>() * cell;
    let tol = h * l1;
    let mean = integrate(candidate).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if mean > tol {
        return Err(SpaceError::MeanNotZero { mean, tol });
    }
    Ok(Atom {
        field: candidate.clone(),
        cube: cube.clone(),
        flavor,
    })
}

/// Random `(1, q)`-atom with `channels` components on a grid-aligned cube
/// of `2^j <= N/64` nodes per side lying in the central half of the grid. The size
/// is set to `0.9 |Q|^{1/q-1}`.
pub fn random_h1_atom(
    grid: &BoundaryGrid,
    channels: usize,
    q: f64,
    rng: &mut impl Rng,
) -> Result<Atom, SpaceError> {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let jmax = (n.trailing_zeros() as i32 - 6).max(1) as usize;
    let l = 1usize << rng.gen_range(1..=jmax);
    let lo = n / 4;
    let corner: Vec<usize> = (0..dim).map(|_| rng.gen_range(lo..=(3 * n / 4 - l))).collect();
    let inside = |k: usize| {
        let idx = grid.axis_indices(k);
        (0..dim).all(|a| idx[a] >= corner[a] && idx[a] < corner[a] + l)
    };
    let mut values = vec![C64::new(0.0, 0.0); grid.node_count() * channels];
    let count = (0..grid.node_count()).filter(|k| inside(*k)).count() as f64;
    for c in 0..channels {
        let mut sum = 0.0;
        let raw: Vec<(usize, f64)> = (0..grid.node_count())
            .filter(|k| inside(*k))
            .map(|k| {
                let v: f64 = rng.gen_range(-1.0..1.0);
                sum += v;
                (k, v)
            })
            .collect();
        for (k, v) in raw {
            values[k * channels + c] = C64::new(v - sum / count, 0.0);
        }
    }
    let mut field = BoundaryField::new(grid.clone(), channels, values)?;
    let side = l as f64 * grid.spacing();
    let cube = CubeRef {
        center: (0..dim).map(|a| grid.axis_coord(corner[a]) + 0.5 * side).collect(),
        side,
    };
    let size = lq_norm(&field.modulus(), q, grid.cell_volume());
    if size > 0.0 {
        let target = 0.9 * side.powi(dim as i32).powf(1.0 / q - 1.0);
        field = field.scale(C64::new(target / size, 0.0));
    }
    validate_atom(&field, &cube, AtomFlavor::H1 { q })
}

/// `sum_k 2^{k dim / p'} ||f 1_{C_k}||_p` with `C_0 = {|x| < 1}` and
/// `C_k = {2^{k-1} <= |x| < 2^k}`.
pub fn beurling_norm(f: &BoundaryField, p: f64) -> Result<f64, SpaceError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(SpaceError::SpecViolation(format!("Beurling exponent {p} outside (1, inf)")));
    }
    let grid = f.grid();
    let pp = p / (p - 1.0);
    let mut shells: Vec<f64> = Vec::new();
    for (k, v) in f.modulus().iter().enumerate() {
        let r = grid.node_norm(k);
        let shell = if r < 1.0 { 0 } else { r.log2().floor() as usize + 1 };
        if shells.len() <= shell {
            shells.resize(shell + 1, 0.0);
        }
        shells[shell] += v.powf(p);
    }
    let cell = grid.cell_volume();
    Ok(shells
        .iter()
        .enumerate()
        .map(|(k, s)| 2f64.powf(k as f64 * grid.dim() as f64 / pp) * (s * cell).powf(1.0 / p))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub p_x: f64,
    pub ap_constant: f64,
}

/// `lhs = int |h| M^2(1_B)` against `rhs = ||h||_{X(w)} / ||1_B||_{X(w)}`
/// for the unit ball `B`.
pub fn xw_decay_check(spec: &NormSpec, h: &BoundaryField) -> Result<DecayCheck, SpaceError> {
    let NormSpec::WeightedRi { weight, .. } = spec else {
        return Err(SpaceError::SpecViolation("decay check needs a weighted r.i. norm".into()));
    };
    spec.validate()?;
    let grid = h.grid();
    let p_x = boyd_indices(spec, &default_t_grid())?.p_x;
    if !(p_x > 1.0 && p_x.is_finite()) {
        return Err(SpaceError::SpecViolation(format!("lower Boyd index {p_x} must lie in (1, inf)")));
    }
    let w = weight.resolve(grid)?;
    let ap = ap_constant(&w, p_x)?.constant;
    if !ap.is_finite() {
        return Err(SpaceError::SpecViolation("weight fails the A_p screen".into()));
    }
    let ball = ball_indicator(grid, &vec![0.0; grid.dim()], 1.0);
    let m2 = iterated_maximal(&ball).real_values();
    let lhs = h.modulus().iter().zip(&m2).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
    let rhs = norm(h, spec)? / norm(&ball, spec)?;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(DecayCheck {
        lhs,
        rhs,
        ratio,
        p_x,
        ap_constant: ap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_real;
    use crate::spaces::WeightProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> BoundaryGrid {
        BoundaryGrid::new(1, 8.0, 1024).unwrap()
    }

    fn cube(c: f64, side: f64) -> CubeRef {
        CubeRef { center: vec![c], side }
    }

    #[test]
    fn equality_case_atom() {
        let g = grid();
        let a = sample_real(&g, |x| {
            if (0.0..1.0).contains(&x[0]) {
                0.5
            } else if (-1.0..0.0).contains(&x[0]) {
                -0.5
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(validate_atom(&a, &cube(0.0, 2.0), AtomFlavor::H1 { q: 2.0 }).is_ok());
        let too_big = a.scale(C64::new(1.01, 0.0));
        assert!(matches!(
            validate_atom(&too_big, &cube(0.0, 2.0), AtomFlavor::H1 { q: 2.0 }),
            Err(SpaceError::SizeViolation(_))
        ));
    }

    #[test]
    fn rejections() {
        let g = grid();
        let flat = sample_real(&g, |x| if (-1.0..1.0).contains(&x[0]) { 0.5 } else { 0.0 }).unwrap();
        assert!(matches!(
            validate_atom(&flat, &cube(0.0, 2.0), AtomFlavor::H1 { q: 2.0 }),
            Err(SpaceError::MeanNotZero { .. })
        ));
        assert!(matches!(
            validate_atom(&flat, &cube(3.0, 2.0), AtomFlavor::H1 { q: 2.0 }),
            Err(SpaceError::SupportViolation { .. })
        ));
        let small = BoundaryField::zeros(&g, 1);
        assert!(matches!(
            validate_atom(&small, &cube(0.0, 0.5), AtomFlavor::BeurlingCentral { p: 2.0 }),
            Err(SpaceError::SizeViolation(_))
        ));
    }

    #[test]
    fn random_atoms_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_h1_atom(&grid(), 2, 2.0, &mut rng).unwrap();
            assert!(a.field.max_abs() > 0.0);
        }
        let g2 = BoundaryGrid::new(2, 8.0, 64).unwrap();
        assert!(random_h1_atom(&g2, 1, 2.0, &mut rng).is_ok());
    }

    #[test]
    fn beurling_examples() {
        let g = grid();
        let ball = ball_indicator(&g, &[0.0], 1.0);
        let mass = integrate(&ball)[0].re;
        assert!((beurling_norm(&ball, 2.0).unwrap() - mass.sqrt()).abs() < 1e-12);
        assert_eq!(beurling_norm(&BoundaryField::zeros(&g, 1), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn decay_check_examples() {
        let g = grid();
        let spec = NormSpec::WeightedRi {
            base: Box::new(NormSpec::Lebesgue { p: 2.0 }),
            weight: WeightProfile::Unit,
        };
        let ball = ball_indicator(&g, &[0.0], 1.0);
        let rep = xw_decay_check(&spec, &ball).unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
        let zero = xw_decay_check(&spec, &BoundaryField::zeros(&g, 1)).unwrap();
        assert_eq!(zero.lhs, 0.0);
        let h = sample_real(&g, |x| 1.0 / (1.0 + x[0].abs())).unwrap();
        assert!(xw_decay_check(&NormSpec::Lebesgue { p: 2.0 }, &h).is_err());
    }
}
