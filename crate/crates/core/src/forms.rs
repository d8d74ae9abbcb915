//! Discrete exterior calculus on a parameter grid.
//!
//! One-forms are stored per node as a coefficient pair together with a
//! basis tag. In the coordinate basis `(f, g)` means `f·ds + g·dt`; in a
//! frame basis it means `f·ω¹ + g·ω²` for the coframe carried by the tag.
//! Two-forms are stored as the coefficient of `ds∧dt` with
//! `(θ∧η)(X, Y) = θ(X)η(Y) − θ(Y)η(X)` (no ½), so `(ds∧dt)(∂s, ∂t) = 1`.
//!
//! Derivatives use second-order central differences at interior nodes and
//! three-point one-sided differences on the boundary.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{AxisStencil, Grid};
use crate::minkowski::LVec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("singular coframe at node ({i}, {j}): det = {det:e}")]
    SingularCoframe { i: usize, j: usize, det: f64 },
}

/// Scalar field sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScalar {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridScalar {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "scalar shape mismatch");
        Self { grid, values }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        Self::new(grid, vec![v; grid.len()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|n| {
                let (i, j) = grid.ij(n);
                f(grid.s(i), grid.t(j))
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &GridScalar, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid);
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max absolute value over nodes at least `margin` away from the edges.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        self.grid
            .interior(margin)
            .fold(0.0, |m, n| m.max(self.values[n].abs()))
    }
}

/// Per-node coordinate matrix of a coframe: row `r` holds the `(ds, dt)`
/// coefficients of `ω^(r+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coframe {
    pub grid: Grid,
    pub matrix: Vec<[[f64; 2]; 2]>,
}

impl Coframe {
    pub fn new(grid: Grid, matrix: Vec<[[f64; 2]; 2]>) -> Result<Self, FormError> {
        assert_eq!(matrix.len(), grid.len(), "coframe shape mismatch");
        for (n, m) in matrix.iter().enumerate() {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            if det.is_nan() || det.abs() < 1e-12 * scale * scale || scale == 0.0 {
                let (i, j) = grid.ij(n);
                return Err(FormError::SingularCoframe { i, j, det });
            }
        }
        Ok(Self { grid, matrix })
    }

    /// The coordinate coframe `(ds, dt)`.
    pub fn coordinate(grid: Grid) -> Self {
        Self {
            grid,
            matrix: vec![[[1.0, 0.0], [0.0, 1.0]]; grid.len()],
        }
    }

    /// `ω¹∧ω² = det · ds∧dt`.
    pub fn det(&self, n: usize) -> f64 {
        let m = &self.matrix[n];
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn omega(&self, r: usize) -> GridOneForm {
        let f = self.matrix.iter().map(|m| m[r][0]).collect();
        let g = self.matrix.iter().map(|m| m[r][1]).collect();
        GridOneForm::coordinate(self.grid, f, g)
    }

    /// Coordinate coefficients of `a·ω¹ + b·ω²` at node `n`.
    #[inline]
    pub fn frame_to_coord(&self, n: usize, a: f64, b: f64) -> (f64, f64) {
        let m = &self.matrix[n];
        (a * m[0][0] + b * m[1][0], a * m[0][1] + b * m[1][1])
    }

    /// Frame coefficients of `f·ds + g·dt` at node `n`.
    #[inline]
    pub fn coord_to_frame(&self, n: usize, f: f64, g: f64) -> (f64, f64) {
        let m = &self.matrix[n];
        let det = self.det(n);
        // solve Mᵀ (a, b) = (f, g)
        (
            (m[1][1] * f - m[1][0] * g) / det,
            (-m[0][1] * f + m[0][0] * g) / det,
        )
    }
}

#[derive(Debug, Clone)]
pub enum Basis {
    Coordinate,
    Frame(Arc<Coframe>),
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Basis::Coordinate, Basis::Coordinate) => true,
            (Basis::Frame(a), Basis::Frame(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOneForm {
    pub grid: Grid,
    pub basis: Basis,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl GridOneForm {
    pub fn coordinate(grid: Grid, f: Vec<f64>, g: Vec<f64>) -> Self {
        assert!(
            f.len() == grid.len() && g.len() == grid.len(),
            "one-form shape mismatch"
        );
        Self {
            grid,
            basis: Basis::Coordinate,
            f,
            g,
        }
    }

    pub fn frame(coframe: &Arc<Coframe>, f: Vec<f64>, g: Vec<f64>) -> Self {
        let grid = coframe.grid;
        assert!(
            f.len() == grid.len() && g.len() == grid.len(),
            "one-form shape mismatch"
        );
        Self {
            grid,
            basis: Basis::Frame(coframe.clone()),
            f,
            g,
        }
    }

    pub fn zero(grid: Grid) -> Self {
        Self::coordinate(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    /// `a·ω¹ + b·ω²` from scalar coefficient fields.
    pub fn from_frame_scalars(coframe: &Arc<Coframe>, a: &GridScalar, b: &GridScalar) -> Self {
        Self::frame(coframe, a.values.clone(), b.values.clone())
    }

    pub fn is_coordinate(&self) -> bool {
        matches!(self.basis, Basis::Coordinate)
    }

    pub fn to_coord(&self) -> GridOneForm {
        match &self.basis {
            Basis::Coordinate => self.clone(),
            Basis::Frame(cf) => {
                let (f, g) = (0..self.grid.len())
                    .map(|n| cf.frame_to_coord(n, self.f[n], self.g[n]))
                    .unzip();
                GridOneForm::coordinate(self.grid, f, g)
            }
        }
    }

    pub fn to_frame(&self, coframe: &Arc<Coframe>) -> GridOneForm {
        if let Basis::Frame(cf) = &self.basis {
            if Arc::ptr_eq(cf, coframe) {
                return self.clone();
            }
        }
        let c = self.to_coord();
        let (f, g) = (0..self.grid.len())
            .map(|n| coframe.coord_to_frame(n, c.f[n], c.g[n]))
            .unzip();
        GridOneForm::frame(coframe, f, g)
    }

    /// First / second coefficient as scalar fields in the current basis.
    pub fn first(&self) -> GridScalar {
        GridScalar::new(self.grid, self.f.clone())
    }

    pub fn second(&self) -> GridScalar {
        GridScalar::new(self.grid, self.g.clone())
    }

    /// Evaluate on the coordinate vector `∂s` (first) or `∂t` (second).
    pub fn coord_pair(&self, n: usize) -> (f64, f64) {
        match &self.basis {
            Basis::Coordinate => (self.f[n], self.g[n]),
            Basis::Frame(cf) => cf.frame_to_coord(n, self.f[n], self.g[n]),
        }
    }

    fn aligned(&self, other: &GridOneForm) -> (GridOneForm, GridOneForm) {
        assert_eq!(self.grid, other.grid, "one-forms on different grids");
        if self.basis == other.basis {
            (self.clone(), other.clone())
        } else {
            (self.to_coord(), other.to_coord())
        }
    }

    pub fn add(&self, other: &GridOneForm) -> GridOneForm {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridOneForm) -> GridOneForm {
        self.lincomb(1.0, other, -1.0)
    }

    /// `α·self + β·other`.
    pub fn lincomb(&self, alpha: f64, other: &GridOneForm, beta: f64) -> GridOneForm {
        let (a, b) = self.aligned(other);
        let f =
            a.f.iter()
                .zip(&b.f)
                .map(|(x, y)| alpha * x + beta * y)
                .collect();
        let g =
            a.g.iter()
                .zip(&b.g)
                .map(|(x, y)| alpha * x + beta * y)
                .collect();
        GridOneForm { f, g, ..a }
    }

    pub fn scale(&self, k: f64) -> GridOneForm {
        GridOneForm {
            f: self.f.iter().map(|v| v * k).collect(),
            g: self.g.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &GridScalar) -> GridOneForm {
        assert_eq!(self.grid, s.grid);
        GridOneForm {
            f: self.f.iter().zip(&s.values).map(|(v, k)| v * k).collect(),
            g: self.g.iter().zip(&s.values).map(|(v, k)| v * k).collect(),
            ..self.clone()
        }
    }

    /// Max of `|first|, |second|` over nodes at least `margin` from the edge,
    /// measured in the frame basis of `coframe`.
    pub fn max_abs_frame(&self, coframe: &Arc<Coframe>, margin: usize) -> f64 {
        let fr = self.to_frame(coframe);
        self.grid
            .interior(margin)
            .fold(0.0, |m, n| m.max(fr.f[n].abs()).max(fr.g[n].abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTwoForm {
    pub grid: Grid,
    /// Coefficient of `ds∧dt`.
    pub w: Vec<f64>,
}

impl GridTwoForm {
    pub fn new(grid: Grid, w: Vec<f64>) -> Self {
        assert_eq!(w.len(), grid.len());
        Self { grid, w }
    }

    pub fn sub(&self, other: &GridTwoForm) -> GridTwoForm {
        assert_eq!(self.grid, other.grid);
        GridTwoForm::new(
            self.grid,
            self.w.iter().zip(&other.w).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn add(&self, other: &GridTwoForm) -> GridTwoForm {
        assert_eq!(self.grid, other.grid);
        GridTwoForm::new(
            self.grid,
            self.w.iter().zip(&other.w).map(|(a, b)| a + b).collect(),
        )
    }

    /// `s · ω¹∧ω²` for a scalar field `s`.
    pub fn from_frame_area(coframe: &Coframe, s: &GridScalar) -> GridTwoForm {
        GridTwoForm::new(
            coframe.grid,
            (0..coframe.grid.len())
                .map(|n| s.values[n] * coframe.det(n))
                .collect(),
        )
    }

    /// Coefficient with respect to `ω¹∧ω²`.
    pub fn in_frame(&self, coframe: &Coframe) -> GridScalar {
        GridScalar::new(
            self.grid,
            (0..self.grid.len())
                .map(|n| self.w[n] / coframe.det(n))
                .collect(),
        )
    }
}

/// Second-order partial derivatives `(∂/∂s, ∂/∂t)` of a sampled field.
pub struct Differ {
    grid: Grid,
    ds: AxisStencil,
    dt: AxisStencil,
}

impl Differ {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            ds: AxisStencil::new(grid.ns, 1, 2),
            dt: AxisStencil::new(grid.nt, 1, 2),
        }
    }

    pub fn partial_s(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let h = g.hs();
        (0..g.len())
            .map(|n| {
                let (i, j) = g.ij(n);
                self.ds.apply(i, h, |k| v[g.idx(k, j)])
            })
            .collect()
    }

    pub fn partial_t(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let h = g.ht();
        (0..g.len())
            .map(|n| {
                let (i, j) = g.ij(n);
                self.dt.apply(j, h, |k| v[g.idx(i, k)])
            })
            .collect()
    }

    /// Partials of an ambient-vector field, componentwise.
    pub fn partials_vec(&self, v: &[LVec3]) -> (Vec<LVec3>, Vec<LVec3>) {
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| v.iter().map(|x| x.to_array()[c]).collect())
            .collect();
        let ps: Vec<Vec<f64>> = comps.iter().map(|c| self.partial_s(c)).collect();
        let pt: Vec<Vec<f64>> = comps.iter().map(|c| self.partial_t(c)).collect();
        let join = |p: &[Vec<f64>]| {
            (0..v.len())
                .map(|n| LVec3::new(p[0][n], p[1][n], p[2][n]))
                .collect()
        };
        (join(&ps), join(&pt))
    }
}

pub fn d_scalar(f: &GridScalar) -> GridOneForm {
    let d = Differ::new(f.grid);
    GridOneForm::coordinate(f.grid, d.partial_s(&f.values), d.partial_t(&f.values))
}

/// `d(f ds + g dt) = (∂g/∂s − ∂f/∂t) ds∧dt`.
pub fn d_oneform(theta: &GridOneForm) -> GridTwoForm {
    let c = theta.to_coord();
    let d = Differ::new(c.grid);
    let gs = d.partial_s(&c.g);
    let ft = d.partial_t(&c.f);
    GridTwoForm::new(c.grid, gs.iter().zip(&ft).map(|(a, b)| a - b).collect())
}

pub fn wedge(theta: &GridOneForm, eta: &GridOneForm) -> GridTwoForm {
    assert_eq!(theta.grid, eta.grid);
    let (a, b) = (theta.to_coord(), eta.to_coord());
    GridTwoForm::new(
        a.grid,
        (0..a.grid.len())
            .map(|n| a.f[n] * b.g[n] - a.g[n] * b.f[n])
            .collect(),
    )
}

/// `⋆(f·ω¹ + g·ω²) = g·ω¹ + f·ω²`; the result is in the frame basis.
pub fn hodge_star(theta: &GridOneForm, coframe: &Arc<Coframe>) -> GridOneForm {
    let fr = theta.to_frame(coframe);
    GridOneForm::frame(coframe, fr.g, fr.f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit(n: usize) -> Grid {
        Grid::new((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn d_of_constant_and_linear() {
        let g = unit(9);
        let df = d_scalar(&GridScalar::constant(g, 5.0));
        assert!(df.f.iter().chain(&df.g).all(|v| v.abs() < 1e-12));
        let ds = d_scalar(&GridScalar::from_fn(g, |s, _| s));
        assert!(ds.f.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(ds.g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn d_of_bilinear_is_exact() {
        let g = unit(33);
        let df = d_scalar(&GridScalar::from_fn(g, |s, t| s * t));
        for n in 0..g.len() {
            let (i, j) = g.ij(n);
            assert_abs_diff_eq!(df.f[n], g.t(j), epsilon = 1e-12);
            assert_abs_diff_eq!(df.g[n], g.s(i), epsilon = 1e-12);
        }
    }

    #[test]
    fn d_oneform_examples() {
        let g = unit(17);
        let ds = GridOneForm::coordinate(g, vec![1.0; g.len()], vec![0.0; g.len()]);
        assert!(d_oneform(&ds).w.iter().all(|v| v.abs() < 1e-12));
        let t = GridScalar::from_fn(g, |_, t| t);
        let t_ds = ds.mul_scalar(&t);
        assert!(d_oneform(&t_ds).w.iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn exterior_derivative_is_closed() {
        // s- and t-stencils act on different axes and commute, so d(df)
        // vanishes up to rounding, boundary rows included
        for n in [33, 65] {
            let g = unit(n);
            let f = GridScalar::from_fn(g, |s, t| (2.0 * s).sin() * (3.0 * t).cosh() + s * s * t);
            let dd = d_oneform(&d_scalar(&f))
                .w
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(dd < 1e-9, "{dd}");
        }
    }

    #[test]
    fn wedge_basics() {
        let g = unit(9);
        let n = g.len();
        let ds = GridOneForm::coordinate(g, vec![1.0; n], vec![0.0; n]);
        let dt = GridOneForm::coordinate(g, vec![0.0; n], vec![1.0; n]);
        assert!(wedge(&ds, &dt).w.iter().all(|v| *v == 1.0));
        assert!(wedge(&ds, &ds).w.iter().all(|v| *v == 0.0));
    }

    fn skew_coframe(g: Grid) -> Arc<Coframe> {
        let m = (0..g.len())
            .map(|n| {
                let x = n as f64 * 0.01;
                [[1.0 + x, 0.3], [-0.2 * x, 2.0 - x * 0.1]]
            })
            .collect();
        Arc::new(Coframe::new(g, m).unwrap())
    }

    #[test]
    fn hodge_examples() {
        let g = unit(9);
        let cf = skew_coframe(g);
        let n = g.len();
        let w1 = GridOneForm::frame(&cf, vec![1.0; n], vec![0.0; n]);
        let star = hodge_star(&w1, &cf);
        assert_eq!((star.f[0], star.g[0]), (0.0, 1.0));
        // ⋆(hω¹ + kω²) = kω¹ + hω²
        let conn = GridOneForm::frame(&cf, vec![0.5; n], vec![-2.0; n]);
        let s = hodge_star(&conn, &cf);
        assert_eq!((s.f[3], s.g[3]), (-2.0, 0.5));
        // coordinate ω¹ converts to frame coefficients (1, 0)
        let omega1 = cf.omega(0).to_frame(&cf);
        for k in 0..n {
            assert_abs_diff_eq!(omega1.f[k], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(omega1.g[k], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_coframe_rejected() {
        let g = unit(9);
        let mut m = vec![[[1.0, 0.0], [0.0, 1.0]]; g.len()];
        m[g.idx(2, 3)] = [[1.0, 2.0], [1.0, 2.0]];
        assert!(matches!(
            Coframe::new(g, m),
            Err(FormError::SingularCoframe { i: 2, j: 3, .. })
        ));
    }

    #[test]
    fn leibniz_rule_converges() {
        let err = |n: usize| {
            let g = unit(n);
            let f = GridScalar::from_fn(g, |s, t| (s + 2.0 * t).sin());
            let a = GridScalar::from_fn(g, |s, t| s * t * t + t.exp());
            let b = GridScalar::from_fn(g, |s, t| (s * t).cos());
            let theta = GridOneForm::coordinate(g, a.values, b.values);
            let lhs = d_oneform(&theta.mul_scalar(&f));
            let rhs = wedge(&d_scalar(&f), &theta).add(&GridTwoForm::new(
                g,
                d_oneform(&theta)
                    .w
                    .iter()
                    .zip(&f.values)
                    .map(|(x, y)| x * y)
                    .collect(),
            ));
            lhs.sub(&rhs).w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let (a, b) = (err(33), err(65));
        assert!(a / b > 3.0, "ratio {}", a / b);
    }

    proptest! {
        #[test]
        fn star_involution_and_frame_round_trip(
            vals in proptest::collection::vec(-10.0..10.0f64, 162)
        ) {
            let g = unit(9);
            let cf = skew_coframe(g);
            let theta = GridOneForm::coordinate(g, vals[..81].to_vec(), vals[81..].to_vec());
            let back = theta.to_frame(&cf).to_coord();
            for n in 0..81 {
                let scale = 1.0 + theta.f[n].abs() + theta.g[n].abs();
                prop_assert!((back.f[n] - theta.f[n]).abs() <= 1e-12 * scale);
                prop_assert!((back.g[n] - theta.g[n]).abs() <= 1e-12 * scale);
            }
            let fr = theta.to_frame(&cf);
            let twice = hodge_star(&hodge_star(&fr, &cf), &cf);
            prop_assert_eq!(&twice.f, &fr.f);
            prop_assert_eq!(&twice.g, &fr.g);
            let k = GridScalar::new(g, vals[..81].to_vec());
            let a = hodge_star(&fr.mul_scalar(&k), &cf);
            let b = hodge_star(&fr, &cf).mul_scalar(&k);
            prop_assert_eq!(a.f, b.f);
            prop_assert_eq!(a.g, b.g);
        }

        #[test]
        fn wedge_antisymmetric(vals in proptest::collection::vec(-10.0..10.0f64, 324)) {
            let g = unit(9);
            let a = GridOneForm::coordinate(g, vals[..81].to_vec(), vals[81..162].to_vec());
            let b = GridOneForm::coordinate(g, vals[162..243].to_vec(), vals[243..].to_vec());
            let ab = wedge(&a, &b);
            let ba = wedge(&b, &a);
            for n in 0..81 {
                prop_assert_eq!(ab.w[n], -ba.w[n]);
            }
        }
    }
}
