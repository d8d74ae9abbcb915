//! Integrability of `dT = T·γ¹ + γ²` and the Bonnet classification.
//!
//! The equation is completely integrable exactly when `dγ¹ = 0` and
//! `dγ² = γ¹∧γ²`. A constant-mean-curvature surface without normal
//! curvature has `γ¹ = γ² = 0`, so every constant `T` solves it.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::forms::{d_oneform, wedge, Coframe, GridOneForm, GridScalar, GridTwoForm};
use crate::frame::{IdentityResiduals, InvariantBundle, RESIDUAL_MARGIN};
use crate::grid::Grid;

/// Lower bound for the default classification tolerance; below this the
/// residuals are rounding noise.
pub const TOLERANCE_FLOOR: f64 = 1e-10;

/// Default `tol`: ten times the structure-equation noise at the same grid.
pub fn default_tolerance(residuals: &IdentityResiduals) -> f64 {
    (10.0 * residuals.scale()).max(TOLERANCE_FLOOR)
}

/// Surface data needed by [`bonnet_check`] beyond the γ-forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmcData {
    /// Max of `|dH|` in the frame basis over the interior.
    pub dh_norm: f64,
    /// Max of `|λ₁³|, |λ₂³|`.
    pub beta_norm: f64,
    /// `β ≡ 0` by construction of the ambient model.
    pub beta_exact_zero: bool,
    /// Minimum over nodes of `H² − K`.
    pub min_h2_minus_k: f64,
}

/// The Pfaffian system `dT = T·γ¹ + γ²` on a grid.
#[derive(Debug, Clone)]
pub struct PfaffianSystem {
    pub coframe: Arc<Coframe>,
    /// Coordinate basis.
    pub gamma1: GridOneForm,
    /// Coordinate basis.
    pub gamma2: GridOneForm,
    pub cmc: Option<CmcData>,
}

impl PfaffianSystem {
    pub fn new(coframe: Arc<Coframe>, gamma1: &GridOneForm, gamma2: &GridOneForm) -> Self {
        Self {
            coframe,
            gamma1: gamma1.to_coord(),
            gamma2: gamma2.to_coord(),
            cmc: None,
        }
    }

    pub fn from_bundle(b: &InvariantBundle) -> Self {
        let cf = b.coframe().clone();
        let h2k = b
            .mean
            .values
            .iter()
            .zip(&b.gauss.values)
            .map(|(h, k)| h * h - k)
            .fold(f64::INFINITY, f64::min);
        let beta_norm = b.ambient.lambda1.max_abs().max(b.ambient.lambda2.max_abs());
        Self {
            gamma1: b.forms.gamma1.to_coord(),
            gamma2: b.forms.gamma2.to_coord(),
            cmc: Some(CmcData {
                dh_norm: b.dh.max_abs_frame(&cf, RESIDUAL_MARGIN),
                beta_norm,
                beta_exact_zero: b.ambient.exact_zero,
                min_h2_minus_k: h2k,
            }),
            coframe: cf,
        }
    }

    pub fn grid(&self) -> Grid {
        self.coframe.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Constant mean curvature, zero normal curvature, `H² > K`.
    CMCFlatNormalBonnet,
    /// Both integrability conditions hold within tolerance.
    IntegrableBonnet,
    /// An integrability condition fails by more than ten times the tolerance.
    NotIntegrable,
    /// Neither clearly; refine the grid.
    Indeterminate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::CMCFlatNormalBonnet => "CMCFlatNormalBonnet",
            Classification::IntegrableBonnet => "IntegrableBonnet",
            Classification::NotIntegrable => "NotIntegrable",
            Classification::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_bonnet(self) -> bool {
        matches!(
            self,
            Classification::CMCFlatNormalBonnet | Classification::IntegrableBonnet
        )
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BonnetReport {
    /// `dγ¹`.
    pub r1: GridTwoForm,
    /// `dγ² − γ¹∧γ²`.
    pub r2: GridTwoForm,
    /// Max of the `ω¹∧ω²` coefficient of `r1` over the interior.
    pub norm_r1: f64,
    pub norm_r2: f64,
    pub dh_norm: f64,
    pub beta_norm: f64,
    pub classification: Classification,
    pub tol: f64,
}

pub fn bonnet_check(sys: &PfaffianSystem, tol: f64) -> BonnetReport {
    let r1 = d_oneform(&sys.gamma1);
    let r2 = d_oneform(&sys.gamma2).sub(&wedge(&sys.gamma1, &sys.gamma2));
    let norm = |r: &GridTwoForm| r.in_frame(&sys.coframe).max_abs_interior(RESIDUAL_MARGIN);
    let (norm_r1, norm_r2) = (norm(&r1), norm(&r2));
    let (dh_norm, beta_norm) = sys
        .cmc
        .map(|c| (c.dh_norm, c.beta_norm))
        .unwrap_or((f64::INFINITY, f64::INFINITY));

    let cmc_flat = sys
        .cmc
        .is_some_and(|c| c.dh_norm < tol && c.beta_exact_zero && c.min_h2_minus_k > 0.0);
    let classification = if cmc_flat {
        Classification::CMCFlatNormalBonnet
    } else if norm_r1.max(norm_r2) < tol {
        Classification::IntegrableBonnet
    } else if norm_r1.max(norm_r2) > 10.0 * tol {
        Classification::NotIntegrable
    } else {
        Classification::Indeterminate
    };
    BonnetReport {
        r1,
        r2,
        norm_r1,
        norm_r2,
        dh_norm,
        beta_norm,
        classification,
        tol,
    }
}

/// Solution of `dT = T·γ¹ + γ²` swept out from the center node.
#[derive(Debug, Clone)]
pub struct TSolution {
    pub t: GridScalar,
    pub t0: f64,
    /// Max over plaquettes of the loop mismatch `|T_end − T_start|`.
    pub path_residual: f64,
}

/// One classical Runge–Kutta step for `dT/dσ = T·g1(σ) + g2(σ)` over a grid
/// edge of signed length `delta`, with `g1, g2` linear between the endpoint
/// values.
#[inline]
fn rk4_edge(t: f64, delta: f64, g1: (f64, f64), g2: (f64, f64)) -> f64 {
    let mid1 = 0.5 * (g1.0 + g1.1);
    let mid2 = 0.5 * (g2.0 + g2.1);
    let k1 = delta * (t * g1.0 + g2.0);
    let k2 = delta * ((t + 0.5 * k1) * mid1 + mid2);
    let k3 = delta * ((t + 0.5 * k2) * mid1 + mid2);
    let k4 = delta * ((t + k3) * g1.1 + g2.1);
    t + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
}

/// Edge walker shared by the T sweep and frame reconstruction: visits the
/// center node, then the center row (varying `s`), then each column
/// outward from the center row. Yields `(from, to, axis_is_s, delta)`.
pub(crate) fn sweep_edges(grid: Grid) -> Vec<(usize, usize, bool, f64)> {
    let (ic, jc) = grid.center();
    let (hs, ht) = (grid.hs(), grid.ht());
    let mut edges = Vec::with_capacity(grid.len());
    for i in ic + 1..grid.ns {
        edges.push((grid.idx(i - 1, jc), grid.idx(i, jc), true, hs));
    }
    for i in (0..ic).rev() {
        edges.push((grid.idx(i + 1, jc), grid.idx(i, jc), true, -hs));
    }
    for i in 0..grid.ns {
        for j in jc + 1..grid.nt {
            edges.push((grid.idx(i, j - 1), grid.idx(i, j), false, ht));
        }
        for j in (0..jc).rev() {
            edges.push((grid.idx(i, j + 1), grid.idx(i, j), false, -ht));
        }
    }
    edges
}

/// Counter-clockwise plaquette loop starting at `(i, j)`.
pub(crate) fn plaquette_edges(grid: Grid, i: usize, j: usize) -> [(usize, usize, bool, f64); 4] {
    let (hs, ht) = (grid.hs(), grid.ht());
    let a = grid.idx(i, j);
    let b = grid.idx(i + 1, j);
    let c = grid.idx(i + 1, j + 1);
    let d = grid.idx(i, j + 1);
    [
        (a, b, true, hs),
        (b, c, false, ht),
        (c, d, true, -hs),
        (d, a, false, -ht),
    ]
}

impl PfaffianSystem {
    fn edge_coeffs(&self, from: usize, to: usize, along_s: bool) -> ((f64, f64), (f64, f64)) {
        let pick = |form: &GridOneForm, n: usize| if along_s { form.f[n] } else { form.g[n] };
        (
            (pick(&self.gamma1, from), pick(&self.gamma1, to)),
            (pick(&self.gamma2, from), pick(&self.gamma2, to)),
        )
    }

    fn step(&self, t: f64, edge: (usize, usize, bool, f64)) -> f64 {
        let (from, to, along_s, delta) = edge;
        let (g1, g2) = self.edge_coeffs(from, to, along_s);
        rk4_edge(t, delta, g1, g2)
    }
}

pub fn solve_t(sys: &PfaffianSystem, t0: f64) -> TSolution {
    let grid = sys.grid();
    let (ic, jc) = grid.center();
    let mut t = vec![f64::NAN; grid.len()];
    t[grid.idx(ic, jc)] = t0;
    for edge in sweep_edges(grid) {
        t[edge.1] = sys.step(t[edge.0], edge);
    }
    let mut path_residual = 0.0f64;
    for i in 0..grid.ns - 1 {
        for j in 0..grid.nt - 1 {
            let start = t[grid.idx(i, j)];
            let end = plaquette_edges(grid, i, j)
                .into_iter()
                .fold(start, |acc, e| sys.step(acc, e));
            path_residual = path_residual.max((end - start).abs());
        }
    }
    TSolution {
        t: GridScalar::new(grid, t),
        t0,
        path_residual,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhiError {
    #[error("EmptyMask: no node has |T| > 1 + {eps}, so no real hyperbolic angle exists")]
    EmptyMask { eps: f64 },
}

/// Hyperbolic angle `φ = arccoth T` where `|T| > 1 + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiField {
    /// `φ` on the mask, `NaN` elsewhere.
    pub phi: GridScalar,
    pub mask: Vec<bool>,
}

impl PhiField {
    pub fn constant(grid: Grid, phi: f64) -> Self {
        Self {
            phi: GridScalar::constant(grid, phi),
            mask: vec![true; grid.len()],
        }
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|m| *m)
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

pub fn arccoth(x: f64) -> f64 {
    0.5 * ((x + 1.0) / (x - 1.0)).ln()
}

pub fn phi_field(t: &GridScalar, eps: f64) -> Result<PhiField, PhiError> {
    let mask: Vec<bool> = t.values.iter().map(|v| v.abs() > 1.0 + eps).collect();
    if !mask.iter().any(|m| *m) {
        return Err(PhiError::EmptyMask { eps });
    }
    let phi = t
        .values
        .iter()
        .zip(&mask)
        .map(|(&v, &ok)| if ok { arccoth(v) } else { f64::NAN })
        .collect();
    Ok(PhiField {
        phi: GridScalar::new(t.grid, phi),
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    fn synthetic(
        grid: Grid,
        g1: impl Fn(f64, f64) -> (f64, f64),
        g2: impl Fn(f64, f64) -> (f64, f64),
    ) -> PfaffianSystem {
        let mk = |f: &dyn Fn(f64, f64) -> (f64, f64)| {
            let (a, b) = (0..grid.len())
                .map(|n| {
                    let (i, j) = grid.ij(n);
                    f(grid.s(i), grid.t(j))
                })
                .unzip();
            GridOneForm::coordinate(grid, a, b)
        };
        PfaffianSystem::new(Arc::new(Coframe::coordinate(grid)), &mk(&g1), &mk(&g2))
    }

    #[test]
    fn zero_system_is_integrable_and_constant() {
        let sys = synthetic(unit(9), |_, _| (0.0, 0.0), |_, _| (0.0, 0.0));
        let rep = bonnet_check(&sys, 1e-10);
        assert_eq!(rep.norm_r1, 0.0);
        assert_eq!(rep.norm_r2, 0.0);
        assert_eq!(rep.classification, Classification::IntegrableBonnet);
        let sol = solve_t(&sys, 2.0);
        assert!(sol.t.values.iter().all(|v| *v == 2.0));
        assert_eq!(sol.path_residual, 0.0);
    }

    #[test]
    fn t_ds_is_not_integrable() {
        let sys = synthetic(unit(17), |_, _| (0.0, 0.0), |_, t| (t, 0.0));
        let rep = bonnet_check(&sys, 1e-6);
        assert!(rep.r2.w.iter().all(|w| (w + 1.0).abs() < 1e-12));
        assert!((rep.norm_r2 - 1.0).abs() < 1e-8);
        assert_eq!(rep.norm_r1, 0.0);
        assert_eq!(rep.classification, Classification::NotIntegrable);
        let sol = solve_t(&sys, 0.0);
        let area = sys.grid().hs() * sys.grid().ht();
        assert!(sol.path_residual > 0.5 * area);
    }

    #[test]
    fn borderline_defect_is_indeterminate() {
        // dγ² = −0.01 ds∧dt, between tol and 10·tol
        let sys = synthetic(unit(17), |_, _| (0.0, 0.0), |_, t| (0.01 * t, 0.0));
        assert_eq!(
            bonnet_check(&sys, 5e-3).classification,
            Classification::Indeterminate
        );
        assert_eq!(
            bonnet_check(&sys, 5e-4).classification,
            Classification::NotIntegrable
        );
        assert_eq!(
            bonnet_check(&sys, 2e-2).classification,
            Classification::IntegrableBonnet
        );
    }

    #[test]
    fn zero_tolerance_never_labels_bonnet() {
        let sys = synthetic(unit(9), |_, _| (0.0, 0.0), |_, _| (0.0, 0.0));
        assert!(!bonnet_check(&sys, 0.0).classification.is_bonnet());
    }

    #[test]
    fn integrable_system_has_exact_solution() {
        // T = exp(s t) solves dT = T (t ds + s dt) with γ² = 0
        let sys = synthetic(unit(33), |s, t| (t, s), |_, _| (0.0, 0.0));
        let rep = bonnet_check(&sys, 1e-8);
        assert!(rep.norm_r1 < 1e-10 && rep.norm_r2 < 1e-10);
        let g = sys.grid();
        let (ic, jc) = g.center();
        let c = g.s(ic) * g.t(jc);
        let sol = solve_t(&sys, c.exp());
        for n in 0..g.len() {
            let (i, j) = g.ij(n);
            let exact = (g.s(i) * g.t(j)).exp();
            assert!(
                (sol.t.values[n] - exact).abs() < 1e-5,
                "{} vs {exact}",
                sol.t.values[n]
            );
        }
    }

    #[test]
    fn pathresidual_decays_on_integrable_system() {
        // γ¹ = d(s cos t), γ² = 0
        let res = |n: usize| {
            let sys = synthetic(unit(n), |s, t| (t.cos(), -s * t.sin()), |_, _| (0.0, 0.0));
            solve_t(&sys, 1.5).path_residual
        };
        let (a, b) = (res(17), res(33));
        assert!(a / b > 4.0, "{a} {b}");
    }

    #[test]
    fn affine_in_initial_value() {
        let sys = synthetic(unit(17), |s, t| (t * s, 0.5 * s), |s, t| (s - t, t * t));
        let z = solve_t(&sys, 0.0);
        let o = solve_t(&sys, 1.0);
        for t0 in [-3.0, 0.5, 2.0, 7.0] {
            let sol = solve_t(&sys, t0);
            for n in 0..sys.grid().len() {
                let pred = z.t.values[n] + t0 * (o.t.values[n] - z.t.values[n]);
                assert!((sol.t.values[n] - pred).abs() < 1e-8 * (1.0 + pred.abs()));
            }
        }
    }

    #[test]
    fn phi_examples() {
        let g = unit(9);
        let p = phi_field(&GridScalar::constant(g, 2.0), 1e-6).unwrap();
        assert!(p.is_full());
        assert!(p
            .phi
            .values
            .iter()
            .all(|v| (v - 0.5 * 3f64.ln()).abs() < 1e-15));
        assert!((p.phi.values[0] - 0.549306).abs() < 1e-6);
        let p = phi_field(&GridScalar::constant(g, -2.0), 1e-6).unwrap();
        assert!(p.phi.values.iter().all(|v| (v + 0.549306).abs() < 1e-6));
        assert_eq!(
            phi_field(&GridScalar::constant(g, 0.5), 1e-6),
            Err(PhiError::EmptyMask { eps: 1e-6 })
        );
        // coth(φ) reproduces T on the mask
        let t = GridScalar::from_fn(g, |s, t| 1.5 + s - 3.0 * t);
        let p = phi_field(&t, 1e-6).unwrap();
        for n in 0..g.len() {
            if p.mask[n] {
                let back = 1.0 / p.phi.values[n].tanh();
                assert!((back - t.values[n]).abs() < 1e-10 * t.values[n].abs());
            }
        }
        assert!(!p.is_full());
    }
}
