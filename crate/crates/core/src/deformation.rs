//! Hyperbolic-angle deformations of a principal frame and reconstruction of
//! the deformed immersion in flat Minkowski space.

use std::sync::Arc;

use thiserror::Error;

use crate::bonnet::{plaquette_edges, sweep_edges, PhiField};
use crate::forms::{d_scalar, hodge_star, Coframe, FormError, GridOneForm, GridScalar};
use crate::frame::{
    principal_frame, FrameOptions, GeometryError, InvariantBundle, NormalOrientation,
    RESIDUAL_MARGIN,
};
use crate::grid::Grid;
use crate::jets::fd_jets;
use crate::minkowski::{cross, gram_defect, inner, lorentz_orthonormalize, FrameError, LVec3};

/// Finite-difference accuracy used to re-extract jets from a reconstructed grid.
pub const RECONSTRUCTION_FD_ACCURACY: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error("MaskMismatch: phi is undefined at node ({i}, {j}) where the bundle is defined")]
    MaskMismatch { i: usize, j: usize },
    #[error("reconstruction needs a flat Minkowski ambient")]
    CurvedAmbient,
    #[error("seed frame: {0}")]
    Seed(FrameError),
    #[error("frame degenerated at node ({i}, {j}): {source}")]
    Transport {
        i: usize,
        j: usize,
        source: FrameError,
    },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("reconstructed surface: {0}")]
    Geometry(#[from] GeometryError),
}

/// Consistency residuals of a deformed bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationChecks {
    /// `(ω̄¹)² − (ω̄²)²` vs `(ω¹)² − (ω²)²`, max coefficient difference.
    pub metric: f64,
    /// Max Gram defect of `(ē1, ē2, ē3)`.
    pub gram: f64,
    /// Max `|ē1×ē2 − e3|`.
    pub normal: f64,
    /// `ᾱ²` from `ū, v̄` vs `sinh 2φ α¹ + cosh 2φ α²`.
    pub alpha2: f64,
    /// `β̄` from `λ̄` vs `cosh 2φ β + sinh 2φ ⋆β`.
    pub beta: f64,
    /// `α¹ − 2⋆(ω₂¹+β)` vs its barred counterpart, interior max.
    pub gap_log: f64,
}

#[derive(Debug, Clone)]
pub struct DeformedBundle {
    pub grid: Grid,
    pub phi: GridScalar,
    /// `ω̄¹, ω̄²`.
    pub coframe: Arc<Coframe>,
    pub e1: Vec<LVec3>,
    pub e2: Vec<LVec3>,
    pub e3: Vec<LVec3>,
    /// `ω̄₁² = ω₁² − dφ`, coordinate basis.
    pub omega12: GridOneForm,
    pub u: GridScalar,
    pub v: GridScalar,
    pub lambda1: GridScalar,
    pub lambda2: GridScalar,
    /// `β̄`, frame basis of `ω̄`.
    pub beta: GridOneForm,
    /// `ᾱ¹`, frame basis of `ω̄`.
    pub alpha1: GridOneForm,
    pub alpha2: GridOneForm,
    /// Principal curvatures, unchanged by the deformation.
    pub a: GridScalar,
    pub c: GridScalar,
    /// `(E, F, G)` of the original surface.
    pub metric: Vec<[f64; 3]>,
    pub x_center: LVec3,
    pub flat_ambient: bool,
    pub checks: DeformationChecks,
}

fn quadratic(m: &[[f64; 2]; 2]) -> [f64; 3] {
    // −(ω¹)² + (ω²)² in coordinates
    [
        -m[0][0] * m[0][0] + m[1][0] * m[1][0],
        -m[0][0] * m[0][1] + m[1][0] * m[1][1],
        -m[0][1] * m[0][1] + m[1][1] * m[1][1],
    ]
}

fn max_coord_diff(x: &GridOneForm, y: &GridOneForm) -> f64 {
    let (x, y) = (x.to_coord(), y.to_coord());
    (0..x.grid.len()).fold(0.0, |m, n| {
        m.max((x.f[n] - y.f[n]).abs()).max((x.g[n] - y.g[n]).abs())
    })
}

pub fn deform_bundle(b: &InvariantBundle, phi: &PhiField) -> Result<DeformedBundle, DeformError> {
    let grid = b.grid();
    if let Some(n) = phi.mask.iter().position(|m| !m) {
        let (i, j) = grid.ij(n);
        return Err(DeformError::MaskMismatch { i, j });
    }
    let fr = &b.frame;
    let cf = b.coframe();
    let len = grid.len();
    let ph = &phi.phi.values;

    let mut matrix = Vec::with_capacity(len);
    let (mut e1, mut e2) = (Vec::with_capacity(len), Vec::with_capacity(len));
    let (mut u, mut v) = (vec![0.0; len], vec![0.0; len]);
    let (mut l1, mut l2) = (vec![0.0; len], vec![0.0; len]);
    let mut metric_err = 0.0f64;
    let mut gram = 0.0f64;
    let mut normal = 0.0f64;
    for n in 0..len {
        let (ch, sh) = (ph[n].cosh(), ph[n].sinh());
        let m = cf.matrix[n];
        let mb = [
            [ch * m[0][0] + sh * m[1][0], ch * m[0][1] + sh * m[1][1]],
            [sh * m[0][0] + ch * m[1][0], sh * m[0][1] + ch * m[1][1]],
        ];
        let (q, qb) = (quadratic(&m), quadratic(&mb));
        for k in 0..3 {
            metric_err = metric_err.max((q[k] - qb[k]).abs());
        }
        matrix.push(mb);
        let (a1, a2) = (fr.e1[n] * ch - fr.e2[n] * sh, fr.e2[n] * ch - fr.e1[n] * sh);
        gram = gram.max(gram_defect([a1, a2, fr.e3[n]]));
        normal = normal.max((cross(a1, a2) - fr.e3[n]).max_abs());
        e1.push(a1);
        e2.push(a2);
        let (uu, vv) = (b.codazzi.u.values[n], b.codazzi.v.values[n]);
        u[n] = uu * ch - vv * sh;
        v[n] = -uu * sh + vv * ch;
        let (x1, x2) = (b.ambient.lambda1.values[n], b.ambient.lambda2.values[n]);
        l1[n] = ch * x1 + sh * x2;
        l2[n] = sh * x1 + ch * x2;
    }
    let coframe = Arc::new(Coframe::new(grid, matrix)?);
    let sc = |w: Vec<f64>| GridScalar::new(grid, w);
    let (u, v, lambda1, lambda2) = (sc(u), sc(v), sc(l1), sc(l2));

    let omega12 = b.connection.omega12.to_coord().sub(&d_scalar(&phi.phi));
    let beta = GridOneForm::from_frame_scalars(&coframe, &lambda1, &lambda2);
    let neg_v = v.map(|x| -x);
    let alpha1 = GridOneForm::from_frame_scalars(&coframe, &u, &neg_v);
    let alpha2 = GridOneForm::from_frame_scalars(&coframe, &neg_v, &u);

    let ch2 = phi.phi.map(|p| (2.0 * p).cosh());
    let sh2 = phi.phi.map(|p| (2.0 * p).sinh());
    let mix = |x: &GridOneForm, y: &GridOneForm| {
        x.to_coord()
            .mul_scalar(&ch2)
            .add(&y.to_coord().mul_scalar(&sh2))
    };
    let alpha2_mixed = mix(&b.forms.alpha2, &b.forms.alpha1);
    let beta_mixed = mix(&b.ambient.beta, &b.ambient.star_beta);

    let lhs = b.forms.alpha1.lincomb(
        1.0,
        &hodge_star(&b.connection.omega12.add(&b.ambient.beta.to_frame(cf)), cf),
        -2.0,
    );
    let rhs = alpha1.to_coord().lincomb(
        1.0,
        &hodge_star(&omega12.add(&beta.to_coord()), &coframe).to_coord(),
        -2.0,
    );
    let gap_log = lhs.to_coord().sub(&rhs).max_abs_frame(cf, RESIDUAL_MARGIN);

    let checks = DeformationChecks {
        metric: metric_err,
        gram,
        normal,
        alpha2: max_coord_diff(&alpha2, &alpha2_mixed),
        beta: max_coord_diff(&beta, &beta_mixed),
        gap_log,
    };
    let (ic, jc) = grid.center();
    Ok(DeformedBundle {
        grid,
        phi: phi.phi.clone(),
        coframe,
        e1,
        e2,
        e3: fr.e3.clone(),
        omega12,
        u,
        v,
        lambda1,
        lambda2,
        beta,
        alpha1,
        alpha2,
        a: fr.a.clone(),
        c: fr.c.clone(),
        metric: fr.metric.clone(),
        x_center: fr.x[grid.idx(ic, jc)],
        flat_ambient: b.ambient.exact_zero && b.ambient.sigma.max_abs() == 0.0,
        checks,
    })
}

/// Matrix `M` with `d e_i = Σ_j M[i][j] e_j` for the frame `(e1, e2, e3)`,
/// evaluated on a tangent vector `w` where `ψ = ω₁²(w)`, `o1 = ω¹(w)`,
/// `o2 = ω²(w)`. `M·diag(−1,1,1)` is antisymmetric, so transport preserves
/// the Lorentz Gram matrix.
pub fn connection_matrix(psi: f64, o1: f64, o2: f64, a: f64, c: f64) -> [[f64; 3]; 3] {
    [
        [0.0, psi, a * o1],
        [psi, 0.0, -c * o2],
        [a * o1, c * o2, 0.0],
    ]
}

/// Point and frame carried along the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub x: LVec3,
    pub e: [LVec3; 3],
}

#[derive(Debug, Clone, Copy)]
struct EdgeCoeffs {
    psi: f64,
    o1: f64,
    o2: f64,
    a: f64,
    c: f64,
}

impl EdgeCoeffs {
    fn lerp(&self, other: &EdgeCoeffs, w: f64) -> EdgeCoeffs {
        let l = |x: f64, y: f64| x + w * (y - x);
        EdgeCoeffs {
            psi: l(self.psi, other.psi),
            o1: l(self.o1, other.o1),
            o2: l(self.o2, other.o2),
            a: l(self.a, other.a),
            c: l(self.c, other.c),
        }
    }
}

fn rate(st: &FrameState, k: &EdgeCoeffs, delta: f64) -> FrameState {
    let m = connection_matrix(k.psi, k.o1, k.o2, k.a, k.c);
    let e = st.e;
    let comb = |row: &[f64; 3]| (e[0] * row[0] + e[1] * row[1] + e[2] * row[2]) * delta;
    FrameState {
        x: (e[0] * k.o1 + e[1] * k.o2) * delta,
        e: [comb(&m[0]), comb(&m[1]), comb(&m[2])],
    }
}

fn axpy(st: &FrameState, d: &FrameState, w: f64) -> FrameState {
    FrameState {
        x: st.x + d.x * w,
        e: [
            st.e[0] + d.e[0] * w,
            st.e[1] + d.e[1] * w,
            st.e[2] + d.e[2] * w,
        ],
    }
}

fn rk4(st: &FrameState, k0: &EdgeCoeffs, k1: &EdgeCoeffs, delta: f64) -> FrameState {
    let km = k0.lerp(k1, 0.5);
    let r1 = rate(st, k0, delta);
    let r2 = rate(&axpy(st, &r1, 0.5), &km, delta);
    let r3 = rate(&axpy(st, &r2, 0.5), &km, delta);
    let r4 = rate(&axpy(st, &r3, 1.0), k1, delta);
    let mut out = *st;
    for (r, w) in [(r1, 1.0), (r2, 2.0), (r3, 2.0), (r4, 1.0)] {
        out = axpy(&out, &r, w / 6.0);
    }
    out
}

impl DeformedBundle {
    fn coeffs(&self, n: usize, along_s: bool) -> EdgeCoeffs {
        let m = self.coframe.matrix[n];
        let col = if along_s { 0 } else { 1 };
        EdgeCoeffs {
            psi: if along_s {
                self.omega12.f[n]
            } else {
                self.omega12.g[n]
            },
            o1: m[0][col],
            o2: m[1][col],
            a: self.a.values[n],
            c: self.c.values[n],
        }
    }

    fn step(&self, st: &FrameState, edge: (usize, usize, bool, f64)) -> FrameState {
        let (from, to, along_s, delta) = edge;
        rk4(
            st,
            &self.coeffs(from, along_s),
            &self.coeffs(to, along_s),
            delta,
        )
    }

    /// Barred frame at the center node, the natural reconstruction seed.
    pub fn center_seed(&self) -> FrameState {
        let (ic, jc) = self.grid.center();
        let n = self.grid.idx(ic, jc);
        FrameState {
            x: self.x_center,
            e: [self.e1[n], self.e2[n], self.e3[n]],
        }
    }
}

fn renormalize(st: FrameState) -> Result<FrameState, FrameError> {
    let (e1, e2, e3) = lorentz_orthonormalize(st.e[0], st.e[1], st.e[2])?;
    Ok(FrameState {
        x: st.x,
        e: [e1, e2, e3],
    })
}

#[derive(Debug, Clone)]
pub struct ReconstructedSurface {
    pub grid: Grid,
    pub points: Vec<LVec3>,
    pub frames: Vec<[LVec3; 3]>,
    /// Number of integration steps along the sweep.
    pub steps: usize,
    /// Max over plaquettes of the point mismatch after a closed loop.
    pub loop_residual: f64,
    /// Max Gram defect of the stored frames.
    pub gram_defect: f64,
    /// Max difference between the re-extracted `(E, F, G)` and the original.
    pub metric_err: f64,
    /// Max difference between re-extracted principal curvatures and `(a, c)`.
    pub curv_err: f64,
}

pub fn reconstruct(
    d: &DeformedBundle,
    seed: FrameState,
) -> Result<ReconstructedSurface, DeformError> {
    if !d.flat_ambient {
        return Err(DeformError::CurvedAmbient);
    }
    let grid = d.grid;
    let seed = renormalize(seed).map_err(DeformError::Seed)?;
    let (ic, jc) = grid.center();
    let mut states = vec![seed; grid.len()];
    let edges = sweep_edges(grid);
    for &edge in &edges {
        let next = d.step(&states[edge.0], edge);
        states[edge.1] = renormalize(next).map_err(|source| {
            let (i, j) = grid.ij(edge.1);
            DeformError::Transport { i, j, source }
        })?;
    }
    debug_assert_eq!(states[grid.idx(ic, jc)], seed);

    let mut loop_residual = 0.0f64;
    for i in 0..grid.ns - 1 {
        for j in 0..grid.nt - 1 {
            let start = states[grid.idx(i, j)];
            let mut st = start;
            for edge in plaquette_edges(grid, i, j) {
                st = d.step(&st, edge);
            }
            loop_residual = loop_residual.max((st.x - start.x).max_abs());
        }
    }

    let points: Vec<LVec3> = states.iter().map(|s| s.x).collect();
    let frames: Vec<[LVec3; 3]> = states.iter().map(|s| s.e).collect();
    let gram = frames.iter().fold(0.0f64, |m, f| m.max(gram_defect(*f)));
    let (metric_err, curv_err) = compare(d, &points, &frames)?;
    Ok(ReconstructedSurface {
        grid,
        points,
        frames,
        steps: edges.len(),
        loop_residual,
        gram_defect: gram,
        metric_err,
        curv_err,
    })
}

/// Re-extract the first fundamental form and principal curvatures from the
/// point grid and compare against the deformed bundle.
fn compare(
    d: &DeformedBundle,
    points: &[LVec3],
    frames: &[[LVec3; 3]],
) -> Result<(f64, f64), DeformError> {
    let grid = d.grid;
    let jets = fd_jets(grid, points, RECONSTRUCTION_FD_ACCURACY);
    let mut pf = principal_frame(&jets, &FrameOptions::default())?;
    let (ic, jc) = grid.center();
    let nc = grid.idx(ic, jc);
    if inner(pf.e3[nc], frames[nc][2]) < 0.0 {
        let opts = FrameOptions {
            orientation: NormalOrientation::Flipped,
            ..Default::default()
        };
        pf = principal_frame(&jets, &opts)?;
    }
    let mut metric_err = 0.0f64;
    let mut curv_err = 0.0f64;
    for n in grid.interior(RESIDUAL_MARGIN) {
        for k in 0..3 {
            metric_err = metric_err.max((pf.metric[n][k] - d.metric[n][k]).abs());
        }
        curv_err = curv_err
            .max((pf.a.values[n] - d.a.values[n]).abs())
            .max((pf.c.values[n] - d.c.values[n]).abs());
    }
    Ok((metric_err, curv_err))
}

/// Max Euclidean node distance between two point grids.
pub fn max_node_distance(x: &[LVec3], y: &[LVec3]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |m, (p, q)| {
        m.max((*p - *q).euclidean_norm_sq().sqrt())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::gram;

    #[test]
    fn connection_matrix_is_lorentz_skew() {
        let m = connection_matrix(0.3, -1.2, 0.7, 0.4, -2.5);
        let g = [-1.0, 1.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j] * g[j], -(m[j][i] * g[i]));
            }
        }
    }

    #[test]
    fn transport_preserves_gram_to_integrator_order() {
        let k0 = EdgeCoeffs {
            psi: 0.4,
            o1: 1.1,
            o2: -0.3,
            a: 0.7,
            c: -0.2,
        };
        let k1 = EdgeCoeffs {
            psi: -0.1,
            o1: 0.9,
            o2: 0.5,
            a: 0.2,
            c: 0.6,
        };
        let drift = |steps: usize| {
            let mut st = FrameState {
                x: LVec3::ZERO,
                e: [
                    LVec3::new(1.0, 0.0, 0.0),
                    LVec3::new(0.0, 1.0, 0.0),
                    LVec3::new(0.0, 0.0, 1.0),
                ],
            };
            let h = 1.0 / steps as f64;
            for s in 0..steps {
                let (w0, w1) = (s as f64 * h, (s + 1) as f64 * h);
                st = rk4(&st, &k0.lerp(&k1, w0), &k0.lerp(&k1, w1), h);
            }
            gram_defect(st.e)
        };
        let (a, b) = (drift(8), drift(16));
        assert!(a < 1e-4, "{a}");
        assert!(a / b > 16.0, "{a} {b}");
    }

    #[test]
    fn null_seed_is_degenerate() {
        let st = FrameState {
            x: LVec3::ZERO,
            e: [
                LVec3::new(1.0, 1.0, 0.0),
                LVec3::new(0.0, 1.0, 0.0),
                LVec3::new(0.0, 0.0, 1.0),
            ],
        };
        assert!(matches!(
            renormalize(st),
            Err(FrameError::DegenerateFrame { leg: 0, .. })
        ));
    }

    #[test]
    fn hyperbolic_rotation_keeps_gram() {
        let e = [
            LVec3::new(1.0, 0.0, 0.0),
            LVec3::new(0.0, 1.0, 0.0),
            LVec3::new(0.0, 0.0, 1.0),
        ];
        for phi in [-3.0, -0.4, 0.0, 0.9, 2.5] {
            let (ch, sh) = (f64::cosh(phi), f64::sinh(phi));
            let f = [e[0] * ch - e[1] * sh, e[1] * ch - e[0] * sh, e[2]];
            let g = gram(f);
            let scale = ch * ch;
            assert!((g[0][0] + 1.0).abs() < 1e-15 * scale);
            assert!((g[1][1] - 1.0).abs() < 1e-15 * scale);
            assert!(g[0][1].abs() < 1e-15 * scale);
        }
    }
}
