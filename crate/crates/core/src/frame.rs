//! Principal frames and the moving-frame invariants of a timelike surface.
//!
//! Conventions used throughout:
//!
//! * `e3` is the unit spacelike normal `x_s × x_t / |x_s × x_t|` (negated
//!   for [`NormalOrientation::Flipped`]); the shape operator is `A = de3`
//!   restricted to the tangent plane, so `ω₁³ = a·ω¹` and `ω₂³ = −c·ω²`.
//! * `e1` is the unit timelike principal direction with positive first
//!   ambient component, and `e2 = e3 × e1`, which makes `e3 = e1 × e2`.
//! * `ω¹ = −⟨dx, e1⟩`, `ω² = ⟨dx, e2⟩`, so `dx = ω¹e1 + ω²e2`.
//! * `ω₁² = ⟨de1, e2⟩ = ω₂¹ = h·ω¹ + k·ω²`, recovered from
//!   `dω¹ = ω²∧ω₂¹` and `dω² = ω¹∧ω₁²`.
//! * With `ρᵢ = g(R(e1,e2)eᵢ, e3)` and `σ = g(R(e1,e2)e1, e2)`:
//!   `λ₁³ = ρ₁/(a−c)`, `λ₂³ = ρ₂/(c−a)`, and the Gauss equation reads
//!   `dω₁² = (K + σ)·ω¹∧ω²`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::forms::{
    d_oneform, d_scalar, hodge_star, Coframe, Differ, FormError, GridOneForm, GridScalar,
    GridTwoForm,
};
use crate::grid::Grid;
use crate::jets::JetGrid;
use crate::minkowski::{cross, gram_defect, inner, LVec3};

/// Nodes this close to the edge are excluded from residual norms.
/// Quantities differentiated twice pick up a first-order error at the
/// boundary from the one-sided stencils.
pub const RESIDUAL_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("NotTimelike at node ({i}, {j}): det I = {det:e} is not negative")]
    NotTimelike { i: usize, j: usize, det: f64 },
    #[error("Umbilic at node ({i}, {j}): a = {a}, c = {c}")]
    Umbilic { i: usize, j: usize, a: f64, c: f64 },
    #[error("ComplexPrincipal at node ({i}, {j}): shape operator discriminant {disc:e}")]
    ComplexPrincipal { i: usize, j: usize, disc: f64 },
    #[error(transparent)]
    Form(#[from] FormError),
}

impl GeometryError {
    pub fn node(&self) -> Option<(usize, usize)> {
        match *self {
            GeometryError::NotTimelike { i, j, .. }
            | GeometryError::Umbilic { i, j, .. }
            | GeometryError::ComplexPrincipal { i, j, .. } => Some((i, j)),
            GeometryError::Form(FormError::SingularCoframe { i, j, .. }) => Some((i, j)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalOrientation {
    #[default]
    Standard,
    Flipped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions {
    /// Relative umbilic tolerance: reject where `|a−c| < rel·(1+|a|+|c|)`.
    pub umbilic_rel: f64,
    pub orientation: NormalOrientation,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            umbilic_rel: 1e-6,
            orientation: NormalOrientation::Standard,
        }
    }
}

/// Frame data handed to a custom ambient curvature callback.
#[derive(Debug, Clone, Copy)]
pub struct NodeFrame {
    pub i: usize,
    pub j: usize,
    pub s: f64,
    pub t: f64,
    pub x: LVec3,
    pub e1: LVec3,
    pub e2: LVec3,
    pub e3: LVec3,
    pub a: f64,
    pub c: f64,
}

/// Ambient curvature components on the frame:
/// `rho1 = g(R(e1,e2)e1,e3)`, `rho2 = g(R(e1,e2)e2,e3)`,
/// `sigma = g(R(e1,e2)e1,e2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvatureTerms {
    pub rho1: f64,
    pub rho2: f64,
    pub sigma: f64,
}

pub type CurvatureFn = dyn Fn(&NodeFrame) -> CurvatureTerms + Send + Sync;

#[derive(Clone)]
pub enum AmbientModel {
    MinkowskiFlat,
    /// Space form with `R(X,Y)Z = k(g(Y,Z)X − g(X,Z)Y)`.
    ConstantCurvature(f64),
    /// Curvature supplied per node. The second fundamental form is still
    /// taken from the chart jets, i.e. with flat-chart connection.
    Custom(Arc<CurvatureFn>),
}

impl fmt::Debug for AmbientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientModel::MinkowskiFlat => f.write_str("MinkowskiFlat"),
            AmbientModel::ConstantCurvature(k) => write!(f, "ConstantCurvature({k})"),
            AmbientModel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl AmbientModel {
    /// True when `ρ₁ = ρ₂ = 0` holds identically, not just numerically.
    pub fn normal_curvature_free(&self) -> bool {
        !matches!(self, AmbientModel::Custom(_))
    }

    pub fn terms(&self, node: &NodeFrame) -> CurvatureTerms {
        match self {
            AmbientModel::MinkowskiFlat => CurvatureTerms::default(),
            AmbientModel::ConstantCurvature(k) => {
                // R(e1,e2)e1 = k(g(e2,e1)e1 − g(e1,e1)e2) = k·e2
                let r =
                    (inner(node.e2, node.e1) * node.e1 - inner(node.e1, node.e1) * node.e2) * *k;
                CurvatureTerms {
                    rho1: 0.0,
                    rho2: 0.0,
                    sigma: inner(r, node.e2),
                }
            }
            AmbientModel::Custom(f) => f(node),
        }
    }
}

/// Principal frame, curvatures and coframe at every node.
#[derive(Debug, Clone)]
pub struct PrincipalFrame {
    pub grid: Grid,
    pub x: Vec<LVec3>,
    pub e1: Vec<LVec3>,
    pub e2: Vec<LVec3>,
    pub e3: Vec<LVec3>,
    pub a: GridScalar,
    pub c: GridScalar,
    pub x_s: Vec<LVec3>,
    pub x_t: Vec<LVec3>,
    /// `(E, F, G)` of the first fundamental form.
    pub metric: Vec<[f64; 3]>,
    pub coframe: Arc<Coframe>,
    /// Max deviation of the frame Gram matrix from `diag(−1,1,1)`.
    pub gram_defect: f64,
    /// Max of `|⟨e3, x_s⟩|, |⟨e3, x_t⟩|`.
    pub tangency_defect: f64,
    /// Max of `|A(e1) − a e1|, |A(e2) − c e2|` relative to `1+|a|+|c|`.
    pub eigen_residual: f64,
}

impl PrincipalFrame {
    pub fn mean_curvature(&self) -> GridScalar {
        self.a.zip(&self.c, |a, c| 0.5 * (a + c))
    }

    pub fn gauss_curvature(&self) -> GridScalar {
        self.a.zip(&self.c, |a, c| a * c)
    }

    /// Signed `J = (a−c)/2`.
    pub fn half_gap(&self) -> GridScalar {
        self.a.zip(&self.c, |a, c| 0.5 * (a - c))
    }

    pub fn node(&self, n: usize) -> NodeFrame {
        let (i, j) = self.grid.ij(n);
        NodeFrame {
            i,
            j,
            s: self.grid.s(i),
            t: self.grid.t(j),
            x: self.x[n],
            e1: self.e1[n],
            e2: self.e2[n],
            e3: self.e3[n],
            a: self.a.values[n],
            c: self.c.values[n],
        }
    }

    pub fn omega1(&self) -> GridOneForm {
        self.coframe.omega(0)
    }

    pub fn omega2(&self) -> GridOneForm {
        self.coframe.omega(1)
    }
}

struct NodeResult {
    e1: LVec3,
    e2: LVec3,
    e3: LVec3,
    a: f64,
    c: f64,
    eigen_residual: f64,
}

fn principal_at(
    jet: &crate::jets::Jet2,
    opts: &FrameOptions,
    i: usize,
    j: usize,
) -> Result<NodeResult, GeometryError> {
    let (xs, xt) = (jet.x_s, jet.x_t);
    let (e, f, g) = (inner(xs, xs), inner(xs, xt), inner(xt, xt));
    let det = e * g - f * f;
    let scale = e.abs().max(f.abs()).max(g.abs());
    if det.is_nan() || det >= -1e-14 * scale * scale || scale == 0.0 {
        return Err(GeometryError::NotTimelike { i, j, det });
    }
    let n = cross(xs, xt);
    let mut e3 = n * (1.0 / inner(n, n).sqrt());
    if opts.orientation == NormalOrientation::Flipped {
        e3 = -e3;
    }
    let (l, m, nn) = (
        inner(e3, jet.x_ss),
        inner(e3, jet.x_st),
        inner(e3, jet.x_tt),
    );
    // S = −I⁻¹·II acting on coordinate components
    let s = [
        [-(g * l - f * m) / det, -(g * m - f * nn) / det],
        [-(-f * l + e * m) / det, -(-f * m + e * nn) / det],
    ];
    let tr = s[0][0] + s[1][1];
    let dt = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let disc = tr * tr - 4.0 * dt;
    let gap = disc.abs().sqrt();
    let half_tr = 0.5 * tr;
    let (lp, lm) = (half_tr + 0.5 * gap, half_tr - 0.5 * gap);
    let eps_umb = opts.umbilic_rel * (1.0 + lp.abs() + lm.abs());
    if gap < eps_umb {
        return Err(GeometryError::Umbilic {
            i,
            j,
            a: half_tr,
            c: half_tr,
        });
    }
    if disc < 0.0 {
        return Err(GeometryError::ComplexPrincipal { i, j, disc });
    }
    let eig = |lam: f64| -> [f64; 2] {
        let v1 = [s[0][1], lam - s[0][0]];
        let v2 = [lam - s[1][1], s[1][0]];
        if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
            v1
        } else {
            v2
        }
    };
    let to_amb = |v: [f64; 2]| xs * v[0] + xt * v[1];
    let (vp, vm) = (eig(lp), eig(lm));
    let (qp, qm) = (to_amb(vp).norm_sq(), to_amb(vm).norm_sq());
    let (v_time, a, c) = if qp < 0.0 && qm > 0.0 {
        (vp, lp, lm)
    } else if qm < 0.0 && qp > 0.0 {
        (vm, lm, lp)
    } else {
        return Err(GeometryError::ComplexPrincipal { i, j, disc });
    };
    let mut e1 = to_amb(v_time);
    e1 = e1 * (1.0 / (-e1.norm_sq()).sqrt());
    if e1.x0 < 0.0 {
        e1 = -e1;
    }
    let e2 = cross(e3, e1);

    // re-check A(e) = λ e through the coordinate operator
    let coords = |v: LVec3| -> [f64; 2] {
        let (p, q) = (inner(v, xs), inner(v, xt));
        [(g * p - f * q) / det, (-f * p + e * q) / det]
    };
    let apply = |w: [f64; 2]| {
        [
            s[0][0] * w[0] + s[0][1] * w[1],
            s[1][0] * w[0] + s[1][1] * w[1],
        ]
    };
    let resid = |v: LVec3, lam: f64| {
        let w = coords(v);
        (to_amb(apply(w)) - v * lam).max_abs()
    };
    let eigen_residual = resid(e1, a).max(resid(e2, c)) / (1.0 + a.abs() + c.abs());
    Ok(NodeResult {
        e1,
        e2,
        e3,
        a,
        c,
        eigen_residual,
    })
}

pub fn principal_frame(
    jets: &JetGrid,
    opts: &FrameOptions,
) -> Result<PrincipalFrame, GeometryError> {
    let grid = jets.grid;
    let len = grid.len();
    let mut out = PrincipalFrame {
        grid,
        x: Vec::with_capacity(len),
        e1: Vec::with_capacity(len),
        e2: Vec::with_capacity(len),
        e3: Vec::with_capacity(len),
        a: GridScalar::constant(grid, 0.0),
        c: GridScalar::constant(grid, 0.0),
        x_s: Vec::with_capacity(len),
        x_t: Vec::with_capacity(len),
        metric: Vec::with_capacity(len),
        coframe: Arc::new(Coframe::coordinate(grid)),
        gram_defect: 0.0,
        tangency_defect: 0.0,
        eigen_residual: 0.0,
    };
    let mut cf = Vec::with_capacity(len);
    for (n, jet) in jets.jets.iter().enumerate() {
        let (i, j) = grid.ij(n);
        let r = principal_at(jet, opts, i, j)?;
        let (xs, xt) = (jet.x_s, jet.x_t);
        out.gram_defect = out.gram_defect.max(gram_defect([r.e1, r.e2, r.e3]));
        out.tangency_defect = out
            .tangency_defect
            .max(inner(r.e3, xs).abs())
            .max(inner(r.e3, xt).abs());
        out.eigen_residual = out.eigen_residual.max(r.eigen_residual);
        cf.push([
            [-inner(xs, r.e1), -inner(xt, r.e1)],
            [inner(xs, r.e2), inner(xt, r.e2)],
        ]);
        out.x.push(jet.x);
        out.e1.push(r.e1);
        out.e2.push(r.e2);
        out.e3.push(r.e3);
        out.a.values[n] = r.a;
        out.c.values[n] = r.c;
        out.x_s.push(xs);
        out.x_t.push(xt);
        out.metric
            .push([inner(xs, xs), inner(xs, xt), inner(xt, xt)]);
    }
    out.coframe = Arc::new(Coframe::new(grid, cf)?);
    Ok(out)
}

/// Connection form `ω₁² = h·ω¹ + k·ω²` and its cross-check.
#[derive(Debug, Clone)]
pub struct Connection {
    pub h: GridScalar,
    pub k: GridScalar,
    /// `ω₁²` in the frame basis.
    pub omega12: GridOneForm,
    /// `⟨de1, e2⟩` computed directly from the differentiated frame.
    pub omega12_direct: GridOneForm,
    /// Per-node frame-basis mismatch between the two routes.
    pub residual: GridScalar,
}

pub fn connection_coeffs(frame: &PrincipalFrame) -> Connection {
    let grid = frame.grid;
    let cf = &frame.coframe;
    let area = |n: usize| cf.det(n);
    let d1 = d_oneform(&frame.omega1());
    let d2 = d_oneform(&frame.omega2());
    // dω¹ = ω²∧(hω¹+kω²) = −h ω¹∧ω²,  dω² = ω¹∧(hω¹+kω²) = k ω¹∧ω²
    let h = GridScalar::new(grid, (0..grid.len()).map(|n| -d1.w[n] / area(n)).collect());
    let k = GridScalar::new(grid, (0..grid.len()).map(|n| d2.w[n] / area(n)).collect());
    let omega12 = GridOneForm::from_frame_scalars(cf, &h, &k);

    let (de1_s, de1_t) = Differ::new(grid).partials_vec(&frame.e1);
    let direct = GridOneForm::coordinate(
        grid,
        (0..grid.len())
            .map(|n| inner(de1_s[n], frame.e2[n]))
            .collect(),
        (0..grid.len())
            .map(|n| inner(de1_t[n], frame.e2[n]))
            .collect(),
    )
    .to_frame(cf);
    let residual = GridScalar::new(
        grid,
        (0..grid.len())
            .map(|n| {
                (direct.f[n] - h.values[n])
                    .abs()
                    .max((direct.g[n] - k.values[n]).abs())
            })
            .collect(),
    );
    Connection {
        h,
        k,
        omega12,
        omega12_direct: direct,
        residual,
    }
}

/// Ambient curvature contributions on the frame.
#[derive(Debug, Clone)]
pub struct AmbientTerms {
    pub lambda1: GridScalar,
    pub lambda2: GridScalar,
    pub sigma: GridScalar,
    /// `β = λ₁³ω¹ + λ₂³ω²` (frame basis).
    pub beta: GridOneForm,
    /// `⋆β = λ₂³ω¹ + λ₁³ω²` (frame basis).
    pub star_beta: GridOneForm,
    /// `β ≡ 0` by construction of the ambient model.
    pub exact_zero: bool,
}

pub fn ambient_lambdas(ambient: &AmbientModel, frame: &PrincipalFrame) -> AmbientTerms {
    let grid = frame.grid;
    let terms: Vec<CurvatureTerms> = (0..grid.len())
        .map(|n| ambient.terms(&frame.node(n)))
        .collect();
    let gap = |n: usize| frame.a.values[n] - frame.c.values[n];
    let lambda1 = GridScalar::new(
        grid,
        (0..grid.len()).map(|n| terms[n].rho1 / gap(n)).collect(),
    );
    let lambda2 = GridScalar::new(
        grid,
        (0..grid.len()).map(|n| -terms[n].rho2 / gap(n)).collect(),
    );
    let sigma = GridScalar::new(grid, terms.iter().map(|t| t.sigma).collect());
    let beta = GridOneForm::from_frame_scalars(&frame.coframe, &lambda1, &lambda2);
    let star_beta = hodge_star(&beta, &frame.coframe);
    AmbientTerms {
        lambda1,
        lambda2,
        sigma,
        beta,
        star_beta,
        exact_zero: ambient.normal_curvature_free(),
    }
}

/// Codazzi coefficients and the deformation scalars `u, v`.
#[derive(Debug, Clone)]
pub struct Codazzi {
    pub p: GridScalar,
    pub q: GridScalar,
    pub u: GridScalar,
    pub v: GridScalar,
    /// `(h+λ₁³)` as read off the `ω²` coefficient of `da/(c−a)`.
    pub h_lambda_est: GridScalar,
    /// `(k+λ₂³)` as read off the `ω¹` coefficient of `dc/(a−c)`.
    pub k_lambda_est: GridScalar,
    /// Per-node max mismatch of those estimates against the connection.
    pub residual: GridScalar,
}

pub fn codazzi_coeffs(frame: &PrincipalFrame, conn: &Connection, amb: &AmbientTerms) -> Codazzi {
    let grid = frame.grid;
    let cf = &frame.coframe;
    let da = d_scalar(&frame.a).to_frame(cf);
    let dc = d_scalar(&frame.c).to_frame(cf);
    let len = grid.len();
    let mut p = vec![0.0; len];
    let mut q = vec![0.0; len];
    let mut u = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut hl = vec![0.0; len];
    let mut kl = vec![0.0; len];
    let mut res = vec![0.0; len];
    for n in 0..len {
        let gap = frame.a.values[n] - frame.c.values[n];
        // da/(c−a) = p ω¹ + (h+λ₁³) ω² ;  dc/(a−c) = (k+λ₂³) ω¹ + q ω²
        p[n] = -da.f[n] / gap;
        hl[n] = -da.g[n] / gap;
        kl[n] = dc.f[n] / gap;
        q[n] = dc.g[n] / gap;
        let h_lam = conn.h.values[n] + amb.lambda1.values[n];
        let k_lam = conn.k.values[n] + amb.lambda2.values[n];
        u[n] = k_lam - p[n];
        v[n] = q[n] - h_lam;
        res[n] = (hl[n] - h_lam).abs().max((kl[n] - k_lam).abs());
    }
    let sc = |v: Vec<f64>| GridScalar::new(grid, v);
    Codazzi {
        p: sc(p),
        q: sc(q),
        u: sc(u),
        v: sc(v),
        h_lambda_est: sc(hl),
        k_lambda_est: sc(kl),
        residual: sc(res),
    }
}

/// The one-forms `θ¹, θ², α¹, α², γ¹, γ²`, all in the frame basis.
#[derive(Debug, Clone)]
pub struct GammaForms {
    pub theta1: GridOneForm,
    pub theta2: GridOneForm,
    pub alpha1: GridOneForm,
    pub alpha2: GridOneForm,
    pub gamma1: GridOneForm,
    pub gamma2: GridOneForm,
}

pub fn gamma_forms(
    coframe: &Arc<Coframe>,
    u: &GridScalar,
    v: &GridScalar,
    beta: &GridOneForm,
    star_beta: &GridOneForm,
) -> GammaForms {
    let neg_v = v.map(|x| -x);
    let theta1 = GridOneForm::from_frame_scalars(coframe, u, v);
    let theta2 = GridOneForm::from_frame_scalars(coframe, v, u);
    let alpha1 = GridOneForm::from_frame_scalars(coframe, u, &neg_v);
    let alpha2 = GridOneForm::from_frame_scalars(coframe, &neg_v, u);
    let gamma1 = alpha1.lincomb(1.0, &star_beta.to_frame(coframe), -2.0);
    let gamma2 = alpha2.lincomb(1.0, &beta.to_frame(coframe), -2.0);
    GammaForms {
        theta1,
        theta2,
        alpha1,
        alpha2,
        gamma1,
        gamma2,
    }
}

/// Everything computed from one surface patch and ambient model.
#[derive(Debug, Clone)]
pub struct InvariantBundle {
    pub frame: PrincipalFrame,
    pub connection: Connection,
    pub ambient: AmbientTerms,
    pub codazzi: Codazzi,
    pub forms: GammaForms,
    pub mean: GridScalar,
    pub gauss: GridScalar,
    pub half_gap: GridScalar,
    /// `dH` in the coordinate basis.
    pub dh: GridOneForm,
}

impl InvariantBundle {
    pub fn compute(
        jets: &JetGrid,
        ambient: &AmbientModel,
        opts: &FrameOptions,
    ) -> Result<Self, GeometryError> {
        let frame = principal_frame(jets, opts)?;
        Ok(Self::from_frame(frame, ambient))
    }

    pub fn from_frame(frame: PrincipalFrame, ambient: &AmbientModel) -> Self {
        let connection = connection_coeffs(&frame);
        let amb = ambient_lambdas(ambient, &frame);
        let codazzi = codazzi_coeffs(&frame, &connection, &amb);
        let forms = gamma_forms(
            &frame.coframe,
            &codazzi.u,
            &codazzi.v,
            &amb.beta,
            &amb.star_beta,
        );
        let mean = frame.mean_curvature();
        let dh = d_scalar(&mean);
        Self {
            gauss: frame.gauss_curvature(),
            half_gap: frame.half_gap(),
            mean,
            dh,
            frame,
            connection,
            ambient: amb,
            codazzi,
            forms,
        }
    }

    pub fn grid(&self) -> Grid {
        self.frame.grid
    }

    pub fn coframe(&self) -> &Arc<Coframe> {
        &self.frame.coframe
    }
}

/// One residual: per-node magnitudes and the max over the interior.
#[derive(Debug, Clone)]
pub struct Residual {
    pub field: GridScalar,
    pub max: f64,
}

impl Residual {
    fn new(field: GridScalar) -> Self {
        let max = field.max_abs_interior(RESIDUAL_MARGIN);
        Self { field, max }
    }
}

/// Structure-equation residuals of a bundle, tagged with the grid spacing.
#[derive(Debug, Clone)]
pub struct IdentityResiduals {
    pub hs: f64,
    pub ht: f64,
    pub margin: usize,
    /// First structure equations: `h, k` vs `⟨de1, e2⟩`.
    pub structure: Residual,
    /// Gauss: `dω₁² − (K + σ)ω¹∧ω²`, coefficient of `ω¹∧ω²`.
    pub gauss: Residual,
    /// Codazzi: both cross-coefficients of `da, dc` vs `h+λ₁³, k+λ₂³`.
    pub codazzi: Residual,
    /// `2dH − (a−c)(uω¹ + vω²)`.
    pub mean_differential: Residual,
    /// `2 grad H + (a−c)(u e1 − v e2)`, gradient raised with `I⁻¹`.
    pub mean_gradient: Residual,
    /// `d ln|a−c| − (α¹ − 2⋆(ω₂¹ + β))`.
    pub gap_log: Residual,
}

impl IdentityResiduals {
    pub fn entries(&self) -> [(&'static str, &Residual); 6] {
        [
            ("structure", &self.structure),
            ("gauss", &self.gauss),
            ("codazzi", &self.codazzi),
            ("mean_differential", &self.mean_differential),
            ("mean_gradient", &self.mean_gradient),
            ("gap_log", &self.gap_log),
        ]
    }

    /// Largest of the six residual norms.
    pub fn scale(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, (_, r)| m.max(r.max))
    }
}

fn frame_sup(form: &GridOneForm, cf: &Arc<Coframe>) -> GridScalar {
    let fr = form.to_frame(cf);
    GridScalar::new(
        form.grid,
        fr.f.iter()
            .zip(&fr.g)
            .map(|(a, b)| a.abs().max(b.abs()))
            .collect(),
    )
}

pub fn identity_suite(b: &InvariantBundle) -> IdentityResiduals {
    let grid = b.grid();
    let cf = b.coframe();
    let fr = &b.frame;
    let len = grid.len();

    let ks = b.gauss.zip(&b.ambient.sigma, |k, s| k + s);
    let gauss_form = d_oneform(&b.connection.omega12).sub(&GridTwoForm::from_frame_area(cf, &ks));
    let gauss = gauss_form.in_frame(cf).map(f64::abs);

    let gap = fr.a.zip(&fr.c, |a, c| a - c);
    let mean_differential = frame_sup(&b.dh.scale(2.0).sub(&b.forms.theta1.mul_scalar(&gap)), cf);

    let mean_gradient = GridScalar::new(
        grid,
        (0..len)
            .map(|n| {
                let [e, f, g] = fr.metric[n];
                let det = e * g - f * f;
                let (hs, ht) = b.dh.coord_pair(n);
                let (c0, c1) = ((g * hs - f * ht) / det, (-f * hs + e * ht) / det);
                let grad = fr.x_s[n] * c0 + fr.x_t[n] * c1;
                let rhs = (fr.e1[n] * b.codazzi.u.values[n] - fr.e2[n] * b.codazzi.v.values[n])
                    * gap.values[n];
                (grad * 2.0 + rhs).max_abs()
            })
            .collect(),
    );

    let dlog = d_scalar(&gap.map(|x| x.abs().ln()));
    let conn_beta = b.connection.omega12.add(&b.ambient.beta.to_frame(cf));
    let rhs20 = b
        .forms
        .alpha1
        .lincomb(1.0, &hodge_star(&conn_beta, cf), -2.0);
    let gap_log = frame_sup(&dlog.sub(&rhs20), cf);

    IdentityResiduals {
        hs: grid.hs(),
        ht: grid.ht(),
        margin: RESIDUAL_MARGIN,
        structure: Residual::new(b.connection.residual.clone()),
        gauss: Residual::new(gauss),
        codazzi: Residual::new(b.codazzi.residual.clone()),
        mean_differential: Residual::new(mean_differential),
        mean_gradient: Residual::new(mean_gradient),
        gap_log: Residual::new(gap_log),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_immersion;
    use crate::jets::{build_grid, SurfacePatch};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn jets(text: &str, params: &[(&str, f64)], s: (f64, f64), t: (f64, f64), n: usize) -> JetGrid {
        let imm = parse_immersion(text).unwrap();
        let params: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let grid = Grid::new(s, t, n, n).unwrap();
        build_grid(&SurfacePatch::new(imm, params, grid).unwrap()).unwrap()
    }

    fn cylinder(r: f64, n: usize) -> JetGrid {
        jets(
            "(t, r*cos(s), r*sin(s))",
            &[("r", r)],
            (0.0, 2.0 * PI),
            (-1.0, 1.0),
            n,
        )
    }

    #[test]
    fn cylinder_principal_curvatures() {
        for r in [1.0, 2.0] {
            let f = principal_frame(&cylinder(r, 17), &FrameOptions::default()).unwrap();
            for n in 0..f.grid.len() {
                // e3 points outward, A = de3 stretches the circle by 1/r
                assert!(f.a.values[n].abs() < 1e-12);
                assert!((f.c.values[n] - 1.0 / r).abs() < 1e-12);
                assert!((f.e1[n] - LVec3::new(1., 0., 0.)).max_abs() < 1e-12);
            }
            assert!(f.gram_defect < 1e-12);
            assert!(f.tangency_defect < 1e-12);
            assert!(f.eigen_residual < 1e-12);
        }
    }

    #[test]
    fn flipped_normal_flips_curvatures() {
        let j = cylinder(1.0, 9);
        let opts = FrameOptions {
            orientation: NormalOrientation::Flipped,
            ..Default::default()
        };
        let f = principal_frame(&j, &opts).unwrap();
        assert!(f.c.values.iter().all(|c| (c + 1.0).abs() < 1e-12));
        for n in 0..f.grid.len() {
            assert!((cross(f.e1[n], f.e2[n]) - f.e3[n]).max_abs() < 1e-12);
        }
    }

    #[test]
    fn plane_is_umbilic() {
        let j = jets("(t, s, 0)", &[], (0.0, 1.0), (0.0, 1.0), 9);
        assert!(matches!(
            principal_frame(&j, &FrameOptions::default()),
            Err(GeometryError::Umbilic { i: 0, j: 0, .. })
        ));
    }

    #[test]
    fn degenerate_metric_is_not_timelike() {
        let j = jets("(t, t, 0)", &[], (0.0, 1.0), (0.0, 1.0), 9);
        assert!(matches!(
            principal_frame(&j, &FrameOptions::default()),
            Err(GeometryError::NotTimelike { .. })
        ));
        // spacelike graph
        let j = jets("(0.1*s^2, s, t)", &[], (0.0, 1.0), (0.0, 1.0), 9);
        assert!(matches!(
            principal_frame(&j, &FrameOptions::default()),
            Err(GeometryError::NotTimelike { .. })
        ));
    }

    #[test]
    fn complex_principal_curvatures_rejected() {
        // II ∝ [[1, 0], [0, 1]] against I = diag(1, −1): S has eigenvalues ±i·… only
        // when the off-diagonal term dominates
        let j = jets("(t, s, s*t)", &[], (-0.1, 0.1), (-0.1, 0.1), 9);
        assert!(matches!(
            principal_frame(&j, &FrameOptions::default()),
            Err(GeometryError::ComplexPrincipal { .. })
        ));
    }

    #[test]
    fn cylinder_connection_vanishes() {
        let b = InvariantBundle::compute(
            &cylinder(1.0, 65),
            &AmbientModel::MinkowskiFlat,
            &FrameOptions::default(),
        )
        .unwrap();
        assert!(b.connection.h.max_abs() < 1e-8);
        assert!(b.connection.k.max_abs() < 1e-8);
        assert!(b.connection.residual.max_abs() < 1e-8);
        assert!(b.codazzi.u.max_abs() < 1e-8 && b.codazzi.v.max_abs() < 1e-8);
        assert!(b.codazzi.p.max_abs() < 1e-8 && b.codazzi.q.max_abs() < 1e-8);
        let r = identity_suite(&b);
        for (name, res) in r.entries() {
            assert!(res.max < 1e-8, "{name}: {}", res.max);
        }
    }

    #[test]
    fn ambient_lambda_models() {
        let j = cylinder(1.0, 9);
        let f = principal_frame(&j, &FrameOptions::default()).unwrap();
        let flat = ambient_lambdas(&AmbientModel::MinkowskiFlat, &f);
        assert!(flat.exact_zero && flat.lambda1.max_abs() == 0.0 && flat.lambda2.max_abs() == 0.0);
        let cc = ambient_lambdas(&AmbientModel::ConstantCurvature(0.7), &f);
        assert_eq!(cc.lambda1.max_abs(), 0.0);
        assert_eq!(
            cc.beta
                .f
                .iter()
                .chain(&cc.beta.g)
                .fold(0.0f64, |m, v| m.max(v.abs())),
            0.0
        );
        assert!(cc.sigma.values.iter().all(|s| (s - 0.7).abs() < 1e-12));
        let custom = AmbientModel::Custom(Arc::new(|n: &NodeFrame| CurvatureTerms {
            rho1: n.a - n.c,
            rho2: 0.0,
            sigma: 0.0,
        }));
        let cu = ambient_lambdas(&custom, &f);
        assert!(!cu.exact_zero);
        assert!(cu.lambda1.values.iter().all(|l| (l - 1.0).abs() < 1e-15));
        assert_eq!(cu.lambda2.max_abs(), 0.0);
        // β = ω¹
        let beta = cu.beta.to_coord();
        let w1 = f.omega1();
        for n in 0..f.grid.len() {
            assert!((beta.f[n] - w1.f[n]).abs() < 1e-14 && (beta.g[n] - w1.g[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_forms_identities() {
        let j = jets(
            "(t, s, 0.15*s^2 + 0.05*s*t + 0.1*t^2)",
            &[],
            (-1.0, 1.0),
            (-1.0, 1.0),
            17,
        );
        let b =
            InvariantBundle::compute(&j, &AmbientModel::MinkowskiFlat, &FrameOptions::default())
                .unwrap();
        let cf = b.coframe();
        let fm = &b.forms;
        assert_eq!(hodge_star(&fm.theta1, cf), fm.theta2);
        assert_eq!(hodge_star(&fm.alpha1, cf), fm.alpha2);
        // θ¹ + α¹ = 2u ω¹ and θ¹ − α¹ = 2v ω²
        let sum = fm.theta1.add(&fm.alpha1);
        let diff = fm.theta1.sub(&fm.alpha1);
        for n in 0..b.grid().len() {
            assert_eq!(sum.f[n], 2.0 * b.codazzi.u.values[n]);
            assert_eq!(sum.g[n], 0.0);
            assert_eq!(diff.f[n], 0.0);
            assert_eq!(diff.g[n], 2.0 * b.codazzi.v.values[n]);
        }
        // β = 0 reduces γ to α
        assert_eq!(fm.gamma1, fm.alpha1);
        assert_eq!(fm.gamma2, fm.alpha2);
        // ⋆γ¹ two ways
        let direct = hodge_star(&fm.gamma1, cf);
        let assembled = fm
            .alpha2
            .lincomb(1.0, &hodge_star(&b.ambient.star_beta, cf), -2.0);
        assert_eq!(direct, assembled);
    }

    #[test]
    fn zero_u_v_give_zero_forms() {
        let g = Grid::new((0.0, 1.0), (0.0, 1.0), 9, 9).unwrap();
        let cf = Arc::new(Coframe::coordinate(g));
        let z = GridScalar::constant(g, 0.0);
        let zero = GridOneForm::frame(&cf, vec![0.0; 81], vec![0.0; 81]);
        let fm = gamma_forms(&cf, &z, &z, &zero, &zero);
        for f in [
            &fm.theta1, &fm.theta2, &fm.alpha1, &fm.alpha2, &fm.gamma1, &fm.gamma2,
        ] {
            assert!(f.f.iter().chain(&f.g).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn gap_log_uses_absolute_gap() {
        let j = jets(
            "(t, s, 0.15*s^2 + 0.05*s*t + 0.1*t^2)",
            &[],
            (-1.0, 1.0),
            (-1.0, 1.0),
            33,
        );
        let std =
            InvariantBundle::compute(&j, &AmbientModel::MinkowskiFlat, &FrameOptions::default())
                .unwrap();
        let flipped = InvariantBundle::compute(
            &j,
            &AmbientModel::MinkowskiFlat,
            &FrameOptions {
                orientation: NormalOrientation::Flipped,
                ..Default::default()
            },
        )
        .unwrap();
        // a − c changes sign; the residual must not
        assert!(std.half_gap.values[0] * flipped.half_gap.values[0] < 0.0);
        let (r1, r2) = (
            identity_suite(&std).gap_log.max,
            identity_suite(&flipped).gap_log.max,
        );
        assert!(
            r1 < 1e-2 && (r1 - r2).abs() < 1e-10 * (1.0 + r1),
            "{r1} vs {r2}"
        );
    }

    #[test]
    fn parabolic_graph_structure_residuals_small() {
        let j = jets("(t, s, 0.1*s^2)", &[], (-1.0, 1.0), (-1.0, 1.0), 129);
        let b =
            InvariantBundle::compute(&j, &AmbientModel::MinkowskiFlat, &FrameOptions::default())
                .unwrap();
        let r = identity_suite(&b);
        assert!(r.structure.max < 1e-4, "{}", r.structure.max);
        assert!(r.gauss.max < 1e-4, "{}", r.gauss.max);
    }
}
