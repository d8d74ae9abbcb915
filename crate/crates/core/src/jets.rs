//! Exact second-order jets of immersions, sampled on parameter grids.
//!
//! Evaluation runs the expression tree on truncated bivariate Taylor
//! polynomials `f + f_s·δs + f_t·δt + ½f_ss·δs² + f_st·δs·δt + ½f_tt·δt²`,
//! so every partial up to order two is exact to rounding.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{BinOp, Expr, ExprError, Func, ImmersionExpr, Var};
use crate::grid::{AxisStencil, Grid, GridError};
use crate::minkowski::LVec3;

/// Scalar 2-jet in the variables `(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual2 {
    pub v: f64,
    pub s: f64,
    pub t: f64,
    pub ss: f64,
    pub st: f64,
    pub tt: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }

    pub fn var_s(v: f64) -> Self {
        Self {
            v,
            s: 1.0,
            ..Self::default()
        }
    }

    pub fn var_t(v: f64) -> Self {
        Self {
            v,
            t: 1.0,
            ..Self::default()
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            s: self.s + o.s,
            t: self.t + o.t,
            ss: self.ss + o.ss,
            st: self.st + o.st,
            tt: self.tt + o.tt,
        }
    }

    fn scale(self, k: f64) -> Self {
        Self {
            v: self.v * k,
            s: self.s * k,
            t: self.t * k,
            ss: self.ss * k,
            st: self.st * k,
            tt: self.tt * k,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            s: self.s * o.v + self.v * o.s,
            t: self.t * o.v + self.v * o.t,
            ss: self.ss * o.v + 2.0 * self.s * o.s + self.v * o.ss,
            st: self.st * o.v + self.s * o.t + self.t * o.s + self.v * o.st,
            tt: self.tt * o.v + 2.0 * self.t * o.t + self.v * o.tt,
        }
    }

    /// Chain rule for `g(self)` given `g, g', g''` at `self.v`.
    fn compose(self, g0: f64, g1: f64, g2: f64) -> Self {
        Self {
            v: g0,
            s: g1 * self.s,
            t: g1 * self.t,
            ss: g2 * self.s * self.s + g1 * self.ss,
            st: g2 * self.s * self.t + g1 * self.st,
            tt: g2 * self.t * self.t + g1 * self.tt,
        }
    }

    fn is_finite(&self) -> bool {
        [self.v, self.s, self.t, self.ss, self.st, self.tt]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Value and partial derivatives up to order two of an immersion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub x: LVec3,
    pub x_s: LVec3,
    pub x_t: LVec3,
    pub x_ss: LVec3,
    pub x_st: LVec3,
    pub x_tt: LVec3,
}

impl Jet2 {
    fn from_components(c: [Dual2; 3]) -> Self {
        let v = |f: fn(&Dual2) -> f64| LVec3::new(f(&c[0]), f(&c[1]), f(&c[2]));
        Self {
            x: v(|d| d.v),
            x_s: v(|d| d.s),
            x_t: v(|d| d.t),
            x_ss: v(|d| d.ss),
            x_st: v(|d| d.st),
            x_tt: v(|d| d.tt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("domain error at node `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("at grid node ({i}, {j}): {source}")]
    AtNode {
        i: usize,
        j: usize,
        #[source]
        source: Box<JetError>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

struct Env<'a> {
    params: &'a BTreeMap<String, f64>,
    s: f64,
    t: f64,
}

fn domain(node: &Expr, reason: impl Into<String>) -> JetError {
    JetError::Domain {
        node: node.to_string(),
        reason: reason.into(),
    }
}

fn eval_node(e: &Expr, env: &Env) -> Result<Dual2, JetError> {
    let out = match e {
        Expr::Const(c) => Dual2::constant(*c),
        Expr::Var(Var::S) => Dual2::var_s(env.s),
        Expr::Var(Var::T) => Dual2::var_t(env.t),
        Expr::Param(name) => match env.params.get(name) {
            Some(v) => Dual2::constant(*v),
            None => return Err(ExprError::UnboundName { name: name.clone() }.into()),
        },
        Expr::Neg(a) => eval_node(a, env)?.scale(-1.0),
        Expr::Binary(op, a, b) => {
            let x = eval_node(a, env)?;
            let y = eval_node(b, env)?;
            match op {
                BinOp::Add => x.add(y),
                BinOp::Sub => x.add(y.scale(-1.0)),
                BinOp::Mul => x.mul(y),
                BinOp::Div => {
                    if y.v == 0.0 {
                        return Err(domain(e, "division by zero"));
                    }
                    let r = 1.0 / y.v;
                    x.mul(y.compose(r, -r * r, 2.0 * r * r * r))
                }
            }
        }
        Expr::Pow(a, n) => {
            let x = eval_node(a, env)?;
            let n = *n;
            if x.v == 0.0 && n < 0 {
                return Err(domain(e, "negative power of zero"));
            }
            // d^k/dx^k x^n = n(n-1)..(n-k+1) x^(n-k); zero once the falling
            // factorial hits zero, which also avoids 0^(negative) at x = 0
            let nf = n as f64;
            let term = |falling: f64, k: i32| {
                if falling == 0.0 {
                    0.0
                } else {
                    falling * x.v.powi(n - k)
                }
            };
            x.compose(term(1.0, 0), term(nf, 1), term(nf * (nf - 1.0), 2))
        }
        Expr::Call(f, a) => {
            let x = eval_node(a, env)?;
            let v = x.v;
            match f {
                Func::Sin => x.compose(v.sin(), v.cos(), -v.sin()),
                Func::Cos => x.compose(v.cos(), -v.sin(), -v.cos()),
                Func::Sinh => x.compose(v.sinh(), v.cosh(), v.sinh()),
                Func::Cosh => x.compose(v.cosh(), v.sinh(), v.cosh()),
                Func::Exp => {
                    let ev = v.exp();
                    x.compose(ev, ev, ev)
                }
                Func::Ln => {
                    if v <= 0.0 {
                        return Err(domain(e, format!("ln of non-positive value {v}")));
                    }
                    x.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(e, format!("sqrt of negative value {v}")));
                    }
                    if v == 0.0 {
                        return Err(domain(e, "sqrt is not differentiable at 0"));
                    }
                    let r = v.sqrt();
                    x.compose(r, 0.5 / r, -0.25 / (r * v))
                }
            }
        }
    };
    if !out.is_finite() {
        return Err(domain(e, "non-finite result"));
    }
    Ok(out)
}

/// Evaluate the 2-jet of a single scalar expression.
pub fn eval_scalar(
    e: &Expr,
    params: &BTreeMap<String, f64>,
    s: f64,
    t: f64,
) -> Result<Dual2, JetError> {
    eval_node(e, &Env { params, s, t })
}

pub fn eval_jet(
    immersion: &ImmersionExpr,
    params: &BTreeMap<String, f64>,
    s: f64,
    t: f64,
) -> Result<Jet2, JetError> {
    let env = Env { params, s, t };
    let [a, b, c] = &immersion.components;
    Ok(Jet2::from_components([
        eval_node(a, &env)?,
        eval_node(b, &env)?,
        eval_node(c, &env)?,
    ]))
}

/// An immersion bound to parameter values over a gridded domain.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub immersion: Arc<ImmersionExpr>,
    pub parameters: BTreeMap<String, f64>,
    pub grid: Grid,
}

impl SurfacePatch {
    pub fn new(
        immersion: ImmersionExpr,
        parameters: BTreeMap<String, f64>,
        grid: Grid,
    ) -> Result<Self, JetError> {
        immersion.check_bound(&parameters)?;
        Ok(Self {
            immersion: Arc::new(immersion),
            parameters,
            grid,
        })
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }
}

/// Jets at every node of a grid, flat index `i·nt + j`.
#[derive(Debug, Clone)]
pub struct JetGrid {
    pub grid: Grid,
    pub jets: Vec<Jet2>,
}

impl JetGrid {
    pub fn at(&self, i: usize, j: usize) -> &Jet2 {
        &self.jets[self.grid.idx(i, j)]
    }
}

pub fn build_grid(patch: &SurfacePatch) -> Result<JetGrid, JetError> {
    let g = patch.grid;
    let mut jets = Vec::with_capacity(g.len());
    for i in 0..g.ns {
        for j in 0..g.nt {
            let jet =
                eval_jet(&patch.immersion, &patch.parameters, g.s(i), g.t(j)).map_err(|e| {
                    JetError::AtNode {
                        i,
                        j,
                        source: Box::new(e),
                    }
                })?;
            jets.push(jet);
        }
    }
    Ok(JetGrid { grid: g, jets })
}

/// Jets of a sampled surface, estimated by finite differences of formal
/// order `accuracy` (2 or 4) along each grid axis.
pub fn fd_jets(grid: Grid, points: &[LVec3], accuracy: usize) -> JetGrid {
    assert_eq!(points.len(), grid.len());
    let (hs, ht) = (grid.hs(), grid.ht());
    let ds = AxisStencil::new(grid.ns, 1, accuracy);
    let dt = AxisStencil::new(grid.nt, 1, accuracy);
    let dss = AxisStencil::new(grid.ns, 2, accuracy);
    let dtt = AxisStencil::new(grid.nt, 2, accuracy);

    let comp = |v: &LVec3, c: usize| v.to_array()[c];
    let along_s = |field: &[LVec3], st: &AxisStencil, h: f64| -> Vec<LVec3> {
        (0..grid.len())
            .map(|n| {
                let (i, j) = grid.ij(n);
                let mut out = [0.0; 3];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = st.apply(i, h, |k| comp(&field[grid.idx(k, j)], c));
                }
                LVec3::from_array(out)
            })
            .collect()
    };
    let along_t = |field: &[LVec3], st: &AxisStencil, h: f64| -> Vec<LVec3> {
        (0..grid.len())
            .map(|n| {
                let (i, j) = grid.ij(n);
                let mut out = [0.0; 3];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = st.apply(j, h, |k| comp(&field[grid.idx(i, k)], c));
                }
                LVec3::from_array(out)
            })
            .collect()
    };

    let x_s = along_s(points, &ds, hs);
    let x_t = along_t(points, &dt, ht);
    let x_ss = along_s(points, &dss, hs);
    let x_tt = along_t(points, &dtt, ht);
    let x_st = along_t(&x_s, &dt, ht);
    let jets = (0..grid.len())
        .map(|n| Jet2 {
            x: points[n],
            x_s: x_s[n],
            x_t: x_t[n],
            x_ss: x_ss[n],
            x_st: x_st[n],
            x_tt: x_tt[n],
        })
        .collect();
    JetGrid { grid, jets }
}
