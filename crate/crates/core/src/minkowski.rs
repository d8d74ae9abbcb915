//! Linear algebra in Lorentzian 3-space with signature (−,+,+).
//!
//! The timelike coordinate comes first: `⟨u,v⟩ = −u0·v0 + u1·v1 + u2·v2`.
//!
//! The vector product is defined by `⟨u × v, z⟩ = det[u; v; z]` for every
//! `z`. Solving that identity gives `u × v = η (u ×ₑ v)` where `×ₑ` is the
//! Euclidean cross product and `η = diag(−1, 1, 1)`, i.e.
//!
//! ```text
//! u × v = ( −(u1 v2 − u2 v1),  u2 v0 − u0 v2,  u0 v1 − u1 v0 )
//! ```
//!
//! With this convention `E0 × E1 = E2`, `E1 × E2 = −E0` and `E2 × E0 = E1`
//! for the coordinate axes `E0, E1, E2`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

/// Vector in the ambient Lorentzian 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LVec3 {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl LVec3 {
    pub const ZERO: LVec3 = LVec3::new(0.0, 0.0, 0.0);

    pub const fn new(x0: f64, x1: f64, x2: f64) -> Self {
        Self { x0, x1, x2 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(self) -> bool {
        self.x0.is_finite() && self.x1.is_finite() && self.x2.is_finite()
    }

    /// Lorentzian inner product with `self`.
    pub fn dot(self, other: LVec3) -> f64 {
        inner(self, other)
    }

    pub fn cross(self, other: LVec3) -> LVec3 {
        cross(self, other)
    }

    /// `⟨u,u⟩`, which may be negative.
    pub fn norm_sq(self) -> f64 {
        inner(self, self)
    }

    /// Squared Euclidean length of the component triple.
    pub fn euclidean_norm_sq(self) -> f64 {
        self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x0.abs().max(self.x1.abs()).max(self.x2.abs())
    }
}

impl fmt::Display for LVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x0, self.x1, self.x2)
    }
}

impl Add for LVec3 {
    type Output = LVec3;
    fn add(self, rhs: LVec3) -> LVec3 {
        LVec3::new(self.x0 + rhs.x0, self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl AddAssign for LVec3 {
    fn add_assign(&mut self, rhs: LVec3) {
        *self = *self + rhs;
    }
}

impl Sub for LVec3 {
    type Output = LVec3;
    fn sub(self, rhs: LVec3) -> LVec3 {
        LVec3::new(self.x0 - rhs.x0, self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Neg for LVec3 {
    type Output = LVec3;
    fn neg(self) -> LVec3 {
        LVec3::new(-self.x0, -self.x1, -self.x2)
    }
}

impl Mul<f64> for LVec3 {
    type Output = LVec3;
    fn mul(self, k: f64) -> LVec3 {
        LVec3::new(self.x0 * k, self.x1 * k, self.x2 * k)
    }
}

impl Mul<LVec3> for f64 {
    type Output = LVec3;
    fn mul(self, v: LVec3) -> LVec3 {
        v * self
    }
}

/// Causal character of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Causal {
    Timelike,
    Spacelike,
    Null,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("degenerate frame: leg {leg} has |<v,v>| = {norm_sq:e} below the null tolerance")]
    DegenerateFrame { leg: usize, norm_sq: f64 },
    #[error("frame leg {leg} is {found:?}, expected {expected:?}")]
    WrongCausalCharacter {
        leg: usize,
        expected: Causal,
        found: Causal,
    },
}

pub fn inner(u: LVec3, v: LVec3) -> f64 {
    -u.x0 * v.x0 + u.x1 * v.x1 + u.x2 * v.x2
}

pub fn cross(u: LVec3, v: LVec3) -> LVec3 {
    LVec3::new(
        -(u.x1 * v.x2 - u.x2 * v.x1),
        u.x2 * v.x0 - u.x0 * v.x2,
        u.x0 * v.x1 - u.x1 * v.x0,
    )
}

/// Scale-aware null tolerance `1e-10 · (1 + |u|²)` (Euclidean norm).
pub fn null_tolerance(u: LVec3) -> f64 {
    1e-10 * (1.0 + u.euclidean_norm_sq())
}

pub fn causal_character(u: LVec3) -> Causal {
    let q = inner(u, u);
    let tol = null_tolerance(u);
    if q < -tol {
        Causal::Timelike
    } else if q > tol {
        Causal::Spacelike
    } else {
        Causal::Null
    }
}

/// Metric Gram–Schmidt in the order `f1, f2, f3`, producing a frame with
/// Gram matrix `diag(−1, 1, 1)`.
pub fn lorentz_orthonormalize(
    f1: LVec3,
    f2: LVec3,
    f3: LVec3,
) -> Result<(LVec3, LVec3, LVec3), FrameError> {
    const EXPECTED: [Causal; 3] = [Causal::Timelike, Causal::Spacelike, Causal::Spacelike];
    let mut out: [LVec3; 3] = [LVec3::ZERO; 3];
    let mut signs = [0.0f64; 3];
    for (leg, f) in [f1, f2, f3].into_iter().enumerate() {
        let mut v = f;
        for k in 0..leg {
            // out[k] is unit with ⟨out[k],out[k]⟩ = signs[k]
            v = v - out[k] * (inner(v, out[k]) * signs[k]);
        }
        let q = inner(v, v);
        if q.abs() < null_tolerance(v) || !q.is_finite() {
            return Err(FrameError::DegenerateFrame { leg, norm_sq: q });
        }
        let found = if q < 0.0 {
            Causal::Timelike
        } else {
            Causal::Spacelike
        };
        if found != EXPECTED[leg] {
            return Err(FrameError::WrongCausalCharacter {
                leg,
                expected: EXPECTED[leg],
                found,
            });
        }
        out[leg] = v * (1.0 / q.abs().sqrt());
        signs[leg] = q.signum();
    }
    Ok((out[0], out[1], out[2]))
}

/// Gram matrix `[⟨fi, fj⟩]` of a triple.
pub fn gram(frame: [LVec3; 3]) -> [[f64; 3]; 3] {
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = inner(frame[i], frame[j]);
        }
    }
    g
}

/// Max-norm distance of the Gram matrix from `diag(−1, 1, 1)`.
pub fn gram_defect(frame: [LVec3; 3]) -> f64 {
    const TARGET: [f64; 3] = [-1.0, 1.0, 1.0];
    let g = gram(frame);
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { TARGET[i] } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    worst
}
