//! Uniform rectangular parameter grids and finite-difference stencils.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("resolution {ns}x{nt} invalid: both node counts must be odd and at least 9")]
    Resolution { ns: usize, nt: usize },
    #[error("domain [{s0}, {s1}] x [{t0}, {t1}] is empty or not finite")]
    Domain { s0: f64, s1: f64, t0: f64, t1: f64 },
}

/// Node layout of a uniform grid over `[s0,s1] × [t0,t1]`, endpoints
/// included. Node `(i, j)` sits at `(s0 + i·hs, t0 + j·ht)` and is stored at
/// flat index `i·nt + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub ns: usize,
    pub nt: usize,
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Grid {
    pub fn new(s: (f64, f64), t: (f64, f64), ns: usize, nt: usize) -> Result<Self, GridError> {
        if ns < 9 || nt < 9 || ns.is_multiple_of(2) || nt.is_multiple_of(2) {
            return Err(GridError::Resolution { ns, nt });
        }
        let ok = [s.0, s.1, t.0, t.1].iter().all(|v| v.is_finite()) && s.1 > s.0 && t.1 > t.0;
        if !ok {
            return Err(GridError::Domain {
                s0: s.0,
                s1: s.1,
                t0: t.0,
                t1: t.1,
            });
        }
        Ok(Self {
            ns,
            nt,
            s0: s.0,
            s1: s.1,
            t0: t.0,
            t1: t.1,
        })
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hs(&self) -> f64 {
        (self.s1 - self.s0) / (self.ns - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        (self.t1 - self.t0) / (self.nt - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.ns {
            self.s1
        } else {
            self.s0 + i as f64 * self.hs()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j + 1 == self.nt {
            self.t1
        } else {
            self.t0 + j as f64 * self.ht()
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    #[inline]
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n / self.nt, n % self.nt)
    }

    pub fn center(&self) -> (usize, usize) {
        (self.ns / 2, self.nt / 2)
    }

    /// Flat indices of nodes at least `margin` nodes away from every edge.
    pub fn interior(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        let (ns, nt) = (self.ns, self.nt);
        (margin..ns.saturating_sub(margin))
            .flat_map(move |i| (margin..nt.saturating_sub(margin)).map(move |j| i * nt + j))
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// samples at `xs` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more points than derivative order");
    // c[j][k]: weight of xs[j] for the k-th derivative
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Precomputed stencils for one derivative order along an axis of `n`
/// uniformly spaced nodes. Interior nodes get a centered stencil of
/// `width` points; nodes near an edge get the one-sided stencil of the
/// same width.
#[derive(Debug, Clone)]
pub struct AxisStencil {
    n: usize,
    /// Per node: offset of the first sample and weights (unit spacing).
    rows: Vec<(usize, Vec<f64>)>,
    order: usize,
}

impl AxisStencil {
    /// `accuracy` is the formal order of the truncation error (2 or 4).
    pub fn new(n: usize, order: usize, accuracy: usize) -> Self {
        // centered width covers order + accuracy - 1 points, rounded to odd;
        // one-sided stencils need order + accuracy points
        let centered = {
            let w = order + accuracy - 1;
            if w.is_multiple_of(2) {
                w + 1
            } else {
                w
            }
        };
        let one_sided = order + accuracy;
        assert!(n >= one_sided, "axis too short for the stencil");
        let half = centered / 2;
        let rows = (0..n)
            .map(|i| {
                let (start, width) = if i >= half && i + half < n {
                    (i - half, centered)
                } else if i < half {
                    (0, one_sided)
                } else {
                    (n - one_sided, one_sided)
                };
                let xs: Vec<f64> = (start..start + width).map(|k| k as f64).collect();
                (start, fornberg_weights(i as f64, &xs, order))
            })
            .collect();
        Self { n, rows, order }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Derivative at node `i` of the samples `f(k)` with spacing `h`.
    #[inline]
    pub fn apply<F: Fn(usize) -> f64>(&self, i: usize, h: f64, f: F) -> f64 {
        let (start, w) = &self.rows[i];
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            acc += wk * f(start + k);
        }
        acc / h.powi(self.order as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fornberg_known_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
        let w = fornberg_weights(0.0, &[0.0, 1.0, 2.0], 1);
        for (a, b) in w.iter().zip([-1.5, 2.0, -0.5]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        for (a, b) in w.iter().zip([-1.0, 16.0, -30.0, 16.0, -1.0]) {
            assert_abs_diff_eq!(*a, b / 12.0, epsilon = 1e-13);
        }
        let w = fornberg_weights(0.0, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2);
        for (a, b) in w.iter().zip([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) {
            assert_abs_diff_eq!(*a, b / 12.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_order_stencil_exact_on_quadratics() {
        let st = AxisStencil::new(9, 1, 2);
        let h = 0.25;
        for i in 0..9 {
            let d = st.apply(i, h, |k| {
                let x = k as f64 * h;
                3.0 * x * x - x + 2.0
            });
            assert_abs_diff_eq!(d, 6.0 * i as f64 * h - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new((0.0, 1.0), (0.0, 1.0), 8, 9).is_err());
        assert!(Grid::new((0.0, 1.0), (0.0, 1.0), 7, 7).is_err());
        assert!(Grid::new((1.0, 1.0), (0.0, 1.0), 9, 9).is_err());
        let g = Grid::new((0.0, 1.0), (-1.0, 1.0), 9, 11).unwrap();
        assert_eq!(g.center(), (4, 5));
        assert_eq!(g.ij(g.idx(3, 7)), (3, 7));
        assert_eq!(g.t(10), 1.0);
        assert_eq!(g.interior(2).count(), 5 * 7);
    }
}
