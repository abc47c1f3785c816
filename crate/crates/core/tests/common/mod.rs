//! Independent reference computations for the integration tests.
//!
//! Everything here is deliberately naive: adaptive Simpson quadrature on
//! formulas written out by hand, with no code shared with the library's
//! closed-form or Gauss-rule assembly.
#![allow(dead_code)]

use std::f64::consts::PI;

use specpol::c64;

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`. The interval
/// is cut into 16 pieces first so that oscillatory integrands cannot fool
/// the error estimate by aliasing.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f = &f as &dyn Fn(f64) -> f64;
    const PIECES: usize = 16;
    let step = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let (l, r) = (a + step * i as f64, a + step * (i + 1) as f64);
            let (fl, fr, fm) = (f(l), f(r), f(0.5 * (l + r)));
            let whole = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
            simpson_step(f, l, r, fl, fm, fr, whole, tol / PIECES as f64, 40)
        })
        .sum()
}

/// Sum of [`simpson`] over consecutive pieces of `breaks`.
pub fn simpson_pieces(f: impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    breaks.windows(2).map(|w| simpson(&f, w[0], w[1], tol)).sum()
}

/// The two-branch profile, written out again.
pub fn profile(y: f64, x: f64) -> f64 {
    if x < y {
        -1.5 + 0.5 * (5f64.sqrt() * x).cos()
    } else {
        2.0 + (2f64.sqrt() * x).cos()
    }
}

/// `(1/2π) ∫ g(x) e^{-i j x} dx` for `g` smooth away from `y`.
pub fn fourier_moment(g: impl Fn(f64) -> f64, y: f64, j: i64) -> c64 {
    let breaks = [-PI, y, PI];
    let jf = j as f64;
    let re = simpson_pieces(|x| g(x) * (jf * x).cos(), &breaks, 1e-13);
    let im = simpson_pieces(|x| -g(x) * (jf * x).sin(), &breaks, 1e-13);
    c64::new(re, im) / (2.0 * PI)
}

/// Piecewise-polynomial basis on the periodic mesh of `[-π, π)`, evaluated
/// from textbook shape functions.
#[derive(Clone, Copy, Debug)]
pub enum Basis {
    /// Hat functions, one per node.
    Hat,
    /// Cubic Hermite: `2i` is the value at node `i`, `2i + 1` the slope
    /// scaled by the mesh width.
    Hermite,
}

impl Basis {
    pub fn dofs(self, n: usize) -> usize {
        match self {
            Basis::Hat => n,
            Basis::Hermite => 2 * n,
        }
    }

    /// `d`-th derivative of global function `dof` on element `e` at `x`.
    pub fn eval(self, n: usize, dof: usize, e: usize, d: usize, x: f64) -> f64 {
        let h = 2.0 * PI / n as f64;
        let t = (x - (-PI + h * e as f64)) / h;
        let next = (e + 1) % n;
        let s = h.powi(-(d as i32));
        match self {
            Basis::Hat => {
                // Distinct nodes only; a two-node mesh never reaches here.
                let local = if dof == e {
                    [1.0 - t, -1.0, 0.0]
                } else if dof == next {
                    [t, 1.0, 0.0]
                } else {
                    return 0.0;
                };
                local[d] * s
            }
            Basis::Hermite => {
                let (node, slope) = (dof / 2, dof % 2 == 1);
                let which = if node == e {
                    0
                } else if node == next {
                    2
                } else {
                    return 0.0;
                } + slope as usize;
                let v = match (which, d) {
                    (0, 0) => 1.0 - 3.0 * t * t + 2.0 * t * t * t,
                    (0, 1) => -6.0 * t + 6.0 * t * t,
                    (0, 2) => -6.0 + 12.0 * t,
                    (1, 0) => t - 2.0 * t * t + t * t * t,
                    (1, 1) => 1.0 - 4.0 * t + 3.0 * t * t,
                    (1, 2) => -4.0 + 6.0 * t,
                    (2, 0) => 3.0 * t * t - 2.0 * t * t * t,
                    (2, 1) => 6.0 * t - 6.0 * t * t,
                    (2, 2) => 6.0 - 12.0 * t,
                    (3, 0) => -t * t + t * t * t,
                    (3, 1) => -2.0 * t + 3.0 * t * t,
                    (3, 2) => -2.0 + 6.0 * t,
                    _ => unreachable!(),
                };
                v * s
            }
        }
    }

    /// Elements on which `dof` is nonzero.
    pub fn support(self, n: usize, dof: usize) -> [usize; 2] {
        let node = match self {
            Basis::Hat => dof,
            Basis::Hermite => dof / 2,
        };
        [(node + n - 1) % n, node]
    }
}

/// Component values of a product-space function `(u, v)` and of its image
/// under `H(u, v) = (−u″ − v′, u′ + 2v)`.
pub struct HEntry {
    pub u_basis: Basis,
    pub v_basis: Basis,
    pub n: usize,
}

impl HEntry {
    pub fn dim(&self) -> usize {
        self.u_basis.dofs(self.n) + self.v_basis.dofs(self.n)
    }

    /// `(u, u′, u″, v, v′)` of global function `i` on element `e`.
    fn jet(&self, i: usize, e: usize, x: f64) -> [f64; 5] {
        let nu = self.u_basis.dofs(self.n);
        let mut j = [0.0; 5];
        if i < nu {
            for d in 0..3 {
                if d < 2 || matches!(self.u_basis, Basis::Hermite) {
                    j[d] = self.u_basis.eval(self.n, i, e, d, x);
                }
            }
        } else {
            j[3] = self.v_basis.eval(self.n, i - nu, e, 0, x);
            j[4] = self.v_basis.eval(self.n, i - nu, e, 1, x);
        }
        j
    }

    fn integrate(&self, i: usize, k: usize, f: impl Fn([f64; 5], [f64; 5]) -> f64) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        let mut elems: Vec<usize> = (0..self.n).collect();
        elems.retain(|&e| {
            let touches = |idx: usize| {
                let nu = self.u_basis.dofs(self.n);
                let (b, d) = if idx < nu { (self.u_basis, idx) } else { (self.v_basis, idx - nu) };
                b.support(self.n, d).contains(&e)
            };
            touches(i) && touches(k)
        });
        elems
            .iter()
            .map(|&e| {
                let a = -PI + h * e as f64;
                simpson(|x| f(self.jet(i, e, x), self.jet(k, e, x)), a, a + h, 1e-14)
            })
            .sum()
    }

    pub fn g0(&self, i: usize, k: usize) -> f64 {
        self.integrate(i, k, |p, q| p[0] * q[0] + p[3] * q[3])
    }

    /// `(u′, ũ′) + (v, ũ′) + (u′, ṽ) + 2(v, ṽ)`.
    pub fn g1(&self, i: usize, k: usize) -> f64 {
        self.integrate(i, k, |p, q| {
            p[1] * q[1] + p[3] * q[1] + p[1] * q[3] + 2.0 * p[3] * q[3]
        })
    }

    pub fn g2(&self, i: usize, k: usize) -> f64 {
        self.integrate(i, k, |p, q| {
            (-p[2] - p[4]) * (-q[2] - q[4]) + (p[1] + 2.0 * p[3]) * (q[1] + 2.0 * q[3])
        })
    }
}

/// Largest entrywise deviation of a complex matrix from `f(i, k)`.
pub fn max_deviation(m: &faer::Mat<c64>, f: impl Fn(usize, usize) -> c64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for k in 0..m.ncols() {
            worst = worst.max((m[(i, k)] - f(i, k)).norm());
        }
    }
    worst
}
