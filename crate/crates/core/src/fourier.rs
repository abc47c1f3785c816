//! Galerkin data in the orthonormal Fourier basis `e_k(x) = e^{ikx} / √(2π)`.
//!
//! Multiplication by a real profile `a` becomes the Hermitian Toeplitz matrix
//! `[â(m − k)]`; all coefficients are evaluated in closed form from the
//! piecewise trigonometric description, so the matrices are exact up to
//! rounding.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{OperatorModel, PiecewiseTrig};

/// Gram data of a trial space: `g0 = (φ_k, φ_m)`, `g1 = (Aφ_k, φ_m)` and,
/// for second-order spectra, `g2 = (Aφ_k, Aφ_m)`. Row index is the test
/// function `m`, column index the trial function `k`.
#[derive(Debug, Clone)]
pub struct GramTriple {
    pub g0: Mat<c64>,
    pub g1: Mat<c64>,
    pub g2: Option<Mat<c64>>,
}

impl GramTriple {
    pub fn dim(&self) -> usize {
        self.g0.nrows()
    }

    /// Gram data of `A + sI` on the same space.
    pub fn shifted(&self, s: f64) -> Self {
        let s = c64::new(s, 0.0);
        let g1 = &self.g1 + &self.g0 * faer::Scale(s);
        let g2 = self.g2.as_ref().map(|g2| {
            g2 + &self.g1 * faer::Scale(s * 2.0) + &self.g0 * faer::Scale(s * s)
        });
        Self {
            g0: self.g0.clone(),
            g1,
            g2,
        }
    }

    /// Diagonal model: `g0 = I`, `g1 = diag(d)`, `g2 = diag(d²)`.
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let diag = |f: &dyn Fn(f64) -> f64| {
            Mat::from_fn(n, n, |i, j| {
                if i == j {
                    c64::new(f(d[i]), 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            })
        };
        Self {
            g0: diag(&|_| 1.0),
            g1: diag(&|x| x),
            g2: Some(diag(&|x| x * x)),
        }
    }
}

/// Basis labels `lo..=hi`; label `k` sits at row `k - lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierWindow {
    lo: i64,
    hi: i64,
}

impl FourierWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::pre(format!("empty window {lo}..{hi}")));
        }
        Ok(Self { lo, hi })
    }

    /// `{-n..n}` for `N = 2n + 1` and `{-n..n-1}` for `N = 2n`.
    pub fn for_dimension(n_dim: usize) -> Result<Self> {
        if n_dim == 0 {
            return Err(Error::pre("dimension must be positive"));
        }
        let n = (n_dim / 2) as i64;
        if n_dim % 2 == 1 {
            Self::new(-n, n)
        } else {
            Self::new(-n, n - 1)
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn dim(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, label: i64) -> bool {
        (self.lo..=self.hi).contains(&label)
    }

    pub fn row(&self, label: i64) -> Option<usize> {
        self.contains(label).then(|| (label - self.lo) as usize)
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// `∫_l^r e^{iγx} dx`, written as `e^{iγ(l+r)/2} (r − l) sinc(γ(r − l)/2)`
/// so that nothing cancels when `γ → 0`.
fn exp_integral(gamma: f64, l: f64, r: f64) -> c64 {
    let len = r - l;
    let mid = 0.5 * (l + r);
    c64::from_polar(len * sinc(0.5 * gamma * len), gamma * mid)
}

/// `â(j) = (1/2π) ∫ a(x) e^{−ijx} dx` in closed form.
pub fn fourier_coeff(profile: &PiecewiseTrig, j: i64) -> c64 {
    let jf = j as f64;
    let mut acc = c64::new(0.0, 0.0);
    for s in profile.segments() {
        acc += exp_integral(-jf, s.left, s.right) * s.constant;
        for c in &s.cosines {
            let half = 0.5 * c.amplitude;
            acc += (exp_integral(c.frequency - jf, s.left, s.right)
                + exp_integral(-c.frequency - jf, s.left, s.right))
                * half;
        }
    }
    acc / (2.0 * PI)
}

fn toeplitz(profile: &PiecewiseTrig, n: usize) -> Mat<c64> {
    let coeffs: Vec<c64> = (0..n as i64).map(|j| fourier_coeff(profile, j)).collect();
    Mat::from_fn(n, n, |m, k| {
        if m >= k {
            coeffs[m - k]
        } else {
            coeffs[k - m].conj()
        }
    })
}

fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

/// Coefficient of the rank-two perturbation on basis label `k`.
fn rank_two_weight(label: i64) -> f64 {
    match label {
        -1 => -3.0,
        2 => 1.0,
        _ => 0.0,
    }
}

pub fn assemble_a(profile: &PiecewiseTrig, window: FourierWindow) -> GramTriple {
    let n = window.dim();
    GramTriple {
        g0: identity(n),
        g1: toeplitz(profile, n),
        g2: None,
    }
}

/// `g2 = [â²(m − k)]` with `a²` squared symbolically.
pub fn assemble_a_second_order(profile: &PiecewiseTrig, window: FourierWindow) -> GramTriple {
    let mut gram = assemble_a(profile, window);
    gram.g2 = Some(toeplitz(&profile.square(), window.dim()));
    gram
}

fn check_perturbation_visible(window: FourierWindow) -> Result<()> {
    if window.contains(-1) && window.contains(2) {
        Ok(())
    } else {
        Err(Error::pre(format!(
            "window {}..{} must contain labels -1 and 2",
            window.lo, window.hi
        )))
    }
}

pub fn assemble_b(profile: &PiecewiseTrig, window: FourierWindow) -> Result<GramTriple> {
    check_perturbation_visible(window)?;
    let mut gram = assemble_a(profile, window);
    for label in [-1, 2] {
        let i = window.row(label).unwrap();
        gram.g1[(i, i)] += rank_two_weight(label);
    }
    Ok(gram)
}

/// With `B = A + R`, `R e_k = r_k e_k`:
/// `(Be_k, Be_m) = (Ae_k, Ae_m) + (r_m + r_k)(Ae_k, e_m) + r_k² δ_km`.
pub fn assemble_b_second_order(
    profile: &PiecewiseTrig,
    window: FourierWindow,
) -> Result<GramTriple> {
    check_perturbation_visible(window)?;
    let a = assemble_a_second_order(profile, window);
    let n = window.dim();
    let r: Vec<f64> = window.labels().map(rank_two_weight).collect();
    let g2a = a.g2.as_ref().unwrap();
    let g2 = Mat::from_fn(n, n, |m, k| {
        let mut v = g2a[(m, k)] + a.g1[(m, k)] * (r[m] + r[k]);
        if m == k {
            v += r[k] * r[k];
        }
        v
    });
    let g1 = Mat::from_fn(n, n, |m, k| {
        a.g1[(m, k)] + if m == k { r[k] } else { 0.0 }
    });
    Ok(GramTriple {
        g0: a.g0,
        g1,
        g2: Some(g2),
    })
}

/// Dispatches on the model kind; `second_order` adds `g2`.
pub fn assemble_model(
    model: &OperatorModel,
    window: FourierWindow,
    second_order: bool,
) -> Result<GramTriple> {
    match (model, second_order) {
        (OperatorModel::Multiplication { profile, .. }, false) => Ok(assemble_a(profile, window)),
        (OperatorModel::Multiplication { profile, .. }, true) => {
            Ok(assemble_a_second_order(profile, window))
        }
        (OperatorModel::Perturbed { profile, .. }, false) => assemble_b(profile, window),
        (OperatorModel::Perturbed { profile, .. }, true) => {
            assemble_b_second_order(profile, window)
        }
        (OperatorModel::Stokes, _) => Err(Error::UnsupportedModel { model: "StokesH" }),
    }
}
