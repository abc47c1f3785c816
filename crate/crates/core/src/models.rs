//! Concrete self-adjoint model operators and their exact spectra.
//!
//! Two families live here: multiplication operators on `L2(-π, π)` by a
//! piecewise trigonometric profile (optionally with a rank-two perturbation),
//! and the periodic Stokes-type system
//!
//! ```text
//! H = [ -d²/dx²   -d/dx ]
//!     [  d/dx       2   ]
//! ```
//!
//! whose discrete eigenvalues are known in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `amplitude * cos(frequency * x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cosine {
    pub amplitude: f64,
    pub frequency: f64,
}

/// `constant + Σ amplitude_i cos(frequency_i x)` on `[left, right)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub constant: f64,
    pub cosines: Vec<Cosine>,
}

impl Segment {
    pub fn eval(&self, x: f64) -> f64 {
        self.constant
            + self
                .cosines
                .iter()
                .map(|c| c.amplitude * (c.frequency * x).cos())
                .sum::<f64>()
    }

    /// Closed range of the segment's values over `[left, right]`.
    fn value_range(&self) -> (f64, f64) {
        let (l, r) = (self.left, self.right);
        let mut lo = self.eval(l).min(self.eval(r));
        let mut hi = self.eval(l).max(self.eval(r));
        match self.cosines.as_slice() {
            [] => {}
            [c] if c.frequency != 0.0 => {
                // Interior extrema of cos(βx) sit at βx = mπ.
                let beta = c.frequency.abs();
                let m_lo = (beta * l / PI).ceil() as i64;
                let m_hi = (beta * r / PI).floor() as i64;
                for m in m_lo..=m_hi {
                    let x = m as f64 * PI / beta;
                    if x > l && x < r {
                        let v = self.eval(x);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            [_] => {}
            _ => {
                let n = 8192;
                for i in 1..n {
                    let v = self.eval(l + (r - l) * i as f64 / n as f64);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }
}

/// A real function on `[-π, π)` given piecewise by trigonometric sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTrig {
    segments: Vec<Segment>,
}

impl PiecewiseTrig {
    /// Validates that the segments partition `[-π, π)` in order.
    /// Empty segments (`left == right`) are dropped.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let segments: Vec<Segment> = segments
            .into_iter()
            .filter(|s| s.right != s.left)
            .collect();
        let tol = 1e-12;
        let first = segments
            .first()
            .ok_or_else(|| Error::pre("profile needs at least one segment"))?;
        if (first.left + PI).abs() > tol {
            return Err(Error::pre("segments must start at -π"));
        }
        for w in segments.windows(2) {
            if (w[0].right - w[1].left).abs() > tol {
                return Err(Error::pre("segments must be contiguous"));
            }
        }
        for s in &segments {
            if s.left >= s.right {
                return Err(Error::pre(format!(
                    "segment [{}, {}) is reversed",
                    s.left, s.right
                )));
            }
        }
        if (segments.last().unwrap().right - PI).abs() > tol {
            return Err(Error::pre("segments must end at π"));
        }
        Ok(Self { segments })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            segments: vec![Segment {
                left: -PI,
                right: PI,
                constant: c,
                cosines: Vec::new(),
            }],
        }
    }

    /// The two-branch profile with a jump at `y`:
    /// `-3/2 + cos(√5 x)/2` on `[-π, y)` and `2 + cos(√2 x)` on `[y, π)`.
    pub fn jump_profile(y: f64) -> Result<Self> {
        if !(-PI..PI).contains(&y) {
            return Err(Error::pre(format!("jump point {y} outside [-π, π)")));
        }
        Self::new(vec![
            Segment {
                left: -PI,
                right: y,
                constant: -1.5,
                cosines: vec![Cosine {
                    amplitude: 0.5,
                    frequency: 5f64.sqrt(),
                }],
            },
            Segment {
                left: y,
                right: PI,
                constant: 2.0,
                cosines: vec![Cosine {
                    amplitude: 1.0,
                    frequency: 2f64.sqrt(),
                }],
            },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Value at `x ∈ [-π, π)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(-PI..PI).contains(&x) {
            return Err(Error::pre(format!("x = {x} outside [-π, π)")));
        }
        let seg = self
            .segments
            .iter()
            .find(|s| x >= s.left && x < s.right)
            .unwrap_or_else(|| self.segments.last().unwrap());
        Ok(seg.eval(x))
    }

    /// Pointwise square, formed symbolically with product-to-sum on the cosines.
    pub fn square(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let mut constant = s.constant * s.constant;
                let mut terms: Vec<Cosine> = Vec::new();
                let mut push = |amplitude: f64, frequency: f64, constant: &mut f64| {
                    let frequency = frequency.abs();
                    if frequency == 0.0 {
                        *constant += amplitude;
                    } else if let Some(t) = terms
                        .iter_mut()
                        .find(|t| (t.frequency - frequency).abs() <= 1e-14 * frequency)
                    {
                        t.amplitude += amplitude;
                    } else {
                        terms.push(Cosine {
                            amplitude,
                            frequency,
                        });
                    }
                };
                for c in &s.cosines {
                    push(2.0 * s.constant * c.amplitude, c.frequency, &mut constant);
                }
                for a in &s.cosines {
                    for b in &s.cosines {
                        let w = 0.5 * a.amplitude * b.amplitude;
                        push(w, a.frequency - b.frequency, &mut constant);
                        push(w, a.frequency + b.frequency, &mut constant);
                    }
                }
                Segment {
                    left: s.left,
                    right: s.right,
                    constant,
                    cosines: terms,
                }
            })
            .collect();
        Self { segments }
    }

    /// Essential range of the profile as sorted, disjoint closed bands.
    pub fn range_bands(&self) -> Vec<Band> {
        let mut raw: Vec<(f64, f64)> = self.segments.iter().map(Segment::value_range).collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut bands: Vec<Band> = Vec::new();
        for (lo, hi) in raw {
            match bands.last_mut() {
                Some(b) if lo <= b.hi => b.hi = b.hi.max(hi),
                _ => bands.push(Band { lo, hi }),
            }
        }
        bands
    }
}

/// Location of the profile's discontinuity.
///
/// `Rational { q, p }` stands for `y = -π q / p` and keeps the period
/// computation exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JumpPoint {
    Rational { q: u64, p: u64 },
    Radians(f64),
}

impl JumpPoint {
    pub fn rational(q: u64, p: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::pre("denominator p must be positive"));
        }
        if q > p {
            return Err(Error::pre("q/p must lie in [0, 1] so that y ∈ [-π, π)"));
        }
        if q != 0 && gcd(p, q) != 1 {
            return Err(Error::pre(format!("{q}/{p} is not in lowest terms")));
        }
        Ok(JumpPoint::Rational { q, p })
    }

    pub fn radians(&self) -> f64 {
        match *self {
            JumpPoint::Rational { q, p } => -PI * q as f64 / p as f64,
            JumpPoint::Radians(y) => y,
        }
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period in `N` of the spurious gap eigenvalues for a jump at `y = -π q / p`.
pub fn omega_period(p: u64, q: u64) -> Result<u64> {
    if p == 0 {
        return Err(Error::pre("p must be positive"));
    }
    if q == 0 {
        return Ok(2);
    }
    if gcd(p, q) != 1 {
        return Err(Error::pre(format!("gcd({p}, {q}) != 1")));
    }
    if p % 2 == 1 && q % 2 == 1 {
        Ok(p)
    } else {
        Ok(2 * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Multiplication,
    Perturbed,
    Stokes,
}

/// A concrete operator together with enough data to assemble it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorModel {
    /// Multiplication by `profile`; `jump` is `None` for profiles that are not
    /// of the two-branch form.
    Multiplication {
        jump: Option<JumpPoint>,
        profile: PiecewiseTrig,
    },
    /// Multiplication by the two-branch profile plus the rank-two term
    /// `-3 e₋₁⊗e₋₁ + e₂⊗e₂` in the orthonormal Fourier basis.
    Perturbed { jump: JumpPoint, profile: PiecewiseTrig },
    Stokes,
}

impl OperatorModel {
    pub fn multiplication(jump: JumpPoint) -> Result<Self> {
        Ok(OperatorModel::Multiplication {
            jump: Some(jump),
            profile: PiecewiseTrig::jump_profile(jump.radians())?,
        })
    }

    pub fn perturbed(jump: JumpPoint) -> Result<Self> {
        Ok(OperatorModel::Perturbed {
            jump,
            profile: PiecewiseTrig::jump_profile(jump.radians())?,
        })
    }

    pub fn constant(c: f64) -> Self {
        OperatorModel::Multiplication {
            jump: None,
            profile: PiecewiseTrig::constant(c),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            OperatorModel::Multiplication { .. } => ModelKind::Multiplication,
            OperatorModel::Perturbed { .. } => ModelKind::Perturbed,
            OperatorModel::Stokes => ModelKind::Stokes,
        }
    }

    pub fn profile(&self) -> Result<&PiecewiseTrig> {
        match self {
            OperatorModel::Multiplication { profile, .. }
            | OperatorModel::Perturbed { profile, .. } => Ok(profile),
            OperatorModel::Stokes => Err(Error::UnsupportedModel { model: "StokesH" }),
        }
    }

    pub fn eval_profile(&self, x: f64) -> Result<f64> {
        self.profile()?.eval(x)
    }

    /// Known spectrum. For `Stokes`, both eigenvalue series are listed for
    /// `k = 0..=k_max`; `k_max` is ignored by the other kinds.
    ///
    /// The perturbed model only reports the essential bands: its discrete
    /// eigenvalues have no closed form.
    pub fn exact_spectrum(&self, k_max: u64) -> ExactSpectrum {
        match self {
            OperatorModel::Multiplication { profile, .. }
            | OperatorModel::Perturbed { profile, .. } => ExactSpectrum {
                bands: profile.range_bands(),
                eigenvalues: Vec::new(),
                essential_points: Vec::new(),
            },
            OperatorModel::Stokes => {
                let mut eigenvalues: Vec<DiscreteEigenvalue> = (0..=k_max)
                    .flat_map(|k| {
                        let multiplicity = if k == 0 { 1 } else { 2 };
                        [Branch::Minus, Branch::Plus].map(|b| DiscreteEigenvalue {
                            value: stokes_eigenvalue(k, b),
                            multiplicity,
                        })
                    })
                    .collect();
                eigenvalues.sort_by(|a, b| a.value.total_cmp(&b.value));
                ExactSpectrum {
                    bands: Vec::new(),
                    eigenvalues,
                    essential_points: vec![1.0],
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEigenvalue {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    pub bands: Vec<Band>,
    pub eigenvalues: Vec<DiscreteEigenvalue>,
    pub essential_points: Vec<f64>,
}

impl ExactSpectrum {
    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues
            .iter()
            .map(|e| e.value)
            .chain(self.essential_points.iter().copied())
    }

    /// Bands and accumulation points only, without discrete eigenvalues.
    pub fn essential_part(&self) -> ExactSpectrum {
        ExactSpectrum {
            bands: self.bands.clone(),
            eigenvalues: Vec::new(),
            essential_points: self.essential_points.clone(),
        }
    }

    /// Whether the closed interval `[lo, hi]` meets the spectrum.
    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.bands.iter().any(|b| b.lo <= hi && lo <= b.hi)
            || self.points().any(|p| lo <= p && p <= hi)
    }

    /// Distance from `x` to the spectrum (infinite if the spectrum is empty).
    pub fn distance(&self, x: f64) -> f64 {
        let bands = self.bands.iter().map(|b| {
            if x < b.lo {
                b.lo - x
            } else if x > b.hi {
                x - b.hi
            } else {
                0.0
            }
        });
        bands
            .chain(self.points().map(|p| (p - x).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
}

/// `λ_k^± = (k² + 2 ± √((k² + 2)² − 4k²)) / 2`.
///
/// The minus branch is evaluated as `2k² / (k² + 2 + √(k⁴ + 4))`, the same
/// radical without the cancellation.
pub fn stokes_eigenvalue(k: u64, branch: Branch) -> f64 {
    let k2 = (k * k) as f64;
    let s = k2 + 2.0;
    let root = (s * s - 4.0 * k2).sqrt();
    match branch {
        Branch::Plus => 0.5 * (s + root),
        Branch::Minus => 2.0 * k2 / (s + root),
    }
}

/// Determinant of the principal symbol `[[ξ², iξ], [−iξ, 2 − λ]]`.
pub fn stokes_symbol_det(lambda: f64, xi: f64) -> f64 {
    let a = Complex64::new(xi * xi, 0.0);
    let b = Complex64::new(0.0, xi);
    let c = Complex64::new(0.0, -xi);
    let d = Complex64::new(2.0 - lambda, 0.0);
    (a * d - b * c).re
}
