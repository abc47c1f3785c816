//! First-order (Galerkin) and second-order relative spectra of Gram data.
//!
//! First order: the generalized Hermitian-definite problem `g1 c = λ g0 c`.
//!
//! Second order: the quadratic pencil `(g2 − z·2g1 + z²g0) c = 0`, whose roots
//! are the points `z` with `((A − z)u, (A − z̄)v) = 0` for all `v` in the
//! trial space. The mass matrix is factored as `g0 = LLᴴ`, the pencil is made
//! monic, scaled so that both companion blocks have unit size, and solved as a
//! dense eigenproblem of twice the dimension.
//!
//! Residuals are normwise backward errors: for the first order
//! `‖(g1 − λg0)c‖ / ((‖g1‖ + |λ|‖g0‖)‖c‖)` and for the pencil
//! `‖Q(z)c‖ / ((‖g2‖ + 2|z|‖g1‖ + |z|²‖g0‖)‖c‖)` with Frobenius norms.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{c64, Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use crate::analysis::{enclosure, Interval};
use crate::error::{Error, Result};
use crate::fourier::GramTriple;

/// Default backward-error tolerance for first-order eigenpairs.
pub const FIRST_ORDER_TOL: f64 = 1e-8;
/// Points of the quadratic pencil above this backward error are flagged.
pub const SECOND_ORDER_TOL: f64 = 1e-6;

/// Name of the dense backend, recorded in run manifests.
pub const BACKEND: &str = "faer-0.24 dense (Cholesky reduction + QR/Schur)";

#[derive(Debug, Clone)]
pub struct FirstOrderResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Columns are the generalized eigenvectors in the trial basis.
    pub eigenvectors: Option<Mat<c64>>,
}

impl FirstOrderResult {
    pub fn in_open_interval(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > lo && l < hi)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SecondOrderResult {
    /// Sorted lexicographically by `(Re, Im)`.
    pub points: Vec<c64>,
    pub residuals: Vec<f64>,
    pub eigenvectors: Option<Mat<c64>>,
}

impl SecondOrderResult {
    pub fn enclosures(&self) -> Vec<Interval> {
        self.points.iter().map(|&z| enclosure(z)).collect()
    }

    /// Indices and points whose residual is within `tol`.
    pub fn passing(&self, tol: f64) -> impl Iterator<Item = (usize, c64)> + '_ {
        self.points
            .iter()
            .zip(&self.residuals)
            .enumerate()
            .filter(move |(_, (_, &r))| r <= tol)
            .map(|(i, (&z, _))| (i, z))
    }

    /// Indices whose residual exceeds `tol`.
    pub fn flagged(&self, tol: f64) -> Vec<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, &r)| !(r <= tol))
            .map(|(i, _)| i)
            .collect()
    }
}

fn frob(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

fn is_real(m: &Mat<c64>) -> bool {
    m.col_iter().all(|c| c.iter().all(|x| x.im == 0.0))
}

fn is_identity(m: &Mat<c64>) -> bool {
    (0..m.nrows()).all(|i| {
        (0..m.ncols()).all(|j| m[(i, j)] == c64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    })
}

fn hermitian_part(m: &Mat<c64>) -> Mat<c64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

fn to_real(m: &Mat<c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Ascending eigenvalues and eigenvectors of a Hermitian matrix.
fn hermitian_eigen(a: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let solver_err = |e: faer::linalg::evd::EvdError| Error::Solver(format!("{e:?}"));
    if is_real(a) {
        let evd = to_real(a).self_adjoint_eigen(Side::Lower).map_err(solver_err)?;
        let vals = (0..a.nrows()).map(|i| evd.S()[i]).collect();
        Ok((vals, to_complex(evd.U())))
    } else {
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(solver_err)?;
        let vals = (0..a.nrows()).map(|i| evd.S()[i].re).collect();
        Ok((vals, evd.U().to_owned()))
    }
}

fn hermitian_eigenvalues(a: &Mat<c64>) -> Result<Vec<f64>> {
    let solver_err = |e: faer::linalg::evd::EvdError| Error::Solver(format!("{e:?}"));
    if is_real(a) {
        to_real(a)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(solver_err)
    } else {
        a.self_adjoint_eigenvalues(Side::Lower).map_err(solver_err)
    }
}

/// Cholesky factor of the mass matrix, or nothing for an exact identity.
struct MassFactor {
    l: Option<Mat<c64>>,
}

impl MassFactor {
    fn new(g0: &Mat<c64>) -> Result<Self> {
        if g0.nrows() != g0.ncols() || g0.nrows() == 0 {
            return Err(Error::pre("mass matrix must be square and non-empty"));
        }
        if is_identity(g0) {
            return Ok(Self { l: None });
        }
        let h = hermitian_part(g0);
        let vals = hermitian_eigenvalues(&h)?;
        let min_eig = vals[0];
        let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if min_eig <= 1e-12 * norm {
            return Err(Error::IllPosedMass { min_eig, norm });
        }
        let llt = h
            .llt(Side::Lower)
            .map_err(|_| Error::IllPosedMass { min_eig, norm })?;
        Ok(Self {
            l: Some(llt.L().to_owned()),
        })
    }

    /// `L⁻¹ A L⁻ᴴ`, Hermitian part.
    fn reduce(&self, a: &Mat<c64>) -> Mat<c64> {
        let Some(l) = &self.l else {
            return hermitian_part(a);
        };
        let mut x = a.clone();
        solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
        let mut y = x.adjoint().to_owned();
        solve_lower_triangular_in_place(l.as_ref(), y.as_mut(), Par::Seq);
        hermitian_part(&y)
    }

    /// `L⁻ᴴ Y`.
    fn lift(&self, mut y: Mat<c64>) -> Mat<c64> {
        if let Some(l) = &self.l {
            solve_upper_triangular_in_place(l.adjoint(), y.as_mut(), Par::Seq);
        }
        y
    }
}

fn first_order_residuals(gram: &GramTriple, lambdas: &[f64], vecs: &Mat<c64>) -> Vec<f64> {
    let g1c = &gram.g1 * vecs;
    let g0c = &gram.g0 * vecs;
    let (n1, n0) = (frob(gram.g1.as_ref()), frob(gram.g0.as_ref()));
    lambdas
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mut num = 0.0;
            for i in 0..vecs.nrows() {
                num += (g1c[(i, j)] - g0c[(i, j)] * l).norm_sqr();
            }
            let cn = vecs.col(j).norm_l2();
            num.sqrt() / ((n1 + l.abs() * n0) * cn).max(f64::MIN_POSITIVE)
        })
        .collect()
}

fn second_order_residuals(gram: &GramTriple, points: &[c64], vecs: &Mat<c64>) -> Result<Vec<f64>> {
    let g2 = gram
        .g2
        .as_ref()
        .ok_or_else(|| Error::pre("second-order residuals need g2"))?;
    let g2c = g2 * vecs;
    let g1c = &gram.g1 * vecs;
    let g0c = &gram.g0 * vecs;
    let (n2, n1, n0) = (
        frob(g2.as_ref()),
        frob(gram.g1.as_ref()),
        frob(gram.g0.as_ref()),
    );
    Ok(points
        .iter()
        .enumerate()
        .map(|(j, &z)| {
            let mut num = 0.0;
            for i in 0..vecs.nrows() {
                num += (g2c[(i, j)] - g1c[(i, j)] * (z * 2.0) + g0c[(i, j)] * (z * z)).norm_sqr();
            }
            let cn = vecs.col(j).norm_l2();
            let az = z.norm();
            num.sqrt() / ((n2 + 2.0 * az * n1 + az * az * n0) * cn).max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Spectrum of the compression: all eigenvalues of `(g1, g0)`, ascending.
pub fn solve_first_order(gram: &GramTriple) -> Result<FirstOrderResult> {
    let mass = MassFactor::new(&gram.g0)?;
    let reduced = mass.reduce(&gram.g1);
    let (eigenvalues, y) = hermitian_eigen(&reduced)?;
    let vecs = mass.lift(y);
    let residuals = first_order_residuals(gram, &eigenvalues, &vecs);
    Ok(FirstOrderResult {
        eigenvalues,
        residuals,
        eigenvectors: Some(vecs),
    })
}

/// All `2·dim` roots of `det(g2 − z·2g1 + z²g0) = 0`.
pub fn solve_second_order(gram: &GramTriple) -> Result<SecondOrderResult> {
    let g2 = gram
        .g2
        .as_ref()
        .ok_or_else(|| Error::pre("second-order spectrum needs g2"))?;
    let n = gram.dim();
    let mass = MassFactor::new(&gram.g0)?;
    let c = mass.reduce(&(&gram.g1 * faer::Scale(c64::new(2.0, 0.0))));
    let k = mass.reduce(g2);

    // μ = z / γ balances the blocks of the monic companion form.
    let gamma = {
        let g = (frob(k.as_ref()) / (n as f64).sqrt()).sqrt();
        if g > 0.0 && g.is_finite() {
            g
        } else {
            1.0
        }
    };
    let companion = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => c64::new(0.0, 0.0),
        (true, false) => c64::new(if j - n == i { 1.0 } else { 0.0 }, 0.0),
        (false, true) => -k[(i - n, j)] / (gamma * gamma),
        (false, false) => c[(i - n, j - n)] / gamma,
    });

    let solver_err = |e: faer::linalg::evd::EvdError| Error::Solver(format!("{e:?}"));
    let evd = if is_real(&companion) {
        faer::linalg::solvers::Eigen::new_from_real(to_real(&companion).as_ref())
            .map_err(solver_err)?
    } else {
        companion.eigen().map_err(solver_err)?
    };

    // Top block carries d, bottom block μd; use whichever is better scaled.
    let mut d = Mat::<c64>::zeros(n, 2 * n);
    let mut points = Vec::with_capacity(2 * n);
    for j in 0..2 * n {
        let mu = evd.S()[j];
        points.push(mu * gamma);
        let col = evd.U().col(j);
        if mu.norm() > 1.0 {
            for i in 0..n {
                d[(i, j)] = col[n + i] / mu;
            }
        } else {
            for i in 0..n {
                d[(i, j)] = col[i];
            }
        }
    }
    let vecs = mass.lift(d);
    let residuals = second_order_residuals(gram, &points, &vecs)?;

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .re
            .total_cmp(&points[b].re)
            .then(points[a].im.total_cmp(&points[b].im))
    });
    let sorted_vecs = Mat::from_fn(n, 2 * n, |i, j| vecs[(i, order[j])]);
    Ok(SecondOrderResult {
        points: order.iter().map(|&i| points[i]).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        eigenvectors: Some(sorted_vecs),
    })
}

/// Basis values `V` and operator images `W` sampled at weighted quadrature
/// points, with `g0 = VᵀV`, `g1 = VᵀW`, `g2 = WᵀW`.
#[derive(Debug, Clone)]
pub struct QuadratureFactor {
    pub values: Mat<f64>,
    pub images: Mat<f64>,
}

/// Recomputes near-real second-order points to full accuracy.
///
/// Roots close to the real axis come in nearly coincident conjugate pairs,
/// so the companion form only resolves them to about `√ε`. In the basis of
/// `g0`-orthonormal Galerkin eigenvectors `u_i` the pencil is exactly
/// `diag((λ_i − z)²) + M` with `M_ij = (r_j, r_i)` and
/// `r_i = (A − λ_i) u_i` sampled pointwise, which stays well conditioned as
/// `Im z → 0`. A Schur complement onto the eigenvalues clustered at `Re z`
/// leaves a tiny local pencil.
pub struct SecondOrderRefiner<'a> {
    gram: &'a GramTriple,
    lambdas: Vec<f64>,
    vectors: Mat<c64>,
    m: Mat<c64>,
}

#[derive(Debug, Clone)]
pub struct RefinedPoint {
    pub z: c64,
    pub residual: f64,
    pub iterations: usize,
    /// Pencil eigenvector in the original basis.
    pub vector: Mat<c64>,
}

/// Points with `|Im z| ≤ NEAR_REAL · max(1, |z|)` are recomputed by
/// [`SecondOrderRefiner::polish`].
pub const NEAR_REAL: f64 = 1e-3;

impl<'a> SecondOrderRefiner<'a> {
    pub fn new(gram: &'a GramTriple, factor: &QuadratureFactor) -> Result<Self> {
        let n = gram.dim();
        if factor.values.ncols() != n || factor.images.ncols() != n {
            return Err(Error::pre("factor does not match the Gram dimension"));
        }
        let first = solve_first_order(gram)?;
        let c = first.eigenvectors.unwrap();
        let v = to_complex(factor.values.as_ref());
        let w = to_complex(factor.images.as_ref());
        let mut r = &w * &c;
        let vc = &v * &c;
        for (j, &l) in first.eigenvalues.iter().enumerate() {
            for i in 0..r.nrows() {
                r[(i, j)] -= vc[(i, j)] * l;
            }
        }
        let m = r.adjoint() * &r;
        Ok(Self {
            gram,
            lambdas: first.eigenvalues,
            vectors: c,
            m,
        })
    }

    pub fn first_order(&self) -> &[f64] {
        &self.lambdas
    }

    /// g0-orthonormal Galerkin eigenvectors, one column per entry of
    /// [`Self::first_order`].
    pub fn first_order_vectors(&self) -> MatRef<'_, c64> {
        self.vectors.as_ref()
    }

    /// Refines the root nearest `z0` on the same side of the real axis.
    pub fn refine(&self, z0: c64) -> Result<RefinedPoint> {
        let n = self.lambdas.len();
        // A start split off the axis by rounding sits about as far from its
        // Galerkin value as a genuine pair sits above it.
        let nearest_gap = self
            .lambdas
            .iter()
            .map(|l| (l - z0.re).abs())
            .fold(f64::INFINITY, f64::min);
        let radius = 4.0 * z0.im.abs() + 2.0 * nearest_gap + 1e-6 * z0.norm().max(1.0);
        let mut cluster: Vec<usize> =
            (0..n).filter(|&i| (self.lambdas[i] - z0.re).abs() <= radius).collect();
        if cluster.is_empty() {
            let nearest = (0..n)
                .min_by(|&a, &b| {
                    (self.lambdas[a] - z0.re)
                        .abs()
                        .total_cmp(&(self.lambdas[b] - z0.re).abs())
                })
                .unwrap();
            cluster.push(nearest);
        }
        let rest: Vec<usize> = (0..n).filter(|i| !cluster.contains(i)).collect();
        let (nj, nf) = (cluster.len(), rest.len());
        let mu = cluster.iter().map(|&i| self.lambdas[i]).sum::<f64>() / nj as f64;
        let upper = z0.im >= 0.0;

        let mut z = z0;
        let mut iterations = 0;
        let mut local_vec = Mat::<c64>::zeros(nj, 1);
        let mut tail = Mat::<c64>::zeros(nf, 1);
        for it in 1..=20 {
            iterations = it;
            // S(z) = M_JJ − M_JF (D_F(z) + M_FF)⁻¹ M_FJ
            let m_jj = Mat::from_fn(nj, nj, |a, b| self.m[(cluster[a], cluster[b])]);
            let (s, x) = if nf > 0 {
                let t = Mat::from_fn(nf, nf, |a, b| {
                    let mut v = self.m[(rest[a], rest[b])];
                    if a == b {
                        let d = c64::new(self.lambdas[rest[a]], 0.0) - z;
                        v += d * d;
                    }
                    v
                });
                let m_fj = Mat::from_fn(nf, nj, |a, b| self.m[(rest[a], cluster[b])]);
                let lu = t.partial_piv_lu();
                let x = faer::linalg::solvers::Solve::solve(&lu, &m_fj);
                let m_jf = Mat::from_fn(nj, nf, |a, b| self.m[(cluster[a], rest[b])]);
                (&m_jj - &m_jf * &x, Some(x))
            } else {
                (m_jj, None)
            };
            // (Λ' − w)² + S with Λ' = Λ_J − μ and z = μ + w.
            let shifts: Vec<f64> = cluster.iter().map(|&i| self.lambdas[i] - mu).collect();
            let k = Mat::from_fn(nj, nj, |a, b| {
                let mut v = s[(a, b)];
                if a == b {
                    v += shifts[a] * shifts[a];
                }
                v
            });
            let gamma = {
                let g = (k.norm_l2() / (nj as f64).sqrt()).sqrt();
                if g > 0.0 && g.is_finite() {
                    g
                } else {
                    1.0
                }
            };
            let comp = Mat::from_fn(2 * nj, 2 * nj, |i, j| match (i < nj, j < nj) {
                (true, true) => c64::new(0.0, 0.0),
                (true, false) => c64::new(if j - nj == i { 1.0 } else { 0.0 }, 0.0),
                (false, true) => -k[(i - nj, j)] / (gamma * gamma),
                (false, false) => c64::new(if i == j { 2.0 * shifts[i - nj] / gamma } else { 0.0 }, 0.0),
            });
            let evd = comp.eigen().map_err(|e| Error::Solver(format!("{e:?}")))?;
            let target = z - mu;
            let best = (0..2 * nj)
                .filter(|&j| {
                    let w = evd.S()[j];
                    (w.im >= 0.0) == upper || w.im == 0.0
                })
                .min_by(|&a, &b| {
                    (evd.S()[a] * gamma - target)
                        .norm()
                        .total_cmp(&(evd.S()[b] * gamma - target).norm())
                })
                .ok_or_else(|| Error::Solver("local pencil has no root".into()))?;
            let w = evd.S()[best] * gamma;
            let col = evd.U().col(best);
            let scale = evd.S()[best];
            for a in 0..nj {
                local_vec[(a, 0)] = if scale.norm() > 1.0 { col[nj + a] / scale } else { col[a] };
            }
            if let Some(x) = &x {
                tail = -(x * &local_vec);
            }
            let z_new = c64::new(mu, 0.0) + w;
            let step = (z_new - z).norm();
            z = z_new;
            if step <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
                break;
            }
        }
        let mut y = Mat::<c64>::zeros(n, 1);
        for (a, &i) in cluster.iter().enumerate() {
            y[(i, 0)] = local_vec[(a, 0)];
        }
        for (a, &i) in rest.iter().enumerate() {
            y[(i, 0)] = tail[(a, 0)];
        }
        let c = &self.vectors * &y;
        let residual = second_order_residuals(self.gram, &[z], &c)?[0];
        Ok(RefinedPoint {
            z,
            residual,
            iterations,
            vector: c,
        })
    }

    /// Replaces the near-real points of `second` by refined conjugate pairs.
    ///
    /// The pencil is positive semidefinite on the real axis, so every root
    /// there is at least double and rounding may split it along the axis
    /// into two real values, each off by `√ε`. Such a split and a computed
    /// conjugate pair both refine to one upper root, so each refined root
    /// absorbs the remaining points that lie about as close to it as its
    /// start did. A group of `2m` points is re-emitted as `m` copies of the
    /// root and its conjugate; odd groups are left untouched.
    pub fn polish(&self, second: &SecondOrderResult) -> Result<SecondOrderResult> {
        let n = self.gram.dim();
        let real = is_real(&self.gram.g0)
            && is_real(&self.gram.g1)
            && self.gram.g2.as_ref().is_some_and(is_real);
        let near = |z: c64| z.im.abs() <= NEAR_REAL * z.norm().max(1.0);
        let mut pending: Vec<usize> = (0..second.points.len())
            .filter(|&i| near(second.points[i]))
            .collect();
        let mut keep: Vec<usize> = (0..second.points.len())
            .filter(|&i| !near(second.points[i]))
            .collect();
        let mut groups: Vec<(RefinedPoint, Vec<usize>)> = Vec::new();
        while let Some(&first) = pending.first() {
            let z = second.points[first];
            let r = self.refine(c64::new(z.re, z.im.abs()))?;
            let scale = r.z.norm().max(1.0);
            let off = |p: c64| (p - r.z).norm().min((p - r.z.conj()).norm());
            let reach = if off(z) <= NEAR_REAL * scale {
                (2.0 * off(z)).max(1e-9 * scale)
            } else {
                1e-9 * scale
            };
            let (members, rest): (Vec<usize>, Vec<usize>) = pending
                .iter()
                .partition(|&&i| i == first || off(second.points[i]) <= reach);
            pending = rest;
            groups.push((r, members));
        }
        let original = |i: usize| -> (c64, f64, Mat<c64>) {
            let v = match &second.eigenvectors {
                Some(v) => Mat::from_fn(n, 1, |r, _| v[(r, i)]),
                None => Mat::zeros(n, 1),
            };
            (second.points[i], second.residuals[i], v)
        };
        let mut out: Vec<(c64, f64, Mat<c64>)> = Vec::new();
        for (upper, members) in groups {
            if members.len() % 2 == 1 {
                keep.extend(members);
                continue;
            }
            let lower = if real {
                let v = Mat::from_fn(n, 1, |r, _| upper.vector[(r, 0)].conj());
                (upper.z.conj(), upper.residual, v)
            } else {
                let l = self.refine(upper.z.conj())?;
                (l.z, l.residual, l.vector)
            };
            for _ in 0..members.len() / 2 {
                out.push((upper.z, upper.residual, upper.vector.clone()));
                out.push(lower.clone());
            }
        }
        out.extend(keep.into_iter().map(original));
        out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Ok(SecondOrderResult {
            points: out.iter().map(|p| p.0).collect(),
            residuals: out.iter().map(|p| p.1).collect(),
            eigenvectors: second
                .eigenvectors
                .as_ref()
                .map(|_| Mat::from_fn(n, out.len(), |r, j| out[j].2[(r, 0)])),
        })
    }
}

/// Results that carry eigenvectors and can recompute their residuals.
pub trait Residuals {
    fn recompute_residuals(&self, gram: &GramTriple) -> Result<Vec<f64>>;
}

impl Residuals for FirstOrderResult {
    fn recompute_residuals(&self, gram: &GramTriple) -> Result<Vec<f64>> {
        let vecs = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::pre("eigenvectors were not retained"))?;
        Ok(first_order_residuals(gram, &self.eigenvalues, vecs))
    }
}

impl Residuals for SecondOrderResult {
    fn recompute_residuals(&self, gram: &GramTriple) -> Result<Vec<f64>> {
        let vecs = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::pre("eigenvectors were not retained"))?;
        second_order_residuals(gram, &self.points, vecs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub tolerance: f64,
    pub max_residual: f64,
    pub offending: Vec<usize>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Recomputes every residual from the stored eigenvectors and lists the
/// indices above `tolerance`.
pub fn validate_residuals<R: Residuals>(
    gram: &GramTriple,
    result: &R,
    tolerance: f64,
) -> Result<ResidualReport> {
    let res = result.recompute_residuals(gram)?;
    let offending = res
        .iter()
        .enumerate()
        .filter(|(_, &r)| !(r <= tolerance))
        .map(|(i, _)| i)
        .collect();
    Ok(ResidualReport {
        tolerance,
        max_residual: res.iter().copied().fold(0.0, f64::max),
        offending,
    })
}
