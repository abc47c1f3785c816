//! Periodic finite elements on uniform meshes of `[-π, π]` and the Gram data
//! of the Stokes-type system `H` built from them.
//!
//! Element `e` spans `[x_e, x_{e+1}]`; the last element wraps onto node 0.
//! Every global matrix is real symmetric and ordered (all u-DOFs, then all
//! v-DOFs).

use std::f64::consts::PI;

use faer::{c64, Mat};
use qd::Quad;
use serde::{Deserialize, Serialize};

use crate::eig::{solve_second_order, QuadratureFactor, SecondOrderRefiner, SecondOrderResult};
use crate::error::{Error, Result};
use crate::fourier::GramTriple;
use crate::quad::GaussRule;

/// Exact for the degree ≤ 6 products that appear below.
pub const DEFAULT_GAUSS_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicMesh {
    n_nodes: usize,
    h: f64,
}

impl PeriodicMesh {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::pre("a periodic mesh needs at least 2 nodes"));
        }
        Ok(Self {
            n_nodes,
            h: 2.0 * PI / n_nodes as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    pub fn node(&self, i: usize) -> f64 {
        -PI + self.h * i as f64
    }

    /// Element containing `x` (taken modulo 2π) and the local coordinate.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x + PI).rem_euclid(2.0 * PI) / self.h;
        let e = (s.floor() as usize).min(self.n_nodes - 1);
        (e, s - e as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Continuous piecewise polynomials of degree `p ∈ {1, 2, 3}`.
    Lagrange(u8),
    /// C¹ piecewise cubics; DOFs are `(value, h·slope)` per node.
    Hermite3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FemSpace {
    pub mesh: PeriodicMesh,
    pub family: Family,
}

/// Monomial coefficients `c0 + c1 t + c2 t² + c3 t³` on the reference element.
type LocalPoly = [f64; 4];

fn poly_mul_linear(p: &LocalPoly, a: f64, b: f64) -> LocalPoly {
    // p(t)·(a t + b)
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] += b * p[i];
        if i + 1 < 4 {
            out[i + 1] += a * p[i];
        }
    }
    out
}

fn poly_deriv_eval(p: &LocalPoly, d: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (d..4).rev() {
        let fall: f64 = (0..d).map(|j| (i - j) as f64).product();
        acc = acc * t + p[i] * fall;
    }
    acc
}

fn lagrange_polys(p: usize) -> Vec<LocalPoly> {
    let nodes: Vec<f64> = (0..=p).map(|j| j as f64 / p as f64).collect();
    (0..=p)
        .map(|j| {
            let mut poly = [1.0, 0.0, 0.0, 0.0];
            for (m, &tm) in nodes.iter().enumerate() {
                if m != j {
                    let s = 1.0 / (nodes[j] - tm);
                    poly = poly_mul_linear(&poly, s, -tm * s);
                }
            }
            poly
        })
        .collect()
}

fn hermite_polys() -> Vec<LocalPoly> {
    vec![
        [1.0, 0.0, -3.0, 2.0],
        [0.0, 1.0, -2.0, 1.0],
        [0.0, 0.0, 3.0, -2.0],
        [0.0, 0.0, -1.0, 1.0],
    ]
}

impl FemSpace {
    pub fn new(mesh: PeriodicMesh, family: Family) -> Result<Self> {
        if let Family::Lagrange(p) = family {
            if !(1..=3).contains(&p) {
                return Err(Error::Unsupported(format!("Lagrange order {p}; 1..=3 supported")));
            }
        }
        Ok(Self { mesh, family })
    }

    pub fn lagrange(n_nodes: usize, p: u8) -> Result<Self> {
        Self::new(PeriodicMesh::new(n_nodes)?, Family::Lagrange(p))
    }

    pub fn hermite(n_nodes: usize) -> Result<Self> {
        Self::new(PeriodicMesh::new(n_nodes)?, Family::Hermite3)
    }

    pub fn dof_count(&self) -> usize {
        match self.family {
            Family::Lagrange(p) => self.mesh.n_nodes * p as usize,
            Family::Hermite3 => 2 * self.mesh.n_nodes,
        }
    }

    /// Highest derivative available elementwise.
    pub fn max_derivative(&self) -> usize {
        match self.family {
            Family::Lagrange(1) => 1,
            _ => 2,
        }
    }

    /// Whether the functions are C¹, i.e. second derivatives are square
    /// integrable globally and not just elementwise.
    pub fn is_c1(&self) -> bool {
        self.family == Family::Hermite3
    }

    fn local_polys(&self) -> Vec<LocalPoly> {
        match self.family {
            Family::Lagrange(p) => lagrange_polys(p as usize),
            Family::Hermite3 => hermite_polys(),
        }
    }

    fn local_dofs(&self, e: usize) -> Vec<usize> {
        let n = self.mesh.n_nodes;
        let next = (e + 1) % n;
        match self.family {
            Family::Lagrange(p) => {
                let p = p as usize;
                (0..p).map(|j| e * p + j).chain([next * p]).collect()
            }
            Family::Hermite3 => vec![2 * e, 2 * e + 1, 2 * next, 2 * next + 1],
        }
    }

    /// `d`-th derivative of global basis function `dof` at `x`. On element
    /// boundaries the element to the right is used.
    pub fn basis_derivative(&self, dof: usize, d: usize, x: f64) -> Result<f64> {
        if d > self.max_derivative() {
            return Err(Error::Unsupported(format!(
                "derivative {d} of {:?}",
                self.family
            )));
        }
        let (e, t) = self.mesh.locate(x);
        let polys = self.local_polys();
        let scale = self.mesh.h.powi(-(d as i32));
        Ok(self
            .local_dofs(e)
            .iter()
            .zip(&polys)
            .filter(|(&g, _)| g == dof)
            .map(|(_, p)| poly_deriv_eval(p, d, t) * scale)
            .sum())
    }
}

/// `G[m, k] = ∫ D^{d_test} ψ_m · D^{d_trial} φ_k` over `[-π, π]`, with rows
/// indexed by `test` and columns by `trial`.
pub fn gram_block(
    test: &FemSpace,
    d_test: usize,
    trial: &FemSpace,
    d_trial: usize,
    gauss_points: usize,
) -> Result<Mat<f64>> {
    if test.mesh != trial.mesh {
        return Err(Error::pre("spaces must share a mesh"));
    }
    for (s, d) in [(test, d_test), (trial, d_trial)] {
        if d > s.max_derivative() {
            return Err(Error::Unsupported(format!(
                "derivative {d} of {:?}",
                s.family
            )));
        }
    }
    let h = test.mesh.h;
    let rule = GaussRule::new(gauss_points);
    let (pt, pk) = (test.local_polys(), trial.local_polys());
    let (st, sk) = (h.powi(-(d_test as i32)), h.powi(-(d_trial as i32)));

    // Uniform mesh: one local matrix, scattered N times.
    let mut local = vec![vec![0.0; pk.len()]; pt.len()];
    for (t, w) in rule.on(0.0, 1.0) {
        for (a, qa) in pt.iter().enumerate() {
            let va = poly_deriv_eval(qa, d_test, t) * st;
            for (b, qb) in pk.iter().enumerate() {
                local[a][b] += w * h * va * poly_deriv_eval(qb, d_trial, t) * sk;
            }
        }
    }
    let mut g = Mat::<f64>::zeros(test.dof_count(), trial.dof_count());
    for e in 0..test.mesh.n_nodes {
        let (rows, cols) = (test.local_dofs(e), trial.local_dofs(e));
        for (a, &r) in rows.iter().enumerate() {
            for (b, &c) in cols.iter().enumerate() {
                g[(r, c)] += local[a][b];
            }
        }
    }
    Ok(g)
}

/// Component blocks of the `H` forms. Rows of the mixed blocks are u-DOFs.
#[derive(Debug, Clone)]
pub struct ElementBlocks {
    pub mass_u: Mat<f64>,
    pub mass_v: Mat<f64>,
    /// `(ψ_k′, ψ_m′)`.
    pub stiff_u: Option<Mat<f64>>,
    /// `C[m, j] = (φ_j, ψ_m′)`.
    pub mixed: Option<Mat<f64>>,
    /// `(ψ_k″, ψ_m″)`.
    pub bending_u: Option<Mat<f64>>,
    /// `(φ_j′, ψ_m″)`.
    pub mixed2: Option<Mat<f64>>,
    /// `(φ_k′, φ_m′)`.
    pub stiff_v: Option<Mat<f64>>,
}

pub fn assemble_element_blocks(
    space_u: &FemSpace,
    space_v: &FemSpace,
    order: u8,
) -> Result<ElementBlocks> {
    assemble_element_blocks_with(space_u, space_v, order, DEFAULT_GAUSS_POINTS)
}

pub fn assemble_element_blocks_with(
    space_u: &FemSpace,
    space_v: &FemSpace,
    order: u8,
    gauss_points: usize,
) -> Result<ElementBlocks> {
    if order > 2 {
        return Err(Error::pre(format!("block order {order} > 2")));
    }
    if order == 2 && !space_u.is_c1() {
        return Err(Error::Unsupported(format!(
            "second-order blocks need C¹ u-elements, got {:?}",
            space_u.family
        )));
    }
    let g = |a: &FemSpace, da, b: &FemSpace, db| gram_block(a, da, b, db, gauss_points);
    let (u, v) = (space_u, space_v);
    let mut blocks = ElementBlocks {
        mass_u: g(u, 0, u, 0)?,
        mass_v: g(v, 0, v, 0)?,
        stiff_u: None,
        mixed: None,
        bending_u: None,
        mixed2: None,
        stiff_v: None,
    };
    if order >= 1 {
        blocks.stiff_u = Some(g(u, 1, u, 1)?);
        blocks.mixed = Some(g(u, 1, v, 0)?);
    }
    if order >= 2 {
        blocks.bending_u = Some(g(u, 2, u, 2)?);
        blocks.mixed2 = Some(g(u, 2, v, 1)?);
        blocks.stiff_v = Some(g(v, 1, v, 1)?);
    }
    Ok(blocks)
}

/// Gram data over the product space `space_u × space_v`.
#[derive(Debug, Clone)]
pub struct BlockGramTriple {
    pub gram: GramTriple,
    pub u_dofs: usize,
    pub v_dofs: usize,
}

fn block_matrix(uu: &Mat<f64>, uv: &Mat<f64>, vv: &Mat<f64>) -> Mat<c64> {
    let (nu, nv) = (uu.nrows(), vv.nrows());
    Mat::from_fn(nu + nv, nu + nv, |i, j| {
        let x = match (i < nu, j < nu) {
            (true, true) => uu[(i, j)],
            (true, false) => uv[(i, j - nu)],
            (false, true) => uv[(j, i - nu)],
            (false, false) => vv[(i - nu, j - nu)],
        };
        c64::new(x, 0.0)
    })
}

fn first_order_parts(blocks: &ElementBlocks) -> (Mat<c64>, Mat<c64>) {
    let zero = Mat::<f64>::zeros(blocks.mass_u.nrows(), blocks.mass_v.nrows());
    let g0 = block_matrix(&blocks.mass_u, &zero, &blocks.mass_v);
    let two_mv = Mat::from_fn(blocks.mass_v.nrows(), blocks.mass_v.ncols(), |i, j| {
        2.0 * blocks.mass_v[(i, j)]
    });
    let g1 = block_matrix(
        blocks.stiff_u.as_ref().unwrap(),
        blocks.mixed.as_ref().unwrap(),
        &two_mv,
    );
    (g0, g1)
}

/// `g0 = diag(M_u, M_v)`, `g1 = [[K_u, C], [Cᵀ, 2M_v]]` from the form
/// `(u′, ũ′) + (v, ũ′) + (u′, ṽ) + 2(v, ṽ)`.
pub fn assemble_h_first_order(space_u: &FemSpace, space_v: &FemSpace) -> Result<BlockGramTriple> {
    let blocks = assemble_element_blocks(space_u, space_v, 1)?;
    let (g0, g1) = first_order_parts(&blocks);
    Ok(BlockGramTriple {
        gram: GramTriple { g0, g1, g2: None },
        u_dofs: space_u.dof_count(),
        v_dofs: space_v.dof_count(),
    })
}

/// Adds `g2 = (Hw_k, Hw_m)` with `Hw = (−u″ − v′, u′ + 2v)`.
pub fn assemble_h_second_order(space_u: &FemSpace, space_v: &FemSpace) -> Result<BlockGramTriple> {
    assemble_h_second_order_with(space_u, space_v, DEFAULT_GAUSS_POINTS)
}

pub fn assemble_h_second_order_with(
    space_u: &FemSpace,
    space_v: &FemSpace,
    gauss_points: usize,
) -> Result<BlockGramTriple> {
    let b = assemble_element_blocks_with(space_u, space_v, 2, gauss_points)?;
    let (g0, g1) = first_order_parts(&b);
    let (bend, k_u, c, c2, k_v) = (
        b.bending_u.as_ref().unwrap(),
        b.stiff_u.as_ref().unwrap(),
        b.mixed.as_ref().unwrap(),
        b.mixed2.as_ref().unwrap(),
        b.stiff_v.as_ref().unwrap(),
    );
    let uu = bend + k_u;
    let uv = c2 + Mat::from_fn(c.nrows(), c.ncols(), |i, j| 2.0 * c[(i, j)]);
    let vv = Mat::from_fn(k_v.nrows(), k_v.ncols(), |i, j| {
        k_v[(i, j)] + 4.0 * b.mass_v[(i, j)]
    });
    let g2 = block_matrix(&uu, &uv, &vv);
    Ok(BlockGramTriple {
        gram: GramTriple {
            g0,
            g1,
            g2: Some(g2),
        },
        u_dofs: space_u.dof_count(),
        v_dofs: space_v.dof_count(),
    })
}

/// Assembles and solves the second-order problem on `space_u × space_v`,
/// with near-real points refined to full accuracy.
pub fn solve_h_second_order(
    space_u: &FemSpace,
    space_v: &FemSpace,
) -> Result<(BlockGramTriple, SecondOrderResult)> {
    let g = assemble_h_second_order(space_u, space_v)?;
    let raw = solve_second_order(&g.gram)?;
    let polished = SecondOrderRefiner::new(&g.gram, &h_quadrature_factor(space_u, space_v)?)?
        .polish(&raw)?;
    Ok((g, polished))
}

/// Basis values and `H`-images at weighted quadrature points, so that
/// `g0 = VᵀV`, `g1 = VᵀW` and `g2 = WᵀW`. Rows run over elements, Gauss
/// points, then components `(u, v)`.
pub fn h_quadrature_factor(space_u: &FemSpace, space_v: &FemSpace) -> Result<QuadratureFactor> {
    if space_u.mesh != space_v.mesh {
        return Err(Error::pre("spaces must share a mesh"));
    }
    if !space_u.is_c1() {
        return Err(Error::Unsupported(format!(
            "the H-image of {:?} u-elements is not square integrable",
            space_u.family
        )));
    }
    let mesh = space_u.mesh;
    let h = mesh.h;
    let rule = GaussRule::new(DEFAULT_GAUSS_POINTS);
    let (pu, pv) = (space_u.local_polys(), space_v.local_polys());
    let nu = space_u.dof_count();
    let n = nu + space_v.dof_count();
    let rows = 2 * DEFAULT_GAUSS_POINTS * mesh.n_nodes;
    let mut values = Mat::<f64>::zeros(rows, n);
    let mut images = Mat::<f64>::zeros(rows, n);
    for e in 0..mesh.n_nodes {
        let (du, dv) = (space_u.local_dofs(e), space_v.local_dofs(e));
        for (q, (t, w)) in rule.on(0.0, 1.0).enumerate() {
            let sw = (w * h).sqrt();
            let (ru, rv) = (2 * (e * DEFAULT_GAUSS_POINTS + q), 2 * (e * DEFAULT_GAUSS_POINTS + q) + 1);
            for (p, &g) in pu.iter().zip(&du) {
                values[(ru, g)] += sw * poly_deriv_eval(p, 0, t);
                images[(ru, g)] -= sw * poly_deriv_eval(p, 2, t) / (h * h);
                images[(rv, g)] += sw * poly_deriv_eval(p, 1, t) / h;
            }
            for (p, &g) in pv.iter().zip(&dv) {
                values[(rv, nu + g)] += sw * poly_deriv_eval(p, 0, t);
                images[(ru, nu + g)] -= sw * poly_deriv_eval(p, 1, t) / h;
                images[(rv, nu + g)] += sw * 2.0 * poly_deriv_eval(p, 0, t);
            }
        }
    }
    Ok(QuadratureFactor { values, images })
}

type QuadPoly = [Quad; 4];

fn local_polys_quad(family: Family) -> Vec<QuadPoly> {
    let q = Quad::from_f64;
    match family {
        Family::Hermite3 => hermite_polys()
            .iter()
            .map(|p| p.map(q))
            .collect(),
        Family::Lagrange(p) => {
            let p = p as usize;
            let nodes: Vec<Quad> = (0..=p).map(|j| q(j as f64) / q(p as f64)).collect();
            (0..=p)
                .map(|j| {
                    let mut poly = [q(1.0), q(0.0), q(0.0), q(0.0)];
                    for (m, &tm) in nodes.iter().enumerate() {
                        if m != j {
                            let s = q(1.0) / (nodes[j] - tm);
                            let mut out = [q(0.0); 4];
                            for i in 0..4 {
                                out[i] += -tm * s * poly[i];
                                if i + 1 < 4 {
                                    out[i + 1] += s * poly[i];
                                }
                            }
                            poly = out;
                        }
                    }
                    poly
                })
                .collect()
        }
    }
}

/// `∫₀¹ D^a p · D^b q dt`, exact for the cubic monomial basis.
fn reference_integral(p: &QuadPoly, a: usize, r: &QuadPoly, b: usize) -> Quad {
    let fall = |i: usize, d: usize| -> f64 { (0..d).map(|j| (i - j) as f64).product() };
    let mut acc = Quad::ZERO;
    for i in a..4 {
        for j in b..4 {
            let c = fall(i, a) * fall(j, b) / ((i - a + j - b + 1) as f64);
            acc += p[i] * r[j] * Quad::from_f64(c);
        }
    }
    acc
}

/// Local block `[∫ D^a ψ_m · D^b φ_k dx]` in double-double.
fn local_block_quad(test: &FemSpace, a: usize, trial: &FemSpace, b: usize) -> Vec<Vec<Quad>> {
    let h = Quad::PI * Quad::from_f64(2.0) / Quad::from_f64(test.mesh.n_nodes as f64);
    let mut scale = h;
    for _ in 0..a + b {
        scale /= h;
    }
    let (pt, pk) = (local_polys_quad(test.family), local_polys_quad(trial.family));
    pt.iter()
        .map(|p| pk.iter().map(|r| reference_integral(p, a, r, b) * scale).collect())
        .collect()
}

fn local_form(block: &[Vec<Quad>], rows: &[Quad], cols: &[Quad]) -> Quad {
    let mut acc = Quad::ZERO;
    for (m, row) in block.iter().enumerate() {
        for (k, &g) in row.iter().enumerate() {
            acc += rows[m] * g * cols[k];
        }
    }
    acc
}

/// Rayleigh quotient `(Q_H c, c) / (c, c)` of a real coefficient vector,
/// accumulated in double-double from exact element integrals.
///
/// The Galerkin eigenvalue is stationary in the eigenvector, so evaluating
/// this at a computed eigenvector recovers the eigenvalue far below the
/// rounding floor of the dense solver.
pub fn h_rayleigh_quotient(space_u: &FemSpace, space_v: &FemSpace, c: &[f64]) -> Result<f64> {
    let nu = space_u.dof_count();
    if c.len() != nu + space_v.dof_count() {
        return Err(Error::pre("coefficient vector does not match the spaces"));
    }
    let (u, v) = (space_u, space_v);
    let (mu, mv) = (local_block_quad(u, 0, u, 0), local_block_quad(v, 0, v, 0));
    let ku = local_block_quad(u, 1, u, 1);
    let cm = local_block_quad(u, 1, v, 0);
    let two = Quad::from_f64(2.0);
    let (mut num, mut den) = (Quad::ZERO, Quad::ZERO);
    for e in 0..u.mesh.n_nodes {
        let cu: Vec<Quad> = u.local_dofs(e).iter().map(|&g| Quad::from_f64(c[g])).collect();
        let cv: Vec<Quad> = v
            .local_dofs(e)
            .iter()
            .map(|&g| Quad::from_f64(c[nu + g]))
            .collect();
        num += local_form(&ku, &cu, &cu)
            + two * local_form(&cm, &cu, &cv)
            + two * local_form(&mv, &cv, &cv);
        den += local_form(&mu, &cu, &cu) + local_form(&mv, &cv, &cv);
    }
    Ok((num / den).0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchurComparison {
    /// `(λ, ‖R₃(λ) − R₅(λ)‖)` per grid point.
    pub differences: Vec<(f64, f64)>,
    /// `‖C M_v⁻¹ Cᵀ − K_u‖`, the λ-independent part of the difference.
    pub gap_norm: f64,
    /// Whether the v-space contains the derivatives of the u-space.
    pub contains_derivatives: bool,
}

/// Eliminating `v` from the discrete system gives a reduced problem whose
/// `1/(λ − 2)` term uses either the projected derivative Gram
/// `(P ψ_m′, P ψ_k′) = C M_v⁻¹ Cᵀ` or the plain one `(ψ_m′, ψ_k′) = K_u`.
/// They coincide exactly when every `ψ′` lies in the v-space.
pub fn schur_reduction_compare(
    space_u: &FemSpace,
    space_v: &FemSpace,
    lambda_grid: &[f64],
) -> Result<SchurComparison> {
    if let Some(l) = lambda_grid.iter().find(|&&l| l == 2.0) {
        return Err(Error::pre(format!("λ = {l} makes the reduction singular")));
    }
    let b = assemble_element_blocks(space_u, space_v, 1)?;
    let (k_u, c) = (b.stiff_u.unwrap(), b.mixed.unwrap());
    let llt = b
        .mass_v
        .llt(faer::Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let mv_inv_ct = faer::linalg::solvers::Solve::solve(&llt, c.transpose());
    let projected = &c * &mv_inv_ct;
    let gap_norm = (&projected - &k_u).norm_l2();
    let contains_derivatives = gap_norm <= 1e-12 * k_u.norm_l2().max(1.0);
    Ok(SchurComparison {
        differences: lambda_grid
            .iter()
            .map(|&l| (l, gap_norm / (l - 2.0).abs()))
            .collect(),
        gap_norm,
        contains_derivatives,
    })
}
