//! A posteriori checks on computed spectra and constructive pollution demos.

use std::collections::BTreeMap;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::eig::{
    solve_first_order, solve_second_order, FirstOrderResult, SecondOrderRefiner, SecondOrderResult,
};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_h_first_order, assemble_h_second_order, h_quadrature_factor, h_rayleigh_quotient,
    FemSpace,
};
use crate::fourier::{assemble_a, FourierWindow, GramTriple};
use crate::models::{
    stokes_eigenvalue, Branch, DiscreteEigenvalue, ExactSpectrum, JumpPoint, OperatorModel,
    PiecewiseTrig,
};
use crate::quad::GaussRule;

/// Default classification thresholds.
pub const DEFAULT_DELTA: f64 = 0.06;
/// Relative slack for enclosure and disk checks: `1e-6·max(1, |z|)`.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// `[Re z − |Im z|, Re z + |Im z|]`, which always meets the spectrum.
pub fn enclosure(z: c64) -> Interval {
    Interval {
        lo: z.re - z.im.abs(),
        hi: z.re + z.im.abs(),
    }
}

fn slack(z: c64) -> f64 {
    BOUNDARY_TOL * z.norm().max(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointViolation {
    pub index: usize,
    pub z: c64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub checked: usize,
    pub violations: Vec<PointViolation>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every residual-passing point's widened enclosure must meet `truth`.
pub fn verify_enclosures(
    second: &SecondOrderResult,
    truth: &ExactSpectrum,
    residual_tol: f64,
) -> CheckReport {
    let mut report = CheckReport {
        checked: 0,
        violations: Vec::new(),
    };
    for (index, z) in second.passing(residual_tol) {
        report.checked += 1;
        let iv = enclosure(z);
        let s = slack(z);
        if !truth.intersects(iv.lo - s, iv.hi + s) {
            report.violations.push(PointViolation { index, z });
        }
    }
    report
}

/// Spectrum of `H` with enough eigenvalues listed to decide intersection for
/// every enclosure of `points`: the plus series must pass the largest upper
/// end and the minus series must crowd close enough to its limit 1.
pub fn stokes_truth_for(points: &[c64]) -> ExactSpectrum {
    const K_CAP: u64 = 5000;
    let mut k_max = 4u64;
    for &z in points {
        let iv = enclosure(z);
        if iv.hi.is_finite() && iv.hi > 0.0 {
            k_max = k_max.max(iv.hi.sqrt().ceil() as u64 + 2);
        }
        if iv.hi < 1.0 && iv.hi > 0.0 {
            let need = (1.0 / (1.0 - iv.hi)).sqrt().ceil();
            k_max = k_max.max((need as u64).saturating_add(2));
        }
    }
    OperatorModel::Stokes.exact_spectrum(k_max.min(K_CAP))
}

/// No residual-passing point may lie strictly inside the open disk with
/// diameter `(a, b)`; `(a, b)` must be free of spectrum.
pub fn disk_exclusion(second: &SecondOrderResult, a: f64, b: f64, residual_tol: f64) -> CheckReport {
    let centre = c64::new(0.5 * (a + b), 0.0);
    let radius = 0.5 * (b - a);
    let mut report = CheckReport {
        checked: 0,
        violations: Vec::new(),
    };
    for (index, z) in second.passing(residual_tol) {
        report.checked += 1;
        if (z - centre).norm() < radius - slack(z) {
            report.violations.push(PointViolation { index, z });
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Confirmed,
    /// Not confirmed by a nearby second-order point. This does not prove the
    /// value spurious; it only means the value needs further attention.
    Suspect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationEntry {
    pub lambda: f64,
    pub label: Label,
    /// The best witness: minimises `max(|Re z − λ|/δ_re, |Im z|/δ_im)`.
    pub nearest_z: Option<c64>,
    pub dist_re: f64,
    pub dist_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub entries: Vec<ClassificationEntry>,
    pub delta_re: f64,
    pub delta_im: f64,
}

impl ClassificationReport {
    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &ClassificationEntry> + '_ {
        self.entries.iter().filter(move |e| e.label == label)
    }
}

/// A first-order value `λ` is confirmed when some residual-passing point `z`
/// has `|Re z − λ| ≤ δ_re` and `|Im z| ≤ δ_im`.
///
/// With `essential` given, a point whose enclosure meets the essential
/// spectrum is not accepted as a witness for a value outside it: such points
/// are produced by the essential spectrum itself (they crowd its edges) and
/// say nothing about eigenvalues in a gap.
pub fn classify(
    first: &FirstOrderResult,
    second: &SecondOrderResult,
    delta_re: f64,
    delta_im: f64,
    residual_tol: f64,
    essential: Option<&ExactSpectrum>,
) -> ClassificationReport {
    let passing: Vec<(c64, bool)> = second
        .passing(residual_tol)
        .map(|(_, z)| {
            let iv = enclosure(z);
            let s = slack(z);
            let explained = essential.is_some_and(|e| e.intersects(iv.lo - s, iv.hi + s));
            (z, explained)
        })
        .collect();
    let entries = first
        .eigenvalues
        .iter()
        .map(|&lambda| {
            let s = slack(c64::new(lambda, 0.0));
            let in_essential = essential.is_some_and(|e| e.intersects(lambda - s, lambda + s));
            let best = passing
                .iter()
                .filter(|(_, explained)| in_essential || !explained)
                .map(|&(z, _)| {
                    let (dr, di) = ((z.re - lambda).abs(), z.im.abs());
                    (f64::max(dr / delta_re, di / delta_im), z, dr, di)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((score, z, dr, di)) => ClassificationEntry {
                    lambda,
                    label: if score <= 1.0 {
                        Label::Confirmed
                    } else {
                        Label::Suspect
                    },
                    nearest_z: Some(z),
                    dist_re: dr,
                    dist_im: di,
                },
                None => ClassificationEntry {
                    lambda,
                    label: Label::Suspect,
                    nearest_z: None,
                    dist_re: f64::INFINITY,
                    dist_im: f64::INFINITY,
                },
            }
        })
        .collect();
    ClassificationReport {
        entries,
        delta_re,
        delta_im,
    }
}

/// Normalised indicator of a union of grid cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorSet {
    /// Disjoint `[left, right)` intervals.
    pub intervals: Vec<(f64, f64)>,
    /// `(A v, v)` for the normalised indicator.
    pub mean_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollutionVector {
    pub minus: IndicatorSet,
    pub plus: IndicatorSet,
    pub weight_minus: f64,
    pub weight_plus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollutionConstruction {
    pub lambda_target: f64,
    pub basis: Vec<PollutionVector>,
    /// `μ⁻`, `μ⁺` of the first basis vector.
    pub mu_minus: f64,
    pub mu_plus: f64,
    /// Galerkin eigenvalue nearest to the target.
    pub computed_eigenvalue: f64,
    /// `‖P A u − λ u‖` for the normalised Galerkin eigenvector.
    pub verification_residual: f64,
}

const POLLUTION_CELLS: usize = 10_000;
const POLLUTION_MARGIN: f64 = 0.05;

struct Cell {
    left: f64,
    right: f64,
    integral: f64,
    lo: f64,
    hi: f64,
}

fn cells(profile: &PiecewiseTrig) -> Vec<Cell> {
    let rule = GaussRule::new(4);
    let width = 2.0 * std::f64::consts::PI / POLLUTION_CELLS as f64;
    let mut out = Vec::new();
    for seg in profile.segments() {
        let n = (((seg.right - seg.left) / width).ceil() as usize).max(1);
        let w = (seg.right - seg.left) / n as f64;
        for i in 0..n {
            let (l, r) = (seg.left + w * i as f64, seg.left + w * (i + 1) as f64);
            let mut integral = 0.0;
            let (mut lo, mut hi) = (seg.eval(l).min(seg.eval(r)), seg.eval(l).max(seg.eval(r)));
            for (x, wt) in rule.on(l, r) {
                let v = seg.eval(x);
                integral += wt * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            out.push(Cell {
                left: l,
                right: r,
                integral,
                lo,
                hi,
            });
        }
    }
    out
}

fn indicator(cells: &[&Cell]) -> IndicatorSet {
    let measure: f64 = cells.iter().map(|c| c.right - c.left).sum();
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        match intervals.last_mut() {
            Some(last) if (last.1 - c.left).abs() < 1e-12 => last.1 = c.right,
            _ => intervals.push((c.left, c.right)),
        }
    }
    IndicatorSet {
        intervals,
        mean_value: cells.iter().map(|c| c.integral).sum::<f64>() / measure,
    }
}

/// Builds a `k`-dimensional subspace whose compression of the
/// multiplication operator has `λ` as an eigenvalue of multiplicity `k`.
///
/// Cells where `a ≤ λ − 0.05` and where `a ≥ λ + 0.05` are split into `k`
/// contiguous groups each. Group `j` yields normalised indicators `v⁻_j`,
/// `v⁺_j` and
/// `u_j = √((μ⁺ − λ)/(μ⁺ − μ⁻)) v⁻_j + √((λ − μ⁻)/(μ⁺ − μ⁻)) v⁺_j`, so that
/// `((A − λ) u_j, u_j) = 0`. Disjoint supports make the `u_j` orthonormal and
/// the compression diagonal.
pub fn construct_pollution_subspace(
    model: &OperatorModel,
    lambda: f64,
    k: usize,
) -> Result<PollutionConstruction> {
    let profile = match model {
        OperatorModel::Multiplication { profile, .. } => profile,
        _ => {
            return Err(Error::UnsupportedModel {
                model: "only multiplication operators",
            })
        }
    };
    if k == 0 {
        return Err(Error::pre("k must be positive"));
    }
    let spectrum = model.exact_spectrum(0);
    let gap_lo = spectrum
        .bands
        .iter()
        .map(|b| b.hi)
        .filter(|&h| h < lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap_hi = spectrum
        .bands
        .iter()
        .map(|b| b.lo)
        .filter(|&l| l > lambda)
        .fold(f64::INFINITY, f64::min);
    if !(gap_lo.is_finite() && gap_hi.is_finite()) || spectrum.intersects(lambda, lambda) {
        return Err(Error::pre(format!(
            "λ = {lambda} is not inside a gap of the essential spectrum"
        )));
    }

    let all = cells(profile);
    let minus: Vec<&Cell> = all.iter().filter(|c| c.hi <= lambda - POLLUTION_MARGIN).collect();
    let plus: Vec<&Cell> = all.iter().filter(|c| c.lo >= lambda + POLLUTION_MARGIN).collect();
    if minus.len() < k || plus.len() < k {
        return Err(Error::pre(format!(
            "not enough admissible cells for k = {k} at λ = {lambda}"
        )));
    }
    let chunk = |set: &[&Cell], j: usize| -> IndicatorSet {
        let (a, b) = (set.len() * j / k, set.len() * (j + 1) / k);
        indicator(&set[a..b])
    };

    let mut basis = Vec::with_capacity(k);
    for j in 0..k {
        let (vm, vp) = (chunk(&minus, j), chunk(&plus, j));
        let (mm, mp) = (vm.mean_value, vp.mean_value);
        basis.push(PollutionVector {
            weight_minus: ((mp - lambda) / (mp - mm)).sqrt(),
            weight_plus: ((lambda - mm) / (mp - mm)).sqrt(),
            minus: vm,
            plus: vp,
        });
    }

    // (A u_i, u_j) and (u_i, u_j): supports are disjoint across i ≠ j.
    let d1: Vec<f64> = basis
        .iter()
        .map(|u| {
            u.weight_minus.powi(2) * u.minus.mean_value + u.weight_plus.powi(2) * u.plus.mean_value
        })
        .collect();
    let d0: Vec<f64> = basis
        .iter()
        .map(|u| u.weight_minus.powi(2) + u.weight_plus.powi(2))
        .collect();
    let gram = GramTriple {
        g0: Mat::from_fn(k, k, |i, j| c64::new(if i == j { d0[i] } else { 0.0 }, 0.0)),
        g1: Mat::from_fn(k, k, |i, j| c64::new(if i == j { d1[i] } else { 0.0 }, 0.0)),
        g2: None,
    };
    let first = solve_first_order(&gram)?;
    let (idx, &computed) = first
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
        .unwrap();
    let vecs = first.eigenvectors.as_ref().unwrap();
    let c = vecs.col(idx);
    let norm = c
        .iter()
        .zip(&d0)
        .map(|(x, w)| x.norm_sqr() * w)
        .sum::<f64>()
        .sqrt();
    // Coordinates in an orthonormal basis are √d0 · c.
    let residual = c
        .iter()
        .zip(d1.iter().zip(&d0))
        .map(|(x, (a, m))| ((a - lambda * m) * x.norm() / m.sqrt()).powi(2))
        .sum::<f64>()
        .sqrt()
        / norm;

    Ok(PollutionConstruction {
        lambda_target: lambda,
        mu_minus: basis[0].minus.mean_value,
        mu_plus: basis[0].plus.mean_value,
        basis,
        computed_eigenvalue: computed,
        verification_residual: residual,
    })
}

/// Largest admissible `δ` with margin: `0.9` times the root of
/// `δ(2 − δ)/(1 − δ) = ε` in `(0, 1)`.
pub fn delta_for(epsilon: f64) -> f64 {
    let b = 2.0 + epsilon;
    0.9 * 0.5 * (b - (b * b - 4.0 * epsilon).sqrt())
}

/// `δ(2 − δ)/(1 − δ)`.
pub fn delta_bound(delta: f64) -> f64 {
    delta * (2.0 - delta) / (1.0 - delta)
}

/// `Q_H` on u-only Fourier modes `(e_k, 0)` is `diag(k²)`.
fn stokes_u_modes_gram(labels: &[i64]) -> GramTriple {
    let d: Vec<f64> = labels.iter().map(|&k| (k * k) as f64).collect();
    let mut g = GramTriple::diagonal(&d);
    g.g2 = None;
    g
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PushReport {
    pub epsilon: f64,
    pub r: f64,
    pub delta: f64,
    pub tau: f64,
    /// Largest eigenvalue of the shifted form on the original space.
    pub form_sup: f64,
    /// Fourier frequencies of the added eigenvectors.
    pub frequencies: Vec<u64>,
    pub min_eig: f64,
    pub proj_dist: f64,
}

impl PushReport {
    pub fn holds(&self) -> bool {
        self.min_eig > self.r && self.proj_dist < self.epsilon
    }
}

/// Shift used so the form is bounded below by one.
const PUSH_SHIFT: f64 = 1.0;

/// Perturbs the basis `φ_l = (e_{k_l}, 0)` of `L` by high-frequency
/// eigenvectors of `H` of norm `δ`, moving the whole compressed spectrum
/// above `r` while keeping `‖P − P′‖ < ε`.
pub fn push_spectrum(labels: &[i64], epsilon: f64, r: f64, cutoff: u64) -> Result<PushReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::pre(format!("ε = {epsilon} not in (0, 1)")));
    }
    if !(r > 0.0) {
        return Err(Error::pre(format!("R = {r} must be positive")));
    }
    if labels.is_empty() {
        return Err(Error::pre("empty basis"));
    }
    let base = stokes_u_modes_gram(labels);
    let delta = delta_for(epsilon);
    let form_sup = solve_first_order(&base.shifted(PUSH_SHIFT))?
        .eigenvalues
        .last()
        .copied()
        .unwrap();
    // (τδ² − 4M)/(2(1 + δ)²) ≥ R + 1 + s
    let tau = (2.0 * (1.0 + delta).powi(2) * (r + 1.0 + PUSH_SHIFT) + 4.0 * form_sup)
        / (delta * delta);

    let k_low = labels.iter().map(|k| k.unsigned_abs()).max().unwrap();
    let mut k0 = k_low + 1;
    while stokes_eigenvalue(k0, Branch::Plus) + PUSH_SHIFT <= tau {
        k0 += 1;
        if k0 > cutoff {
            return Err(Error::Capacity {
                cutoff: cutoff as usize,
                needed: tau,
            });
        }
    }
    let n = labels.len();
    let frequencies: Vec<u64> = (0..n as u64).map(|j| k0 + j).collect();
    if *frequencies.last().unwrap() > cutoff {
        return Err(Error::Capacity {
            cutoff: cutoff as usize,
            needed: tau,
        });
    }

    // ψ_l ⟂ L and ψ_l ⟂ ψ_m, and Hψ_l = λ_l ψ_l, so the cross terms vanish.
    let d2 = delta * delta;
    let g1 = Mat::from_fn(n, n, |i, j| {
        let mut v = base.g1[(i, j)];
        if i == j {
            v += d2 * stokes_eigenvalue(frequencies[i], Branch::Plus);
        }
        v
    });
    let g0 = Mat::from_fn(n, n, |i, j| base.g0[(i, j)] * (1.0 + d2));
    let perturbed = GramTriple { g0, g1, g2: None };
    let min_eig = solve_first_order(&perturbed)?.eigenvalues[0];

    // Joint orthonormal basis {φ_l} ∪ {ψ_l/δ}: P = diag(I, 0),
    // P′ = [[I, δI], [δI, δ²I]] / (1 + δ²).
    let diff = Mat::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let same = i % n == j % n;
        let p = if bi == 0 && bj == 0 && same { 1.0 } else { 0.0 };
        let pp = if !same {
            0.0
        } else {
            let num = match (bi, bj) {
                (0, 0) => 1.0,
                (1, 1) => d2,
                _ => delta,
            };
            num / (1.0 + d2)
        };
        c64::new(p - pp, 0.0)
    });
    let eigs = solve_first_order(&GramTriple {
        g0: Mat::from_fn(2 * n, 2 * n, |i, j| {
            c64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        }),
        g1: diff,
        g2: None,
    })?
    .eigenvalues;
    let proj_dist = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    Ok(PushReport {
        epsilon,
        r,
        delta,
        tau,
        form_sup,
        frequencies,
        min_eig,
        proj_dist,
    })
}

/// Symmetric Hausdorff distance between finite sets; 0 for two empty sets.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_sided = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// First-order values outside the interior of every band, deduplicated.
pub fn gap_values(first: &FirstOrderResult, truth: &ExactSpectrum) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &l in &first.eigenvalues {
        if truth.bands.iter().any(|b| b.lo < l && l < b.hi) {
            continue;
        }
        if out.last().is_some_and(|&p| (l - p).abs() < 1e-9) {
            continue;
        }
        out.push(l);
    }
    out
}

/// Smallest dimension `N ≡ lo (mod 2)` in `[lo, hi]` whose Galerkin matrix
/// of multiplication by `profile` has at least `count` eigenvalues in `(a, b)`.
///
/// Counts are monotone along one parity class, so this bisects; the other
/// parity is a different trajectory family and is never mixed in.
pub fn emergence_dimension(
    profile: &PiecewiseTrig,
    (a, b): (f64, f64),
    count: usize,
    lo: usize,
    hi: usize,
) -> Result<Option<usize>> {
    if lo > hi || lo == 0 {
        return Err(Error::pre("need 0 < lo <= hi"));
    }
    let reached = |n: usize| -> Result<bool> {
        let g = assemble_a(profile, FourierWindow::for_dimension(n)?);
        Ok(solve_first_order(&g)?.in_open_interval(a, b).len() >= count)
    };
    let (mut i, mut j) = (0, (hi - lo) / 2);
    if !reached(lo + 2 * j)? {
        return Ok(None);
    }
    while i < j {
        let mid = (i + j) / 2;
        if reached(lo + 2 * mid)? {
            j = mid;
        } else {
            i = mid + 1;
        }
    }
    Ok(Some(lo + 2 * i))
}

pub const PERIODIC_INTRA_MAX: f64 = 1e-2;
pub const PERIODIC_CROSS_MIN: f64 = 5e-2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub omega: u64,
    /// Residue `N mod ω` to the `(N, gap values)` trajectory.
    pub families: BTreeMap<u64, Vec<(usize, Vec<f64>)>>,
    /// Largest Hausdorff step between consecutive members of one family.
    pub intra_family_spread: f64,
    /// Smallest Hausdorff distance between sets from different families
    /// whose `N` differ by less than `ω`.
    pub cross_family_spread: f64,
    /// `Some(ω)` when the split is clean, `Some(1)` when every set agrees.
    pub detected_period: Option<u64>,
}

/// Groups precomputed gap sets by `N mod ω` and measures the split.
pub fn periodicity_from_sets(omega: u64, sets: &[(usize, Vec<f64>)]) -> Result<PeriodicityReport> {
    if omega == 0 {
        return Err(Error::pre("ω must be positive"));
    }
    let mut families: BTreeMap<u64, Vec<(usize, Vec<f64>)>> = BTreeMap::new();
    for (n, s) in sets {
        families
            .entry(*n as u64 % omega)
            .or_default()
            .push((*n, s.clone()));
    }
    let mut intra = 0.0f64;
    for traj in families.values_mut() {
        traj.sort_by_key(|t| t.0);
        for w in traj.windows(2) {
            intra = intra.max(hausdorff(&w[0].1, &w[1].1));
        }
    }
    let mut cross = f64::INFINITY;
    let mut overall = 0.0f64;
    for (i, (n1, s1)) in sets.iter().enumerate() {
        for (n2, s2) in &sets[i + 1..] {
            let d = hausdorff(s1, s2);
            overall = overall.max(d);
            if (*n1 as u64 % omega) != (*n2 as u64 % omega) && n1.abs_diff(*n2) < omega as usize {
                cross = cross.min(d);
            }
        }
    }
    let detected_period = if overall < PERIODIC_INTRA_MAX {
        Some(1)
    } else if intra < PERIODIC_INTRA_MAX && cross > PERIODIC_CROSS_MIN {
        Some(omega)
    } else {
        None
    };
    Ok(PeriodicityReport {
        omega,
        families,
        intra_family_spread: intra,
        cross_family_spread: cross,
        detected_period,
    })
}

/// Gap values of the multiplication operator with a jump at `y = −πq/p`
/// for each `N`, grouped by `N mod ω(q/p)`.
pub fn periodicity_analysis(q: u64, p: u64, n_values: &[usize]) -> Result<PeriodicityReport> {
    let jump = JumpPoint::rational(q, p)?;
    let omega = crate::models::omega_period(p, q)?;
    if n_values.len() < 3 * omega as usize {
        return Err(Error::pre(format!(
            "{} values of N do not span 3ω = {}",
            n_values.len(),
            3 * omega
        )));
    }
    let model = OperatorModel::multiplication(jump)?;
    let truth = model.exact_spectrum(0);
    let sets = n_values
        .iter()
        .map(|&n| {
            let gram = assemble_a(model.profile()?, FourierWindow::for_dimension(n)?);
            Ok((n, gap_values(&solve_first_order(&gram)?, &truth)))
        })
        .collect::<Result<Vec<_>>>()?;
    periodicity_from_sets(omega, &sets)
}

/// Trial-space pairs for the `H` convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceChoice {
    /// Linear Lagrange for both components.
    LxL,
    /// Hermite cubics for `u`, linear Lagrange for `v`.
    MxL,
    /// Hermite cubics for both.
    MxM,
    /// Lagrange of order `p` for both.
    LpxLp(u8),
}

impl SpaceChoice {
    pub fn spaces(&self, n_nodes: usize) -> Result<(FemSpace, FemSpace)> {
        Ok(match *self {
            SpaceChoice::LxL => (FemSpace::lagrange(n_nodes, 1)?, FemSpace::lagrange(n_nodes, 1)?),
            SpaceChoice::MxL => (FemSpace::hermite(n_nodes)?, FemSpace::lagrange(n_nodes, 1)?),
            SpaceChoice::MxM => (FemSpace::hermite(n_nodes)?, FemSpace::hermite(n_nodes)?),
            SpaceChoice::LpxLp(p) => {
                (FemSpace::lagrange(n_nodes, p)?, FemSpace::lagrange(n_nodes, p)?)
            }
        })
    }

    pub fn supports_second_order(&self) -> bool {
        matches!(self, SpaceChoice::MxL | SpaceChoice::MxM)
    }
}

impl std::str::FromStr for SpaceChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LxL" => Ok(SpaceChoice::LxL),
            "MxL" => Ok(SpaceChoice::MxL),
            "MxM" => Ok(SpaceChoice::MxM),
            _ => {
                let bad = || Error::pre(format!("unknown space {s:?}"));
                let (a, b) = s.split_once('x').ok_or_else(bad)?;
                let pa = a.strip_prefix('L').and_then(|x| x.parse::<u8>().ok());
                let pb = b.strip_prefix('L').and_then(|x| x.parse::<u8>().ok());
                match (pa, pb) {
                    (Some(p), Some(q)) if p == q => Ok(SpaceChoice::LpxLp(p)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl std::fmt::Display for SpaceChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceChoice::LxL => write!(f, "LxL"),
            SpaceChoice::MxL => write!(f, "MxL"),
            SpaceChoice::MxM => write!(f, "MxM"),
            SpaceChoice::LpxLp(p) => write!(f, "L{p}xL{p}"),
        }
    }
}

/// Matches farther than this from the target are reported as failures.
pub const MATCH_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateEntry {
    pub branch: Branch,
    pub k: u64,
    pub target: f64,
    /// `None` where no computed value was within the match radius.
    pub errors: Vec<Option<f64>>,
    pub slope: Option<f64>,
    /// `|Im z|` of the matched second-order point, if requested.
    pub im_errors: Vec<Option<f64>>,
    pub im_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub space: SpaceChoice,
    pub n_values: Vec<usize>,
    pub entries: Vec<RateEntry>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn nearest_point(points: &[c64], target: f64) -> Option<c64> {
    points
        .iter()
        .copied()
        .filter(|z| (z - c64::new(target, 0.0)).norm() <= MATCH_RADIUS)
        .min_by(|a, b| {
            let t = c64::new(target, 0.0);
            (a - t).norm().total_cmp(&(b - t).norm())
        })
}

/// Eigenvalue errors against `λ_k^±` on refined meshes and their fitted
/// log-log slopes. Second-order slopes use `|Im z|` of the point nearest to
/// each target and are computed only when the space supports them.
pub fn convergence_rates(
    space: SpaceChoice,
    n_values: &[usize],
    ks: &[u64],
    second_order: bool,
    residual_tol: f64,
) -> Result<ConvergenceReport> {
    if second_order && !space.supports_second_order() {
        return Err(Error::Unsupported(format!(
            "second-order spectra need C¹ u-elements, got {space}"
        )));
    }
    let mut targets = Vec::new();
    for &k in ks {
        for b in [Branch::Minus, Branch::Plus] {
            targets.push((b, k, stokes_eigenvalue(k, b)));
        }
    }
    let mut first_errs = vec![Vec::new(); targets.len()];
    let mut im_errs = vec![Vec::new(); targets.len()];
    for &n in n_values {
        let (u, v) = space.spaces(n)?;
        let (values, vectors, points) = if second_order {
            let g = assemble_h_second_order(&u, &v)?;
            let second = solve_second_order(&g.gram)?;
            let refiner = SecondOrderRefiner::new(&g.gram, &h_quadrature_factor(&u, &v)?)?;
            let pts: Vec<c64> = second.passing(residual_tol).map(|(_, z)| z).collect();
            // Only the matched points need full accuracy.
            let mut refined = Vec::new();
            for &(_, _, t) in &targets {
                if let Some(z) = nearest_point(&pts, t) {
                    let r = refiner.refine(z)?;
                    if r.residual <= residual_tol {
                        refined.push(r.z);
                    }
                }
            }
            let vectors = refiner.first_order_vectors().to_owned();
            (refiner.first_order().to_vec(), vectors, refined)
        } else {
            let g = assemble_h_first_order(&u, &v)?;
            let first = solve_first_order(&g.gram)?;
            let vectors = first
                .eigenvectors
                .ok_or_else(|| Error::Solver("missing eigenvectors".into()))?;
            (first.eigenvalues, vectors, Vec::new())
        };
        for (i, &(branch, k, t)) in targets.iter().enumerate() {
            // Below the essential point the Galerkin values are min-max upper
            // bounds, so the minus branch is matched by position. Above it
            // there is no such ordering and the nearest value is used.
            let idx = match branch {
                Branch::Minus => Some(if k == 0 { 0 } else { 2 * k as usize - 1 })
                    .filter(|&j| j < values.len()),
                Branch::Plus => nearest_index(&values, t),
            }
            .filter(|&j| (values[j] - t).abs() <= MATCH_RADIUS);
            let err = match idx {
                Some(j) => Some((rayleigh_value(&u, &v, vectors.col(j))? - t).abs()),
                None => None,
            };
            first_errs[i].push(err);
            if second_order {
                im_errs[i].push(nearest_point(&points, t).map(|z| z.im.abs()));
            }
        }
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    // Unmatched meshes are dropped from the fit rather than voiding it.
    let fit = |errs: &[Option<f64>]| -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(errs)
            .filter_map(|(&x, e)| e.map(|e| (x, e)))
            .unzip();
        if x.len() < 2 {
            return None;
        }
        loglog_slope(&x, &y)
    };
    let entries = targets
        .iter()
        .enumerate()
        .map(|(i, &(branch, k, target))| RateEntry {
            branch,
            k,
            target,
            slope: fit(&first_errs[i]),
            im_slope: if second_order { fit(&im_errs[i]) } else { None },
            errors: first_errs[i].clone(),
            im_errors: im_errs[i].clone(),
        })
        .collect();
    Ok(ConvergenceReport {
        space,
        n_values: n_values.to_vec(),
        entries,
    })
}

fn nearest_index(values: &[f64], t: f64) -> Option<usize> {
    (0..values.len()).min_by(|&a, &b| (values[a] - t).abs().total_cmp(&(values[b] - t).abs()))
}

/// Galerkin eigenvalue recomputed from its eigenvector in extended precision.
fn rayleigh_value(u: &FemSpace, v: &FemSpace, col: faer::ColRef<'_, c64>) -> Result<f64> {
    // The matrices are real, so a unit phase makes the vector real up to
    // the degenerate partner it may be mixed with.
    let pivot = (0..col.nrows())
        .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
        .ok_or_else(|| Error::pre("empty eigenvector"))?;
    let phase = col[pivot].conj() / col[pivot].norm();
    let c: Vec<f64> = col.iter().map(|&x| (x * phase).re).collect();
    h_rayleigh_quotient(u, v, &c)
}

/// Convenience for point-spectrum truths in tests and reports.
pub fn discrete_truth(values: &[f64]) -> ExactSpectrum {
    ExactSpectrum {
        bands: Vec::new(),
        eigenvalues: values
            .iter()
            .map(|&value| DiscreteEigenvalue {
                value,
                multiplicity: 1,
            })
            .collect(),
        essential_points: Vec::new(),
    }
}
