//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line even when others fail.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{fourier_moment, max_deviation, profile, Basis, HEntry};
use specpol::analysis::{
    classify, construct_pollution_subspace, convergence_rates, disk_exclusion,
    emergence_dimension, hausdorff, push_spectrum, stokes_truth_for, verify_enclosures, Label,
    SpaceChoice, DEFAULT_DELTA,
};
use specpol::c64;
use specpol::eig::{
    solve_first_order, solve_second_order, SecondOrderResult, FIRST_ORDER_TOL, SECOND_ORDER_TOL,
};
use specpol::fem::{assemble_h_first_order, solve_h_second_order, FemSpace};
use specpol::fourier::{assemble_a_second_order, assemble_model, FourierWindow, GramTriple};
use specpol::models::{JumpPoint, OperatorModel, PiecewiseTrig};

const TABLE_TOL: f64 = 2e-3;
const TABLE1_BUDGET_S: f64 = 60.0;
const PERIOD_STEP_TOL: f64 = 1e-3;
const PARITY_SPLIT_MIN: f64 = 0.1;
const CLASSIFY_TOL: f64 = 2e-3;
const COUNTS_BUDGET_S: f64 = 30.0;
const GAP_EDGE: f64 = 1e-6;
const SLOPE_TOL: f64 = 0.5;
const POLLUTION_TOL: f64 = 1e-8;
const CONJUGATE_TOL: f64 = 1e-6;
const SHIFT_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-10;
const EMERGENCE_TOL: usize = 10;

const TABLE1: [(usize, &[f64]); 4] = [
    (101, &[-0.9264, -0.4866, 0.4362]),
    (401, &[-0.9834, -0.8250, -0.3478, 0.4597]),
    (701, &[-0.9997, -0.9673, -0.7823, -0.3002, 0.4673]),
    (1001, &[-0.9985, -0.9550, -0.7553, -0.2721, 0.4717]),
];

const TABLE2: [(usize, &[f64]); 4] = [
    (100, &[-0.9910, -0.7721, -0.0661, 0.8883]),
    (400, &[-0.9988, -0.9331, -0.6358, 0.0317, 0.8539]),
    (700, &[-0.9935, -0.9033, -0.5853, 0.0636, 0.8418]),
    (1000, &[-0.9882, -0.8832, -0.5546, 0.0821, 0.8345]),
];

const TABLE3: [(usize, [f64; 4]); 8] = [
    (301, [-0.9899, -0.8468, -0.3740, 0.4554]),
    (302, [-0.9470, -0.6622, 0.0143, 0.8604]),
    (303, [-0.9898, -0.8463, -0.3734, 0.4555]),
    (304, [-0.9467, -0.6616, 0.0147, 0.8603]),
    (305, [-0.9896, -0.8458, -0.3728, 0.4556]),
    (306, [-0.9464, -0.6610, 0.0151, 0.8601]),
    (307, [-0.9895, -0.8453, -0.3721, 0.4557]),
    (308, [-0.9461, -0.6603, 0.0155, 0.8600]),
];

const B_CONFIRMED: [f64; 4] = [-3.6057, -0.8947, 0.6082, 3.0432];
const B_SUSPECT: [f64; 4] = [-0.9842, -0.8203, -0.3496, 0.4603];
const B_PAIRS: [(f64, f64); 4] = [(-3.6056, 0.0505), (-0.8929, 0.0266), (0.6085, 0.0442), (3.0413, 0.0178)];

type Outcome = Result<String, String>;

fn model_a() -> OperatorModel {
    OperatorModel::multiplication(JumpPoint::rational(0, 1).unwrap()).unwrap()
}

fn gap_eigenvalues(n: usize) -> Vec<f64> {
    let g = assemble_model(&model_a(), FourierWindow::for_dimension(n).unwrap(), false).unwrap();
    solve_first_order(&g).unwrap().in_open_interval(-1.0, 1.0)
}

/// Largest deviation between equally long sorted lists.
fn list_deviation(got: &[f64], want: &[f64]) -> Option<f64> {
    (got.len() == want.len()).then(|| {
        got.iter()
            .zip(want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    })
}

fn check_table(rows: &[(usize, &[f64])]) -> Outcome {
    let mut worst = 0.0f64;
    for &(n, want) in rows {
        let got = gap_eigenvalues(n);
        match list_deviation(&got, want) {
            Some(d) if d <= TABLE_TOL => worst = worst.max(d),
            Some(d) => return Err(format!("N={n}: deviation {d:.2e} > {TABLE_TOL:e}")),
            None => return Err(format!("N={n}: {} gap values, expected {}", got.len(), want.len())),
        }
    }
    Ok(format!("max deviation {worst:.1e}"))
}

/// Expensive second-order runs shared by several criteria.
struct Runs {
    a: Vec<(usize, GramTriple, SecondOrderResult)>,
    h: Vec<(String, SecondOrderResult, faer::Mat<c64>)>,
}

impl Runs {
    fn compute() -> Self {
        let p = PiecewiseTrig::jump_profile(0.0).unwrap();
        let a = [101, 201, 501]
            .into_iter()
            .map(|n| {
                let g = assemble_a_second_order(&p, FourierWindow::for_dimension(n).unwrap());
                let s = solve_second_order(&g).unwrap();
                (n, g, s)
            })
            .collect();
        let mut h = Vec::new();
        for (sc, ns) in [(SpaceChoice::MxL, &[25, 50, 100][..]), (SpaceChoice::MxM, &[25, 50][..])] {
            for &n in ns {
                let (u, v) = sc.spaces(n).unwrap();
                let (g, s) = solve_h_second_order(&u, &v).unwrap();
                h.push((format!("{sc} N={n}"), s, g.gram.g0));
            }
        }
        Runs { a, h }
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let detail = check_table(&TABLE1)?;
    let secs = t.elapsed().as_secs_f64();
    if secs > TABLE1_BUDGET_S {
        return Err(format!("{detail}, but took {secs:.1} s > {TABLE1_BUDGET_S} s"));
    }
    Ok(format!("{detail}, {secs:.1} s"))
}

fn criterion_2() -> Outcome {
    let t2 = check_table(&TABLE2)?;
    let rows: Vec<(usize, &[f64])> = TABLE3.iter().map(|(n, v)| (*n, &v[..])).collect();
    let t3 = check_table(&rows)?;
    let (s301, s302, s303) = (gap_eigenvalues(301), gap_eigenvalues(302), gap_eigenvalues(303));
    let step = list_deviation(&s301, &s303).ok_or("N=301 and N=303 differ in count")?;
    if step >= PERIOD_STEP_TOL {
        return Err(format!("N=301 vs 303 step {step:.2e}"));
    }
    // The printed sets themselves come within 0.043 of each other at their
    // lowest points, so the parity split is measured as a set distance.
    let split = hausdorff(&s301, &s302);
    let closest = s301
        .iter()
        .flat_map(|a| s302.iter().map(move |b| (a - b).abs()))
        .fold(f64::INFINITY, f64::min);
    if split <= PARITY_SPLIT_MIN {
        return Err(format!("N=301 vs 302 set distance {split:.3}"));
    }
    Ok(format!(
        "table 2 {t2}; table 3 {t3}; 301/303 step {step:.1e}; 301/302 Hausdorff {split:.3} (closest pair {closest:.3})"
    ))
}

fn criterion_3() -> Outcome {
    let b = OperatorModel::perturbed(JumpPoint::rational(0, 1).unwrap()).unwrap();
    let g = assemble_model(&b, FourierWindow::for_dimension(401).unwrap(), true).unwrap();
    let (f, s) = (solve_first_order(&g).unwrap(), solve_second_order(&g).unwrap());
    let essential = b.exact_spectrum(0).essential_part();
    let rep = classify(&f, &s, DEFAULT_DELTA, DEFAULT_DELTA, SECOND_ORDER_TOL, Some(&essential));
    let outside: Vec<_> = rep
        .entries
        .iter()
        .filter(|e| !essential.bands.iter().any(|band| band.lo <= e.lambda && e.lambda <= band.hi))
        .collect();
    let pick = |l: Label| -> Vec<f64> { outside.iter().filter(|e| e.label == l).map(|e| e.lambda).collect() };
    let (conf, susp) = (pick(Label::Confirmed), pick(Label::Suspect));
    let dc = list_deviation(&conf, &B_CONFIRMED).ok_or(format!("confirmed {conf:?}"))?;
    let ds = list_deviation(&susp, &B_SUSPECT).ok_or(format!("suspect {susp:?}"))?;
    if dc.max(ds) > CLASSIFY_TOL {
        return Err(format!("confirmed off {dc:.1e}, suspect off {ds:.1e}"));
    }
    let pts: Vec<c64> = s.passing(SECOND_ORDER_TOL).map(|(_, z)| z).collect();
    let mut worst = 0.0f64;
    for &(re, im) in &B_PAIRS {
        for want in [c64::new(re, im), c64::new(re, -im)] {
            let d = pts
                .iter()
                .map(|z| (z.re - want.re).abs().max((z.im - want.im).abs()))
                .fold(f64::INFINITY, f64::min);
            if d > CLASSIFY_TOL {
                return Err(format!("no point within {CLASSIFY_TOL:e} of {want}"));
            }
            worst = worst.max(d);
        }
    }
    Ok(format!("labels within {:.1e}, conjugate pairs within {worst:.1e}", dc.max(ds)))
}

fn criterion_4(runs: &Runs) -> Outcome {
    let truth_a = model_a().exact_spectrum(0);
    let mut checked = 0;
    let mut bad = Vec::new();
    for (n, _, s) in &runs.a {
        let r = verify_enclosures(s, &truth_a, SECOND_ORDER_TOL);
        checked += r.checked;
        if !r.passed() {
            bad.push(format!("A N={n}: {}", r.violations.len()));
        }
    }
    for (name, s, _) in &runs.h {
        let r = verify_enclosures(s, &stokes_truth_for(&s.points), SECOND_ORDER_TOL);
        checked += r.checked;
        if !r.passed() {
            bad.push(format!("H {name}: {}", r.violations.len()));
        }
    }
    if bad.is_empty() {
        Ok(format!("{checked} points over {} runs, zero violations", runs.a.len() + runs.h.len()))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let all = runs
        .a
        .iter()
        .map(|(n, _, s)| (format!("A N={n}"), s, (-1.0, 1.0)))
        .chain(runs.h.iter().map(|(name, s, _)| (format!("H {name}"), s, (1.0, 2.0))));
    for (name, s, (a, b)) in all {
        let r = disk_exclusion(s, a, b, SECOND_ORDER_TOL);
        checked += r.checked;
        if !r.passed() {
            bad.push(format!("{name}: {}", r.violations.len()));
        }
    }
    if bad.is_empty() {
        Ok(format!("{checked} points, none inside the disks"))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let eig = |u: FemSpace, v: FemSpace| {
        solve_first_order(&assemble_h_first_order(&u, &v).unwrap().gram).unwrap().eigenvalues
    };
    let ll = eig(FemSpace::lagrange(100, 1).unwrap(), FemSpace::lagrange(100, 1).unwrap());
    let low = ll.iter().filter(|&&l| l <= 1.0).count();
    let mid = ll.iter().filter(|&&l| l > 1.0 && l < 2.0).count();
    let high = ll.iter().filter(|&&l| l >= 2.0).count();
    let ml = eig(FemSpace::hermite(100).unwrap(), FemSpace::lagrange(100, 1).unwrap());
    let ml_mid = ml.iter().filter(|&&l| l > 1.0 + GAP_EDGE && l < 2.0 - GAP_EDGE).count();
    let secs = t.elapsed().as_secs_f64();
    let detail = format!("LxL {low}/{mid}/{high}, MxL {ml_mid} in the gap, {secs:.1} s");
    if low.abs_diff(15) <= 1 && high.abs_diff(99) <= 1 && mid >= 80 && ml_mid == 0 && secs < COUNTS_BUDGET_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (sc, second, first_target, im_target) in [
        (SpaceChoice::LxL, false, -2.0, None),
        (SpaceChoice::MxL, true, -4.0, Some(-2.0)),
        (SpaceChoice::MxM, true, -6.0, Some(-3.0)),
    ] {
        let rep = convergence_rates(sc, &[16, 32, 64, 128], &[1, 2, 3], second, SECOND_ORDER_TOL)
            .map_err(|e| e.to_string())?;
        let within = |s: Option<f64>, t: f64| s.is_some_and(|s| (s - t).abs() <= SLOPE_TOL);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in &rep.entries {
            ok &= within(e.slope, first_target);
            if let Some(t) = im_target {
                ok &= within(e.im_slope, t);
            }
            let s = e.slope.unwrap_or(f64::NAN);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let mut line = format!("{sc} [{lo:.2}, {hi:.2}]");
        if im_target.is_some() {
            let ims: Vec<f64> = rep.entries.iter().map(|e| e.im_slope.unwrap_or(f64::NAN)).collect();
            let (a, b) = ims.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            line += &format!(" Im [{a:.2}, {b:.2}]");
        }
        lines.push(line);
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let a = model_a();
    let mut worst = 0.0f64;
    for lambda in [-0.9, -0.5, 0.0, 0.5, 0.9, 0.99] {
        let c = construct_pollution_subspace(&a, lambda, 3).map_err(|e| e.to_string())?;
        if c.verification_residual > POLLUTION_TOL {
            return Err(format!("λ={lambda}: residual {:.1e}", c.verification_residual));
        }
        worst = worst.max(c.verification_residual);
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let labels: Vec<i64> = (-2..=2).collect();
    let mut parts = Vec::new();
    for (eps, r) in [(0.1, 100.0), (0.5, 10.0)] {
        let rep = push_spectrum(&labels, eps, r, 1_000_000).map_err(|e| e.to_string())?;
        let line = format!("(ε={eps}, R={r}): ‖P−P′‖={:.4}, min eig {:.1}", rep.proj_dist, rep.min_eig);
        if !(rep.proj_dist < eps && rep.min_eig > r) {
            return Err(line);
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

/// Each point has a partner within `tol` in `other`.
fn covered(points: &[c64], other: &[c64], tol: f64) -> bool {
    points.iter().all(|z| other.iter().any(|w| (z - w).norm() <= tol))
}

fn passing(s: &SecondOrderResult) -> Vec<c64> {
    s.passing(SECOND_ORDER_TOL).map(|(_, z)| z).collect()
}

fn criterion_10(runs: &Runs) -> Outcome {
    let mut notes = Vec::new();

    // Conjugate symmetry.
    for (name, s) in runs
        .a
        .iter()
        .map(|(n, _, s)| (format!("A N={n}"), s))
        .chain(runs.h.iter().map(|(name, s, _)| (format!("H {name}"), s)))
    {
        let pts = passing(s);
        let conj: Vec<c64> = pts.iter().map(|z| z.conj()).collect();
        if !covered(&pts, &conj, CONJUGATE_TOL) {
            return Err(format!("{name}: second-order set not conjugate symmetric"));
        }
    }
    notes.push("conjugate symmetry ok".to_string());

    // Shift covariance A -> A + I.
    let (_, g, s) = &runs.a[0];
    let shifted = g.shifted(1.0);
    let (f0, f1) = (solve_first_order(g).unwrap(), solve_first_order(&shifted).unwrap());
    let d1 = f0
        .eigenvalues
        .iter()
        .zip(&f1.eigenvalues)
        .map(|(a, b)| (a + 1.0 - b).abs())
        .fold(0.0, f64::max);
    let moved: Vec<c64> = passing(s).iter().map(|z| z + 1.0).collect();
    let direct = passing(&solve_second_order(&shifted).unwrap());
    if d1 > SHIFT_TOL || !covered(&moved, &direct, SHIFT_TOL) || !covered(&direct, &moved, SHIFT_TOL) {
        return Err(format!("shift covariance broken (first-order drift {d1:.1e})"));
    }
    notes.push(format!("shift drift {d1:.0e}"));

    // Quadrature oracle at small sizes.
    let mut worst = 0.0f64;
    let w = FourierWindow::for_dimension(9).unwrap();
    let labels: Vec<i64> = w.labels().collect();
    let ga = assemble_a_second_order(&PiecewiseTrig::jump_profile(0.0).unwrap(), w);
    worst = worst.max(max_deviation(&ga.g1, |m, k| fourier_moment(|x| profile(0.0, x), 0.0, labels[m] - labels[k])));
    worst = worst.max(max_deviation(ga.g2.as_ref().unwrap(), |m, k| {
        fourier_moment(|x| profile(0.0, x).powi(2), 0.0, labels[m] - labels[k])
    }));
    for (ub, vb, n) in [(Basis::Hat, Basis::Hat, 6), (Basis::Hermite, Basis::Hat, 8), (Basis::Hermite, Basis::Hermite, 5)] {
        let sp = |b: Basis| match b {
            Basis::Hat => FemSpace::lagrange(n, 1).unwrap(),
            Basis::Hermite => FemSpace::hermite(n).unwrap(),
        };
        let (u, v) = (sp(ub), sp(vb));
        let oracle = HEntry { u_basis: ub, v_basis: vb, n };
        let re = |x: f64| c64::new(x, 0.0);
        let g = if matches!(ub, Basis::Hermite) {
            specpol::fem::assemble_h_second_order(&u, &v).unwrap().gram
        } else {
            assemble_h_first_order(&u, &v).unwrap().gram
        };
        worst = worst.max(max_deviation(&g.g0, |i, k| re(oracle.g0(i, k))));
        worst = worst.max(max_deviation(&g.g1, |i, k| re(oracle.g1(i, k))));
        if let Some(g2) = &g.g2 {
            worst = worst.max(max_deviation(g2, |i, k| re(oracle.g2(i, k))));
        }
    }
    if worst > ORACLE_TOL {
        return Err(format!("Gram matrices off the quadrature oracle by {worst:.1e}"));
    }
    notes.push(format!("oracle {worst:.0e}"));

    // Mass matrices.
    for (name, _, g0) in &runs.h {
        let min = g0.self_adjoint_eigenvalues(faer::Side::Lower).unwrap()[0];
        if min <= 0.0 {
            return Err(format!("{name}: mass matrix not positive definite ({min:e})"));
        }
    }
    notes.push("mass matrices positive definite".into());

    // First-order residuals on the same runs.
    let f = solve_first_order(g).unwrap();
    if f.residuals.iter().any(|&r| r > FIRST_ORDER_TOL) {
        return Err("first-order residual above tolerance".into());
    }

    // Late emergence of extra gap eigenvalues, loosely.
    let p = PiecewiseTrig::jump_profile(0.0).unwrap();
    let mut seen = BTreeMap::new();
    for (count, expect, lo, hi) in [(4, 161, 101, 301), (5, 631, 501, 801)] {
        let n = emergence_dimension(&p, (-1.0, 1.0), count, lo, hi)
            .map_err(|e| e.to_string())?
            .ok_or(format!("gap count {count} never reached"))?;
        if n.abs_diff(expect) > EMERGENCE_TOL {
            return Err(format!("eigenvalue {count} emerges at N={n}, expected about {expect}"));
        }
        seen.insert(count, n);
    }
    notes.push(format!("emergence at N={} and N={}", seen[&4], seen[&5]));
    Ok(notes.join("; "))
}

fn main() -> ExitCode {
    let runs_start = Instant::now();
    let runs = Runs::compute();
    let runs_secs = runs_start.elapsed().as_secs_f64();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("odd-N gap eigenvalues of A", Box::new(criterion_1)),
        ("even and consecutive N gap eigenvalues with parity", Box::new(criterion_2)),
        ("B classification at N=401", Box::new(criterion_3)),
        ("enclosure soundness", Box::new(|| criterion_4(&runs))),
        ("disk exclusion", Box::new(|| criterion_5(&runs))),
        ("H eigenvalue counts", Box::new(criterion_6)),
        ("convergence slopes", Box::new(criterion_7)),
        ("pollution constructor", Box::new(criterion_8)),
        ("push constructor", Box::new(criterion_9)),
        ("property suites", Box::new(|| criterion_10(&runs))),
    ];
    println!("shared second-order runs: {runs_secs:.1} s");
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
