//! Assembled Gram matrices against brute-force quadrature.

mod common;

use std::f64::consts::PI;

use common::{fourier_moment, max_deviation, profile, Basis, HEntry};
use specpol::c64;
use specpol::fem::{
    assemble_h_first_order, assemble_h_second_order, assemble_h_second_order_with, FemSpace,
};
use specpol::fourier::{assemble_a_second_order, assemble_b_second_order, FourierWindow};
use specpol::models::PiecewiseTrig;

const TOL: f64 = 1e-10;

#[test]
fn fourier_grams_match_quadrature() {
    for y in [0.0, -PI / 3.0, 1.0] {
        let w = FourierWindow::for_dimension(9).unwrap();
        let p = PiecewiseTrig::jump_profile(y).unwrap();
        let g = assemble_a_second_order(&p, w);
        let labels: Vec<i64> = w.labels().collect();
        let d1 = max_deviation(&g.g1, |m, k| {
            fourier_moment(|x| profile(y, x), y, labels[m] - labels[k])
        });
        let d2 = max_deviation(g.g2.as_ref().unwrap(), |m, k| {
            fourier_moment(|x| profile(y, x).powi(2), y, labels[m] - labels[k])
        });
        assert!(d1 < TOL && d2 < TOL, "y = {y}: g1 off by {d1:e}, g2 off by {d2:e}");
        assert_eq!(max_deviation(&g.g0, |m, k| c64::new((m == k) as u8 as f64, 0.0)), 0.0);
    }
}

#[test]
fn perturbed_second_gram_matches_quadrature() {
    // B e_k = (a + r_k) e_k, so (B e_k, B e_m) is a moment of (a + r_k)(a + r_m).
    let r = |l: i64| match l {
        -1 => -3.0,
        2 => 1.0,
        _ => 0.0,
    };
    let w = FourierWindow::for_dimension(8).unwrap();
    let g = assemble_b_second_order(&PiecewiseTrig::jump_profile(0.0).unwrap(), w).unwrap();
    let labels: Vec<i64> = w.labels().collect();
    let d2 = max_deviation(g.g2.as_ref().unwrap(), |m, k| {
        let (rm, rk) = (r(labels[m]), r(labels[k]));
        fourier_moment(|x| (profile(0.0, x) + rk) * (profile(0.0, x) + rm), 0.0, labels[m] - labels[k])
    });
    assert!(d2 < TOL, "g2 off by {d2:e}");
}

fn check_h(u: Basis, v: Basis, n: usize, second: bool) {
    let space = |b: Basis| match b {
        Basis::Hat => FemSpace::lagrange(n, 1).unwrap(),
        Basis::Hermite => FemSpace::hermite(n).unwrap(),
    };
    let (su, sv) = (space(u), space(v));
    let oracle = HEntry { u_basis: u, v_basis: v, n };
    let g = if second {
        assemble_h_second_order(&su, &sv).unwrap().gram
    } else {
        assemble_h_first_order(&su, &sv).unwrap().gram
    };
    assert_eq!(g.dim(), oracle.dim());
    let re = |x: f64| c64::new(x, 0.0);
    let d0 = max_deviation(&g.g0, |i, k| re(oracle.g0(i, k)));
    let d1 = max_deviation(&g.g1, |i, k| re(oracle.g1(i, k)));
    assert!(d0 < TOL && d1 < TOL, "{u:?}x{v:?} N={n}: g0 {d0:e}, g1 {d1:e}");
    if second {
        let d2 = max_deviation(g.g2.as_ref().unwrap(), |i, k| re(oracle.g2(i, k)));
        assert!(d2 < TOL, "{u:?}x{v:?} N={n}: g2 {d2:e}");
    }
}

#[test]
fn hermite_mass_at_four_nodes() {
    let s = FemSpace::hermite(4).unwrap();
    let g = assemble_h_first_order(&s, &s).unwrap().gram;
    let oracle = HEntry { u_basis: Basis::Hermite, v_basis: Basis::Hermite, n: 4 };
    let d = max_deviation(&g.g0, |i, k| c64::new(oracle.g0(i, k), 0.0));
    assert!(d < 1e-12, "{d:e}");
}

#[test]
fn h_grams_match_quadrature() {
    check_h(Basis::Hat, Basis::Hat, 6, false);
    check_h(Basis::Hermite, Basis::Hat, 8, true);
    check_h(Basis::Hermite, Basis::Hermite, 5, true);
}

#[test]
fn oracle_basis_agrees_with_library_basis() {
    let n = 6;
    let h = 2.0 * PI / n as f64;
    for (b, s) in [
        (Basis::Hat, FemSpace::lagrange(n, 1).unwrap()),
        (Basis::Hermite, FemSpace::hermite(n).unwrap()),
    ] {
        for dof in 0..b.dofs(n) {
            for e in 0..n {
                for t in [0.1, 0.5, 0.85] {
                    let x = -PI + h * (e as f64 + t);
                    for d in 0..=s.max_derivative().min(1) {
                        let want = b.eval(n, dof, e, d, x);
                        let got = s.basis_derivative(dof, d, x).unwrap();
                        assert!((want - got).abs() < 1e-12, "{b:?} dof {dof} d {d} x {x}");
                    }
                }
            }
        }
    }
}

#[test]
fn doubling_gauss_points_changes_nothing() {
    let (u, v) = (FemSpace::hermite(10).unwrap(), FemSpace::lagrange(10, 2).unwrap());
    let a = assemble_h_second_order_with(&u, &v, 4).unwrap().gram;
    let b = assemble_h_second_order_with(&u, &v, 8).unwrap().gram;
    for (x, y) in [(&a.g0, &b.g0), (&a.g1, &b.g1), (a.g2.as_ref().unwrap(), b.g2.as_ref().unwrap())] {
        let d = max_deviation(x, |i, k| y[(i, k)]);
        assert!(d <= 1e-13, "{d:e}");
    }
}
