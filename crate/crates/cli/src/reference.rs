//! Published reference values used by `--assert`, all for the jump at y = 0.

/// Gap eigenvalues of A, odd dimensions.
pub const TABLE1: [(usize, &[f64]); 4] = [
    (101, &[-0.9264, -0.4866, 0.4362]),
    (401, &[-0.9834, -0.8250, -0.3478, 0.4597]),
    (701, &[-0.9997, -0.9673, -0.7823, -0.3002, 0.4673]),
    (1001, &[-0.9985, -0.9550, -0.7553, -0.2721, 0.4717]),
];

/// Gap eigenvalues of A, even dimensions.
pub const TABLE2: [(usize, &[f64]); 4] = [
    (100, &[-0.9910, -0.7721, -0.0661, 0.8883]),
    (400, &[-0.9988, -0.9331, -0.6358, 0.0317, 0.8539]),
    (700, &[-0.9935, -0.9033, -0.5853, 0.0636, 0.8418]),
    (1000, &[-0.9882, -0.8832, -0.5546, 0.0821, 0.8345]),
];

/// Gap eigenvalues of A for consecutive dimensions.
pub const TABLE3: [(usize, &[f64]); 8] = [
    (301, &[-0.9899, -0.8468, -0.3740, 0.4554]),
    (302, &[-0.9470, -0.6622, 0.0143, 0.8604]),
    (303, &[-0.9898, -0.8463, -0.3734, 0.4555]),
    (304, &[-0.9467, -0.6616, 0.0147, 0.8603]),
    (305, &[-0.9896, -0.8458, -0.3728, 0.4556]),
    (306, &[-0.9464, -0.6610, 0.0151, 0.8601]),
    (307, &[-0.9895, -0.8453, -0.3721, 0.4557]),
    (308, &[-0.9461, -0.6603, 0.0155, 0.8600]),
];

pub const TABLE_TOL: f64 = 2e-3;
pub const PERIOD_STEP_TOL: f64 = 1e-3;
pub const PARITY_SPLIT_MIN: f64 = 0.1;

/// Values of B at N = 401 outside the essential bands.
pub const B_N: usize = 401;
pub const B_CONFIRMED: [f64; 4] = [-3.6057, -0.8947, 0.6082, 3.0432];
pub const B_SUSPECT: [f64; 4] = [-0.9842, -0.8203, -0.3496, 0.4603];
/// `(Re, |Im|)` of the near-real second-order pairs of B at N = 401.
pub const B_PAIRS: [(f64, f64); 4] = [(-3.6056, 0.0505), (-0.8929, 0.0266), (0.6085, 0.0442), (3.0413, 0.0178)];
pub const CLASSIFY_TOL: f64 = 2e-3;

/// Eigenvalue counts of H on linear elements with 100 nodes.
pub const COUNTS_N: usize = 100;
pub const COUNT_BELOW_ONE: usize = 15;
pub const COUNT_ABOVE_TWO: usize = 99;
pub const COUNT_SLACK: usize = 1;
pub const COUNT_GAP_MIN: usize = 80;
pub const GAP_EDGE: f64 = 1e-6;

pub const SLOPE_TOL: f64 = 0.5;
pub const POLLUTION_TOL: f64 = 1e-8;

/// Expected first-order and `|Im|` slopes per trial space.
pub fn expected_slopes(space: specpol::analysis::SpaceChoice) -> Option<(f64, Option<f64>)> {
    use specpol::analysis::SpaceChoice::*;
    match space {
        LxL => Some((-2.0, None)),
        MxL => Some((-4.0, Some(-2.0))),
        MxM => Some((-6.0, Some(-3.0))),
        LpxLp(_) => None,
    }
}

/// Largest deviation between equally long sorted lists.
pub fn list_deviation(got: &[f64], want: &[f64]) -> Option<f64> {
    (got.len() == want.len()).then(|| {
        got.iter()
            .zip(want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    })
}
