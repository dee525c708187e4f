//! Shared fixtures for the integration tests.
#![allow(dead_code)] // each test target uses its own subset

use dualmetric::expr::{Chart, Expr};
use dualmetric::geometry::{identity_mat, zero_mat, Mat, MetricField};
use dualmetric::parse::parse;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exterior chart of the unit-mass static spherically symmetric vacuum
/// solution, poles and horizon excluded.
pub fn schwarzschild_chart() -> Chart {
    Chart::new(
        &["t", "r", "theta", "phi"],
        &[(0.0, 1.0), (3.0, 10.0), (0.3, 2.8), (0.1, 6.2)],
    )
    .unwrap()
}

pub fn schwarzschild() -> MetricField {
    let chart = schwarzschild_chart();
    let gtt = parse("-(1 - 2/r)", &chart).unwrap();
    let grr = parse("1/(1 - 2/r)", &chart).unwrap();
    let gthth = parse("r^2", &chart).unwrap();
    let gphph = parse("r^2*sin(theta)^2", &chart).unwrap();
    MetricField::diagonal(chart, vec![gtt, grr, gthth, gphph]).unwrap()
}

pub fn polar_plane() -> MetricField {
    let chart = Chart::new(&["r", "phi"], &[(0.5, 3.0), (0.1, 6.0)]).unwrap();
    let r2 = parse("r^2", &chart).unwrap();
    MetricField::diagonal(chart, vec![Expr::one(), r2]).unwrap()
}

pub fn unit_sphere() -> MetricField {
    let chart = Chart::new(&["theta", "phi"], &[(0.3, 2.8), (0.1, 6.0)]).unwrap();
    let s2 = parse("sin(theta)^2", &chart).unwrap();
    MetricField::diagonal(chart, vec![Expr::one(), s2]).unwrap()
}

pub fn flat(n: usize) -> MetricField {
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let chart = Chart::new(&refs, &vec![(-1.0, 1.0); n]).unwrap();
    MetricField::new(chart, identity_mat(n)).unwrap()
}

/// Random low-degree polynomial in the chart coordinates with coefficients
/// in `(-amp, amp)`: `c0 + Σ ci xi + Σ cij xi xj`.
pub fn random_poly(chart: &Chart, rng: &mut ChaCha8Rng, amp: f64) -> Expr {
    let n = chart.dim();
    let mut terms = vec![Expr::constant(rng.random_range(-amp..amp))];
    for i in 0..n {
        terms.push(Expr::constant(rng.random_range(-amp..amp)) * Expr::coord(i));
        for j in i..n {
            terms.push(
                Expr::constant(rng.random_range(-amp..amp))
                    * (Expr::coord(i) * Expr::coord(j)),
            );
        }
    }
    Expr::sum(terms)
}

/// Random symmetric metric close to the identity: positive definite on the
/// unit box, invertible everywhere sampled.
pub fn random_metric(chart: &Chart, rng: &mut ChaCha8Rng) -> MetricField {
    let n = chart.dim();
    let mut g = zero_mat(n);
    for i in 0..n {
        g[i][i] = Expr::constant(1.0 + rng.random_range(0.0..0.5))
            + random_poly(chart, rng, 0.08);
        for j in (i + 1)..n {
            let off = random_poly(chart, rng, 0.04);
            g[i][j] = off.clone();
            g[j][i] = off;
        }
    }
    MetricField::new(chart.clone(), g).expect("random metric should be invertible")
}

/// Random vector field of low-degree polynomials.
pub fn random_vector(chart: &Chart, rng: &mut ChaCha8Rng, amp: f64) -> Vec<Expr> {
    (0..chart.dim())
        .map(|_| random_poly(chart, rng, amp))
        .collect()
}

/// Fresh n-dimensional unit-box chart named x0..x(n-1).
pub fn box_chart(n: usize) -> Chart {
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Chart::new(&refs, &vec![(-1.0, 1.0); n]).unwrap()
}

/// Numeric n×n matrix of metric values at a point.
pub fn eval_mat(m: &Mat, point: &[f64]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|row| row.iter().map(|e| e.eval(point).unwrap()).collect())
        .collect()
}
