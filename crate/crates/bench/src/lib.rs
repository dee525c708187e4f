//! Shared fixtures for the benchmark targets; the crate exists only to host
//! `benches/`.

use dualmetric::expr::{Chart, Expr};
use dualmetric::geometry::MetricField;
use dualmetric::parse::parse;

pub fn polar_plane() -> MetricField {
    let chart = Chart::new(&["r", "phi"], &[(0.5, 3.0), (0.1, 6.0)]).unwrap();
    MetricField::diagonal(
        chart.clone(),
        vec![Expr::one(), parse("r^2", &chart).unwrap()],
    )
    .unwrap()
}

pub fn vacuum_4d() -> MetricField {
    let chart = Chart::new(
        &["t", "r", "theta", "phi"],
        &[(0.0, 1.0), (3.0, 10.0), (0.3, 2.8), (0.1, 6.2)],
    )
    .unwrap();
    MetricField::diagonal(
        chart.clone(),
        vec![
            parse("-(1 - 2/r)", &chart).unwrap(),
            parse("1/(1 - 2/r)", &chart).unwrap(),
            parse("r^2", &chart).unwrap(),
            parse("r^2*sin(theta)^2", &chart).unwrap(),
        ],
    )
    .unwrap()
}
