//! Randomized-sampling equivalence of expressions.
//!
//! Two expressions are declared equivalent when they agree at every drawn
//! sample point of the chart's domain box, within a combined
//! relative-plus-absolute tolerance. Sampling is seeded and deterministic.
//! This decides the engine's "identically zero" claims probabilistically:
//! the identities under test are polynomial or analytic, so agreement on a
//! few hundred random points leaves no realistic room for a counterexample.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::{Chart, Expr};

/// Sampling plan for equivalence checks.
#[derive(Clone, Copy, Debug)]
pub struct SamplePlan {
    pub sample_count: usize,
    pub seed: u64,
    /// Relative tolerance (must be < 1).
    pub tol: f64,
    /// Absolute comparison floor: differences below it never count as
    /// disagreement, which keeps cancellation roundoff from failing
    /// identities that are exactly zero in exact arithmetic.
    pub abs_floor: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            sample_count: 200,
            seed: 42,
            tol: 1e-9,
            abs_floor: 1e-12,
        }
    }
}

impl SamplePlan {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// `|a - b| <= max(tol * max(|a|, |b|), abs_floor)`.
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= f64::max(self.tol * f64::max(a.abs(), b.abs()), self.abs_floor)
    }
}

/// Outcome of an equivalence check.
#[derive(Clone, Debug, PartialEq)]
pub enum EquivVerdict {
    /// Agreement at every usable sample.
    Agree { samples: usize },
    /// Disagreement, with the witness point and both values.
    Disagree { point: Vec<f64>, lhs: f64, rhs: f64 },
    /// Every sample hit an evaluation failure; no verdict possible.
    Indeterminate { failures: usize },
}

impl EquivVerdict {
    pub fn is_agree(&self) -> bool {
        matches!(self, EquivVerdict::Agree { .. })
    }
}

/// Draws `plan.sample_count` points uniformly from the chart's domain box,
/// avoiding guard bands around declared singular loci.
pub fn sample_points(chart: &Chart, plan: &SamplePlan) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut points = Vec::with_capacity(plan.sample_count);
    for _ in 0..plan.sample_count {
        let mut p = Vec::with_capacity(chart.dim());
        for (i, &(lo, hi)) in chart.domains().iter().enumerate() {
            let loci = chart.singular_loci(i);
            let mut x = rng.random_range(lo..hi);
            if !loci.is_empty() {
                let mut tries = 0;
                while loci.iter().any(|&s| (x - s).abs() < chart.guard()) && tries < 200 {
                    x = rng.random_range(lo..hi);
                    tries += 1;
                }
            }
            p.push(x);
        }
        points.push(p);
    }
    points
}

/// Seeded sampling verdict on `a ≡ b` over the chart box.
pub fn equiv(a: &Expr, b: &Expr, chart: &Chart, plan: &SamplePlan) -> EquivVerdict {
    let mut failures = 0;
    let mut used = 0;
    for p in sample_points(chart, plan) {
        let (va, vb) = match (a.eval_shared(&p), b.eval_shared(&p)) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => (x, y),
            _ => {
                failures += 1;
                continue;
            }
        };
        used += 1;
        if !plan.close(va, vb) {
            return EquivVerdict::Disagree {
                point: p,
                lhs: va,
                rhs: vb,
            };
        }
    }
    if used == 0 {
        EquivVerdict::Indeterminate { failures }
    } else {
        EquivVerdict::Agree { samples: used }
    }
}

/// Convenience: verdict on `e ≡ 0`.
pub fn equiv_zero(e: &Expr, chart: &Chart, plan: &SamplePlan) -> EquivVerdict {
    equiv(e, &Expr::zero(), chart, plan)
}

/// Componentwise verdict over a flat list of pairs; returns the first
/// disagreement or indeterminacy encountered.
pub fn equiv_all<'a, I>(pairs: I, chart: &Chart, plan: &SamplePlan) -> EquivVerdict
where
    I: IntoIterator<Item = (&'a Expr, &'a Expr)>,
{
    let mut total = 0;
    for (a, b) in pairs {
        match equiv(a, b, chart, plan) {
            EquivVerdict::Agree { samples } => total += samples,
            other => return other,
        }
    }
    EquivVerdict::Agree { samples: total }
}

/// Max and mean of `|e|` over the plan's samples, skipping failed
/// evaluations. Returns `None` if nothing evaluated.
pub fn residual_stats(e: &Expr, chart: &Chart, plan: &SamplePlan) -> Option<(f64, f64)> {
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for p in sample_points(chart, plan) {
        if let Ok(v) = e.eval_shared(&p) {
            if v.is_finite() {
                max = max.max(v.abs());
                sum += v.abs();
                n += 1;
            }
        }
    }
    (n > 0).then(|| (max, sum / n as f64))
}
