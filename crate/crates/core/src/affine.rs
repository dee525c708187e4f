//! Affine transformation-law checks for the tilde connection: the necessary
//! condition on a coordinate map, the two-dimensional case analysis, and the
//! equiaffine (parallel-volume) property tested through the integrability of
//! the trace covector.

use thiserror::Error;

use crate::equiv::{equiv, equiv_zero, SamplePlan};
use crate::expr::{Chart, Expr};
use crate::geometry::{zero_mat, zero_rank3, Mat, MetricField, Rank3};

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("operation needs the inverse map (second derivatives of x(X))")]
    MissingInverse,
    #[error("operation is defined for two-dimensional maps, got n = {0}")]
    NotTwoDimensional(usize),
    #[error("map has {got} component expressions, chart dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("integral-curve constants must not all vanish")]
    ZeroConstants,
}

/// A coordinate transformation `X = X(x)` with an optional exact inverse
/// `x = x(X)`. Forward components live on the source chart, inverse
/// components on the target chart.
#[derive(Clone, Debug)]
pub struct CoordinateMap {
    source: Chart,
    target: Chart,
    forward: Vec<Expr>,
    inverse: Option<Vec<Expr>>,
}

impl CoordinateMap {
    pub fn new(
        source: Chart,
        target: Chart,
        forward: Vec<Expr>,
        inverse: Option<Vec<Expr>>,
    ) -> Result<Self, AffineError> {
        let n = source.dim();
        if target.dim() != n || forward.len() != n {
            return Err(AffineError::Dimension {
                got: forward.len(),
                expected: n,
            });
        }
        if let Some(inv) = &inverse {
            if inv.len() != n {
                return Err(AffineError::Dimension {
                    got: inv.len(),
                    expected: n,
                });
            }
        }
        Ok(CoordinateMap {
            source,
            target,
            forward,
            inverse,
        })
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn forward(&self) -> &[Expr] {
        &self.forward
    }

    pub fn inverse(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    fn inverse_or_err(&self) -> Result<&[Expr], AffineError> {
        self.inverse.as_deref().ok_or(AffineError::MissingInverse)
    }

    /// Pulls a source-chart expression onto the target chart by substituting
    /// `x = x(X)`.
    pub fn pull_to_target(&self, e: &Expr) -> Result<Expr, AffineError> {
        Ok(e.substitute(self.inverse_or_err()?))
    }

    /// Sampled check that `X(x(X))` is the identity on the target domain.
    pub fn check_round_trip(&self, plan: &SamplePlan) -> Result<bool, AffineError> {
        let inv = self.inverse_or_err()?;
        for (i, f) in self.forward.iter().enumerate() {
            let composed = f.substitute(inv);
            if !equiv(&composed, &Expr::coord(i), &self.target, plan).is_agree() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `∂x^m/∂X^i` over the target chart.
    fn inverse_jacobian(&self) -> Result<Mat, AffineError> {
        let inv = self.inverse_or_err()?;
        let n = self.source.dim();
        let mut j = zero_mat(n);
        for m in 0..n {
            for i in 0..n {
                j[m][i] = inv[m].diff(i);
            }
        }
        Ok(j)
    }

    /// `∂²x^m/∂X^i∂X^j` over the target chart.
    fn inverse_hessians(&self) -> Result<Rank3, AffineError> {
        let inv = self.inverse_or_err()?;
        let n = self.source.dim();
        let mut h = zero_rank3(n);
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    h[m][i][j] = inv[m].diff(i).diff(j);
                }
            }
        }
        Ok(h)
    }

    /// `∂X^k/∂x^α` composed onto the target chart.
    fn forward_jacobian_on_target(&self) -> Result<Mat, AffineError> {
        let inv = self.inverse_or_err()?;
        let n = self.source.dim();
        let mut j = zero_mat(n);
        for k in 0..n {
            for a in 0..n {
                j[k][a] = self.forward[k].diff(a).substitute(inv);
            }
        }
        Ok(j)
    }
}

/// Vector of constants pinned along the integral curves of the
/// two-dimensional case analysis.
#[derive(Clone, Debug)]
pub struct IntegralCurveConstants {
    pub c: Vec<f64>,
}

impl IntegralCurveConstants {
    pub fn new(c: Vec<f64>) -> Result<Self, AffineError> {
        if c.iter().all(|&x| x == 0.0) {
            return Err(AffineError::ZeroConstants);
        }
        Ok(IntegralCurveConstants { c })
    }
}

/// The necessary condition for the tilde connection to transform as an
/// affine connection under the map, as a rank-3 array over the target chart
/// (indexed `[k][i][j]`):
///
/// `dx^α dx^β g_{mβ} ∂²x^m/(∂X^i ∂X^j) ∂X^k/∂x^α − ∂²x^α/(∂X^i ∂X^j) ∂X^k/∂x^α`
///
/// The free differentials `dx^α` are realized by the supplied vector field
/// `V` pulled onto the target chart. Vanishes identically for affine-linear
/// maps, whose second derivatives are zero.
pub fn affine_condition_residual(
    map: &CoordinateMap,
    g: &MetricField,
    v: &[Expr],
) -> Result<Rank3, AffineError> {
    let n = map.source.dim();
    let inv = map.inverse_or_err()?;
    let hess = map.inverse_hessians()?;
    let jfwd = map.forward_jacobian_on_target()?;
    let vt: Vec<Expr> = v.iter().map(|e| e.substitute(inv)).collect();
    let gt: Mat = g
        .components()
        .iter()
        .map(|row| row.iter().map(|e| e.substitute(inv)).collect())
        .collect();
    let mut out = zero_rank3(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        for m in 0..n {
                            terms.push(
                                &(&(&vt[a] * &vt[b]) * &gt[m][b])
                                    * &(&hess[m][i][j] * &jfwd[k][a]),
                            );
                        }
                    }
                    terms.push(Expr::neg(&hess[a][i][j] * &jfwd[k][a]));
                }
                out[k][i][j] = Expr::sum(terms);
            }
        }
    }
    Ok(out)
}

/// The four `M^{(kn)lij} = ∂x^k/∂X^l · ∂²x^n/∂X^i∂X^j` arrays and the
/// combination `T^{lij} = ∂x²/∂X^l ∂²x¹ − ∂x¹/∂X^l ∂²x²` of the
/// two-dimensional case analysis. Indices are zero-based: `m[k][n][l][i][j]`.
pub struct MTensors {
    pub m: Vec<Vec<Rank3>>,
    pub t: Rank3,
}

pub fn m_tensors(map: &CoordinateMap) -> Result<MTensors, AffineError> {
    let n = map.source.dim();
    if n != 2 {
        return Err(AffineError::NotTwoDimensional(n));
    }
    let jac = map.inverse_jacobian()?;
    let hess = map.inverse_hessians()?;
    let mut m = vec![vec![zero_rank3(2); 2]; 2];
    for k in 0..2 {
        for nn in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        m[k][nn][l][i][j] = &jac[k][l] * &hess[nn][i][j];
                    }
                }
            }
        }
    }
    let mut t = zero_rank3(2);
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                t[l][i][j] = &(&jac[1][l] * &hess[0][i][j]) - &(&jac[0][l] * &hess[1][i][j]);
            }
        }
    }
    Ok(MTensors { m, t })
}

impl MTensors {
    /// First/last antisymmetrization `T^{lij} − T^{jil}`; equals
    /// `∂_i {x¹,x²}_{X^j,X^l}`.
    pub fn t_antisymmetrized(&self, l: usize, i: usize, j: usize) -> Expr {
        &self.t[l][i][j] - &self.t[j][i][l]
    }

    /// First/last symmetrization `M^{(kk)lij} + M^{(kk)jil}`; equals
    /// `∂_i [∂x^k/∂X^l · ∂x^k/∂X^j]`.
    pub fn m_symmetrized(&self, k: usize, l: usize, i: usize, j: usize) -> Expr {
        &self.m[k][k][l][i][j] + &self.m[k][k][j][i][l]
    }

    /// Antisymmetrization over the second-derivative index pair,
    /// `M^{(kk)lij} − M^{(kk)lji}`; identically zero because mixed partials
    /// commute.
    pub fn m_antisymmetrized(&self, k: usize, l: usize, i: usize, j: usize) -> Expr {
        &self.m[k][k][l][i][j] - &self.m[k][k][l][j][i]
    }
}

/// One-dimensional Poisson bracket
/// `{x¹,x²}_{X^j,X^l} = ∂x¹/∂X^j ∂x²/∂X^l − ∂x¹/∂X^l ∂x²/∂X^j`.
pub fn poisson_bracket_1d(map: &CoordinateMap, j: usize, l: usize) -> Result<Expr, AffineError> {
    let n = map.source.dim();
    if n != 2 {
        return Err(AffineError::NotTwoDimensional(n));
    }
    let jac = map.inverse_jacobian()?;
    Ok(&(&jac[0][j] * &jac[1][l]) - &(&jac[0][l] * &jac[1][j]))
}

/// Verdict of the two-dimensional case analysis: which of the three
/// sufficient conditions for the affine transformation law hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoDimCases {
    /// The generalized coordinates do not depend on the first source
    /// coordinate.
    pub independent_of_x1: bool,
    /// The Poisson bracket is constant (all its target derivatives vanish).
    /// `None` when the map carries no inverse, which the bracket needs.
    pub bracket_constant: Option<bool>,
    /// `C₁² g₁₁ − C₂² g₂₂ ≡ 0` pointwise.
    pub metric_balance: bool,
}

pub fn twodim_case_classifier(
    map: &CoordinateMap,
    g: &MetricField,
    constants: &IntegralCurveConstants,
    plan: &SamplePlan,
) -> Result<TwoDimCases, AffineError> {
    let n = map.source.dim();
    if n != 2 {
        return Err(AffineError::NotTwoDimensional(n));
    }
    let independent_of_x1 = map
        .forward
        .iter()
        .all(|f| equiv_zero(&f.diff(0), &map.source, plan).is_agree());

    let bracket_constant = if map.inverse.is_some() {
        let mut constant = true;
        'outer: for j in 0..2 {
            for l in 0..2 {
                let bracket = poisson_bracket_1d(map, j, l)?;
                for i in 0..2 {
                    if !equiv_zero(&bracket.diff(i), &map.target, plan).is_agree() {
                        constant = false;
                        break 'outer;
                    }
                }
            }
        }
        Some(constant)
    } else {
        None
    };

    let c1 = Expr::constant(constants.c[0]);
    let c2 = Expr::constant(constants.c[1]);
    let balance = &(&(&c1 * &c1) * g.entry(0, 0)) - &(&(&c2 * &c2) * g.entry(1, 1));
    let metric_balance = equiv_zero(&balance, g.chart(), plan).is_agree();

    Ok(TwoDimCases {
        independent_of_x1,
        bracket_constant,
        metric_balance,
    })
}

/// Trace covector of the tilde connection,
/// `W_i = ½ V^s V^k g_{ks,i}`; coincides with `Γ̃^k_{ik}`.
pub fn equiaffine_weight(g: &MetricField, v: &[Expr]) -> Vec<Expr> {
    let n = g.dim();
    let gm = g.components();
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut terms = Vec::new();
        for s in 0..n {
            for k in 0..n {
                terms.push(&(&v[s] * &v[k]) * &gm[k][s].diff(i));
            }
        }
        w.push(Expr::half() * Expr::sum(terms));
    }
    w
}

/// The frozen-regime volume scalar `ln e = ½ V^k V^s g_{ks}` together with a
/// flag telling whether the field is actually frozen (all `∂_i V^k` vanish
/// structurally); only then is `∂_i ln e = W_i` exact.
#[derive(Clone, Debug)]
pub struct FrozenScalar {
    pub log_scale: Expr,
    pub frozen: bool,
}

pub fn equiaffine_scalar_frozen(g: &MetricField, v: &[Expr]) -> FrozenScalar {
    let n = g.dim();
    let gm = g.components();
    let mut terms = Vec::new();
    for k in 0..n {
        for s in 0..n {
            terms.push(&(&v[k] * &v[s]) * &gm[k][s]);
        }
    }
    let frozen = v.iter().all(|e| (0..n).all(|i| e.diff(i).is_zero()));
    FrozenScalar {
        log_scale: Expr::half() * Expr::sum(terms),
        frozen,
    }
}

/// Integrability obstruction of a covector:
/// `curl_{ij} = ∂_i W_j − ∂_j W_i`. A scalar potential exists on a simply
/// connected domain exactly when the curl vanishes.
pub fn equiaffine_integrability(w: &[Expr]) -> Mat {
    let n = w.len();
    let mut curl = zero_mat(n);
    for i in 0..n {
        for j in 0..n {
            curl[i][j] = &w[j].diff(i) - &w[i].diff(j);
        }
    }
    curl
}
