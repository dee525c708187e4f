//! Connections, Ricci tensors, covariant derivatives and the mixed field
//! `f_m^s = g̃^{is} g_{im}` for a chart carrying a covariant metric together
//! with an independently chosen contravariant field.
//!
//! All index conventions follow the component formulas documented on each
//! operation; connection coefficients are stored `[upper][lower1][lower2]`.

use thiserror::Error;

use crate::equiv::{equiv, EquivVerdict, SamplePlan};
use crate::expr::{Chart, Expr};
use crate::Convention;

pub type Mat = Vec<Vec<Expr>>;
pub type Rank3 = Vec<Vec<Vec<Expr>>>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric is not symmetric at entry ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("matrix has {got} rows, chart dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("metric is numerically singular at the chart midpoint (|det| = {0:.3e})")]
    MidpointSingular(f64),
    #[error("symbolic determinant is identically zero")]
    SingularSymbolic,
    #[error(
        "factorized contravariant field V^i V^j has rank 1 and admits no inverse for n >= 2"
    )]
    RankDeficient,
    #[error("operation requires a factorized contravariant field")]
    NotFactorized,
    #[error("operation requires an invertible (general) contravariant field")]
    NotGeneral,
    #[error("supplied pair is inconsistent: gbar * gt differs from the identity {0:?}")]
    ContractViolation(EquivVerdict),
    #[error("midpoint evaluation failed: {0}")]
    Eval(#[from] crate::expr::EvalError),
}

/// Allocates an n×n matrix of zero expressions.
pub fn zero_mat(n: usize) -> Mat {
    vec![vec![Expr::zero(); n]; n]
}

/// Allocates an n×n×n array of zero expressions.
pub fn zero_rank3(n: usize) -> Rank3 {
    vec![vec![vec![Expr::zero(); n]; n]; n]
}

/// Identity matrix as expressions.
pub fn identity_mat(n: usize) -> Mat {
    let mut m = zero_mat(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Expr::one();
    }
    m
}

/// Symbolic determinant by Laplace expansion along the first row. Structural
/// zeros propagate, so sparse (e.g. diagonal) matrices stay small.
pub fn sym_det(m: &Mat) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Mat = (1..n)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let cof = sym_det(&minor);
        let signed = if j % 2 == 0 {
            m[0][j].clone()
        } else {
            Expr::neg(m[0][j].clone())
        };
        terms.push(signed * cof);
    }
    Expr::sum(terms)
}

/// Symbolic inverse via adjugate over determinant, every entry a quotient
/// expression so downstream derivatives stay exact.
pub fn sym_inverse(m: &Mat) -> Result<Mat, GeometryError> {
    let n = m.len();
    let det = sym_det(m);
    if det.is_zero() {
        return Err(GeometryError::SingularSymbolic);
    }
    let mut inv = zero_mat(n);
    for i in 0..n {
        for j in 0..n {
            // adjugate: cofactor of (j, i)
            let minor: Mat = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = if n == 1 {
                Expr::one()
            } else {
                sym_det(&minor)
            };
            let signed = if (i + j) % 2 == 0 {
                cof
            } else {
                Expr::neg(cof)
            };
            inv[i][j] = Expr::div(signed, det.clone());
        }
    }
    Ok(inv)
}

/// Matrix of partials `dg[i][j][k] = ∂_k g_ij`.
pub fn mat_partials(g: &Mat) -> Rank3 {
    let n = g.len();
    let mut dg = zero_rank3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                dg[i][j][k] = g[i][j].diff(k);
            }
        }
    }
    dg
}

/// Symmetric covariant metric `g_ij` on a chart.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Chart,
    g: Mat,
}

impl MetricField {
    /// Validates symmetry (structural equality after normalization) and
    /// numeric invertibility at the chart midpoint.
    pub fn new(chart: Chart, g: Mat) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(GeometryError::Dimension {
                got: g.len(),
                expected: n,
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if g[i][j] != g[j][i] {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        let field = MetricField { chart, g };
        let det = field.det_at(&field.chart.midpoint())?;
        if det.abs() <= 1e-12 {
            return Err(GeometryError::MidpointSingular(det.abs()));
        }
        Ok(field)
    }

    /// Diagonal metric from the given entries.
    pub fn diagonal(chart: Chart, entries: Vec<Expr>) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if entries.len() != n {
            return Err(GeometryError::Dimension {
                got: entries.len(),
                expected: n,
            });
        }
        let mut g = zero_mat(n);
        for (i, e) in entries.into_iter().enumerate() {
            g[i][i] = e;
        }
        MetricField::new(chart, g)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> &Mat {
        &self.g
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    pub fn det(&self) -> Expr {
        sym_det(&self.g)
    }

    fn det_at(&self, point: &[f64]) -> Result<f64, crate::expr::EvalError> {
        self.det().eval(point)
    }

    pub fn inverse(&self) -> Result<Mat, GeometryError> {
        sym_inverse(&self.g)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.g[i][j].is_zero()))
    }
}

/// The independent contravariant field `g̃^ij`.
#[derive(Clone, Debug)]
pub enum ContravariantKind {
    /// The matrix inverse of the carried metric: standard gravity.
    Inverse(MetricField),
    /// A general symmetric matrix of expressions.
    General(Mat),
    /// The factorized outer product `V^i V^j`, optionally carrying the
    /// second-differential components `d2`.
    Factorized { v: Vec<Expr>, d2: Option<Vec<Expr>> },
}

#[derive(Clone, Debug)]
pub struct ContravariantField {
    chart: Chart,
    kind: ContravariantKind,
}

impl ContravariantField {
    pub fn inverse_of(g: &MetricField) -> Self {
        ContravariantField {
            chart: g.chart().clone(),
            kind: ContravariantKind::Inverse(g.clone()),
        }
    }

    pub fn general(chart: Chart, m: Mat) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if m.len() != n || m.iter().any(|row| row.len() != n) {
            return Err(GeometryError::Dimension {
                got: m.len(),
                expected: n,
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i][j] != m[j][i] {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        Ok(ContravariantField {
            chart,
            kind: ContravariantKind::General(m),
        })
    }

    pub fn factorized(
        chart: Chart,
        v: Vec<Expr>,
        d2: Option<Vec<Expr>>,
    ) -> Result<Self, GeometryError> {
        let n = chart.dim();
        if v.len() != n {
            return Err(GeometryError::Dimension {
                got: v.len(),
                expected: n,
            });
        }
        if let Some(d) = &d2 {
            if d.len() != n {
                return Err(GeometryError::Dimension {
                    got: d.len(),
                    expected: n,
                });
            }
        }
        Ok(ContravariantField {
            chart,
            kind: ContravariantKind::Factorized { v, d2 },
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn kind(&self) -> &ContravariantKind {
        &self.kind
    }

    pub fn is_factorized(&self) -> bool {
        matches!(self.kind, ContravariantKind::Factorized { .. })
    }

    pub fn factor(&self) -> Option<&[Expr]> {
        match &self.kind {
            ContravariantKind::Factorized { v, .. } => Some(v),
            _ => None,
        }
    }

    pub fn second_differential(&self) -> Option<&[Expr]> {
        match &self.kind {
            ContravariantKind::Factorized { d2, .. } => d2.as_deref(),
            _ => None,
        }
    }

    /// Materializes the component matrix.
    pub fn matrix(&self) -> Result<Mat, GeometryError> {
        match &self.kind {
            ContravariantKind::Inverse(g) => g.inverse(),
            ContravariantKind::General(m) => Ok(m.clone()),
            ContravariantKind::Factorized { v, .. } => {
                let n = v.len();
                let mut m = zero_mat(n);
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] = &v[i] * &v[j];
                    }
                }
                Ok(m)
            }
        }
    }

    /// Divergence `p = Σ_l ∂_l V^l` of the factorized vector field.
    pub fn divergence(&self) -> Result<Expr, GeometryError> {
        match &self.kind {
            ContravariantKind::Factorized { v, .. } => {
                Ok(Expr::sum(v.iter().enumerate().map(|(l, e)| e.diff(l)).collect()))
            }
            _ => Err(GeometryError::NotFactorized),
        }
    }
}

/// Rank-3 connection coefficients, symmetric in the two lower indices.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    chart: Chart,
    coeffs: Rank3,
}

impl ConnectionField {
    pub fn new(chart: Chart, coeffs: Rank3) -> Self {
        ConnectionField { chart, coeffs }
    }

    pub fn zero(chart: Chart) -> Self {
        let n = chart.dim();
        ConnectionField {
            chart,
            coeffs: zero_rank3(n),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coeffs(&self) -> &Rank3 {
        &self.coeffs
    }

    pub fn entry(&self, upper: usize, lo1: usize, lo2: usize) -> &Expr {
        &self.coeffs[upper][lo1][lo2]
    }

    pub fn is_lower_symmetric(&self) -> bool {
        let n = self.chart.dim();
        (0..n).all(|u| (0..n).all(|a| (a..n).all(|b| self.coeffs[u][a][b] == self.coeffs[u][b][a])))
    }
}

/// Christoffel symbols of the first kind:
/// `Γ_{i;kl} = ½ (g_{ik,l} + g_{il,k} − g_{kl,i})`, stored `[i][k][l]`.
pub fn christoffel_first(g: &MetricField) -> Rank3 {
    let n = g.dim();
    let dg = mat_partials(g.components());
    let mut out = zero_rank3(n);
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                out[i][k][l] = Expr::half()
                    * (&(&dg[i][k][l] + &dg[i][l][k]) - &dg[k][l][i]);
            }
        }
    }
    out
}

/// Christoffel connection of the second kind:
/// `Γ^l_{ik} = ½ g^{ls} (g_{ks,i} + g_{is,k} − g_{ik,s})`.
pub fn christoffel_second(g: &MetricField) -> Result<ConnectionField, GeometryError> {
    let n = g.dim();
    let ginv = g.inverse()?;
    let first = christoffel_first(g);
    let mut coeffs = zero_rank3(n);
    for l in 0..n {
        for i in 0..n {
            for k in 0..n {
                coeffs[l][i][k] = Expr::sum(
                    (0..n)
                        .map(|s| &ginv[l][s] * &first[s][i][k])
                        .collect(),
                );
            }
        }
    }
    Ok(ConnectionField::new(g.chart().clone(), coeffs))
}

/// The tilde connection `Γ̃^s_{kl} = g̃^{is} Γ_{i;kl}`: first-kind symbols
/// contracted with the independent contravariant field instead of the true
/// inverse. Collapses to [`christoffel_second`] when `gt` is that inverse.
pub fn tilde_connection(
    g: &MetricField,
    gt: &ContravariantField,
) -> Result<ConnectionField, GeometryError> {
    let n = g.dim();
    let gtm = gt.matrix()?;
    let first = christoffel_first(g);
    let mut coeffs = zero_rank3(n);
    for s in 0..n {
        for k in 0..n {
            for l in 0..n {
                coeffs[s][k][l] = Expr::sum(
                    (0..n)
                        .map(|i| &gtm[i][s] * &first[i][k][l])
                        .collect(),
                );
            }
        }
    }
    Ok(ConnectionField::new(g.chart().clone(), coeffs))
}

/// Ricci tensor of an arbitrary symmetric connection:
/// `R_ik = ∂_l Γ^l_{ik} − ∂_k Γ^l_{il} + Γ^l_{ik} Γ^m_{lm} − Γ^m_{il} Γ^l_{km}`.
pub fn ricci(conn: &ConnectionField) -> Mat {
    let n = conn.chart().dim();
    let c = conn.coeffs();
    let mut out = zero_mat(n);
    for i in 0..n {
        for k in 0..n {
            let mut terms = Vec::new();
            for l in 0..n {
                terms.push(c[l][i][k].diff(l));
                terms.push(Expr::neg(c[l][i][l].diff(k)));
                for m in 0..n {
                    terms.push(&c[l][i][k] * &c[m][l][m]);
                    terms.push(Expr::neg(&c[m][i][l] * &c[l][k][m]));
                }
            }
            out[i][k] = Expr::sum(terms);
        }
    }
    out
}

/// Covariant derivative of the covariant metric with respect to an arbitrary
/// connection: `∇_k g_ij = g_{ij,k} − Γ^l_{k(i} g_{j)l}`, the bracket expanded
/// as the two-term sum. Output indexed `[i][j][k]`.
pub fn cov_deriv_metric(g: &MetricField, conn: &ConnectionField, conv: Convention) -> Rank3 {
    let n = g.dim();
    let gm = g.components();
    let c = conn.coeffs();
    let f = conv.factor_expr();
    let mut out = zero_rank3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut sym = Vec::new();
                for l in 0..n {
                    sym.push(&c[l][k][i] * &gm[j][l]);
                    sym.push(&c[l][k][j] * &gm[i][l]);
                }
                out[i][j][k] = gm[i][j].diff(k) - f.clone() * Expr::sum(sym);
            }
        }
    }
    out
}

/// Sign choice for the connection terms in [`cov_deriv_contra`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ContraDerivSign {
    /// `∇_k g̃^{ij} = g̃^{ij}_{,k} + g̃^{r(i} g̃^{j)s} Γ_{r;sk}` as written.
    #[default]
    Plus,
    /// Same expansion with the connection terms negated.
    Minus,
}

/// Covariant derivative of the contravariant field, bracket expanded as the
/// two-term sum. With the default `Plus` sign and the `Paper` convention the
/// result vanishes when `gt` is the true inverse of the metric that produced
/// `gamma_first`. Output indexed `[i][j][k]`.
pub fn cov_deriv_contra(
    gt: &ContravariantField,
    gamma_first: &Rank3,
    conv: Convention,
    sign: ContraDerivSign,
) -> Result<Rank3, GeometryError> {
    let n = gt.chart().dim();
    let gtm = gt.matrix()?;
    let f = conv.factor_expr();
    let mut out = zero_rank3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut terms = Vec::new();
                for r in 0..n {
                    for s in 0..n {
                        terms.push(&(&gtm[r][i] * &gtm[j][s]) * &gamma_first[r][s][k]);
                        terms.push(&(&gtm[r][j] * &gtm[i][s]) * &gamma_first[r][s][k]);
                    }
                }
                let contracted = f.clone() * Expr::sum(terms);
                let signed = match sign {
                    ContraDerivSign::Plus => contracted,
                    ContraDerivSign::Minus => Expr::neg(contracted),
                };
                out[i][j][k] = gtm[i][j].diff(k) + signed;
            }
        }
    }
    Ok(out)
}

/// Mixed field `f_m^s = g̃^{is} g_{im}`, stored `[s][m]` (upper index first).
/// Equals the identity exactly when `gt` is the inverse of `g`.
pub fn mixed_field(g: &MetricField, gt: &ContravariantField) -> Result<Mat, GeometryError> {
    let n = g.dim();
    let gtm = gt.matrix()?;
    let gm = g.components();
    let mut out = zero_mat(n);
    for s in 0..n {
        for m in 0..n {
            out[s][m] = Expr::sum((0..n).map(|i| &gtm[i][s] * &gm[i][m]).collect());
        }
    }
    Ok(out)
}

/// Inverts the contravariant field into a new covariant metric `ḡ` with
/// `ḡ_{ij} g̃^{jk} = δ_i^k`. Factorized fields are rank 1 and rejected for
/// n ≥ 2.
pub fn inverse_of_contravariant(gt: &ContravariantField) -> Result<MetricField, GeometryError> {
    match gt.kind() {
        ContravariantKind::Factorized { v, .. } if v.len() >= 2 => {
            return Err(GeometryError::RankDeficient)
        }
        _ => {}
    }
    let m = gt.matrix()?;
    let inv = sym_inverse(&m)?;
    MetricField::new(gt.chart().clone(), inv)
}

/// The contravariant-side connection built from the pair `(g̃, ḡ)`:
/// `Γ̄^s_{kl} = ½ g̃^{is} (ḡ_{ik,l} + ḡ_{il,k} − ḡ_{kl,i})`.
/// The pair must satisfy `ḡ g̃ = δ`; checked by sampling before assembly.
pub fn overline_connection(
    gt: &ContravariantField,
    gbar: &MetricField,
    plan: &SamplePlan,
) -> Result<ConnectionField, GeometryError> {
    let n = gbar.dim();
    let gtm = gt.matrix()?;
    let gbm = gbar.components();
    for i in 0..n {
        for k in 0..n {
            let prod = Expr::sum((0..n).map(|j| &gbm[i][j] * &gtm[j][k]).collect());
            let delta = if i == k { Expr::one() } else { Expr::zero() };
            let verdict = equiv(&prod, &delta, gbar.chart(), plan);
            if !verdict.is_agree() {
                return Err(GeometryError::ContractViolation(verdict));
            }
        }
    }
    let first = christoffel_first(gbar);
    let mut coeffs = zero_rank3(n);
    for s in 0..n {
        for k in 0..n {
            for l in 0..n {
                coeffs[s][k][l] =
                    Expr::sum((0..n).map(|i| &gtm[i][s] * &first[i][k][l]).collect());
            }
        }
    }
    Ok(ConnectionField::new(gbar.chart().clone(), coeffs))
}
