//! Algebraic residual equations for the two Lagrangian representations, the
//! factorized and general Einstein algebraic systems, the tensor length
//! scale, and the diagonal cubic coefficient extraction.
//!
//! Every assembly here is a literal transcription of one long component
//! formula; the matching tests carry independently coded numeric assemblies
//! so that transcription slips (the dominant risk) are caught by sampling.

use thiserror::Error;

use crate::equiv::{equiv, equiv_zero, EquivVerdict, SamplePlan};
use crate::expr::Expr;
use crate::geometry::{
    christoffel_second, mat_partials, mixed_field, ricci, zero_mat, ContravariantField,
    GeometryError, Mat, MetricField,
};
use crate::Convention;

#[derive(Debug, Error)]
pub enum AlgebraicError {
    #[error("operation requires a factorized contravariant field")]
    NotFactorized,
    #[error("operation requires a diagonal metric and diagonal contravariant field")]
    NotDiagonal,
    #[error("operation requires chart dimension 4, got {0}")]
    NotFourDimensional(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("midpoint evaluation failed: {0}")]
    Eval(#[from] crate::expr::EvalError),
}

/// Which contravariant field contracts the standard Ricci tensor in the
/// scalar term of the general reparametrization residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScalarContraction {
    /// `R := g̃^{ik} R_ik` with the supplied contravariant field (the
    /// first-representation contraction).
    #[default]
    WithContravariant,
    /// `R := g^{ik} R_ik` with the true inverse of the metric.
    Standard,
}

/// `√(−g)` as an expression. For Lorentzian metrics the determinant is
/// negative and the radicand is `−det g`; for Riemannian test metrics the
/// sign is flipped so the radicand stays positive (`√|det g|`). The sign is
/// frozen from the determinant's value at the chart midpoint.
pub fn sqrt_minus_det(g: &MetricField) -> Result<Expr, AlgebraicError> {
    let det = g.det();
    let mid = det.eval(&g.chart().midpoint())?;
    let radicand = if mid < 0.0 { Expr::neg(det) } else { det };
    Ok(Expr::sqrt(radicand))
}

/// First representation of the gravitational Lagrangian:
/// `L₁ = −√(−g) g̃^{ik} R_ik` with the standard Ricci tensor of `g`.
pub fn lagrangian_first(
    g: &MetricField,
    gt: &ContravariantField,
) -> Result<Expr, AlgebraicError> {
    let n = g.dim();
    let r = ricci(&christoffel_second(g)?);
    let gtm = gt.matrix()?;
    let mut terms = Vec::new();
    for i in 0..n {
        for k in 0..n {
            terms.push(&gtm[i][k] * &r[i][k]);
        }
    }
    Ok(Expr::neg(sqrt_minus_det(g)? * Expr::sum(terms)))
}

/// The contraction brace of the second representation, without the
/// `−√(−g)` prefactor:
/// `dX^i dX^l {p Γ^r_{il} g_{kr} dX^k − Γ^r_{ik} g_{lr} d²X^k −
/// Γ^r_{l(i} g_{k)r} d²X^k}`.
fn second_rep_brace(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Expr, AlgebraicError> {
    let v = gt.factor().ok_or(AlgebraicError::NotFactorized)?;
    let n = g.dim();
    let zero = vec![Expr::zero(); n];
    let d2 = gt.second_differential().unwrap_or(&zero);
    let p = gt.divergence()?;
    let gamma = christoffel_second(g)?;
    let c = gamma.coeffs();
    let gm = g.components();
    let f = conv.factor_expr();
    let mut terms = Vec::new();
    for i in 0..n {
        for l in 0..n {
            let vv = &v[i] * &v[l];
            if vv.is_zero() {
                continue;
            }
            for r in 0..n {
                for k in 0..n {
                    terms.push(&(&vv * &p) * &(&(&c[r][i][l] * &gm[k][r]) * &v[k]));
                    terms.push(Expr::neg(&vv * &(&(&c[r][i][k] * &gm[l][r]) * &d2[k])));
                    let sym = &(&c[r][l][i] * &gm[k][r]) + &(&c[r][l][k] * &gm[i][r]);
                    terms.push(Expr::neg(&vv * &(&(f.clone() * sym) * &d2[k])));
                }
            }
        }
    }
    Ok(Expr::sum(terms))
}

/// Second representation of the gravitational Lagrangian for the factorized
/// field `g̃^{ij} = dX^i dX^j`:
/// `L₂ = −√(−g) dX^i dX^l {p Γ^r_{il} g_{kr} dX^k − Γ^r_{ik} g_{lr} d²X^k −
/// Γ^r_{l(i} g_{k)r} d²X^k}`.
pub fn lagrangian_second(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Expr, AlgebraicError> {
    Ok(Expr::neg(
        sqrt_minus_det(g)? * second_rep_brace(g, gt, conv)?,
    ))
}

/// Cubic reparametrization residual for the factorized field: the brace of
/// [`lagrangian_second`] minus `dX^i dX^l R_il`. Zero exactly when the two
/// Lagrangian representations coincide.
pub fn reparam_residual_factorized(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Expr, AlgebraicError> {
    let v = gt.factor().ok_or(AlgebraicError::NotFactorized)?;
    let n = g.dim();
    let r = ricci(&christoffel_second(g)?);
    let mut ricci_part = Vec::new();
    for i in 0..n {
        for l in 0..n {
            ricci_part.push(&(&v[i] * &v[l]) * &r[i][l]);
        }
    }
    Ok(second_rep_brace(g, gt, conv)? - Expr::sum(ricci_part))
}

/// The quadratic tilde-connection combination
/// `−dX^i dX^k (Γ̃^l_{ik} Γ̃^m_{lm} − Γ̃^m_{il} Γ̃^l_{km})`.
///
/// For the factorized field this is identically zero: both products reduce
/// to the same total symmetrization of first-kind symbols against six `dX`
/// factors. The expression is returned unevaluated so the claim stays
/// testable by sampling.
pub fn quadratic_term_factorized(
    g: &MetricField,
    gt: &ContravariantField,
) -> Result<Expr, AlgebraicError> {
    let v = gt.factor().ok_or(AlgebraicError::NotFactorized)?;
    let n = g.dim();
    let tilde = crate::geometry::tilde_connection(g, gt)?;
    let c = tilde.coeffs();
    let mut terms = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let vv = &v[i] * &v[k];
            if vv.is_zero() {
                continue;
            }
            for l in 0..n {
                for m in 0..n {
                    terms.push(&vv * &(&c[l][i][k] * &c[m][l][m]));
                    terms.push(Expr::neg(&vv * &(&c[m][i][l] * &c[l][k][m])));
                }
            }
        }
    }
    Ok(Expr::neg(Expr::sum(terms)))
}

/// Ricci tensor assembled as the fourth-degree algebraic form in the
/// factorized variables:
///
/// `R_ik = dX^l [g_{is,l} ∂_k(dX^s) − ½ p g_{ik,l} + ½ g_{il,s} ∂_k(dX^s)]
///   + ½ dX^l dX^m dX^r dX^s [g_{m[k,t} g_{l]r,i} + g_{i[l,t} g_{mr,k]}
///   + 2 g_{t[k,i} g_{mr,l]}]`
///
/// The dangling derivative label `t` in the printed bracket is read as the
/// fourth contracted differential index `s`; that reading is provisional.
pub fn ricci_algebraic_factorized(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Mat, AlgebraicError> {
    let v = gt.factor().ok_or(AlgebraicError::NotFactorized)?;
    let n = g.dim();
    let p = gt.divergence()?;
    let dg = mat_partials(g.components());
    let dv: Vec<Vec<Expr>> = (0..n)
        .map(|s| (0..n).map(|k| v[s].diff(k)).collect())
        .collect();
    let f = conv.factor_expr();
    let half = Expr::half();
    let mut out = zero_mat(n);
    for i in 0..n {
        for k in 0..n {
            let mut terms = Vec::new();
            for l in 0..n {
                for s in 0..n {
                    terms.push(&v[l] * &(&dg[i][s][l] * &dv[s][k]));
                    terms.push(&half * &(&v[l] * &(&dg[i][l][s] * &dv[s][k])));
                }
                terms.push(Expr::neg(&half * &(&v[l] * &(&p * &dg[i][k][l]))));
            }
            for l in 0..n {
                for m in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let pre = &half * &(&(&v[l] * &v[m]) * &(&v[r] * &v[s]));
                            if pre.is_zero() {
                                continue;
                            }
                            let b1 = &(&dg[m][k][s] * &dg[l][r][i])
                                - &(&dg[m][l][s] * &dg[k][r][i]);
                            let b2 = &(&dg[i][l][s] * &dg[m][r][k])
                                - &(&dg[i][k][s] * &dg[m][r][l]);
                            let b3 = &(&dg[s][k][i] * &dg[m][r][l])
                                - &(&dg[s][l][i] * &dg[m][r][k]);
                            let bracket = Expr::sum(vec![
                                f.clone() * b1,
                                f.clone() * b2,
                                Expr::constant(2.0) * f.clone() * b3,
                            ]);
                            terms.push(pre * bracket);
                        }
                    }
                }
            }
            out[i][k] = Expr::sum(terms);
        }
    }
    Ok(out)
}

/// Vacuum field equations for the factorized field, assembled as the cubic
/// algebraic system
///
/// `R̃_ij − ½ g_ij R̃ = −½ p g_ij Γ^r_{mn} g_{kr} dX^k dX^m dX^n
///   + ½ g_ij (Γ^r_{km} g_{nr} + Γ^r_{n(m} g_{k)r}) d²X^k dX^m dX^n
///   + p Γ^r_{ij} g_{kr} dX^k − (Γ^r_{ik} g_{jr} + Γ^r_{j(i} g_{k)r}) d²X^k`.
pub fn einstein_algebraic_factorized(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Mat, AlgebraicError> {
    let v = gt.factor().ok_or(AlgebraicError::NotFactorized)?;
    let n = g.dim();
    let zero = vec![Expr::zero(); n];
    let d2 = gt.second_differential().unwrap_or(&zero);
    let p = gt.divergence()?;
    let gamma = christoffel_second(g)?;
    let c = gamma.coeffs();
    let gm = g.components();
    let f = conv.factor_expr();
    let half = Expr::half();

    // the two scalar blocks multiplying ½ g_ij
    let mut cubic_block = Vec::new();
    let mut d2_block = Vec::new();
    for k in 0..n {
        for m in 0..n {
            for nn in 0..n {
                for r in 0..n {
                    cubic_block
                        .push(&(&c[r][m][nn] * &gm[k][r]) * &(&(&v[k] * &v[m]) * &v[nn]));
                    let sym = &(&c[r][nn][m] * &gm[k][r]) + &(&c[r][nn][k] * &gm[m][r]);
                    let coeff = &(&c[r][k][m] * &gm[nn][r]) + &(f.clone() * sym);
                    d2_block.push(&coeff * &(&(&d2[k] * &v[m]) * &v[nn]));
                }
            }
        }
    }
    let cubic_block = Expr::sum(cubic_block);
    let d2_block = Expr::sum(d2_block);

    let mut out = zero_mat(n);
    for i in 0..n {
        for j in 0..n {
            let mut terms = Vec::new();
            terms.push(Expr::neg(&(&half * &p) * &(&gm[i][j] * &cubic_block)));
            terms.push(&half * &(&gm[i][j] * &d2_block));
            for r in 0..n {
                for k in 0..n {
                    terms.push(&p * &(&(&c[r][i][j] * &gm[k][r]) * &v[k]));
                    let sym = &(&c[r][j][i] * &gm[k][r]) + &(&c[r][j][k] * &gm[i][r]);
                    let coeff = &(&c[r][i][k] * &gm[j][r]) + &(f.clone() * sym);
                    terms.push(Expr::neg(&coeff * &d2[k]));
                }
            }
            out[i][j] = Expr::sum(terms);
        }
    }
    Ok(out)
}

// The three scalar contraction groups of the general reparametrization
// residual; shared with the trace part of the general Einstein system.
fn general_contraction_groups(
    g: &MetricField,
    gtm: &Mat,
    conv: Convention,
) -> Result<Expr, AlgebraicError> {
    let n = g.dim();
    let gamma = christoffel_second(g)?;
    let c = gamma.coeffs();
    let gm = g.components();
    let f = conv.factor_expr();
    let mut terms = Vec::new();
    // g̃^{i[k} g̃^{l]s}_{,l} Γ^r_{ik} g_{rs}  and  g̃^{i[k} g̃^{l]s} (Γ^r_{ik} g_{rs})_{,l}
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for s in 0..n {
                    for r in 0..n {
                        if gm[r][s].is_zero() {
                            continue;
                        }
                        let anti_d = &(&gtm[i][k] * &gtm[l][s].diff(l))
                            - &(&gtm[i][l] * &gtm[k][s].diff(l));
                        terms.push(&(f.clone() * anti_d) * &(&c[r][i][k] * &gm[r][s]));
                        let anti = &(&gtm[i][k] * &gtm[l][s]) - &(&gtm[i][l] * &gtm[k][s]);
                        terms.push(&(f.clone() * anti) * &(&c[r][i][k] * &gm[r][s]).diff(l));
                    }
                }
            }
        }
    }
    // g̃^{ik} g̃^{ls} g̃^{mr} g_{pr} g_{qs} (Γ^q_{ik} Γ^p_{lm} − Γ^p_{il} Γ^q_{km})
    for i in 0..n {
        for k in 0..n {
            if gtm[i][k].is_zero() {
                continue;
            }
            for l in 0..n {
                for s in 0..n {
                    if gtm[l][s].is_zero() {
                        continue;
                    }
                    for m in 0..n {
                        for r in 0..n {
                            if gtm[m][r].is_zero() {
                                continue;
                            }
                            let pre = &(&gtm[i][k] * &gtm[l][s]) * &gtm[m][r];
                            for pp in 0..n {
                                for q in 0..n {
                                    let weight = &gm[pp][r] * &gm[q][s];
                                    if weight.is_zero() {
                                        continue;
                                    }
                                    let prod = &(&c[q][i][k] * &c[pp][l][m])
                                        - &(&c[pp][i][l] * &c[q][k][m]);
                                    terms.push(&(&pre * &weight) * &prod);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Expr::sum(terms))
}

fn scalar_ricci_term(
    g: &MetricField,
    gtm: &Mat,
    mode: ScalarContraction,
) -> Result<Expr, AlgebraicError> {
    let n = g.dim();
    let r = ricci(&christoffel_second(g)?);
    let contract = |m: &Mat| {
        let mut terms = Vec::new();
        for i in 0..n {
            for k in 0..n {
                terms.push(&m[i][k] * &r[i][k]);
            }
        }
        Expr::sum(terms)
    };
    Ok(match mode {
        ScalarContraction::WithContravariant => contract(gtm),
        ScalarContraction::Standard => contract(&g.inverse()?),
    })
}

/// Reparametrization residual for a generally chosen contravariant field:
///
/// `g̃^{i[k} g̃^{l]s}_{,l} Γ^r_{ik} g_{rs} + g̃^{i[k} g̃^{l]s} (Γ^r_{ik} g_{rs})_{,l}
///  + g̃^{ik} g̃^{ls} g̃^{mr} g_{pr} g_{qs} (Γ^q_{ik} Γ^p_{lm} − Γ^p_{il} Γ^q_{km}) − R`
///
/// Vanishes identically when `gt` is the true inverse of `g` (the two
/// Lagrangian representations coincide in standard gravity).
pub fn reparam_residual_general(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
    mode: ScalarContraction,
) -> Result<Expr, AlgebraicError> {
    let gtm = gt.matrix()?;
    let groups = general_contraction_groups(g, &gtm, conv)?;
    let r = scalar_ricci_term(g, &gtm, mode)?;
    Ok(groups - r)
}

/// General Einstein algebraic system `R̃_ij − ½ g_ij g̃^{mn} R̃_mn`, assembled
/// from first-kind symbols:
///
/// `g̃^{lr} (Γ_{r;i[j})_{,l]} + g̃^{lr}_{,[l} Γ_{r;ij]} +
/// g̃^{lr} g̃^{ms} (Γ_{r;ij} Γ_{s;lm} − Γ_{s;il} Γ_{r;jm}) −
/// ½ g_ij (the three contraction groups of the general residual)`.
pub fn einstein_algebraic_general(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
) -> Result<Mat, AlgebraicError> {
    let n = g.dim();
    let gtm = gt.matrix()?;
    let first = crate::geometry::christoffel_first(g);
    let gm = g.components();
    let f = conv.factor_expr();
    let trace_part = general_contraction_groups(g, &gtm, conv)?;
    let half = Expr::half();

    let mut out = zero_mat(n);
    for i in 0..n {
        for j in 0..n {
            let mut terms = Vec::new();
            for l in 0..n {
                for r in 0..n {
                    if !gtm[l][r].is_zero() {
                        let anti = &first[r][i][j].diff(l) - &first[r][i][l].diff(j);
                        terms.push(&gtm[l][r] * &(f.clone() * anti));
                    }
                    let anti2 = &(&gtm[l][r].diff(l) * &first[r][i][j])
                        - &(&gtm[l][r].diff(j) * &first[r][i][l]);
                    terms.push(f.clone() * anti2);
                    if gtm[l][r].is_zero() {
                        continue;
                    }
                    for m in 0..n {
                        for s in 0..n {
                            if gtm[m][s].is_zero() {
                                continue;
                            }
                            let pre = &gtm[l][r] * &gtm[m][s];
                            let prod = &(&first[r][i][j] * &first[s][l][m])
                                - &(&first[s][i][l] * &first[r][j][m]);
                            terms.push(pre * prod);
                        }
                    }
                }
            }
            terms.push(Expr::neg(&half * &(&gm[i][j] * &trace_part)));
            out[i][j] = Expr::sum(terms);
        }
    }
    Ok(out)
}

/// Constraint residual `g_{ij} g̃^{jk} − δ_i^k`, indexed `[i][k]`. For a
/// factorized field with n ≥ 2 the product has rank 1, so the residual's
/// Frobenius norm stays bounded away from zero at every point.
pub fn inverse_constraint_residual(
    g: &MetricField,
    gt: &ContravariantField,
) -> Result<Mat, AlgebraicError> {
    let n = g.dim();
    let gtm = gt.matrix()?;
    let gm = g.components();
    let mut out = zero_mat(n);
    for i in 0..n {
        for k in 0..n {
            let prod = Expr::sum((0..n).map(|j| &gm[i][j] * &gtm[j][k]).collect());
            out[i][k] = if i == k { prod - Expr::one() } else { prod };
        }
    }
    Ok(out)
}

/// Isotropy classification of the tensor length scale.
#[derive(Clone, Debug, PartialEq)]
pub enum Isotropy {
    /// `l_i^k = l δ_i^k` with a single scalar scale.
    Isotropic { scale: Expr },
    /// Diagonal with maximal runs of mutually equal scales, at least one run
    /// spanning two or more directions.
    BlockIsotropic { scales: Vec<(Expr, usize)> },
    Anisotropic,
}

/// The tensor length scale `l_i^k = g_{ij} g̃^{jk}` with its isotropy
/// verdict.
#[derive(Clone, Debug)]
pub struct LengthScale {
    pub l: Mat,
    pub isotropy: Isotropy,
}

/// Computes `l_i^k = g_{ij} g̃^{jk}` (indexed `[i][k]`, lower index first)
/// and classifies it.
pub fn length_scale(
    g: &MetricField,
    gt: &ContravariantField,
    plan: &SamplePlan,
) -> Result<LengthScale, AlgebraicError> {
    let n = g.dim();
    let gtm = gt.matrix()?;
    let gm = g.components();
    let chart = g.chart();
    let mut l = zero_mat(n);
    for i in 0..n {
        for k in 0..n {
            l[i][k] = Expr::sum((0..n).map(|j| &gm[i][j] * &gtm[j][k]).collect());
        }
    }
    let off_diagonal_zero =
        (0..n).all(|i| (0..n).all(|k| i == k || equiv_zero(&l[i][k], chart, plan).is_agree()));
    let isotropy = if !off_diagonal_zero {
        Isotropy::Anisotropic
    } else {
        let mut runs: Vec<(Expr, usize)> = Vec::new();
        for i in 0..n {
            match runs.last_mut() {
                Some((scale, len)) if equiv(scale, &l[i][i], chart, plan).is_agree() => {
                    *len += 1;
                }
                _ => runs.push((l[i][i].clone(), 1)),
            }
        }
        if runs.len() == 1 {
            Isotropy::Isotropic {
                scale: runs.pop().unwrap().0,
            }
        } else if runs.iter().any(|&(_, len)| len >= 2) {
            Isotropy::BlockIsotropic { scales: runs }
        } else {
            Isotropy::Anisotropic
        }
    };
    Ok(LengthScale { l, isotropy })
}

/// Coefficients of the diagonal cubic form in the distinguished variable
/// `u := g̃^{44}` (the last diagonal entry), extracted from the general
/// reparametrization residual.
///
/// Greek slots run over the first three directions. The printed compact form
/// of the cubic keeps only `a, b, c, d, g_coef, f`; the remaining fields
/// (`quad`, `lin`, `dlin` and the fourth `g_coef` slot) hold couplings that
/// are implicit in that form and vanish for static diagonal metrics, so the
/// reconstruction identity is exact for every diagonal input.
#[derive(Clone, Debug)]
pub struct CubicForm {
    /// Coefficient of `u³`.
    pub a: Expr,
    /// `b[α]`: coefficient of `u² g̃^{αα}`.
    pub b: Vec<Expr>,
    /// `c[α][α]`: coefficient of `u g̃^{αα}`.
    pub c: Vec<Vec<Expr>>,
    /// `d[α][γ]`: coefficient of `u g̃^{αα} g̃^{γγ}` (ordered pairs).
    pub d: Vec<Vec<Expr>>,
    /// `g_coef[α]`: coefficient of `u g̃^{αα}_{,α}`; equals `Γ^α_{44} g_{αα}`.
    /// The last slot is the coefficient of `u g̃^{44}_{,4}` from this group.
    pub g_coef: Vec<Expr>,
    /// Coefficient of `u²` with no spatial factor.
    pub quad: Expr,
    /// Coefficient of `u` with no other factor.
    pub lin: Expr,
    /// `dlin[k]`: coefficient of `u g̃^{kk}_{,4}`.
    pub dlin: Vec<Expr>,
    /// Everything free of the undifferentiated `u`.
    pub f: Expr,
}

impl CubicForm {
    /// Re-multiplies the coefficients against the monomials of the supplied
    /// diagonal contravariant entries; equals the uncollected residual.
    pub fn reconstruct(&self, diag: &[Expr]) -> Expr {
        let n = diag.len();
        let t = n - 1;
        let u = &diag[t];
        let u2 = Expr::pow_int(u.clone(), 2);
        let mut terms = vec![
            &self.a * &Expr::pow_int(u.clone(), 3),
            &self.quad * &u2,
            &self.lin * u,
            self.f.clone(),
            &self.g_coef[t] * &(u * &diag[t].diff(t)),
        ];
        for al in 0..t {
            terms.push(&self.b[al] * &(&u2 * &diag[al]));
            terms.push(&self.c[al][al] * &(u * &diag[al]));
            terms.push(&self.g_coef[al] * &(u * &diag[al].diff(al)));
            for ga in 0..t {
                terms.push(&self.d[al][ga] * &(&(u * &diag[al]) * &diag[ga]));
            }
        }
        for k in 0..n {
            terms.push(&self.dlin[k] * &(u * &diag[k].diff(t)));
        }
        Expr::sum(terms)
    }
}

/// Collects the general reparametrization residual of a diagonal 4D pair
/// into the cubic form in `g̃^{44}`. The extraction walks the same index
/// loops as the residual assembly and buckets each contribution by its
/// monomial, so the reconstruction identity holds by construction; it is
/// nevertheless verified by sampling in the tests.
pub fn cubic_coeffs_diagonal(
    g: &MetricField,
    gt: &ContravariantField,
    conv: Convention,
    mode: ScalarContraction,
) -> Result<CubicForm, AlgebraicError> {
    let n = g.dim();
    if n != 4 {
        return Err(AlgebraicError::NotFourDimensional(n));
    }
    let gtm = gt.matrix()?;
    if !g.is_diagonal() || (0..n).any(|i| (0..n).any(|j| i != j && !gtm[i][j].is_zero())) {
        return Err(AlgebraicError::NotDiagonal);
    }
    let t = n - 1; // the distinguished index
    let gamma = christoffel_second(g)?;
    let c = gamma.coeffs();
    let gm = g.components();
    let r = ricci(&gamma);
    let f = conv.factor_expr();

    let mut form = CubicForm {
        a: Expr::zero(),
        b: vec![Expr::zero(); n],
        c: zero_mat(n),
        d: zero_mat(n),
        g_coef: vec![Expr::zero(); n],
        quad: Expr::zero(),
        lin: Expr::zero(),
        dlin: vec![Expr::zero(); n],
        f: Expr::zero(),
    };
    let diag: Vec<Expr> = (0..n).map(|i| gtm[i][i].clone()).collect();
    let mut rest: Vec<Expr> = Vec::new();

    // derivative group: +u_i u_{l,l} Γ^l_{ii} g_{ll} − u_i u_{k,i} Γ^k_{ik} g_{kk}
    for i in 0..n {
        for l in 0..n {
            let coeff = f.clone() * (&c[l][i][i] * &gm[l][l]);
            if i == t {
                form.g_coef[l] = form.g_coef[l].clone() + coeff;
            } else {
                rest.push(&(&diag[i] * &diag[l].diff(l)) * &coeff);
            }
        }
        for k in 0..n {
            let coeff = Expr::neg(f.clone() * (&c[k][i][k] * &gm[k][k]));
            if i == t {
                form.dlin[k] = form.dlin[k].clone() + coeff;
            } else {
                rest.push(&(&diag[i] * &diag[k].diff(i)) * &coeff);
            }
        }
    }
    // quadratic group: +u_i u_l (Γ^l_{ii} g_{ll})_{,l} − u_i u_k (Γ^k_{ik} g_{kk})_{,i}
    for i in 0..n {
        for l in 0..n {
            let coeff = f.clone() * (&c[l][i][i] * &gm[l][l]).diff(l);
            match (i == t, l == t) {
                (true, true) => form.quad = form.quad.clone() + coeff,
                (true, false) => form.c[l][l] = form.c[l][l].clone() + coeff,
                (false, true) => form.c[i][i] = form.c[i][i].clone() + coeff,
                (false, false) => rest.push(&(&diag[i] * &diag[l]) * &coeff),
            }
        }
        for k in 0..n {
            let coeff = Expr::neg(f.clone() * (&c[k][i][k] * &gm[k][k]).diff(i));
            match (i == t, k == t) {
                (true, true) => form.quad = form.quad.clone() + coeff,
                (true, false) => form.c[k][k] = form.c[k][k].clone() + coeff,
                (false, true) => form.c[i][i] = form.c[i][i].clone() + coeff,
                (false, false) => rest.push(&(&diag[i] * &diag[k]) * &coeff),
            }
        }
    }
    // cubic group: u_i u_l u_m g_{ll} g_{mm} (Γ^l_{ii} Γ^m_{lm} − Γ^m_{il} Γ^l_{im})
    for i in 0..n {
        for l in 0..n {
            for m in 0..n {
                let weight = &gm[l][l] * &gm[m][m];
                let prod = &(&c[l][i][i] * &c[m][l][m]) - &(&c[m][i][l] * &c[l][i][m]);
                let coeff = weight * prod;
                let fours = [i, l, m].iter().filter(|&&x| x == t).count();
                match fours {
                    3 => form.a = form.a.clone() + coeff,
                    2 => {
                        let other = [i, l, m].into_iter().find(|&x| x != t).unwrap();
                        form.b[other] = form.b[other].clone() + coeff;
                    }
                    1 => {
                        let others: Vec<usize> =
                            [i, l, m].into_iter().filter(|&x| x != t).collect();
                        form.d[others[0]][others[1]] =
                            form.d[others[0]][others[1]].clone() + coeff;
                    }
                    _ => rest.push(&(&(&diag[i] * &diag[l]) * &diag[m]) * &coeff),
                }
            }
        }
    }
    // scalar curvature term
    match mode {
        ScalarContraction::WithContravariant => {
            for i in 0..n {
                let coeff = Expr::neg(r[i][i].clone());
                if i == t {
                    form.lin = form.lin.clone() + coeff;
                } else {
                    rest.push(&diag[i] * &coeff);
                }
            }
        }
        ScalarContraction::Standard => {
            let ginv = g.inverse()?;
            let mut terms = Vec::new();
            for i in 0..n {
                for k in 0..n {
                    terms.push(Expr::neg(&ginv[i][k] * &r[i][k]));
                }
            }
            rest.push(Expr::sum(terms));
        }
    }
    form.f = Expr::sum(rest);
    Ok(form)
}

/// Sampled verdict on `f_m^s = δ_m^s` for the mixed field of the pair.
pub fn mixed_product_is_identity(
    g: &MetricField,
    gt: &ContravariantField,
    plan: &SamplePlan,
) -> Result<EquivVerdict, AlgebraicError> {
    let n = g.dim();
    let fmat = mixed_field(g, gt)?;
    let chart = g.chart();
    for s in 0..n {
        for m in 0..n {
            let delta = if s == m { Expr::one() } else { Expr::zero() };
            let v = equiv(&fmat[s][m], &delta, chart, plan);
            if !v.is_agree() {
                return Ok(v);
            }
        }
    }
    Ok(EquivVerdict::Agree {
        samples: plan.sample_count,
    })
}
