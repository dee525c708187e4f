//! The registered check catalog. Each check consumes the blocks it needs
//! from the model, runs a decidable verification where one exists, and
//! reports residual statistics. Checks whose blocks are missing are skipped,
//! not failed.

use dualmetric::affine::{
    affine_condition_residual, equiaffine_integrability, equiaffine_scalar_frozen,
    equiaffine_weight, m_tensors, twodim_case_classifier, IntegralCurveConstants,
};
use dualmetric::algebraic::{
    cubic_coeffs_diagonal, einstein_algebraic_factorized, einstein_algebraic_general,
    inverse_constraint_residual, length_scale, quadratic_term_factorized,
    reparam_residual_factorized, reparam_residual_general, Isotropy, ScalarContraction,
};
use dualmetric::dualbasis::{
    flow_projector, lapse_shift_check, projective_decompose, verify_proposition, CurveSpec, Frame,
    MixedTarget, ProjectorMode,
};
use dualmetric::elliptic::{
    eisenstein, eisenstein_q, expansion_max_residual, kraniotis_invariants, verify_p_ode,
};
use dualmetric::equiv::{equiv, sample_points, EquivVerdict, SamplePlan};
use dualmetric::expr::{Chart, Expr};
use dualmetric::geometry::{
    christoffel_first, christoffel_second, mixed_field, ricci, tilde_connection,
    ContravariantField, ContravariantKind,
};
use dualmetric::Convention;

use crate::model::ModelSpec;
use crate::report::{CheckRecord, Verdict};

/// Catalog order; reports follow it regardless of execution order.
pub const CATALOG: [&str; 20] = [
    "christoffel",
    "ricci",
    "tilde",
    "reparam-factorized",
    "reparam-general",
    "einstein-factorized",
    "einstein-general",
    "eq36-identity",
    "cubic55",
    "length-scale",
    "constraint41",
    "elliptic",
    "szekeres",
    "affine-a8",
    "twodim-cases",
    "equiaffine",
    "proposition",
    "projective",
    "adm",
    "hydro",
];

pub struct CheckContext<'a> {
    pub model: &'a ModelSpec,
    pub plan: SamplePlan,
    pub convention: Convention,
    pub truncation: usize,
}

impl CheckContext<'_> {
    fn chart(&self) -> &Chart {
        &self.model.chart
    }

    /// Max and mean of |entries| over the plan's samples.
    fn stats(&self, exprs: &[Expr]) -> (f64, f64) {
        stats_over(exprs, self.chart(), &self.plan)
    }
}

fn stats_over(exprs: &[Expr], chart: &Chart, plan: &SamplePlan) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for p in sample_points(chart, plan) {
        for e in exprs {
            if let Ok(v) = e.eval_shared(&p) {
                if v.is_finite() {
                    max = max.max(v.abs());
                    sum += v.abs();
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (max, sum / count as f64)
    }
}

fn flatten_mat(m: &[Vec<Expr>]) -> Vec<Expr> {
    m.iter().flat_map(|row| row.iter().cloned()).collect()
}

fn flatten_rank3(t: &[Vec<Vec<Expr>>]) -> Vec<Expr> {
    t.iter()
        .flat_map(|m| m.iter().flat_map(|row| row.iter().cloned()))
        .collect()
}

fn verdict_of(v: &EquivVerdict) -> (Verdict, Option<(Vec<f64>, f64, f64)>) {
    match v {
        EquivVerdict::Agree { .. } => (Verdict::Pass, None),
        EquivVerdict::Disagree { point, lhs, rhs } => {
            (Verdict::Fail, Some((point.clone(), *lhs, *rhs)))
        }
        EquivVerdict::Indeterminate { .. } => (Verdict::Indeterminate, None),
    }
}

fn merge_equiv(records: &mut CheckRecord, v: EquivVerdict) {
    let (verdict, witness) = verdict_of(&v);
    if verdict > records.verdict {
        records.verdict = verdict;
    }
    if records.witness.is_none() {
        records.witness = witness;
    }
}

fn skipped(name: &str, why: &str) -> CheckRecord {
    CheckRecord::skipped(name, why)
}

fn errored(name: &str, e: impl std::fmt::Display) -> CheckRecord {
    let mut r = CheckRecord::new(name);
    r.verdict = Verdict::Indeterminate;
    r.note = format!("error: {e}");
    r
}

pub fn run_check(name: &str, ctx: &CheckContext) -> CheckRecord {
    match name {
        "christoffel" => check_christoffel(ctx),
        "ricci" => check_ricci(ctx),
        "tilde" => check_tilde(ctx),
        "reparam-factorized" => check_reparam_factorized(ctx),
        "reparam-general" => check_reparam_general(ctx),
        "einstein-factorized" => check_einstein_factorized(ctx),
        "einstein-general" => check_einstein_general(ctx),
        "eq36-identity" => check_eq36(ctx),
        "cubic55" => check_cubic55(ctx),
        "length-scale" => check_length_scale(ctx),
        "constraint41" => check_constraint41(ctx),
        "elliptic" => check_elliptic(ctx),
        "szekeres" => check_szekeres(ctx),
        "affine-a8" => check_affine_a8(ctx),
        "twodim-cases" => check_twodim(ctx),
        "equiaffine" => check_equiaffine(ctx),
        "proposition" => check_proposition(ctx),
        "projective" => check_projective(ctx),
        "adm" => check_adm(ctx),
        "hydro" => check_hydro(ctx),
        other => panic!("unknown check `{other}` escaped validation"),
    }
}

fn check_christoffel(ctx: &CheckContext) -> CheckRecord {
    let Some(g) = &ctx.model.metric else {
        return skipped("christoffel", "needs [metric]");
    };
    let mut rec = CheckRecord::new("christoffel");
    let conn = match christoffel_second(g) {
        Ok(c) => c,
        Err(e) => return errored("christoffel", e),
    };
    if !conn.is_lower_symmetric() {
        rec.verdict = Verdict::Fail;
        rec.note = "lower-index symmetry violated".into();
        return rec;
    }
    // first-kind contraction consistency: g_{im} Γ^m_{kl} = Γ_{i;kl}
    let first = christoffel_first(g);
    let n = g.dim();
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                let contracted = Expr::sum(
                    (0..n)
                        .map(|m| g.entry(i, m) * conn.entry(m, k, l))
                        .collect(),
                );
                merge_equiv(
                    &mut rec,
                    equiv(&contracted, &first[i][k][l], ctx.chart(), &ctx.plan),
                );
            }
        }
    }
    let (max, mean) = ctx.stats(&flatten_rank3(conn.coeffs()));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "lower symmetry and first-kind contraction".into();
    rec
}

fn check_ricci(ctx: &CheckContext) -> CheckRecord {
    let Some(g) = &ctx.model.metric else {
        return skipped("ricci", "needs [metric]");
    };
    let mut rec = CheckRecord::new("ricci");
    let conn = match christoffel_second(g) {
        Ok(c) => c,
        Err(e) => return errored("ricci", e),
    };
    let r = ricci(&conn);
    let n = g.dim();
    for i in 0..n {
        for k in (i + 1)..n {
            merge_equiv(&mut rec, equiv(&r[i][k], &r[k][i], ctx.chart(), &ctx.plan));
        }
    }
    let (max, mean) = ctx.stats(&flatten_mat(&r));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "symmetry of the curvature; stats are |R_ik| samples".into();
    rec
}

fn check_tilde(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("tilde", "needs [metric] and [contravariant]");
    };
    let mut rec = CheckRecord::new("tilde");
    let tilde = match tilde_connection(g, gt) {
        Ok(t) => t,
        Err(e) => return errored("tilde", e),
    };
    if !tilde.is_lower_symmetric() {
        rec.verdict = Verdict::Fail;
        rec.note = "lower-index symmetry violated".into();
        return rec;
    }
    if matches!(gt.kind(), ContravariantKind::Inverse(_)) {
        let second = match christoffel_second(g) {
            Ok(c) => c,
            Err(e) => return errored("tilde", e),
        };
        let n = g.dim();
        for s in 0..n {
            for k in 0..n {
                for l in 0..n {
                    merge_equiv(
                        &mut rec,
                        equiv(
                            tilde.entry(s, k, l),
                            second.entry(s, k, l),
                            ctx.chart(),
                            &ctx.plan,
                        ),
                    );
                }
            }
        }
        rec.note = "collapse to the standard connection for the true inverse".into();
    } else {
        rec.note = "lower symmetry; coefficient stats".into();
    }
    let (max, mean) = ctx.stats(&flatten_rank3(tilde.coeffs()));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec
}

fn check_reparam_factorized(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("reparam-factorized", "needs [metric] and [contravariant]");
    };
    if !gt.is_factorized() {
        return skipped("reparam-factorized", "needs a factorized contravariant field");
    }
    let mut rec = CheckRecord::new("reparam-factorized");
    let residual = match reparam_residual_factorized(g, gt, ctx.convention) {
        Ok(r) => r,
        Err(e) => return errored("reparam-factorized", e),
    };
    // homogeneity cross-check when no second differential is present:
    // residual(2V) − 16·residual(V) must equal 12 · V^iV^l R_il
    let d2_absent = gt
        .second_differential()
        .map(|d| d.iter().all(|e| e.is_zero()))
        .unwrap_or(true);
    if d2_absent {
        let v = gt.factor().unwrap();
        let scaled: Vec<Expr> = v
            .iter()
            .map(|e| Expr::constant(2.0) * e.clone())
            .collect();
        let gt2 =
            ContravariantField::factorized(ctx.chart().clone(), scaled, None).unwrap();
        match reparam_residual_factorized(g, &gt2, ctx.convention) {
            Ok(res2) => {
                let r_std = ricci(&christoffel_second(g).unwrap());
                let n = g.dim();
                let mut rb = Vec::new();
                for i in 0..n {
                    for l in 0..n {
                        rb.push(&(&v[i] * &v[l]) * &r_std[i][l]);
                    }
                }
                let lhs = res2 - Expr::constant(16.0) * residual.clone();
                let rhs = Expr::constant(12.0) * Expr::sum(rb);
                merge_equiv(&mut rec, equiv(&lhs, &rhs, ctx.chart(), &ctx.plan));
                rec.note = "scaling cross-check between the two degree blocks".into();
            }
            Err(e) => return errored("reparam-factorized", e),
        }
    } else {
        rec.note = "residual stats (second differential present)".into();
    }
    let (max, mean) = ctx.stats(&[residual]);
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec
}

fn check_reparam_general(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("reparam-general", "needs [metric] and [contravariant]");
    };
    if gt.is_factorized() {
        return skipped("reparam-general", "needs a general or inverse contravariant field");
    }
    let mut rec = CheckRecord::new("reparam-general");
    let residual = match reparam_residual_general(
        g,
        gt,
        ctx.convention,
        ScalarContraction::WithContravariant,
    ) {
        Ok(r) => r,
        Err(e) => return errored("reparam-general", e),
    };
    // independent route: the contraction groups equal g̃^{ik}(R̃_ik − R_ik)
    let route = (|| -> Result<Expr, Box<dyn std::error::Error>> {
        let gtm = gt.matrix()?;
        let r_tilde = ricci(&tilde_connection(g, gt)?);
        let r_std = ricci(&christoffel_second(g)?);
        let n = g.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            for k in 0..n {
                terms.push(&gtm[i][k] * &(&r_tilde[i][k] - &r_std[i][k]));
            }
        }
        Ok(Expr::sum(terms))
    })();
    match route {
        Ok(alt) => merge_equiv(&mut rec, equiv(&residual, &alt, ctx.chart(), &ctx.plan)),
        Err(e) => return errored("reparam-general", e),
    }
    if matches!(gt.kind(), ContravariantKind::Inverse(_)) {
        merge_equiv(
            &mut rec,
            equiv(&residual, &Expr::zero(), ctx.chart(), &ctx.plan),
        );
        rec.note = "route consistency and collapse to zero for the true inverse".into();
    } else {
        rec.note = "route consistency against the connection-curvature contraction".into();
    }
    let (max, mean) = ctx.stats(&[residual]);
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec
}

fn check_einstein_factorized(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("einstein-factorized", "needs [metric] and [contravariant]");
    };
    if !gt.is_factorized() {
        return skipped("einstein-factorized", "needs a factorized contravariant field");
    }
    let mut rec = CheckRecord::new("einstein-factorized");
    let m = match einstein_algebraic_factorized(g, gt, ctx.convention) {
        Ok(m) => m,
        Err(e) => return errored("einstein-factorized", e),
    };
    let n = g.dim();
    for i in 0..n {
        for j in (i + 1)..n {
            merge_equiv(&mut rec, equiv(&m[i][j], &m[j][i], ctx.chart(), &ctx.plan));
        }
    }
    let (max, mean) = ctx.stats(&flatten_mat(&m));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "index symmetry of the assembled system".into();
    rec
}

fn check_einstein_general(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("einstein-general", "needs [metric] and [contravariant]");
    };
    if gt.is_factorized() {
        return skipped("einstein-general", "needs a general or inverse contravariant field");
    }
    let mut rec = CheckRecord::new("einstein-general");
    let m = match einstein_algebraic_general(g, gt, ctx.convention) {
        Ok(m) => m,
        Err(e) => return errored("einstein-general", e),
    };
    // independent route through the curvature of the tilde connection
    let route = (|| -> Result<(), Box<dyn std::error::Error>> {
        let gtm = gt.matrix()?;
        let r_tilde = ricci(&tilde_connection(g, gt)?);
        let n = g.dim();
        let mut trace_terms = Vec::new();
        for a in 0..n {
            for b in 0..n {
                trace_terms.push(&gtm[a][b] * &r_tilde[a][b]);
            }
        }
        let trace = Expr::sum(trace_terms);
        for i in 0..n {
            for j in 0..n {
                let want = &r_tilde[i][j] - &(Expr::half() * (g.entry(i, j) * &trace));
                merge_equiv(&mut rec, equiv(&m[i][j], &want, ctx.chart(), &ctx.plan));
            }
        }
        Ok(())
    })();
    if let Err(e) = route {
        return errored("einstein-general", e);
    }
    let (max, mean) = ctx.stats(&flatten_mat(&m));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "route consistency against the tilde-curvature assembly".into();
    rec
}

fn check_eq36(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("eq36-identity", "needs [metric] and [contravariant]");
    };
    if !gt.is_factorized() {
        return skipped("eq36-identity", "needs a factorized contravariant field");
    }
    let mut rec = CheckRecord::new("eq36-identity");
    let q = match quadratic_term_factorized(g, gt) {
        Ok(q) => q,
        Err(e) => return errored("eq36-identity", e),
    };
    merge_equiv(&mut rec, equiv(&q, &Expr::zero(), ctx.chart(), &ctx.plan));
    let (max, mean) = ctx.stats(&[q]);
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "vanishing of the quadratic tilde-connection combination".into();
    rec
}

fn check_cubic55(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("cubic55", "needs [metric] and [contravariant]");
    };
    let mut rec = CheckRecord::new("cubic55");
    let form = match cubic_coeffs_diagonal(
        g,
        gt,
        ctx.convention,
        ScalarContraction::WithContravariant,
    ) {
        Ok(f) => f,
        Err(e) => return skipped("cubic55", &format!("{e}")),
    };
    let gtm = match gt.matrix() {
        Ok(m) => m,
        Err(e) => return errored("cubic55", e),
    };
    let diag: Vec<Expr> = (0..4).map(|i| gtm[i][i].clone()).collect();
    let rebuilt = form.reconstruct(&diag);
    let direct = match reparam_residual_general(
        g,
        gt,
        ctx.convention,
        ScalarContraction::WithContravariant,
    ) {
        Ok(r) => r,
        Err(e) => return errored("cubic55", e),
    };
    merge_equiv(&mut rec, equiv(&rebuilt, &direct, ctx.chart(), &ctx.plan));
    let diff = rebuilt - direct;
    let (max, mean) = ctx.stats(&[diff]);
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec.note = "collect-then-reconstruct reproduces the residual".into();
    rec
}

fn check_length_scale(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("length-scale", "needs [metric] and [contravariant]");
    };
    let mut rec = CheckRecord::new("length-scale");
    match length_scale(g, gt, &ctx.plan) {
        Ok(ls) => {
            rec.note = match ls.isotropy {
                Isotropy::Isotropic { .. } => "isotropic".into(),
                Isotropy::BlockIsotropic { scales } => {
                    let sizes: Vec<String> =
                        scales.iter().map(|(_, len)| len.to_string()).collect();
                    format!("block-isotropic with block sizes {}", sizes.join("+"))
                }
                Isotropy::Anisotropic => "anisotropic".into(),
            };
            let (max, mean) = ctx.stats(&flatten_mat(&ls.l));
            rec.max = Some(max);
            rec.mean = Some(mean);
            rec
        }
        Err(e) => errored("length-scale", e),
    }
}

fn check_constraint41(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt)) = (&ctx.model.metric, &ctx.model.contravariant) else {
        return skipped("constraint41", "needs [metric] and [contravariant]");
    };
    let mut rec = CheckRecord::new("constraint41");
    let res = match inverse_constraint_residual(g, gt) {
        Ok(r) => r,
        Err(e) => return errored("constraint41", e),
    };
    let n = g.dim();
    match gt.kind() {
        ContravariantKind::Inverse(_) => {
            for row in &res {
                for e in row {
                    merge_equiv(&mut rec, equiv(e, &Expr::zero(), ctx.chart(), &ctx.plan));
                }
            }
            rec.note = "constraint holds exactly for the true inverse".into();
        }
        ContravariantKind::Factorized { .. } if n >= 2 => {
            // rank-1 obstruction: Frobenius norm stays bounded away from 0
            let mut min_norm = f64::INFINITY;
            for p in sample_points(ctx.chart(), &ctx.plan) {
                let mut frob = 0.0;
                let mut valid = true;
                for row in &res {
                    for e in row {
                        match e.eval_shared(&p) {
                            Ok(v) if v.is_finite() => frob += v * v,
                            _ => valid = false,
                        }
                    }
                }
                if valid {
                    min_norm = min_norm.min(frob.sqrt());
                }
            }
            if min_norm < 0.5 {
                rec.verdict = Verdict::Fail;
            }
            let invert = dualmetric::geometry::inverse_of_contravariant(gt);
            if invert.is_ok() {
                rec.verdict = Verdict::Fail;
                rec.note = "rank-deficient field unexpectedly inverted".into();
            } else {
                rec.note = format!(
                    "rank obstruction: min sampled Frobenius norm {min_norm:.3e}, inversion rejected"
                );
            }
            rec.max = Some(min_norm);
        }
        _ => {
            rec.note = "constraint residual stats for a general field".into();
        }
    }
    if rec.max.is_none() {
        let (max, mean) = ctx.stats(&flatten_mat(&res));
        rec.max = Some(max);
        rec.mean = Some(mean);
    }
    rec
}

fn check_elliptic(ctx: &CheckContext) -> CheckRecord {
    let Some(block) = &ctx.model.elliptic else {
        return skipped("elliptic", "needs [elliptic]");
    };
    let Some(lat) = &block.lattice else {
        return skipped("elliptic", "needs omega1/omega2 in [elliptic]");
    };
    let truncation = block.truncation.unwrap_or(ctx.truncation);
    let mut rec = CheckRecord::new("elliptic");
    let residual = match verify_p_ode(lat, 100, truncation) {
        Ok(r) => r,
        Err(e) => return errored("elliptic", e),
    };
    if residual >= 1e-8 {
        rec.verdict = Verdict::Fail;
    }
    rec.max = Some(residual);
    match (eisenstein(lat, truncation), eisenstein_q(lat, truncation.max(48))) {
        (Ok(win), Ok(q)) => {
            rec.note = format!(
                "cubic self-consistency {residual:.3e}; window g2 = {:.6} + {:.6}i (tail {:.1e}), g3 = {:.6} + {:.6}i (tail {:.1e}); fourier |g2| = {:.6}, |g3| = {:.6}",
                win.invariants.g2.re,
                win.invariants.g2.im,
                win.g2_tail,
                win.invariants.g3.re,
                win.invariants.g3.im,
                win.g3_tail,
                q.g2.norm(),
                q.g3.norm(),
            );
        }
        (Err(e), _) | (_, Err(e)) => return errored("elliptic", e),
    }
    rec
}

fn check_szekeres(ctx: &CheckContext) -> CheckRecord {
    let Some(block) = &ctx.model.elliptic else {
        return skipped("szekeres", "needs [elliptic]");
    };
    let Some(model) = &block.szekeres else {
        return skipped("szekeres", "needs K/M/lambda in [elliptic]");
    };
    let mut rec = CheckRecord::new("szekeres");
    match expansion_max_residual(model, block.phi0, 1.0, 1e-4) {
        Ok(max) => {
            if max >= 1e-7 {
                rec.verdict = Verdict::Fail;
            }
            rec.max = Some(max);
            let inv = kraniotis_invariants(model);
            rec.note = format!(
                "trajectory residual {max:.3e}; frozen invariants g2 = {:.6}, g3 = {:.6}{}",
                inv.invariants.g2.re,
                inv.invariants.g3.re,
                if inv.degenerate {
                    " (degenerate discriminant)"
                } else {
                    ""
                }
            );
            if inv.degenerate && rec.verdict == Verdict::Pass {
                rec.verdict = Verdict::Warning;
            }
            rec
        }
        Err(e) => errored("szekeres", e),
    }
}

fn check_affine_a8(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(map)) = (&ctx.model.metric, &ctx.model.map) else {
        return skipped("affine-a8", "needs [metric] and [map]");
    };
    let ones = vec![Expr::one(); ctx.chart().dim()];
    let v = ctx.model.map_vector.as_ref().unwrap_or(&ones);
    let mut rec = CheckRecord::new("affine-a8");
    if map.inverse().is_none() {
        return skipped("affine-a8", "map carries no inverse");
    }
    match map.check_round_trip(&ctx.plan) {
        Ok(true) => {}
        Ok(false) => {
            rec.verdict = Verdict::Fail;
            rec.note = "forward/inverse pair is not a round trip".into();
            return rec;
        }
        Err(e) => return errored("affine-a8", e),
    }
    let res = match affine_condition_residual(map, g, v) {
        Ok(r) => r,
        Err(e) => return errored("affine-a8", e),
    };
    // for an affine-linear map the condition must vanish identically
    let affine_linear = map
        .inverse()
        .unwrap()
        .iter()
        .all(|e| (0..map.target().dim()).all(|i| (0..map.target().dim()).all(|j| e.diff(i).diff(j).is_zero())));
    if affine_linear {
        for block in &res {
            for row in block {
                for e in row {
                    merge_equiv(
                        &mut rec,
                        equiv(e, &Expr::zero(), map.target(), &ctx.plan),
                    );
                }
            }
        }
        rec.note = "map round trip; residual vanishes for the affine-linear map".into();
    } else {
        rec.note = "map round trip; residual stats over the target chart".into();
    }
    let (max, mean) = stats_over(&flatten_rank3(&res), map.target(), &ctx.plan);
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec
}

fn check_twodim(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(map)) = (&ctx.model.metric, &ctx.model.map) else {
        return skipped("twodim-cases", "needs [metric] and [map]");
    };
    if ctx.chart().dim() != 2 {
        return skipped("twodim-cases", "needs a two-dimensional chart");
    }
    let constants = match &ctx.model.curve_constants {
        Some(c) => match IntegralCurveConstants::new(c.clone()) {
            Ok(c) => c,
            Err(e) => return errored("twodim-cases", e),
        },
        None => IntegralCurveConstants::new(vec![1.0, 1.0]).unwrap(),
    };
    let mut rec = CheckRecord::new("twodim-cases");
    match twodim_case_classifier(map, g, &constants, &ctx.plan) {
        Ok(cases) => {
            // the identities behind the case analysis are themselves checked
            // when an inverse is available
            if map.inverse().is_some() {
                match m_tensors(map) {
                    Ok(mt) => {
                        for l in 0..2 {
                            for i in 0..2 {
                                for j in 0..2 {
                                    let lhs = mt.t_antisymmetrized(l, i, j);
                                    let rhs = match dualmetric::affine::poisson_bracket_1d(
                                        map, j, l,
                                    ) {
                                        Ok(b) => b.diff(i),
                                        Err(e) => return errored("twodim-cases", e),
                                    };
                                    merge_equiv(
                                        &mut rec,
                                        equiv(&lhs, &rhs, map.target(), &ctx.plan),
                                    );
                                }
                            }
                        }
                    }
                    Err(e) => return errored("twodim-cases", e),
                }
            }
            let b = match cases.bracket_constant {
                Some(true) => "constant",
                Some(false) => "non-constant",
                None => "unavailable",
            };
            rec.note = format!(
                "coordinate independence: {}; bracket: {}; metric balance: {}",
                cases.independent_of_x1, b, cases.metric_balance
            );
            rec
        }
        Err(e) => errored("twodim-cases", e),
    }
}

fn check_equiaffine(ctx: &CheckContext) -> CheckRecord {
    let Some(g) = &ctx.model.metric else {
        return skipped("equiaffine", "needs [metric]");
    };
    // the vector comes from the factorized field or the map block
    let v: Vec<Expr> = match (&ctx.model.contravariant, &ctx.model.map_vector) {
        (Some(gt), _) if gt.is_factorized() => gt.factor().unwrap().to_vec(),
        (_, Some(v)) => v.clone(),
        _ => {
            return skipped(
                "equiaffine",
                "needs a factorized contravariant field or a map vector",
            )
        }
    };
    let mut rec = CheckRecord::new("equiaffine");
    let w = equiaffine_weight(g, &v);
    // trace consistency with the tilde connection
    let gt = match ContravariantField::factorized(ctx.chart().clone(), v.clone(), None) {
        Ok(f) => f,
        Err(e) => return errored("equiaffine", e),
    };
    let tilde = match tilde_connection(g, &gt) {
        Ok(t) => t,
        Err(e) => return errored("equiaffine", e),
    };
    let n = g.dim();
    for i in 0..n {
        let trace = Expr::sum((0..n).map(|k| tilde.entry(k, i, k).clone()).collect());
        merge_equiv(&mut rec, equiv(&w[i], &trace, ctx.chart(), &ctx.plan));
    }
    let fs = equiaffine_scalar_frozen(g, &v);
    let curl = equiaffine_integrability(&w);
    if fs.frozen {
        for row in &curl {
            for e in row {
                merge_equiv(&mut rec, equiv(e, &Expr::zero(), ctx.chart(), &ctx.plan));
            }
        }
        for i in 0..n {
            merge_equiv(
                &mut rec,
                equiv(&fs.log_scale.diff(i), &w[i], ctx.chart(), &ctx.plan),
            );
        }
        rec.note = "trace consistency; frozen regime: closed weight and exact potential".into();
    } else {
        rec.note = "trace consistency; field not frozen, curl stats reported".into();
    }
    let (max, mean) = ctx.stats(&flatten_mat(&curl));
    rec.max = Some(max);
    rec.mean = Some(mean);
    rec
}

fn check_proposition(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(gt), Some(curve)) = (
        &ctx.model.metric,
        &ctx.model.contravariant,
        &ctx.model.curve,
    ) else {
        return skipped(
            "proposition",
            "needs [metric], [contravariant] and [curve]",
        );
    };
    let mut rec = CheckRecord::new("proposition");
    let f = match mixed_field(g, gt) {
        Ok(mat) => match MixedTarget::new(ctx.chart().clone(), mat) {
            Ok(f) => f,
            Err(e) => return errored("proposition", e),
        },
        Err(e) => return errored("proposition", e),
    };
    // the standard coordinate frame has constant components, so its own
    // transport connection is zero; the relation then determines P from the
    // mixed target alone and the curvature of g enters only through f
    let gamma = dualmetric::geometry::ConnectionField::zero(ctx.chart().clone());
    let frame = Frame::standard(ctx.chart().clone());
    let spec = match CurveSpec::new(
        curve.start.clone(),
        curve.t_end,
        curve.step,
        curve.tangent.clone(),
    ) {
        Ok(s) => s,
        Err(e) => return errored("proposition", e),
    };
    match verify_proposition(&frame, &f, &gamma, &spec) {
        Ok(report) => {
            if report.max_deviation >= 1e-6 {
                rec.verdict = Verdict::Fail;
            }
            rec.max = Some(report.max_deviation);
            rec.note = format!(
                "path deviation {:.3e}; integration error estimate {:.3e}",
                report.max_deviation, report.error_estimate
            );
            rec
        }
        Err(e @ dualmetric::dualbasis::DualBasisError::SingularMixedField { .. }) => {
            // a rank-deficient mixed field (e.g. a factorized contravariant
            // kind) admits no unique transport solution
            skipped("proposition", &format!("{e}"))
        }
        Err(e) => {
            let mut r = CheckRecord::new("proposition");
            r.verdict = Verdict::Indeterminate;
            r.note = format!("pipeline unavailable: {e}");
            r
        }
    }
}

fn check_projective(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(h)) = (&ctx.model.metric, &ctx.model.projective_h) else {
        return skipped("projective", "needs [metric] and [projective]");
    };
    let mut rec = CheckRecord::new("projective");
    match projective_decompose(g, h, &ctx.plan) {
        Ok(d) => {
            if d.orthogonal {
                // where orthogonality holds, the product equals δ − h h^
                let n = g.dim();
                let ginv = match g.inverse() {
                    Ok(m) => m,
                    Err(e) => return errored("projective", e),
                };
                for i in 0..n {
                    for k in 0..n {
                        let mut terms = Vec::new();
                        for j in 0..n {
                            for a in 0..n {
                                for b in 0..n {
                                    terms.push(
                                        &h[i][j]
                                            * &(&(&ginv[j][a] * &ginv[k][b]) * &h[a][b]),
                                    );
                                }
                            }
                        }
                        let delta = if i == k { Expr::one() } else { Expr::zero() };
                        let want = delta - Expr::sum(terms);
                        merge_equiv(
                            &mut rec,
                            equiv(&d.product[i][k], &want, ctx.chart(), &ctx.plan),
                        );
                    }
                }
                rec.note = "orthogonal split; product identity verified".into();
            } else {
                rec.verdict = Verdict::Warning;
                rec.note = "orthogonality violated; reported, not fatal".into();
            }
            let (max, mean) = ctx.stats(&flatten_mat(&d.product));
            rec.max = Some(max);
            rec.mean = Some(mean);
            rec
        }
        Err(e) => errored("projective", e),
    }
}

fn check_adm(ctx: &CheckContext) -> CheckRecord {
    let Some(adm) = &ctx.model.adm else {
        return skipped("adm", "needs [adm]");
    };
    let mut rec = CheckRecord::new("adm");
    match lapse_shift_check(ctx.chart(), &adm.lapse, &adm.shift, &adm.p, &ctx.plan) {
        Ok(report) => {
            if !report.product_is_identity {
                rec.verdict = Verdict::Fail;
            }
            rec.note = format!(
                "assembled pair inverse: {}; spatial block inverse: {}; shift-norm-equals-lapse-squared: {}",
                report.product_is_identity,
                report.spatial_product_is_identity,
                report.shift_norm_equals_lapse_sq
            );
            rec
        }
        Err(e) => errored("adm", e),
    }
}

fn check_hydro(ctx: &CheckContext) -> CheckRecord {
    let (Some(g), Some(hydro)) = (&ctx.model.metric, &ctx.model.hydro) else {
        return skipped("hydro", "needs [metric] and [hydro]");
    };
    let mode = if hydro.normalized {
        ProjectorMode::Normalized
    } else {
        ProjectorMode::VariableLength
    };
    let mut rec = CheckRecord::new("hydro");
    match flow_projector(g, &hydro.u, mode, &ctx.plan) {
        Ok(fp) => {
            if !fp.trace_is_n_minus_one {
                rec.verdict = Verdict::Fail;
            }
            rec.note = format!(
                "trace = n−1: {}; tensorial transport: {}",
                fp.trace_is_n_minus_one, fp.tensorial
            );
            let (max, mean) = ctx.stats(&flatten_mat(&fp.f));
            rec.max = Some(max);
            rec.mean = Some(mean);
            rec
        }
        Err(e) => {
            let mut r = CheckRecord::new("hydro");
            r.verdict = Verdict::Fail;
            r.note = format!("{e}");
            r
        }
    }
}
