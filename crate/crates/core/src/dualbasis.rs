//! Dual-basis machinery: given a covariant frame, a mixed target field
//! `f_i^j` and a connection, solve for the second connection `P` pointwise,
//! integrate the contravariant basis along a curve, and verify that the
//! integrated basis keeps `e_i ẽ^j = f_i^j`. Also the projective, lapse/shift
//! and flow-projector decompositions that motivate mixed fields different
//! from the identity.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::equiv::{equiv, equiv_zero, SamplePlan};
use crate::expr::{Chart, EvalError, Expr};
use crate::geometry::{sym_inverse, zero_mat, ConnectionField, GeometryError, Mat, MetricField};

#[derive(Debug, Error)]
pub enum DualBasisError {
    #[error("mixed field is numerically singular at the point (rank {rank} of {dim})")]
    SingularMixedField { rank: usize, dim: usize },
    #[error("frame is numerically singular at the curve start")]
    SingularFrame,
    #[error("curve step {step} exceeds span/10 = {max}")]
    StepTooLarge { step: f64, max: f64 },
    #[error("field has {got} entries, chart dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("chart must be four-dimensional for the lapse/shift split, got {0}")]
    NotFourDimensional(usize),
    #[error("lapse must not be the zero expression")]
    ZeroLapse,
    #[error("flow field normalization violated: u_i u^i differs from 1")]
    NormalizationViolated,
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A basis of covariant vector fields; row `i` holds the components of
/// `e_i`.
#[derive(Clone, Debug)]
pub struct Frame {
    chart: Chart,
    vectors: Mat,
}

impl Frame {
    pub fn new(chart: Chart, vectors: Mat) -> Result<Self, DualBasisError> {
        let n = chart.dim();
        if vectors.len() != n || vectors.iter().any(|r| r.len() != n) {
            return Err(DualBasisError::Dimension {
                got: vectors.len(),
                expected: n,
            });
        }
        Ok(Frame { chart, vectors })
    }

    /// The standard coordinate frame `e_i = ∂_i`.
    pub fn standard(chart: Chart) -> Self {
        let n = chart.dim();
        Frame {
            chart,
            vectors: crate::geometry::identity_mat(n),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    fn eval_at(&self, point: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for mu in 0..n {
                m[(i, mu)] = self.vectors[i][mu].eval(point)?;
            }
        }
        Ok(m)
    }
}

/// The prescribed mixed products `e_i ẽ^j = f_i^j`.
#[derive(Clone, Debug)]
pub struct MixedTarget {
    chart: Chart,
    f: Mat,
}

impl MixedTarget {
    pub fn new(chart: Chart, f: Mat) -> Result<Self, DualBasisError> {
        let n = chart.dim();
        if f.len() != n || f.iter().any(|r| r.len() != n) {
            return Err(DualBasisError::Dimension {
                got: f.len(),
                expected: n,
            });
        }
        Ok(MixedTarget { chart, f })
    }

    pub fn identity(chart: Chart) -> Self {
        let n = chart.dim();
        MixedTarget {
            chart,
            f: crate::geometry::identity_mat(n),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &Mat {
        &self.f
    }

    fn eval_at(&self, point: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.chart.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.f[i][j].eval(point)?;
            }
        }
        Ok(m)
    }
}

/// A parametrized integration path: start point, span `(0, t_end]`, fixed
/// step, and tangent components as expressions of the single parameter.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    pub start: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    pub tangent: Vec<Expr>,
}

impl CurveSpec {
    pub fn new(
        start: Vec<f64>,
        t_end: f64,
        step: f64,
        tangent: Vec<Expr>,
    ) -> Result<Self, DualBasisError> {
        if step > t_end / 10.0 {
            return Err(DualBasisError::StepTooLarge {
                step,
                max: t_end / 10.0,
            });
        }
        if tangent.len() != start.len() {
            return Err(DualBasisError::Dimension {
                got: tangent.len(),
                expected: start.len(),
            });
        }
        Ok(CurveSpec {
            start,
            t_end,
            step,
            tangent,
        })
    }

    fn tangent_at(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        self.tangent.iter().map(|e| e.eval(&[t])).collect()
    }
}

pub type NumericRank3 = Vec<Vec<Vec<f64>>>;

/// `(t, position, basis)` states along an integration path.
pub type TrajectoryStates = Vec<(f64, Vec<f64>, DMatrix<f64>)>;

/// Solves the relation `f^i_{j,k} = Γ^l_{jk} f^i_l + P^i_{lk} f^l_j` for the
/// second connection `P` at one point: for each `(i, k)` the unknown column
/// `P^i_{·k}` satisfies an n×n linear system with matrix `f^l_j`. With
/// `f = δ` this returns `P = −Γ` exactly (standard duality).
pub fn solve_second_connection(
    f: &MixedTarget,
    gamma: &ConnectionField,
    point: &[f64],
) -> Result<NumericRank3, DualBasisError> {
    let n = f.chart().dim();
    let fm = f.eval_at(point)?;
    if fm.determinant().abs() <= 1e-10 {
        let rank = fm.rank(1e-10);
        return Err(DualBasisError::SingularMixedField { rank, dim: n });
    }
    // coefficient matrix M[j][l] = f^l_j is shared by all (i, k) systems
    let m = fm.transpose();
    let lu = m.lu();
    let mut df = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                df[i][j][k] = f.components()[i][j].diff(k).eval(point)?;
            }
        }
    }
    let mut gam = vec![vec![vec![0.0; n]; n]; n];
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                gam[l][j][k] = gamma.entry(l, j, k).eval(point)?;
            }
        }
    }
    let mut p = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for k in 0..n {
            let mut rhs = DMatrix::zeros(n, 1);
            for j in 0..n {
                let mut v = df[i][j][k];
                for l in 0..n {
                    v -= gam[l][j][k] * fm[(i, l)];
                }
                rhs[(j, 0)] = v;
            }
            let sol = lu.solve(&rhs).ok_or(DualBasisError::SingularMixedField {
                rank: fm.rank(1e-10),
                dim: n,
            })?;
            for l in 0..n {
                p[i][l][k] = sol[(l, 0)];
            }
        }
    }
    Ok(p)
}

/// Residual of the defining relation for a solved `P` at a point; near
/// machine precision when the solve succeeded.
pub fn second_connection_residual(
    f: &MixedTarget,
    gamma: &ConnectionField,
    p: &NumericRank3,
    point: &[f64],
) -> Result<f64, DualBasisError> {
    let n = f.chart().dim();
    let fm = f.eval_at(point)?;
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs = f.components()[i][j].diff(k).eval(point)?;
                let mut rhs = 0.0;
                for l in 0..n {
                    rhs += gamma.entry(l, j, k).eval(point)? * fm[(i, l)];
                    rhs += p[i][l][k] * fm[(l, j)];
                }
                max = max.max((lhs - rhs).abs());
            }
        }
    }
    Ok(max)
}

/// Result of integrating a contravariant basis along a curve.
#[derive(Clone, Debug)]
pub struct BasisTrajectory {
    /// `(t, position, basis)` at every accepted step; `basis[alpha][mu]`.
    pub states: TrajectoryStates,
    /// Richardson estimate of the global integration error (endpoint
    /// difference against a half-step run, divided by 15).
    pub error_estimate: f64,
}

impl BasisTrajectory {
    pub fn endpoint(&self) -> &(f64, Vec<f64>, DMatrix<f64>) {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates `∂_β ẽ^α = P^α_{γβ} ẽ^γ` contracted with the curve tangent by
/// classical fourth-order Runge–Kutta at fixed step. The position advances
/// simultaneously with the basis matrix. `P` is supplied as a callback
/// evaluated at visited points.
pub fn integrate_contravariant_basis<F>(
    p_field: F,
    initial: DMatrix<f64>,
    curve: &CurveSpec,
) -> Result<BasisTrajectory, DualBasisError>
where
    F: Fn(&[f64]) -> Result<NumericRank3, DualBasisError>,
{
    let states = rk4_run(&p_field, initial.clone(), curve, curve.step)?;
    let halved = rk4_run(&p_field, initial, curve, curve.step / 2.0)?;
    let diff = (&states.last().unwrap().2 - &halved.last().unwrap().2).norm();
    Ok(BasisTrajectory {
        states,
        error_estimate: diff / 15.0,
    })
}

fn rk4_run<F>(
    p_field: &F,
    initial: DMatrix<f64>,
    curve: &CurveSpec,
    step: f64,
) -> Result<TrajectoryStates, DualBasisError>
where
    F: Fn(&[f64]) -> Result<NumericRank3, DualBasisError>,
{
    let n = curve.start.len();
    // derivative of (x, E): dx/dt = τ(t), dE/dt = A(x, t) E with
    // A[α][γ] = Σ_β τ^β P^α_{γβ}
    let deriv = |t: f64,
                 x: &[f64],
                 e: &DMatrix<f64>|
     -> Result<(Vec<f64>, DMatrix<f64>), DualBasisError> {
        let tau = curve.tangent_at(t)?;
        let p = p_field(x)?;
        let mut a = DMatrix::zeros(n, n);
        for al in 0..n {
            for ga in 0..n {
                let mut acc = 0.0;
                for (be, tb) in tau.iter().enumerate() {
                    acc += tb * p[al][ga][be];
                }
                a[(al, ga)] = acc;
            }
        }
        Ok((tau, a * e))
    };

    let steps = (curve.t_end / step).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut t = 0.0;
    let mut x = curve.start.clone();
    let mut e = initial;
    out.push((t, x.clone(), e.clone()));
    for _ in 0..steps {
        let h = step.min(curve.t_end - t);
        if h <= 0.0 {
            break;
        }
        let (kx1, ke1) = deriv(t, &x, &e)?;
        let x2: Vec<f64> = x.iter().zip(&kx1).map(|(a, b)| a + 0.5 * h * b).collect();
        let (kx2, ke2) = deriv(t + 0.5 * h, &x2, &(&e + &ke1 * (0.5 * h)))?;
        let x3: Vec<f64> = x.iter().zip(&kx2).map(|(a, b)| a + 0.5 * h * b).collect();
        let (kx3, ke3) = deriv(t + 0.5 * h, &x3, &(&e + &ke2 * (0.5 * h)))?;
        let x4: Vec<f64> = x.iter().zip(&kx3).map(|(a, b)| a + h * b).collect();
        let (kx4, ke4) = deriv(t + h, &x4, &(&e + &ke3 * h))?;
        for i in 0..n {
            x[i] += h / 6.0 * (kx1[i] + 2.0 * kx2[i] + 2.0 * kx3[i] + kx4[i]);
        }
        e = &e + (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4) * (h / 6.0);
        t += h;
        out.push((t, x.clone(), e.clone()));
    }
    Ok(out)
}

/// Outcome of the dual-basis pipeline.
#[derive(Clone, Debug)]
pub struct PropositionReport {
    /// Max over the path of `|e_i ẽ^j − f_i^j|`.
    pub max_deviation: f64,
    /// Richardson error estimate of the integration.
    pub error_estimate: f64,
}

/// Full pipeline: solve `P` along the curve, anchor the contravariant basis
/// at the start by one linear solve of `e_i ẽ^j = f_i^j`, integrate, and
/// report the worst violation of the mixed products along the path.
pub fn verify_proposition(
    frame: &Frame,
    f: &MixedTarget,
    gamma: &ConnectionField,
    curve: &CurveSpec,
) -> Result<PropositionReport, DualBasisError> {
    let n = frame.chart().dim();
    let e0 = frame.eval_at(&curve.start)?;
    if e0.determinant().abs() <= 1e-12 {
        return Err(DualBasisError::SingularFrame);
    }
    let f0 = f.eval_at(&curve.start)?;
    // initial basis: columns of E solve  Σ_μ e_i^μ (ẽ^j)^μ = f_i^j
    let lu = e0.clone().lu();
    let mut initial = DMatrix::zeros(n, n);
    for j in 0..n {
        let rhs = DMatrix::from_fn(n, 1, |i, _| f0[(i, j)]);
        let sol = lu.solve(&rhs).ok_or(DualBasisError::SingularFrame)?;
        for mu in 0..n {
            initial[(j, mu)] = sol[(mu, 0)];
        }
    }
    let p_field = |x: &[f64]| solve_second_connection(f, gamma, x);
    let traj = integrate_contravariant_basis(p_field, initial, curve)?;

    let mut max_dev = 0.0f64;
    for (_, x, e) in &traj.states {
        let frame_x = frame.eval_at(x)?;
        let f_x = f.eval_at(x)?;
        for i in 0..n {
            for j in 0..n {
                let mut prod = 0.0;
                for mu in 0..n {
                    prod += frame_x[(i, mu)] * e[(j, mu)];
                }
                max_dev = max_dev.max((prod - f_x[(i, j)]).abs());
            }
        }
    }
    Ok(PropositionReport {
        max_deviation: max_dev,
        error_estimate: traj.error_estimate,
    })
}

/// Projective split `g = p + h` with δ-raised contravariant components.
#[derive(Clone, Debug)]
pub struct ProjectiveDecomposition {
    pub p: Mat,
    pub p_contra: Mat,
    /// `p_{ij} p^{jk}`; differs from the identity by `h_{ij} h^{jk}`.
    pub product: Mat,
    /// Sampled verdict on the orthogonality `p_{ij} h^{jk} = 0`.
    pub orthogonal: bool,
}

/// Splits off a sub-tensor `h` from the metric: `p = g − h`, raises indices
/// with the true inverse of `g`, and reports the mixed product together with
/// the orthogonality check (violations are reported, not fatal).
pub fn projective_decompose(
    g: &MetricField,
    h: &Mat,
    plan: &SamplePlan,
) -> Result<ProjectiveDecomposition, DualBasisError> {
    let n = g.dim();
    if h.len() != n {
        return Err(DualBasisError::Dimension {
            got: h.len(),
            expected: n,
        });
    }
    let ginv = g.inverse()?;
    let raise = |m: &Mat| -> Mat {
        let mut up = zero_mat(n);
        for j in 0..n {
            for k in 0..n {
                let mut terms = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        terms.push(&(&ginv[j][a] * &ginv[k][b]) * &m[a][b]);
                    }
                }
                up[j][k] = Expr::sum(terms);
            }
        }
        up
    };
    let mut p = zero_mat(n);
    for i in 0..n {
        for j in 0..n {
            p[i][j] = g.entry(i, j) - &h[i][j];
        }
    }
    let p_contra = raise(&p);
    let h_contra = raise(h);
    let mut product = zero_mat(n);
    let mut orthogonal = true;
    for i in 0..n {
        for k in 0..n {
            product[i][k] = Expr::sum((0..n).map(|j| &p[i][j] * &p_contra[j][k]).collect());
            let ortho = Expr::sum((0..n).map(|j| &p[i][j] * &h_contra[j][k]).collect());
            if !equiv_zero(&ortho, g.chart(), plan).is_agree() {
                orthogonal = false;
            }
        }
    }
    Ok(ProjectiveDecomposition {
        p,
        p_contra,
        product,
        orthogonal,
    })
}

/// Verdicts of the lapse/shift assembly check.
#[derive(Clone, Debug)]
pub struct LapseShiftReport {
    /// `g_{μν} g^{νλ} = δ` for the assembled pair — the load-bearing check.
    pub product_is_identity: bool,
    /// `p_{ij} p^{jk} = δ` for the spatial block.
    pub spatial_product_is_identity: bool,
    /// Recorded observation: whether `N_i N^i = N²` happens to hold.
    pub shift_norm_equals_lapse_sq: bool,
}

/// Assembles the 4-metric from lapse `N`, shift `N_i` and spatial metric
/// `p_{ij}` (time slot first):
///
/// `g_00 = −(N² − N_i N^i)`, `g_{0i} = N_i`, `g_{ij} = p_{ij}`,
/// `g^{00} = −1/N²`, `g^{0i} = N^i/N²`, `g^{ij} = p^{ij} − N^i N^j / N²`,
///
/// with `N^i = p^{ij} N_j`, and verifies by sampling that the two assemblies
/// are mutually inverse. The `N_i N^i = N²` relation is evaluated and
/// reported as an observation; it constrains the data rather than following
/// from the split.
pub fn lapse_shift_check(
    chart: &Chart,
    lapse: &Expr,
    shift: &[Expr],
    p_spatial: &Mat,
    plan: &SamplePlan,
) -> Result<LapseShiftReport, DualBasisError> {
    let dim = chart.dim();
    if dim != 4 {
        return Err(DualBasisError::NotFourDimensional(dim));
    }
    if shift.len() != 3 || p_spatial.len() != 3 {
        return Err(DualBasisError::Dimension {
            got: shift.len().max(p_spatial.len()),
            expected: 3,
        });
    }
    if lapse.is_zero() {
        return Err(DualBasisError::ZeroLapse);
    }
    let p_inv = sym_inverse(p_spatial)?;
    // N^i = p^{ij} N_j
    let shift_up: Vec<Expr> = (0..3)
        .map(|i| Expr::sum((0..3).map(|j| &p_inv[i][j] * &shift[j]).collect()))
        .collect();
    let shift_norm = Expr::sum((0..3).map(|i| &shift[i] * &shift_up[i]).collect());
    let n2 = lapse * lapse;

    let mut g = zero_mat(4);
    g[0][0] = Expr::neg(&n2 - &shift_norm);
    for i in 0..3 {
        g[0][i + 1] = shift[i].clone();
        g[i + 1][0] = shift[i].clone();
        for j in 0..3 {
            g[i + 1][j + 1] = p_spatial[i][j].clone();
        }
    }
    let mut ginv = zero_mat(4);
    ginv[0][0] = Expr::neg(Expr::div(Expr::one(), n2.clone()));
    for i in 0..3 {
        ginv[0][i + 1] = Expr::div(shift_up[i].clone(), n2.clone());
        ginv[i + 1][0] = ginv[0][i + 1].clone();
        for j in 0..3 {
            ginv[i + 1][j + 1] =
                &p_inv[i][j] - &Expr::div(&shift_up[i] * &shift_up[j], n2.clone());
        }
    }

    let is_identity = |a: &Mat, b: &Mat| -> bool {
        for i in 0..a.len() {
            for k in 0..a.len() {
                let prod = Expr::sum(
                    (0..a.len()).map(|j| &a[i][j] * &b[j][k]).collect(),
                );
                let delta = if i == k { Expr::one() } else { Expr::zero() };
                if !equiv(&prod, &delta, chart, plan).is_agree() {
                    return false;
                }
            }
        }
        true
    };

    Ok(LapseShiftReport {
        product_is_identity: is_identity(&g, &ginv),
        spatial_product_is_identity: is_identity(p_spatial, &p_inv),
        shift_norm_equals_lapse_sq: equiv(&shift_norm, &n2, chart, plan).is_agree(),
    })
}

/// Flow projector mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectorMode {
    /// `f_i^k = δ_i^k − u_i u^k` with unit normalization enforced.
    Normalized,
    /// `f_i^k = δ_i^k − u_i u^k / e` with `e = u_i u^i` variable.
    VariableLength,
}

#[derive(Clone, Debug)]
pub struct FlowProjector {
    pub f: Mat,
    /// `e = u_i u^i`.
    pub length: Expr,
    pub mode: ProjectorMode,
    /// Sampled verdict on `trace f = n − 1`.
    pub trace_is_n_minus_one: bool,
    /// The variable-length projector is not a tensor under coordinate
    /// change; this flag records the mode's transformation status rather
    /// than recomputing it.
    pub tensorial: bool,
}

/// Builds the projector orthogonal to a covariant flow field `u_i`
/// (raised with the true inverse of `g`).
pub fn flow_projector(
    g: &MetricField,
    u: &[Expr],
    mode: ProjectorMode,
    plan: &SamplePlan,
) -> Result<FlowProjector, DualBasisError> {
    let n = g.dim();
    if u.len() != n {
        return Err(DualBasisError::Dimension {
            got: u.len(),
            expected: n,
        });
    }
    let ginv = g.inverse()?;
    let u_up: Vec<Expr> = (0..n)
        .map(|k| Expr::sum((0..n).map(|j| &ginv[k][j] * &u[j]).collect()))
        .collect();
    let length = Expr::sum((0..n).map(|i| &u[i] * &u_up[i]).collect());
    if mode == ProjectorMode::Normalized
        && !equiv(&length, &Expr::one(), g.chart(), plan).is_agree()
    {
        return Err(DualBasisError::NormalizationViolated);
    }
    let mut f = zero_mat(n);
    for i in 0..n {
        for k in 0..n {
            let delta = if i == k { Expr::one() } else { Expr::zero() };
            let outer = &u[i] * &u_up[k];
            f[i][k] = match mode {
                ProjectorMode::Normalized => delta - outer,
                ProjectorMode::VariableLength => delta - Expr::div(outer, length.clone()),
            };
        }
    }
    let trace = Expr::sum((0..n).map(|i| f[i][i].clone()).collect());
    let want = Expr::constant((n - 1) as f64);
    Ok(FlowProjector {
        trace_is_n_minus_one: equiv(&trace, &want, g.chart(), plan).is_agree(),
        f,
        length,
        mode: mode_copy(mode),
        tensorial: mode == ProjectorMode::Normalized,
    })
}

fn mode_copy(m: ProjectorMode) -> ProjectorMode {
    m
}
