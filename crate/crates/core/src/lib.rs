//! Symbolic-numeric verification engine for gravitational models in which
//! the covariant metric and the contravariant metric are independent fields.
//!
//! The crate builds connections, Ricci tensors, Lagrangian residuals and
//! algebraic field equations as exact symbolic expressions over a coordinate
//! chart, then decides identities by seeded random sampling. A separate
//! elliptic module evaluates Weierstrass/Eisenstein quantities for the
//! cubic normal forms these theories produce, and the affine/dual-basis
//! modules check transformation-law and basis-duality properties.

// tensor formulas are written as explicit index loops to stay close to the
// component notation; iterator rewrites would obscure the transcriptions
#![allow(clippy::needless_range_loop)]
// Expr::div / Expr::neg are normalizing constructors, not trait impls
#![allow(clippy::should_implement_trait)]

pub mod affine;
pub mod algebraic;
pub mod dualbasis;
pub mod elliptic;
pub mod equiv;
pub mod expr;
pub mod geometry;
pub mod parse;

pub use equiv::{equiv, equiv_all, equiv_zero, EquivVerdict, SamplePlan};
pub use expr::{Chart, ChartError, EvalError, Expr, Ratio};
pub use parse::{parse, ParseError};

/// Convention for expanding implicit index (anti)symmetrization brackets.
///
/// `A_(i B_k)` expands as the plain two-term sum `A_i B_k + A_k B_i` under
/// [`Convention::Paper`]; [`Convention::Halved`] multiplies every such
/// expansion by 1/2 (and likewise for the two-term antisymmetrization
/// differences).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    Paper,
    Halved,
}

impl Convention {
    /// Scale applied to each expanded bracket.
    pub fn factor(self) -> f64 {
        match self {
            Convention::Paper => 1.0,
            Convention::Halved => 0.5,
        }
    }

    /// Shorthand for the factor as an expression.
    pub fn factor_expr(self) -> Expr {
        Expr::constant(self.factor())
    }
}
