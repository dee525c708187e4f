//! Immutable symbolic expression trees over a coordinate chart.
//!
//! An [`Expr`] is a tree of constants, coordinate references, sums, products,
//! rational powers, quotients and the analytic primitives `sin`, `cos`, `exp`,
//! `log`. Trees are normalized on construction (constant folding, flattening
//! of sums and products, absorption of zeros and ones) and never mutated
//! afterwards, so sharing via `Arc` is safe and cheap. Differentiation is
//! exact and closed: the derivative of any expression is again an expression.
//!
//! There is deliberately no simplifier beyond normalization — no
//! factorization, no trigonometric rewriting. Equality of expressions is
//! decided by seeded random sampling (see [`crate::equiv`]), not by canonical
//! forms.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors from chart construction.
#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("chart dimension {0} outside supported range 1..=6")]
    BadDimension(usize),
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("degenerate sampling interval for `{name}`: [{lo}, {hi}]")]
    DegenerateInterval { name: String, lo: f64, hi: f64 },
}

/// Errors from numeric evaluation of an expression.
#[derive(Debug, Error, PartialEq, Clone)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("non-integer power of negative base {base}^({num}/{den})")]
    NegativeBasePower { base: f64, num: i64, den: i64 },
    #[error("point has {got} components, chart expects {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("coordinate index {0} out of range")]
    CoordOutOfRange(usize),
}

/// An ordered coordinate chart with per-coordinate sampling intervals.
///
/// Charts carry optional singular loci: coordinate values around which the
/// sampler keeps a guard band (default `1e-3`) so that randomized checks do
/// not land on metric degeneracies like `sin θ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    domains: Vec<(f64, f64)>,
    singular: Vec<Vec<f64>>,
    guard: f64,
}

impl Chart {
    pub fn new(names: &[&str], domains: &[(f64, f64)]) -> Result<Self, ChartError> {
        let n = names.len();
        if n == 0 || n > 6 || domains.len() != n {
            return Err(ChartError::BadDimension(n.max(domains.len())));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(ChartError::DuplicateName(name.to_string()));
            }
        }
        for (name, &(lo, hi)) in names.iter().zip(domains) {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(ChartError::DegenerateInterval {
                    name: name.to_string(),
                    lo,
                    hi,
                });
            }
        }
        Ok(Chart {
            names: names.iter().map(|s| s.to_string()).collect(),
            domains: domains.to_vec(),
            singular: vec![Vec::new(); n],
            guard: 1e-3,
        })
    }

    /// Declares a singular locus on one coordinate; sampling avoids a guard
    /// band around it.
    pub fn with_singular_locus(mut self, coord: usize, value: f64) -> Self {
        self.singular[coord].push(value);
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn domains(&self) -> &[(f64, f64)] {
        &self.domains
    }

    pub fn singular_loci(&self, coord: usize) -> &[f64] {
        &self.singular[coord]
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Midpoint of the sampling box; used for one-point invariant checks.
    pub fn midpoint(&self) -> Vec<f64> {
        self.domains.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// A rational exponent `num/den`, normalized with `den > 0` and `gcd = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational exponent with zero denominator");
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn integer(n: i64) -> Self {
        Ratio { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn minus_one(&self) -> Ratio {
        Ratio::new(self.num - self.den, self.den)
    }

    /// Recovers a small rational from a float, requiring an exact bit match.
    pub fn from_f64_exact(x: f64) -> Option<Ratio> {
        if !x.is_finite() {
            return None;
        }
        if x == x.trunc() && x.abs() < 1e15 {
            return Some(Ratio::integer(x as i64));
        }
        for den in 2..=64i64 {
            let num = (x * den as f64).round();
            if num.abs() < 1e15 && num / den as f64 == x {
                return Some(Ratio::new(num as i64, den));
            }
        }
        None
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Debug, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Coord(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, Ratio),
    Neg(Expr),
    Div(Expr, Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
}

/// An immutable, normalized symbolic expression.
#[derive(Clone, PartialEq)]
pub struct Expr {
    node: Arc<Node>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_raw())
    }
}

fn wrap(node: Node) -> Expr {
    Expr {
        node: Arc::new(node),
    }
}

impl Expr {
    pub(crate) fn node(&self) -> &Node {
        &self.node
    }

    pub fn constant(c: f64) -> Expr {
        wrap(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn half() -> Expr {
        Expr::constant(0.5)
    }

    pub fn coord(i: usize) -> Expr {
        wrap(Node::Coord(i))
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.node, Node::Const(c) if c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(*self.node, Node::Const(c) if c == 1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.node {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Normalizing n-ary sum: flattens, folds constants, drops zeros.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut acc = 0.0;
        let mut stack = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match &*t.node {
                Node::Const(c) => acc += c,
                Node::Sum(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                _ => flat.push(t),
            }
        }
        if acc != 0.0 {
            flat.insert(0, Expr::constant(acc));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => wrap(Node::Sum(flat)),
        }
    }

    /// Normalizing n-ary product: flattens, folds constants (signs from `Neg`
    /// factors fold into the constant), absorbs zero, drops ones.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut acc = 1.0;
        let mut stack = factors;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match &*t.node {
                Node::Const(c) => {
                    if *c == 0.0 {
                        return Expr::zero();
                    }
                    acc *= c;
                }
                Node::Product(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                Node::Neg(inner) => {
                    acc = -acc;
                    stack.push(inner.clone());
                }
                _ => flat.push(t),
            }
        }
        if flat.is_empty() {
            return Expr::constant(acc);
        }
        if acc != 1.0 {
            flat.insert(0, Expr::constant(acc));
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => wrap(Node::Product(flat)),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        match &*e.node {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            Node::Product(_) => Expr::product(vec![Expr::constant(-1.0), e.clone()]),
            _ => wrap(Node::Neg(e)),
        }
    }

    pub fn pow(base: Expr, exp: Ratio) -> Expr {
        if exp.num() == 0 {
            return Expr::one();
        }
        if exp == Ratio::integer(1) {
            return base;
        }
        if let Node::Const(c) = *base.node {
            if c == 0.0 && exp.num() > 0 {
                return Expr::zero();
            }
            if c == 1.0 {
                return Expr::one();
            }
            if exp.is_integer() && exp.num().abs() <= 64 {
                return Expr::constant(c.powi(exp.num() as i32));
            }
        }
        wrap(Node::Pow(base, exp))
    }

    pub fn pow_int(base: Expr, n: i64) -> Expr {
        Expr::pow(base, Ratio::integer(n))
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::pow(e, Ratio::new(1, 2))
    }

    /// Quotient. The denominator must not be the literal zero constant.
    pub fn div(num: Expr, den: Expr) -> Expr {
        assert!(!den.is_zero(), "quotient with zero constant denominator");
        if num.is_zero() {
            return Expr::zero();
        }
        if den.is_one() {
            return num;
        }
        if let (Node::Const(a), Node::Const(b)) = (&*num.node, &*den.node) {
            return Expr::constant(a / b);
        }
        wrap(Node::Div(num, den))
    }

    pub fn sin(&self) -> Expr {
        match *self.node {
            Node::Const(c) => Expr::constant(c.sin()),
            _ => wrap(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Expr {
        match *self.node {
            Node::Const(c) => Expr::constant(c.cos()),
            _ => wrap(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        match *self.node {
            Node::Const(c) => Expr::constant(c.exp()),
            _ => wrap(Node::Exp(self.clone())),
        }
    }

    /// Natural logarithm. Constants fold only when strictly positive;
    /// non-positive arguments are left for evaluation to report.
    pub fn log(&self) -> Expr {
        match *self.node {
            Node::Const(c) if c > 0.0 => Expr::constant(c.ln()),
            _ => wrap(Node::Log(self.clone())),
        }
    }

    /// Exact partial derivative with respect to coordinate `k`.
    pub fn diff(&self, k: usize) -> Expr {
        match &*self.node {
            Node::Const(_) => Expr::zero(),
            Node::Coord(i) => {
                if *i == k {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(terms) => Expr::sum(terms.iter().map(|t| t.diff(k)).collect()),
            Node::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, fi) in factors.iter().enumerate() {
                    let d = fi.diff(k);
                    if d.is_zero() {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(factors.len());
                    for (j, fj) in factors.iter().enumerate() {
                        fs.push(if i == j { d.clone() } else { fj.clone() });
                    }
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Pow(base, r) => {
                let d = base.diff(k);
                if d.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![
                    Expr::constant(r.as_f64()),
                    Expr::pow(base.clone(), r.minus_one()),
                    d,
                ])
            }
            Node::Neg(e) => Expr::neg(e.diff(k)),
            Node::Div(num, den) => {
                let dn = num.diff(k);
                let dd = den.diff(k);
                if dd.is_zero() {
                    return Expr::div(dn, den.clone());
                }
                let numerator = Expr::sum(vec![
                    Expr::product(vec![dn, den.clone()]),
                    Expr::neg(Expr::product(vec![num.clone(), dd])),
                ]);
                Expr::div(numerator, Expr::pow_int(den.clone(), 2))
            }
            Node::Sin(e) => Expr::product(vec![e.cos(), e.diff(k)]),
            Node::Cos(e) => Expr::neg(Expr::product(vec![e.sin(), e.diff(k)])),
            Node::Exp(e) => Expr::product(vec![self.clone(), e.diff(k)]),
            Node::Log(e) => Expr::div(e.diff(k), e.clone()),
        }
    }

    /// Evaluates at a point. Deterministic; distinct failure modes for
    /// division by zero, `log` of a non-positive value and fractional powers
    /// of negative bases.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match &*self.node {
            Node::Const(c) => Ok(*c),
            Node::Coord(i) => point
                .get(*i)
                .copied()
                .ok_or(EvalError::CoordOutOfRange(*i)),
            Node::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(point)?;
                }
                Ok(acc)
            }
            Node::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval(point)?;
                }
                Ok(acc)
            }
            Node::Pow(base, r) => {
                let b = base.eval(point)?;
                if r.is_integer() {
                    if b == 0.0 && r.num() < 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    Ok(b.powi(r.num() as i32))
                } else if b < 0.0 {
                    Err(EvalError::NegativeBasePower {
                        base: b,
                        num: r.num(),
                        den: r.den(),
                    })
                } else if b == 0.0 && r.num() < 0 {
                    Err(EvalError::DivisionByZero)
                } else {
                    Ok(b.powf(r.as_f64()))
                }
            }
            Node::Neg(e) => Ok(-e.eval(point)?),
            Node::Div(num, den) => {
                let d = den.eval(point)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(num.eval(point)? / d)
            }
            Node::Sin(e) => Ok(e.eval(point)?.sin()),
            Node::Cos(e) => Ok(e.eval(point)?.cos()),
            Node::Exp(e) => Ok(e.eval(point)?.exp()),
            Node::Log(e) => {
                let v = e.eval(point)?;
                if v <= 0.0 {
                    return Err(EvalError::LogNonPositive(v));
                }
                Ok(v.ln())
            }
        }
    }

    /// Evaluation that computes shared subtrees once per call. Results are
    /// bit-identical to [`Expr::eval`]; only repeated work is skipped, which
    /// matters for the long residual sums whose connection and determinant
    /// subtrees are heavily shared.
    pub fn eval_shared(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut cache: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        self.eval_cached(point, &mut cache)
    }

    fn eval_cached(
        &self,
        point: &[f64],
        cache: &mut std::collections::HashMap<usize, f64>,
    ) -> Result<f64, EvalError> {
        // only nodes that are actually shared earn a cache slot
        let shared = Arc::strong_count(&self.node) > 1;
        let key = Arc::as_ptr(&self.node) as usize;
        if shared {
            if let Some(&v) = cache.get(&key) {
                return Ok(v);
            }
        }
        let v = match &*self.node {
            Node::Const(c) => *c,
            Node::Coord(i) => point
                .get(*i)
                .copied()
                .ok_or(EvalError::CoordOutOfRange(*i))?,
            Node::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_cached(point, cache)?;
                }
                acc
            }
            Node::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval_cached(point, cache)?;
                }
                acc
            }
            Node::Pow(base, r) => {
                let b = base.eval_cached(point, cache)?;
                if r.is_integer() {
                    if b == 0.0 && r.num() < 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    b.powi(r.num() as i32)
                } else if b < 0.0 {
                    return Err(EvalError::NegativeBasePower {
                        base: b,
                        num: r.num(),
                        den: r.den(),
                    });
                } else if b == 0.0 && r.num() < 0 {
                    return Err(EvalError::DivisionByZero);
                } else {
                    b.powf(r.as_f64())
                }
            }
            Node::Neg(e) => -e.eval_cached(point, cache)?,
            Node::Div(num, den) => {
                let d = den.eval_cached(point, cache)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num.eval_cached(point, cache)? / d
            }
            Node::Sin(e) => e.eval_cached(point, cache)?.sin(),
            Node::Cos(e) => e.eval_cached(point, cache)?.cos(),
            Node::Exp(e) => e.eval_cached(point, cache)?.exp(),
            Node::Log(e) => {
                let v = e.eval_cached(point, cache)?;
                if v <= 0.0 {
                    return Err(EvalError::LogNonPositive(v));
                }
                v.ln()
            }
        };
        if shared {
            cache.insert(key, v);
        }
        Ok(v)
    }

    /// Replaces coordinate `i` by `subs[i]` throughout; used to compose
    /// expressions across charts.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match &*self.node {
            Node::Const(_) => self.clone(),
            Node::Coord(i) => subs[*i].clone(),
            Node::Sum(v) => Expr::sum(v.iter().map(|e| e.substitute(subs)).collect()),
            Node::Product(v) => Expr::product(v.iter().map(|e| e.substitute(subs)).collect()),
            Node::Pow(b, r) => Expr::pow(b.substitute(subs), *r),
            Node::Neg(e) => Expr::neg(e.substitute(subs)),
            Node::Div(a, b) => Expr::div(a.substitute(subs), b.substitute(subs)),
            Node::Sin(e) => e.substitute(subs).sin(),
            Node::Cos(e) => e.substitute(subs).cos(),
            Node::Exp(e) => e.substitute(subs).exp(),
            Node::Log(e) => e.substitute(subs).log(),
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match &*self.node {
            Node::Const(_) => None,
            Node::Coord(i) => Some(*i),
            Node::Sum(v) | Node::Product(v) => v.iter().filter_map(|e| e.max_coord()).max(),
            Node::Pow(e, _) | Node::Neg(e) | Node::Sin(e) | Node::Cos(e) | Node::Exp(e)
            | Node::Log(e) => e.max_coord(),
            Node::Div(a, b) => a.max_coord().max(b.max_coord()),
        }
    }

    /// Renders with coordinate names from `chart`; the output re-parses to a
    /// structurally equal tree.
    pub fn display<'a>(&'a self, chart: &'a Chart) -> ExprDisplay<'a> {
        ExprDisplay {
            expr: self,
            names: Some(chart),
        }
    }

    fn display_raw(&self) -> ExprDisplay<'_> {
        ExprDisplay {
            expr: self,
            names: None,
        }
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), rhs.clone()])
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), Expr::neg(rhs.clone())])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, Expr::neg(rhs)])
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::product(vec![self.clone(), rhs.clone()])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self.clone(), rhs.clone())
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

// Printing precedence levels: sums lowest, then products/quotients, powers,
// atoms. Chosen so that the printed form re-parses to the same tree.
fn prec(node: &Node) -> u8 {
    match node {
        Node::Sum(_) | Node::Neg(_) => 1,
        Node::Product(_) | Node::Div(..) => 2,
        Node::Pow(..) => 3,
        _ => 4,
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: Option<&'a Chart>,
}

fn fmt_expr(e: &Expr, names: Option<&Chart>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    fn paren(
        e: &Expr,
        min: u8,
        names: Option<&Chart>,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        if prec(e.node()) < min {
            write!(f, "(")?;
            fmt_expr(e, names, f)?;
            write!(f, ")")
        } else {
            fmt_expr(e, names, f)
        }
    }
    match e.node() {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "-{}", -c)
            } else {
                write!(f, "{c}")
            }
        }
        Node::Coord(i) => match names {
            Some(chart) => write!(f, "{}", chart.name(*i)),
            None => write!(f, "x{i}"),
        },
        Node::Sum(terms) => {
            for (k, t) in terms.iter().enumerate() {
                match t.node() {
                    Node::Neg(inner) if k > 0 => {
                        write!(f, " - ")?;
                        paren(inner, 3, names, f)?;
                    }
                    Node::Const(c) if k > 0 && *c < 0.0 => {
                        write!(f, " - {}", -c)?;
                    }
                    _ => {
                        if k > 0 {
                            write!(f, " + ")?;
                        }
                        paren(t, 1, names, f)?;
                    }
                }
            }
            Ok(())
        }
        Node::Product(factors) => {
            for (k, t) in factors.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                // later '/' children need parens to survive left-associative
                // reparsing
                let min = if k == 0 { 2 } else { 3 };
                paren(t, min, names, f)?;
            }
            Ok(())
        }
        Node::Div(a, b) => {
            paren(a, 2, names, f)?;
            write!(f, "/")?;
            paren(b, 3, names, f)
        }
        Node::Pow(b, r) => {
            paren(b, 4, names, f)?;
            if r.is_integer() && r.num() >= 0 {
                write!(f, "^{}", r.num())
            } else {
                write!(f, "^({r})")
            }
        }
        Node::Neg(inner) => {
            // operand below power precedence needs parens so that e.g.
            // -(a/b) does not reparse as (-a)/b
            write!(f, "-")?;
            paren(inner, 3, names, f)
        }
        Node::Sin(e) => {
            write!(f, "sin(")?;
            fmt_expr(e, names, f)?;
            write!(f, ")")
        }
        Node::Cos(e) => {
            write!(f, "cos(")?;
            fmt_expr(e, names, f)?;
            write!(f, ")")
        }
        Node::Exp(e) => {
            write!(f, "exp(")?;
            fmt_expr(e, names, f)?;
            write!(f, ")")
        }
        Node::Log(e) => {
            write!(f, "log(")?;
            fmt_expr(e, names, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self.expr, self.names, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart2() -> Chart {
        Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap()
    }

    #[test]
    fn normalization_folds_constants() {
        let e = Expr::sum(vec![Expr::constant(1.0), Expr::constant(2.0), Expr::coord(0)]);
        assert_eq!(e, Expr::sum(vec![Expr::constant(3.0), Expr::coord(0)]));
        let p = Expr::product(vec![Expr::constant(0.0), Expr::coord(1)]);
        assert!(p.is_zero());
        let q = Expr::product(vec![Expr::one(), Expr::coord(1)]);
        assert_eq!(q, Expr::coord(1));
    }

    #[test]
    fn neg_of_product_folds_into_constant() {
        let x = Expr::coord(0);
        let a = Expr::neg(Expr::product(vec![Expr::constant(2.0), x.clone()]));
        let b = Expr::product(vec![Expr::constant(-2.0), x]);
        assert_eq!(a, b);
    }

    #[test]
    fn diff_constant_is_zero() {
        assert!(Expr::constant(7.5).diff(0).is_zero());
    }

    #[test]
    fn diff_square_is_linear() {
        let x = Expr::coord(0);
        let d = Expr::pow_int(x.clone(), 2).diff(0);
        assert_eq!(d, Expr::product(vec![Expr::constant(2.0), x]));
    }

    #[test]
    fn diff_out_of_range_coordinate_is_zero_expr() {
        // diff is total over the index; validity against a chart is the
        // caller's concern
        let x = Expr::coord(0);
        assert!(x.diff(3).is_zero());
    }

    #[test]
    fn eval_basics() {
        let x = Expr::coord(0);
        let y = Expr::coord(1);
        assert_eq!((&x + &y).eval(&[1.0, 2.0]).unwrap(), 3.0);
        let r = Expr::div(Expr::one(), x).eval(&[0.0, 1.0]);
        assert_eq!(r, Err(EvalError::DivisionByZero));
    }

    #[test]
    fn eval_hand_value() {
        // r*sin(x) at (2, pi/6) = 1
        let e = Expr::coord(0) * Expr::coord(1).sin();
        let v = e.eval(&[2.0, std::f64::consts::FRAC_PI_6]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eval_error_modes_are_distinct() {
        let x = Expr::coord(0);
        assert_eq!(
            x.log().eval(&[-1.0]),
            Err(EvalError::LogNonPositive(-1.0))
        );
        assert!(matches!(
            Expr::sqrt(x.clone()).eval(&[-4.0]),
            Err(EvalError::NegativeBasePower { .. })
        ));
        assert_eq!(
            Expr::pow_int(x, -1).eval(&[0.0]),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn eval_is_pure() {
        let e = Expr::coord(0).sin() * Expr::coord(1).exp() + Expr::sqrt(Expr::coord(0));
        let p = [0.37, 1.21];
        let a = e.eval(&p).unwrap();
        for _ in 0..10 {
            assert_eq!(a.to_bits(), e.eval(&p).unwrap().to_bits());
        }
    }

    #[test]
    fn substitute_composes() {
        let e = Expr::coord(0) * Expr::coord(1); // x*y
        let sub = e.substitute(&[Expr::coord(1), Expr::constant(3.0)]);
        assert_eq!(sub, Expr::product(vec![Expr::constant(3.0), Expr::coord(1)]));
    }

    #[test]
    fn display_round_trip_spot_checks() {
        let chart = chart2();
        let x = Expr::coord(0);
        let y = Expr::coord(1);
        let cases = vec![
            &x + &y,
            &x - &y,
            Expr::div(Expr::one(), &x + &y),
            Expr::pow(x.clone(), Ratio::new(1, 2)),
            Expr::pow_int(&x + &y, 3),
            Expr::product(vec![Expr::constant(-2.0), x.clone(), y.sin()]),
            Expr::product(vec![x.clone(), Expr::div(y.clone(), &x + &y)]),
            (x.clone() * y.clone()).exp() - Expr::div(x.clone(), Expr::pow_int(y.clone(), 2)),
        ];
        for e in cases {
            let text = e.display(&chart).to_string();
            let back = crate::parse::parse(&text, &chart).unwrap();
            assert_eq!(e, back, "round trip failed for `{text}`");
        }
    }

    #[test]
    fn ratio_from_f64() {
        assert_eq!(Ratio::from_f64_exact(0.5), Some(Ratio::new(1, 2)));
        assert_eq!(Ratio::from_f64_exact(3.0), Some(Ratio::integer(3)));
        assert_eq!(Ratio::from_f64_exact(1.0 / 3.0), Some(Ratio::new(1, 3)));
        assert_eq!(Ratio::from_f64_exact(0.123456789), None);
    }
}
