//! Line-oriented model file format: bracketed block headers with
//! `key = value` lines. Expression values are double-quoted strings in the
//! engine's grammar; lists are comma-separated. `#` starts a comment.
//! Validation collects every error rather than stopping at the first.

use std::collections::BTreeMap;
use std::fmt;

use dualmetric::affine::CoordinateMap;
use dualmetric::elliptic::{Lattice, SzekeresModel};
use dualmetric::expr::{Chart, Expr};
use dualmetric::geometry::{zero_mat, ContravariantField, Mat, MetricField};
use dualmetric::parse::parse;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct ModelError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "{}", self.message)
        }
    }
}

/// A fully validated model: chart plus whichever blocks the file supplied.
pub struct ModelSpec {
    pub chart: Chart,
    pub metric: Option<MetricField>,
    pub contravariant: Option<ContravariantField>,
    pub map: Option<CoordinateMap>,
    pub map_vector: Option<Vec<Expr>>,
    pub curve_constants: Option<Vec<f64>>,
    pub curve: Option<CurveBlock>,
    pub elliptic: Option<EllipticBlock>,
    pub projective_h: Option<Mat>,
    pub adm: Option<AdmBlock>,
    pub hydro: Option<HydroBlock>,
}

pub struct CurveBlock {
    pub start: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    pub tangent: Vec<Expr>,
}

pub struct EllipticBlock {
    pub lattice: Option<Lattice>,
    pub truncation: Option<usize>,
    pub szekeres: Option<SzekeresModel>,
    pub phi0: f64,
}

pub struct AdmBlock {
    pub lapse: Expr,
    pub shift: Vec<Expr>,
    pub p: Mat,
}

pub struct HydroBlock {
    pub u: Vec<Expr>,
    pub normalized: bool,
}

// raw key-value collection per block, with line numbers
#[derive(Default)]
struct RawBlock {
    entries: Vec<(usize, String, String)>,
}

impl RawBlock {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }
}

const KNOWN_BLOCKS: [&str; 9] = [
    "chart",
    "metric",
    "contravariant",
    "map",
    "curve",
    "elliptic",
    "projective",
    "adm",
    "hydro",
];

struct Collector {
    errors: Vec<ModelError>,
}

impl Collector {
    fn push(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ModelError {
            line,
            message: message.into(),
        });
    }
}

/// Parses and validates; returns either the model or the full error list.
pub fn load_model(text: &str) -> Result<ModelSpec, Vec<ModelError>> {
    let mut blocks: BTreeMap<String, RawBlock> = BTreeMap::new();
    let mut errors = Collector { errors: Vec::new() };
    let mut current: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_lowercase();
            if !KNOWN_BLOCKS.contains(&name.as_str()) {
                errors.push(line_no, format!("unknown block `[{name}]`"));
                current = None;
                continue;
            }
            blocks.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(line_no, format!("expected `key = value`, got `{line}`"));
            continue;
        };
        let Some(block) = &current else {
            errors.push(line_no, "key outside of any block".to_string());
            continue;
        };
        blocks.get_mut(block).unwrap().entries.push((
            line_no,
            key.trim().to_lowercase(),
            value.trim().to_string(),
        ));
    }

    let Some(chart_block) = blocks.get("chart") else {
        errors.push(0, "missing required [chart] block");
        return Err(errors.errors);
    };
    let Some(chart) = parse_chart(chart_block, &mut errors) else {
        return Err(errors.errors);
    };

    let metric = blocks
        .get("metric")
        .and_then(|b| parse_metric(b, &chart, &mut errors));
    let contravariant = blocks
        .get("contravariant")
        .and_then(|b| parse_contravariant(b, &chart, metric.as_ref(), &mut errors));
    let (map, map_vector, curve_constants) = match blocks.get("map") {
        Some(b) => parse_map(b, &chart, &mut errors),
        None => (None, None, None),
    };
    let curve = blocks
        .get("curve")
        .and_then(|b| parse_curve(b, &chart, &mut errors));
    let elliptic = blocks.get("elliptic").map(|b| parse_elliptic(b, &mut errors));
    let projective_h = blocks
        .get("projective")
        .and_then(|b| parse_sym_matrix(b, "h", &chart, chart.dim(), &mut errors));
    let adm = blocks
        .get("adm")
        .and_then(|b| parse_adm(b, &chart, &mut errors));
    let hydro = blocks
        .get("hydro")
        .and_then(|b| parse_hydro(b, &chart, &mut errors));

    if errors.errors.is_empty() {
        Ok(ModelSpec {
            chart,
            metric,
            contravariant,
            map,
            map_vector,
            curve_constants,
            curve,
            elliptic,
            projective_h,
            adm,
            hydro,
        })
    } else {
        Err(errors.errors)
    }
}

fn strip_comment(line: &str) -> &str {
    // a '#' inside a quoted expression does not start a comment
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_list(value: &str) -> Vec<String> {
    // split on commas not inside quotes
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut in_quotes = false;
    for c in value.chars() {
        match c {
            '"' => {
                in_quotes = !in_quotes;
                buf.push(c);
            }
            ',' if !in_quotes => {
                out.push(buf.trim().to_string());
                buf.clear();
            }
            _ => buf.push(c),
        }
    }
    if !buf.trim().is_empty() {
        out.push(buf.trim().to_string());
    }
    out
}

fn unquote(value: &str) -> Option<&str> {
    value.strip_prefix('"')?.strip_suffix('"')
}

fn parse_expr_value(
    value: &str,
    chart: &Chart,
    line: usize,
    errors: &mut Collector,
) -> Option<Expr> {
    let Some(inner) = unquote(value) else {
        errors.push(line, format!("expression must be double-quoted, got `{value}`"));
        return None;
    };
    match parse(inner, chart) {
        Ok(e) => Some(e),
        Err(err) => {
            errors.push(line, format!("in `{inner}`: {err}"));
            None
        }
    }
}

fn parse_f64(value: &str, line: usize, errors: &mut Collector) -> Option<f64> {
    match value.trim().parse::<f64>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(line, format!("expected a number, got `{value}`"));
            None
        }
    }
}

fn parse_f64_list(value: &str, line: usize, errors: &mut Collector) -> Option<Vec<f64>> {
    split_list(value)
        .iter()
        .map(|v| parse_f64(v, line, errors))
        .collect()
}

fn parse_expr_list(
    value: &str,
    chart: &Chart,
    line: usize,
    errors: &mut Collector,
) -> Option<Vec<Expr>> {
    split_list(value)
        .iter()
        .map(|v| parse_expr_value(v, chart, line, errors))
        .collect()
}

fn parse_chart(block: &RawBlock, errors: &mut Collector) -> Option<Chart> {
    let (names_line, names_raw) = block.get("names").or_else(|| {
        errors.push(0, "[chart] needs `names = ...`");
        None
    })?;
    let names: Vec<String> = split_list(names_raw);
    let (dom_line, dom_raw) = block.get("domain").or_else(|| {
        errors.push(0, "[chart] needs `domain = lo hi, lo hi, ...`");
        None
    })?;
    let mut domains = Vec::new();
    for item in split_list(dom_raw) {
        let parts: Vec<&str> = item.split_whitespace().collect();
        if parts.len() != 2 {
            errors.push(dom_line, format!("domain entry `{item}` is not `lo hi`"));
            return None;
        }
        let lo = parse_f64(parts[0], dom_line, errors)?;
        let hi = parse_f64(parts[1], dom_line, errors)?;
        domains.push((lo, hi));
    }
    if names.len() != domains.len() {
        errors.push(
            dom_line,
            format!(
                "{} coordinate names but {} domain intervals",
                names.len(),
                domains.len()
            ),
        );
        return None;
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut chart = match Chart::new(&refs, &domains) {
        Ok(c) => c,
        Err(e) => {
            errors.push(names_line, e.to_string());
            return None;
        }
    };
    for (line, key, value) in &block.entries {
        match key.as_str() {
            "names" | "domain" => {}
            "guard" => {
                if let Some(v) = parse_f64(value, *line, errors) {
                    chart = chart.with_guard(v);
                }
            }
            "singular" => {
                // `singular = theta: 0` (repeatable)
                let Some((name, val)) = value.split_once(':') else {
                    errors.push(*line, "singular entry must be `coord: value`");
                    continue;
                };
                let Some(idx) = chart.index_of(name.trim()) else {
                    errors.push(*line, format!("unknown coordinate `{}`", name.trim()));
                    continue;
                };
                if let Some(v) = parse_f64(val, *line, errors) {
                    chart = chart.with_singular_locus(idx, v);
                }
            }
            other => errors.push(*line, format!("unknown [chart] key `{other}`")),
        }
    }
    Some(chart)
}

fn parse_sym_matrix(
    block: &RawBlock,
    prefix: &str,
    chart: &Chart,
    n: usize,
    errors: &mut Collector,
) -> Option<Mat> {
    let mut m = zero_mat(n);
    let mut seen_any = false;
    let mut ok = true;
    for (line, key, value) in &block.entries {
        let Some(digits) = key.strip_prefix(prefix) else {
            continue;
        };
        if digits.len() != 2 || !digits.chars().all(|c| c.is_ascii_digit()) {
            errors.push(*line, format!("bad matrix key `{key}`"));
            ok = false;
            continue;
        }
        let i = digits.as_bytes()[0] - b'1';
        let j = digits.as_bytes()[1] - b'1';
        if i as usize >= n || j as usize >= n {
            errors.push(
                *line,
                format!("entry `{key}` outside chart dimension {n}"),
            );
            ok = false;
            continue;
        }
        match parse_expr_value(value, chart, *line, errors) {
            Some(e) => {
                m[i as usize][j as usize] = e.clone();
                m[j as usize][i as usize] = e;
                seen_any = true;
            }
            None => ok = false,
        }
    }
    (seen_any && ok).then_some(m)
}

fn parse_metric(block: &RawBlock, chart: &Chart, errors: &mut Collector) -> Option<MetricField> {
    let first_line = block.entries.first().map(|(l, _, _)| *l).unwrap_or(0);
    for (line, key, _) in &block.entries {
        if !key.starts_with('g') {
            errors.push(*line, format!("unknown [metric] key `{key}`"));
        }
    }
    let m = parse_sym_matrix(block, "g", chart, chart.dim(), errors)?;
    match MetricField::new(chart.clone(), m) {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(first_line, e.to_string());
            None
        }
    }
}

fn parse_contravariant(
    block: &RawBlock,
    chart: &Chart,
    metric: Option<&MetricField>,
    errors: &mut Collector,
) -> Option<ContravariantField> {
    let (kind_line, kind) = block.get("kind").or_else(|| {
        errors.push(0, "[contravariant] needs `kind = inverse|general|factorized`");
        None
    })?;
    match kind {
        "inverse" => match metric {
            Some(g) => Some(ContravariantField::inverse_of(g)),
            None => {
                errors.push(kind_line, "kind = inverse needs a [metric] block");
                None
            }
        },
        "general" => {
            let m = parse_sym_matrix(block, "gt", chart, chart.dim(), errors)?;
            match ContravariantField::general(chart.clone(), m) {
                Ok(f) => Some(f),
                Err(e) => {
                    errors.push(kind_line, e.to_string());
                    None
                }
            }
        }
        "factorized" => {
            let (v_line, v_raw) = block.get("v").or_else(|| {
                errors.push(kind_line, "factorized kind needs `v = \"...\", ...`");
                None
            })?;
            let v = parse_expr_list(v_raw, chart, v_line, errors)?;
            if v.len() != chart.dim() {
                errors.push(
                    v_line,
                    format!("v has {} entries, chart dimension is {}", v.len(), chart.dim()),
                );
                return None;
            }
            let d2 = match block.get("d2") {
                Some((d_line, d_raw)) => {
                    let d = parse_expr_list(d_raw, chart, d_line, errors)?;
                    if d.len() != chart.dim() {
                        errors.push(
                            d_line,
                            format!(
                                "d2 has {} entries, chart dimension is {}",
                                d.len(),
                                chart.dim()
                            ),
                        );
                        return None;
                    }
                    Some(d)
                }
                None => None,
            };
            match ContravariantField::factorized(chart.clone(), v, d2) {
                Ok(f) => Some(f),
                Err(e) => {
                    errors.push(v_line, e.to_string());
                    None
                }
            }
        }
        other => {
            errors.push(kind_line, format!("unknown contravariant kind `{other}`"));
            None
        }
    }
}

type MapParts = (
    Option<CoordinateMap>,
    Option<Vec<Expr>>,
    Option<Vec<f64>>,
);

fn parse_map(block: &RawBlock, chart: &Chart, errors: &mut Collector) -> MapParts {
    let n = chart.dim();
    let target = match (block.get("target_names"), block.get("target_domain")) {
        (Some((nl, names_raw)), Some((dl, dom_raw))) => {
            let names = split_list(names_raw);
            let mut domains = Vec::new();
            for item in split_list(dom_raw) {
                let parts: Vec<&str> = item.split_whitespace().collect();
                if parts.len() == 2 {
                    if let (Some(lo), Some(hi)) = (
                        parse_f64(parts[0], dl, errors),
                        parse_f64(parts[1], dl, errors),
                    ) {
                        domains.push((lo, hi));
                    }
                } else {
                    errors.push(dl, format!("target_domain entry `{item}` is not `lo hi`"));
                }
            }
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            match Chart::new(&refs, &domains) {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(nl, e.to_string());
                    None
                }
            }
        }
        _ => {
            errors.push(
                block.entries.first().map(|(l, _, _)| *l).unwrap_or(0),
                "[map] needs `target_names` and `target_domain`",
            );
            None
        }
    };
    let forward = block.get("forward").and_then(|(line, raw)| {
        let f = parse_expr_list(raw, chart, line, errors)?;
        if f.len() != n {
            errors.push(line, format!("forward has {} entries, expected {n}", f.len()));
            return None;
        }
        Some(f)
    });
    let inverse = match (block.get("inverse"), &target) {
        (Some((line, raw)), Some(t)) => {
            let f = parse_expr_list(raw, t, line, errors);
            match f {
                Some(f) if f.len() == n => Some(f),
                Some(f) => {
                    errors.push(line, format!("inverse has {} entries, expected {n}", f.len()));
                    None
                }
                None => None,
            }
        }
        _ => None,
    };
    let map = match (forward, target) {
        (Some(f), Some(t)) => match CoordinateMap::new(chart.clone(), t, f, inverse) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(0, e.to_string());
                None
            }
        },
        _ => None,
    };
    let v = block
        .get("v")
        .and_then(|(line, raw)| parse_expr_list(raw, chart, line, errors));
    let constants = block
        .get("curve_constants")
        .and_then(|(line, raw)| parse_f64_list(raw, line, errors));
    for (line, key, _) in &block.entries {
        if ![
            "forward",
            "inverse",
            "target_names",
            "target_domain",
            "v",
            "curve_constants",
        ]
        .contains(&key.as_str())
        {
            errors.push(*line, format!("unknown [map] key `{key}`"));
        }
    }
    (map, v, constants)
}

fn parse_curve(block: &RawBlock, chart: &Chart, errors: &mut Collector) -> Option<CurveBlock> {
    let start = block
        .get("start")
        .or_else(|| {
            errors.push(0, "[curve] needs `start`");
            None
        })
        .and_then(|(line, raw)| parse_f64_list(raw, line, errors))?;
    let t_end = block
        .get("t_end")
        .or_else(|| {
            errors.push(0, "[curve] needs `t_end`");
            None
        })
        .and_then(|(line, raw)| parse_f64(raw, line, errors))?;
    let step = block
        .get("step")
        .or_else(|| {
            errors.push(0, "[curve] needs `step`");
            None
        })
        .and_then(|(line, raw)| parse_f64(raw, line, errors))?;
    let param_chart = Chart::new(&["s"], &[(0.0, t_end.max(1e-9))]).ok()?;
    let tangent = block
        .get("tangent")
        .or_else(|| {
            errors.push(0, "[curve] needs `tangent`");
            None
        })
        .and_then(|(line, raw)| parse_expr_list(raw, &param_chart, line, errors))?;
    if start.len() != chart.dim() || tangent.len() != chart.dim() {
        errors.push(
            0,
            format!(
                "[curve] start/tangent must have {} components",
                chart.dim()
            ),
        );
        return None;
    }
    Some(CurveBlock {
        start,
        t_end,
        step,
        tangent,
    })
}

fn parse_elliptic(block: &RawBlock, errors: &mut Collector) -> EllipticBlock {
    let complex_of = |raw: &str, line: usize, errors: &mut Collector| -> Option<Complex64> {
        let parts: Vec<&str> = raw.split_whitespace().collect();
        if parts.len() != 2 {
            errors.push(line, format!("complex value `{raw}` must be `re im`"));
            return None;
        }
        Some(Complex64::new(
            parse_f64(parts[0], line, errors)?,
            parse_f64(parts[1], line, errors)?,
        ))
    };
    let omega1 = block
        .get("omega1")
        .and_then(|(l, r)| complex_of(r, l, errors));
    let omega2 = block
        .get("omega2")
        .and_then(|(l, r)| complex_of(r, l, errors));
    let lattice = match (omega1, omega2) {
        (Some(w1), Some(w2)) => match Lattice::new(w1, w2) {
            Ok(l) => Some(l),
            Err(e) => {
                errors.push(
                    block.get("omega2").map(|(l, _)| l).unwrap_or(0),
                    e.to_string(),
                );
                None
            }
        },
        _ => None,
    };
    let truncation = block
        .get("truncation")
        .and_then(|(l, r)| parse_f64(r, l, errors))
        .map(|v| v as usize);
    let k = block.get("k").and_then(|(l, r)| parse_f64(r, l, errors));
    let m = block.get("m").and_then(|(l, r)| parse_f64(r, l, errors));
    let lambda = block
        .get("lambda")
        .and_then(|(l, r)| parse_f64(r, l, errors));
    let szekeres = match (k, m, lambda) {
        (Some(k), Some(m), Some(lambda)) => Some(SzekeresModel { k, m, lambda }),
        (None, None, None) => None,
        _ => {
            errors.push(0, "[elliptic] needs all of K, M, lambda or none");
            None
        }
    };
    let phi0 = block
        .get("phi0")
        .and_then(|(l, r)| parse_f64(r, l, errors))
        .unwrap_or(2.0);
    for (line, key, _) in &block.entries {
        if !["omega1", "omega2", "truncation", "k", "m", "lambda", "phi0"]
            .contains(&key.as_str())
        {
            errors.push(*line, format!("unknown [elliptic] key `{key}`"));
        }
    }
    EllipticBlock {
        lattice,
        truncation,
        szekeres,
        phi0,
    }
}

fn parse_adm(block: &RawBlock, chart: &Chart, errors: &mut Collector) -> Option<AdmBlock> {
    if chart.dim() != 4 {
        errors.push(
            block.entries.first().map(|(l, _, _)| *l).unwrap_or(0),
            format!("[adm] needs a 4-dimensional chart, got {}", chart.dim()),
        );
        return None;
    }
    let lapse = block
        .get("lapse")
        .or_else(|| {
            errors.push(0, "[adm] needs `lapse`");
            None
        })
        .and_then(|(line, raw)| parse_expr_value(raw, chart, line, errors))?;
    let shift = block
        .get("shift")
        .or_else(|| {
            errors.push(0, "[adm] needs `shift`");
            None
        })
        .and_then(|(line, raw)| {
            let s = parse_expr_list(raw, chart, line, errors)?;
            if s.len() != 3 {
                errors.push(line, format!("shift has {} entries, expected 3", s.len()));
                return None;
            }
            Some(s)
        })?;
    let p = parse_sym_matrix(block, "p", chart, 3, errors)?;
    Some(AdmBlock { lapse, shift, p })
}

fn parse_hydro(block: &RawBlock, chart: &Chart, errors: &mut Collector) -> Option<HydroBlock> {
    let u = block
        .get("u")
        .or_else(|| {
            errors.push(0, "[hydro] needs `u`");
            None
        })
        .and_then(|(line, raw)| {
            let u = parse_expr_list(raw, chart, line, errors)?;
            if u.len() != chart.dim() {
                errors.push(
                    line,
                    format!("u has {} entries, chart dimension is {}", u.len(), chart.dim()),
                );
                return None;
            }
            Some(u)
        })?;
    let normalized = match block.get("normalized") {
        Some((line, raw)) => match raw {
            "true" => true,
            "false" => false,
            other => {
                errors.push(line, format!("normalized must be true/false, got `{other}`"));
                return None;
            }
        },
        None => false,
    };
    Some(HydroBlock { u, normalized })
}
