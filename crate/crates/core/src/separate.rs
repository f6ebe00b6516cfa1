//! Degree-2 moment space: lifting, separating quadratics for the negation and
//! no-negation cases, and the quadratic text format.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::fourier::{self, MultilinearPoly, Predicate};
use crate::lp::{LpProblem, Sense};
use crate::measure::{self, PairwiseSearch};

/// Margin below which a predicate counts as not separable.
pub const MARGIN_TOL: f64 = 1e-7;
/// Contact points closer than this to `±1` trigger another stretch.
pub const INTERIOR_SLACK: f64 = 1e-4;
const BIAS_GRID: usize = 2001;
const MAX_DOUBLINGS: usize = 60;

pub fn lift_dim(k: usize) -> usize {
    k + k * k.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j`, 0-based, in lexicographic order.
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

pub fn pair_at(k: usize, mut s: usize) -> (usize, usize) {
    for i in 0..k {
        let row = k - i - 1;
        if s < row {
            return (i, i + 1 + s);
        }
        s -= row;
    }
    panic!("pair position out of range")
}

/// `x ↦ (x_i, x_i x_j)` with pairs in lexicographic order.
pub fn lift<T: Copy + Into<f64>>(x: &[T]) -> Result<Vec<f64>> {
    let v: Vec<f64> = x.iter().map(|&t| t.into()).collect();
    if v.iter().any(|&t| t != 1.0 && t != -1.0) {
        return Err(Error::Domain(format!("lift expects ±1 entries, got {v:?}")));
    }
    let k = v.len();
    let mut out = Vec::with_capacity(lift_dim(k));
    out.extend_from_slice(&v);
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(v[i] * v[j]);
        }
    }
    Ok(out)
}

/// A degree-2 multilinear polynomial, optionally carrying exact coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    arity: usize,
    constant: f64,
    /// Coefficients on the lift coordinates.
    coeffs: Vec<f64>,
    #[serde(skip)]
    exact: Option<(BigRational, Vec<BigRational>)>,
}

impl Quadratic {
    pub fn new(arity: usize, constant: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != lift_dim(arity) {
            return Err(Error::Shape(format!(
                "{} coefficients for arity {arity}, expected {}",
                coeffs.len(),
                lift_dim(arity)
            )));
        }
        Ok(Quadratic { arity, constant, coeffs, exact: None })
    }

    pub fn from_exact(arity: usize, constant: BigRational, coeffs: Vec<BigRational>) -> Result<Self> {
        let mut q = Quadratic::new(
            arity,
            exact::to_f64(&constant),
            coeffs.iter().map(exact::to_f64).collect(),
        )?;
        q.exact = Some((constant, coeffs));
        Ok(q)
    }

    pub fn from_poly(poly: &MultilinearPoly) -> Result<Self> {
        let k = poly.arity();
        let mut coeffs = vec![0.0; lift_dim(k)];
        let mut constant = 0.0;
        for (mask, c) in poly.terms() {
            match fourier::subset_indices(mask)[..] {
                [] => constant = c,
                [i] => coeffs[i - 1] = c,
                [i, j] => coeffs[k + pair_index(k, i - 1, j - 1)] = c,
                _ => return Err(Error::Domain("polynomial has degree above 2".into())),
            }
        }
        Quadratic::new(k, constant, coeffs)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn lift_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact_coeffs(&self) -> Option<(&BigRational, &[BigRational])> {
        self.exact.as_ref().map(|(c, v)| (c, v.as_slice()))
    }

    pub fn linear(&self, i: usize) -> f64 {
        self.coeffs[i]
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.coeffs[self.arity + pair_index(self.arity, i, j)]
    }

    pub fn linear_sum(&self) -> f64 {
        self.coeffs[..self.arity].iter().sum()
    }

    pub fn pair_sum(&self) -> f64 {
        self.coeffs[self.arity..].iter().sum()
    }

    pub fn has_linear_terms(&self) -> bool {
        self.coeffs[..self.arity].iter().any(|&c| c != 0.0)
    }

    /// `⟨coeffs, lift(x)⟩ + constant`.
    pub fn eval_point(&self, x: &[i8]) -> f64 {
        let z = lift(x).expect("cube point");
        self.constant + self.coeffs.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn eval_index(&self, index: usize) -> f64 {
        self.eval_point(&fourier::point(self.arity, index))
    }

    pub fn exact_eval_index(&self, index: usize) -> Option<BigRational> {
        let (c, coeffs) = self.exact.as_ref()?;
        let z = lift(&fourier::point(self.arity, index)).expect("cube point");
        let mut total = c.clone();
        for (a, zi) in coeffs.iter().zip(z) {
            if zi > 0.0 {
                total += a;
            } else {
                total -= a;
            }
        }
        Some(total)
    }

    pub fn to_poly(&self) -> MultilinearPoly {
        let k = self.arity;
        let mut p = MultilinearPoly::zero(k);
        p.add_term(0, self.constant);
        for (s, &c) in self.coeffs.iter().enumerate() {
            p.add_term(measure::lift_mask(k, s), c);
        }
        p
    }

    /// `E_Q(b) = b Σa_i + b² Σa_ij` plus the constant.
    pub fn bias_curve(&self, b: f64) -> f64 {
        self.constant + b * self.linear_sum() + b * b * self.pair_sum()
    }

    /// Closed-form maximum of the bias curve over `[-1, 1]`, preferring the
    /// argmax closest to 0 on ties. Returns `(value, argmax)`.
    pub fn max_bias_curve(&self) -> (f64, f64) {
        let a = self.linear_sum();
        let c = self.pair_sum();
        let mut cands = vec![-1.0, 0.0, 1.0];
        if c < 0.0 {
            cands.push((-a / (2.0 * c)).clamp(-1.0, 1.0));
        }
        let best = cands.iter().map(|&b| self.bias_curve(b)).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * best.abs().max(1.0);
        let arg = cands
            .iter()
            .copied()
            .filter(|&b| self.bias_curve(b) >= best - tol)
            .min_by(|x, y| x.abs().total_cmp(&y.abs()).then(x.total_cmp(y)))
            .expect("candidates");
        (best, arg)
    }

    /// Exact maximum of the bias curve; needs exact coefficients.
    fn exact_max_bias_curve(&self) -> Option<(BigRational, BigRational)> {
        let (c0, coeffs) = self.exact.as_ref()?;
        let k = self.arity;
        let a: BigRational = coeffs[..k].iter().sum();
        let c: BigRational = coeffs[k..].iter().sum();
        let curve = |b: &BigRational| c0 + &a * b + &c * b * b;
        let mut cands = vec![-BigRational::one(), BigRational::zero(), BigRational::one()];
        if c.is_negative() {
            let v = -&a / (exact::from_int(2) * &c);
            if exact::abs(&v) <= BigRational::one() {
                cands.push(v);
            }
        }
        let best = cands.iter().map(&curve).max()?;
        let arg = cands
            .into_iter()
            .filter(|b| curve(b) == best)
            .min_by(|x, y| exact::abs(x).cmp(&exact::abs(y)).then(x.cmp(y)))?;
        Some((best, arg))
    }

    pub fn scaled(&self, factor: f64) -> Quadratic {
        Quadratic {
            arity: self.arity,
            constant: self.constant * factor,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            exact: None,
        }
    }

    /// Text form: `[i,j]: coefficient` lines, 1-based sorted indices.
    pub fn to_text(&self) -> String {
        let k = self.arity;
        let mut lines = Vec::new();
        let fmt_c = |s: Option<usize>| -> String {
            match (&self.exact, s) {
                (Some((c, _)), None) => exact::format_rational(c),
                (Some((_, v)), Some(s)) => exact::format_rational(&v[s]),
                (None, None) => format!("{}", self.constant),
                (None, Some(s)) => format!("{}", self.coeffs[s]),
            }
        };
        if self.constant != 0.0 {
            lines.push(format!("[]: {}", fmt_c(None)));
        }
        for s in 0..self.coeffs.len() {
            if self.coeffs[s] == 0.0 {
                continue;
            }
            let idx = fourier::subset_indices(measure::lift_mask(k, s));
            let names: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            lines.push(format!("[{}]: {}", names.join(","), fmt_c(Some(s))));
        }
        let mut out = format!("# arity {k}\n");
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    /// Parses the text form. The arity comes from an `# arity k` line or the
    /// `arity` argument, else from the largest index seen.
    pub fn parse(text: &str, arity: Option<usize>) -> Result<Self> {
        let mut terms: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        let mut declared = arity;
        for raw in text.lines() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(n) = rest.strip_prefix("arity") {
                    let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("bad arity line {raw:?}")))?;
                    declared.get_or_insert(n);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (set, coeff) = line
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("expected `S: coefficient`, got {line:?}")))?;
            let set = set.trim().trim_start_matches(['[', '{', '(']).trim_end_matches([']', '}', ')']);
            let mut idx = Vec::new();
            for tok in set.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                let i: usize = tok.parse().map_err(|_| Error::Parse(format!("bad index {tok:?}")))?;
                if i == 0 {
                    return Err(Error::Parse("indices are 1-based".into()));
                }
                idx.push(i);
            }
            idx.sort_unstable();
            if idx.windows(2).any(|w| w[0] == w[1]) || idx.len() > 2 {
                return Err(Error::Parse(format!("bad subset in {line:?}")));
            }
            *terms.entry(idx).or_insert_with(BigRational::zero) += exact::parse_rational(coeff.trim())?;
        }
        let max_idx = terms.keys().flatten().copied().max().unwrap_or(0);
        let k = declared.unwrap_or(max_idx);
        if max_idx > k {
            return Err(Error::Parse(format!("index {max_idx} exceeds arity {k}")));
        }
        let mut constant = BigRational::zero();
        let mut coeffs = vec![BigRational::zero(); lift_dim(k)];
        for (idx, c) in terms {
            match idx[..] {
                [] => constant = c,
                [i] => coeffs[i - 1] = c,
                [i, j] => coeffs[k + pair_index(k, i - 1, j - 1)] = c,
                _ => unreachable!(),
            }
        }
        Quadratic::from_exact(k, constant, coeffs)
    }
}

impl fmt::Display for Quadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.arity;
        let mut parts = Vec::new();
        if self.constant != 0.0 {
            parts.push(format!("{}", self.constant));
        }
        for (s, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mono: String =
                fourier::subset_indices(measure::lift_mask(k, s)).iter().map(|i| format!("x{i}")).collect();
            parts.push(format!("{c}*{mono}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Separator for the negation case: zero constant term, `Q ≥ 1 = E_Q + 1` on
/// every accepted string.
#[derive(Clone, Debug, Serialize)]
pub struct Separator {
    pub quadratic: Quadratic,
    /// Margin of the L1-normalized functional before scaling.
    pub raw_margin: f64,
    /// `min over accepted of Q`, exactly 1 when the coefficients snapped.
    pub margin: f64,
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeparatorMethod {
    /// L1-normalized margin maximization by LP.
    #[default]
    MarginLp,
    /// Minimum-norm point of the lifted hull (Wolfe).
    MinNorm,
}

fn accepted_lifts(p: &Predicate) -> Vec<(usize, Vec<f64>)> {
    p.accepted()
        .into_iter()
        .map(|i| (i, lift(&fourier::point(p.arity(), i)).expect("cube point")))
        .collect()
}

/// Maximizes `m` subject to `⟨w, z⟩ ≥ m` on every lifted accepted string and
/// `‖w‖₁ = 1`. Returns `(w, m)`.
fn margin_lp(points: &[Vec<f64>], d: usize) -> Result<(Vec<f64>, f64)> {
    // variables: w+ (d), w- (d), t = m + 1 ≥ 0
    let nv = 2 * d + 1;
    let mut obj = vec![0.0; nv];
    obj[2 * d] = 1.0;
    let mut lp = LpProblem::new(nv).maximize(obj);
    for z in points {
        let mut row = Vec::with_capacity(nv);
        row.extend_from_slice(z);
        row.extend(z.iter().map(|v| -v));
        row.push(-1.0);
        lp.push(row, Sense::Ge, -1.0);
    }
    let mut norm = vec![1.0; nv];
    norm[2 * d] = 0.0;
    lp.push(norm, Sense::Eq, 1.0);
    let sol = lp
        .solve()?
        .solution()
        .ok_or_else(|| Error::solver("separator", "margin LP reported infeasible"))?;
    let w = (0..d).map(|i| sol.x[i] - sol.x[d + i]).collect();
    Ok((w, sol.objective - 1.0))
}

/// Wolfe's minimum-norm-point algorithm over a finite point set.
pub fn min_norm_point(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = points.iter().min_by(|a, b| norm2(a).total_cmp(&norm2(b))) else {
        return Err(Error::Domain("empty point set".into()));
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut active: Vec<Vec<f64>> = vec![first.clone()];
    let mut lambda = vec![1.0];
    let combine = |active: &[Vec<f64>], lambda: &[f64]| {
        let mut x = vec![0.0; active[0].len()];
        for (p, &l) in active.iter().zip(lambda) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += l * pi;
            }
        }
        x
    };
    for _ in 0..10_000 {
        let x = combine(&active, &lambda);
        let xx = dot(&x, &x);
        let (j, best) = points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if best >= xx - 1e-12 * xx.max(1.0) || active.contains(&points[j]) {
            return Ok(x);
        }
        active.push(points[j].clone());
        lambda.push(0.0);
        loop {
            let alpha = affine_min_norm(&active)?;
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let keep: Vec<bool> = lambda.iter().map(|&l| l > 1e-15).collect();
            let mut it = keep.iter();
            active.retain(|_| *it.next().expect("same length"));
            let mut it = keep.iter();
            lambda.retain(|_| *it.next().expect("same length"));
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
    }
    Err(Error::solver("min-norm", "iteration limit"))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Minimizes `‖Σ α_i p_i‖` subject to `Σ α_i = 1`.
fn affine_min_norm(active: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = active.len();
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = active[i].iter().zip(&active[j]).map(|(a, b)| a * b).sum();
        }
        m[(i, n)] = 1.0;
        m[(n, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::solver("min-norm", "singular affine system"))?;
    Ok(sol.iter().take(n).copied().collect())
}

/// Snaps coefficients to small fractions and rescales exactly so that the
/// minimum over accepted strings is 1.
fn exact_canonical(k: usize, coeffs: &[f64], accepted: &[usize]) -> Option<Quadratic> {
    let snapped: Vec<BigRational> = coeffs
        .iter()
        .map(|&c| exact::snap(c, 1000, 1e-6 * c.abs().max(1.0)))
        .collect::<Option<_>>()?;
    let q = Quadratic::from_exact(k, BigRational::zero(), snapped).ok()?;
    let min = accepted.iter().map(|&i| q.exact_eval_index(i).expect("exact")).min()?;
    if !min.is_positive() {
        return None;
    }
    let (_, c) = q.exact_coeffs()?;
    let scaled = c.iter().map(|v| v / &min).collect();
    Quadratic::from_exact(k, BigRational::zero(), scaled).ok()
}

fn canonical_separator(p: &Predicate, w: &[f64], raw_margin: f64) -> Result<Separator> {
    let k = p.arity();
    let acc = p.accepted();
    let coeffs: Vec<f64> = w.iter().map(|c| c / raw_margin).collect();
    if let Some(q) = exact_canonical(k, &coeffs, &acc) {
        return Ok(Separator { quadratic: q, raw_margin, margin: 1.0, exact: true });
    }
    let q = Quadratic::new(k, 0.0, coeffs)?;
    let margin = acc.iter().map(|&i| q.eval_index(i)).fold(f64::INFINITY, f64::min);
    if margin < 1.0 - 1e-9 {
        return Err(Error::Consistency(format!("separator margin {margin} after scaling")));
    }
    Ok(Separator { quadratic: q, raw_margin, margin, exact: false })
}

/// Verifies `Q` has no constant term and `Q ≥ 1 − tol` on every accepted string.
pub fn verify_separator(p: &Predicate, q: &Quadratic, tol: f64) -> Result<f64> {
    if q.arity() != p.arity() {
        return Err(Error::Shape("separator arity differs from predicate".into()));
    }
    if q.constant() != 0.0 {
        return Err(Error::Consistency("separator has a constant term".into()));
    }
    let margin = p.accepted().iter().map(|&i| q.eval_index(i)).fold(f64::INFINITY, f64::min);
    if margin < 1.0 - tol {
        return Err(Error::Consistency(format!("separator value {margin} on an accepted string")));
    }
    Ok(margin)
}

pub fn separating_quadratic(p: &Predicate) -> Result<Option<Separator>> {
    separating_quadratic_with(p, SeparatorMethod::MarginLp)
}

pub fn separating_quadratic_with(p: &Predicate, method: SeparatorMethod) -> Result<Option<Separator>> {
    let pi = measure::find_pairwise_independent(p)?;
    let d = lift_dim(p.arity());
    let points: Vec<Vec<f64>> = accepted_lifts(p).into_iter().map(|(_, z)| z).collect();
    let (w, margin) = match method {
        SeparatorMethod::MarginLp => margin_lp(&points, d)?,
        SeparatorMethod::MinNorm => {
            let x = min_norm_point(&points)?;
            let n1: f64 = x.iter().map(|v| v.abs()).sum();
            if n1 <= MARGIN_TOL {
                (x, 0.0)
            } else {
                let w: Vec<f64> = x.iter().map(|v| v / n1).collect();
                let m = points
                    .iter()
                    .map(|z| w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                (w, m)
            }
        }
    };
    match (&pi, margin > MARGIN_TOL) {
        (PairwiseSearch::Witness(_), false) => Ok(None),
        (PairwiseSearch::Separated { .. }, true) => canonical_separator(p, &w, margin).map(Some),
        (PairwiseSearch::Witness(_), true) => Err(Error::Consistency(format!(
            "pairwise independent witness and separator with margin {margin} both found"
        ))),
        (PairwiseSearch::Separated { .. }, false) => Err(Error::Consistency(format!(
            "no pairwise independent witness, but separator margin is only {margin}"
        ))),
    }
}

/// Separator for the no-negation case.
#[derive(Clone, Debug, Serialize)]
pub struct PositiveSeparator {
    pub quadratic: Quadratic,
    /// Bias attaining `E_Q^+`.
    pub r_star: f64,
    /// `E_Q^+`.
    pub baseline: f64,
    /// `min over accepted of Q − E_Q^+`.
    pub margin: f64,
    /// Stretch factor along the linear coordinates that produced `Q`.
    pub stretch: f64,
    pub exact: bool,
}

fn bias_point(k: usize, b: f64, stretch: f64) -> Vec<f64> {
    let d = lift_dim(k);
    (0..d).map(|s| if s < k { stretch * b } else { b * b }).collect()
}

/// Maximizes `m` s.t. `⟨w, z'⟩ − t ≥ m` on stretched accepted lifts,
/// `⟨w, y'_b⟩ ≤ t` on the stretched bias curve grid, and `‖w‖₁ = 1`.
fn positive_margin_lp(k: usize, points: &[Vec<f64>], grid: &[f64], stretch: f64) -> Result<(Vec<f64>, f64)> {
    let d = lift_dim(k);
    // variables: w+ (d), w- (d), t+ , t-, s = m + 3 ≥ 0
    let nv = 2 * d + 3;
    let mut obj = vec![0.0; nv];
    obj[nv - 1] = 1.0;
    let mut lp = LpProblem::new(nv).maximize(obj);
    let stretched = |z: &[f64]| -> Vec<f64> {
        z.iter().enumerate().map(|(s, v)| if s < k { stretch * v } else { *v }).collect()
    };
    for z in points {
        let z = stretched(z);
        let mut row = Vec::with_capacity(nv);
        row.extend_from_slice(&z);
        row.extend(z.iter().map(|v| -v));
        row.extend([-1.0, 1.0, -1.0]);
        lp.push(row, Sense::Ge, -3.0);
    }
    for &b in grid {
        let y = bias_point(k, b, stretch);
        let mut row = Vec::with_capacity(nv);
        row.extend_from_slice(&y);
        row.extend(y.iter().map(|v| -v));
        row.extend([-1.0, 1.0, 0.0]);
        lp.push(row, Sense::Le, 0.0);
    }
    let mut norm = vec![1.0; nv];
    norm[2 * d..].fill(0.0);
    lp.push(norm, Sense::Eq, 1.0);
    let sol = lp
        .solve()?
        .solution()
        .ok_or_else(|| Error::solver("positive separator", "margin LP reported infeasible"))?;
    let w = (0..d).map(|i| sol.x[i] - sol.x[d + i]).collect();
    Ok((w, sol.objective - 3.0))
}

/// Builds `Q` from a stretched-space functional, normalizes `min_acc Q − E_Q^+`
/// to 1, and verifies it. Returns `None` when `Q` does not separate.
fn positive_candidate(p: &Predicate, w: &[f64], stretch: f64) -> Result<Option<PositiveSeparator>> {
    let k = p.arity();
    let acc = p.accepted();
    let coeffs: Vec<f64> = w.iter().enumerate().map(|(s, c)| if s < k { c * stretch } else { *c }).collect();
    let q = Quadratic::new(k, 0.0, coeffs)?;
    let (base, _) = q.max_bias_curve();
    let min_acc = acc.iter().map(|&i| q.eval_index(i)).fold(f64::INFINITY, f64::min);
    let gap = min_acc - base;
    if gap <= MARGIN_TOL * q.lift_coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1.0) {
        return Ok(None);
    }
    let scaled: Vec<f64> = q.lift_coeffs().iter().map(|c| c / gap).collect();
    // prefer exact coefficients when they snap and still separate
    let snapped: Option<Vec<BigRational>> = scaled
        .iter()
        .map(|&c| exact::snap(c, 1000, 1e-6 * c.abs().max(1.0)))
        .collect();
    if let Some(snapped) = snapped {
        let q = Quadratic::from_exact(k, BigRational::zero(), snapped)?;
        let (base, r) = q.exact_max_bias_curve().expect("exact coefficients");
        let min_acc = acc.iter().map(|&i| q.exact_eval_index(i).expect("exact")).min().expect("accepting");
        let gap = &min_acc - &base;
        if gap.is_positive() {
            let (_, c) = q.exact_coeffs().expect("exact");
            let c: Vec<BigRational> = c.iter().map(|v| v / &gap).collect();
            let q = Quadratic::from_exact(k, BigRational::zero(), c)?;
            let (base, _) = q.exact_max_bias_curve().expect("exact coefficients");
            return Ok(Some(PositiveSeparator {
                quadratic: q,
                r_star: exact::to_f64(&r),
                baseline: exact::to_f64(&base),
                margin: 1.0,
                stretch,
                exact: true,
            }));
        }
    }
    let q = Quadratic::new(k, 0.0, scaled)?;
    let (base, r) = q.max_bias_curve();
    let min_acc = acc.iter().map(|&i| q.eval_index(i)).fold(f64::INFINITY, f64::min);
    Ok(Some(PositiveSeparator { quadratic: q, r_star: r, baseline: base, margin: min_acc - base, stretch, exact: false }))
}

/// Separator for the no-negation case with an interior optimal bias.
pub fn positive_separating_quadratic(p: &Predicate) -> Result<Option<PositiveSeparator>> {
    if measure::find_uniformly_positively_correlated(p)?.is_some() {
        return Ok(None);
    }
    let k = p.arity();
    let points: Vec<Vec<f64>> = accepted_lifts(p).into_iter().map(|(_, z)| z).collect();
    let base_grid: Vec<f64> = (0..BIAS_GRID).map(|i| -1.0 + 2.0 * i as f64 / (BIAS_GRID - 1) as f64).collect();
    let mut stretch = 1.0;
    let mut last = None;
    for _ in 0..=MAX_DOUBLINGS {
        let mut grid = base_grid.clone();
        let mut found = None;
        // cutting-plane refinement of the discretized bias curve
        for _ in 0..20 {
            let (w, m) = positive_margin_lp(k, &points, &grid, stretch)?;
            if m <= MARGIN_TOL {
                return Err(Error::Consistency(format!(
                    "no positively correlated witness, but positive separator margin is only {m}"
                )));
            }
            match positive_candidate(p, &w, stretch)? {
                Some(sep) => {
                    found = Some(sep);
                    break;
                }
                None => {
                    let q = Quadratic::new(
                        k,
                        0.0,
                        w.iter().enumerate().map(|(s, c)| if s < k { c * stretch } else { *c }).collect(),
                    )?;
                    grid.push(q.max_bias_curve().1);
                }
            }
        }
        let Some(sep) = found else {
            return Err(Error::Construction("discretized bias curve did not converge".into()));
        };
        let (check, _) = sep.quadratic.to_poly().max_biased_expectation();
        if (check - sep.baseline).abs() > 1e-10 * sep.baseline.abs().max(1.0) {
            return Err(Error::Consistency(format!(
                "closed-form baseline {} disagrees with biased expectation {check}",
                sep.baseline
            )));
        }
        if sep.r_star.abs() <= 1.0 - INTERIOR_SLACK {
            return Ok(Some(sep));
        }
        last = Some(sep.r_star);
        stretch *= 2.0;
    }
    Err(Error::Construction(format!(
        "optimal bias stayed at {:?} after {MAX_DOUBLINGS} stretch doublings",
        last
    )))
}

/// Verifies a positive separator: `Q ≥ E_Q^+ + margin` on accepted strings
/// with `|r*| < 1`.
pub fn verify_positive_separator(p: &Predicate, sep: &PositiveSeparator) -> Result<()> {
    let q = &sep.quadratic;
    let (base, r) = q.max_bias_curve();
    if (base - sep.baseline).abs() > 1e-9 || (r - sep.r_star).abs() > 1e-9 {
        return Err(Error::Consistency("baseline does not match the bias curve".into()));
    }
    if r.abs() > 1.0 - 1e-6 {
        return Err(Error::Consistency(format!("optimal bias {r} is not interior")));
    }
    let min_acc = p.accepted().iter().map(|&i| q.eval_index(i)).fold(f64::INFINITY, f64::min);
    if min_acc - base < sep.margin - 1e-9 || sep.margin <= 0.0 {
        return Err(Error::Consistency(format!("separation gap {} below margin", min_acc - base)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates;

    #[test]
    fn lift_examples() {
        assert_eq!(lift(&[1i8, 1, 1]).unwrap(), vec![1.0; 6]);
        assert_eq!(lift(&[-1i8, 1, 1]).unwrap(), vec![-1.0, 1.0, 1.0, -1.0, -1.0, 1.0]);
        assert_eq!(lift(&[-1i8, -1]).unwrap(), vec![-1.0, -1.0, 1.0]);
        assert!(matches!(lift(&[0.5f64, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn pair_positions_round_trip() {
        for k in 2..8 {
            let mut s = 0;
            for i in 0..k {
                for j in (i + 1)..k {
                    assert_eq!(pair_index(k, i, j), s);
                    assert_eq!(pair_at(k, s), (i, j));
                    s += 1;
                }
            }
        }
    }

    fn assert_pairs(q: &Quadratic, want: &[((usize, usize), f64)]) {
        let k = q.arity();
        for i in 0..k {
            assert_eq!(q.linear(i), 0.0);
            for j in (i + 1)..k {
                let expect = want.iter().find(|(p, _)| *p == (i + 1, j + 1)).map_or(0.0, |w| w.1);
                assert!((q.pair(i, j) - expect).abs() < 1e-12, "pair {i},{j}: {}", q.pair(i, j));
            }
        }
    }

    #[test]
    fn glst_separator() {
        let p = predicates::glst();
        let sep = separating_quadratic(&p).unwrap().unwrap();
        assert!(sep.exact);
        assert_pairs(&sep.quadratic, &[((2, 3), -1.0), ((2, 4), -1.0), ((3, 4), -1.0)]);
        for i in p.accepted() {
            assert_eq!(sep.quadratic.exact_eval_index(i).unwrap(), BigRational::one());
        }
    }

    #[test]
    fn eq2_nae3_xor3() {
        let sep = separating_quadratic(&predicates::eq2()).unwrap().unwrap();
        assert_pairs(&sep.quadratic, &[((1, 2), 1.0)]);
        let nae = predicates::nae(3);
        let sep = separating_quadratic(&nae).unwrap().unwrap();
        assert_pairs(&sep.quadratic, &[((1, 2), -1.0), ((1, 3), -1.0), ((2, 3), -1.0)]);
        assert!(nae.accepted().iter().all(|&i| sep.quadratic.eval_index(i) == 1.0));
        assert!(separating_quadratic(&predicates::xor(3)).unwrap().is_none());
    }

    #[test]
    fn min_norm_agrees_on_verdicts() {
        for bits in 1u64..256 {
            let p = Predicate::from_bits(3, bits).unwrap();
            let a = separating_quadratic(&p).unwrap();
            let b = separating_quadratic_with(&p, SeparatorMethod::MinNorm).unwrap();
            assert_eq!(a.is_some(), b.is_some(), "{p}");
            if let Some(b) = b {
                verify_separator(&p, &b.quadratic, 1e-9).unwrap();
            }
        }
    }

    #[test]
    fn lift_consistency_of_poly() {
        let q = Quadratic::new(3, 0.5, vec![1.0, -2.0, 0.25, 3.0, -1.0, 0.5]).unwrap();
        let poly = q.to_poly();
        for i in 0..8 {
            assert_eq!(q.eval_index(i), poly.eval_index(i));
        }
        assert_eq!(Quadratic::from_poly(&poly).unwrap(), q);
    }

    #[test]
    fn quadratic_text_round_trip() {
        let q = Quadratic::parse("# arity 4\n[2,3]: -1\n[2, 4]: -1\n[3,4]: -1\n", None).unwrap();
        assert_eq!(q.arity(), 4);
        assert_eq!(q.pair(1, 2), -1.0);
        let again = Quadratic::parse(&q.to_text(), None).unwrap();
        assert_eq!(again, q);
        let q = Quadratic::parse("[]: 1/2\n[1]: 0.25\n", Some(2)).unwrap();
        assert_eq!((q.constant(), q.linear(0)), (0.5, 0.25));
        assert!(Quadratic::parse("[1,2,3]: 1", None).is_err());
        assert!(Quadratic::parse("[0]: 1", None).is_err());
        assert!(Quadratic::parse("[3]: 1", Some(2)).is_err());
    }

    #[test]
    fn bias_curve_closed_form_matches_fourier() {
        let q = Quadratic::new(3, 0.0, vec![0.3, 0.1, -0.2, -1.0, 0.5, -0.4]).unwrap();
        let (v, r) = q.max_bias_curve();
        let (v2, r2) = q.to_poly().max_biased_expectation();
        assert!((v - v2).abs() < 1e-12 && (r - r2).abs() < 1e-9);
    }

    #[test]
    fn positive_neq2() {
        let sep = positive_separating_quadratic(&predicates::neq2()).unwrap().unwrap();
        assert_pairs(&sep.quadratic, &[((1, 2), -1.0)]);
        assert_eq!((sep.r_star, sep.baseline, sep.margin), (0.0, 0.0, 1.0));
        verify_positive_separator(&predicates::neq2(), &sep).unwrap();
        assert!(positive_separating_quadratic(&predicates::eq2()).unwrap().is_none());
    }

    #[test]
    fn positive_two_of_three() {
        let p = Predicate::from_fn(3, |x| x.iter().filter(|&&v| v == -1).count() == 2).unwrap();
        let sep = positive_separating_quadratic(&p).unwrap().unwrap();
        verify_positive_separator(&p, &sep).unwrap();
        assert!(sep.r_star.abs() <= 1.0 - INTERIOR_SLACK);
    }
}
