//! Distributions over `{-1,1}^k`: moments, the pairwise-independence and
//! uniform-positive-correlation feasibility tests, the flip-noise optimum
//! oracles, and the relaxed resistance-condition checker.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::fourier::{self, MultilinearPoly, Predicate};
use crate::lp::{LpProblem, LpVerdict, Sense};
use crate::separate::{lift, lift_dim, pair_index};
use crate::univariate;

/// Moment tolerance for float witnesses.
pub const MOMENT_TOL: f64 = 1e-9;
/// Feasibility margin for the positive-correlation search.
pub const UPC_TOL: f64 = 1e-7;

/// A probability distribution over `{-1,1}^k`, dense over all `2^k` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    arity: usize,
    weights: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Measure {
    pub fn from_weights(arity: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != 1 << arity {
            return Err(Error::Shape(format!("{} weights for arity {arity}", weights.len())));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Measure { arity, weights, exact: None })
    }

    pub fn from_exact(arity: usize, weights: Vec<BigRational>) -> Result<Self> {
        if weights.len() != 1 << arity {
            return Err(Error::Shape(format!("{} weights for arity {arity}", weights.len())));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: BigRational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        let floats = weights.iter().map(exact::to_f64).collect();
        Ok(Measure { arity, weights: floats, exact: Some(weights) })
    }

    /// Uniform distribution over the given point indices.
    pub fn uniform_on(arity: usize, points: &[usize]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("empty support".into()));
        }
        let mut w = vec![BigRational::zero(); 1 << arity];
        let share = exact::ratio(1, points.len() as i64);
        for &p in points {
            if p >= w.len() {
                return Err(Error::Shape(format!("point {p} out of range")));
            }
            w[p] += &share;
        }
        Measure::from_exact(arity, w)
    }

    pub fn uniform_on_where(arity: usize, keep: impl Fn(&[i8]) -> bool) -> Result<Self> {
        let pts: Vec<usize> =
            (0..1usize << arity).filter(|&i| keep(&fourier::point(arity, i))).collect();
        Measure::uniform_on(arity, &pts)
    }

    pub fn point_mass(arity: usize, index: usize) -> Result<Self> {
        Measure::uniform_on(arity, &[index])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    fn exact_support(&self) -> Vec<usize> {
        match &self.exact {
            Some(w) => (0..w.len()).filter(|&i| !w[i].is_zero()).collect(),
            None => self.support(),
        }
    }

    pub fn is_supported_on(&self, p: &Predicate) -> bool {
        p.arity() == self.arity && self.exact_support().iter().all(|&i| p.accepts(i))
    }

    /// `E_μ[χ_S]` for the subset mask `S`.
    pub fn moment(&self, mask: u32) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| if (mask as usize & i).count_ones() % 2 == 1 { -w } else { w })
            .sum()
    }

    /// Exact `E_μ[χ_S]`; floats are converted exactly when no rational weights exist.
    pub fn exact_moment(&self, mask: u32) -> BigRational {
        let weights = self.exact_or_converted();
        let mut total = BigRational::zero();
        for (i, w) in weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            if (mask as usize & i).count_ones() % 2 == 1 {
                total -= w;
            } else {
                total += w;
            }
        }
        total
    }

    pub fn exact_or_converted(&self) -> Vec<BigRational> {
        match &self.exact {
            Some(w) => w.clone(),
            None => self.weights.iter().map(|&w| exact::from_f64(w)).collect(),
        }
    }

    /// Snaps weights to small-denominator fractions when the snapped weights
    /// sum to exactly one and keep every moment within `1e-9`.
    pub fn exactify(&self) -> Measure {
        if self.exact.is_some() {
            return self.clone();
        }
        let snapped: Option<Vec<BigRational>> = self
            .weights
            .iter()
            .map(|&w| if w == 0.0 { Some(BigRational::zero()) } else { exact::snap(w, 1 << 20, 1e-10) })
            .collect();
        let Some(snapped) = snapped else {
            return self.clone();
        };
        match Measure::from_exact(self.arity, snapped) {
            Ok(m) if (0..1u32 << self.arity)
                .all(|s| (m.moment(s) - self.moment(s)).abs() <= 1e-9) => m,
            _ => self.clone(),
        }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, sampler: &WeightedIndex<f64>, rng: &mut R) -> usize {
        sampler.sample(rng)
    }

    pub fn sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(&self.weights).map_err(|e| Error::Domain(format!("measure: {e}")))
    }

    /// Text form: one `point weight` line per support point.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in self.exact_support() {
            let w = match &self.exact {
                Some(e) => exact::format_rational(&e[i]),
                None => format!("{}", self.weights[i]),
            };
            out.push_str(&format!("{} {}\n", fourier::point_string(self.arity, i), w));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(|c: char| c.is_whitespace() || c == ',' || c == ':')
                .filter(|s| !s.is_empty());
            let (Some(pt), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("expected `point weight`, got {line:?}")));
            };
            entries.push((pt.to_string(), exact::parse_rational(w)?));
        }
        let Some((first, _)) = entries.first() else {
            return Err(Error::Parse("empty measure".into()));
        };
        let arity = first.len();
        let mut w = vec![BigRational::zero(); 1 << arity];
        for (pt, weight) in entries {
            if pt.len() != arity {
                return Err(Error::Parse(format!("point {pt:?} has wrong arity")));
            }
            w[fourier::parse_point(&pt)?] += weight;
        }
        Measure::from_exact(arity, w)
    }
}

/// Uniform over `x_1x_2x_3 = 1, x_3 = -x_4`: four strings accepted by GLST
/// with vanishing biases and only `x_3x_4` correlated.
pub fn glst_measure() -> Measure {
    Measure::uniform_on_where(4, |x| x[0] * x[1] * x[2] == 1 && x[2] == -x[3]).expect("nonempty")
}

/// Uniform over `x_1x_2x_3 = -1, x_3 = -x_4`. These strings are rejected by
/// GLST (see [`glst_measure`] for the supported variant).
pub fn glst_measure_odd() -> Measure {
    Measure::uniform_on_where(4, |x| x[0] * x[1] * x[2] == -1 && x[2] == -x[3]).expect("nonempty")
}

/// Uniform over `x_1x_2x_3 = -1, x_4 = 1`, supported on `x_1 ⊕ ((x_2 ⊕ x_3) ∨ x_4)`.
pub fn xor_or4_measure() -> Measure {
    Measure::uniform_on_where(4, |x| x[0] * x[1] * x[2] == -1 && x[3] == 1).expect("nonempty")
}

/// First and second moments of a measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentProfile {
    pub first: Vec<f64>,
    pub second: Vec<Vec<f64>>,
}

pub fn moment_profile(mu: &Measure) -> MomentProfile {
    let k = mu.arity();
    let first = (0..k).map(|i| mu.moment(1 << i)).collect();
    let second = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { mu.moment(1 << i | 1 << j) }).collect())
        .collect();
    MomentProfile { first, second }
}

/// Outcome of the pairwise-independence search.
#[derive(Clone, Debug)]
pub enum PairwiseSearch {
    /// A measure on `P⁻¹(1)` with vanishing first and second moments.
    Witness(Measure),
    /// Farkas certificate read as a lift-space functional `w` with
    /// `⟨w, lift(x)⟩ ≥ margin > 0` on every accepted `x`.
    Separated { functional: Vec<f64>, margin: f64 },
}

impl PairwiseSearch {
    pub fn witness(&self) -> Option<&Measure> {
        match self {
            PairwiseSearch::Witness(m) => Some(m),
            PairwiseSearch::Separated { .. } => None,
        }
    }
}

fn lifted_columns(p: &Predicate) -> (Vec<usize>, Vec<Vec<f64>>) {
    let acc = p.accepted();
    let lifts = acc
        .iter()
        .map(|&i| lift(&fourier::point(p.arity(), i)).expect("cube point"))
        .collect();
    (acc, lifts)
}

fn measure_from_solution(k: usize, acc: &[usize], x: &[f64]) -> Result<Measure> {
    let mut w = vec![0.0; 1 << k];
    for (&idx, &v) in acc.iter().zip(x) {
        w[idx] = v.max(0.0);
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Measure::from_weights(k, w)
}

/// Verifies that `mu` is pairwise independent and supported on `p`.
pub fn verify_pairwise_independent(p: &Predicate, mu: &Measure) -> Result<()> {
    if !mu.is_supported_on(p) {
        return Err(Error::Consistency("witness puts weight on a rejected string".into()));
    }
    let d = lift_dim(p.arity());
    let k = p.arity();
    for s in 0..d {
        let mask = lift_mask(k, s);
        let m = mu.moment(mask);
        if m.abs() > MOMENT_TOL {
            return Err(Error::Consistency(format!("moment of {mask:#b} is {m}")));
        }
    }
    Ok(())
}

/// Subset mask of the `s`-th lift coordinate.
pub(crate) fn lift_mask(k: usize, s: usize) -> u32 {
    if s < k {
        1 << s
    } else {
        let (i, j) = crate::separate::pair_at(k, s - k);
        1 << i | 1 << j
    }
}

pub fn find_pairwise_independent(p: &Predicate) -> Result<PairwiseSearch> {
    p.require_accepting()?;
    let k = p.arity();
    let (acc, lifts) = lifted_columns(p);
    let d = lift_dim(k);
    let mut lp = LpProblem::new(acc.len());
    lp.push(vec![1.0; acc.len()], Sense::Eq, 1.0);
    for s in 0..d {
        lp.push(lifts.iter().map(|z| z[s]).collect(), Sense::Eq, 0.0);
    }
    match lp.solve()? {
        LpVerdict::Optimal(sol) => {
            let mu = measure_from_solution(k, &acc, &sol.x)?;
            verify_pairwise_independent(p, &mu)
                .map_err(|e| Error::solver("pairwise-independence", e.to_string()))?;
            Ok(PairwiseSearch::Witness(mu))
        }
        LpVerdict::Infeasible(cert) => {
            let functional = cert.y[1..].to_vec();
            let margin = -cert.y[0];
            Ok(PairwiseSearch::Separated { functional, margin })
        }
    }
}

/// A uniformly positively correlated witness: all biases `b`, all pairwise
/// products `c`, with `c ≥ b²`.
#[derive(Clone, Debug)]
pub struct UpcWitness {
    pub measure: Measure,
    pub bias: f64,
    pub correlation: f64,
}

fn common_bias_and_correlation(mu: &Measure) -> (Vec<f64>, Vec<f64>) {
    let prof = moment_profile(mu);
    let k = mu.arity();
    let pairs = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .map(|(i, j)| prof.second[i][j])
        .collect();
    (prof.first, pairs)
}

pub fn verify_upc(p: &Predicate, w: &UpcWitness) -> Result<()> {
    if !w.measure.is_supported_on(p) {
        return Err(Error::Consistency("witness puts weight on a rejected string".into()));
    }
    let (first, pairs) = common_bias_and_correlation(&w.measure);
    if first.iter().any(|&m| (m - w.bias).abs() > MOMENT_TOL) {
        return Err(Error::Consistency(format!("biases {first:?} are not all {}", w.bias)));
    }
    if pairs.iter().any(|&m| (m - w.correlation).abs() > MOMENT_TOL) {
        return Err(Error::Consistency(format!("correlations {pairs:?} are not all {}", w.correlation)));
    }
    if w.correlation < w.bias * w.bias - UPC_TOL {
        return Err(Error::Consistency(format!(
            "correlation {} below squared bias {}",
            w.correlation,
            w.bias * w.bias
        )));
    }
    Ok(())
}

fn point_mass_witness(k: usize, idx: usize) -> Result<UpcWitness> {
    let b = if idx == 0 { 1.0 } else { -1.0 };
    Ok(UpcWitness { measure: Measure::point_mass(k, idx)?, bias: b, correlation: 1.0 })
}

/// LP over weights on accepted strings with all biases equal to `bias` and all
/// pair moments equal to a free `c`; maximizes `c`.
fn max_correlation_at(
    k: usize,
    acc: &[usize],
    lifts: &[Vec<f64>],
    bias: f64,
) -> Result<Option<(f64, Vec<f64>)>> {
    let n = acc.len();
    let npairs = lift_dim(k) - k;
    let mut lp = LpProblem::new(n + 1);
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    lp = lp.maximize(obj);
    let mut sum = vec![1.0; n + 1];
    sum[n] = 0.0;
    lp.push(sum, Sense::Eq, 1.0);
    for i in 0..k {
        let mut row: Vec<f64> = lifts.iter().map(|z| z[i]).collect();
        row.push(0.0);
        lp.push(row, Sense::Eq, bias);
    }
    for s in 0..npairs {
        let mut row: Vec<f64> = lifts.iter().map(|z| z[k + s]).collect();
        row.push(-1.0); // c + 1 as a nonnegative variable
        lp.push(row, Sense::Eq, -1.0);
    }
    match lp.solve()? {
        LpVerdict::Optimal(sol) => Ok(Some((sol.objective - 1.0, sol.x))),
        LpVerdict::Infeasible(_) => Ok(None),
    }
}

/// Range of common biases achievable with equal biases and equal pair moments.
fn bias_interval(k: usize, lifts: &[Vec<f64>]) -> Result<Option<(f64, f64)>> {
    let n = lifts.len();
    let npairs = lift_dim(k) - k;
    let build = |sign: f64| {
        let mut obj = vec![0.0; n + 1];
        obj[n] = sign;
        let mut lp = LpProblem::new(n + 1).maximize(obj);
        let mut sum = vec![1.0; n + 1];
        sum[n] = 0.0;
        lp.push(sum, Sense::Eq, 1.0);
        for i in 0..k {
            let mut row: Vec<f64> = lifts.iter().map(|z| z[i]).collect();
            row.push(-1.0); // b + 1
            lp.push(row, Sense::Eq, -1.0);
        }
        for s in 1..npairs {
            let mut row: Vec<f64> = lifts.iter().map(|z| z[k + s] - z[k]).collect();
            row.push(0.0);
            lp.push(row, Sense::Eq, 0.0);
        }
        lp
    };
    let hi = match build(1.0).solve()? {
        LpVerdict::Optimal(s) => s.objective - 1.0,
        LpVerdict::Infeasible(_) => return Ok(None),
    };
    let lo = match build(-1.0).solve()? {
        LpVerdict::Optimal(s) => -s.objective - 1.0,
        LpVerdict::Infeasible(_) => return Ok(None),
    };
    Ok(Some((lo.max(-1.0), hi.min(1.0))))
}

pub fn find_uniformly_positively_correlated(p: &Predicate) -> Result<Option<UpcWitness>> {
    p.require_accepting()?;
    let k = p.arity();
    let full = (1usize << k) - 1;
    if p.accepts(0) {
        return point_mass_witness(k, 0).map(Some);
    }
    if p.accepts(full) {
        return point_mass_witness(k, full).map(Some);
    }
    if k == 1 {
        // unreachable: a nonempty arity-1 predicate accepts a constant string
        return Err(Error::Consistency("arity-1 predicate without constant string".into()));
    }
    if let PairwiseSearch::Witness(mu) = find_pairwise_independent(p)? {
        return Ok(Some(UpcWitness { measure: mu, bias: 0.0, correlation: 0.0 }));
    }
    let (acc, lifts) = lifted_columns(p);
    let Some((lo, hi)) = bias_interval(k, &lifts)? else {
        return Ok(None);
    };
    let h = |b: f64| -> Result<f64> {
        Ok(match max_correlation_at(k, &acc, &lifts, b)? {
            Some((c, _)) => c - b * b,
            None => f64::NEG_INFINITY,
        })
    };
    // golden-section search on the concave h
    let (mut a, mut bnd) = (lo, hi);
    let mut best = (h(lo)?, lo);
    let hv = h(hi)?;
    if hv > best.0 {
        best = (hv, hi);
    }
    if bnd - a > 1e-12 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = bnd - g * (bnd - a);
        let mut x2 = a + g * (bnd - a);
        let (mut f1, mut f2) = (h(x1)?, h(x2)?);
        for _ in 0..80 {
            if bnd - a < 1e-12 {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (bnd - a);
                f2 = h(x2)?;
            } else {
                bnd = x2;
                x2 = x1;
                f2 = f1;
                x1 = bnd - g * (bnd - a);
                f1 = h(x1)?;
            }
        }
        for (f, x) in [(f1, x1), (f2, x2)] {
            if f > best.0 {
                best = (f, x);
            }
        }
    }
    if best.0 < -UPC_TOL {
        return Ok(None);
    }
    let b = best.1;
    let (c, x) = max_correlation_at(k, &acc, &lifts, b)?
        .ok_or_else(|| Error::solver("positive-correlation", "LP infeasible at chosen bias"))?;
    let measure = measure_from_solution(k, &acc, &x[..acc.len()])?;
    let witness = UpcWitness { measure, bias: b, correlation: c };
    verify_upc(p, &witness).map_err(|e| Error::solver("positive-correlation", e.to_string()))?;
    Ok(Some(witness))
}

fn check_arity(q: &MultilinearPoly, mu: &Measure) -> Result<()> {
    if q.arity() != mu.arity() {
        return Err(Error::Shape(format!("objective arity {} vs measure arity {}", q.arity(), mu.arity())));
    }
    Ok(())
}

/// `Opt(Q, μ)`: the best expected objective after flipping every coordinate
/// independently with a common probability `p`. Returns `(value, p*)`.
pub fn opt_flip(q: &MultilinearPoly, mu: &Measure) -> Result<(f64, f64)> {
    check_arity(q, mu)?;
    // flips scale the monomial moment m_S by t^{|S|} with t = 1 - 2p
    let mut poly = vec![0.0; q.arity() + 1];
    for (mask, c) in q.terms() {
        poly[mask.count_ones() as usize] += c * mu.moment(mask);
    }
    let (value, t) = univariate::maximize(&poly, -1.0, 1.0);
    Ok((value, (1.0 - t) / 2.0))
}

/// Which bit value the asymmetric flip probability `p` acts on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum FlipConvention {
    /// "one" is the `+1` (false) value: `p` flips `+1 → -1`, `q` flips `-1 → +1`.
    #[default]
    OneIsPlus,
    /// "one" is the `-1` (true) value.
    OneIsMinus,
}

fn asym_value(q: &MultilinearPoly, support: &[(Vec<f64>, f64)], p: f64, qq: f64, conv: FlipConvention) -> f64 {
    let (p_plus, p_minus) = match conv {
        FlipConvention::OneIsPlus => (p, qq),
        FlipConvention::OneIsMinus => (qq, p),
    };
    // E[x' | x] = alpha + beta x
    let alpha = p_minus - p_plus;
    let beta = 1.0 - p_plus - p_minus;
    let mut y = vec![0.0; q.arity()];
    support
        .iter()
        .map(|(x, w)| {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = alpha + beta * xi;
            }
            w * q.eval(&y)
        })
        .sum()
}

/// `Opt⁺(Q, μ)`: best expected objective over independent asymmetric flips.
/// Returns `(value, p*, q*)` under the given bit-value convention.
pub fn opt_flip_asym(
    q: &MultilinearPoly,
    mu: &Measure,
    conv: FlipConvention,
) -> Result<(f64, f64, f64)> {
    check_arity(q, mu)?;
    let support: Vec<(Vec<f64>, f64)> = mu
        .support()
        .into_iter()
        .map(|i| {
            let x = fourier::point(mu.arity(), i).iter().map(|&v| v as f64).collect();
            (x, mu.weights()[i])
        })
        .collect();
    let f = |p: f64, qq: f64| asym_value(q, &support, p, qq, conv);
    let grid = 400;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for a in 0..=grid {
        for b in 0..=grid {
            let (p, qq) = (a as f64 / grid as f64, b as f64 / grid as f64);
            let v = f(p, qq);
            if v > best.0 {
                best = (v, p, qq);
            }
        }
    }
    let (sym_value, sym_p) = opt_flip(q, mu)?;
    let sym_at = f(sym_p, sym_p);
    if sym_at > best.0 {
        best = (sym_at, sym_p, sym_p);
    }
    // pattern search refinement
    let mut step = 1.0 / grid as f64;
    while step > 1e-7 {
        let mut improved = false;
        for (dp, dq) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step), (step, step), (-step, -step), (step, -step), (-step, step)] {
            let (p, qq) = ((best.1 + dp).clamp(0.0, 1.0), (best.2 + dq).clamp(0.0, 1.0));
            let v = f(p, qq);
            if v > best.0 + 1e-15 {
                best = (v, p, qq);
                improved = true;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    debug_assert!(best.0 >= sym_value - 1e-6);
    Ok(best)
}

/// Verdict on one pair `{i, j}` for the resistance conditions.
#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    pub pair: (usize, usize),
    /// `Q̂({i,j})`
    pub coefficient: String,
    /// `Cov_μ[x_i, x_j]`
    pub covariance: String,
    /// `Cov_μ[x_i, x_j] · Q̂({i,j})`
    pub signed_product: String,
    /// Both means vanish and the signed product is `≤ 0`.
    pub negative: bool,
    /// Coordinate covering the pair, if any.
    pub covered_by: Option<usize>,
    /// The pair carries a nonzero coefficient.
    pub relevant: bool,
    pub ok: bool,
}

/// Coverage verdict on a subset with `|S| ∉ {0, 2}` and `Q̂(S) ≠ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct CoverVerdict {
    pub subset: Vec<usize>,
    pub coefficient: String,
    pub covered_by: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub pairs: Vec<PairVerdict>,
    pub subsets: Vec<CoverVerdict>,
    pub pass: bool,
}

/// Checks the relaxed pairwise conditions for `P` not being useful for `Q`
/// under `μ`, in exact rational arithmetic.
///
/// Every pair with a nonzero coefficient must be `{i,j}`-negative or covered;
/// every other nonzero term with `|S| ≠ 2` must be covered.
pub fn check_resistance(p: &Predicate, q: &MultilinearPoly, mu: &Measure) -> Result<ConditionReport> {
    let k = p.arity();
    if q.arity() != k || mu.arity() != k {
        return Err(Error::Shape("predicate, objective and measure arities differ".into()));
    }
    if !mu.is_supported_on(p) {
        return Err(Error::Precondition("measure puts weight on a string rejected by P".into()));
    }
    let first: Vec<BigRational> = (0..k).map(|i| mu.exact_moment(1 << i)).collect();
    let second = |i: usize, j: usize| mu.exact_moment(1 << i | 1 << j);
    let coeff = |mask: u32| exact::from_f64(q.coeff(mask));
    let covers = |mask: u32| -> Option<usize> {
        let members: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        members.iter().copied().find(|&i| {
            first[i].is_zero() && members.iter().all(|&j| j == i || second(i, j).is_zero())
        })
    };

    let mut pairs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let mask = 1u32 << i | 1 << j;
            let c = coeff(mask);
            let cov = second(i, j) - &first[i] * &first[j];
            let prod = &cov * &c;
            let negative = first[i].is_zero() && first[j].is_zero() && !prod.is_positive();
            let covered_by = covers(mask);
            let relevant = !c.is_zero();
            pairs.push(PairVerdict {
                pair: (i + 1, j + 1),
                coefficient: exact::format_rational(&c),
                covariance: exact::format_rational(&cov),
                signed_product: exact::format_rational(&prod),
                negative,
                covered_by: covered_by.map(|v| v + 1),
                relevant,
                ok: !relevant || negative || covered_by.is_some(),
            });
        }
    }
    let mut subsets = Vec::new();
    for (mask, c) in q.terms() {
        let size = mask.count_ones();
        if size == 0 || size == 2 || c == 0.0 {
            continue;
        }
        subsets.push(CoverVerdict {
            subset: fourier::subset_indices(mask),
            coefficient: exact::format_rational(&exact::from_f64(c)),
            covered_by: covers(mask).map(|v| v + 1),
        });
    }
    let pass = pairs.iter().all(|v| v.ok) && subsets.iter().all(|v| v.covered_by.is_some());
    Ok(ConditionReport { pairs, subsets, pass })
}

/// Helper used by tests and reports: index of pair `(i, j)` among lift coordinates.
pub fn pair_lift_coordinate(k: usize, i: usize, j: usize) -> usize {
    k + pair_index(k, i, j)
}
