//! Monte Carlo simulator for the noisy dictatorship test and the biased
//! low-degree influence measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{self, BiasedChar, MultilinearPoly, Predicate};
use crate::lp::{LpProblem, LpVerdict, Sense};
use crate::measure::{self, Measure, PairwiseSearch, MOMENT_TOL};

pub const MAX_COORDS: usize = 24;
/// Table-backed functions are limited to this many coordinates.
pub const MAX_TABLE_COORDS: usize = 20;
const Z99: f64 = 2.576;
const BATCH: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct TestConfig {
    pub measure: Measure,
    pub bias: f64,
    pub epsilon: f64,
    pub coords: usize,
    pub samples: usize,
    pub seed: u64,
}

impl TestConfig {
    pub fn new(measure: Measure, bias: f64, epsilon: f64, coords: usize, samples: usize, seed: u64) -> Result<Self> {
        let cfg = TestConfig { measure, bias, epsilon, coords, samples, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.measure.arity();
        for i in 0..k {
            let m = self.measure.moment(1 << i);
            if (m - self.bias).abs() > MOMENT_TOL {
                return Err(Error::Config(format!("E[x_{}] = {m} differs from bias {}", i + 1, self.bias)));
            }
        }
        if !(-1.0..=1.0).contains(&self.bias) {
            return Err(Error::Config(format!("bias {} outside [-1, 1]", self.bias)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("noise rate {} outside [0, 1]", self.epsilon)));
        }
        if self.coords == 0 || self.coords > MAX_COORDS {
            return Err(Error::Config(format!("coordinate count {} outside 1..={MAX_COORDS}", self.coords)));
        }
        if self.samples == 0 {
            return Err(Error::Config("need at least one sample".into()));
        }
        Ok(())
    }
}

/// A measure on `P⁻¹(1)` with equal first moments, and that common bias:
/// a pairwise independent witness if one exists, else any zero-bias measure,
/// else a uniformly positively correlated witness.
pub fn default_measure(p: &Predicate) -> Result<(Measure, f64)> {
    if let PairwiseSearch::Witness(mu) = measure::find_pairwise_independent(p)? {
        return Ok((mu, 0.0));
    }
    let k = p.arity();
    let acc = p.accepted();
    let mut lp = LpProblem::new(acc.len());
    lp.push(vec![1.0; acc.len()], Sense::Eq, 1.0);
    for i in 0..k {
        lp.push(acc.iter().map(|&x| fourier::point(k, x)[i] as f64).collect(), Sense::Eq, 0.0);
    }
    if let LpVerdict::Optimal(sol) = lp.solve()? {
        let mut w = vec![0.0; 1 << k];
        for (&x, &v) in acc.iter().zip(&sol.x) {
            w[x] = v.max(0.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let mu = Measure::from_weights(k, w)?.exactify();
        if (0..k).all(|i| mu.moment(1 << i).abs() <= MOMENT_TOL) {
            return Ok((mu, 0.0));
        }
    }
    match measure::find_uniformly_positively_correlated(p)? {
        Some(w) => Ok((w.measure, w.bias)),
        None => Err(Error::Config("no measure on the accepted strings has equal first moments".into())),
    }
}

/// Functions on `{-1,1}^L`; points are bitmasks with bit `j` set iff `x_{j+1} = -1`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `x_i`, 0-based.
    Dictator(usize),
    /// Sign of the sum, `0` on ties.
    Majority,
    /// `χ_S` for the subset mask `S`.
    Parity(u32),
    /// Folded uniformly random `±1` table.
    RandomFolded(u64),
    Table(Vec<f64>),
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Dictator(i) => format!("dictator({})", i + 1),
            TestFunction::Majority => "majority".into(),
            TestFunction::Parity(s) => format!("parity({s:#b})"),
            TestFunction::RandomFolded(seed) => format!("random-folded({seed})"),
            TestFunction::Table(_) => "table".into(),
        }
    }

    /// Prepares the function for evaluation on `coords` coordinates.
    pub fn compile(&self, coords: usize) -> Result<CompiledFunction> {
        if coords == 0 || coords > MAX_COORDS {
            return Err(Error::Size(format!("coordinate count {coords} outside 1..={MAX_COORDS}")));
        }
        Ok(match self {
            TestFunction::Dictator(i) => {
                if *i >= coords {
                    return Err(Error::Domain(format!("dictator coordinate {} exceeds L = {coords}", i + 1)));
                }
                CompiledFunction::Dictator(*i)
            }
            TestFunction::Majority => CompiledFunction::Majority(coords),
            TestFunction::Parity(s) => {
                if coords < 32 && *s >> coords != 0 {
                    return Err(Error::Domain("parity set exceeds the coordinates".into()));
                }
                CompiledFunction::Parity(*s)
            }
            TestFunction::RandomFolded(seed) => {
                if coords > MAX_TABLE_COORDS {
                    return Err(Error::Size(format!("random tables need L ≤ {MAX_TABLE_COORDS}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let raw: Vec<f64> = (0..1usize << coords).map(|_| if rng.random() { 1.0 } else { -1.0 }).collect();
                CompiledFunction::Table(fold(&raw)?)
            }
            TestFunction::Table(t) => {
                if t.len() != 1 << coords {
                    return Err(Error::Shape(format!("table has {} entries, expected 2^{coords}", t.len())));
                }
                if t.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                    return Err(Error::Domain("table values must lie in [-1, 1]".into()));
                }
                CompiledFunction::Table(t.clone())
            }
        })
    }

    pub fn table(&self, coords: usize) -> Result<Vec<f64>> {
        if coords > MAX_TABLE_COORDS {
            return Err(Error::Size(format!("tables need L ≤ {MAX_TABLE_COORDS}")));
        }
        let f = self.compile(coords)?;
        Ok((0..1u32 << coords).map(|x| f.eval(x)).collect())
    }
}

#[derive(Clone, Debug)]
pub enum CompiledFunction {
    Dictator(usize),
    Majority(usize),
    Parity(u32),
    Table(Vec<f64>),
}

impl CompiledFunction {
    pub fn eval(&self, x: u32) -> f64 {
        match self {
            CompiledFunction::Dictator(i) => {
                if x >> i & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            }
            CompiledFunction::Majority(l) => {
                let minus = x.count_ones() as i64;
                (*l as i64 - 2 * minus).signum() as f64
            }
            CompiledFunction::Parity(s) => {
                if (x & s).count_ones() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                }
            }
            CompiledFunction::Table(t) => t[x as usize],
        }
    }
}

/// `f'(x) = (f(x) − f(−x))/2`.
pub fn fold(table: &[f64]) -> Result<Vec<f64>> {
    let n = table.len();
    if !n.is_power_of_two() {
        return Err(Error::Shape(format!("table length {n} is not a power of two")));
    }
    let all = n - 1;
    Ok((0..n).map(|x| (table[x] - table[x ^ all]) / 2.0).collect())
}

/// Draws the `k` rows of one test: column `j` comes from `μ` with probability
/// `1 − ε`, otherwise from the `b`-biased product distribution.
pub fn sample_test_tuple<R: Rng + ?Sized>(
    cfg: &TestConfig,
    sampler: &rand::distr::weighted::WeightedIndex<f64>,
    rng: &mut R,
) -> Vec<u32> {
    let k = cfg.measure.arity();
    let p_minus = (1.0 - cfg.bias) / 2.0;
    let mut rows = vec![0u32; k];
    for j in 0..cfg.coords {
        if rng.random::<f64>() < cfg.epsilon {
            for row in rows.iter_mut() {
                if rng.random::<f64>() < p_minus {
                    *row |= 1 << j;
                }
            }
        } else {
            let s = cfg.measure.sample_index(sampler, rng);
            for (i, row) in rows.iter_mut().enumerate() {
                if s >> i & 1 == 1 {
                    *row |= 1 << j;
                }
            }
        }
    }
    rows
}

#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub function: String,
    pub epsilon: f64,
    pub coords: usize,
    pub samples: usize,
    pub estimate: f64,
    /// Half-width of the 99% normal-approximation interval.
    pub ci: f64,
}

/// Monte Carlo estimate of `E[objective(f(x⃗_1), …, f(x⃗_k))]` with the
/// objective extended multilinearly.
pub fn run_test(objective: &MultilinearPoly, f: &TestFunction, cfg: &TestConfig) -> Result<TestResult> {
    cfg.validate()?;
    let k = cfg.measure.arity();
    if objective.arity() != k {
        return Err(Error::Shape(format!("objective arity {} vs measure arity {k}", objective.arity())));
    }
    let compiled = f.compile(cfg.coords)?;
    let sampler = cfg.measure.sampler()?;
    let batches = cfg.samples.div_ceil(BATCH);
    let (sum, sumsq) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let len = BATCH.min(cfg.samples - b * BATCH);
            let mut vals = vec![0.0; k];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let rows = sample_test_tuple(cfg, &sampler, &mut rng);
                for (v, &row) in vals.iter_mut().zip(&rows) {
                    *v = compiled.eval(row);
                }
                let a = objective.eval(&vals);
                s += a;
                s2 += a * a;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = cfg.samples as f64;
    let estimate = sum / n;
    let var = (sumsq / n - estimate * estimate).max(0.0);
    Ok(TestResult {
        function: f.name(),
        epsilon: cfg.epsilon,
        coords: cfg.coords,
        samples: cfg.samples,
        estimate,
        ci: Z99 * (var / n).sqrt(),
    })
}

/// `max_i Σ_{S ∋ i, |S| ≤ d} f̂(S; b)²` in the `b`-biased orthonormal basis.
pub fn quasirandomness(table: &[f64], d: usize, bias: f64) -> Result<f64> {
    let n = table.len();
    if !n.is_power_of_two() {
        return Err(Error::Shape(format!("table length {n} is not a power of two")));
    }
    let l = n.trailing_zeros() as usize;
    if l > MAX_TABLE_COORDS {
        return Err(Error::Size(format!("quasirandomness needs L ≤ {MAX_TABLE_COORDS}")));
    }
    let coeffs = BiasedChar::new(bias)?.transform(table)?;
    let mut per_coord = vec![0.0; l];
    for (s, c) in coeffs.iter().enumerate() {
        let size = s.count_ones() as usize;
        if size == 0 || size > d {
            continue;
        }
        for (i, slot) in per_coord.iter_mut().enumerate() {
            if s >> i & 1 == 1 {
                *slot += c * c;
            }
        }
    }
    Ok(per_coord.into_iter().fold(0.0, f64::max))
}
