//! Max-P instances: constraints over literals, planted generators, the
//! brute-force oracle, and induced literal-string histograms.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, MultilinearPoly};
use crate::measure::Measure;

pub const BRUTE_FORCE_MAX_N: usize = 24;

/// One constraint: `k` distinct 0-based variables with signs in `{-1, 1}`;
/// sign `-1` marks a negated literal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub vars: Vec<usize>,
    pub signs: Vec<i8>,
}

impl Constraint {
    pub fn new(vars: Vec<usize>, signs: Vec<i8>) -> Self {
        Constraint { vars, signs }
    }

    pub fn unnegated(vars: Vec<usize>) -> Self {
        let signs = vec![1; vars.len()];
        Constraint { vars, signs }
    }

    /// Cube index of the literal string under `a`.
    pub fn literal_index(&self, a: &[i8]) -> usize {
        self.vars
            .iter()
            .zip(&self.signs)
            .enumerate()
            .fold(0, |idx, (i, (&v, &s))| if a[v] * s < 0 { idx | 1 << i } else { idx })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    n: usize,
    k: usize,
    constraints: Vec<Constraint>,
}

/// A `±1` assignment of length `n`.
pub type Assignment = Vec<i8>;

impl Instance {
    pub fn new(n: usize, k: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if k == 0 || k > fourier::MAX_ARITY {
            return Err(Error::Size(format!("arity {k} outside 1..={}", fourier::MAX_ARITY)));
        }
        for (j, c) in constraints.iter().enumerate() {
            if c.vars.len() != k || c.signs.len() != k {
                return Err(Error::Shape(format!("constraint {} does not have arity {k}", j + 1)));
            }
            if let Some(&v) = c.vars.iter().find(|&&v| v >= n) {
                return Err(Error::Shape(format!("constraint {}: variable {} exceeds n = {n}", j + 1, v + 1)));
            }
            if c.signs.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::Domain(format!("constraint {}: signs must be ±1", j + 1)));
            }
            for (i, v) in c.vars.iter().enumerate() {
                if c.vars[..i].contains(v) {
                    return Err(Error::Domain(format!("constraint {}: repeated variable {}", j + 1, v + 1)));
                }
            }
        }
        Ok(Instance { n, k, constraints })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn has_negations(&self) -> bool {
        self.constraints.iter().any(|c| c.signs.iter().any(|&s| s < 0))
    }

    pub fn check_assignment(&self, a: &[i8]) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::Shape(format!("assignment has length {}, expected {}", a.len(), self.n)));
        }
        if a.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Domain("assignment entries must be ±1".into()));
        }
        Ok(())
    }

    /// Text form: header `maxcsp k n m`, then one line of `k` signed 1-based
    /// literals per constraint.
    pub fn to_text(&self) -> String {
        let mut out = format!("maxcsp {} {} {}\n", self.k, self.n, self.m());
        for c in &self.constraints {
            let lits: Vec<String> =
                c.vars.iter().zip(&c.signs).map(|(&v, &s)| (s as i64 * (v as i64 + 1)).to_string()).collect();
            out.push_str(&lits.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [tag, k, n, m] = fields[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        if tag != "maxcsp" {
            return Err(Error::Parse(format!("header must start with `maxcsp`, got {tag:?}")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad header field {s:?}")));
        let (k, n, m) = (num(k)?, num(n)?, num(m)?);
        let mut constraints = Vec::with_capacity(m);
        for line in lines {
            let mut vars = Vec::with_capacity(k);
            let mut signs = Vec::with_capacity(k);
            for tok in line.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|_| Error::Parse(format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    return Err(Error::Parse("literal 0 is not allowed".into()));
                }
                vars.push(lit.unsigned_abs() as usize - 1);
                signs.push(if lit < 0 { -1 } else { 1 });
            }
            constraints.push(Constraint { vars, signs });
        }
        if constraints.len() != m {
            return Err(Error::Parse(format!("header says {m} constraints, found {}", constraints.len())));
        }
        Instance::new(n, k, constraints)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn objective_table(objective: &MultilinearPoly, inst: &Instance) -> Result<Vec<f64>> {
    if objective.arity() != inst.k() {
        return Err(Error::Shape(format!(
            "objective arity {} vs instance arity {}",
            objective.arity(),
            inst.k()
        )));
    }
    Ok(objective.to_table())
}

/// `(1/m) Σ_j Q(literal string j)`.
pub fn evaluate(objective: &MultilinearPoly, inst: &Instance, a: &[i8]) -> Result<f64> {
    let table = objective_table(objective, inst)?;
    inst.check_assignment(a)?;
    Ok(evaluate_with_table(&table, inst, a))
}

pub(crate) fn evaluate_with_table(table: &[f64], inst: &Instance, a: &[i8]) -> f64 {
    if inst.m() == 0 {
        return 0.0;
    }
    let total: f64 = inst.constraints.iter().map(|c| table[c.literal_index(a)]).sum();
    total / inst.m() as f64
}

/// Assignment whose bit `i` of `code` is set iff `x_{i+1} = -1`.
pub fn decode_assignment(n: usize, code: u64) -> Assignment {
    (0..n).map(|i| if code >> i & 1 == 1 { -1 } else { 1 }).collect()
}

pub fn encode_assignment(a: &[i8]) -> u64 {
    a.iter().enumerate().fold(0, |c, (i, &v)| if v < 0 { c | 1 << i } else { c })
}

/// Exact maximum of the objective over all `2^n` assignments. Ties go to the
/// assignment with the smallest code (see [`encode_assignment`]).
pub fn brute_force(objective: &MultilinearPoly, inst: &Instance) -> Result<(f64, Assignment)> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Size(format!("brute force needs n ≤ {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    let table = objective_table(objective, inst)?;
    let m = inst.m();
    let tol = 1e-9 * (m as f64).max(1.0);
    // occurrences[v] = (constraint, bit position)
    let mut occurrences = vec![Vec::new(); n];
    for (j, c) in inst.constraints.iter().enumerate() {
        for (pos, &v) in c.vars.iter().enumerate() {
            occurrences[v].push((j, pos));
        }
    }
    let low = n.min(16);
    let high = n - low;
    let better = |a: (f64, u64), b: (f64, u64)| -> bool {
        a.0 > b.0 + tol || (a.0 >= b.0 - tol && a.1 < b.1)
    };
    let best = (0u64..1 << high)
        .into_par_iter()
        .map(|h| {
            let base = h << low;
            let mut a = decode_assignment(n, base);
            let mut idx: Vec<usize> = inst.constraints.iter().map(|c| c.literal_index(&a)).collect();
            let mut total: f64 = idx.iter().map(|&i| table[i]).sum();
            let mut best = (total, base);
            for t in 1u64..1 << low {
                let v = t.trailing_zeros() as usize;
                a[v] = -a[v];
                for &(j, pos) in &occurrences[v] {
                    let old = idx[j];
                    idx[j] ^= 1 << pos;
                    total += table[idx[j]] - table[old];
                }
                let code = base | (t ^ (t >> 1));
                if better((total, code), best) {
                    best = (total, code);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), |x, y| if better(y, x) { y } else { x });
    let a = decode_assignment(n, best.1);
    let value = evaluate_with_table(&table, inst, &a);
    Ok((value, a))
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("corruption fraction {eps} outside [0, 1]")));
    }
    Ok(())
}

fn check_size(n: usize, k: usize) -> Result<()> {
    if n < k {
        return Err(Error::Domain(format!("need n ≥ k, got n = {n}, k = {k}")));
    }
    Ok(())
}

fn random_signs<R: Rng>(rng: &mut R, k: usize) -> Vec<i8> {
    (0..k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

/// Planted instance at the all-ones assignment: each constraint gets a
/// uniformly random tuple of distinct variables and signs making its literal
/// string a `μ`-sample; a uniformly chosen `⌊εm⌋` subset gets random signs.
pub fn planted_instance(mu: &Measure, n: usize, m: usize, eps: f64, seed: u64) -> Result<Instance> {
    check_epsilon(eps)?;
    let k = mu.arity();
    check_size(n, k)?;
    let sampler = mu.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constraints = Vec::with_capacity(m);
    for _ in 0..m {
        let vars = index::sample(&mut rng, n, k).into_vec();
        let s = mu.sample_index(&sampler, &mut rng);
        constraints.push(Constraint { vars, signs: fourier::point(k, s) });
    }
    let corrupt = (eps * m as f64).floor() as usize;
    for j in index::sample(&mut rng, m, corrupt.min(m)) {
        constraints[j].signs = random_signs(&mut rng, k);
    }
    Instance::new(n, k, constraints)
}

/// Planted instance hidden behind a uniformly random assignment `h`: the
/// all-ones construction with every sign multiplied by `h` at its variable.
pub fn planted_instance_hidden(
    mu: &Measure,
    n: usize,
    m: usize,
    eps: f64,
    seed: u64,
) -> Result<(Instance, Assignment)> {
    let inst = planted_instance(mu, n, m, eps, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = random_signs(&mut rng, n);
    let constraints = inst
        .constraints
        .into_iter()
        .map(|c| {
            let signs = c.vars.iter().zip(&c.signs).map(|(&v, &s)| s * h[v]).collect();
            Constraint { vars: c.vars, signs }
        })
        .collect();
    Ok((Instance::new(n, inst.k, constraints)?, h))
}

/// Planted instance without negations: a uniformly random hidden assignment
/// `h`, and for each constraint a `μ`-sample `s` realized by distinct variables
/// `v_i` with `h_{v_i} = s_i`. Corrupted constraints use uniformly random
/// tuples.
pub fn planted_positive_instance(
    mu: &Measure,
    n: usize,
    m: usize,
    eps: f64,
    seed: u64,
) -> Result<(Instance, Assignment)> {
    check_epsilon(eps)?;
    let k = mu.arity();
    check_size(n, k)?;
    let sampler = mu.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_signs(&mut rng, n);
    let plus: Vec<usize> = (0..n).filter(|&v| h[v] == 1).collect();
    let minus: Vec<usize> = (0..n).filter(|&v| h[v] == -1).collect();
    let mut constraints = Vec::with_capacity(m);
    for _ in 0..m {
        let s = fourier::point(k, mu.sample_index(&sampler, &mut rng));
        let need_plus = s.iter().filter(|&&v| v == 1).count();
        let need_minus = k - need_plus;
        if plus.len() < need_plus || minus.len() < need_minus {
            return Err(Error::Domain(format!(
                "hidden assignment has {} ones and {} minus ones; cannot plant {s:?}",
                plus.len(),
                minus.len()
            )));
        }
        let mut from_plus = index::sample(&mut rng, plus.len(), need_plus).into_iter().map(|i| plus[i]);
        let mut from_minus = index::sample(&mut rng, minus.len(), need_minus).into_iter().map(|i| minus[i]);
        let vars = s
            .iter()
            .map(|&v| if v == 1 { from_plus.next() } else { from_minus.next() }.expect("sampled enough"))
            .collect();
        constraints.push(Constraint::unnegated(vars));
    }
    let corrupt = (eps * m as f64).floor() as usize;
    for j in index::sample(&mut rng, m, corrupt.min(m)) {
        constraints[j] = Constraint::unnegated(index::sample(&mut rng, n, k).into_vec());
    }
    Ok((Instance::new(n, k, constraints)?, h))
}

/// Instance with uniformly random tuples and signs.
pub fn random_instance(k: usize, n: usize, m: usize, negations: bool, seed: u64) -> Result<Instance> {
    check_size(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constraints = (0..m)
        .map(|_| {
            let vars = index::sample(&mut rng, n, k).into_vec();
            let signs = if negations { random_signs(&mut rng, k) } else { vec![1; k] };
            Constraint { vars, signs }
        })
        .collect();
    Instance::new(n, k, constraints)
}

pub fn random_assignment(n: usize, seed: u64) -> Assignment {
    random_signs(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Empirical distribution of literal strings, indexed like the cube.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InducedHistogram {
    pub arity: usize,
    pub frequencies: Vec<f64>,
}

pub fn induced_histogram(inst: &Instance, a: &[i8]) -> Result<InducedHistogram> {
    inst.check_assignment(a)?;
    let mut counts = vec![0usize; 1 << inst.k()];
    for c in inst.constraints() {
        counts[c.literal_index(a)] += 1;
    }
    let m = inst.m().max(1) as f64;
    Ok(InducedHistogram { arity: inst.k(), frequencies: counts.iter().map(|&c| c as f64 / m).collect() })
}

/// `(1/2) Σ |h(α) − 2^{-k}|`.
pub fn tv_from_uniform(h: &InducedHistogram) -> f64 {
    let u = 1.0 / h.frequencies.len() as f64;
    0.5 * h.frequencies.iter().map(|f| (f - u).abs()).sum::<f64>()
}

/// Two constraints on three variables differing only in the third literal.
pub fn or_xor_gadget() -> Instance {
    Instance::new(
        3,
        3,
        vec![Constraint::new(vec![0, 1, 2], vec![1, 1, 1]), Constraint::new(vec![0, 1, 2], vec![1, 1, -1])],
    )
    .expect("valid gadget")
}

/// All unnegated pairs of `n` variables.
pub fn complete_graph_gadget(n: usize) -> Result<Instance> {
    let constraints = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| Constraint::unnegated(vec![i, j])))
        .collect();
    Instance::new(n, 2, constraints)
}
