//! Predicates on `{-1,1}^k` and their multilinear (Fourier) expansions.
//!
//! Points of the cube are encoded as integers: bit `i` of the index is 0 when
//! `x_{i+1} = 1` and 1 when `x_{i+1} = -1`, so `x_1` is the least significant
//! position. The value `-1` plays the role of "true". Subsets `S ⊆ [k]` use
//! the same bit layout, which makes `χ_S(x) = (-1)^{popcount(S & x)}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::univariate;

pub const MAX_ARITY: usize = 12;

/// Coordinates of the cube point with the given index.
pub fn point(k: usize, index: usize) -> Vec<i8> {
    (0..k).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect()
}

/// Index of a `±1` point (any nonnegative entry counts as `+1`).
pub fn index_of<T: Copy + Into<f64>>(x: &[T]) -> usize {
    x.iter()
        .enumerate()
        .fold(0, |acc, (i, &v)| if v.into() < 0.0 { acc | 1 << i } else { acc })
}

/// `+`/`-` rendering of a point, `x_1` first.
pub fn point_string(k: usize, index: usize) -> String {
    (0..k).map(|i| if index >> i & 1 == 1 { '-' } else { '+' }).collect()
}

pub fn parse_point(s: &str) -> Result<usize> {
    let mut index = 0;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '-' => index |= 1 << i,
            '+' => {}
            _ => return Err(Error::Parse(format!("bad character {ch:?} in point {s:?}"))),
        }
    }
    Ok(index)
}

/// Sorted 1-based indices of a subset mask.
pub fn subset_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

pub fn subset_from_indices(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, &i| m | 1 << (i - 1))
}

/// In-place fast Walsh–Hadamard butterfly (unnormalized).
pub fn fwht<T>(data: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = data.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for j in block..block + h {
                let (a, b) = (data[j], data[j + h]);
                data[j] = a + b;
                data[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Shape(format!("table length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// A Boolean predicate `P: {-1,1}^k -> {0,1}` as a truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    arity: usize,
    table: Vec<bool>,
}

impl Predicate {
    pub fn new(arity: usize, table: Vec<bool>) -> Result<Self> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(Error::Domain(format!("arity {arity} outside [1, {MAX_ARITY}]")));
        }
        if table.len() != 1 << arity {
            return Err(Error::Shape(format!(
                "table of length {} for arity {arity}",
                table.len()
            )));
        }
        Ok(Predicate { arity, table })
    }

    pub fn from_fn(arity: usize, f: impl Fn(&[i8]) -> bool) -> Result<Self> {
        let table = (0..1usize << arity).map(|idx| f(&point(arity, idx))).collect();
        Predicate::new(arity, table)
    }

    /// Predicate whose table is the integer `bits` (bit `idx` = value at point `idx`).
    pub fn from_bits(arity: usize, bits: u64) -> Result<Self> {
        if arity > 6 {
            return Err(Error::Domain("from_bits supports arity at most 6".into()));
        }
        Predicate::new(arity, (0..1usize << arity).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn from_accepted(arity: usize, accepted: &[usize]) -> Result<Self> {
        let mut table = vec![false; 1 << arity];
        for &idx in accepted {
            if idx >= table.len() {
                return Err(Error::Shape(format!("point index {idx} out of range")));
            }
            table[idx] = true;
        }
        Predicate::new(arity, table)
    }

    /// Parses a `0/1` table string of length `2^k` or a list of accepted
    /// points such as `"-++-, +-+-"` (`-` is true).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.is_empty() && text.chars().all(|c| c == '0' || c == '1') {
            let arity = log2_exact(text.len())?;
            return Predicate::new(arity, text.chars().map(|c| c == '1').collect());
        }
        let tokens: Vec<&str> = text
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let Some(first) = tokens.first() else {
            return Err(Error::Parse("empty predicate".into()));
        };
        let arity = first.len();
        let mut accepted = Vec::with_capacity(tokens.len());
        for t in &tokens {
            if t.len() != arity {
                return Err(Error::Parse(format!("point {t:?} has arity {} not {arity}", t.len())));
            }
            accepted.push(parse_point(t)?);
        }
        Predicate::from_accepted(arity, &accepted)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn accepts(&self, index: usize) -> bool {
        self.table[index]
    }

    pub fn accepts_point(&self, x: &[i8]) -> bool {
        self.table[index_of(x)]
    }

    pub fn accepted(&self) -> Vec<usize> {
        (0..self.table.len()).filter(|&i| self.table[i]).collect()
    }

    pub fn num_accepted(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    pub fn accepts_all(&self) -> bool {
        self.table.iter().all(|&b| b)
    }

    pub fn accepts_none(&self) -> bool {
        !self.table.iter().any(|&b| b)
    }

    /// `E_P`, the acceptance probability of a uniformly random string.
    pub fn density(&self) -> f64 {
        self.num_accepted() as f64 / self.table.len() as f64
    }

    pub(crate) fn require_accepting(&self) -> Result<()> {
        if self.accepts_none() {
            Err(Error::Precondition("predicate accepts no string".into()))
        } else {
            Ok(())
        }
    }

    /// `0/1` table string in index order.
    pub fn table_string(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn as_poly(&self) -> MultilinearPoly {
        let table: Vec<f64> = self.table.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        walsh_transform(&table).expect("predicate tables have power-of-two length")
    }

    /// Integer numerators `N_S` with `P̂(S) = N_S / 2^k`, dense in subset order.
    pub fn fourier_numerators(&self) -> Vec<i64> {
        let mut data: Vec<i64> = self.table.iter().map(|&b| b as i64).collect();
        fwht(&mut data);
        data
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate(k={}, {})", self.arity, self.table_string())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table_string())
    }
}

/// A real multilinear polynomial `Σ_S c_S Π_{i∈S} x_i` in `k` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearPoly {
    arity: usize,
    coeffs: BTreeMap<u32, f64>,
}

impl MultilinearPoly {
    pub fn zero(arity: usize) -> Self {
        MultilinearPoly { arity, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut poly = MultilinearPoly::zero(arity);
        for (mask, c) in terms {
            if arity < 32 && mask >> arity != 0 {
                return Err(Error::Shape(format!("subset {mask:#b} exceeds arity {arity}")));
            }
            poly.add_term(mask, c);
        }
        Ok(poly)
    }

    pub fn add_term(&mut self, mask: u32, c: f64) {
        let entry = self.coeffs.entry(mask).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&mask);
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeff(&self, mask: u32) -> f64 {
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    /// `E_Q`, the constant coefficient.
    pub fn mean(&self) -> f64 {
        self.coeff(0)
    }

    /// Evaluates the multilinear extension at any real point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(&mask, &c)| {
                let mut prod = c;
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    prod *= x[i];
                    m &= m - 1;
                }
                prod
            })
            .sum()
    }

    /// Value at the cube point with the given index.
    pub fn eval_index(&self, index: usize) -> f64 {
        self.coeffs
            .iter()
            .map(|(&mask, &c)| if (mask as usize & index).count_ones() % 2 == 1 { -c } else { c })
            .sum()
    }

    /// Dense table of values over all `2^k` points.
    pub fn to_table(&self) -> Vec<f64> {
        let mut data = vec![0.0; 1 << self.arity];
        for (&mask, &c) in &self.coeffs {
            data[mask as usize] = c;
        }
        fwht(&mut data);
        data
    }

    /// Largest `|S|` whose coefficient exceeds `threshold` in absolute value.
    pub fn degree(&self, threshold: f64) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, c)| c.abs() > threshold)
            .map(|(m, _)| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MultilinearPoly {
            arity: self.arity,
            coeffs: self.coeffs.iter().map(|(&m, &c)| (m, c * factor)).collect(),
        }
    }

    /// Coefficients of `b ↦ Q(b, ..., b)` in ascending powers of `b`.
    pub fn diagonal_polynomial(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.arity + 1];
        for (&mask, &c) in &self.coeffs {
            out[mask.count_ones() as usize] += c;
        }
        out
    }

    /// `E_Q(r)`: expectation over the `r`-biased cube (`E[x_i] = r`).
    pub fn biased_expectation(&self, r: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("bias {r} outside [-1, 1]")));
        }
        Ok(univariate::eval(&self.diagonal_polynomial(), r))
    }

    /// `(E_Q^+, r*)`: the best bias for the oblivious biased-random algorithm.
    pub fn max_biased_expectation(&self) -> (f64, f64) {
        univariate::maximize(&self.diagonal_polynomial(), -1.0, 1.0)
    }
}

/// Fourier coefficients of a real table of length `2^k`.
pub fn walsh_transform(table: &[f64]) -> Result<MultilinearPoly> {
    let arity = log2_exact(table.len())?;
    let mut data = table.to_vec();
    fwht(&mut data);
    let scale = 1.0 / table.len() as f64;
    let coeffs = data
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0.0)
        .map(|(m, c)| (m as u32, c * scale))
        .collect();
    Ok(MultilinearPoly { arity, coeffs })
}

/// Inverse of [`walsh_transform`].
pub fn inverse_walsh(poly: &MultilinearPoly) -> Vec<f64> {
    poly.to_table()
}

/// Threshold below which a Fourier coefficient of a 0/1 table counts as zero.
pub const COEFF_ZERO: f64 = 1e-12;

/// Fully approximable iff no Fourier term of degree ≥ 3; also returns the degree.
pub fn is_fully_approximable(p: &Predicate) -> (bool, usize) {
    let degree = p.as_poly().degree(COEFF_ZERO);
    (degree <= 2, degree)
}

/// The normalized single-coordinate character for the `b`-biased bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasedChar {
    pub bias: f64,
    /// `χ(-1) = -sqrt((1+b)/(1-b))`
    pub at_minus: f64,
    /// `χ(1) = sqrt((1-b)/(1+b))`
    pub at_plus: f64,
}

impl BiasedChar {
    pub fn new(bias: f64) -> Result<Self> {
        if !(bias > -1.0 && bias < 1.0) {
            return Err(Error::Domain(format!("bias {bias} must lie in (-1, 1)")));
        }
        Ok(BiasedChar {
            bias,
            at_minus: -((1.0 + bias) / (1.0 - bias)).sqrt(),
            at_plus: ((1.0 - bias) / (1.0 + bias)).sqrt(),
        })
    }

    pub fn eval(&self, x: i8) -> f64 {
        if x < 0 {
            self.at_minus
        } else {
            self.at_plus
        }
    }

    fn prob_plus(&self) -> f64 {
        (1.0 + self.bias) / 2.0
    }

    pub fn mean(&self) -> f64 {
        let p = self.prob_plus();
        p * self.at_plus + (1.0 - p) * self.at_minus
    }

    pub fn second_moment(&self) -> f64 {
        let p = self.prob_plus();
        p * self.at_plus * self.at_plus + (1.0 - p) * self.at_minus * self.at_minus
    }

    /// `b`-biased Fourier coefficients `f̂(S; b)` of a table over `{-1,1}^L`,
    /// dense in subset order.
    pub fn transform(&self, table: &[f64]) -> Result<Vec<f64>> {
        log2_exact(table.len())?;
        let (pp, pm) = (self.prob_plus(), 1.0 - self.prob_plus());
        let mut data = table.to_vec();
        let n = data.len();
        let mut h = 1;
        while h < n {
            for block in (0..n).step_by(2 * h) {
                for j in block..block + h {
                    // data[j]: value at x_i = +1, data[j + h]: value at x_i = -1
                    let (fp, fm) = (data[j], data[j + h]);
                    data[j] = pp * fp + pm * fm;
                    data[j + h] = pp * self.at_plus * fp + pm * self.at_minus * fm;
                }
            }
            h *= 2;
        }
        Ok(data)
    }
}
