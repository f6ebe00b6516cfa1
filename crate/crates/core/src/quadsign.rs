//! Exact check of the sign-of-quadratic resistant predicate on 12 variables,
//! `Q = 10(L₁+x₁)(L₂+x₂) + x₁L₂ + 2x₂L₁` with `L₁ = x₃+…+x₇`, `L₂ = x₈+…+x₁₂`,
//! together with its supporting measure whose weights live in `ℚ(√41)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::exact::{format_rational, from_int, ratio, to_f64};
use crate::fourier::{fwht, Predicate};

pub const ARITY: usize = 12;
const ROOT: i64 = 41;

/// `a + b√41` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: BigRational,
    pub b: BigRational,
}

impl Surd {
    pub fn rational(a: BigRational) -> Self {
        Surd { a, b: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Surd::rational(from_int(n))
    }

    pub fn zero() -> Self {
        Surd::int(0)
    }

    /// `(7 − √41)/8`.
    pub fn quadsign_c() -> Self {
        Surd { a: ratio(7, 8), b: ratio(-1, 8) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa == sb || sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        let lhs = &self.a * &self.a;
        let rhs = &self.b * &self.b * from_int(ROOT);
        if lhs > rhs {
            sa
        } else {
            sb
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Surd { a: &self.a * r, b: &self.b * r }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * (ROOT as f64).sqrt()
    }
}

fn sign(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, o: &Surd) -> Surd {
        Surd { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, o: &Surd) -> Surd {
        Surd { a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, o: &Surd) -> Surd {
        Surd {
            a: &self.a * &o.a + &self.b * &o.b * from_int(ROOT),
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { a: -&self.a, b: -&self.b }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", format_rational(&self.a));
        }
        if self.a.is_zero() {
            return write!(f, "{}·√{ROOT}", format_rational(&self.b));
        }
        let op = if self.b.is_negative() { "-" } else { "+" };
        write!(f, "{} {op} {}·√{ROOT}", format_rational(&self.a), format_rational(&self.b.abs()))
    }
}

/// `x_{i+1}` at point `idx`.
pub fn coord(idx: usize, i: usize) -> i64 {
    1 - 2 * (idx as i64 >> i & 1)
}

pub fn l1(idx: usize) -> i64 {
    (2..7).map(|i| coord(idx, i)).sum()
}

pub fn l2(idx: usize) -> i64 {
    (7..12).map(|i| coord(idx, i)).sum()
}

pub fn q_value(idx: usize) -> i64 {
    let (x1, x2) = (coord(idx, 0), coord(idx, 1));
    let (a, b) = (l1(idx), l2(idx));
    10 * (a + x1) * (b + x2) + x1 * b + 2 * x2 * a
}

/// `P = sgn(Q)` as a predicate accepting where `Q > 0`; `Q` is always odd.
pub fn predicate() -> Predicate {
    let table = (0..1usize << ARITY).map(|x| q_value(x) > 0).collect();
    Predicate::new(ARITY, table).expect("12-ary table")
}

/// Subsets `α ⊇ {1,2}` whose Fourier coefficient of `P` is nonzero.
pub fn property_one_violations(p: &Predicate) -> Vec<u32> {
    let mut t: Vec<i64> = p.table().iter().map(|&a| a as i64).collect();
    fwht(&mut t);
    (0..t.len() as u32).filter(|&s| s & 3 == 3 && t[s as usize] != 0).collect()
}

/// Settings of `x₃…x₁₂` with `|L₁|, |L₂| ≥ 3` on which `P` still depends on `x₁` or `x₂`.
pub fn case_one_violations(p: &Predicate) -> usize {
    (0..1usize << (ARITY - 2))
        .map(|rest| rest << 2)
        .filter(|&base| l1(base).abs() >= 3 && l2(base).abs() >= 3)
        .filter(|&base| (1..4).any(|low| p.accepts(base | low) != p.accepts(base)))
        .count()
}

fn half_block_count(sum: i64) -> i64 {
    match sum.abs() {
        5 => 1,
        3 => 5,
        1 => 10,
        _ => 0,
    }
}

fn encode(x1: i64, x2: i64, u: usize, v: usize) -> usize {
    let bit = |s: i64| usize::from(s < 0);
    bit(x1) | bit(x2) << 1 | u << 2 | v << 7
}

fn block_sum(bits: usize) -> i64 {
    5 - 2 * bits.count_ones() as i64
}

/// Weights of the supporting measure, built from its seven-step description
/// with parameter `c`.
pub fn distribution(c: &Surd) -> Vec<Surd> {
    let half = Surd::rational(ratio(1, 2));
    let l1_law = [
        (1, &half + &c.scale(&from_int(2))),
        (3, &half - &c.scale(&from_int(3))),
        (5, c.clone()),
    ];
    let twelve_c = c.scale(&from_int(12));
    let flip = (&Surd::int(1) + &twelve_c).scale(&ratio(1, 2));
    let keep = (&Surd::int(1) - &twelve_c).scale(&ratio(1, 2));
    let mut w = vec![Surd::zero(); 1 << ARITY];
    for (a1, p1) in &l1_law {
        for a2 in [1i64, 3] {
            for b in [1i64, -1] {
                let base = (p1 * &half).scale(&ratio(1, 2));
                // (sgn L₁, sgn L₂, x₁, x₂, conditional probability)
                let branches: Vec<(i64, i64, i64, i64, Surd)> = if *a1 >= 3 && a2 >= 3 {
                    vec![(b, b, -b, -b, Surd::int(1))]
                } else if a2 != 1 {
                    vec![(b, -b, -b, -b, Surd::int(1))]
                } else {
                    vec![(b, -b, b, b, flip.clone()), (b, b, b, b, keep.clone())]
                };
                for (s1, s2, x1, x2, pr) in branches {
                    let (t1, t2) = (s1 * a1, s2 * a2);
                    let mass = (&base * &pr).scale(&ratio(1, half_block_count(t1) * half_block_count(t2)));
                    for u in (0..32).filter(|&u| block_sum(u) == t1) {
                        for v in (0..32).filter(|&v| block_sum(v) == t2) {
                            let idx = encode(x1, x2, u, v);
                            w[idx] = &w[idx] + &mass;
                        }
                    }
                }
            }
        }
    }
    w
}

fn expectation(w: &[Surd], f: impl Fn(usize) -> i64) -> Surd {
    w.iter().enumerate().filter(|(_, p)| !p.is_zero()).fold(Surd::zero(), |acc, (x, p)| {
        &acc + &p.scale(&from_int(f(x)))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub value: String,
    pub approx: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, expected: impl Into<String>, value: impl Into<String>, approx: f64, pass: bool) -> Self {
        Check { name: name.into(), expected: expected.into(), value: value.into(), approx, pass }
    }

    fn surd(name: impl Into<String>, got: &Surd, want: i64) -> Self {
        let pass = (got - &Surd::int(want)).is_zero();
        Check::new(name, want.to_string(), got.to_string(), got.to_f64(), pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub c: String,
    pub c_approx: f64,
    pub support_size: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn verify_quadsign() -> VerificationReport {
    verify_quadsign_at(&Surd::quadsign_c())
}

/// Runs every check with the measure built from parameter `c`.
pub fn verify_quadsign_at(c: &Surd) -> VerificationReport {
    let p = predicate();
    let mut checks = Vec::new();

    let viol = property_one_violations(&p);
    checks.push(Check::new("fourier-vanishes-above-12", "0", viol.len().to_string(), viol.len() as f64, viol.is_empty()));
    let case1 = case_one_violations(&p);
    checks.push(Check::new("case1-independent-of-x1-x2", "0", case1.to_string(), case1 as f64, case1 == 0));

    let w = distribution(c);
    let negative = w.iter().filter(|x| x.signum() < 0).count();
    checks.push(Check::new("weights-nonnegative", "0", negative.to_string(), negative as f64, negative == 0));
    let total = w.iter().fold(Surd::zero(), |acc, x| &acc + x);
    checks.push(Check::surd("total-mass", &total, 1));
    let support: Vec<usize> = (0..w.len()).filter(|&x| !w[x].is_zero()).collect();
    let outside = support.iter().filter(|&&x| q_value(x) <= 0).count();
    checks.push(Check::new("support-in-q-positive", "0", outside.to_string(), outside as f64, outside == 0));

    checks.push(Check::surd("E[L1^2]", &expectation(&w, |x| l1(x) * l1(x)), 5));
    checks.push(Check::surd("E[L2^2]", &expectation(&w, |x| l2(x) * l2(x)), 5));
    checks.push(Check::surd("E[x1*L1]", &expectation(&w, |x| coord(x, 0) * l1(x)), 0));
    checks.push(Check::surd("E[x1*L2]", &expectation(&w, |x| coord(x, 0) * l2(x)), 0));
    checks.push(Check::surd("E[L1*L2]", &expectation(&w, |x| l1(x) * l2(x)), 0));

    let mut bad_first = Vec::new();
    for i in 0..ARITY {
        if !expectation(&w, |x| coord(x, i)).is_zero() {
            bad_first.push(i + 1);
        }
    }
    checks.push(Check::new("first-moments-zero", "[]", format!("{bad_first:?}"), bad_first.len() as f64, bad_first.is_empty()));
    let mut bad_pairs = Vec::new();
    for i in 0..ARITY {
        for j in i + 1..ARITY {
            if (i, j) != (0, 1) && !expectation(&w, |x| coord(x, i) * coord(x, j)).is_zero() {
                bad_pairs.push((i + 1, j + 1));
            }
        }
    }
    checks.push(Check::new("pair-moments-zero-except-12", "[]", format!("{bad_pairs:?}"), bad_pairs.len() as f64, bad_pairs.is_empty()));

    let pass = checks.iter().all(|c| c.pass);
    VerificationReport { c: c.to_string(), c_approx: c.to_f64(), support_size: support.len(), checks, pass }
}
