//! Named predicates used throughout the examples and tests.
//!
//! All predicates follow the cube convention of [`crate::fourier`]: `-1` is true.

use crate::error::{Error, Result};
use crate::fourier::Predicate;

fn build(arity: usize, f: impl Fn(&[i8]) -> bool) -> Predicate {
    Predicate::from_fn(arity, f).expect("named predicates have valid arity")
}

fn product(x: &[i8]) -> i8 {
    x.iter().product()
}

/// Parity of `k` bits; `odd = true` accepts strings with an odd number of trues
/// (product `-1`). Odd parity is what `XOR_k` denotes below.
pub fn parity(k: usize, odd: bool) -> Predicate {
    build(k, |x| (product(x) == -1) == odd)
}

pub fn xor(k: usize) -> Predicate {
    parity(k, true)
}

/// OR of `k` bits: rejects only the all-false string `(1, ..., 1)`.
pub fn or(k: usize) -> Predicate {
    build(k, |x| x.contains(&-1))
}

/// AND of `k` bits: accepts only the all-true string `(-1, ..., -1)`.
pub fn and(k: usize) -> Predicate {
    build(k, |x| x.iter().all(|&v| v == -1))
}

pub fn eq2() -> Predicate {
    build(2, |x| x[0] == x[1])
}

pub fn neq2() -> Predicate {
    build(2, |x| x[0] != x[1])
}

/// Not-all-equal on `k` bits.
pub fn nae(k: usize) -> Predicate {
    build(k, |x| x.iter().any(|&v| v != x[0]))
}

/// `x_2 ≠ x_3` when `x_1 = -1`, `x_2 ≠ x_4` when `x_1 = 1`.
pub fn glst() -> Predicate {
    build(4, |x| if x[0] == -1 { x[1] != x[2] } else { x[1] != x[3] })
}

/// GLST with the all-ones string added.
pub fn glst_plus() -> Predicate {
    build(4, |x| glst().accepts_point(x) || x.iter().all(|&v| v == 1))
}

/// `x_1 ⊕ ((x_2 ⊕ x_3) ∨ x_4)` with `-1` read as true.
pub fn xor_or4() -> Predicate {
    build(4, |x| {
        let t: Vec<bool> = x.iter().map(|&v| v == -1).collect();
        t[0] ^ ((t[1] ^ t[2]) || t[3])
    })
}

/// `(2 + x1x3 + x1x4 + x2x3 − x2x4) / 4`, a degree-2 predicate on four variables.
pub fn fully_approximable4() -> Predicate {
    build(4, |x| {
        let v = |i: usize| x[i] as i32;
        2 + v(0) * v(2) + v(0) * v(3) + v(1) * v(2) - v(1) * v(3) == 4
    })
}

/// Names understood by [`by_name`].
pub const NAMES: &[&str] = &[
    "xorK", "evenK", "orK", "andK", "naeK", "eq2", "neq2", "glst", "glst+", "xor-or4", "fa4",
];

/// Looks up a predicate by name, e.g. `xor3`, `or4`, `nae3`, `glst+`.
pub fn by_name(name: &str) -> Result<Predicate> {
    let lower = name.trim().to_ascii_lowercase();
    let fixed = match lower.as_str() {
        "eq2" => Some(eq2()),
        "neq2" => Some(neq2()),
        "glst" => Some(glst()),
        "glst+" | "glstplus" => Some(glst_plus()),
        "xor-or4" => Some(xor_or4()),
        "fa4" => Some(fully_approximable4()),
        _ => None,
    };
    if let Some(p) = fixed {
        return Ok(p);
    }
    let split = lower.find(|c: char| c.is_ascii_digit()).unwrap_or(lower.len());
    let (stem, digits) = lower.split_at(split);
    let k: usize = digits
        .parse()
        .map_err(|_| Error::Parse(format!("unknown predicate name {name:?}")))?;
    if k == 0 || k > crate::fourier::MAX_ARITY {
        return Err(Error::Domain(format!("arity {k} out of range")));
    }
    match stem {
        "xor" | "odd" => Ok(parity(k, true)),
        "even" => Ok(parity(k, false)),
        "or" => Ok(or(k)),
        "and" => Ok(and(k)),
        "nae" => Ok(nae(k)),
        _ => Err(Error::Parse(format!("unknown predicate name {name:?}"))),
    }
}

/// Accepts a predicate name, a `0/1` table or a list of accepted points.
pub fn parse_any(text: &str) -> Result<Predicate> {
    by_name(text).or_else(|_| Predicate::parse(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(xor(3).num_accepted(), 4);
        assert_eq!(or(3).num_accepted(), 7);
        assert_eq!(and(3).accepted(), vec![7]);
        assert_eq!(nae(3).num_accepted(), 6);
        assert_eq!(glst().num_accepted(), 8);
        assert_eq!(glst_plus().num_accepted(), 9);
        assert!(glst_plus().accepts(0));
        assert_eq!(fully_approximable4().num_accepted(), 8);
    }

    #[test]
    fn glst_implies_nae_on_last_three() {
        for idx in glst().accepted() {
            let x = crate::fourier::point(4, idx);
            assert!(x[1] * x[2] + x[1] * x[3] + x[2] * x[3] < 0);
        }
    }

    #[test]
    fn names_resolve() {
        assert_eq!(by_name("XOR3").unwrap(), xor(3));
        assert_eq!(by_name("glst+").unwrap(), glst_plus());
        assert_eq!(parse_any("0110").unwrap(), neq2());
        assert!(by_name("foo3").is_err());
    }
}
