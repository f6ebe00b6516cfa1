//! Real polynomials in one variable, stored with ascending powers.
//!
//! Used to maximize `b -> Q(b, ..., b)` and the flip-noise curves exactly:
//! every real critical point is isolated by recursing on the derivative and
//! refined by bisection, so the maximum over an interval is exact up to
//! floating-point evaluation.

fn trim(coeffs: &[f64]) -> &[f64] {
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1] == 0.0 {
        len -= 1;
    }
    &coeffs[..len]
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval(coeffs, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots in `[lo, hi]` at which the polynomial changes sign (or vanishes
/// at an isolating point), in increasing order.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let p = trim(coeffs);
    match p.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -p[0] / p[1];
            return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
        }
        _ => {}
    }
    let crit = real_roots(&derivative(p), lo, hi);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.into_iter().filter(|&c| c > lo && c < hi));
    knots.push(hi);

    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&last| r > last) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa == 0.0 {
            push(a, &mut roots);
        } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            push(bisect(p, a, b), &mut roots);
        }
    }
    if eval(p, hi) == 0.0 {
        push(hi, &mut roots);
    }
    roots
}

/// Maximum of the polynomial over `[lo, hi]` together with a maximizer.
///
/// Candidates are both endpoints, the interval midpoint and all real critical
/// points. Among candidates within `1e-12` of the maximum the one closest to
/// the midpoint wins (then the smaller one), which keeps flat optima interior.
pub fn maximize(coeffs: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mid = 0.5 * (lo + hi);
    let mut candidates = vec![lo, mid, hi];
    candidates.extend(real_roots(&derivative(coeffs), lo, hi));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values: Vec<f64> = candidates.iter().map(|&x| eval(coeffs, x)).collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut arg = lo;
    let mut found = false;
    for (&x, &v) in candidates.iter().zip(&values) {
        if v >= best - 1e-12 && (!found || (x - mid).abs() < (arg - mid).abs() - 1e-15) {
            arg = x;
            found = true;
        }
    }
    (best, arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &root in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i] -= root * ci;
                next[i + 1] += ci;
            }
            c = next;
        }
        c
    }

    #[test]
    fn roots_of_cubic() {
        let p = from_roots(&[0.5, -0.25, 0.9]);
        let roots = real_roots(&p, -1.0, 1.0);
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([-0.25, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn roots_outside_interval_are_dropped() {
        let p = from_roots(&[-3.0, 0.1, 2.0, 7.5]);
        let roots = real_roots(&p, -1.0, 1.0);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn maximize_prefers_interior_on_ties() {
        assert_eq!(maximize(&[0.5], -1.0, 1.0), (0.5, 0.0));
        // r^2 ties at both ends, smaller end wins
        assert_eq!(maximize(&[0.0, 0.0, 1.0], -1.0, 1.0), (1.0, -1.0));
        // (1 - r^4) / 2
        let (v, r) = maximize(&[0.5, 0.0, 0.0, 0.0, -0.5], -1.0, 1.0);
        assert!((v - 0.5).abs() < 1e-15 && r.abs() < 1e-12);
    }

    #[test]
    fn maximize_finds_interior_peak() {
        // -(r - 0.3)^2 + 2
        let (v, r) = maximize(&[2.0 - 0.09, 0.6, -1.0], -1.0, 1.0);
        assert!((v - 2.0).abs() < 1e-14);
        assert!((r - 0.3).abs() < 1e-12);
    }
}
