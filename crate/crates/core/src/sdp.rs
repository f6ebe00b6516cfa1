//! Homogenized quadratics and the unit-diagonal SDP relaxation of
//! `Σ_j Q(literal string j)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{self, Predicate};
use crate::instance::Instance;
use crate::separate::{pair_index, Quadratic};

/// Eigenvalue tolerance for Gram matrices.
pub const PSD_TOL: f64 = 1e-7;
const PG_MAX_ITERS: usize = 5000;

/// Pair form over variables `0..=k`; variable 0 is the homogenizing `x₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomQuadratic {
    arity: usize,
    /// Coefficients of `x_p x_q`, `p < q`, in lexicographic order over `0..=k`.
    coeffs: Vec<f64>,
    /// Minimum over accepted strings.
    pub c: f64,
    /// Maximum over the cube of `-Q`.
    pub cap_c: f64,
    /// Sum of absolute coefficients.
    pub d: f64,
}

impl HomQuadratic {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeff(&self, p: usize, q: usize) -> f64 {
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        self.coeffs[pair_index(self.arity + 1, p, q)]
    }

    /// Nonzero terms `(p, q, coefficient)` with `p < q`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.arity + 1;
        (0..n)
            .flat_map(move |p| ((p + 1)..n).map(move |q| (p, q)))
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|((p, q), &c)| (p, q, c))
    }

    /// Value at `(x₀, x)`.
    pub fn eval(&self, x0: i8, x: &[i8]) -> f64 {
        let val = |p: usize| if p == 0 { x0 as f64 } else { x[p - 1] as f64 };
        self.terms().map(|(p, q, c)| c * val(p) * val(q)).sum()
    }
}

/// Replaces each linear term `x_i` by `x₀x_i` and drops the constant.
pub fn homogenize(q: &Quadratic, p: &Predicate) -> Result<HomQuadratic> {
    let k = q.arity();
    if p.arity() != k {
        return Err(Error::Shape(format!("quadratic arity {k} vs predicate arity {}", p.arity())));
    }
    let mut coeffs = vec![0.0; (k + 1) * k / 2];
    for i in 0..k {
        coeffs[pair_index(k + 1, 0, i + 1)] = q.linear(i);
        for j in (i + 1)..k {
            coeffs[pair_index(k + 1, i + 1, j + 1)] = q.pair(i, j);
        }
    }
    let mut hq = HomQuadratic { arity: k, coeffs, c: 0.0, cap_c: 0.0, d: 0.0 };
    let values: Vec<f64> = (0..1usize << k).map(|i| hq.eval(1, &fourier::point(k, i))).collect();
    hq.c = p.accepted().iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
    hq.cap_c = values.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    hq.d = hq.coeffs.iter().map(|c| c.abs()).sum();
    if !(hq.c > 0.0) {
        return Err(Error::Domain(format!("not a separator for P: minimum over accepted strings is {}", hq.c)));
    }
    Ok(hq)
}

/// Symmetric `(n+1)×(n+1)` matrix with `⟨M, xxᵀ⟩ = Σ_j Q(literal string j)`
/// whenever `x₀ = 1`.
pub fn build_gram_objective(inst: &Instance, hq: &HomQuadratic) -> Result<DMatrix<f64>> {
    if inst.k() != hq.arity() {
        return Err(Error::Shape(format!("instance arity {} vs form arity {}", inst.k(), hq.arity())));
    }
    let dim = inst.n() + 1;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let terms: Vec<(usize, usize, f64)> = hq.terms().collect();
    for c in inst.constraints() {
        let slot = |p: usize| -> (usize, f64) {
            if p == 0 {
                (0, 1.0)
            } else {
                (c.vars[p - 1] + 1, c.signs[p - 1] as f64)
            }
        };
        for &(p, q, w) in &terms {
            let (u, su) = slot(p);
            let (v, sv) = slot(q);
            let half = 0.5 * w * su * sv;
            m[(u, v)] += half;
            m[(v, u)] += half;
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SdpMethod {
    /// Low-rank coordinate ascent on unit vectors (mixing method).
    #[default]
    Mixing,
    /// Gradient ascent on `G` with eigenvalue clipping and diagonal rescaling.
    ProjectedGradient,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SdpOptions {
    pub method: SdpMethod,
    /// Relative duality-gap target, scaled by `max(1, Σ|M_ij|)`.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { method: SdpMethod::Mixing, tol: 1e-6, max_iters: 20_000, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct GramSolution {
    pub gram: DMatrix<f64>,
    /// `⟨M, G⟩`.
    pub value: f64,
    /// Certified upper bound on the SDP optimum.
    pub upper_bound: f64,
    pub iterations: usize,
}

impl GramSolution {
    pub fn gap(&self) -> f64 {
        self.upper_bound - self.value
    }
}

fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum::<f64>().max(1.0)
}

/// Dual bound from `y_i = (MG)_ii`, shifted by the most negative eigenvalue of
/// `Diag(y) − M` so that it is dual feasible.
pub fn dual_bound(m: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let dim = m.nrows();
    let mg = m * g;
    let y = DVector::from_iterator(dim, (0..dim).map(|i| mg[(i, i)]));
    let slack = DMatrix::from_diagonal(&y) - m;
    let lmin = SymmetricEigen::new(slack).eigenvalues.min();
    y.sum() + dim as f64 * (-lmin).max(0.0)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape("objective matrix is not square".into()));
    }
    let scale = scale_of(m);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Shape("objective matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Maximizes `⟨M, G⟩` over PSD `G` with unit diagonal.
pub fn solve_gram(m: &DMatrix<f64>, opts: &SdpOptions) -> Result<GramSolution> {
    check_symmetric(m)?;
    match opts.method {
        SdpMethod::Mixing => solve_mixing(m, opts),
        SdpMethod::ProjectedGradient => solve_projected(m, opts),
    }
}

fn solve_mixing(m: &DMatrix<f64>, opts: &SdpOptions) -> Result<GramSolution> {
    let dim = m.nrows();
    let rank = ((2.0 * dim as f64).sqrt().ceil() as usize + 1).min(dim.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // columns are the vectors
    let mut v = DMatrix::<f64>::from_fn(rank, dim, |_, _| StandardNormal.sample(&mut rng));
    for mut col in v.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    let scale = scale_of(m);
    let neighbors: Vec<Vec<(usize, f64)>> = (0..dim)
        .map(|i| (0..dim).filter(|&j| j != i && m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
        .collect();
    let mut g = DVector::<f64>::zeros(rank);
    let mut last = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut next_check = 50;
    loop {
        iterations += 1;
        for i in 0..dim {
            g.fill(0.0);
            for &(j, w) in &neighbors[i] {
                g.axpy(w, &v.column(j), 1.0);
            }
            let n = g.norm();
            if n > 1e-300 {
                v.set_column(i, &(&g / n));
            }
        }
        let gram = v.transpose() * &v;
        let value = frobenius_dot(m, &gram);
        let stalled = (value - last).abs() <= 1e-13 * scale;
        last = value;
        if iterations >= next_check || stalled || iterations >= opts.max_iters {
            next_check = iterations + 50;
            let upper = dual_bound(m, &gram);
            if upper - value <= opts.tol * scale {
                return Ok(GramSolution { gram, value, upper_bound: upper, iterations });
            }
            if iterations >= opts.max_iters {
                return Err(Error::solver(
                    "sdp",
                    format!("duality gap {} after {iterations} sweeps (target {})", upper - value, opts.tol * scale),
                ));
            }
            if stalled {
                // stuck at a non-optimal stationary point: perturb and continue
                for x in v.iter_mut() {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *x += 1e-3 * noise;
                }
                for mut col in v.column_iter_mut() {
                    let n = col.norm();
                    col /= n;
                }
                last = f64::NEG_INFINITY;
            }
        }
    }
}

const DYKSTRA_ROUNDS: usize = 200;
const DYKSTRA_TOL: f64 = 1e-10;

fn clip_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

fn rescale_diagonal(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let d = DVector::from_iterator(n, (0..n).map(|i| x[(i, i)].max(1e-300).sqrt().recip()));
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { x[(i, j)] * d[i] * d[j] })
}

/// Projection onto `{PSD} ∩ {unit diagonal}` by Dykstra's alternating
/// projections, finished with a diagonal rescale of the PSD iterate.
fn project_elliptope(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut correction = DMatrix::<f64>::zeros(n, n);
    let mut x = clip_psd(&y);
    for _ in 0..DYKSTRA_ROUNDS {
        let r = &y - &correction;
        x = clip_psd(&r);
        correction = &x - &r;
        let prev = y.clone();
        y = x.clone();
        for i in 0..n {
            y[(i, i)] = 1.0;
        }
        let scale = y.norm().max(1.0);
        if (&y - &x).norm() <= DYKSTRA_TOL * scale && (&y - &prev).norm() <= DYKSTRA_TOL * scale {
            break;
        }
    }
    rescale_diagonal(&x)
}

/// Projected gradient ascent with steps that grow after each gain and shrink
/// when the inexact projection loses value.
fn solve_projected(m: &DMatrix<f64>, opts: &SdpOptions) -> Result<GramSolution> {
    let dim = m.nrows();
    let target = opts.tol * scale_of(m);
    let mut g = DMatrix::<f64>::identity(dim, dim);
    let mut value = frobenius_dot(m, &g);
    let norm = m.norm().max(1e-300);
    let mut step = 1.0 / norm;
    let mut upper = dual_bound(m, &g);
    let mut iterations = 0;
    while iterations < opts.max_iters.min(PG_MAX_ITERS) && upper - value > target {
        iterations += 1;
        let candidate = project_elliptope(&(&g + m * step));
        let cand_value = frobenius_dot(m, &candidate);
        if cand_value > value {
            g = candidate;
            value = cand_value;
            upper = upper.min(dual_bound(m, &g));
            step *= 2.0;
        } else {
            step *= 0.5;
            if step * norm < 1e-12 {
                break;
            }
        }
    }
    if upper - value > target {
        return Err(Error::solver(
            "sdp",
            format!("projected gradient stopped with duality gap {} after {iterations} steps", upper - value),
        ));
    }
    Ok(GramSolution { gram: g, value, upper_bound: upper, iterations })
}

/// Checks unit diagonal and PSD within [`PSD_TOL`].
pub fn check_gram(g: &DMatrix<f64>) -> Result<()> {
    for i in 0..g.nrows() {
        if (g[(i, i)] - 1.0).abs() > PSD_TOL {
            return Err(Error::Domain(format!("Gram diagonal entry {i} is {}", g[(i, i)])));
        }
    }
    let lmin = SymmetricEigen::new(g.clone()).eigenvalues.min();
    if lmin < -PSD_TOL {
        return Err(Error::Domain(format!("Gram matrix has eigenvalue {lmin}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{self, Constraint};
    use crate::predicates;
    use crate::separate::separating_quadratic;

    #[test]
    fn homogenize_constants() {
        let glst = predicates::glst();
        let sep = separating_quadratic(&glst).unwrap().unwrap();
        let hq = homogenize(&sep.quadratic, &glst).unwrap();
        assert_eq!((hq.c, hq.cap_c, hq.d), (1.0, 3.0, 3.0));
        let neq = predicates::neq2();
        let q = Quadratic::parse("[1,2]: -1", Some(2)).unwrap();
        let hq = homogenize(&q, &neq).unwrap();
        assert_eq!((hq.c, hq.cap_c, hq.d), (1.0, 1.0, 1.0));
    }

    #[test]
    fn homogenize_linear_term_and_evenness() {
        let p = Predicate::from_accepted(2, &[1]).unwrap();
        let q = Quadratic::parse("[1]: -1\n[1,2]: 0.5\n[]: 7", Some(2)).unwrap();
        let hq = homogenize(&q, &p).unwrap();
        assert_eq!(hq.coeff(0, 1), -1.0);
        let mean: f64 = (0..8)
            .map(|i| {
                let x = fourier::point(3, i);
                hq.eval(x[0], &x[1..])
            })
            .sum::<f64>()
            / 8.0;
        assert_eq!(mean, 0.0);
        for i in 0..8 {
            let x = fourier::point(3, i);
            let neg: Vec<i8> = x.iter().map(|v| -v).collect();
            assert_eq!(hq.eval(x[0], &x[1..]), hq.eval(neg[0], &neg[1..]));
        }
        let bad = Quadratic::parse("[1,2]: 1", Some(2)).unwrap();
        assert!(matches!(homogenize(&bad, &predicates::neq2()), Err(Error::Domain(_))));
    }

    #[test]
    fn single_edge() {
        let inst = Instance::new(2, 2, vec![Constraint::unnegated(vec![0, 1])]).unwrap();
        let q = Quadratic::parse("[1,2]: -1", Some(2)).unwrap();
        let hq = homogenize(&q, &predicates::neq2()).unwrap();
        let m = build_gram_objective(&inst, &hq).unwrap();
        let nonzero: Vec<(usize, usize)> =
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)] != 0.0).collect();
        assert_eq!(nonzero, vec![(1, 2), (2, 1)]);
        let sol = solve_gram(&m, &SdpOptions::default()).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-6);
        assert!((sol.gram[(1, 2)] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn triangle() {
        let inst = instance::complete_graph_gadget(3).unwrap();
        let q = Quadratic::parse("[1,2]: -1", Some(2)).unwrap();
        let hq = homogenize(&q, &predicates::neq2()).unwrap();
        let m = build_gram_objective(&inst, &hq).unwrap();
        for method in [SdpMethod::Mixing, SdpMethod::ProjectedGradient] {
            let sol = solve_gram(&m, &SdpOptions { method, ..Default::default() }).unwrap();
            assert!((sol.value - 1.5).abs() < 1e-4, "{method:?}: {}", sol.value);
            for (i, j) in [(1, 2), (1, 3), (2, 3)] {
                assert!((sol.gram[(i, j)] + 0.5).abs() < 1e-2);
            }
            check_gram(&sol.gram).unwrap();
        }
    }

    #[test]
    fn rank_one_consistency() {
        let glst = predicates::glst();
        let sep = separating_quadratic(&glst).unwrap().unwrap();
        let hq = homogenize(&sep.quadratic, &glst).unwrap();
        let inst = instance::random_instance(4, 12, 30, true, 4).unwrap();
        let m = build_gram_objective(&inst, &hq).unwrap();
        let obj = sep.quadratic.to_poly();
        for code in 0..1u64 << 12 {
            let a = instance::decode_assignment(12, code);
            let x = DVector::from_iterator(13, std::iter::once(1.0).chain(a.iter().map(|&v| v as f64)));
            let quad = (x.transpose() * &m * &x)[(0, 0)];
            let f = instance::evaluate(&obj, &inst, &a).unwrap() * inst.m() as f64;
            assert!((quad - f).abs() < 1e-9);
        }
    }

    #[test]
    fn relaxation_dominates_brute_force() {
        let nae = predicates::nae(3);
        let sep = separating_quadratic(&nae).unwrap().unwrap();
        let hq = homogenize(&sep.quadratic, &nae).unwrap();
        for seed in 0..5 {
            let inst = instance::random_instance(3, 14, 40, true, seed).unwrap();
            let m = build_gram_objective(&inst, &hq).unwrap();
            let sol = solve_gram(&m, &SdpOptions { seed, ..Default::default() }).unwrap();
            let (opt, _) = instance::brute_force(&sep.quadratic.to_poly(), &inst).unwrap();
            assert!(sol.value >= opt * inst.m() as f64 - 1e-6);
            assert!(sol.gap() <= 1e-6 * scale_of(&m));
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(solve_gram(&m, &SdpOptions::default()), Err(Error::Shape(_))));
    }
}
