//! Clipped-Gaussian hyperplane rounding and the end-to-end solvers for the
//! negation and no-negation cases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::Predicate;
use crate::instance::{self, Assignment, Instance};
use crate::sdp::{self, GramSolution, SdpOptions, PSD_TOL};
use crate::separate::{self, Quadratic};

pub const B_GRID: [f64; 5] = [1.5, 2.0, 2.5, 3.0, 4.0];
/// Envelope constant for the rounding moment law.
pub const MOMENT_LAW_B: f64 = 2.0;
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RoundingParams {
    pub b: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RoundingParams {
    pub fn new(b: f64, trials: usize, seed: u64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Domain(format!("clipping radius must be positive, got {b}")));
        }
        if trials == 0 {
            return Err(Error::Domain("need at least one trial".into()));
        }
        Ok(RoundingParams { b, trials, seed })
    }
}

/// Vectors `v_0..v_n` with `G = VᵀV`, stored as columns.
#[derive(Clone, Debug)]
pub struct GramVectors {
    vectors: DMatrix<f64>,
}

impl GramVectors {
    pub fn factor(g: &DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new(g.clone());
        let lmin = eig.eigenvalues.min();
        if lmin < -PSD_TOL {
            return Err(Error::Domain(format!("Gram matrix is not PSD: eigenvalue {lmin}")));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let vectors = DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        Ok(GramVectors { vectors })
    }

    /// Unit vectors with prescribed Gram matrix, for tests and experiments.
    pub fn from_columns(vectors: DMatrix<f64>) -> Self {
        GramVectors { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    fn projections<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let r = DVector::<f64>::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        self.vectors.transpose() * r
    }
}

fn clipped(proj: f64, b: f64) -> f64 {
    if proj.abs() <= b {
        proj / b
    } else {
        0.0
    }
}

/// One round over all `n + 1` vectors: `x_i = 1` with probability
/// `(B + ⟨v_i, r⟩)/(2B)` when `|⟨v_i, r⟩| ≤ B`, else `1/2`; everything is
/// negated when `x₀ = -1`. Returns `x_1..x_n`.
pub fn round_once<R: Rng + ?Sized>(vecs: &GramVectors, b: f64, rng: &mut R) -> Assignment {
    let proj = vecs.projections(rng);
    let mut x: Vec<i8> = proj
        .iter()
        .map(|&p| if rng.random::<f64>() < (1.0 + clipped(p, b)) / 2.0 { 1 } else { -1 })
        .collect();
    if x[0] == -1 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x.remove(0);
    x
}

/// Biased round for the no-negation case with shifted vectors
/// `v_i = u_i − r v₀`: a sign `σ` is drawn like `x₀`, then `x̃_i = 1` with
/// probability `(1 + σ r + y_i)/2`, `y_i = (1−|r|)·clip(⟨v_i, g⟩)/B`, and
/// `x_i = σ x̃_i`. At `r = 0` this consumes randomness exactly like
/// [`round_once`] and returns the same assignment.
pub fn round_once_biased<R: Rng + ?Sized>(vecs: &GramVectors, r: f64, b: f64, rng: &mut R) -> Assignment {
    let s = 1.0 - r.abs();
    let proj = vecs.projections(rng);
    let p0 = proj[0];
    let sigma: i8 = if rng.random::<f64>() < (1.0 + s * clipped(p0, b)) / 2.0 { 1 } else { -1 };
    (1..proj.len())
        .map(|i| {
            // ⟨u_i − r v₀, g⟩
            let y = s * clipped(proj[i] - r * p0, b);
            let p = ((1.0 + sigma as f64 * r + y) / 2.0).clamp(0.0, 1.0);
            let xt: i8 = if rng.random::<f64>() < p { 1 } else { -1 };
            sigma * xt
        })
        .collect()
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingOutcome {
    pub assignment: Assignment,
    pub value: f64,
    pub trial_values: Vec<f64>,
}

impl RoundingOutcome {
    pub fn mean_value(&self) -> f64 {
        self.trial_values.iter().sum::<f64>() / self.trial_values.len() as f64
    }
}

fn best_of_trials(
    inst: &Instance,
    objective: &Quadratic,
    params: &RoundingParams,
    round: impl Fn(&mut ChaCha8Rng) -> Assignment + Sync,
) -> Result<RoundingOutcome> {
    let table = objective.to_poly().to_table();
    if objective.arity() != inst.k() {
        return Err(Error::Shape("objective and instance arities differ".into()));
    }
    let results: Vec<(Assignment, f64)> = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let a = round(&mut trial_rng(params.seed, t));
            let v = instance::evaluate_with_table(&table, inst, &a);
            (a, v)
        })
        .collect();
    let trial_values: Vec<f64> = results.iter().map(|r| r.1).collect();
    // first best trial wins ties
    let best = results
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.1 > results[b].1 { i } else { b });
    Ok(RoundingOutcome { assignment: results[best].0.clone(), value: results[best].1, trial_values })
}

/// Best of `trials` independent hyperplane rounds under `objective`.
pub fn hyperplane_round(
    g: &DMatrix<f64>,
    inst: &Instance,
    objective: &Quadratic,
    params: &RoundingParams,
) -> Result<RoundingOutcome> {
    if g.nrows() != inst.n() + 1 {
        return Err(Error::Shape(format!("Gram matrix of size {} for n = {}", g.nrows(), inst.n())));
    }
    let vecs = GramVectors::factor(g)?;
    best_of_trials(inst, objective, params, |rng| round_once(&vecs, params.b, rng))
}

/// Best of `trials` biased rounds around the bias `r`.
pub fn biased_round(
    g: &DMatrix<f64>,
    r: f64,
    inst: &Instance,
    objective: &Quadratic,
    params: &RoundingParams,
) -> Result<RoundingOutcome> {
    if g.nrows() != inst.n() + 1 {
        return Err(Error::Shape(format!("Gram matrix of size {} for n = {}", g.nrows(), inst.n())));
    }
    if r.abs() >= 1.0 {
        return Err(Error::Domain(format!("bias {r} is not interior")));
    }
    let vecs = GramVectors::factor(g)?;
    best_of_trials(inst, objective, params, |rng| round_once_biased(&vecs, r, params.b, rng))
}

/// `(1/B²)·sdp − 2e^{−B²/2}·D·m`.
pub fn rounding_bound(b: f64, sdp_value: f64, d: f64, m: usize) -> f64 {
    sdp_value / (b * b) - MOMENT_LAW_B * (-b * b / 2.0).exp() * d * m as f64
}

pub fn choose_b(sdp_value: f64, d: f64, m: usize) -> (f64, f64) {
    B_GRID
        .iter()
        .map(|&b| (b, rounding_bound(b, sdp_value, d, m)))
        .fold((B_GRID[0], f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveOptions {
    pub trials: usize,
    pub seed: u64,
    pub sdp: SdpOptions,
    /// Fixed clipping radius; chosen from [`B_GRID`] when absent.
    pub b: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { trials: DEFAULT_TRIALS, seed: 0, sdp: SdpOptions::default(), b: None }
    }
}

/// Machine-readable solver diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub separator: String,
    /// Baseline the value is compared against: `E_Q` or `E_Q^+`.
    pub baseline: f64,
    /// Optimal bias for the no-negation case.
    pub r_star: Option<f64>,
    pub sdp_value: f64,
    pub sdp_upper_bound: f64,
    pub sdp_iterations: usize,
    pub c: f64,
    pub cap_c: f64,
    pub d: f64,
    pub b: f64,
    pub bound: f64,
    pub value: f64,
    pub assignment: Assignment,
    pub trial_values: Vec<f64>,
}

fn solve_sdp(inst: &Instance, q: &Quadratic, p: &Predicate, opts: &SolveOptions) -> Result<(sdp::HomQuadratic, GramSolution)> {
    let hq = sdp::homogenize(q, p)?;
    let m = sdp::build_gram_objective(inst, &hq)?;
    let sol = sdp::solve_gram(&m, &opts.sdp)?;
    Ok((hq, sol))
}

fn pick_b(opts: &SolveOptions, sdp_value: f64, d: f64, m: usize) -> Result<(f64, f64)> {
    match opts.b {
        Some(b) => {
            RoundingParams::new(b, 1, 0)?;
            Ok((b, rounding_bound(b, sdp_value, d, m)))
        }
        None => Ok(choose_b(sdp_value, d, m)),
    }
}

/// Separator, SDP and hyperplane rounding for a predicate with no pairwise
/// independent measure. The value is the average separator objective, to be
/// compared against `E_Q = 0`.
pub fn solve_useful(inst: &Instance, p: &Predicate, opts: &SolveOptions) -> Result<SolveReport> {
    if p.arity() != inst.k() {
        return Err(Error::Shape("predicate and instance arities differ".into()));
    }
    let sep = separate::separating_quadratic(p)?.ok_or_else(|| {
        Error::Precondition("P supports a pairwise independent measure; no separator exists".into())
    })?;
    let q = sep.quadratic;
    let (hq, sol) = solve_sdp(inst, &q, p, opts)?;
    let (b, bound) = pick_b(opts, sol.value, hq.d, inst.m())?;
    let params = RoundingParams::new(b, opts.trials, opts.seed)?;
    let out = hyperplane_round(&sol.gram, inst, &q, &params)?;
    Ok(SolveReport {
        separator: q.to_text(),
        baseline: q.to_poly().mean(),
        r_star: None,
        sdp_value: sol.value,
        sdp_upper_bound: sol.upper_bound,
        sdp_iterations: sol.iterations,
        c: hq.c,
        cap_c: hq.cap_c,
        d: hq.d,
        b,
        bound,
        value: out.value,
        assignment: out.assignment,
        trial_values: out.trial_values,
    })
}

/// The no-negation pipeline: positive separator with interior bias `r*`,
/// the same SDP in the shifted vectors `u_i = r* v₀ + v_i`, and biased
/// rounding. The value is compared against `E_Q^+`.
pub fn positive_solve(inst: &Instance, p: &Predicate, opts: &SolveOptions) -> Result<SolveReport> {
    if p.arity() != inst.k() {
        return Err(Error::Shape("predicate and instance arities differ".into()));
    }
    if inst.has_negations() {
        return Err(Error::Domain("instance has negated literals".into()));
    }
    let sep = separate::positive_separating_quadratic(p)?.ok_or_else(|| {
        Error::Precondition("P supports a uniformly positively correlated measure; no separator exists".into())
    })?;
    let q = sep.quadratic;
    let (hq, sol) = solve_sdp(inst, &q, p, opts)?;
    let s = 1.0 - sep.r_star.abs();
    let m = inst.m();
    let (b, bound) = match opts.b {
        Some(_) => pick_b(opts, sol.value, hq.d, m)?,
        None => B_GRID
            .iter()
            .map(|&b| (b, s * s * rounding_bound(b, sol.value - sep.baseline * m as f64, hq.d, m)))
            .fold((B_GRID[0], f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best }),
    };
    let params = RoundingParams::new(b, opts.trials, opts.seed)?;
    let out = biased_round(&sol.gram, sep.r_star, inst, &q, &params)?;
    Ok(SolveReport {
        separator: q.to_text(),
        baseline: sep.baseline,
        r_star: Some(sep.r_star),
        sdp_value: sol.value,
        sdp_upper_bound: sol.upper_bound,
        sdp_iterations: sol.iterations,
        c: hq.c,
        cap_c: hq.cap_c,
        d: hq.d,
        b,
        bound,
        value: out.value,
        assignment: out.assignment,
        trial_values: out.trial_values,
    })
}

/// Unit vectors `v_0, v_1, v_2` with `⟨v_1, v_2⟩ = rho` and `v_0 ⟂ v_1, v_2`.
pub fn pair_with_inner_product(rho: f64) -> GramVectors {
    let t = (1.0 - rho * rho).max(0.0).sqrt();
    GramVectors::from_columns(DMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, rho, t]))
}

/// Monte Carlo estimate of `E[x_1 x_2]` over `rounds` rounds, with its
/// standard error.
pub fn empirical_pair_moment(vecs: &GramVectors, b: f64, rounds: usize, seed: u64) -> (f64, f64) {
    const BATCH: usize = 1 << 14;
    let batches = rounds.div_ceil(BATCH);
    let (sum, count) = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = trial_rng(seed, batch);
            let len = BATCH.min(rounds - batch * BATCH);
            let mut s = 0.0;
            for _ in 0..len {
                let x = round_once(vecs, b, &mut rng);
                s += (x[0] * x[1]) as f64;
            }
            (s, len)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = sum / count as f64;
    // x_1 x_2 is ±1
    let var = (1.0 - mean * mean).max(0.0);
    (mean, (var / count as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::predicates;

    #[test]
    fn large_b_is_uniform() {
        let vecs = pair_with_inner_product(0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let mut ones = 0;
        for _ in 0..n {
            let x = round_once(&vecs, 1e9, &mut rng);
            ones += x.iter().filter(|&&v| v == 1).count();
        }
        let frac = ones as f64 / (2 * n) as f64;
        assert!((frac - 0.5).abs() < 0.01);
    }

    #[test]
    fn biased_round_reduces_at_zero_bias() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.3, 0.2, 1.0, 0.5, -0.3, 0.5, 1.0]);
        let vecs = GramVectors::factor(&g).unwrap();
        for seed in 0..200 {
            let a = round_once(&vecs, 2.0, &mut trial_rng(seed, 0));
            let b = round_once_biased(&vecs, 0.0, 2.0, &mut trial_rng(seed, 0));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn factor_rejects_non_psd() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GramVectors::factor(&g), Err(Error::Domain(_))));
    }

    #[test]
    fn moment_law_rank_one() {
        let vecs = pair_with_inner_product(1.0);
        let b = 2.0;
        let (mean, se) = empirical_pair_moment(&vecs, b, 200_000, 3);
        assert!((mean - 1.0 / (b * b)).abs() <= MOMENT_LAW_B * (-b * b / 2.0).exp() + 4.0 * se);
    }

    #[test]
    fn seeded_rounding_is_deterministic() {
        let glst = predicates::glst();
        let mu = Measure::uniform_on(4, &glst.accepted()).unwrap();
        let inst = instance::planted_instance(&mu, 16, 80, 0.0, 2).unwrap();
        let opts = SolveOptions { trials: 8, ..Default::default() };
        let a = solve_useful(&inst, &glst, &opts).unwrap();
        let b = solve_useful(&inst, &glst, &opts).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.trial_values, b.trial_values);
    }

    #[test]
    fn preconditions() {
        let xor3 = predicates::xor(3);
        let inst = instance::random_instance(3, 10, 20, true, 0).unwrap();
        assert!(matches!(solve_useful(&inst, &xor3, &SolveOptions::default()), Err(Error::Precondition(_))));
        let neg = instance::random_instance(2, 10, 20, true, 0).unwrap();
        assert!(matches!(
            positive_solve(&neg, &predicates::neq2(), &SolveOptions::default()),
            Err(Error::Domain(_))
        ));
        let pos = instance::random_instance(2, 10, 20, false, 0).unwrap();
        assert!(matches!(
            positive_solve(&pos, &predicates::eq2(), &SolveOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
