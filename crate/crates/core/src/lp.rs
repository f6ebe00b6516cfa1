//! Dense two-phase simplex for the small LPs behind the feasibility tests and
//! separator constructions.
//!
//! Problems have the form `maximize cᵀx  s.t.  A x {≤,=,≥} b,  x ≥ 0`.
//! Infeasibility is reported with a Farkas certificate `y` satisfying
//! `y_i ≥ 0` on `≤` rows, `y_i ≤ 0` on `≥` rows, `Aᵀy ≥ 0` and `bᵀy < 0`;
//! every certificate and every solution is re-checked before it is returned.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Maximized; empty means pure feasibility.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
    /// `bᵀy`, strictly negative.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub enum LpVerdict {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
}

impl LpVerdict {
    pub fn solution(self) -> Option<LpSolution> {
        match self {
            LpVerdict::Optimal(s) => Some(s),
            LpVerdict::Infeasible(_) => None,
        }
    }
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const CHECK_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem { num_vars, objective: Vec::new(), rows: Vec::new() }
    }

    pub fn maximize(mut self, objective: Vec<f64>) -> Self {
        self.objective = objective;
        self
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row { coeffs, sense, rhs });
    }

    fn row_activity(&self, row: &Row, x: &[f64]) -> (f64, f64) {
        let mut act = 0.0;
        let mut mag = row.rhs.abs();
        for (a, v) in row.coeffs.iter().zip(x) {
            act += a * v;
            mag += (a * v).abs();
        }
        (act, mag)
    }

    /// Checks a primal point against every constraint (relative tolerance `1e-9`).
    pub fn check_solution(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::solver("lp", "solution has wrong length"));
        }
        if let Some((j, v)) = x.iter().enumerate().find(|(_, &v)| v < -CHECK_TOL) {
            return Err(Error::solver("lp", format!("x[{j}] = {v} is negative")));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let (act, mag) = self.row_activity(row, x);
            let tol = CHECK_TOL * (1.0 + mag);
            let ok = match row.sense {
                Sense::Le => act <= row.rhs + tol,
                Sense::Ge => act >= row.rhs - tol,
                Sense::Eq => (act - row.rhs).abs() <= tol,
            };
            if !ok {
                return Err(Error::solver(
                    "lp",
                    format!("row {i} violated: activity {act} vs rhs {} ({:?})", row.rhs, row.sense),
                ));
            }
        }
        Ok(())
    }

    /// Checks the Farkas conditions for `y`; returns `bᵀy` on success.
    pub fn check_certificate(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.rows.len() {
            return Err(Error::solver("lp", "certificate has wrong length"));
        }
        let scale = 1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (row, &yi) in self.rows.iter().zip(y) {
            let bad = match row.sense {
                Sense::Le => yi < -CHECK_TOL * scale,
                Sense::Ge => yi > CHECK_TOL * scale,
                Sense::Eq => false,
            };
            if bad {
                return Err(Error::solver("lp", "certificate sign condition violated"));
            }
        }
        for j in 0..self.num_vars {
            let mut s = 0.0;
            let mut mag = 0.0;
            for (row, &yi) in self.rows.iter().zip(y) {
                s += row.coeffs[j] * yi;
                mag += (row.coeffs[j] * yi).abs();
            }
            if s < -CHECK_TOL * (1.0 + mag) {
                return Err(Error::solver("lp", format!("certificate column {j} has Aᵀy = {s}")));
            }
        }
        let value: f64 = self.rows.iter().zip(y).map(|(r, &yi)| r.rhs * yi).sum();
        if value >= -CHECK_TOL * scale {
            return Err(Error::solver("lp", format!("certificate bᵀy = {value} is not negative")));
        }
        Ok(value)
    }

    pub fn solve(&self) -> Result<LpVerdict> {
        let mut tab = Tableau::build(self);
        tab.phase_one()?;
        let infeas = tab.objective_value();
        if infeas > 1e-9 * (1.0 + tab.rhs_scale) {
            let y = tab.farkas(self);
            let value = self.check_certificate(&y)?;
            return Ok(LpVerdict::Infeasible(FarkasCertificate { y, value }));
        }
        tab.phase_two(self)?;
        let x = tab.primal(self.num_vars);
        self.check_solution(&x)?;
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpVerdict::Optimal(LpSolution { x, objective }))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ColKind {
    Structural,
    Slack(usize),
    Surplus(usize),
    Artificial(usize),
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// row-major, `cols + 1` entries per row (last is rhs)
    data: Vec<f64>,
    kinds: Vec<ColKind>,
    basis: Vec<usize>,
    costs: Vec<f64>,
    reduced: Vec<f64>,
    row_sign: Vec<f64>,
    rhs_scale: f64,
    max_pivots: usize,
}

impl Tableau {
    fn build(lp: &LpProblem) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars;
        let mut kinds: Vec<ColKind> = vec![ColKind::Structural; n];
        let mut row_sign = vec![1.0; m];
        let mut senses = Vec::with_capacity(m);
        for (i, row) in lp.rows.iter().enumerate() {
            let mut sense = row.sense;
            if row.rhs < 0.0 {
                row_sign[i] = -1.0;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            senses.push(sense);
        }
        for (i, s) in senses.iter().enumerate() {
            match s {
                Sense::Le => kinds.push(ColKind::Slack(i)),
                Sense::Ge => kinds.push(ColKind::Surplus(i)),
                Sense::Eq => {}
            }
        }
        for (i, s) in senses.iter().enumerate() {
            if *s != Sense::Le {
                kinds.push(ColKind::Artificial(i));
            }
        }
        let cols = kinds.len();
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![usize::MAX; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let base = i * width;
            for j in 0..n {
                data[base + j] = row_sign[i] * row.coeffs[j];
            }
            data[base + cols] = row_sign[i] * row.rhs;
        }
        for (j, kind) in kinds.iter().enumerate() {
            match *kind {
                ColKind::Slack(i) => {
                    data[i * width + j] = 1.0;
                    basis[i] = j;
                }
                ColKind::Surplus(i) => data[i * width + j] = -1.0,
                ColKind::Artificial(i) => {
                    data[i * width + j] = 1.0;
                    basis[i] = j;
                }
                ColKind::Structural => {}
            }
        }
        let rhs_scale = lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        Tableau {
            rows: m,
            cols,
            data,
            kinds,
            basis,
            costs: vec![0.0; cols],
            reduced: vec![0.0; cols],
            row_sign,
            rhs_scale,
            max_pivots: 50 * (m + cols) + 1000,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn set_costs(&mut self, costs: Vec<f64>) {
        self.costs = costs;
        for j in 0..self.cols {
            let mut d = self.costs[j];
            for i in 0..self.rows {
                d -= self.costs[self.basis[i]] * self.at(i, j);
            }
            self.reduced[j] = d;
        }
    }

    fn objective_value(&self) -> f64 {
        (0..self.rows).map(|i| self.costs[self.basis[i]] * self.rhs(i)).sum()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let piv = self.at(r, c);
        let (before, rest) = self.data.split_at_mut(r * width);
        let (prow, after) = rest.split_at_mut(width);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for chunk in before.chunks_mut(width).chain(after.chunks_mut(width)) {
            let f = chunk[c];
            if f != 0.0 {
                for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                chunk[c] = 0.0;
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(prow.iter()) {
                *d -= f * p;
            }
            self.reduced[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimizes the current costs over allowed columns: Dantzig's rule,
    /// switching to Bland's rule during long degenerate stretches.
    fn run(&mut self, allowed: impl Fn(ColKind) -> bool) -> Result<()> {
        let mut degenerate = 0usize;
        for _ in 0..self.max_pivots {
            let candidates = (0..self.cols).filter(|&j| allowed(self.kinds[j]) && self.reduced[j] < -COST_TOL);
            let entering = if degenerate > DEGENERATE_STREAK {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, ratio)) => {
                    if ratio <= 1e-14 {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                    self.pivot(r, c)
                }
                None => return Err(Error::solver("lp", "objective is unbounded")),
            }
        }
        Err(Error::solver("lp", "pivot limit exceeded (cycling guard)"))
    }

    fn phase_one(&mut self) -> Result<()> {
        let costs = self
            .kinds
            .iter()
            .map(|k| if matches!(k, ColKind::Artificial(_)) { 1.0 } else { 0.0 })
            .collect();
        self.set_costs(costs);
        self.run(|_| true)
    }

    /// Dual values of phase one, mapped back to the caller's row orientation.
    fn farkas(&self, lp: &LpProblem) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (j, kind) in self.kinds.iter().enumerate() {
            // reduced cost of a column with entries e_i * s equals cost - s * dual_i
            match *kind {
                ColKind::Slack(i) => y[i] = -self.reduced[j],
                ColKind::Surplus(i) => y[i] = self.reduced[j],
                ColKind::Artificial(i) => y[i] = 1.0 - self.reduced[j],
                ColKind::Structural => {}
            }
        }
        // phase-one duals certify min Σ art > 0; their negation is a Farkas ray
        y.iter()
            .zip(&self.row_sign)
            .take(lp.rows.len())
            .map(|(&yi, &s)| -yi * s)
            .collect()
    }

    fn phase_two(&mut self, lp: &LpProblem) -> Result<()> {
        // drive zero-valued artificials out of the basis where possible
        for i in 0..self.rows {
            if matches!(self.kinds[self.basis[i]], ColKind::Artificial(_)) {
                let col = (0..self.cols).find(|&j| {
                    !matches!(self.kinds[j], ColKind::Artificial(_)) && self.at(i, j).abs() > 1e-9
                });
                if let Some(c) = col {
                    self.pivot(i, c);
                }
            }
        }
        let mut costs = vec![0.0; self.cols];
        for (j, c) in lp.objective.iter().enumerate() {
            costs[j] = -c;
        }
        self.set_costs(costs);
        self.run(|k| !matches!(k, ColKind::Artificial(_)))
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 0..self.rows {
            let b = self.basis[i];
            if b < n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_single_variable() {
        let mut lp = LpProblem::new(1).maximize(vec![1.0]);
        lp.push(vec![1.0], Sense::Le, 3.0);
        let sol = lp.solve().unwrap().solution().unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_senses() {
        // max x + y s.t. x + 2y <= 4, x - y >= -1, x = 1.5 ... optimum y = 1.25
        let mut lp = LpProblem::new(2).maximize(vec![1.0, 1.0]);
        lp.push(vec![1.0, 2.0], Sense::Le, 4.0);
        lp.push(vec![1.0, -1.0], Sense::Ge, -1.0);
        lp.push(vec![1.0, 0.0], Sense::Eq, 1.5);
        let sol = lp.solve().unwrap().solution().unwrap();
        assert!((sol.x[0] - 1.5).abs() < 1e-12);
        assert!((sol.x[1] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_gives_verified_certificate() {
        // x + y = 1, x + y >= 2
        let mut lp = LpProblem::new(2);
        lp.push(vec![1.0, 1.0], Sense::Eq, 1.0);
        lp.push(vec![1.0, 1.0], Sense::Ge, 2.0);
        match lp.solve().unwrap() {
            LpVerdict::Infeasible(cert) => {
                assert!(cert.value < 0.0);
                lp.check_certificate(&cert.y).unwrap();
            }
            LpVerdict::Optimal(_) => panic!("expected infeasible"),
        }
    }

    #[test]
    fn infeasible_with_negative_rhs() {
        // -x >= 1 with x >= 0
        let mut lp = LpProblem::new(1);
        lp.push(vec![-1.0], Sense::Ge, 1.0);
        assert!(matches!(lp.solve().unwrap(), LpVerdict::Infeasible(_)));
        let mut lp = LpProblem::new(1);
        lp.push(vec![1.0], Sense::Le, -0.5);
        assert!(matches!(lp.solve().unwrap(), LpVerdict::Infeasible(_)));
    }

    #[test]
    fn unbounded_is_an_error() {
        let mut lp = LpProblem::new(2).maximize(vec![1.0, 0.0]);
        lp.push(vec![1.0, -1.0], Sense::Le, 1.0);
        assert!(matches!(lp.solve(), Err(Error::Solver { .. })));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LpProblem::new(3).maximize(vec![0.0, 0.0, 1.0]);
        lp.push(vec![1.0, 1.0, 1.0], Sense::Eq, 1.0);
        lp.push(vec![2.0, 2.0, 2.0], Sense::Eq, 2.0);
        lp.push(vec![1.0, -1.0, 0.0], Sense::Eq, 0.0);
        let sol = lp.solve().unwrap().solution().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling LP; Bland's rule must terminate.
        let mut lp = LpProblem::new(4).maximize(vec![0.75, -150.0, 0.02, -6.0]);
        lp.push(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0);
        lp.push(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0);
        lp.push(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        let sol = lp.solve().unwrap().solution().unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-9);
    }
}
