//! Single-predicate classification reports and the exhaustive census.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exact;
use crate::fourier::{self, is_fully_approximable, MultilinearPoly, Predicate};
use crate::measure::{self, ConditionReport, Measure, PairwiseSearch};
use crate::separate::{self, lift_dim, Quadratic};

pub const MAX_CENSUS_ARITY: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct PredicateSummary {
    pub arity: usize,
    pub table: String,
    pub accepted: usize,
    /// `E_P`, the acceptance density.
    pub density: f64,
    pub degree: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Flags {
    pub fully_approximable: bool,
    pub pi_support: bool,
    pub upc_support: bool,
    pub useless_under_ugc: bool,
    pub positively_useless_under_ugc: bool,
    pub accepts_all: bool,
    pub accepts_none: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightEntry {
    pub point: String,
    pub weight: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct UpcSummary {
    pub bias: f64,
    pub correlation: f64,
    pub weights: Vec<WeightEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Term {
    pub vars: Vec<usize>,
    pub coefficient: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparatorSummary {
    pub terms: Vec<Term>,
    pub margin: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositiveSummary {
    pub terms: Vec<Term>,
    pub r_star: f64,
    pub baseline: f64,
    pub margin: f64,
    pub stretch: f64,
    pub exact: bool,
}

impl From<&separate::PositiveSeparator> for PositiveSummary {
    fn from(sep: &separate::PositiveSeparator) -> Self {
        PositiveSummary {
            terms: quadratic_terms(&sep.quadratic),
            r_star: sep.r_star,
            baseline: sep.baseline,
            margin: sep.margin,
            stretch: sep.stretch,
            exact: sep.exact,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub predicate: PredicateSummary,
    pub flags: Flags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_witness: Option<Vec<WeightEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upc_witness: Option<UpcSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separator: Option<SeparatorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_separator: Option<PositiveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resistance: Option<ConditionReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        to_key_value(self)
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Also search for the no-negation separator when no UPC witness exists.
    pub positive_separator: bool,
    /// Objective and measure for the resistance-condition check.
    pub resistance: Option<(MultilinearPoly, Measure)>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { positive_separator: true, resistance: None }
    }
}

fn weight_entries(mu: &Measure) -> Vec<WeightEntry> {
    let k = mu.arity();
    let exact = mu.exact_weights();
    mu.support()
        .into_iter()
        .map(|i| WeightEntry {
            point: fourier::point_string(k, i),
            weight: match exact {
                Some(w) => exact::format_rational(&w[i]),
                None => format!("{}", mu.weights()[i]),
            },
        })
        .collect()
}

pub fn quadratic_terms(q: &Quadratic) -> Vec<Term> {
    let k = q.arity();
    let exact = q.exact_coeffs();
    let mut out = Vec::new();
    if q.constant() != 0.0 {
        let coefficient = match exact {
            Some((c, _)) => exact::format_rational(c),
            None => format!("{}", q.constant()),
        };
        out.push(Term { vars: vec![], coefficient });
    }
    for s in 0..lift_dim(k) {
        let v = q.lift_coeffs()[s];
        if v == 0.0 {
            continue;
        }
        let coefficient = match exact {
            Some((_, c)) => exact::format_rational(&c[s]),
            None => format!("{v}"),
        };
        out.push(Term { vars: fourier::subset_indices(measure::lift_mask(k, s)), coefficient });
    }
    out
}

pub fn classify(p: &Predicate) -> Result<Report> {
    classify_with(p, &ClassifyOptions::default())
}

/// Runs every test on `p`; witnesses and separators are re-verified before
/// they are reported.
pub fn classify_with(p: &Predicate, opts: &ClassifyOptions) -> Result<Report> {
    let (fully_approximable, degree) = is_fully_approximable(p);
    let predicate = PredicateSummary {
        arity: p.arity(),
        table: p.table_string(),
        accepted: p.num_accepted(),
        density: p.density(),
        degree,
    };
    let resistance = match &opts.resistance {
        Some((q, mu)) => Some(measure::check_resistance(p, q, mu)?),
        None => None,
    };
    if p.accepts_none() {
        let flags = Flags {
            fully_approximable,
            pi_support: false,
            upc_support: false,
            useless_under_ugc: false,
            positively_useless_under_ugc: false,
            accepts_all: false,
            accepts_none: true,
        };
        return Ok(Report {
            predicate,
            flags,
            pi_witness: None,
            upc_witness: None,
            separator: None,
            positive_separator: None,
            resistance,
        });
    }

    let pi = measure::find_pairwise_independent(p)?;
    let pi_witness = match &pi {
        PairwiseSearch::Witness(mu) => {
            let mu = mu.exactify();
            measure::verify_pairwise_independent(p, &mu)?;
            Some(weight_entries(&mu))
        }
        PairwiseSearch::Separated { .. } => None,
    };
    let separator = match separate::separating_quadratic(p)? {
        Some(sep) => {
            let margin = separate::verify_separator(p, &sep.quadratic, separate::MARGIN_TOL)?;
            Some(SeparatorSummary { terms: quadratic_terms(&sep.quadratic), margin, exact: sep.exact })
        }
        None => None,
    };
    if pi_witness.is_some() == separator.is_some() {
        return Err(Error::Consistency("exactly one of witness and separator must exist".into()));
    }

    let upc = measure::find_uniformly_positively_correlated(p)?;
    let upc_witness = match &upc {
        Some(w) => {
            measure::verify_upc(p, w)?;
            Some(UpcSummary {
                bias: w.bias,
                correlation: w.correlation,
                weights: weight_entries(&w.measure.exactify()),
            })
        }
        None => None,
    };
    let positive_separator = if upc.is_none() && opts.positive_separator {
        separate::positive_separating_quadratic(p)?
            .map(|sep| -> Result<PositiveSummary> {
                separate::verify_positive_separator(p, &sep)?;
                Ok(PositiveSummary::from(&sep))
            })
            .transpose()?
    } else {
        None
    };

    let pi_support = pi_witness.is_some();
    let upc_support = upc_witness.is_some();
    Ok(Report {
        predicate,
        flags: Flags {
            fully_approximable,
            pi_support,
            upc_support,
            useless_under_ugc: pi_support,
            positively_useless_under_ugc: upc_support,
            accepts_all: p.accepts_all(),
            accepts_none: false,
        },
        pi_witness,
        upc_witness,
        separator,
        positive_separator,
        resistance,
    })
}

/// Flattens any serializable value into sorted-by-structure `key: value` lines.
pub fn to_key_value<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    let mut out = String::new();
    flatten("", &v, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&join(k), child, out);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), child, out);
            }
        }
        _ => out.push_str(&format!("{prefix}: {}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("; "),
        other => other.to_string(),
    }
}

/// Per-flag counts over every predicate of one arity.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CensusTable {
    pub arity: usize,
    pub total: u64,
    pub pi_feasible: u64,
    pub upc_feasible: u64,
    pub fully_approximable: u64,
    pub accepts_all: u64,
    pub accepts_none: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryCounts>,
}

/// Orbit counts under variable permutations combined with variable negations.
/// Only flags invariant under that group are counted.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SymmetryCounts {
    pub group: String,
    pub classes: u64,
    pub pi_feasible: u64,
    pub fully_approximable: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Row {
    pi: bool,
    upc: bool,
    fa: bool,
    all: bool,
    none: bool,
}

fn census_row(p: &Predicate) -> Result<Row> {
    let (fa, _) = is_fully_approximable(p);
    if p.accepts_none() {
        return Ok(Row { fa, none: true, ..Row::default() });
    }
    let pi = measure::find_pairwise_independent(p)?.witness().is_some();
    let upc = pi || measure::find_uniformly_positively_correlated(p)?.is_some();
    Ok(Row { pi, upc, fa, all: p.accepts_all(), none: false })
}

/// Exhaustive census over all `2^{2^k}` tables; `symmetry` adds orbit counts.
pub fn census(k: usize, symmetry: bool) -> Result<CensusTable> {
    if k == 0 || k > MAX_CENSUS_ARITY {
        return Err(Error::Size(format!("census arity {k} outside 1..={MAX_CENSUS_ARITY}")));
    }
    let total = 1u64 << (1 << k);
    let rows: Vec<Row> = (0..total)
        .into_par_iter()
        .map(|bits| census_row(&Predicate::from_bits(k, bits)?))
        .collect::<Result<_>>()?;
    let count = |f: fn(&Row) -> bool| rows.iter().filter(|r| f(r)).count() as u64;
    let symmetry = symmetry.then(|| {
        let mut seen = HashSet::new();
        let (mut pi, mut fa) = (0, 0);
        for bits in 0..total {
            let rep = canonical_table(k, bits);
            if seen.insert(rep) {
                let r = &rows[rep as usize];
                pi += r.pi as u64;
                fa += r.fa as u64;
            }
        }
        SymmetryCounts {
            group: "variable permutations x variable negations".into(),
            classes: seen.len() as u64,
            pi_feasible: pi,
            fully_approximable: fa,
        }
    });
    Ok(CensusTable {
        arity: k,
        total,
        pi_feasible: count(|r| r.pi),
        upc_feasible: count(|r| r.upc),
        fully_approximable: count(|r| r.fa),
        accepts_all: count(|r| r.all),
        accepts_none: count(|r| r.none),
        symmetry,
    })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest table bit-pattern in the orbit of `bits`.
pub fn canonical_table(k: usize, bits: u64) -> u64 {
    let n = 1usize << k;
    let mut best = u64::MAX;
    for perm in permutations(k) {
        for flip in 0..n {
            let mut img = 0u64;
            for x in 0..n {
                if bits >> x & 1 == 1 {
                    let mut y = 0;
                    for (i, &pi) in perm.iter().enumerate() {
                        y |= (x >> i & 1) << pi;
                    }
                    img |= 1 << (y ^ flip);
                }
            }
            best = best.min(img);
        }
    }
    best
}
