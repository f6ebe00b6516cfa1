use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use maxcsp_core::dictator::{self, TestConfig, TestFunction};
use maxcsp_core::instance::{self, brute_force};
use maxcsp_core::measure::{self, Measure, PairwiseSearch};
use maxcsp_core::report::{self, ClassifyOptions};
use maxcsp_core::rounding::{self, SolveOptions};
use maxcsp_core::sdp::SdpOptions;
use maxcsp_core::separate::{self, SeparatorMethod};
use maxcsp_core::{predicates, quadsign, Error, Instance, Predicate};

#[derive(Parser)]
#[command(name = "maxcsp", version, about = "Usefulness classification and solvers for Max-CSP predicates")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Verification tolerance for separators and the SDP gap target.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Rounding trials per solve.
    #[arg(long, global = true, default_value_t = rounding::DEFAULT_TRIALS)]
    trials: usize,
    /// Work in the setting without negated literals.
    #[arg(long, global = true)]
    no_negations: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Full usefulness report for one predicate.
    Classify {
        /// Predicate name, 0/1 table, accepted-point list, or a file holding one.
        predicate: String,
        /// Check the resistance conditions for P against itself under this measure file.
        #[arg(long)]
        resistance: Option<PathBuf>,
    },
    /// Counts over every predicate of one arity.
    Census {
        arity: usize,
        /// Also count orbits under variable permutations and negations.
        #[arg(long)]
        symmetry: bool,
    },
    /// Separating quadratic, or the witness showing none exists.
    Separate {
        predicate: String,
        #[arg(long, value_enum, default_value_t = Method::Lp)]
        method: Method,
    },
    /// Planted or uniformly random instance in text form.
    Gen {
        predicate: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Fraction of corrupted constraints.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Planting measure file; uniform on accepted strings by default.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Uniformly random constraints instead of a planted instance.
        #[arg(long)]
        random: bool,
    },
    /// SDP and rounding on an instance.
    Solve {
        predicate: String,
        instance: PathBuf,
        /// Fixed clipping radius.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Exact optimum of Max-P on a small instance.
    Bruteforce { predicate: String, instance: PathBuf },
    /// Monte Carlo run of the noisy dictatorship test.
    DictTest {
        predicate: String,
        /// dictator:I, majority, parity:MASK, random-folded:SEED.
        #[arg(long, default_value = "dictator:1")]
        function: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        coords: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Test measure file; by default a measure on accepted strings with equal biases.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Exact check of the sign-of-quadratic resistant predicate on 12 variables.
    VerifyQuadsign,
    /// The OR/XOR and EQ/NEQ gadget instances with their optima.
    ItGadgets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lp,
    MinNorm,
}

enum Failure {
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_predicate(arg: &str) -> Result<Predicate, Failure> {
    let path = Path::new(arg);
    let text = if path.is_file() { read(path)? } else { arg.to_string() };
    Ok(predicates::parse_any(&text)?)
}

fn load_instance(path: &Path, p: &Predicate) -> Result<Instance, Failure> {
    let inst = Instance::parse(&read(path)?)?;
    if inst.k() != p.arity() {
        return Err(Failure::Input(format!("instance arity {} differs from predicate arity {}", inst.k(), p.arity())));
    }
    Ok(inst)
}

fn load_measure(path: &Path) -> Result<Measure, Failure> {
    Ok(Measure::parse(&read(path)?)?)
}

fn emit<T: Serialize>(cli: &Cli, value: &T) -> String {
    match cli.format {
        Format::Json => serde_json::to_string_pretty(value).expect("serializable output") + "\n",
        Format::Text => report::to_key_value(value),
    }
}

#[derive(Serialize)]
struct SeparateOutput {
    predicate: String,
    separable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    separator: Option<report::SeparatorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    positive_separator: Option<report::PositiveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(Serialize)]
struct BruteForceOutput {
    value: f64,
    assignment: String,
}

#[derive(Serialize)]
struct GadgetOutput {
    name: &'static str,
    instance: String,
    objectives: Vec<(&'static str, f64)>,
}

fn sdp_options(cli: &Cli) -> SdpOptions {
    let mut sdp = SdpOptions { seed: cli.seed, ..SdpOptions::default() };
    if let Some(t) = cli.tolerance {
        sdp.tol = t;
    }
    sdp
}

fn assignment_string(a: &[i8]) -> String {
    a.iter().map(|&v| if v < 0 { '-' } else { '+' }).collect()
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Classify { predicate, resistance } => {
            let p = load_predicate(predicate)?;
            let mut opts = ClassifyOptions::default();
            if let Some(path) = resistance {
                opts.resistance = Some((p.as_poly(), load_measure(path)?));
            }
            let rep = report::classify_with(&p, &opts)?;
            Ok(emit(cli, &rep))
        }
        Command::Census { arity, symmetry } => Ok(emit(cli, &report::census(*arity, *symmetry)?)),
        Command::Separate { predicate, method } => {
            let p = load_predicate(predicate)?;
            let tol = cli.tolerance.unwrap_or(separate::MARGIN_TOL);
            let mut out = SeparateOutput {
                predicate: p.table_string(),
                separable: false,
                separator: None,
                positive_separator: None,
                witness: None,
            };
            if cli.no_negations {
                match separate::positive_separating_quadratic(&p)? {
                    Some(sep) => {
                        separate::verify_positive_separator(&p, &sep)?;
                        out.separable = true;
                        out.positive_separator = Some(report::PositiveSummary::from(&sep));
                    }
                    None => {
                        let w = measure::find_uniformly_positively_correlated(&p)?
                            .ok_or_else(|| Failure::Solver("neither separator nor witness".into()))?;
                        out.witness = Some(w.measure.exactify().to_text());
                    }
                }
            } else {
                let method = match method {
                    Method::Lp => SeparatorMethod::MarginLp,
                    Method::MinNorm => SeparatorMethod::MinNorm,
                };
                match separate::separating_quadratic_with(&p, method)? {
                    Some(sep) => {
                        let margin = separate::verify_separator(&p, &sep.quadratic, tol)?;
                        out.separable = true;
                        out.separator = Some(report::SeparatorSummary {
                            terms: report::quadratic_terms(&sep.quadratic),
                            margin,
                            exact: sep.exact,
                        });
                    }
                    None => {
                        if let PairwiseSearch::Witness(mu) = measure::find_pairwise_independent(&p)? {
                            out.witness = Some(mu.exactify().to_text());
                        }
                    }
                }
            }
            Ok(emit(cli, &out))
        }
        Command::Gen { predicate, n, m, eps, measure: mpath, random } => {
            let p = load_predicate(predicate)?;
            let k = p.arity();
            if *random {
                let inst = instance::random_instance(k, *n, *m, !cli.no_negations, cli.seed)?;
                return Ok(inst.to_text());
            }
            let mu = match mpath {
                Some(path) => load_measure(path)?,
                None => Measure::uniform_on(k, &p.accepted())?,
            };
            if mu.arity() != k || !mu.is_supported_on(&p) {
                return Err(Failure::Input("planting measure must be supported on accepted strings".into()));
            }
            let (inst, planted) = if cli.no_negations {
                instance::planted_positive_instance(&mu, *n, *m, *eps, cli.seed)?
            } else {
                instance::planted_instance_hidden(&mu, *n, *m, *eps, cli.seed)?
            };
            Ok(format!("# planted {}\n{}", assignment_string(&planted), inst.to_text()))
        }
        Command::Solve { predicate, instance: path, b } => {
            let p = load_predicate(predicate)?;
            let inst = load_instance(path, &p)?;
            let opts = SolveOptions { trials: cli.trials, seed: cli.seed, sdp: sdp_options(cli), b: *b };
            let rep = if cli.no_negations {
                rounding::positive_solve(&inst, &p, &opts)?
            } else {
                rounding::solve_useful(&inst, &p, &opts)?
            };
            Ok(emit(cli, &rep))
        }
        Command::Bruteforce { predicate, instance: path } => {
            let p = load_predicate(predicate)?;
            let inst = load_instance(path, &p)?;
            let (value, a) = brute_force(&p.as_poly(), &inst)?;
            Ok(emit(cli, &BruteForceOutput { value, assignment: assignment_string(&a) }))
        }
        Command::DictTest { predicate, function, eps, coords, samples, measure: mpath } => {
            let p = load_predicate(predicate)?;
            let (mu, bias) = match mpath {
                Some(path) => {
                    let mu = load_measure(path)?;
                    let b = mu.moment(1);
                    (mu, b)
                }
                None => dictator::default_measure(&p)?,
            };
            if !mu.is_supported_on(&p) {
                return Err(Failure::Input("test measure must be supported on accepted strings".into()));
            }
            let f = parse_function(function)?;
            let cfg = TestConfig::new(mu, bias, *eps, *coords, *samples, cli.seed)?;
            let r = dictator::run_test(&p.as_poly(), &f, &cfg)?;
            Ok(emit(cli, &r))
        }
        Command::VerifyQuadsign => {
            let r = quadsign::verify_quadsign();
            let out = emit(cli, &r);
            if r.pass {
                Ok(out)
            } else {
                print!("{out}");
                Err(Failure::Solver("sign-of-quadratic verification failed".into()))
            }
        }
        Command::ItGadgets => {
            let or_xor = instance::or_xor_gadget();
            let k4 = instance::complete_graph_gadget(4)?;
            let opt = |p: Predicate, inst: &Instance| brute_force(&p.as_poly(), inst).map(|r| r.0);
            let out = vec![
                GadgetOutput {
                    name: "or-xor",
                    instance: or_xor.to_text(),
                    objectives: vec![
                        ("or3", opt(predicates::or(3), &or_xor)?),
                        ("xor3", opt(predicates::xor(3), &or_xor)?),
                    ],
                },
                GadgetOutput {
                    name: "eq-neq-k4",
                    instance: k4.to_text(),
                    objectives: vec![("eq2", opt(predicates::eq2(), &k4)?), ("neq2", opt(predicates::neq2(), &k4)?)],
                },
            ];
            Ok(emit(cli, &out))
        }
    }
}

fn parse_function(spec: &str) -> Result<TestFunction, Failure> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| s.parse::<u64>().map_err(|_| Failure::Input(format!("bad function argument {s:?}")));
    match name {
        "dictator" => {
            let i = num(arg)? as usize;
            if i == 0 {
                return Err(Failure::Input("dictator coordinates are 1-based".into()));
            }
            Ok(TestFunction::Dictator(i - 1))
        }
        "majority" => Ok(TestFunction::Majority),
        "parity" => Ok(TestFunction::Parity(num(arg)? as u32)),
        "random-folded" => Ok(TestFunction::RandomFolded(num(arg)?)),
        _ => Err(Failure::Input(format!("unknown test function {spec:?}"))),
    }
}
