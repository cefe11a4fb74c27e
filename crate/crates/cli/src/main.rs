//! Command-line surface for the ensembles library: sampling streams,
//! pushing them through transformation pipelines, measuring cylinder
//! sets exactly, and running the verification and statistics suites.
//!
//! Every command is deterministic given its arguments. Randomness only
//! enters through an explicit `--seed`; there is no ambient entropy and
//! no default seed. Exit codes: 0 when the requested check passes (or
//! the command has nothing to judge), 1 when a check fails, 2 on any
//! error, including exhausted scan budgets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ensembles::io::{
    parse_symbol_string, read_stream_file, write_stream_file, write_symbols, MlTestSpec,
    PipelineConfig,
};
use ensembles::ratio::format_ratio;
use ensembles::space::{DiscreteDistribution, DistributionSpec, PrefixFreeSet, Symbol};
use ensembles::stats::{independence_check, lln_check};
use ensembles::transform::{sample_ensemble, EnsembleStream};
use ensembles::Error;

#[derive(Parser)]
#[command(
    name = "ensembles",
    version,
    about = "Sample, transform, measure, and verify symbol streams with exact arithmetic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a stream from a distribution spec and write one symbol
    /// per line.
    Gen {
        /// Distribution spec (JSON file).
        dist: PathBuf,
        /// Sampling seed; mandatory, never defaulted.
        #[arg(long)]
        seed: u64,
        /// Number of symbols to emit.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a transformation pipeline (JSON config) and write the
    /// resulting stream with a provenance header.
    Transform {
        /// Pipeline config (JSON file): distribution, seed, n, ops, out.
        pipeline: PathBuf,
        /// Replay this stream file as the source instead of sampling.
        #[arg(long, value_name = "FILE")]
        r#in: Option<PathBuf>,
        /// Output file; overrides the config's `out`; stdout when both
        /// are absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact masses of strings or of a prefix-free set, as JSON with
    /// "num/den" rationals.
    Measure {
        /// Distribution spec (JSON file).
        dist: PathBuf,
        /// File of strings (one per line, space-separated symbol codes):
        /// reports each string's cylinder mass and the open-set mass of
        /// the whole list.
        #[arg(long)]
        strings: Option<PathBuf>,
        /// File of strings forming a prefix-free set: reports the set's
        /// mass; rejects the file if any string prefixes another.
        #[arg(long = "prefix-free-set")]
        prefix_free_set: Option<PathBuf>,
    },
    /// Check a test definition's level masses against their 2^-n
    /// bounds; exit 1 if any level is too fat.
    VerifyTest {
        /// Distribution spec (JSON file).
        #[arg(long)]
        dist: PathBuf,
        /// Test definition (JSON file): explicit levels or a generator.
        #[arg(long)]
        test: PathBuf,
        /// Highest level to check; 0 means every defined level.
        #[arg(long, default_value_t = 0)]
        up_to: u64,
    },
    /// Frequency envelope check of a stream against a target law; exit
    /// 1 when some tracked symbol leaves its envelope.
    Lln {
        /// Target distribution spec (JSON file).
        #[arg(long)]
        dist: PathBuf,
        /// Stream file to check; mutually exclusive with --seed.
        #[arg(long, value_name = "FILE")]
        r#in: Option<PathBuf>,
        /// Sample the target distribution with this seed instead of
        /// reading a file.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of symbols to consume when sampling with --seed; a
        /// replayed file is always consumed whole.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Track the first K symbols of the alphabet.
        #[arg(long, default_value_t = 5)]
        symbols: u64,
        /// Envelope half-width in standard deviations.
        #[arg(long, default_value_t = 4.0)]
        k_sigma: f64,
    },
    /// Joint-law independence check across seeded streams of the same
    /// distribution; exit 1 when the joint strays from the product law.
    Independence {
        /// Distribution spec (JSON file).
        #[arg(long)]
        dist: PathBuf,
        /// Comma-separated seeds, one per stream; duplicates are allowed
        /// (and make a natural failing control).
        #[arg(long)]
        seeds: String,
        /// Number of joint draws.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Per-component rank cutoff: symbols beyond the first `top`
        /// ranks share one bin.
        #[arg(long, default_value_t = 4)]
        top: u64,
        /// Total-variation threshold.
        #[arg(long, default_value_t = 0.01)]
        tv: f64,
    },
}

/// Command outcome: `Pass` and `Fail` are judgements (exit 0/1), while
/// plain output-producing commands always pass.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn load_dist(path: &Path) -> Result<DiscreteDistribution, Error> {
    let text = std::fs::read_to_string(path)?;
    let spec: DistributionSpec = serde_json::from_str(&text)?;
    spec.build()
}

/// Lines of a strings file: `#` comments and blank lines ignored, each
/// remaining line one string as space-separated symbol codes.
fn read_strings_file(path: &Path) -> Result<Vec<ensembles::space::SymbolString>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_symbol_string(line)?);
    }
    Ok(out)
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Gen { dist, seed, n, out } => {
            let dist = load_dist(&dist)?;
            let alphabet = dist.alphabet().clone();
            let mut stream = sample_ensemble(dist, seed);
            let symbols = stream.take_prefix(n as usize)?;
            match out {
                Some(path) => write_stream_file(&alphabet, symbols.symbols(), None, path)?,
                None => {
                    let stdout = std::io::stdout();
                    write_symbols(&alphabet, symbols.symbols(), None, stdout.lock())?;
                }
            }
            Ok(Outcome::Pass)
        }

        Command::Transform {
            pipeline,
            r#in,
            out,
        } => {
            let config = PipelineConfig::from_file(&pipeline)?;
            let mut stream = match r#in {
                Some(source) => {
                    let dist = config.distribution.build()?;
                    let items = read_stream_file(dist.alphabet(), &source)?;
                    config.apply_ops(EnsembleStream::replay(dist.alphabet().clone(), items))?
                }
                None => config.build_stream()?,
            };
            let provenance = stream.provenance();
            let symbols = stream.take_prefix(config.n as usize)?;
            let alphabet = stream.alphabet().clone();
            let out = out.or_else(|| config.out.clone().map(PathBuf::from));
            match out {
                Some(path) => {
                    write_stream_file(&alphabet, symbols.symbols(), Some(&provenance), path)?
                }
                None => {
                    let stdout = std::io::stdout();
                    write_symbols(
                        &alphabet,
                        symbols.symbols(),
                        Some(&provenance),
                        stdout.lock(),
                    )?;
                }
            }
            Ok(Outcome::Pass)
        }

        Command::Measure {
            dist,
            strings,
            prefix_free_set,
        } => {
            let dist = load_dist(&dist)?;
            let report = match (strings, prefix_free_set) {
                (Some(path), None) => {
                    let strings = read_strings_file(&path)?;
                    let mut per_string = Vec::with_capacity(strings.len());
                    for s in &strings {
                        per_string.push(json!({
                            "string": s.to_string(),
                            "mass": format_ratio(&dist.string_mass(s)?),
                        }));
                    }
                    let rep = ensembles::measure::MeasureRepresentation::from_distribution(dist);
                    json!({
                        "strings": per_string,
                        "open_set_mass": format_ratio(&rep.open_set_measure(&strings)?),
                    })
                }
                (None, Some(path)) => {
                    let strings = read_strings_file(&path)?;
                    let set = PrefixFreeSet::new(strings)?;
                    let members: Vec<String> =
                        set.members().iter().map(|m| m.to_string()).collect();
                    json!({
                        "members": members,
                        "set_mass": format_ratio(&dist.set_mass(&set)?),
                    })
                }
                _ => {
                    return Err(Error::Config(
                        "pass exactly one of --strings or --prefix-free-set".to_string(),
                    ))
                }
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(Outcome::Pass)
        }

        Command::VerifyTest { dist, test, up_to } => {
            let dist = load_dist(&dist)?;
            let spec = MlTestSpec::from_file(&test)?;
            let test = spec.build(dist)?;
            let up_to = if up_to == 0 { test.max_level() } else { up_to };
            let verification = test.verify(up_to)?;
            let levels: Vec<serde_json::Value> = verification
                .levels
                .iter()
                .map(|l| {
                    json!({
                        "level": l.level,
                        "mass": format_ratio(&l.mass),
                        "bound": format_ratio(&l.bound),
                        "holds": l.holds,
                    })
                })
                .collect();
            let report = json!({
                "label": verification.label,
                "certified": verification.certified,
                "levels": levels,
                "all_hold": verification.all_hold,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if verification.all_hold {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }

        Command::Lln {
            dist,
            r#in,
            seed,
            n,
            symbols,
            k_sigma,
        } => {
            let dist = load_dist(&dist)?;
            let (mut stream, n) = match (r#in, seed) {
                (Some(path), None) => {
                    let items = read_stream_file(dist.alphabet(), &path)?;
                    let n = items.len() as u64;
                    (EnsembleStream::replay(dist.alphabet().clone(), items), n)
                }
                (None, Some(seed)) => (sample_ensemble(dist.clone(), seed), n),
                _ => {
                    return Err(Error::Config(
                        "pass exactly one of --in or --seed".to_string(),
                    ))
                }
            };
            let tracked: Vec<Symbol> = (0..symbols).map(|i| dist.alphabet().enumerate(i)).collect();
            let report = lln_check(&mut stream, &dist, n, &tracked, k_sigma)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }

        Command::Independence {
            dist,
            seeds,
            n,
            top,
            tv,
        } => {
            let dist = load_dist(&dist)?;
            let seeds = parse_seeds(&seeds)?;
            let mut streams: Vec<EnsembleStream> = seeds
                .iter()
                .map(|&s| sample_ensemble(dist.clone(), s))
                .collect();
            let targets: Vec<DiscreteDistribution> = seeds.iter().map(|_| dist.clone()).collect();
            let report = independence_check(&mut streams, &targets, n, top, tv)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let mut seeds = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        seeds.push(
            part.parse::<u64>()
                .map_err(|_| Error::Config(format!("bad seed {part:?} in --seeds")))?,
        );
    }
    if seeds.len() < 2 {
        return Err(Error::Config(
            "--seeds needs at least two comma-separated seeds".to_string(),
        ));
    }
    Ok(seeds)
}
