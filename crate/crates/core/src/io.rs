//! File formats: symbol streams, pipeline configurations, and test
//! definitions.
//!
//! Stream files are plain UTF-8 text, one symbol per line, written as
//! the decimal symbol code; over a product alphabet a symbol is the
//! comma-joined codes of its components. Blank lines and lines starting
//! with `#` are ignored on input, which is where provenance headers
//! live on output.
//!
//! Pipeline configurations are JSON: a source distribution, a mandatory
//! seed, a symbol count, and a list of transform steps applied in
//! order. Test definitions are JSON too, either explicit level lists or
//! a named generator.

use std::io::{BufRead, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::mltest::MlTest;
use crate::space::{all_strings, DiscreteDistribution, PrefixFreeSet};
use crate::space::{Alphabet, DistributionSpec, Symbol, SymbolString};
use crate::transform::{
    sample_ensemble, EnsembleStream, EventPredicate, IndexMap, RandomVariable, SelectionRule,
};

// ---------------------------------------------------------------------
// Symbol streams on disk
// ---------------------------------------------------------------------

/// Renders one symbol as a stream-file line: the decimal code, or the
/// comma-joined component codes over a product alphabet.
pub fn format_symbol(alphabet: &Alphabet, s: Symbol) -> String {
    if alphabet.arity() > 1 {
        alphabet
            .unpack(s)
            .iter()
            .map(|c| c.code().to_string())
            .collect::<Vec<_>>()
            .join(",")
    } else {
        s.code().to_string()
    }
}

/// Parses one stream-file line into a symbol of `alphabet`.
fn parse_symbol(alphabet: &Alphabet, line: usize, text: &str) -> Result<Symbol, Error> {
    let bad = || Error::BadStreamLine {
        line,
        text: text.to_string(),
    };
    let parts: Vec<u64> = text
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let symbol = if alphabet.arity() > 1 {
        if parts.len() != alphabet.arity() {
            return Err(bad());
        }
        let comps: Vec<Symbol> = parts.into_iter().map(Symbol).collect();
        alphabet.pack(&comps)
    } else {
        if parts.len() != 1 {
            return Err(bad());
        }
        Symbol(parts[0])
    };
    if !alphabet.contains(symbol) {
        return Err(Error::ForeignSymbol {
            symbol: format_symbol(alphabet, symbol),
            alphabet: alphabet.label().to_string(),
        });
    }
    Ok(symbol)
}

/// Reads a symbol stream: one symbol per line, `#` lines and blank
/// lines skipped.
pub fn read_symbols(alphabet: &Alphabet, reader: impl BufRead) -> Result<Vec<Symbol>, Error> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        out.push(parse_symbol(alphabet, i + 1, text)?);
    }
    Ok(out)
}

/// Writes a symbol stream, optionally prefixed by a provenance comment.
pub fn write_symbols(
    alphabet: &Alphabet,
    symbols: &[Symbol],
    provenance: Option<&str>,
    mut writer: impl std::io::Write,
) -> Result<(), Error> {
    if let Some(p) = provenance {
        writeln!(writer, "# provenance: {p}")?;
    }
    for &s in symbols {
        writeln!(writer, "{}", format_symbol(alphabet, s))?;
    }
    Ok(())
}

/// [`read_symbols`] from a file path.
pub fn read_stream_file(alphabet: &Alphabet, path: impl AsRef<Path>) -> Result<Vec<Symbol>, Error> {
    let file = std::fs::File::open(path)?;
    read_symbols(alphabet, std::io::BufReader::new(file))
}

/// [`write_symbols`] to a file path.
pub fn write_stream_file(
    alphabet: &Alphabet,
    symbols: &[Symbol],
    provenance: Option<&str>,
    path: impl AsRef<Path>,
) -> Result<(), Error> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_symbols(alphabet, symbols, provenance, &mut w)?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------

/// One transform step of a pipeline, with parameters in the parser
/// syntax of the corresponding rule type.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum OpSpec {
    /// Keep only members of the event.
    Condition { event: String },
    /// Indicator stream of the event.
    Characteristic { event: String },
    /// Partition cells to output symbols 0, 1, ...
    Contract { cells: Vec<String> },
    /// Pointwise symbol map.
    Map { var: String },
    /// Position shuffle by an index map.
    Shuffle { map: String },
    /// Prefix-driven subsequence selection.
    Select { rule: String },
}

/// A complete sampling pipeline: source distribution, seed, length, and
/// transform steps in application order. The seed is mandatory so runs
/// are reproducible by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub distribution: DistributionSpec,
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub ops: Vec<OpSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_n() -> u64 {
    1000
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Builds the stream this pipeline describes.
    pub fn build_stream(&self) -> Result<EnsembleStream, Error> {
        let dist = self.distribution.build()?;
        self.apply_ops(sample_ensemble(dist, self.seed))
    }

    /// Applies the configured ops, in order, on top of `stream`; the
    /// stream stands in for the sampled source, so replayed files can
    /// be pushed through the same pipeline.
    pub fn apply_ops(&self, mut stream: EnsembleStream) -> Result<EnsembleStream, Error> {
        for op in &self.ops {
            stream = match op {
                OpSpec::Condition { event } => {
                    let ev = EventPredicate::parse(event)?;
                    stream.condition(ev)
                }
                OpSpec::Characteristic { event } => {
                    let ev = EventPredicate::parse(event)?;
                    stream.characteristic(ev)
                }
                OpSpec::Contract { cells } => {
                    let cells: Vec<EventPredicate> = cells
                        .iter()
                        .map(|c| EventPredicate::parse(c))
                        .collect::<Result<_, _>>()?;
                    stream.contract(cells)
                }
                OpSpec::Map { var } => {
                    let v = RandomVariable::parse(var)?;
                    stream.map_stream(v)
                }
                OpSpec::Shuffle { map } => {
                    let m = IndexMap::parse(map)?;
                    stream.shuffle(m)
                }
                OpSpec::Select { rule } => {
                    let r = SelectionRule::parse(rule)?;
                    stream.select(r)
                }
            };
        }
        Ok(stream)
    }
}

// ---------------------------------------------------------------------
// Test definitions
// ---------------------------------------------------------------------

/// A named level generator for test definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Level n: every string of length n+1 over the first `width`
    /// symbols that never uses `symbol`.
    AvoidSymbol {
        symbol: u64,
        width: u64,
        levels: u64,
    },
}

/// JSON test definition: either explicit levels (each a list of strings,
/// each string the space-separated symbol codes) or a named generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlTestSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

/// Parses a space-separated code string like "0 1 0" (empty for the
/// empty string).
pub fn parse_symbol_string(text: &str) -> Result<SymbolString, Error> {
    let codes: Vec<u64> = text
        .split_whitespace()
        .map(|p| {
            p.parse::<u64>()
                .map_err(|_| Error::Config(format!("cannot parse symbol code {p:?}")))
        })
        .collect::<Result<_, _>>()?;
    Ok(SymbolString(codes.into_iter().map(Symbol).collect()))
}

impl MlTestSpec {
    pub fn from_json(json: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Materializes the definition into a test over `dist`.
    pub fn build(&self, dist: DiscreteDistribution) -> Result<MlTest, Error> {
        match (&self.levels, &self.generator) {
            (Some(levels), None) => {
                let mut sets = Vec::with_capacity(levels.len());
                for level in levels {
                    let members: Vec<SymbolString> = level
                        .iter()
                        .map(|s| parse_symbol_string(s))
                        .collect::<Result<_, _>>()?;
                    sets.push(PrefixFreeSet::new(members)?);
                }
                Ok(MlTest::from_levels(dist, sets, "explicit"))
            }
            (
                None,
                Some(GeneratorSpec::AvoidSymbol {
                    symbol,
                    width,
                    levels,
                }),
            ) => {
                let avoided = Symbol(*symbol);
                let width = *width;
                let alphabet = dist.alphabet().clone();
                Ok(MlTest::generated(
                    dist,
                    *levels,
                    &format!("avoid:{symbol}"),
                    move |n| {
                        let len = usize::try_from(n + 1).expect("level out of range");
                        let members: Vec<SymbolString> = all_strings(&alphabet, width, len)
                            .into_iter()
                            .filter(|s| s.symbols().iter().all(|&sym| sym != avoided))
                            .collect();
                        PrefixFreeSet::new(members)
                    },
                ))
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "test definition has both levels and a generator".to_string(),
            )),
            (None, None) => Err(Error::Config(
                "test definition needs levels or a generator".to_string(),
            )),
        }
    }
}
