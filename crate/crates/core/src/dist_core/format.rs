//! Line-oriented text format for distributions.
//!
//! ```text
//! # comments run to end of line
//! alphabet 0 1 2
//! steps 2
//! entry 0 0 1/6
//! entry 0 1 1/6
//! ```

use std::collections::HashSet;
use std::fmt::Write;
use std::str::FromStr;

use super::{Alphabet, StepDistribution};
use crate::error::{Error, Result};
use crate::number::{parse_number, Number};

pub fn parse_distribution(text: &str) -> Result<StepDistribution> {
    let mut alphabet: Option<Alphabet> = None;
    let mut steps: Option<usize> = None;
    let mut entries: Vec<(Vec<usize>, Number)> = Vec::new();
    let mut seen = HashSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |msg: String| Error::Parse { line, msg };
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(head) = toks.next() else { continue };
        let rest: Vec<&str> = toks.collect();
        match head {
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(err("alphabet declared twice".into()));
                }
                alphabet = Some(Alphabet::new(rest.iter().copied()).map_err(|e| err(e.to_string()))?);
            }
            "steps" => {
                if steps.is_some() {
                    return Err(err("steps declared twice".into()));
                }
                let [s] = rest.as_slice() else {
                    return Err(err("expected `steps <count>`".into()));
                };
                let s: usize = s.parse().map_err(|_| err(format!("bad step count {s:?}")))?;
                if s == 0 {
                    return Err(err("step count must be positive".into()));
                }
                steps = Some(s);
            }
            "entry" => {
                let (Some(a), Some(l)) = (&alphabet, steps) else {
                    return Err(err("entry before alphabet and steps".into()));
                };
                if rest.len() != l + 1 {
                    return Err(err(format!("expected {l} symbols and a weight")));
                }
                let tuple = rest[..l]
                    .iter()
                    .map(|t| a.index_of(t).ok_or_else(|| err(format!("unknown symbol {t:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                let w = parse_number(rest[l]).map_err(|_| err(format!("bad weight {:?}", rest[l])))?;
                if w.is_negative() {
                    return Err(Error::Invalid(format!("line {line}: negative weight {w}")));
                }
                if !seen.insert(tuple.clone()) {
                    return Err(err(format!("duplicate entry {}", rest[..l].join(" "))));
                }
                entries.push((tuple, w));
            }
            other => return Err(err(format!("unknown directive {other:?}"))),
        }
    }

    let alphabet = alphabet.ok_or(Error::Parse { line: 0, msg: "missing alphabet".into() })?;
    let steps = steps.ok_or(Error::Parse { line: 0, msg: "missing steps".into() })?;
    StepDistribution::from_entries(alphabet, steps, entries)
}

impl FromStr for StepDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_distribution(s)
    }
}

impl StepDistribution {
    /// Canonical text: positive entries in mixed-radix order, step 0 least significant.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = self.name() {
            let _ = writeln!(out, "# {name}");
        }
        let _ = writeln!(out, "alphabet {}", self.alphabet().symbols().join(" "));
        let _ = writeln!(out, "steps {}", self.steps());
        for idx in self.support() {
            let toks: Vec<&str> = self.tuple(idx).iter().map(|&a| self.alphabet().symbol(a)).collect();
            let w = match self.weights().get(idx) {
                Number::Exact(r) => r.to_string(),
                Number::Float(x) => format!("{x:?}"),
            };
            let _ = writeln!(out, "entry {} {w}", toks.join(" "));
        }
        out
    }
}
