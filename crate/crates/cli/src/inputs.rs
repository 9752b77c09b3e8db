use std::path::Path;

use serde_json::Value;
use sethit::dist_core::{parse_distribution, StepDistribution};
use sethit::fourier::{build_basis, FunctionSpec};
use sethit::invariance::{poly_from_function, MultilinearPolynomial};
use sha2::{Digest, Sha256};

use crate::args::PolyInputs;
use crate::report::InputDigest;
use crate::CliError;

/// Reads input files and remembers a content digest for each.
#[derive(Default)]
pub struct Reader {
    pub digests: Vec<InputDigest>,
}

impl Reader {
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        let path_str = path.display().to_string();
        if !self.digests.iter().any(|d| d.path == path_str) {
            self.digests.push(InputDigest { path: path_str, sha256 });
        }
        String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))
    }

    pub fn dist(&mut self, path: &Path) -> Result<StepDistribution, CliError> {
        let text = self.read(path)?;
        parse_distribution(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// A function file; `n` fills in a missing `"n"` field and must agree with a present one.
    pub fn function(&mut self, path: &Path, n: Option<usize>) -> Result<FunctionSpec, CliError> {
        let text = self.read(path)?;
        let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        match (doc.get("n").and_then(Value::as_u64), n) {
            (Some(file_n), Some(flag_n)) if file_n as usize != flag_n => {
                return Err(bad(format!("file declares n = {file_n} but --n is {flag_n}")));
            }
            (None, Some(flag_n)) => doc["n"] = Value::from(flag_n),
            (None, None) => return Err(bad("no n in the file and no --n".into())),
            _ => {}
        }
        FunctionSpec::from_json(&doc.to_string()).map_err(|e| bad(e.to_string()))
    }

    pub fn functions(&mut self, paths: &[impl AsRef<Path>], n: Option<usize>) -> Result<Vec<FunctionSpec>, CliError> {
        paths.iter().map(|p| self.function(p.as_ref(), n)).collect()
    }

    pub fn poly(&mut self, path: &Path) -> Result<MultilinearPolynomial, CliError> {
        let text = self.read(path)?;
        let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
        let doc: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let field = |k: &str| doc[k].as_u64().map(|x| x as usize).ok_or_else(|| bad(format!("missing {k}")));
        let (n, p) = (field("n")?, field("ensemble_size")?);
        let terms = doc["terms"]
            .as_array()
            .ok_or_else(|| bad("missing terms".into()))?
            .iter()
            .map(|t| {
                let sigma = t["sigma"]
                    .as_array()
                    .and_then(|s| s.iter().map(|x| x.as_u64().map(|k| k as usize)).collect::<Option<Vec<_>>>())
                    .ok_or_else(|| bad("sigma must be an array of integers".into()))?;
                let coeff = t["coeff"].as_f64().ok_or_else(|| bad("coeff must be a number".into()))?;
                Ok((sigma, coeff))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        MultilinearPolynomial::new(n, p, terms).map_err(|e| bad(e.to_string()))
    }

    /// One polynomial per step, from function files (expanded in each step's marginal basis) or
    /// polynomial files. A single input is used for every step.
    pub fn polys(&mut self, inputs: &PolyInputs, p: &StepDistribution) -> Result<Vec<MultilinearPolynomial>, CliError> {
        let ell = p.steps();
        let count = inputs.fns.len().max(inputs.polys.len());
        if count != 1 && count != ell {
            return Err(CliError::Usage(format!("give one input or {ell} inputs, not {count}")));
        }
        (0..ell)
            .map(|j| {
                let i = if count == 1 { 0 } else { j };
                if inputs.fns.is_empty() {
                    self.poly(&inputs.polys[i])
                } else {
                    let f = self.function(&inputs.fns[i], inputs.n)?;
                    let basis = build_basis(&p.marginal(j)?);
                    Ok(poly_from_function(&f, &basis)?)
                }
            })
            .collect()
    }
}
