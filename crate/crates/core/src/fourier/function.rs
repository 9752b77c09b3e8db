use std::collections::BTreeMap;

use num::traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::dist_core::Alphabet;
use crate::error::{Error, Result};
use crate::number::{parse_number, Rational, Scalar};
use crate::radix;

/// Largest dense table a function may occupy.
pub const TABLE_LIMIT: usize = 1 << 24;

/// One disjunct of an anchored-symmetric set: an optional coordinate pin plus per-symbol count windows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    /// `(coordinate, symbol)` that must match.
    pub anchor: Option<(usize, usize)>,
    /// Inclusive `[lo, hi]` bounds on how often each listed symbol occurs among counted coordinates.
    pub windows: BTreeMap<usize, (i64, i64)>,
}

impl Clause {
    pub fn new(anchor: Option<(usize, usize)>) -> Self {
        Clause {
            anchor,
            windows: BTreeMap::new(),
        }
    }

    pub fn window(mut self, symbol: usize, lo: i64, hi: i64) -> Self {
        self.windows.insert(symbol, (lo.max(0), hi));
        self
    }

    fn accepts_counts(&self, count: impl Fn(usize) -> i64) -> bool {
        self.windows.iter().all(|(&a, &(lo, hi))| {
            let c = count(a);
            lo <= c && c <= hi
        })
    }
}

/// Union of clauses over the coordinates that are not `ignored`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchored {
    pub clauses: Vec<Clause>,
    /// Coordinates that no longer affect the value (they were restricted away).
    pub ignored: Vec<usize>,
}

/// Indicator of Σ c_i·map(x_i) ≡ r (mod m).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModLinear {
    pub modulus: u64,
    pub coeffs: Vec<u64>,
    pub residue: u64,
    pub symbol_map: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    /// One value per point of Ω^n in mixed radix, coordinate 0 least significant.
    Table(Vec<Rational>),
    AnchoredSymmetric(Anchored),
    /// Conjunction of `(coordinate, symbol)` equalities.
    Junta(Vec<(usize, usize)>),
    ModLinear(ModLinear),
    Constant(Rational),
}

/// A function Ω^n → [0, 1] in one of several representations.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    n: usize,
    alphabet: Alphabet,
    kind: FunctionKind,
}

impl FunctionSpec {
    pub fn new(alphabet: Alphabet, n: usize, kind: FunctionKind) -> Result<Self> {
        let m = alphabet.len();
        let bad = |msg: String| Err(Error::Invalid(msg));
        let unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
        match &kind {
            FunctionKind::Table(values) => {
                let len = radix::checked_pow(m, n).filter(|&l| l <= TABLE_LIMIT);
                if len != Some(values.len()) {
                    return bad(format!("table needs {m}^{n} values within the size limit"));
                }
                if !values.iter().all(unit) {
                    return bad("table values must lie in [0, 1]".into());
                }
            }
            FunctionKind::AnchoredSymmetric(a) => {
                for c in &a.clauses {
                    if c.anchor.is_some_and(|(i, v)| i >= n || v >= m) {
                        return bad("anchor outside the domain".into());
                    }
                    if c.windows.keys().any(|&s| s >= m) {
                        return bad("window on an unknown symbol".into());
                    }
                    if c.windows.values().any(|&(lo, hi)| lo < 0 || hi > n as i64) {
                        return bad("count window outside [0, n]".into());
                    }
                }
                if a.ignored.iter().any(|&i| i >= n) {
                    return bad("ignored coordinate outside the domain".into());
                }
            }
            FunctionKind::Junta(cs) => {
                if cs.iter().any(|&(i, v)| i >= n || v >= m) {
                    return bad("junta constraint outside the domain".into());
                }
            }
            FunctionKind::ModLinear(ml) => {
                if ml.modulus == 0 || ml.coeffs.len() != n || ml.symbol_map.len() != m {
                    return bad("mod-linear needs a positive modulus, n coefficients and a map per symbol".into());
                }
            }
            FunctionKind::Constant(c) => {
                if !unit(c) {
                    return bad("constant must lie in [0, 1]".into());
                }
            }
        }
        let mut kind = kind;
        if let FunctionKind::AnchoredSymmetric(a) = &mut kind {
            a.ignored.sort_unstable();
            a.ignored.dedup();
        }
        if let FunctionKind::ModLinear(ml) = &mut kind {
            let md = ml.modulus;
            ml.residue %= md;
            ml.coeffs.iter_mut().for_each(|c| *c %= md);
            ml.symbol_map.iter_mut().for_each(|c| *c %= md);
        }
        Ok(FunctionSpec { n, alphabet, kind })
    }

    pub fn table(alphabet: Alphabet, n: usize, values: Vec<Rational>) -> Result<Self> {
        FunctionSpec::new(alphabet, n, FunctionKind::Table(values))
    }

    pub fn constant(alphabet: Alphabet, n: usize, c: Rational) -> Result<Self> {
        FunctionSpec::new(alphabet, n, FunctionKind::Constant(c))
    }

    /// Indicator of `x_coord = symbol`.
    pub fn dictator(alphabet: Alphabet, n: usize, coord: usize, symbol: usize) -> Result<Self> {
        FunctionSpec::new(alphabet, n, FunctionKind::Junta(vec![(coord, symbol)]))
    }

    pub fn junta(alphabet: Alphabet, n: usize, constraints: Vec<(usize, usize)>) -> Result<Self> {
        FunctionSpec::new(alphabet, n, FunctionKind::Junta(constraints))
    }

    /// Indicator of Σ c_i x_i ≡ r (mod m) with symbols mapped to their indices.
    pub fn mod_linear(alphabet: Alphabet, modulus: u64, coeffs: Vec<u64>, residue: u64) -> Result<Self> {
        let n = coeffs.len();
        let symbol_map = (0..alphabet.len() as u64).collect();
        FunctionSpec::new(
            alphabet,
            n,
            FunctionKind::ModLinear(ModLinear {
                modulus,
                coeffs,
                residue,
                symbol_map,
            }),
        )
    }

    pub fn anchored(alphabet: Alphabet, n: usize, clauses: Vec<Clause>) -> Result<Self> {
        FunctionSpec::new(
            alphabet,
            n,
            FunctionKind::AnchoredSymmetric(Anchored {
                clauses,
                ignored: Vec::new(),
            }),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Table(_) => "table",
            FunctionKind::AnchoredSymmetric(_) => "anchored_symmetric",
            FunctionKind::Junta(_) => "junta",
            FunctionKind::ModLinear(_) => "mod_linear",
            FunctionKind::Constant(_) => "constant",
        }
    }

    pub fn table_values(&self) -> Option<&[Rational]> {
        match &self.kind {
            FunctionKind::Table(v) => Some(v),
            _ => None,
        }
    }

    /// True for the explicit zero function produced by a conflicting restriction.
    pub fn is_zero_function(&self) -> bool {
        matches!(&self.kind, FunctionKind::Constant(c) if c.is_zero())
    }

    /// Value at `x`, which must hold n symbol indices.
    pub fn evaluate(&self, x: &[usize]) -> Result<Rational> {
        if x.len() != self.n || x.iter().any(|&a| a >= self.alphabet.len()) {
            return Err(Error::Invalid(format!("point {x:?} is outside Ω^{}", self.n)));
        }
        Ok(self.value(x))
    }

    pub(crate) fn value(&self, x: &[usize]) -> Rational {
        match &self.kind {
            FunctionKind::Table(v) => v[radix::encode(x, self.alphabet.len())].clone(),
            FunctionKind::Constant(c) => c.clone(),
            _ => {
                if self.indicator(x) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
        }
    }

    /// Value as a scalar of type `T`; indicators avoid big-number allocation.
    pub(crate) fn value_as<T: Scalar>(&self, x: &[usize]) -> T {
        match &self.kind {
            FunctionKind::Table(v) => T::from_rational(&v[radix::encode(x, self.alphabet.len())]),
            FunctionKind::Constant(c) => T::from_rational(c),
            _ => {
                if self.indicator(x) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    fn indicator(&self, x: &[usize]) -> bool {
        match &self.kind {
            FunctionKind::Junta(cs) => cs.iter().all(|&(i, v)| x[i] == v),
            FunctionKind::ModLinear(ml) => {
                let s = x
                    .iter()
                    .zip(&ml.coeffs)
                    .fold(0u64, |acc, (&a, &c)| (acc + c * ml.symbol_map[a]) % ml.modulus);
                s == ml.residue
            }
            FunctionKind::AnchoredSymmetric(an) => {
                let mut counts = vec![0i64; self.alphabet.len()];
                for (i, &a) in x.iter().enumerate() {
                    if an.ignored.binary_search(&i).is_err() {
                        counts[a] += 1;
                    }
                }
                an.clauses.iter().any(|c| {
                    c.anchor.is_none_or(|(i, v)| x[i] == v) && c.accepts_counts(|a| counts[a])
                })
            }
            FunctionKind::Table(_) | FunctionKind::Constant(_) => unreachable!("not an indicator"),
        }
    }

    /// Dense table of all values; fails beyond the size limit.
    pub fn to_table(&self) -> Result<Vec<Rational>> {
        if let FunctionKind::Table(v) = &self.kind {
            return Ok(v.clone());
        }
        let m = self.alphabet.len();
        let len = radix::checked_pow(m, self.n)
            .filter(|&l| l <= TABLE_LIMIT)
            .ok_or(Error::Budget {
                needed: (m as u128).saturating_pow(self.n as u32),
                budget: TABLE_LIMIT as u128,
            })?;
        let mut x = vec![0; self.n];
        Ok((0..len)
            .map(|idx| {
                radix::decode_into(idx, m, &mut x);
                self.value(&x)
            })
            .collect())
    }

    pub fn as_table(&self) -> Result<FunctionSpec> {
        FunctionSpec::table(self.alphabet.clone(), self.n, self.to_table()?)
    }

    /// Fixes coordinate `coord` to `symbol`; the coordinate stays in the domain as a dummy.
    pub fn restrict_coordinate(&self, coord: usize, symbol: usize) -> FunctionSpec {
        let m = self.alphabet.len();
        let zero = || FunctionKind::Constant(Rational::zero());
        let kind = match &self.kind {
            FunctionKind::Table(v) => {
                let stride = radix::stride(m, coord);
                FunctionKind::Table(
                    (0..v.len())
                        .map(|idx| {
                            let d = (idx / stride) % m;
                            v[idx - d * stride + symbol * stride].clone()
                        })
                        .collect(),
                )
            }
            FunctionKind::Constant(c) => FunctionKind::Constant(c.clone()),
            FunctionKind::Junta(cs) => {
                if cs.iter().any(|&(i, v)| i == coord && v != symbol) {
                    zero()
                } else {
                    FunctionKind::Junta(cs.iter().copied().filter(|&(i, _)| i != coord).collect())
                }
            }
            FunctionKind::ModLinear(ml) => {
                let md = ml.modulus;
                let shift = ml.coeffs[coord] * ml.symbol_map[symbol] % md;
                let mut out = ml.clone();
                out.residue = (ml.residue + md - shift) % md;
                out.coeffs[coord] = 0;
                FunctionKind::ModLinear(out)
            }
            FunctionKind::AnchoredSymmetric(an) => {
                let already = an.ignored.binary_search(&coord).is_ok();
                let clauses: Vec<Clause> = an
                    .clauses
                    .iter()
                    .filter_map(|c| {
                        let mut c = c.clone();
                        if let Some((i, v)) = c.anchor {
                            if i == coord {
                                if v != symbol {
                                    return None;
                                }
                                c.anchor = None;
                            }
                        }
                        if !already {
                            if let Some((lo, hi)) = c.windows.get(&symbol).copied() {
                                if hi < 1 {
                                    return None;
                                }
                                c.windows.insert(symbol, ((lo - 1).max(0), hi - 1));
                            }
                        }
                        Some(c)
                    })
                    .collect();
                if clauses.is_empty() {
                    zero()
                } else {
                    let mut ignored = an.ignored.clone();
                    if !already {
                        ignored.push(coord);
                        ignored.sort_unstable();
                    }
                    FunctionKind::AnchoredSymmetric(Anchored { clauses, ignored })
                }
            }
        };
        FunctionSpec {
            n: self.n,
            alphabet: self.alphabet.clone(),
            kind,
        }
    }

    /// JSON document describing this function.
    pub fn to_json(&self) -> Value {
        let sym = |a: usize| Value::String(self.alphabet.symbol(a).to_string());
        let mut doc = Map::new();
        doc.insert("n".into(), json!(self.n));
        doc.insert("alphabet".into(), json!(self.alphabet.symbols()));
        doc.insert("kind".into(), json!(self.kind_name()));
        match &self.kind {
            FunctionKind::Table(v) => {
                doc.insert("values".into(), json!(v.iter().map(|r| r.to_string()).collect::<Vec<_>>()));
            }
            FunctionKind::Constant(c) => {
                doc.insert("value".into(), json!(c.to_string()));
            }
            FunctionKind::Junta(cs) => {
                let arr: Vec<Value> = cs.iter().map(|&(i, v)| json!([i, sym(v)])).collect();
                doc.insert("constraints".into(), Value::Array(arr));
            }
            FunctionKind::ModLinear(ml) => {
                doc.insert("modulus".into(), json!(ml.modulus));
                doc.insert("coeffs".into(), json!(ml.coeffs));
                doc.insert("residue".into(), json!(ml.residue));
                let map: Map<String, Value> = (0..self.alphabet.len())
                    .map(|a| (self.alphabet.symbol(a).to_string(), json!(ml.symbol_map[a])))
                    .collect();
                doc.insert("symbol_map".into(), Value::Object(map));
            }
            FunctionKind::AnchoredSymmetric(an) => {
                let clauses: Vec<Value> = an
                    .clauses
                    .iter()
                    .map(|c| {
                        let windows: Map<String, Value> = c
                            .windows
                            .iter()
                            .map(|(&a, &(lo, hi))| (self.alphabet.symbol(a).to_string(), json!([lo, hi])))
                            .collect();
                        let mut o = Map::new();
                        if let Some((i, v)) = c.anchor {
                            o.insert("anchor".into(), json!({"coord": i, "symbol": sym(v)}));
                        }
                        o.insert("windows".into(), Value::Object(windows));
                        Value::Object(o)
                    })
                    .collect();
                doc.insert("clauses".into(), Value::Array(clauses));
                if !an.ignored.is_empty() {
                    doc.insert("ignored".into(), json!(an.ignored));
                }
            }
        }
        Value::Object(doc)
    }

    /// Parses the JSON function format; coordinates are 0-based.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        let bad = |msg: &str| Error::Invalid(format!("function spec: {msg}"));
        let n = doc["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let symbols: Vec<String> = doc["alphabet"]
            .as_array()
            .ok_or_else(|| bad("missing alphabet"))?
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(x) => Ok(x.to_string()),
                _ => Err(bad("alphabet entries must be strings or numbers")),
            })
            .collect::<Result<_>>()?;
        let alphabet = Alphabet::new(symbols)?;
        let symbol = |v: &Value| -> Result<usize> {
            let tok = match v {
                Value::String(s) => s.clone(),
                Value::Number(x) => x.to_string(),
                _ => return Err(bad("symbol must be a string or number")),
            };
            alphabet.index_of(&tok).ok_or_else(|| bad(&format!("unknown symbol {tok:?}")))
        };
        let number = |v: &Value| -> Result<Rational> {
            match v {
                Value::String(s) => Ok(parse_number(s)?.to_rational()),
                Value::Number(x) => Ok(parse_number(&x.to_string())?.to_rational()),
                _ => Err(bad("expected a number")),
            }
        };
        let coord = |v: &Value| v.as_u64().map(|x| x as usize).ok_or_else(|| bad("coordinate must be an integer"));
        let kind = match doc["kind"].as_str().ok_or_else(|| bad("missing kind"))? {
            "table" => FunctionKind::Table(
                doc["values"]
                    .as_array()
                    .ok_or_else(|| bad("missing values"))?
                    .iter()
                    .map(number)
                    .collect::<Result<_>>()?,
            ),
            "constant" => FunctionKind::Constant(number(&doc["value"])?),
            "junta" => FunctionKind::Junta(
                doc["constraints"]
                    .as_array()
                    .ok_or_else(|| bad("missing constraints"))?
                    .iter()
                    .map(|c| Ok((coord(&c[0])?, symbol(&c[1])?)))
                    .collect::<Result<_>>()?,
            ),
            "mod_linear" => {
                let ints = |v: &Value| -> Result<Vec<u64>> {
                    v.as_array()
                        .ok_or_else(|| bad("expected an integer array"))?
                        .iter()
                        .map(|x| x.as_u64().ok_or_else(|| bad("expected a non-negative integer")))
                        .collect()
                };
                let symbol_map = match &doc["symbol_map"] {
                    Value::Null => (0..alphabet.len() as u64).collect(),
                    Value::Object(o) => {
                        let mut map = vec![0; alphabet.len()];
                        for (k, v) in o {
                            let a = alphabet.index_of(k).ok_or_else(|| bad("unknown symbol in symbol_map"))?;
                            map[a] = v.as_u64().ok_or_else(|| bad("symbol_map values must be integers"))?;
                        }
                        map
                    }
                    v => ints(v)?,
                };
                FunctionKind::ModLinear(ModLinear {
                    modulus: doc["modulus"].as_u64().ok_or_else(|| bad("missing modulus"))?,
                    coeffs: ints(&doc["coeffs"])?,
                    residue: doc["residue"].as_u64().unwrap_or(0),
                    symbol_map,
                })
            }
            "anchored_symmetric" => {
                let clause = |c: &Value| -> Result<Clause> {
                    let anchor = match &c["anchor"] {
                        Value::Null => None,
                        a => Some((coord(&a["coord"])?, symbol(&a["symbol"])?)),
                    };
                    let mut cl = Clause::new(anchor);
                    if let Some(ws) = c["windows"].as_object() {
                        for (k, w) in ws {
                            let a = alphabet.index_of(k).ok_or_else(|| bad("unknown symbol in windows"))?;
                            let lo = w[0].as_i64().ok_or_else(|| bad("window bounds must be integers"))?;
                            let hi = w[1].as_i64().ok_or_else(|| bad("window bounds must be integers"))?;
                            cl = cl.window(a, lo, hi);
                        }
                    }
                    Ok(cl)
                };
                let clauses = match doc["clauses"].as_array() {
                    Some(cs) => cs.iter().map(clause).collect::<Result<_>>()?,
                    None => vec![clause(&doc)?],
                };
                let ignored = match doc["ignored"].as_array() {
                    Some(v) => v.iter().map(coord).collect::<Result<_>>()?,
                    None => Vec::new(),
                };
                FunctionKind::AnchoredSymmetric(Anchored { clauses, ignored })
            }
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        FunctionSpec::new(alphabet, n, kind)
    }
}

/// Integer window `[lo, hi]` for `lo_bound ≤ count ≤ hi_bound` with rational bounds.
pub fn integer_window(lo_bound: &Rational, hi_bound: &Rational) -> (i64, i64) {
    let lo = lo_bound.ceil().to_integer();
    let hi = hi_bound.floor().to_integer();
    let conv = |x: num::BigInt| i64::try_from(x).unwrap_or(i64::MAX);
    (conv(lo).max(0), conv(hi))
}

/// Window for `count < bound`.
pub fn strictly_below(bound: &Rational) -> (i64, i64) {
    let hi = bound.ceil().to_integer() - 1;
    (0, i64::try_from(hi).unwrap_or(i64::MAX))
}
