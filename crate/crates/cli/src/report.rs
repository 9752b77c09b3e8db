use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};
use sethit::number::Exactness;

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Refused,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Refused => 1,
        }
    }
}

/// One run: what was asked, what was read, and what came out.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub exactness: Exactness,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub status: Status,
    pub results: Value,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn render(&self, table: bool) -> String {
        let doc = serde_json::to_value(self).expect("reports serialize");
        if table {
            let mut out = String::new();
            flatten(&doc, String::new(), &mut out);
            out
        } else {
            let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

/// Gives every numeric in a results tree an exactness flag. Exact rationals already carry one.
/// `{mean, stderr}` objects and any value with a `<key>_stderr` sibling are Monte Carlo
/// estimates; other non-integer numbers are floating point. Integers (counts, sizes, seeds) are
/// exact and left bare.
pub fn tag_exactness(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            if map.contains_key("exactness") {
                return Value::Object(map);
            }
            if map.contains_key("mean") && map.contains_key("stderr") {
                let mut map = map;
                map.insert("exactness".into(), Value::from("monte-carlo"));
                return Value::Object(map);
            }
            let sampled: Vec<String> = map
                .keys()
                .filter_map(|k| k.strip_suffix("_stderr"))
                .filter(|k| map.contains_key(*k))
                .map(str::to_string)
                .collect();
            let tagged = map
                .into_iter()
                .map(|(k, x)| match x {
                    Value::Number(num) if sampled.contains(&k) => {
                        (k, json!({ "approx": num, "exactness": "monte-carlo" }))
                    }
                    Value::Number(num) if k.ends_with("_stderr") => {
                        (k, json!({ "approx": num, "exactness": "monte-carlo" }))
                    }
                    other => (k, tag_exactness(other)),
                })
                .collect();
            Value::Object(tagged)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(tag_exactness).collect()),
        Value::Number(num) if num.is_f64() => json!({ "approx": num, "exactness": "float" }),
        other => other,
    }
}

fn flatten(v: &Value, path: String, out: &mut String) {
    let join = |key: &str| if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(x, join(k), out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(x, join(&i.to_string()), out);
            }
        }
        scalar => {
            let _ = writeln!(out, "{path} = {scalar}");
        }
    }
}
