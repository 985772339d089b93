//! JSON input schemas.
//!
//! Triple: `dim`, `Q`, `gamma`, optional `group` and `tol`. Split triple:
//! `Q1`, `Q2` in place of `Q`. Scalars are numbers or `[re, im]`; matrices
//! are arrays of rows. `group` is an array of matrices or the string
//! `"cyclic(k, key)"`, which expands the matrix stored under `key` into its
//! first `k` powers.

use jlo_core::linalg::{c, identity, CMat, C64};
use jlo_core::split::SplitTriple;
use jlo_core::triple::SpectralTriple;
use serde_json::{Map, Value};

/// Malformed input. Always maps to the schema exit code.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, SchemaError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SchemaError(msg.into()))
}

pub struct Doc {
    obj: Map<String, Value>,
}

impl Doc {
    pub fn parse(text: &str) -> Result<Doc> {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(obj)) => Ok(Doc { obj }),
            Ok(_) => err("top level must be a JSON object"),
            Err(e) => err(format!("invalid JSON: {e}")),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.obj.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.obj.get(key).ok_or_else(|| SchemaError(format!("missing key \"{key}\"")))
    }

    pub fn dim(&self) -> Result<usize> {
        match self.get("dim")?.as_u64() {
            Some(d) if d > 0 => Ok(d as usize),
            _ => err("\"dim\" must be a positive integer"),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.obj.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| SchemaError(format!("\"{key}\" must be a non-negative integer"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.obj.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SchemaError(format!("\"{key}\" must be a finite number"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        match self.obj.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| SchemaError(format!("\"{key}\" must be a string"))),
        }
    }

    pub fn matrix(&self, key: &str, d: usize) -> Result<CMat> {
        matrix(self.get(key)?, d, key)
    }

    pub fn matrix_opt(&self, key: &str, d: usize) -> Result<Option<CMat>> {
        if self.has(key) {
            self.matrix(key, d).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn matrices(&self, key: &str, d: usize) -> Result<Vec<CMat>> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, v)| matrix(v, d, &format!("{key}[{i}]")))
                .collect(),
            _ => err(format!("\"{key}\" must be an array of matrices")),
        }
    }

    fn group(&self, d: usize) -> Result<Vec<CMat>> {
        match self.obj.get("group") {
            None => Ok(vec![]),
            Some(Value::String(s)) => self.cyclic(s, d),
            Some(Value::Array(_)) => self.matrices("group", d),
            Some(_) => err("\"group\" must be an array of matrices or \"cyclic(k, key)\""),
        }
    }

    fn cyclic(&self, s: &str, d: usize) -> Result<Vec<CMat>> {
        let inner = s
            .trim()
            .strip_prefix("cyclic(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| SchemaError(format!("unrecognized group shorthand \"{s}\"")))?;
        let (k, key) = inner
            .split_once(',')
            .ok_or_else(|| SchemaError("cyclic shorthand needs (k, key)".into()))?;
        let k: usize = k
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| SchemaError(format!("bad cyclic order \"{}\"", k.trim())))?;
        let gen = self.matrix(key.trim(), d)?;
        let mut out = Vec::with_capacity(k);
        let mut u = identity(d);
        for _ in 0..k {
            out.push(u.clone());
            u = &u * &gen;
        }
        Ok(out)
    }

    /// An operator on `C^m ⊗ C^d`; `"gamma"` and `"identity"` name the
    /// block-diagonal grading and the unit.
    pub fn operator(&self, key: &str, d: usize, m: usize, gamma: &CMat) -> Result<CMat> {
        match self.get(key)? {
            Value::String(s) if s == "gamma" => Ok(identity(m).kronecker(gamma)),
            Value::String(s) if s == "identity" => Ok(identity(m * d)),
            v => matrix(v, m * d, key),
        }
    }

    pub fn triple(&self) -> Result<SpectralTriple> {
        let d = self.dim()?;
        let q = self.matrix("Q", d)?;
        let gamma = self.matrix("gamma", d)?;
        let group = self.group(d)?;
        let tol = self.f64_or("tol", jlo_core::triple::DEFAULT_TOL)?;
        Ok(SpectralTriple::new(q, gamma, group).with_tol(tol))
    }

    pub fn split(&self) -> Result<SplitTriple> {
        let d = self.dim()?;
        let q1 = self.matrix("Q1", d)?;
        let q2 = self.matrix("Q2", d)?;
        let gamma = self.matrix("gamma", d)?;
        let group = self.group(d)?;
        let mut s = SplitTriple::new(q1, q2, gamma, group);
        s.tol = self.f64_or("tol", s.tol)?;
        Ok(s)
    }
}

fn scalar(v: &Value, what: &str) -> Result<C64> {
    let z = match v {
        Value::Number(n) => n.as_f64().map(|x| c(x, 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Some(c(re, im)),
            _ => None,
        },
        _ => None,
    };
    match z {
        Some(z) if z.re.is_finite() && z.im.is_finite() => Ok(z),
        _ => err(format!("{what}: entries must be numbers or [re, im] pairs")),
    }
}

fn matrix(v: &Value, d: usize, what: &str) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| SchemaError(format!("{what} must be an array of rows")))?;
    if rows.len() != d {
        return err(format!("{what} has {} rows, expected {d}", rows.len()));
    }
    let mut m = CMat::zeros(d, d);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_array().ok_or_else(|| SchemaError(format!("{what} row {i} is not an array")))?;
        if r.len() != d {
            return err(format!("{what} row {i} has {} entries, expected {d}", r.len()));
        }
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = scalar(x, what)?;
        }
    }
    Ok(m)
}

/// `a:b:n`, `n` evenly spaced points from `a` to `b`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return err(format!("grid \"{s}\" is not of the form a:b:n"));
    }
    let a: f64 = num(parts[0])?;
    let b: f64 = num(parts[1])?;
    let n: usize = parts[2].trim().parse().map_err(|_| SchemaError(format!("bad grid size \"{}\"", parts[2])))?;
    let g: Vec<f64> = match n {
        0 => return err("grid needs at least one point"),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    };
    increasing(g, s)
}

/// `v1,v2,…`.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let g = s.split(',').map(num).collect::<Result<Vec<f64>>>()?;
    increasing(g, s)
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| SchemaError(format!("\"{s}\" is not a finite number")))
}

fn increasing(g: Vec<f64>, s: &str) -> Result<Vec<f64>> {
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return err(format!("grid \"{s}\" is not strictly increasing"));
    }
    Ok(g)
}
