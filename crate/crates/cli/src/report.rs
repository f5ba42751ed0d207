//! Run reports and their CSV/JSON rendering.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Significant digits used for every CSV number.
pub const CSV_DIGITS: usize = 9;

/// `x` rounded to `digits` significant digits in `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros dropped.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_num(x: f64) -> String {
    sig(x, CSV_DIGITS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

/// One measured property with its explicit tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: &'static str, name: &'static str, value: f64, relation: Relation, tolerance: f64) -> Self {
        let holds = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        Check { suite, name, value, relation, tolerance, pass: value.is_finite() && holds }
    }

    pub fn at_most(suite: &'static str, name: &'static str, value: f64, tolerance: f64) -> Self {
        Self::new(suite, name, value, Relation::AtMost, tolerance)
    }

    pub fn at_least(suite: &'static str, name: &'static str, value: f64, minimum: f64) -> Self {
        Self::new(suite, name, value, Relation::AtLeast, minimum)
    }

    /// A check whose measurement could not be taken.
    pub fn broken(suite: &'static str, name: &'static str, tolerance: f64) -> Self {
        Check { suite, name, value: f64::MAX, relation: Relation::AtMost, tolerance, pass: false }
    }
}

/// Invariant-suite report. Wall time is kept out so equal seeds give
/// byte-identical output.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.checks.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = header(&self.command, &self.inputs_digest);
        out.push_str("suite,check,value,relation,tolerance,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.suite,
                c.name,
                csv_num(c.value),
                c.relation.symbol(),
                csv_num(c.tolerance),
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!("# {}/{} checks passed\n", self.passed(), self.checks.len()));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

/// Comment lines identifying the run at the top of every CSV report.
pub fn header(command: &str, digest: &str) -> String {
    format!("# command: {command}\n# inputs: sha256:{digest}\n")
}

/// Hex SHA-256 over length-prefixed chunks, so `["ab", "c"]` and
/// `["a", "bc"]` differ.
pub fn digest<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for c in chunks {
        h.update((c.len() as u64).to_le_bytes());
        h.update(c);
    }
    hex::encode(h.finalize())
}
