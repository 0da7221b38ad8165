//! Run configuration: `key=value` files overlaid by command-line flags.
//!
//! File keys are the long flag names (`max-iter`, `vertex-sample`, ...);
//! underscores are accepted in place of dashes. `#` starts a comment.
//! Values set later win, so flags are applied after the file.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::DEFAULT_ENUMERATION_CAP;
use crate::spectrum::DEFAULT_SPECTRAL_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("format must be json or csv, got {s:?}"))),
        }
    }
}

/// Every tunable of every subcommand. Options left `None` fall back to a
/// per-command default that the driver fills in before a report is written,
/// so emitted configs are always fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub q: Option<u64>,
    pub p: Option<u64>,
    pub e: Option<u32>,
    /// Monic modulus, lowest coefficient first.
    pub poly: Option<Vec<u32>>,
    pub n: usize,
    pub d: usize,
    /// Column count for the rank census; defaults to `n`.
    pub t: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub budget: Option<u128>,
    pub enum_cap: u64,
    pub spectral_cap: u64,
    pub vertex_sample: u64,
    pub pair_sample: u64,
    pub exhaustive: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_oracle: bool,
    pub sizes: Option<Vec<u64>>,
    pub family: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub lines: Option<PathBuf>,
    pub lambda: Option<f64>,
    /// Census table: `rank`, `pairs` or `all`.
    pub table: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: None,
            p: None,
            e: None,
            poly: None,
            n: 2,
            d: 1,
            t: None,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            format: None,
            budget: None,
            enum_cap: DEFAULT_ENUMERATION_CAP,
            spectral_cap: DEFAULT_SPECTRAL_CAP,
            vertex_sample: 1000,
            pair_sample: 10_000,
            exhaustive: false,
            tol: 1e-9,
            max_iter: 10_000,
            dense_oracle: false,
            sizes: None,
            family: None,
            points: None,
            lines: None,
            lambda: None,
            table: "all".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

/// Integers may be written `1e9`, `10^9` or `1_000_000_000`.
fn parse_count(key: &str, value: &str) -> Result<u128> {
    let v = value.trim().replace('_', "");
    let bad = || Error::Config(format!("invalid value {value:?} for {key}"));
    if let Some((base, exp)) = v.split_once('^') {
        let base: u128 = base.parse().map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        return base.checked_pow(exp).ok_or_else(bad);
    }
    if let Some((mantissa, exp)) = v.split_once(['e', 'E']) {
        let mantissa: u128 = mantissa.parse().map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        return 10u128
            .checked_pow(exp)
            .and_then(|s| s.checked_mul(mantissa))
            .ok_or_else(bad);
    }
    v.parse().map_err(|_| bad())
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "" | "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    /// Sets one option from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        let count = |v: &str| -> Result<u64> {
            u64::try_from(parse_count(k, v)?).map_err(|_| Error::Config(format!("{k} is too large")))
        };
        match k {
            "q" => self.q = Some(count(value)?),
            "p" => self.p = Some(count(value)?),
            "e" => self.e = Some(parse(k, value)?),
            "poly" => self.poly = Some(parse_list(k, value)?),
            "n" => self.n = parse(k, value)?,
            "d" => self.d = parse(k, value)?,
            "t" => self.t = Some(parse(k, value)?),
            "seed" => self.seed = count(value)?,
            "workers" => self.workers = parse(k, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => self.format = Some(value.trim().parse()?),
            "budget" => self.budget = Some(parse_count(k, value)?),
            "enum-cap" => self.enum_cap = count(value)?,
            "spectral-cap" => self.spectral_cap = count(value)?,
            "vertex-sample" => self.vertex_sample = count(value)?,
            "pair-sample" => self.pair_sample = count(value)?,
            "exhaustive" => self.exhaustive = parse_bool(k, value)?,
            "tol" => self.tol = parse(k, value)?,
            "max-iter" => self.max_iter = parse(k, value)?,
            "dense-oracle" => self.dense_oracle = parse_bool(k, value)?,
            "sizes" => self.sizes = Some(parse_list(k, value)?),
            "family" => self.family = Some(PathBuf::from(value.trim())),
            "points" => self.points = Some(PathBuf::from(value.trim())),
            "lines" => self.lines = Some(PathBuf::from(value.trim())),
            "lambda" => self.lambda = Some(parse(k, value)?),
            "table" => match value.trim() {
                t @ ("rank" | "pairs" | "all") => self.table = t.into(),
                t => return Err(Error::Config(format!("table must be rank, pairs or all, got {t:?}"))),
            },
            _ => return Err(Error::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Applies the `key=value` lines of a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Builds the field and records its parameters (`q`, `p`, `e`, `poly`)
    /// back into the config. Defaults to `q = 3`.
    pub fn resolve_field(&mut self) -> Result<Arc<FieldSpec>> {
        let field = match (self.q, self.p) {
            (Some(q), _) => FieldSpec::with_order(q, self.poly.as_deref())?,
            (None, Some(p)) => FieldSpec::new(p, self.e.unwrap_or(1), self.poly.as_deref())?,
            (None, None) if self.e.is_some() => return Err(Error::Config("e given without p".into())),
            (None, None) => FieldSpec::with_order(3, self.poly.as_deref())?,
        };
        let (p, e) = (field.p() as u64, field.degree());
        if self.p.is_some_and(|x| x != p) || self.e.is_some_and(|x| x != e) {
            return Err(Error::Config(format!(
                "q = {} is inconsistent with p = {:?}, e = {:?}",
                field.order(),
                self.p,
                self.e
            )));
        }
        self.q = Some(field.order() as u64);
        self.p = Some(p);
        self.e = Some(e);
        self.poly = (e > 1).then(|| field.modulus().to_vec());
        Ok(Arc::new(field))
    }

    /// Range checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n as u128),
            ("d", self.d as u128),
            ("workers", self.workers as u128),
            ("enum-cap", self.enum_cap as u128),
            ("spectral-cap", self.spectral_cap as u128),
            ("vertex-sample", self.vertex_sample as u128),
            ("pair-sample", self.pair_sample as u128),
            ("max-iter", self.max_iter as u128),
            ("budget", self.budget.unwrap_or(1)),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config("tol must be a positive number".into()));
        }
        if self.lambda.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("lambda must be a nonnegative number".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::default();
        c.apply_text("# reference\nq = 5\nn=2\nmax_iter=50\nsizes = 1,2,3,4\n").unwrap();
        c.set("q", "3").unwrap();
        assert_eq!((c.q, c.max_iter), (Some(3), 50));
        assert_eq!(c.sizes, Some(vec![1, 2, 3, 4]));
    }

    #[test]
    fn counts_accept_scientific_forms() {
        let mut c = RunConfig::default();
        c.set("budget", "1e9").unwrap();
        assert_eq!(c.budget, Some(1_000_000_000));
        c.set("budget", "2^40").unwrap();
        assert_eq!(c.budget, Some(1 << 40));
        c.set("budget", "3_000").unwrap();
        assert_eq!(c.budget, Some(3000));
        assert!(c.set("budget", "1e99").is_err());
    }

    #[test]
    fn bad_input_is_a_config_error() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("colour", "red"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("q 3"), Err(Error::Config(_))));
        assert!(c.set("format", "xml").is_err());
        assert!(c.set("n", "-1").is_err());
    }

    #[test]
    fn field_resolution() {
        let mut c = RunConfig::default();
        c.resolve_field().unwrap();
        assert_eq!((c.q, c.p, c.e, c.poly.clone()), (Some(3), Some(3), Some(1), None));

        let mut c = RunConfig::default();
        c.set("q", "9").unwrap();
        c.resolve_field().unwrap();
        assert_eq!((c.p, c.e, c.poly.clone()), (Some(3), Some(2), Some(vec![1, 0, 1])));

        let mut c = RunConfig::default();
        c.set("p", "2").unwrap();
        c.set("e", "3").unwrap();
        assert_eq!(c.resolve_field().unwrap().order(), 8);

        let mut c = RunConfig::default();
        c.set("q", "6").unwrap();
        assert_eq!(c.resolve_field().unwrap_err().exit_code(), 2);

        let mut c = RunConfig::default();
        c.set("q", "9").unwrap();
        c.set("p", "5").unwrap();
        assert!(matches!(c.resolve_field(), Err(Error::Config(_))));
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.set("tol", "0").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("budget", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
