//! Run configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [system]
//! system = shannon-scaling
//! dilation = 2
//! [numerics]
//! grid = 1024
//! ```
//!
//! Every key may appear in any order inside its section. `piece` may repeat;
//! all other keys are single-valued and a repeat is an error.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gramian::CertifyMode;
use crate::lattice::DilationMatrix;
use crate::trace::DEFAULT_SEED;

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
            other => Err(Error::config("output.format", format!("expected json or csv, got `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: Option<String>,
    pub wavelet: Option<String>,
    pub scaling: Option<String>,
    /// Row-major integer matrix.
    pub dilation: Vec<i64>,
    /// Lines of a user piecewise spectrum, selectable as `piecewise`.
    pub pieces: Vec<String>,
    pub semiorthogonal: bool,
    pub quasi_orthogonalize: bool,
    pub unchecked: bool,
    pub perturb: f64,
    /// `identity`, `delta:<k>` or `random:<rank>` for an extra trace profile.
    pub operator: Option<String>,

    pub grid: usize,
    pub window: usize,
    pub depth: usize,
    pub s_range: usize,
    pub seed: u64,

    pub tol: f64,
    pub rank_tol: f64,
    pub tail_tol: f64,
    pub ntf_mode: String,

    pub out: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: None,
            wavelet: None,
            scaling: None,
            dilation: vec![2],
            pieces: Vec::new(),
            semiorthogonal: true,
            quasi_orthogonalize: false,
            unchecked: false,
            perturb: 0.0,
            operator: None,
            grid: 1024,
            window: 128,
            depth: 30,
            s_range: 8,
            seed: DEFAULT_SEED,
            tol: 1e-9,
            rank_tol: 1e-8,
            tail_tol: 1e-6,
            ntf_mode: "projection".into(),
            out: None,
            format: Format::Json,
            timing: false,
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "system",
        &[
            "system",
            "wavelet",
            "scaling",
            "dilation",
            "piece",
            "semiorthogonal",
            "quasi_orthogonalize",
            "unchecked",
            "perturb",
            "operator",
        ],
    ),
    ("numerics", &["grid", "window", "depth", "s_range", "seed"]),
    ("tolerance", &["identity", "rank", "tail", "ntf_mode"]),
    ("output", &["out", "format", "timing"]),
];

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(field, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_count(field: &str, v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::config(field, format!("expected a positive integer, got `{v}`"))),
    }
}

fn parse_unit(field: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x < 1.0 => Ok(x),
        _ => Err(Error::config(field, format!("expected a number in (0, 1), got `{v}`"))),
    }
}

pub fn parse_seed(v: &str) -> Result<u64> {
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|_| Error::config("numerics.seed", format!("expected an integer, got `{v}`")))
}

pub fn parse_dilation(v: &str) -> Result<Vec<i64>> {
    let entries = v
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::config("system.dilation", format!("expected comma separated integers, got `{v}`")))?;
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != entries.len() {
        return Err(Error::config("system.dilation", format!("{} entries do not form a square matrix", entries.len())));
    }
    Ok(entries)
}

fn nonempty(field: &str, v: &str) -> Result<String> {
    if v.is_empty() {
        Err(Error::config(field, "empty value"))
    } else {
        Ok(v.to_string())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut seen: Vec<String> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .map(|(s, _)| *s)
                        .find(|s| *s == name)
                        .ok_or_else(|| Error::config(name, format!("line {}: unknown section", no + 1)))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("line {}: expected `key = value`", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| Error::config(key, format!("line {}: key outside a section", no + 1)))?;
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let field = format!("{sec}.{key}");
            if !keys.contains(&key) {
                return Err(Error::config(field, "unknown key"));
            }
            if key != "piece" {
                if seen.contains(&field) {
                    return Err(Error::config(field, "given twice"));
                }
                seen.push(field.clone());
            }
            cfg.set(&field, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, field: &str, v: &str) -> Result<()> {
        match field {
            "system.system" => self.system = Some(nonempty(field, v)?),
            "system.wavelet" => self.wavelet = Some(nonempty(field, v)?),
            "system.scaling" => self.scaling = Some(nonempty(field, v)?),
            "system.dilation" => self.dilation = parse_dilation(v)?,
            "system.piece" => self.pieces.push(nonempty(field, v)?),
            "system.semiorthogonal" => self.semiorthogonal = parse_bool(field, v)?,
            "system.quasi_orthogonalize" => self.quasi_orthogonalize = parse_bool(field, v)?,
            "system.unchecked" => self.unchecked = parse_bool(field, v)?,
            "system.perturb" => {
                self.perturb = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| Error::config(field, format!("expected a nonnegative number, got `{v}`")))?
            }
            "system.operator" => self.operator = Some(nonempty(field, v)?),
            "numerics.grid" => self.grid = parse_count(field, v)?,
            "numerics.window" => self.window = parse_count(field, v)?,
            "numerics.depth" => self.depth = parse_count(field, v)?,
            "numerics.s_range" => self.s_range = parse_count(field, v)?,
            "numerics.seed" => self.seed = parse_seed(v)?,
            "tolerance.identity" => self.tol = parse_unit(field, v)?,
            "tolerance.rank" => self.rank_tol = parse_unit(field, v)?,
            "tolerance.tail" => self.tail_tol = parse_unit(field, v)?,
            "tolerance.ntf_mode" => self.ntf_mode = nonempty(field, v)?,
            "output.out" => self.out = Some(PathBuf::from(nonempty(field, v)?)),
            "output.format" => self.format = v.parse()?,
            "output.timing" => self.timing = parse_bool(field, v)?,
            _ => return Err(Error::config(field, "unknown key")),
        }
        Ok(())
    }

    /// Checks that span several fields, also run after flag overrides.
    pub fn validate(&self) -> Result<()> {
        DilationMatrix::new((self.dilation.len() as f64).sqrt() as usize, self.dilation.clone())
            .map_err(|e| Error::config("system.dilation", e.to_string()))?;
        CertifyMode::parse(&self.ntf_mode).map_err(|e| Error::config("tolerance.ntf_mode", e.to_string()))?;
        for (field, v) in [
            ("tolerance.identity", self.tol),
            ("tolerance.rank", self.rank_tol),
            ("tolerance.tail", self.tail_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(field, format!("expected a number in (0, 1), got {v}")));
            }
        }
        for (field, v) in [
            ("numerics.grid", self.grid),
            ("numerics.window", self.window),
            ("numerics.depth", self.depth),
            ("numerics.s_range", self.s_range),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(self.perturb.is_finite() && self.perturb >= 0.0) {
            return Err(Error::config("system.perturb", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn dilation_matrix(&self) -> Result<DilationMatrix> {
        DilationMatrix::new((self.dilation.len() as f64).sqrt() as usize, self.dilation.clone())
    }

    /// Text that [`RunConfig::parse`] reads back to an equal value.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[system]\n");
        let kv = |out: &mut String, k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        for (k, v) in [("system", &self.system), ("wavelet", &self.wavelet), ("scaling", &self.scaling)] {
            if let Some(v) = v {
                kv(&mut out, k, v.clone());
            }
        }
        let d: Vec<String> = self.dilation.iter().map(i64::to_string).collect();
        kv(&mut out, "dilation", d.join(","));
        for p in &self.pieces {
            kv(&mut out, "piece", p.clone());
        }
        kv(&mut out, "semiorthogonal", self.semiorthogonal.to_string());
        kv(&mut out, "quasi_orthogonalize", self.quasi_orthogonalize.to_string());
        kv(&mut out, "unchecked", self.unchecked.to_string());
        kv(&mut out, "perturb", format!("{:?}", self.perturb));
        if let Some(op) = &self.operator {
            kv(&mut out, "operator", op.clone());
        }
        out.push_str("\n[numerics]\n");
        kv(&mut out, "grid", self.grid.to_string());
        kv(&mut out, "window", self.window.to_string());
        kv(&mut out, "depth", self.depth.to_string());
        kv(&mut out, "s_range", self.s_range.to_string());
        kv(&mut out, "seed", format!("{:#x}", self.seed));
        out.push_str("\n[tolerance]\n");
        kv(&mut out, "identity", format!("{:?}", self.tol));
        kv(&mut out, "rank", format!("{:?}", self.rank_tol));
        kv(&mut out, "tail", format!("{:?}", self.tail_tol));
        kv(&mut out, "ntf_mode", self.ntf_mode.clone());
        out.push_str("\n[output]\n");
        if let Some(p) = &self.out {
            kv(&mut out, "out", p.display().to_string());
        }
        kv(&mut out, "format", self.format.to_string());
        kv(&mut out, "timing", self.timing.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.seed, 0x5EED);
    }

    #[test]
    fn parses_sections() {
        let text = "# run\n[system]\nsystem = bspline:2\ndilation = 1,1,1,-1\npiece = 0 1 | 1\npiece = 1 2 | 0 1\n\n[numerics]\nseed = 1234\ngrid = 64\n[output]\nformat = csv\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.system.as_deref(), Some("bspline:2"));
        assert_eq!(c.dilation, vec![1, 1, 1, -1]);
        assert_eq!(c.pieces.len(), 2);
        assert_eq!((c.seed, c.grid, c.format), (1234, 64, Format::Csv));
    }

    #[test]
    fn errors_name_the_field() {
        let field = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("[numerics]\ngrid = 0\n"), "numerics.grid");
        assert_eq!(field("[numerics]\ngrid = x\n"), "numerics.grid");
        assert_eq!(field("[tolerance]\nidentity = 2\n"), "tolerance.identity");
        assert_eq!(field("[system]\ndilation = 1,2,3\n"), "system.dilation");
        assert_eq!(field("[system]\ndilation = 0\n"), "system.dilation");
        assert_eq!(field("[system]\ncolour = red\n"), "system.colour");
        assert_eq!(field("[numerics]\ngrid = 4\ngrid = 8\n"), "numerics.grid");
        assert_eq!(field("grid = 4\n"), "grid");
        assert_eq!(field("[nowhere]\n"), "nowhere");
        assert_eq!(field("[tolerance]\nntf_mode = guess\n"), "tolerance.ntf_mode");
    }
}
