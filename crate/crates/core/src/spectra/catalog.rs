//! Built-in systems with exactly known spectra.

use std::f64::consts::PI;
use std::sync::Arc;

use super::forms::{BSpline, HaarWavelet, Indicator, MeyerScaling, MeyerWavelet, SpectralForm, Tensor, Zero};
use super::{GeneratorSpectrum, GeneratorSystem, Role};
use crate::error::{Error, Result};

/// `(selector, description)` for every catalog entry.
pub fn catalog_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("shannon-scaling", "indicator of [-pi, pi); orthonormal translates"),
        ("shannon-wavelet", "indicator of [-2pi, -pi) u [pi, 2pi)"),
        ("haar-scaling", "box on [0, 1), same as bspline:1"),
        ("haar-wavelet", "chi[0,1/2) - chi[1/2,1)"),
        ("bspline:<m>", "cardinal B-spline of order m >= 1 on [0, m]"),
        ("meyer-scaling", "Meyer scaling function with C^3 polynomial ramp"),
        ("meyer-wavelet", "Meyer wavelet with C^3 polynomial ramp"),
        ("tensor(<a>,<b>,...)", "separable product of one-dimensional entries"),
        ("zero[:<n>]", "the zero spectrum in dimension n (default 1)"),
    ]
}

/// Look up a one-generator system by name and `key=value` parameters.
pub fn catalog_get(name: &str, params: &[(String, String)]) -> Result<GeneratorSystem> {
    let param = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let form: Arc<dyn SpectralForm> = match name {
        "shannon-scaling" => Arc::new(Indicator {
            intervals: vec![(-PI, PI)],
        }),
        "shannon-wavelet" => Arc::new(Indicator {
            intervals: vec![(-2.0 * PI, -PI), (PI, 2.0 * PI)],
        }),
        "haar-scaling" => Arc::new(BSpline { order: 1 }),
        "haar-wavelet" => Arc::new(HaarWavelet),
        "meyer-scaling" => Arc::new(MeyerScaling),
        "meyer-wavelet" => Arc::new(MeyerWavelet),
        "bspline" => {
            let order = parse_count(param("order").unwrap_or("2"), "bspline order")?;
            if order > 12 {
                return Err(Error::InvalidParameter(format!("bspline order {order} exceeds 12")));
            }
            Arc::new(BSpline { order: order as u32 })
        }
        "zero" => {
            let dim = parse_count(param("dim").unwrap_or("1"), "zero dimension")?;
            Arc::new(Zero { dim })
        }
        "tensor" => {
            let factors = param("factors")
                .ok_or_else(|| Error::InvalidParameter("tensor needs factors".into()))?;
            return parse_selector(&format!("tensor({factors})"));
        }
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    let label = match name {
        "bspline" => format!("bspline:{}", param("order").unwrap_or("2")),
        "zero" => match param("dim") {
            Some(d) if d != "1" => format!("zero:{d}"),
            _ => "zero".into(),
        },
        _ => name.to_string(),
    };
    Ok(GeneratorSystem::single(GeneratorSpectrum::new(label, form)).with_role(Role::Unverified))
}

fn parse_count(text: &str, what: &str) -> Result<usize> {
    match text.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(Error::InvalidParameter(format!("{what} must be a positive integer, got `{text}`"))),
        Ok(v) => Ok(v),
    }
}

/// Parse a selector such as `bspline:2`, `tensor(shannon-scaling,haar-wavelet)`
/// or `shannon-scaling+shannon-wavelet` (one generator per `+` term).
pub fn parse_selector(text: &str) -> Result<GeneratorSystem> {
    parse_selector_with(text, &|_| None)
}

/// [`parse_selector`] with extra named terms resolved by `extra` first.
pub fn parse_selector_with(text: &str, extra: &dyn Fn(&str) -> Option<GeneratorSystem>) -> Result<GeneratorSystem> {
    let terms = split_top(text.trim(), '+')?;
    let mut sys: Option<GeneratorSystem> = None;
    for t in terms {
        let t = t.trim();
        let part = match extra(t) {
            Some(s) => s,
            None => parse_term(t)?,
        };
        sys = Some(match sys {
            None => part,
            Some(s) => s.union(&part)?,
        });
    }
    sys.ok_or_else(|| Error::UnknownSystem(text.to_string()))
}

fn parse_term(t: &str) -> Result<GeneratorSystem> {
    if t.is_empty() {
        return Err(Error::UnknownSystem(String::new()));
    }
    if let Some(inner) = t.strip_prefix("tensor(").and_then(|r| r.strip_suffix(')')) {
        let mut factors = Vec::new();
        for f in split_top(inner, ',')? {
            let s = parse_term(f.trim())?;
            if s.dim() != 1 || s.len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "tensor factor `{f}` must be a single one-dimensional generator"
                )));
            }
            factors.push(s.generators()[0].clone());
        }
        if factors.is_empty() {
            return Err(Error::InvalidParameter("tensor needs at least one factor".into()));
        }
        let names: Vec<&str> = factors.iter().map(|f| f.name()).collect();
        let label = format!("tensor({})", names.join(","));
        let form = Tensor {
            factors: factors.iter().map(|f| f.form().clone()).collect(),
        };
        return Ok(GeneratorSystem::single(GeneratorSpectrum::new(label, Arc::new(form))));
    }
    let (name, arg) = match t.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (t, None),
    };
    let params = match (name, arg) {
        ("bspline", Some(a)) => vec![("order".to_string(), a.to_string())],
        ("zero", Some(a)) => vec![("dim".to_string(), a.to_string())],
        (_, Some(_)) => {
            return Err(Error::InvalidParameter(format!("`{name}` takes no parameter")));
        }
        (_, None) => Vec::new(),
    };
    catalog_get(name, &params)
}

/// Split at `sep` outside parentheses.
fn split_top(text: &str, sep: char) -> Result<Vec<&str>> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::InvalidParameter(format!("unbalanced `)` in `{text}`")));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::InvalidParameter(format!("unbalanced `(` in `{text}`")));
    }
    out.push(&text[start..]);
    Ok(out)
}
