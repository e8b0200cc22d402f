//! User-supplied spectra: piecewise polynomials times a linear phase.
//!
//! One piece per line:
//!
//! ```text
//! piece = lo hi | c0 c1 c2 ... | shift
//! ```
//!
//! On `[lo, hi)` the spectrum is `(c0 + c1 xi + c2 xi^2 + ...) e^{-i shift xi}`
//! and it vanishes off the union of pieces. The phase field may be omitted.

use num_complex::Complex64 as C64;

use super::forms::{Decay, SpectralForm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    pub pieces: Vec<Piece>,
}

impl Piecewise {
    /// Parse the value part of `piece = ...` lines, one piece per entry.
    pub fn parse<S: AsRef<str>>(lines: &[S]) -> Result<Self> {
        let pieces = lines
            .iter()
            .map(|l| parse_piece(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        if pieces.is_empty() {
            return Err(Error::config("piece", "no pieces given"));
        }
        Ok(Self { pieces })
    }

    /// Text form accepted by [`Piecewise::parse`], one entry per piece.
    pub fn to_lines(&self) -> Vec<String> {
        self.pieces
            .iter()
            .map(|p| {
                let c: Vec<String> = p.coeffs.iter().map(|c| format!("{c:?}")).collect();
                format!("{:?} {:?} | {} | {:?}", p.lo, p.hi, c.join(" "), p.shift)
            })
            .collect()
    }
}

fn parse_piece(text: &str) -> Result<Piece> {
    let bad = |m: &str| Error::config("piece", format!("`{text}`: {m}"));
    let parts: Vec<&str> = text.split('|').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(bad("expected `lo hi | coefficients [| shift]`"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(&e.to_string()));
    let bounds: Vec<f64> = parts[0].split_whitespace().map(num).collect::<Result<_>>()?;
    let [lo, hi] = bounds[..] else {
        return Err(bad("interval needs exactly two numbers"));
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad("interval must be finite with lo < hi"));
    }
    let coeffs: Vec<f64> = parts[1].split_whitespace().map(num).collect::<Result<_>>()?;
    if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(bad("need at least one finite coefficient"));
    }
    let shift = match parts.get(2) {
        Some(s) if !s.is_empty() => num(s)?,
        _ => 0.0,
    };
    Ok(Piece {
        lo,
        hi,
        coeffs,
        shift,
    })
}

impl SpectralForm for Piecewise {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let x = xi[0];
        self.pieces
            .iter()
            .filter(|p| x >= p.lo && x < p.hi)
            .map(|p| {
                let poly = p.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
                C64::from_polar(1.0, -p.shift * x) * poly
            })
            .sum()
    }

    fn decay(&self) -> Decay {
        let lo = self.pieces.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
        let hi = self.pieces.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
        let reach = lo.abs().max(hi.abs()).max(1.0);
        let sup: f64 = self
            .pieces
            .iter()
            .map(|p| {
                p.coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c.abs() * reach.powi(j as i32))
                    .sum::<f64>()
            })
            .sum();
        Decay::Compact {
            lo: vec![lo],
            hi: vec![hi],
            sup,
        }
    }

    fn note(&self) -> String {
        format!("piecewise polynomial, {} pieces", self.pieces.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let p = Piecewise::parse(&["-1 1 | 1 0 -1 | 0.5", "2 3 | 2"]).unwrap();
        let v = p.eval(&[0.5]);
        let expect = C64::from_polar(0.75, -0.25);
        assert!((v - expect).norm() < 1e-15);
        assert_eq!(p.eval(&[2.5]), C64::new(2.0, 0.0));
        assert_eq!(p.eval(&[1.5]), C64::new(0.0, 0.0));
        assert_eq!(p.eval(&[1.0]), C64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_malformed() {
        assert!(Piecewise::parse(&["1 0 | 1"]).is_err());
        assert!(Piecewise::parse(&["0 1"]).is_err());
        assert!(Piecewise::parse(&["0 1 | x"]).is_err());
        assert!(Piecewise::parse::<&str>(&[]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = Piecewise::parse(&["-3.25 0.1 | 1e-3 2 | -0.7"]).unwrap();
        let q = Piecewise::parse(&p.to_lines()).unwrap();
        assert_eq!(p, q);
    }
}
