use std::fmt::Write as _;

use num_complex::Complex;

use super::{Caps, Exponent, TrigTaylorPoly, Wavevector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl<S: Scalar> TrigTaylorPoly<S> {
    /// Plain-text form: header `n R K D`, then `k_1..k_n a_1..a_n re im`
    /// per coefficient, reals at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let caps = self.caps();
        writeln!(
            s,
            "{} {:.16e} {} {}",
            self.n(),
            self.radius().to_f(),
            caps.modes,
            caps.degree
        )
        .unwrap();
        for (k, a, c) in self.terms() {
            for x in k.iter() {
                write!(s, "{x} ").unwrap();
            }
            for x in a.iter() {
                write!(s, "{x} ").unwrap();
            }
            writeln!(s, "{:.16e} {:.16e}", c.re.to_f(), c.im.to_f()).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, 1, "missing header `n R K D`"))?;
        let fields: Vec<(usize, &str)> = tokens(header);
        if fields.len() != 4 {
            return Err(parse_err(hl, 1, "header must be `n R K D`"));
        }
        let n: usize = parse_tok(hl, fields[0])?;
        let radius: f64 = parse_tok(hl, fields[1])?;
        let modes: u32 = parse_tok(hl, fields[2])?;
        let degree: u32 = parse_tok(hl, fields[3])?;
        if n == 0 || radius <= 0.0 {
            return Err(parse_err(hl, 1, "need n >= 1 and R > 0"));
        }
        let mut terms = Vec::new();
        for (ln, line) in lines {
            let toks = tokens(line);
            if toks.len() != 2 * n + 2 {
                return Err(parse_err(
                    ln,
                    1,
                    format!("expected {} fields, found {}", 2 * n + 2, toks.len()),
                ));
            }
            let mut k = Wavevector::new();
            let mut a = Exponent::new();
            for &t in &toks[..n] {
                k.push(parse_tok(ln, t)?);
            }
            for &t in &toks[n..2 * n] {
                a.push(parse_tok(ln, t)?);
            }
            let re: f64 = parse_tok(ln, toks[2 * n])?;
            let im: f64 = parse_tok(ln, toks[2 * n + 1])?;
            terms.push((k, a, Complex::new(S::of(re), S::of(im))));
        }
        Self::from_terms(n, S::of(radius), Caps::new(modes, degree), terms)
    }
}

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_tok<T: std::str::FromStr>(line: usize, (col, tok): (usize, &str)) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, col, format!("cannot parse `{tok}`")))
}
