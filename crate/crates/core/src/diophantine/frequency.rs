//! Frequencies as exact rational combinations of declared irrationals.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A declared constant with a 60-digit decimal expansion.
#[derive(Debug)]
pub struct Constant {
    pub name: &'static str,
    pub decimal: &'static str,
}

/// Constants assumed linearly independent over Q. Index 0 is the unit.
pub const CONSTANTS: &[Constant] = &[
    Constant { name: "1", decimal: "1" },
    Constant { name: "sqrt2", decimal: "1.41421356237309504880168872420969807856967187537694807317668" },
    Constant { name: "sqrt3", decimal: "1.73205080756887729352744634150587236694280525381038062805581" },
    Constant { name: "sqrt5", decimal: "2.23606797749978969640917366873127623544061835961152572427089" },
    Constant { name: "sqrt6", decimal: "2.44948974278317809819728407470589139196594748065667012843269" },
    Constant { name: "sqrt7", decimal: "2.64575131106459059050161575363926042571025918308245018036833" },
    Constant { name: "cbrt2", decimal: "1.25992104989487316476721060727822835057025146470150798008198" },
    Constant { name: "cbrt4", decimal: "1.58740105196819947475170563927230826039149332789985300980829" },
    Constant { name: "pi", decimal: "3.14159265358979323846264338327950288419716939937510582097494" },
];

fn decimal_to_rational(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).expect("valid decimal literal");
    let den = num_traits::pow(BigInt::from(10), frac.len());
    BigRational::new(num, den)
}

fn constant_f64(j: usize) -> f64 {
    CONSTANTS[j].decimal.parse().expect("valid decimal literal")
}

/// `omega_i = sum_j entries[i][j] * CONSTANTS[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactFrequency {
    entries: Vec<Vec<BigRational>>,
    values: Vec<f64>,
    /// Per used constant: integer column `N_j` and `c_j / L_j`, so that
    /// `k . omega = sum_j (k . N_j) c_j / L_j` with exact integer sums.
    columns: Vec<(Vec<i128>, f64)>,
}

impl ExactFrequency {
    pub fn new(entries: Vec<Vec<BigRational>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::rejected("frequency has no entries"));
        }
        let nc = CONSTANTS.len();
        let mut entries = entries;
        for row in entries.iter_mut() {
            if row.len() > nc {
                return Err(Error::rejected("too many constant columns"));
            }
            row.resize(nc, BigRational::zero());
        }
        if entries.iter().all(|r| r.iter().all(Zero::is_zero)) {
            return Err(Error::rejected("frequency must be nonzero"));
        }
        let values = entries.iter().map(|r| combo_f64(r)).collect();
        let mut columns = Vec::new();
        for j in 0..nc {
            if entries.iter().all(|r| r[j].is_zero()) {
                continue;
            }
            let lcm = entries
                .iter()
                .fold(BigInt::from(1), |l, r| num_integer::Integer::lcm(&l, r[j].denom()));
            let ints = entries
                .iter()
                .map(|r| (r[j].numer() * (&lcm / r[j].denom())).to_i128())
                .collect::<Option<Vec<i128>>>()
                .ok_or_else(|| Error::rejected("frequency entries are too large"))?;
            let scale = constant_f64(j) / lcm.to_f64().unwrap_or(f64::INFINITY);
            columns.push((ints, scale));
        }
        Ok(ExactFrequency {
            entries,
            values,
            columns,
        })
    }

    /// Purely rational frequency.
    pub fn rational(v: &[Ratio<i64>]) -> Result<Self> {
        Self::new(
            v.iter()
                .map(|x| vec![BigRational::new((*x.numer()).into(), (*x.denom()).into())])
                .collect(),
        )
    }

    pub fn integer(v: &[i64]) -> Result<Self> {
        Self::rational(&v.iter().map(|&x| Ratio::from_integer(x)).collect::<Vec<_>>())
    }

    /// `(1, (1 + sqrt5)/2)`.
    pub fn golden() -> Self {
        "1, (1+sqrt5)/2".parse().expect("literal parses")
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_rational(&self) -> bool {
        self.entries
            .iter()
            .all(|r| r.iter().skip(1).all(Zero::is_zero))
    }

    /// Rational entries when the frequency is rational.
    pub fn rational_entries(&self) -> Option<Vec<BigRational>> {
        self.is_rational()
            .then(|| self.entries.iter().map(|r| r[0].clone()).collect())
    }

    /// Exact coefficients of `k . omega` on the declared constants.
    pub fn dot_coeffs(&self, k: &[i64]) -> Vec<BigRational> {
        let nc = CONSTANTS.len();
        let mut out = vec![BigRational::zero(); nc];
        for (ki, row) in k.iter().zip(&self.entries) {
            if *ki == 0 {
                continue;
            }
            let kb = BigRational::from_integer(BigInt::from(*ki));
            for j in 0..nc {
                if !row[j].is_zero() {
                    out[j] += &kb * &row[j];
                }
            }
        }
        out
    }

    /// Exact resonance test `k . omega = 0`.
    pub fn is_resonant(&self, k: &[i64]) -> bool {
        self.dot_coeffs(k).iter().all(Zero::is_zero)
    }

    pub fn is_resonant_i32(&self, k: &[i32]) -> bool {
        let k: Vec<i64> = k.iter().map(|&x| x as i64).collect();
        self.is_resonant(&k)
    }

    /// `k . omega` in floating point, summed per constant to limit cancellation.
    pub fn dot_f64(&self, k: &[i64]) -> f64 {
        self.columns
            .iter()
            .map(|(col, scale)| {
                let s: i128 = col.iter().zip(k).map(|(a, &b)| a * b as i128).sum();
                s as f64 * scale
            })
            .sum()
    }

    /// `|k . omega|` rounded once from the 60-digit value; the canonical
    /// float for reported small divisors.
    pub fn abs_dot(&self, k: &[i64]) -> f64 {
        self.dot_high_precision(k).abs().to_f64().unwrap_or(f64::NAN)
    }

    /// `k . omega` with the 60-digit constant values, as an exact rational.
    pub fn dot_high_precision(&self, k: &[i64]) -> BigRational {
        self.dot_coeffs(k)
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| c * decimal_to_rational(CONSTANTS[j].decimal))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Order of `|k1 . omega|` against `|k2 . omega|`; near ties are settled
    /// with the high-precision values.
    pub fn cmp_abs_dot(&self, k1: &[i64], k2: &[i64]) -> Ordering {
        let a = self.dot_f64(k1).abs();
        let b = self.dot_f64(k2).abs();
        if (a - b).abs() > 1e-9 * a.max(b) {
            return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        }
        let ea = self.dot_high_precision(k1).abs();
        let eb = self.dot_high_precision(k2).abs();
        ea.cmp(&eb)
    }

    /// Human-readable form, e.g. `1, 1/2 + 1/2*sqrt5`.
    pub fn describe(&self) -> String {
        self.entries
            .iter()
            .map(|r| describe_combo(r))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for ExactFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn combo_f64(c: &[BigRational]) -> f64 {
    let mut acc = 0.0;
    for (j, cj) in c.iter().enumerate() {
        if !cj.is_zero() {
            acc += ratio_to_f64(cj) * constant_f64(j);
        }
    }
    acc
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

fn describe_combo(c: &[BigRational]) -> String {
    let mut parts = Vec::new();
    for (j, cj) in c.iter().enumerate() {
        if cj.is_zero() {
            continue;
        }
        if j == 0 {
            parts.push(cj.to_string());
        } else if cj.is_one() {
            parts.push(CONSTANTS[j].name.to_string());
        } else {
            parts.push(format!("{}*{}", cj, CONSTANTS[j].name));
        }
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ").replace("+ -", "- ")
    }
}

impl FromStr for ExactFrequency {
    type Err = Error;

    /// Parse a comma-separated list of linear expressions over the declared
    /// constants, e.g. `"1, (1+sqrt5)/2"`. `phi` abbreviates `(1+sqrt5)/2`.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let mut rows = Vec::new();
        loop {
            rows.push(p.expr()?);
            p.skip_ws();
            match p.peek() {
                Some(',') => p.pos += 1,
                None => break,
                Some(c) => return Err(p.err(format!("unexpected `{c}`"))),
            }
        }
        ExactFrequency::new(rows)
    }
}

/// Linear combination of the declared constants.
type Combo = Vec<BigRational>;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            column: self.src[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<Combo> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    add_into(&mut acc, &t, false);
                }
                Some('-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    add_into(&mut acc, &t, true);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Combo> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let start = self.pos;
                    let f = self.factor()?;
                    acc = match (scalar_of(&acc), scalar_of(&f)) {
                        (Some(a), _) => scale(&f, &a),
                        (_, Some(b)) => scale(&acc, &b),
                        _ => {
                            self.pos = start;
                            return Err(self.err("product of two irrational terms is not linear"));
                        }
                    };
                }
                Some('/') => {
                    self.pos += 1;
                    let start = self.pos;
                    let f = self.factor()?;
                    match scalar_of(&f) {
                        Some(b) if !b.is_zero() => acc = scale(&acc, &b.recip()),
                        Some(_) => {
                            self.pos = start;
                            return Err(self.err("division by zero"));
                        }
                        None => {
                            self.pos = start;
                            return Err(self.err("division by an irrational term is not linear"));
                        }
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Combo> {
        self.skip_ws();
        let nc = CONSTANTS.len();
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                let f = self.factor()?;
                Ok(scale(&f, &-BigRational::one()))
            }
            Some('+') => {
                self.pos += 1;
                self.factor()
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                let lit = &self.src[start..self.pos];
                if lit.matches('.').count() > 1 || lit == "." {
                    self.pos = start;
                    return Err(self.err(format!("bad number `{lit}`")));
                }
                let mut out = vec![BigRational::zero(); nc];
                out[0] = decimal_to_rational(lit);
                Ok(out)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                let mut out = vec![BigRational::zero(); nc];
                if name == "phi" {
                    let half = BigRational::new(1.into(), 2.into());
                    out[0] = half.clone();
                    out[3] = half;
                    return Ok(out);
                }
                match CONSTANTS.iter().position(|c| c.name == name) {
                    Some(j) if j > 0 => {
                        out[j] = BigRational::one();
                        Ok(out)
                    }
                    _ => {
                        self.pos = start;
                        Err(self.err(format!("unknown constant `{name}`")))
                    }
                }
            }
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn scalar_of(c: &Combo) -> Option<BigRational> {
    c.iter().skip(1).all(Zero::is_zero).then(|| c[0].clone())
}

fn scale(c: &Combo, s: &BigRational) -> Combo {
    c.iter().map(|x| x * s).collect()
}

fn add_into(acc: &mut Combo, t: &Combo, negate: bool) {
    for (a, b) in acc.iter_mut().zip(t) {
        if negate {
            *a -= b;
        } else {
            *a += b;
        }
    }
}
