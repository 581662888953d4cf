//! Exact polynomials in γ1..γ6 with integer coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponents of γ1..γ6.
pub type Monomial = [u8; 6];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, i64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.insert([0; 6], c);
        p
    }

    /// γ_{index+1}.
    pub fn gamma(index: usize) -> Self {
        let mut m = [0; 6];
        m[index] = 1;
        let mut p = Self::zero();
        p.insert(m, 1);
        p
    }

    fn insert(&mut self, m: Monomial, c: i64) {
        let entry = self.terms.entry(m).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn coefficient(&self, m: &Monomial) -> i64 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &i64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, g: &[f64; 6]) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| c as f64 * m.iter().zip(g).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.insert(*m, c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = *ma;
                for (e, b) in m.iter_mut().zip(mb) {
                    *e += b;
                }
                out.insert(m, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // higher total degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|(m, _)| std::cmp::Reverse(m.iter().map(|&e| e as u32).sum::<u32>()));
        for (k, (m, &c)) in terms.into_iter().enumerate() {
            let vars: String = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("g{}", i + 1) } else { format!("g{}^{}", i + 1, e) })
                .collect::<Vec<_>>()
                .join("*");
            let mag = c.unsigned_abs();
            let sign = if c < 0 { "-" } else { "+" };
            if k == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match (vars.is_empty(), mag) {
                (true, _) => write!(f, "{mag}")?,
                (false, 1) => write!(f, "{vars}")?,
                (false, _) => write!(f, "{mag}*{vars}")?,
            }
        }
        Ok(())
    }
}
