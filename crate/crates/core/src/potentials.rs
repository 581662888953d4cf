//! One-dimensional potentials and their separable three-dimensional sums.

use serde::{Deserialize, Serialize};

use crate::error::{QhjError, Result};

/// Reduced Planck constant and particle mass. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(QhjError::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(QhjError::InvalidInput(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    /// 2m/ħ², the factor turning (V - E) into φ''/φ.
    pub fn kinetic_factor(&self) -> f64 {
        2.0 * self.mass / (self.hbar * self.hbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    MonotoneCubic,
    Linear,
}

/// Sampled potential on strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl Tabulated {
    pub fn new(x: Vec<f64>, v: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        let mut t = Self { x, v, interpolation, slopes: Vec::new() };
        t.prepare()?;
        Ok(t)
    }

    fn prepare(&mut self) -> Result<()> {
        if self.x.len() != self.v.len() {
            return Err(QhjError::InvalidInput(format!(
                "tabulated potential has {} abscissae and {} values",
                self.x.len(),
                self.v.len()
            )));
        }
        if self.x.len() < 2 {
            return Err(QhjError::InvalidInput("tabulated potential needs at least 2 samples".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QhjError::InvalidInput("tabulated abscissae must be strictly increasing".into()));
        }
        if self.v.iter().any(|v| !v.is_finite()) {
            return Err(QhjError::InvalidInput("tabulated potential values must be finite".into()));
        }
        self.slopes = pchip_slopes(&self.x, &self.v);
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(QhjError::OutOfDomain { x, lo, hi });
        }
        // partition_point gives the first abscissa strictly above x
        let i = self.x.partition_point(|&xi| xi <= x).clamp(1, self.x.len() - 1) - 1;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let (v0, v1) = (self.v[i], self.v[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        Ok(match self.interpolation {
            Interpolation::Linear => v0 + t * (v1 - v0),
            Interpolation::MonotoneCubic => {
                let slopes = if self.slopes.is_empty() {
                    // deserialized without prepare()
                    std::borrow::Cow::Owned(pchip_slopes(&self.x, &self.v))
                } else {
                    std::borrow::Cow::Borrowed(&self.slopes)
                };
                let (d0, d1) = (slopes[i], slopes[i + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1
            }
        })
    }
}

/// Fritsch-Carlson slopes (weighted harmonic mean, as in PCHIP).
fn pchip_slopes(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// A one-dimensional potential, declared in configs as `{kind, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Potential1D {
    Free,
    /// V = m ω² x² / 2
    Harmonic {
        omega: f64,
    },
    /// V = slope · x
    Linear {
        slope: f64,
    },
    Tabulated(Tabulated),
}

impl Potential1D {
    pub fn harmonic(omega: f64) -> Self {
        Potential1D::Harmonic { omega }
    }

    pub fn linear(slope: f64) -> Self {
        Potential1D::Linear { slope }
    }

    pub fn tabulated(x: Vec<f64>, v: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        Ok(Potential1D::Tabulated(Tabulated::new(x, v, interpolation)?))
    }

    /// Rebuilds derived data after deserialization and checks parameters.
    pub fn validate(&mut self) -> Result<()> {
        match self {
            Potential1D::Free => Ok(()),
            Potential1D::Harmonic { omega } if omega.is_finite() => Ok(()),
            Potential1D::Linear { slope } if slope.is_finite() => Ok(()),
            Potential1D::Tabulated(t) => t.prepare(),
            other => Err(QhjError::InvalidInput(format!("non-finite potential parameter in {other:?}"))),
        }
    }

    pub fn eval(&self, x: f64, consts: &PhysicalConstants) -> Result<f64> {
        match self {
            Potential1D::Free => Ok(0.0),
            Potential1D::Harmonic { omega } => Ok(0.5 * consts.mass * omega * omega * x * x),
            Potential1D::Linear { slope } => Ok(slope * x),
            Potential1D::Tabulated(t) => t.eval(x),
        }
    }

    /// Interpolation scheme in use, if any; reported in output metadata.
    pub fn interpolation(&self) -> Option<Interpolation> {
        match self {
            Potential1D::Tabulated(t) => Some(t.interpolation),
            _ => None,
        }
    }
}

pub fn eval_potential_1d(p: &Potential1D, x: f64, consts: &PhysicalConstants) -> Result<f64> {
    p.eval(x, consts)
}

/// V(x, y, z) = Vx(x) + Vy(y) + Vz(z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential3D {
    pub vx: Potential1D,
    pub vy: Potential1D,
    pub vz: Potential1D,
}

impl Potential3D {
    pub fn new(vx: Potential1D, vy: Potential1D, vz: Potential1D) -> Self {
        Self { vx, vy, vz }
    }

    pub fn free() -> Self {
        Self::new(Potential1D::Free, Potential1D::Free, Potential1D::Free)
    }

    pub fn axes(&self) -> [&Potential1D; 3] {
        [&self.vx, &self.vy, &self.vz]
    }

    pub fn eval(&self, point: [f64; 3], consts: &PhysicalConstants) -> Result<f64> {
        Ok(self.vx.eval(point[0], consts)? + self.vy.eval(point[1], consts)? + self.vz.eval(point[2], consts)?)
    }
}

pub fn eval_potential_3d(p: &Potential3D, point: [f64; 3], consts: &PhysicalConstants) -> Result<f64> {
    p.eval(point, consts)
}
