//! One-dimensional reduced actions S0 = ħ·arctan(N/D) + ħl built from a basis
//! pair, with N and D real combinations of the two solutions.
//!
//! The ratio form uses (N, D) = (φ1 + νφ2, μφ1 + φ2). The slope form
//! ħ·arctan(μφ1/φ2 + ν) is evaluated on the pair (μφ1 + νφ2, φ2) so that zeros
//! of φ2 are ordinary points. Angles always come from `atan2(N, D)` and are
//! unwrapped along the grid, so S0 is continuous and starts on the principal
//! arctangent branch at the first node.
//!
//! Derivatives are closed-form: with Q = N² + D², S0' = -ħ·det·W/Q where det
//! is the determinant of the coefficient matrix, and every φ'' appearing in
//! Q' and Q'' is replaced through the Schrödinger equation, φ'' = g φ with
//! g = (2m/ħ²)(V - E). Only φ and φ' samples are consumed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{QhjError, Result};
use crate::numerics::{fmt_f64, principal_shift, unwrap_angles, SCALE_FLOOR};
use crate::potentials::{PhysicalConstants, Potential1D};
use crate::schrodinger::{AxisState, BasisPair};

/// Guard on the coefficient determinant (|μν - 1| or |μ|).
pub const DEGENERACY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActionForm {
    /// ħ·arctan[(φ1 + νφ2)/(μφ1 + φ2)] + ħl
    #[default]
    Ratio,
    /// ħ·arctan(μφ1/φ2 + ν) + ħl
    Slope,
}

/// Integration constants (μ, ν, l) of a one-dimensional reduced action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub mu: f64,
    pub nu: f64,
    /// Additive constant in units of ħ.
    pub l: f64,
    #[serde(default)]
    pub form: ActionForm,
}

impl ActionParams {
    pub fn new(mu: f64, nu: f64, l: f64, form: ActionForm) -> Result<Self> {
        let p = Self { mu, nu, l, form };
        p.validate()?;
        Ok(p)
    }

    pub fn ratio(mu: f64, nu: f64, l: f64) -> Result<Self> {
        Self::new(mu, nu, l, ActionForm::Ratio)
    }

    pub fn slope(mu: f64, nu: f64, l: f64) -> Result<Self> {
        Self::new(mu, nu, l, ActionForm::Slope)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.nu.is_finite() && self.l.is_finite()) {
            return Err(QhjError::InvalidInput(format!("non-finite action parameters {self:?}")));
        }
        match self.form {
            ActionForm::Ratio if (self.mu * self.nu - 1.0).abs() <= DEGENERACY_GUARD => {
                Err(QhjError::InvalidInput(format!(
                    "non-stationarity condition mu*nu != 1 violated: mu*nu = {} (the action would be constant)",
                    self.mu * self.nu
                )))
            }
            ActionForm::Slope if self.mu.abs() <= DEGENERACY_GUARD => Err(QhjError::InvalidInput(format!(
                "non-stationarity condition mu != 0 violated for the slope form: mu = {}",
                self.mu
            ))),
            _ => Ok(()),
        }
    }

    /// Coefficients ((n1, n2), (d1, d2)) with N = n1φ1 + n2φ2, D = d1φ1 + d2φ2.
    pub fn coefficients(&self) -> ([f64; 2], [f64; 2]) {
        match self.form {
            ActionForm::Ratio => ([1.0, self.nu], [self.mu, 1.0]),
            ActionForm::Slope => ([self.mu, self.nu], [0.0, 1.0]),
        }
    }

    /// n1·d2 - n2·d1; S0' carries the factor -det·W.
    pub fn determinant(&self) -> f64 {
        let (n, d) = self.coefficients();
        n[0] * d[1] - n[1] * d[0]
    }
}

/// Floyd's constants (a, b, c, K) with a > 0, b > 0, ab > c²/4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloydParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Additive constant in action units.
    pub k: f64,
}

impl FloydParams {
    pub fn new(a: f64, b: f64, c: f64, k: f64) -> Result<Self> {
        let f = Self { a, b, c, k };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a * self.b > self.c * self.c / 4.0) {
            return Err(QhjError::InvalidInput(format!(
                "Floyd constants need a > 0, b > 0, ab > c^2/4; got a = {}, b = {}, c = {}",
                self.a, self.b, self.c
            )));
        }
        if !self.k.is_finite() {
            return Err(QhjError::InvalidInput("Floyd additive constant must be finite".into()));
        }
        Ok(())
    }

    /// ab - c²/4
    pub fn discriminant(&self) -> f64 {
        self.a * self.b - self.c * self.c / 4.0
    }

    /// |W| required for the scaled basis: W² = 2m/[ħ²(ab - c²/4)].
    pub fn wronskian_magnitude(&self, consts: &PhysicalConstants) -> f64 {
        (2.0 * consts.mass / (consts.hbar * consts.hbar * self.discriminant())).sqrt()
    }
}

/// S0 and its first three spatial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDerivatives {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

fn combine(c: [f64; 2], a: f64, b: f64) -> f64 {
    c[0] * a + c[1] * b
}

/// (N, N', D, D') at a basis state.
pub fn numerator_denominator(params: &ActionParams, s: &AxisState) -> (f64, f64, f64, f64) {
    let (n, d) = params.coefficients();
    (combine(n, s.phi1, s.phi2), combine(n, s.dphi1, s.dphi2), combine(d, s.phi1, s.phi2), combine(d, s.dphi1, s.dphi2))
}

/// Closed-form (S0', S0'', S0''') from a basis state, the pair's Wronskian
/// and g = (2m/ħ²)(V - E).
pub fn slope_cascade(params: &ActionParams, s: &AxisState, wronskian: f64, g: f64, hbar: f64) -> (f64, f64, f64) {
    let (n, dn, d, dd) = numerator_denominator(params, s);
    let a = -hbar * params.determinant() * wronskian;
    let q = n * n + d * d;
    let q1 = 2.0 * (n * dn + d * dd);
    let q2 = 2.0 * (dn * dn + dd * dd) + 2.0 * g * q;
    let s1 = a / q;
    let s2 = -a * q1 / (q * q);
    let s3 = a * (2.0 * q1 * q1 / (q * q * q) - q2 / (q * q));
    (s1, s2, s3)
}

/// Continuous S0 over the whole grid.
pub fn action_profile(params: &ActionParams, pair: &BasisPair) -> Result<Vec<f64>> {
    params.validate()?;
    let hbar = pair.consts.hbar;
    let mut raw = Vec::with_capacity(pair.len());
    for i in 0..pair.len() {
        let (n, _, d, _) = numerator_denominator(params, &pair.state(i));
        if n == 0.0 && d == 0.0 {
            return Err(QhjError::SingularSlope { x: pair.grid.x(i) });
        }
        raw.push(n.atan2(d));
    }
    let unwrapped = unwrap_angles(&raw);
    let shift = principal_shift(unwrapped[0]);
    Ok(unwrapped.iter().map(|a| hbar * (a + shift) + hbar * params.l).collect())
}

/// S0 at grid node `x`.
pub fn eval_reduced_action(params: &ActionParams, pair: &BasisPair, x: f64) -> Result<f64> {
    let i = pair.grid.index_of(x)?;
    Ok(action_profile(params, pair)?[i])
}

/// S0 and its derivatives at every grid node.
pub fn cascade_profile(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<ActionDerivatives>> {
    let s0 = action_profile(params, pair)?;
    let kf = consts.kinetic_factor();
    (0..pair.len())
        .map(|i| {
            let g = kf * (p.eval(pair.grid.x(i), consts)? - energy);
            let (s1, s2, s3) = slope_cascade(params, &pair.state(i), pair.wronskian, g, consts.hbar);
            Ok(ActionDerivatives { s0: s0[i], s1, s2, s3 })
        })
        .collect()
}

/// S0 and its derivatives at grid node `x`.
pub fn derivative_cascade(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    x: f64,
    consts: &PhysicalConstants,
) -> Result<ActionDerivatives> {
    let i = pair.grid.index_of(x)?;
    let s0 = action_profile(params, pair)?[i];
    let g = consts.kinetic_factor() * (p.eval(x, consts)? - energy);
    let (s1, s2, s3) = slope_cascade(params, &pair.state(i), pair.wronskian, g, consts.hbar);
    Ok(ActionDerivatives { s0, s1, s2, s3 })
}

/// Scaled residual of
/// s1²/2m + V - E - (ħ²/4m)[(3/2)s2²/s1² - s3/s1].
pub fn qshje_residual(d: &ActionDerivatives, v: f64, energy: f64, consts: &PhysicalConstants) -> Result<f64> {
    if d.s1 == 0.0 || !d.s1.is_finite() {
        return Err(QhjError::SingularSlope { x: f64::NAN });
    }
    let m = consts.mass;
    let c = consts.hbar * consts.hbar / (4.0 * m);
    let kinetic = d.s1 * d.s1 / (2.0 * m);
    let q1 = c * 1.5 * d.s2 * d.s2 / (d.s1 * d.s1);
    let q2 = c * d.s3 / d.s1;
    let scale = [kinetic, v, energy, q1, q2].iter().fold(SCALE_FLOOR, |m, t| m.max(t.abs()));
    Ok((kinetic + v - energy - q1 + q2) / scale)
}

/// Residual of the one-dimensional equation at every grid node.
pub fn qshje_residual_profile(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let cascade = cascade_profile(params, pair, p, energy, consts)?;
    cascade
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let v = p.eval(pair.grid.x(i), consts)?;
            qshje_residual(d, v, energy, consts).map_err(|_| QhjError::SingularSlope { x: pair.grid.x(i) })
        })
        .collect()
}

/// Slope-form parameters equivalent to Floyd's constants:
/// μ = b/√(ab - c²/4), ν = (c/2)/√(ab - c²/4), l = K/ħ.
pub fn floyd_to_slope_form(f: &FloydParams, consts: &PhysicalConstants) -> Result<ActionParams> {
    f.validate()?;
    let root = f.discriminant().sqrt();
    ActionParams::slope(f.b / root, 0.5 * f.c / root, f.k / consts.hbar)
}

/// Floyd's form ħ·arctan[(bφ1/φ2 + c/2)/√(ab - c²/4)] + K evaluated literally
/// (principal branch, no unwrapping) at every node.
pub fn floyd_action_profile(f: &FloydParams, pair: &BasisPair) -> Result<Vec<f64>> {
    f.validate()?;
    let root = f.discriminant().sqrt();
    let hbar = pair.consts.hbar;
    Ok((0..pair.len())
        .map(|i| {
            let t = (f.b * pair.phi1[i] / pair.phi2[i] + 0.5 * f.c) / root;
            // φ2 = 0 gives t = ±∞ and arctan = ±π/2, the correct value mod π
            let angle = if t.is_nan() { PI / 2.0 } else { t.atan() };
            hbar * angle + f.k
        })
        .collect())
}

/// R''/R for R built from the action with continuity constant c1:
/// -(1/2)s3/s1 + (1/4)s1⁻²(3s2² - 4c1·s2 + c1²).
pub fn amplitude_curvature(s1: f64, s2: f64, s3: f64, c1: f64) -> f64 {
    -0.5 * s3 / s1 + 0.25 * (3.0 * s2 * s2 - 4.0 * c1 * s2 + c1 * c1) / (s1 * s1)
}

/// U = -(ħ²/2m)·R''/R with R''/R from [`amplitude_curvature`].
pub fn quantum_potential(d: &ActionDerivatives, c1: f64, consts: &PhysicalConstants) -> Result<f64> {
    if d.s1 == 0.0 || !d.s1.is_finite() {
        return Err(QhjError::SingularSlope { x: f64::NAN });
    }
    Ok(-consts.hbar * consts.hbar / (2.0 * consts.mass) * amplitude_curvature(d.s1, d.s2, d.s3, c1))
}

/// Outcome of the never-constant check on S0'.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonStationarity {
    /// sign(-det·W); for the ratio form this is sign((μν - 1)W).
    pub expected_sign: f64,
    pub min_abs_slope: f64,
    pub sign_constant: bool,
}

impl NonStationarity {
    pub fn holds(&self) -> bool {
        self.sign_constant && self.min_abs_slope > 0.0
    }
}

pub fn non_stationarity(params: &ActionParams, pair: &BasisPair) -> Result<NonStationarity> {
    params.validate()?;
    let expected_sign = (-params.determinant() * pair.wronskian).signum();
    let mut min_abs_slope = f64::INFINITY;
    let mut sign_constant = true;
    for i in 0..pair.len() {
        // g only enters s2 and s3
        let (s1, _, _) = slope_cascade(params, &pair.state(i), pair.wronskian, 0.0, pair.consts.hbar);
        min_abs_slope = min_abs_slope.min(s1.abs());
        if s1.signum() != expected_sign || s1 == 0.0 {
            sign_constant = false;
        }
    }
    Ok(NonStationarity { expected_sign, min_abs_slope, sign_constant })
}

/// CSV with columns x, S0, S0', S0'', S0''', residual.
pub fn cascade_csv(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<String> {
    let cascade = cascade_profile(params, pair, p, energy, consts)?;
    let residual = qshje_residual_profile(params, pair, p, energy, consts)?;
    let mut out = String::from("x,S0,S0',S0'',S0''',residual\n");
    for (i, d) in cascade.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(pair.grid.x(i)),
            fmt_f64(d.s0),
            fmt_f64(d.s1),
            fmt_f64(d.s2),
            fmt_f64(d.s3),
            fmt_f64(residual[i])
        );
    }
    Ok(out)
}
