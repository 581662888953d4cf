//! Separable three-dimensional reduced actions.
//!
//! With V = Vx(x) + Vy(y) + Vz(z) and a basis pair per axis, the eight
//! products φ1..φ8 = X_iY_jZ_k (index 4i + 2j + k, X1 before X2) solve the
//! three-dimensional Schrödinger equation. Two families of actions are built
//! from them:
//!
//! * the general action ħ·angle(Σνᵢφᵢ, Σμᵢφᵢ) + ħl with sixteen coefficients;
//! * the sum of three one-dimensional ratio-form actions with parameters
//!   (γ1, γ2), (γ3, γ4), (γ5, γ6).
//!
//! The tangent addition rule turns the second into an instance of the first,
//! with coefficients that are polynomials in γ. [`coefficient_polynomials`]
//! derives them exactly and [`embed_sum_in_general`] evaluates them.

pub mod poly;

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action1d::{slope_cascade, ActionParams, DEGENERACY_GUARD};
use crate::error::{QhjError, Result};
use crate::microstates::product_map_rank_generic;
use crate::numerics::{
    fmt_f64, numerical_rank, principal_shift, stencil_d1_d2, unwrap_angles, wrap_symmetric, SCALE_FLOOR,
};
use crate::potentials::{PhysicalConstants, Potential3D};
use crate::schrodinger::{analytic_basis, se_residual, AnalyticKind, AxisState, BasisPair, Grid1D};

pub use poly::Poly;

/// Bound on the sampled Schrödinger residual of each axis pair.
pub const SE_RESIDUAL_TOL: f64 = 1e-6;
/// Central step for the parameter Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-5;
/// Singular-value cutoff relative to the largest.
pub const RANK_TOL: f64 = 1e-8;
/// Number of generic base points that must agree on the rank.
pub const RANK_DRAWS: usize = 3;

/// Three basis pairs whose energies add up to the total energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableSystem {
    pub pairs: [BasisPair; 3],
    pub energies: [f64; 3],
    pub potential: Potential3D,
    pub consts: PhysicalConstants,
}

impl SeparableSystem {
    pub fn new(pairs: [BasisPair; 3], consts: PhysicalConstants) -> Result<Self> {
        let energies = [pairs[0].energy, pairs[1].energy, pairs[2].energy];
        let potential =
            Potential3D::new(pairs[0].potential.clone(), pairs[1].potential.clone(), pairs[2].potential.clone());
        let sys = Self { pairs, energies, potential, consts };
        sys.validate()?;
        Ok(sys)
    }

    /// Free axes with wave numbers `k` on the given grids.
    pub fn free(k: [f64; 3], grids: [Grid1D; 3], consts: PhysicalConstants) -> Result<Self> {
        let pairs = [0, 1, 2].map(|q| analytic_basis(AnalyticKind::Free { k: k[q] }, &grids[q], &consts));
        let [px, py, pz] = pairs;
        Self::new([px?, py?, pz?], consts)
    }

    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Checks that the axis energies add up to `energy`.
    pub fn check_total_energy(&self, energy: f64) -> Result<()> {
        let deficit = self.total_energy() - energy;
        if deficit.abs() > 1e-12 * energy.abs().max(1.0) {
            return Err(QhjError::InvalidInput(format!(
                "separation energies sum to {} instead of E = {energy} (deficit {deficit:e})",
                self.total_energy()
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        for (q, pair) in self.pairs.iter().enumerate() {
            if pair.consts != self.consts {
                return Err(QhjError::InvalidInput(format!("axis {q} uses different physical constants")));
            }
            if pair.energy != self.energies[q] {
                return Err(QhjError::InvalidInput(format!("axis {q} energy does not match its basis pair")));
            }
            pair.validate()?;
            let res = se_residual(pair, &pair.potential, pair.energy, &self.consts)?.max();
            if !(res < SE_RESIDUAL_TOL) {
                return Err(QhjError::InvalidInput(format!(
                    "axis {q} pair fails the Schrödinger residual check ({res:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn axis_states(&self, point: [f64; 3]) -> Result<[AxisState; 3]> {
        Ok([self.pairs[0].state_at(point[0])?, self.pairs[1].state_at(point[1])?, self.pairs[2].state_at(point[2])?])
    }

    /// Box covered by the three grids.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (self.pairs.each_ref().map(|p| p.grid.x0), self.pairs.each_ref().map(|p| p.grid.end()))
    }

    /// Uniform random points inside the box shrunk by `margin` on every side.
    pub fn random_points(&self, n: usize, margin: f64, rng: &mut impl Rng) -> Vec<[f64; 3]> {
        let (lo, hi) = self.bounds();
        (0..n).map(|_| [0, 1, 2].map(|q| rng.random_range(lo[q] + margin..hi[q] - margin))).collect()
    }
}

/// The eight product solutions φ_{4i+2j+k} = X_iY_jZ_k.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    pub system: SeparableSystem,
}

/// Values and gradients of φ1..φ8 at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductSample {
    pub values: [f64; 8],
    pub gradients: [[f64; 3]; 8],
}

pub fn build_product_basis(sys: &SeparableSystem) -> Result<ProductBasis> {
    sys.validate()?;
    Ok(ProductBasis { system: sys.clone() })
}

impl ProductBasis {
    pub fn sample(&self, point: [f64; 3]) -> Result<ProductSample> {
        let [x, y, z] = self.system.axis_states(point)?;
        let xs = [(x.phi1, x.dphi1), (x.phi2, x.dphi2)];
        let ys = [(y.phi1, y.dphi1), (y.phi2, y.dphi2)];
        let zs = [(z.phi1, z.dphi1), (z.phi2, z.dphi2)];
        let mut values = [0.0; 8];
        let mut gradients = [[0.0; 3]; 8];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let idx = 4 * i + 2 * j + k;
                    let ((a, da), (b, db), (c, dc)) = (xs[i], ys[j], zs[k]);
                    values[idx] = a * b * c;
                    gradients[idx] = [da * b * c, a * db * c, a * b * dc];
                }
            }
        }
        Ok(ProductSample { values, gradients })
    }

    pub fn values(&self, point: [f64; 3]) -> Result<[f64; 8]> {
        Ok(self.sample(point)?.values)
    }

    /// Scaled residual of -(ħ²/2m)Δφᵢ + (V - E)φᵢ with the Laplacian taken
    /// by fourth-order differences of step `h` around `point`.
    pub fn se_residual(&self, index: usize, point: [f64; 3], h: f64) -> Result<f64> {
        if index >= 8 {
            return Err(QhjError::InvalidInput(format!("product index {index} out of range 0..8")));
        }
        let sys = &self.system;
        let mut lap = 0.0;
        let centre = self.values(point)?[index];
        for q in 0..3 {
            let mut vals = [0.0; 5];
            for (s, v) in vals.iter_mut().enumerate() {
                let mut p = point;
                p[q] += (s as f64 - 2.0) * h;
                *v = self.values(p)?[index];
            }
            lap += stencil_d1_d2(vals, h).1;
        }
        let c = sys.consts.hbar * sys.consts.hbar / (2.0 * sys.consts.mass);
        let kinetic = -c * lap;
        let pot = (sys.potential.eval(point, &sys.consts)? - sys.total_energy()) * centre;
        Ok((kinetic + pot).abs() / kinetic.abs().max(pot.abs()).max(SCALE_FLOOR))
    }
}

/// Sixteen coefficients of the general action plus the constant l.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralActionParams {
    pub nu: [f64; 8],
    pub mu: [f64; 8],
    pub l: f64,
}

impl GeneralActionParams {
    pub fn new(nu: [f64; 8], mu: [f64; 8], l: f64) -> Result<Self> {
        let p = Self { nu, mu, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu.iter().all(|v| *v == 0.0) || self.mu.iter().all(|v| *v == 0.0) {
            return Err(QhjError::InvalidInput("numerator and denominator coefficients must both be nonzero".into()));
        }
        if !(self.nu.iter().chain(&self.mu).all(|v| v.is_finite()) && self.l.is_finite()) {
            return Err(QhjError::InvalidInput("action coefficients must be finite".into()));
        }
        Ok(())
    }

    /// True when ν ∥ μ, in which case S0 is constant.
    pub fn is_stationary(&self) -> bool {
        let norm = |v: &[f64; 8]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = norm(&self.nu) * norm(&self.mu);
        let mut worst: f64 = 0.0;
        for a in 0..8 {
            for b in a + 1..8 {
                worst = worst.max((self.nu[a] * self.mu[b] - self.nu[b] * self.mu[a]).abs());
            }
        }
        worst <= DEGENERACY_GUARD * scale
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.nu.iter().chain(&self.mu).copied().collect()
    }

    pub fn from_slice(v: &[f64], l: f64) -> Result<Self> {
        if v.len() != 16 {
            return Err(QhjError::InvalidInput(format!("expected 16 coefficients, got {}", v.len())));
        }
        let mut nu = [0.0; 8];
        let mut mu = [0.0; 8];
        nu.copy_from_slice(&v[..8]);
        mu.copy_from_slice(&v[8..]);
        Self::new(nu, mu, l)
    }

    fn numerator_denominator(&self, s: &ProductSample) -> (f64, [f64; 3], f64, [f64; 3]) {
        let dot = |c: &[f64; 8]| c.iter().zip(&s.values).map(|(a, b)| a * b).sum::<f64>();
        let grad = |c: &[f64; 8]| [0, 1, 2].map(|q| c.iter().zip(&s.gradients).map(|(a, g)| a * g[q]).sum::<f64>());
        (dot(&self.nu), grad(&self.nu), dot(&self.mu), grad(&self.mu))
    }
}

/// γ1..γ6 of the sum action plus the constant l.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumActionParams {
    pub gamma: [f64; 6],
    pub l: f64,
}

impl SumActionParams {
    pub fn new(gamma: [f64; 6], l: f64) -> Result<Self> {
        let p = Self { gamma, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for q in 0..3 {
            self.axis_params(q)?;
        }
        if !self.l.is_finite() {
            return Err(QhjError::InvalidInput("l must be finite".into()));
        }
        Ok(())
    }

    /// Ratio-form parameters of axis `q`: ν = γ_{2q+1}, μ = γ_{2q+2}.
    pub fn axis_params(&self, q: usize) -> Result<ActionParams> {
        let (nu, mu) = (self.gamma[2 * q], self.gamma[2 * q + 1]);
        ActionParams::ratio(mu, nu, 0.0).map_err(|_| {
            QhjError::InvalidInput(format!(
                "axis {} violates the non-degeneracy condition: γ{}·γ{} = {} must differ from 1",
                ["x", "y", "z"][q],
                2 * q + 1,
                2 * q + 2,
                nu * mu
            ))
        })
    }
}

/// Per-axis angles in units of ħ, unwrapped along the axis grid.
#[derive(Debug, Clone, PartialEq)]
struct AxisAngle {
    params: ActionParams,
    raw: Vec<f64>,
    unwrapped: Vec<f64>,
}

impl AxisAngle {
    fn new(params: ActionParams, pair: &BasisPair) -> Result<Self> {
        let mut raw = Vec::with_capacity(pair.len());
        for i in 0..pair.len() {
            raw.push(angle_of(&params, &pair.state(i)).ok_or(QhjError::SingularSlope { x: pair.grid.x(i) })?);
        }
        let mut unwrapped = unwrap_angles(&raw);
        let shift = principal_shift(unwrapped[0]);
        unwrapped.iter_mut().for_each(|a| *a += shift);
        Ok(Self { params, raw, unwrapped })
    }

    fn eval(&self, pair: &BasisPair, x: f64) -> Result<f64> {
        let i = pair.grid.nearest(x);
        let a = angle_of(&self.params, &pair.state_at(x)?).ok_or(QhjError::SingularSlope { x })?;
        Ok(self.unwrapped[i] + wrap_symmetric(a - self.raw[i], 2.0 * PI))
    }
}

fn angle_of(params: &ActionParams, s: &AxisState) -> Option<f64> {
    let (n, d) = params.coefficients();
    let num = n[0] * s.phi1 + n[1] * s.phi2;
    let den = d[0] * s.phi1 + d[1] * s.phi2;
    if num == 0.0 && den == 0.0 {
        None
    } else {
        Some(num.atan2(den))
    }
}

/// The sum action prepared on a separable system.
#[derive(Debug, Clone, PartialEq)]
pub struct SumAction {
    pub params: SumActionParams,
    pub system: SeparableSystem,
    axes: [AxisAngle; 3],
}

impl SumAction {
    pub fn new(params: SumActionParams, system: &SeparableSystem) -> Result<Self> {
        params.validate()?;
        let axes = [
            AxisAngle::new(params.axis_params(0)?, &system.pairs[0])?,
            AxisAngle::new(params.axis_params(1)?, &system.pairs[1])?,
            AxisAngle::new(params.axis_params(2)?, &system.pairs[2])?,
        ];
        Ok(Self { params, system: system.clone(), axes })
    }

    /// Axis term S0q(x_q) without the constant l.
    pub fn axis_action(&self, q: usize, x: f64) -> Result<f64> {
        Ok(self.system.consts.hbar * self.axes[q].eval(&self.system.pairs[q], x)?)
    }

    pub fn eval(&self, point: [f64; 3]) -> Result<f64> {
        let mut s = self.system.consts.hbar * self.params.l;
        for (q, &x) in point.iter().enumerate() {
            s += self.axis_action(q, x)?;
        }
        Ok(s)
    }

    /// (S0x', S0y', S0z') from the closed-form slope of each axis.
    pub fn gradient(&self, point: [f64; 3]) -> Result<[f64; 3]> {
        let mut g = [0.0; 3];
        for q in 0..3 {
            let pair = &self.system.pairs[q];
            let state = pair.state_at(point[q])?;
            g[q] = slope_cascade(&self.axes[q].params, &state, pair.wronskian, 0.0, self.system.consts.hbar).0;
        }
        Ok(g)
    }

    /// R = Π |S0q'|^(-1/2), the amplitude that makes each axis conserve its flux.
    pub fn amplitude(&self, point: [f64; 3]) -> Result<f64> {
        let g = self.gradient(point)?;
        if g.contains(&0.0) {
            return Err(QhjError::AmplitudeNode { point: point.to_vec() });
        }
        Ok(g.iter().map(|v| v.abs().powf(-0.5)).product())
    }
}

pub fn eval_sum_action(g: &SumActionParams, sys: &SeparableSystem, point: [f64; 3]) -> Result<f64> {
    SumAction::new(*g, sys)?.eval(point)
}

/// S0 = ħ·angle(Σνᵢφᵢ, Σμᵢφᵢ) + ħl on the principal branch (-π/2, π/2].
pub fn eval_general_action(p: &GeneralActionParams, basis: &ProductBasis, point: [f64; 3]) -> Result<f64> {
    p.validate()?;
    let a = general_angle(p, &basis.sample(point)?, point)?;
    Ok(basis.system.consts.hbar * (a + principal_shift(a) + p.l))
}

fn general_angle(p: &GeneralActionParams, s: &ProductSample, point: [f64; 3]) -> Result<f64> {
    let (n, _, d, _) = p.numerator_denominator(s);
    let scale = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cn = p.nu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cd = p.mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if n.abs() <= 1e-14 * cn * scale && d.abs() <= 1e-14 * cd * scale {
        return Err(QhjError::IndeterminatePoint { point });
    }
    Ok(n.atan2(d))
}

/// S0 along a path, continuous from the principal branch at the first point.
pub fn general_action_along_path(p: &GeneralActionParams, basis: &ProductBasis, path: &[[f64; 3]]) -> Result<Vec<f64>> {
    p.validate()?;
    let raw = path.iter().map(|&pt| general_angle(p, &basis.sample(pt)?, pt)).collect::<Result<Vec<_>>>()?;
    let unwrapped = unwrap_angles(&raw);
    let shift = unwrapped.first().map_or(0.0, |a| principal_shift(*a));
    let hbar = basis.system.consts.hbar;
    Ok(unwrapped.iter().map(|a| hbar * (a + shift + p.l)).collect())
}

/// ∇S0 = ħ(D∇N - N∇D)/(N² + D²).
pub fn general_action_gradient(p: &GeneralActionParams, basis: &ProductBasis, point: [f64; 3]) -> Result<[f64; 3]> {
    let s = basis.sample(point)?;
    let (n, dn, d, dd) = p.numerator_denominator(&s);
    let q = n * n + d * d;
    if q == 0.0 {
        return Err(QhjError::IndeterminatePoint { point });
    }
    let hbar = basis.system.consts.hbar;
    Ok([0, 1, 2].map(|k| hbar * (d * dn[k] - n * dd[k]) / q))
}

/// |Σνᵢφᵢ + iΣμᵢφᵢ|, the modulus of the wave function whose phase is S0/ħ.
pub fn general_amplitude(p: &GeneralActionParams, basis: &ProductBasis, point: [f64; 3]) -> Result<f64> {
    let (n, _, d, _) = p.numerator_denominator(&basis.sample(point)?);
    Ok(n.hypot(d))
}

/// tan(arctan fx + arctan fy + arctan fz) = (fx + fy + fz - fxfyfz)/(1 - fxfy - fxfz - fyfz).
pub fn arctan_combine(fx: f64, fy: f64, fz: f64) -> Result<f64> {
    let num = fx + fy + fz - fx * fy * fz;
    let den = 1.0 - fx * fy - fx * fz - fy * fz;
    let scale = 1.0 + (fx * fy).abs() + (fx * fz).abs() + (fy * fz).abs();
    if den.abs() <= 1e-14 * scale {
        return Err(QhjError::Pole { denominator: den });
    }
    Ok(num / den)
}

/// Numerator and denominator coefficients of φ1..φ8 as exact polynomials in γ.
///
/// With fx = Ax/Bx, Ax = X1 + γ1X2, Bx = γ2X1 + X2 (likewise y with γ3, γ4
/// and z with γ5, γ6), clearing BxByBz from the tangent addition rule gives
/// numerator AxByBz + BxAyBz + BxByAz - AxAyAz and denominator
/// BxByBz - AxAyBz - AxByAz - BxAyAz.
pub fn coefficient_polynomials() -> ([Poly; 8], [Poly; 8]) {
    let one = Poly::constant(1);
    // factor[q] = (A, B), each as the coefficients of (first, second) solution
    let factors: Vec<([Poly; 2], [Poly; 2])> =
        (0..3).map(|q| ([one.clone(), Poly::gamma(2 * q)], [Poly::gamma(2 * q + 1), one.clone()])).collect();
    let pick = |q: usize, a: bool| if a { &factors[q].0 } else { &factors[q].1 };

    let numerator =
        [(1, [true, false, false]), (1, [false, true, false]), (1, [false, false, true]), (-1, [true, true, true])];
    let denominator =
        [(1, [false, false, false]), (-1, [true, true, false]), (-1, [true, false, true]), (-1, [false, true, true])];

    let expand = |terms: &[(i64, [bool; 3])]| -> [Poly; 8] {
        let mut out: [Poly; 8] = Default::default();
        for (sign, choice) in terms {
            let (fx, fy, fz) = (pick(0, choice[0]), pick(1, choice[1]), pick(2, choice[2]));
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let t = &(&fx[i] * &fy[j]) * &fz[k];
                        let t = if *sign < 0 { -&t } else { t };
                        out[4 * i + 2 * j + k] = &out[4 * i + 2 * j + k] + &t;
                    }
                }
            }
        }
        out
    };
    (expand(&numerator), expand(&denominator))
}

/// (λ, δ) evaluated at the given γ.
pub fn gamma_to_coefficients(g: &SumActionParams) -> ([f64; 8], [f64; 8]) {
    let (num, den) = coefficient_polynomials();
    (num.each_ref().map(|p| p.eval(&g.gamma)), den.each_ref().map(|p| p.eval(&g.gamma)))
}

/// General parameters (ν, μ, l) = (λ(γ), δ(γ), l) reproducing the sum action mod πħ.
pub fn embed_sum_in_general(g: &SumActionParams) -> Result<GeneralActionParams> {
    g.validate()?;
    let (nu, mu) = gamma_to_coefficients(g);
    GeneralActionParams::new(nu, mu, g.l)
}

/// Families whose parameter counts are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankFamily {
    General,
    Sum,
    ProductCoeffs,
}

impl RankFamily {
    pub fn parameter_count(self) -> usize {
        match self {
            Self::General => 16,
            Self::Sum => 6,
            Self::ProductCoeffs => 12,
        }
    }
}

impl std::str::FromStr for RankFamily {
    type Err = QhjError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "sum" => Ok(Self::Sum),
            "product_coeffs" | "product-coeffs" => Ok(Self::ProductCoeffs),
            other => Err(QhjError::InvalidInput(format!(
                "unknown rank family '{other}' (expected general, sum or product_coeffs)"
            ))),
        }
    }
}

/// Residuals |J·v|/(|J||v|) of the two candidate gauge directions of the
/// general family: joint scaling (ν, μ) and rotation (μ, -ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeCheck {
    pub scaling: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub family: RankFamily,
    pub rank: usize,
    /// For product_coeffs, `rank` is the complex rank and this the real one.
    pub real_rank: Option<usize>,
    pub parameters: usize,
    pub singular_values: Vec<f64>,
    pub samples: usize,
    pub draw_ranks: Vec<usize>,
    pub gauge: Option<GaugeCheck>,
}

fn gradient_map(family: RankFamily, params: &[f64], basis: &ProductBasis, samples: &[[f64; 3]]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * samples.len());
    match family {
        RankFamily::General => {
            let p = GeneralActionParams::from_slice(params, 0.0)?;
            for &pt in samples {
                out.extend(general_action_gradient(&p, basis, pt)?);
            }
        }
        RankFamily::Sum => {
            let mut gamma = [0.0; 6];
            gamma.copy_from_slice(params);
            let action = SumAction::new(SumActionParams::new(gamma, 0.0)?, &basis.system)?;
            for &pt in samples {
                out.extend(action.gradient(pt)?);
            }
        }
        RankFamily::ProductCoeffs => unreachable!("product coefficients use the analytic Jacobian"),
    }
    Ok(out)
}

/// Central-difference Jacobian of the sampled gradient map.
pub fn parameter_jacobian(
    family: RankFamily,
    params: &[f64],
    basis: &ProductBasis,
    samples: &[[f64; 3]],
) -> Result<DMatrix<f64>> {
    let rows = 3 * samples.len();
    let mut jac = DMatrix::zeros(rows, params.len());
    for c in 0..params.len() {
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[c] += JACOBIAN_STEP;
        minus[c] -= JACOBIAN_STEP;
        let fp = gradient_map(family, &plus, basis, samples)?;
        let fm = gradient_map(family, &minus, basis, samples)?;
        for r in 0..rows {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * JACOBIAN_STEP);
        }
    }
    Ok(jac)
}

fn random_params(family: RankFamily, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..family.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ok = match family {
            RankFamily::Sum => (0..3).all(|q| (v[2 * q] * v[2 * q + 1] - 1.0).abs() > 0.1),
            _ => true,
        };
        if ok {
            return v;
        }
    }
}

fn gauge_check(jac: &DMatrix<f64>, params: &[f64]) -> GaugeCheck {
    let (nu, mu) = params.split_at(8);
    let scaling: Vec<f64> = params.to_vec();
    let rotation: Vec<f64> = mu.iter().copied().chain(nu.iter().map(|v| -v)).collect();
    let norm = jac.norm();
    let residual = |v: Vec<f64>| {
        let v = nalgebra::DVector::from_vec(v);
        (jac * &v).norm() / (norm * v.norm()).max(SCALE_FLOOR)
    };
    GaugeCheck { scaling: residual(scaling), rotation: residual(rotation) }
}

/// Numerical rank of the parameters → sampled ∇S0 map, required to agree at
/// three generic base points. `base` replaces the first random draw.
pub fn parameter_rank(
    family: RankFamily,
    base: Option<&[f64]>,
    basis: &ProductBasis,
    samples: &[[f64; 3]],
    seed: u64,
) -> Result<RankReport> {
    if family == RankFamily::ProductCoeffs {
        let (r, _) = product_map_rank_generic(seed)?;
        return Ok(RankReport {
            family,
            rank: r.complex_rank,
            real_rank: Some(r.real_rank),
            parameters: 12,
            singular_values: r.singular_values,
            samples: 16,
            draw_ranks: vec![r.real_rank; RANK_DRAWS],
            gauge: None,
        });
    }
    let n = family.parameter_count();
    if 3 * samples.len() < 4 * n {
        return Err(QhjError::InvalidInput(format!(
            "{} gradient samples for {n} parameters; at least {} required",
            3 * samples.len(),
            4 * n
        )));
    }
    if let Some(b) = base {
        if b.len() != n {
            return Err(QhjError::InvalidInput(format!("base point has {} parameters, expected {n}", b.len())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(RANK_DRAWS);
    for d in 0..RANK_DRAWS {
        let params = match (d, base) {
            (0, Some(b)) => b.to_vec(),
            _ => random_params(family, &mut rng),
        };
        let jac = parameter_jacobian(family, &params, basis, samples)?;
        let (rank, sv) = numerical_rank(&jac, RANK_TOL);
        let gauge = (family == RankFamily::General).then(|| gauge_check(&jac, &params));
        draws.push((rank, sv, gauge));
    }
    let draw_ranks: Vec<usize> = draws.iter().map(|d| d.0).collect();
    if draw_ranks.iter().any(|&r| r != draw_ranks[0]) {
        return Err(QhjError::RankInstability {
            ranks: draw_ranks,
            singular_values: draws.into_iter().map(|d| d.1).collect(),
        });
    }
    let (rank, singular_values, gauge) = draws.swap_remove(0);
    Ok(RankReport {
        family,
        rank,
        real_rank: None,
        parameters: n,
        singular_values,
        samples: 3 * samples.len(),
        draw_ranks,
        gauge,
    })
}

/// Regular 3D grid with the finite-difference step used around each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
    #[serde(default = "default_stencil_h")]
    pub stencil_h: f64,
}

fn default_stencil_h() -> f64 {
    5e-3
}

impl Grid3 {
    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = Self { lo: [lo; 3], hi: [hi; 3], n: [n; 3], stencil_h: default_stencil_h() };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for q in 0..3 {
            if !(self.hi[q] > self.lo[q]) || self.n[q] < 2 {
                return Err(QhjError::InvalidInput(format!(
                    "grid axis {q} needs lo < hi and at least 2 nodes, got [{}, {}] with {}",
                    self.lo[q], self.hi[q], self.n[q]
                )));
            }
        }
        if !(self.stencil_h > 0.0) {
            return Err(QhjError::InvalidInput("stencil step must be positive".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        let coord = |q: usize, i: usize| self.lo[q] + (self.hi[q] - self.lo[q]) * i as f64 / (self.n[q] - 1) as f64;
        let mut out = Vec::with_capacity(self.n.iter().product());
        for i in 0..self.n[0] {
            for j in 0..self.n[1] {
                for k in 0..self.n[2] {
                    out.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
        out
    }
}

/// Residuals at one grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub point: [f64; 3],
    pub s0: f64,
    pub r: f64,
    pub qshje: f64,
    pub continuity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldReport {
    pub qshje_residual_max: f64,
    pub continuity_residual_max: f64,
    #[serde(skip)]
    pub samples: Vec<FieldSample>,
}

impl FieldReport {
    /// CSV with columns x, y, z, S0, R, qshje_residual, continuity_residual.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,S0,R,qshje_residual,continuity_residual\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(s.point[0]),
                fmt_f64(s.point[1]),
                fmt_f64(s.point[2]),
                fmt_f64(s.s0),
                fmt_f64(s.r),
                fmt_f64(s.qshje),
                fmt_f64(s.continuity)
            );
        }
        out
    }
}

/// Scaled residuals of
/// |∇S0|²/2m - (ħ²/2m)ΔR/R + V - E and ∇·(R²∇S0)/R²
/// at every node of `grid`, derivatives by fourth-order central differences.
/// Differences of S0 are taken modulo πħ so principal-branch evaluators work.
pub fn verify_3d<S, A>(
    s0: S,
    r: A,
    pot: &Potential3D,
    energy: f64,
    grid: &Grid3,
    consts: &PhysicalConstants,
) -> Result<FieldReport>
where
    S: Fn([f64; 3]) -> Result<f64>,
    A: Fn([f64; 3]) -> Result<f64>,
{
    grid.validate()?;
    consts.validate()?;
    let (hbar, m, h) = (consts.hbar, consts.mass, grid.stencil_h);
    let mut samples = Vec::with_capacity(grid.n.iter().product());
    let (mut qmax, mut cmax) = (0.0f64, 0.0f64);
    for point in grid.points() {
        let s_c = s0(point)?;
        let r_c = r(point)?;
        let mut grad_s = [0.0; 3];
        let mut lap_s = 0.0;
        let mut grad_r = [0.0; 3];
        let mut lap_r = 0.0;
        for q in 0..3 {
            let mut sv = [0.0; 5];
            let mut rv = [0.0; 5];
            for k in 0..5 {
                let mut p = point;
                p[q] += (k as f64 - 2.0) * h;
                let (s, a) = if k == 2 { (s_c, r_c) } else { (s0(p)?, r(p)?) };
                if !(a.abs() > 0.0) {
                    return Err(QhjError::AmplitudeNode { point: p.to_vec() });
                }
                sv[k] = wrap_symmetric(s - s_c, PI * hbar);
                rv[k] = a;
            }
            let (ds, dds) = stencil_d1_d2(sv, h);
            let (dr, ddr) = stencil_d1_d2(rv, h);
            grad_s[q] = ds;
            lap_s += dds;
            grad_r[q] = dr;
            lap_r += ddr;
        }
        let grad_s2: f64 = grad_s.iter().map(|v| v * v).sum();
        let kinetic = grad_s2 / (2.0 * m);
        let quantum = -hbar * hbar / (2.0 * m) * lap_r / r_c;
        let v = pot.eval(point, consts)?;
        let q_scale = [kinetic, quantum, v, energy].iter().fold(SCALE_FLOOR, |acc, t| acc.max(t.abs()));
        let qshje = (kinetic + quantum + v - energy).abs() / q_scale;

        let flux: f64 = 2.0 * grad_r.iter().zip(&grad_s).map(|(a, b)| a * b).sum::<f64>() / r_c;
        let grad_r_norm = grad_r.iter().map(|a| a * a).sum::<f64>().sqrt();
        let c_scale = [2.0 * grad_r_norm * grad_s2.sqrt() / r_c.abs(), lap_s, grad_s2 / hbar]
            .iter()
            .fold(SCALE_FLOOR, |acc, t| acc.max(t.abs()));
        let continuity = (flux + lap_s).abs() / c_scale;

        qmax = qmax.max(qshje);
        cmax = cmax.max(continuity);
        samples.push(FieldSample { point, s0: s_c, r: r_c, qshje, continuity });
    }
    Ok(FieldReport { qshje_residual_max: qmax, continuity_residual_max: cmax, samples })
}
