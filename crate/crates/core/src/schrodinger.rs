//! Pairs of independent real solutions of the one-dimensional stationary
//! Schrödinger equation, sampled on a uniform grid together with their
//! derivatives.
//!
//! Numeric pairs come from a fixed-step fourth-order Runge-Kutta sweep of the
//! first-order system (φ, φ'). The derivative samples are the integrator's own
//! slope states. Analytic pairs (free particle, harmonic ground-state energy)
//! serve as exact references.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{QhjError, Result};
use crate::numerics::{central_d2, fmt_f64, SCALE_FLOOR};
use crate::potentials::{Interpolation, PhysicalConstants, Potential1D};

/// Relative Wronskian drift tolerated over a grid.
pub const WRONSKIAN_DRIFT_TOL: f64 = 1e-8;
/// Samples above this magnitude abort integration.
pub const GROWTH_LIMIT: f64 = 1e150;
/// Largest k·dx the step-control rule accepts without warning.
pub const MAX_K_DX: f64 = 0.1;

/// Uniform grid x_i = x0 + i·dx, i = 0..n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        let g = Self { x0, dx, n };
        g.validate()?;
        Ok(g)
    }

    /// Grid spanning [lo, hi] with `n` points.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(QhjError::InvalidInput("grid needs n >= 16".into()));
        }
        Self::new(lo, (hi - lo) / (n - 1) as f64, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite() && self.x0.is_finite()) {
            return Err(QhjError::InvalidInput(format!("grid spacing must be positive, got dx = {}", self.dx)));
        }
        if self.n < 16 {
            return Err(QhjError::InvalidInput(format!("grid needs n >= 16, got {}", self.n)));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn end(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.end()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let r = ((x - self.x0) / self.dx).round();
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(self.n - 1)
        }
    }

    /// Index of `x` if it is a grid node (relative tolerance 1e-9 of dx).
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let r = (x - self.x0) / self.dx;
        let i = r.round();
        if (r - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.n {
            return Err(QhjError::OffGrid { x });
        }
        Ok(i as usize)
    }
}

/// Origin of the samples of a [`BasisPair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSource {
    Numeric,
    Samples,
    Free { k: f64 },
    HarmonicGround { omega: f64 },
}

/// Closed-form bases available from [`analytic_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticKind {
    /// (sin kx, cos kx) at E = ħ²k²/2m.
    Free { k: f64 },
    /// Ground-state energy only: (exp(-αx²/2), exp(-αx²/2)∫₀ˣ exp(αt²)dt), α = mω/ħ.
    Harmonic { omega: f64, energy: f64 },
}

/// Values and slopes of both members at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisState {
    pub phi1: f64,
    pub dphi1: f64,
    pub phi2: f64,
    pub dphi2: f64,
}

impl AxisState {
    pub fn wronskian(&self) -> f64 {
        self.phi1 * self.dphi2 - self.dphi1 * self.phi2
    }
}

/// Two real solutions of -(ħ²/2m)φ'' + Vφ = Eφ with their slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPair {
    pub grid: Grid1D,
    pub phi1: Vec<f64>,
    pub dphi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub dphi2: Vec<f64>,
    /// Wronskian φ1φ2' - φ1'φ2 at the first grid node.
    pub wronskian: f64,
    pub energy: f64,
    pub potential: Potential1D,
    pub consts: PhysicalConstants,
    pub source: BasisSource,
}

impl BasisPair {
    /// Wraps raw samples. Invariants are not enforced; see [`BasisPair::validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_samples(
        grid: Grid1D,
        phi1: Vec<f64>,
        dphi1: Vec<f64>,
        phi2: Vec<f64>,
        dphi2: Vec<f64>,
        energy: f64,
        potential: Potential1D,
        consts: PhysicalConstants,
    ) -> Result<Self> {
        grid.validate()?;
        for (name, v) in [("phi1", &phi1), ("dphi1", &dphi1), ("phi2", &phi2), ("dphi2", &dphi2)] {
            if v.len() != grid.n {
                return Err(QhjError::GridMismatch(format!("{name} has {} samples, grid has {}", v.len(), grid.n)));
            }
        }
        let wronskian = phi1[0] * dphi2[0] - dphi1[0] * phi2[0];
        Ok(Self { grid, phi1, dphi1, phi2, dphi2, wronskian, energy, potential, consts, source: BasisSource::Samples })
    }

    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn state(&self, i: usize) -> AxisState {
        AxisState { phi1: self.phi1[i], dphi1: self.dphi1[i], phi2: self.phi2[i], dphi2: self.dphi2[i] }
    }

    pub fn wronskian_profile(&self) -> Vec<f64> {
        (0..self.grid.n).map(|i| self.state(i).wronskian()).collect()
    }

    /// Largest |W(x) - W(x0)| / |W(x0)| over the grid.
    pub fn wronskian_drift(&self) -> f64 {
        let w0 = self.state(0).wronskian();
        if w0 == 0.0 {
            return f64::INFINITY;
        }
        self.wronskian_profile().iter().map(|w| ((w - w0) / w0).abs()).fold(0.0, f64::max)
    }

    /// Whether the Wronskian is nonzero relative to the sample magnitudes.
    pub fn is_independent(&self) -> bool {
        let s = self.state(0);
        let mag = s.phi1.hypot(s.dphi1) * s.phi2.hypot(s.dphi2);
        s.wronskian().abs() > 1e-12 * mag && mag > 0.0
    }

    /// Checks independence and Wronskian constancy.
    pub fn validate(&self) -> Result<()> {
        if !self.is_independent() {
            return Err(QhjError::InvalidInput("basis pair is linearly dependent (Wronskian = 0)".into()));
        }
        let drift = self.wronskian_drift();
        if !(drift < WRONSKIAN_DRIFT_TOL) {
            return Err(QhjError::InvalidInput(format!(
                "Wronskian drifts by {drift:e} over the grid (tolerance {WRONSKIAN_DRIFT_TOL:e})"
            )));
        }
        Ok(())
    }

    /// Basis state at an arbitrary abscissa inside the grid. Closed forms are
    /// used for analytic pairs; numeric pairs take one Runge-Kutta step from
    /// the nearest node.
    pub fn state_at(&self, x: f64) -> Result<AxisState> {
        if !self.grid.contains(x) {
            return Err(QhjError::OutOfDomain { x, lo: self.grid.x0, hi: self.grid.end() });
        }
        match self.source {
            // rescale_to_wronskian may have scaled φ2; the closed forms have W = -k and W = 1
            BasisSource::Free { k } => Ok(scale_second(free_state(k, x), self.wronskian / -k)),
            BasisSource::HarmonicGround { omega } => {
                let alpha = self.consts.mass * omega / self.consts.hbar;
                Ok(scale_second(harmonic_ground_state(alpha, x), self.wronskian))
            }
            BasisSource::Numeric | BasisSource::Samples => {
                let i = self.grid.nearest(x);
                let h = x - self.grid.x(i);
                let s = self.state(i);
                if h == 0.0 {
                    return Ok(s);
                }
                let kf = self.consts.kinetic_factor();
                let g = |xx: f64| -> Result<f64> { Ok(kf * (self.potential.eval(xx, &self.consts)? - self.energy)) };
                let (a, b) = (self.grid.x(i), h);
                let (p1, d1) = rk4_step(&g, a, b, s.phi1, s.dphi1)?;
                let (p2, d2) = rk4_step(&g, a, b, s.phi2, s.dphi2)?;
                Ok(AxisState { phi1: p1, dphi1: d1, phi2: p2, dphi2: d2 })
            }
        }
    }

    /// CSV with columns x, phi1, dphi1, phi2, dphi2.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,phi1,dphi1,phi2,dphi2\n");
        for i in 0..self.grid.n {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(self.grid.x(i)),
                fmt_f64(self.phi1[i]),
                fmt_f64(self.dphi1[i]),
                fmt_f64(self.phi2[i]),
                fmt_f64(self.dphi2[i])
            );
        }
        out
    }

    /// JSON document with metadata (E, potential, W) and the samples.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "E": self.energy,
            "potential": self.potential,
            "interpolation": self.potential.interpolation(),
            "W": self.wronskian,
            "wronskian_drift": self.wronskian_drift(),
            "constants": self.consts,
            "source": self.source,
            "grid": self.grid,
            "x": self.grid.points(),
            "phi1": self.phi1,
            "dphi1": self.dphi1,
            "phi2": self.phi2,
            "dphi2": self.dphi2,
        })
    }
}

fn rk4_step<G>(g: &G, x: f64, h: f64, y: f64, dy: f64) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let g0 = g(x)?;
    let gm = g(x + 0.5 * h)?;
    let g1 = g(x + h)?;
    let (k1y, k1d) = (dy, g0 * y);
    let (k2y, k2d) = (dy + 0.5 * h * k1d, gm * (y + 0.5 * h * k1y));
    let (k3y, k3d) = (dy + 0.5 * h * k2d, gm * (y + 0.5 * h * k2y));
    let (k4y, k4d) = (dy + h * k3d, g1 * (y + h * k3y));
    Ok((y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y), dy + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)))
}

/// Largest k·dx over the grid, k = √(2m|E - V|)/ħ.
pub fn max_k_dx(p: &Potential1D, energy: f64, grid: &Grid1D, consts: &PhysicalConstants) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in grid.points() {
        let k = (consts.kinetic_factor() * (energy - p.eval(x, consts)?).abs()).sqrt();
        worst = worst.max(k * grid.dx);
    }
    Ok(worst)
}

/// Solves for two solutions with initial conditions (value, slope) imposed at
/// the first grid node.
pub fn solve_basis_pair(
    p: &Potential1D,
    energy: f64,
    grid: &Grid1D,
    ic1: (f64, f64),
    ic2: (f64, f64),
    consts: &PhysicalConstants,
) -> Result<BasisPair> {
    solve_basis_pair_from(p, energy, grid, grid.x0, ic1, ic2, consts)
}

/// Same as [`solve_basis_pair`] with the initial conditions imposed at the
/// grid node `anchor`; integration proceeds outward in both directions.
pub fn solve_basis_pair_from(
    p: &Potential1D,
    energy: f64,
    grid: &Grid1D,
    anchor: f64,
    ic1: (f64, f64),
    ic2: (f64, f64),
    consts: &PhysicalConstants,
) -> Result<BasisPair> {
    grid.validate()?;
    consts.validate()?;
    let mut p = p.clone();
    p.validate()?;
    let a = grid.index_of(anchor)?;
    let ic_w = ic1.0 * ic2.1 - ic1.1 * ic2.0;
    if ic_w.abs() <= 1e-14 * ic1.0.hypot(ic1.1) * ic2.0.hypot(ic2.1) || !ic_w.is_finite() {
        return Err(QhjError::InvalidInput(format!(
            "initial conditions {ic1:?} and {ic2:?} are linearly dependent (Wronskian {ic_w:e})"
        )));
    }

    let kf = consts.kinetic_factor();
    let mut vals = Vec::with_capacity(grid.n);
    for x in grid.points() {
        vals.push(kf * (p.eval(x, consts)? - energy));
    }
    // keep √|g|·h small enough that the Wronskian stays constant to ~1e-12 per node
    let gmax = vals.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let substeps = ((gmax.sqrt() * grid.dx / 0.01).ceil() as usize).max(1);
    let g = |x: f64| -> Result<f64> { Ok(kf * (p.eval(x, consts)? - energy)) };

    let mut sols = Vec::with_capacity(2);
    for ic in [ic1, ic2] {
        let mut phi = vec![0.0; grid.n];
        let mut dphi = vec![0.0; grid.n];
        phi[a] = ic.0;
        dphi[a] = ic.1;
        for dir in [1isize, -1] {
            let (mut y, mut dy) = ic;
            let mut i = a as isize;
            let h = dir as f64 * grid.dx / substeps as f64;
            loop {
                let next = i + dir;
                if next < 0 || next >= grid.n as isize {
                    break;
                }
                let x_start = grid.x(i as usize);
                for s in 0..substeps {
                    (y, dy) = rk4_step(&g, x_start + s as f64 * h, h, y, dy)?;
                }
                let xn = grid.x(next as usize);
                if !(y.abs() < GROWTH_LIMIT && dy.abs() < GROWTH_LIMIT) {
                    return Err(QhjError::Growth { x: xn, limit: GROWTH_LIMIT });
                }
                phi[next as usize] = y;
                dphi[next as usize] = dy;
                i = next;
            }
        }
        sols.push((phi, dphi));
    }
    let (phi2, dphi2) = sols.pop().unwrap();
    let (phi1, dphi1) = sols.pop().unwrap();
    let mut pair = BasisPair::from_samples(*grid, phi1, dphi1, phi2, dphi2, energy, p, *consts)?;
    pair.source = BasisSource::Numeric;
    Ok(pair)
}

fn scale_second(s: AxisState, factor: f64) -> AxisState {
    AxisState { phi2: s.phi2 * factor, dphi2: s.dphi2 * factor, ..s }
}

fn free_state(k: f64, x: f64) -> AxisState {
    let (s, c) = (k * x).sin_cos();
    AxisState { phi1: s, dphi1: k * c, phi2: c, dphi2: -k * s }
}

/// ∫₀ᵘ exp(t²) dt by its positive power series (no cancellation).
fn integral_exp_sq(u: f64) -> f64 {
    let a = u.abs();
    let a2 = a * a;
    let mut term = a; // a^(2n+1)/n!
    let mut sum = 0.0;
    let mut n = 0usize;
    loop {
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if (n as f64) > a2 && contrib < 1e-17 * sum {
            break;
        }
        n += 1;
        term *= a2 / n as f64;
        if n > 10_000 {
            break;
        }
    }
    sum.copysign(u)
}

/// Harmonic ground-state pair with α = mω/ħ; Wronskian is exactly 1.
fn harmonic_ground_state(alpha: f64, x: f64) -> AxisState {
    let g = (-0.5 * alpha * x * x).exp();
    let sa = alpha.sqrt();
    let phi2 = g * integral_exp_sq(sa * x) / sa;
    AxisState { phi1: g, dphi1: -alpha * x * g, phi2, dphi2: -alpha * x * phi2 + (0.5 * alpha * x * x).exp() }
}

/// Machine-accurate reference pairs.
pub fn analytic_basis(kind: AnalyticKind, grid: &Grid1D, consts: &PhysicalConstants) -> Result<BasisPair> {
    grid.validate()?;
    consts.validate()?;
    let (energy, potential, source) = match kind {
        AnalyticKind::Free { k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(QhjError::InvalidInput(format!("free basis needs k > 0, got {k}")));
            }
            (consts.hbar * consts.hbar * k * k / (2.0 * consts.mass), Potential1D::Free, BasisSource::Free { k })
        }
        AnalyticKind::Harmonic { omega, energy } => {
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(QhjError::InvalidInput(format!("harmonic basis needs omega > 0, got {omega}")));
            }
            let ground = 0.5 * consts.hbar * omega;
            if (energy - ground).abs() > 1e-12 * ground.max(1.0) {
                return Err(QhjError::InvalidInput(format!(
                    "closed-form harmonic basis only at the ground-state energy {ground}, got {energy}"
                )));
            }
            (ground, Potential1D::harmonic(omega), BasisSource::HarmonicGround { omega })
        }
    };
    let states: Vec<AxisState> = match source {
        BasisSource::Free { k } => grid.points().into_iter().map(|x| free_state(k, x)).collect(),
        BasisSource::HarmonicGround { omega } => {
            let alpha = consts.mass * omega / consts.hbar;
            grid.points().into_iter().map(|x| harmonic_ground_state(alpha, x)).collect()
        }
        _ => unreachable!(),
    };
    if states.iter().any(|s| !(s.phi2.abs() < GROWTH_LIMIT && s.dphi2.abs() < GROWTH_LIMIT)) {
        return Err(QhjError::Growth { x: grid.end(), limit: GROWTH_LIMIT });
    }
    let mut pair = BasisPair::from_samples(
        *grid,
        states.iter().map(|s| s.phi1).collect(),
        states.iter().map(|s| s.dphi1).collect(),
        states.iter().map(|s| s.phi2).collect(),
        states.iter().map(|s| s.dphi2).collect(),
        energy,
        potential,
        *consts,
    )?;
    pair.source = source;
    Ok(pair)
}

/// φ1φ2' - φ1'φ2 at grid node `x`.
pub fn wronskian(pair: &BasisPair, x: f64) -> Result<f64> {
    Ok(pair.state(pair.grid.index_of(x)?).wronskian())
}

/// Scales φ2 and φ2' by target/W so the Wronskian becomes `target`.
pub fn rescale_to_wronskian(pair: &BasisPair, target: f64) -> Result<BasisPair> {
    if target == 0.0 || !target.is_finite() {
        return Err(QhjError::InvalidInput(format!("target Wronskian must be nonzero and finite, got {target}")));
    }
    if !pair.is_independent() {
        return Err(QhjError::InvalidInput("cannot rescale a dependent pair".into()));
    }
    let factor = target / pair.wronskian;
    let mut out = pair.clone();
    out.phi2.iter_mut().for_each(|v| *v *= factor);
    out.dphi2.iter_mut().for_each(|v| *v *= factor);
    out.wronskian = target;
    Ok(out)
}

/// Relative residual of the Schrödinger equation over interior grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeResidual {
    pub x: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl SeResidual {
    pub fn max(&self) -> f64 {
        self.phi1.iter().chain(&self.phi2).fold(0.0, |m, v| m.max(*v))
    }
}

/// |-(ħ²/2m)φ'' + (V - E)φ| / scale at each interior node, φ'' by
/// fourth-order central differences of the samples. The scale is the larger
/// of the kinetic term at the node and the potential term over the stencil.
pub fn se_residual_samples(
    grid: &Grid1D,
    phi: &[f64],
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if phi.len() != grid.n {
        return Err(QhjError::GridMismatch(format!("{} samples on a grid of {}", phi.len(), grid.n)));
    }
    let c = consts.hbar * consts.hbar / (2.0 * consts.mass);
    let pot: Vec<f64> =
        (0..grid.n).map(|i| Ok((p.eval(grid.x(i), consts)? - energy) * phi[i])).collect::<Result<_>>()?;
    let mut xs = Vec::new();
    let mut res = Vec::new();
    for i in 2..grid.n.saturating_sub(2) {
        let d2 = central_d2(phi, i, grid.dx).expect("interior node");
        let kinetic = -c * d2;
        let stencil_pot = pot[i - 2..=i + 2].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = kinetic.abs().max(stencil_pot).max(SCALE_FLOOR);
        xs.push(grid.x(i));
        res.push((kinetic + pot[i]).abs() / scale);
    }
    Ok((xs, res))
}

pub fn se_residual(pair: &BasisPair, p: &Potential1D, energy: f64, consts: &PhysicalConstants) -> Result<SeResidual> {
    let (x, phi1) = se_residual_samples(&pair.grid, &pair.phi1, p, energy, consts)?;
    let (_, phi2) = se_residual_samples(&pair.grid, &pair.phi2, p, energy, consts)?;
    Ok(SeResidual { x, phi1, phi2 })
}

/// Tabulates a potential on a grid; monotone cubic interpolation in between.
pub fn tabulate(p: &Potential1D, grid: &Grid1D, consts: &PhysicalConstants) -> Result<Potential1D> {
    let xs = grid.points();
    let vs = xs.iter().map(|x| p.eval(*x, consts)).collect::<Result<Vec<_>>>()?;
    Potential1D::tabulated(xs, vs, Interpolation::MonotoneCubic)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAT: PhysicalConstants = PhysicalConstants { hbar: 1.0, mass: 1.0 };

    fn sym_grid(half: f64, dx: f64) -> Grid1D {
        let n = (2.0 * half / dx).round() as usize + 1;
        Grid1D::new(-half, dx, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 0.0, 100).is_err());
        assert!(Grid1D::new(0.0, 0.1, 15).is_err());
        let g = Grid1D::new(-1.0, 0.1, 21).unwrap();
        assert_eq!(g.index_of(0.0).unwrap(), 10);
        assert!(g.index_of(0.05).is_err());
        assert!(g.index_of(1.1).is_err());
        assert!((g.end() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_solver_matches_sin_cos() {
        let g = Grid1D::new(0.0, 0.01, 1001).unwrap();
        let pair = solve_basis_pair(&Potential1D::Free, 0.5, &g, (0.0, 1.0), (1.0, 0.0), &NAT).unwrap();
        for i in 0..g.n {
            let x = g.x(i);
            assert!((pair.phi1[i] - x.sin()).abs() < 1e-9);
            assert!((pair.phi2[i] - x.cos()).abs() < 1e-9);
            assert!((pair.dphi1[i] - x.cos()).abs() < 1e-9);
        }
        assert_eq!(pair.wronskian, -1.0);
        pair.validate().unwrap();
    }

    #[test]
    fn harmonic_ground_state_from_solver() {
        let g = sym_grid(4.0, 0.01);
        let pair =
            solve_basis_pair_from(&Potential1D::harmonic(1.0), 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
        for i in 0..g.n {
            let x = g.x(i);
            let exact = (-0.5 * x * x).exp();
            assert!((pair.phi1[i] - exact).abs() < 1e-9, "x = {x}: {} vs {exact}", pair.phi1[i]);
        }
        pair.validate().unwrap();
        let r = se_residual(&pair, &pair.potential, 0.5, &NAT).unwrap();
        assert!(r.max() < 1e-6, "max residual {}", r.max());
    }

    #[test]
    fn harmonic_second_solution_matches_closed_form() {
        let g = sym_grid(3.0, 0.01);
        let pair =
            solve_basis_pair_from(&Potential1D::harmonic(1.0), 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
        let exact = analytic_basis(AnalyticKind::Harmonic { omega: 1.0, energy: 0.5 }, &g, &NAT).unwrap();
        for i in 0..g.n {
            assert!((pair.phi2[i] - exact.phi2[i]).abs() < 1e-8 * exact.phi2[i].abs().max(1.0));
        }
    }

    #[test]
    fn dependent_initial_conditions_rejected() {
        let g = Grid1D::new(0.0, 0.01, 100).unwrap();
        let e = solve_basis_pair(&Potential1D::Free, 0.5, &g, (1.0, 2.0), (2.0, 4.0), &NAT);
        assert!(matches!(e, Err(QhjError::InvalidInput(_))));
    }

    #[test]
    fn forbidden_growth_reported() {
        let g = Grid1D::new(0.0, 0.01, 100_000).unwrap();
        let e = solve_basis_pair(&Potential1D::Free, -50.0, &g, (1.0, 0.0), (0.0, 1.0), &NAT);
        assert!(matches!(e, Err(QhjError::Growth { .. })));
    }

    #[test]
    fn analytic_free_wronskians() {
        let g = Grid1D::new(-3.0, 0.01, 601).unwrap();
        for k in [1.0, 2.0] {
            let pair = analytic_basis(AnalyticKind::Free { k }, &g, &NAT).unwrap();
            for x in [-3.0, 0.0, 1.23, 3.0] {
                assert!((wronskian(&pair, x).unwrap() + k).abs() < 1e-14);
            }
        }
        assert!(analytic_basis(AnalyticKind::Free { k: 0.0 }, &g, &NAT).is_err());
    }

    #[test]
    fn analytic_harmonic_wronskian_constant() {
        let g = sym_grid(4.0, 0.01);
        let pair = analytic_basis(AnalyticKind::Harmonic { omega: 1.0, energy: 0.5 }, &g, &NAT).unwrap();
        assert!(pair.wronskian_drift() < 1e-12);
        assert!(analytic_basis(AnalyticKind::Harmonic { omega: 1.0, energy: 0.7 }, &g, &NAT).is_err());
        let c = PhysicalConstants::new(0.5, 2.0).unwrap();
        let g = sym_grid(1.5, 0.002);
        let pair = analytic_basis(AnalyticKind::Harmonic { omega: 1.5, energy: 0.375 }, &g, &c).unwrap();
        assert!(pair.wronskian_drift() < 1e-12);
        assert!(se_residual(&pair, &pair.potential, pair.energy, &c).unwrap().max() < 1e-6);
    }

    #[test]
    fn dependent_pair_flagged() {
        let g = Grid1D::new(0.0, 0.1, 20).unwrap();
        let p: Vec<f64> = g.points().iter().map(|x| x.sin()).collect();
        let d: Vec<f64> = g.points().iter().map(|x| x.cos()).collect();
        let twice = |v: &Vec<f64>| v.iter().map(|a| 2.0 * a).collect::<Vec<_>>();
        let pair = BasisPair::from_samples(g, p.clone(), d.clone(), twice(&p), twice(&d), 0.5, Potential1D::Free, NAT)
            .unwrap();
        assert_eq!(wronskian(&pair, 0.5).unwrap(), 0.0);
        assert!(!pair.is_independent());
        assert!(pair.validate().is_err());
        assert!(rescale_to_wronskian(&pair, 1.0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let g = Grid1D::new(0.0, 0.01, 200).unwrap();
        let pair = analytic_basis(AnalyticKind::Free { k: 1.0 }, &g, &NAT).unwrap();
        // W² = 2m/[ħ²(ab - c²/4)] with a = b = 1, c = 0
        let target = 2f64.sqrt();
        let r = rescale_to_wronskian(&pair, target).unwrap();
        assert_eq!(r.wronskian, target);
        assert!((r.wronskian.powi(2) - 2.0).abs() < 1e-15);
        assert!((wronskian(&r, 1.0).unwrap() - target).abs() < 1e-14);
        assert_eq!(r.phi1, pair.phi1);

        let same = rescale_to_wronskian(&pair, pair.wronskian).unwrap();
        assert_eq!(same, pair);

        let flipped = rescale_to_wronskian(&pair, -pair.wronskian).unwrap();
        for i in 0..g.n {
            assert_eq!(flipped.phi2[i], -pair.phi2[i]);
        }
        assert!(rescale_to_wronskian(&pair, 0.0).is_err());
    }

    #[test]
    fn residual_of_analytic_free_basis() {
        let g = Grid1D::new(-5.0, 0.01, 1001).unwrap();
        let pair = analytic_basis(AnalyticKind::Free { k: 1.0 }, &g, &NAT).unwrap();
        let r = se_residual(&pair, &Potential1D::Free, 0.5, &NAT).unwrap();
        assert!(r.max() < 1e-8, "{}", r.max());
    }

    #[test]
    fn residual_detects_noise() {
        use rand::{Rng, SeedableRng};
        let g = Grid1D::new(-5.0, 0.01, 1001).unwrap();
        let mut pair = analytic_basis(AnalyticKind::Free { k: 1.0 }, &g, &NAT).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for v in pair.phi1.iter_mut() {
            *v *= 1.0 + 0.01 * rng.random_range(-1.0..1.0);
        }
        let r = se_residual(&pair, &Potential1D::Free, 0.5, &NAT).unwrap();
        assert!(r.phi1.iter().fold(0.0f64, |m, v| m.max(*v)) > 1e-3);
    }

    #[test]
    fn state_at_between_nodes() {
        let g = sym_grid(3.0, 0.01);
        let num =
            solve_basis_pair_from(&Potential1D::harmonic(1.0), 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
        let ana = analytic_basis(AnalyticKind::Harmonic { omega: 1.0, energy: 0.5 }, &g, &NAT).unwrap();
        for x in [-2.9973, -0.0042, 1.23456, 2.99] {
            let a = ana.state_at(x).unwrap();
            let b = num.state_at(x).unwrap();
            assert!((a.phi1 - b.phi1).abs() < 1e-9);
            assert!((a.dphi2 - b.dphi2).abs() < 1e-8 * a.dphi2.abs().max(1.0));
        }
        assert!(num.state_at(3.5).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = Grid1D::new(0.0, 0.1, 16).unwrap();
        let pair = analytic_basis(AnalyticKind::Free { k: 1.0 }, &g, &NAT).unwrap();
        let csv = pair.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,phi1,dphi1,phi2,dphi2");
        assert_eq!(lines.count(), 16);
        let j = pair.to_json();
        assert_eq!(j["W"], -1.0);
        assert_eq!(j["E"], 0.5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn linearity(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
                prop_assume!((a * d - b * c).abs() > 0.1);
                let g = Grid1D::new(-2.0, 0.01, 401).unwrap();
                let pot = Potential1D::harmonic(1.3);
                let pair = solve_basis_pair(&pot, 0.9, &g, (a, b), (c, d), &NAT).unwrap();
                let combo = solve_basis_pair(&pot, 0.9, &g, (a + 2.0 * c, b + 2.0 * d), (c, d), &NAT).unwrap();
                for i in 0..g.n {
                    let lin = pair.phi1[i] + 2.0 * pair.phi2[i];
                    prop_assert!((combo.phi1[i] - lin).abs() <= 1e-8 * lin.abs().max(1.0));
                }
            }

            #[test]
            fn wronskian_constancy(w in 0.2f64..2.0, e in 0.1f64..3.0, slope in -1.0f64..1.0) {
                let g = Grid1D::new(-2.0, 0.005, 801).unwrap();
                for pot in [Potential1D::harmonic(w), Potential1D::linear(slope)] {
                    let pair = solve_basis_pair_from(&pot, e, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
                    prop_assert!(pair.wronskian_drift() < WRONSKIAN_DRIFT_TOL);
                }
            }

            #[test]
            fn rescale_is_uniform(t in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
                let g = Grid1D::new(0.0, 0.05, 40).unwrap();
                let pair = analytic_basis(AnalyticKind::Free { k: 1.7 }, &g, &NAT).unwrap();
                let r = rescale_to_wronskian(&pair, t).unwrap();
                prop_assert_eq!(&r.phi1, &pair.phi1);
                let ratio = t / pair.wronskian;
                for i in 0..g.n {
                    prop_assert_eq!(r.phi2[i], pair.phi2[i] * ratio);
                    prop_assert_eq!(r.dphi2[i], pair.dphi2[i] * ratio);
                }
            }
        }
    }
}
