//! Trajectories obeying the energy-conservation law (1/2)·S0'·ẋ + V = E.
//!
//! In one dimension the law is a first-order ODE, ẋ = 2(E - V)/S0', and is
//! integrated with classical Runge-Kutta steps. In three dimensions only the
//! residual of (1/2)∇S0·ẋ + V - E along supplied velocities is evaluated.

use std::fmt::Write as _;

use serde::Serialize;

use crate::action1d::{slope_cascade, ActionParams};
use crate::error::{QhjError, Result};
use crate::numerics::{fmt_f64, SCALE_FLOOR};
use crate::potentials::{PhysicalConstants, Potential1D, Potential3D};
use crate::schrodinger::BasisPair;

/// Largest number of dt halvings in [`integrate_1d_adaptive`].
pub const MAX_HALVINGS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory1D {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub dt: f64,
    /// Integration stopped because the next step would leave the grid.
    pub boundary_hit: bool,
}

impl Trajectory1D {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_position(&self) -> f64 {
        *self.positions.last().expect("trajectory has at least the initial point")
    }
}

/// Right-hand side of the one-dimensional law.
#[derive(Debug, Clone)]
pub struct LawField<'a> {
    params: ActionParams,
    pair: &'a BasisPair,
    potential: &'a Potential1D,
    energy: f64,
    consts: PhysicalConstants,
}

impl<'a> LawField<'a> {
    pub fn new(
        params: &ActionParams,
        pair: &'a BasisPair,
        potential: &'a Potential1D,
        energy: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        params.validate()?;
        consts.validate()?;
        Ok(Self { params: *params, pair, potential, energy, consts: *consts })
    }

    /// S0'(x) from the closed-form cascade.
    pub fn slope(&self, x: f64) -> Result<f64> {
        let s = self.pair.state_at(x)?;
        let s1 = slope_cascade(&self.params, &s, self.pair.wronskian, 0.0, self.consts.hbar).0;
        if s1 == 0.0 || !s1.is_finite() {
            return Err(QhjError::SingularSlope { x });
        }
        Ok(s1)
    }

    /// ẋ = 2(E - V(x))/S0'(x).
    pub fn velocity(&self, x: f64) -> Result<f64> {
        Ok(2.0 * (self.energy - self.potential.eval(x, &self.consts)?) / self.slope(x)?)
    }

    /// Largest |ẋ| over the grid nodes.
    pub fn max_speed(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in self.pair.grid.points() {
            worst = worst.max(self.velocity(x)?.abs());
        }
        Ok(worst)
    }

    /// Time step with max |ẋ|·dt = dx/2.
    pub fn default_dt(&self) -> Result<f64> {
        let v = self.max_speed()?;
        if v == 0.0 {
            return Err(QhjError::InvalidInput("velocity vanishes on the whole grid".into()));
        }
        Ok(0.5 * self.pair.grid.dx / v)
    }

    /// Scaled residual |(1/2)S0'·v + V - E| / max(|(1/2)S0'·v|, |V|, |E|).
    pub fn residual(&self, x: f64, v: f64) -> Result<f64> {
        let pot = self.potential.eval(x, &self.consts)?;
        let kinetic = 0.5 * self.slope(x)? * v;
        let scale = [kinetic, pot, self.energy].iter().fold(SCALE_FLOOR, |m, t| m.max(t.abs()));
        Ok((kinetic + pot - self.energy).abs() / scale)
    }
}

fn integrate(field: &LawField, x0: f64, t_end: f64, dt: f64, direction: f64) -> Result<Trajectory1D> {
    let grid = &field.pair.grid;
    if !(grid.x0 < x0 && x0 < grid.end()) {
        return Err(QhjError::InvalidInput(format!("x0 = {x0} is not inside the grid ({}, {})", grid.x0, grid.end())));
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(QhjError::InvalidInput("t_end and dt must be positive".into()));
    }
    let f = |x: f64| -> Result<Option<f64>> {
        if !grid.contains(x) {
            return Ok(None);
        }
        Ok(Some(direction * field.velocity(x)?))
    };
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory1D { times: vec![0.0], positions: vec![x0], velocities: vec![], dt, boundary_hit: false };
    let mut x = x0;
    let mut v = f(x)?.expect("x0 is inside the grid");
    for n in 0..steps {
        let t = n as f64 * dt;
        if v.abs() * dt > grid.dx {
            return Err(QhjError::StepSize { t, displacement: v.abs() * dt, limit: grid.dx });
        }
        let k1 = v;
        let Some(k2) = f(x + 0.5 * dt * k1)? else {
            traj.boundary_hit = true;
            break;
        };
        let Some(k3) = f(x + 0.5 * dt * k2)? else {
            traj.boundary_hit = true;
            break;
        };
        let Some(k4) = f(x + dt * k3)? else {
            traj.boundary_hit = true;
            break;
        };
        let next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let Some(vn) = f(next)? else {
            traj.boundary_hit = true;
            break;
        };
        traj.velocities.push(direction * v);
        x = next;
        v = vn;
        traj.times.push((n + 1) as f64 * dt);
        traj.positions.push(x);
    }
    traj.velocities.push(direction * v);
    Ok(traj)
}

/// Integrates ẋ = 2(E - V)/S0' from x0 up to t_end with fixed step dt.
#[allow(clippy::too_many_arguments)]
pub fn integrate_1d(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    consts: &PhysicalConstants,
) -> Result<Trajectory1D> {
    let field = LawField::new(params, pair, p, energy, consts)?;
    integrate(&field, x0, t_end, dt, 1.0)
}

/// Integrates the time-reversed law ẋ = -2(E - V)/S0'. Velocities are
/// reported for the reversed motion.
#[allow(clippy::too_many_arguments)]
pub fn integrate_1d_reverse(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    consts: &PhysicalConstants,
) -> Result<Trajectory1D> {
    let field = LawField::new(params, pair, p, energy, consts)?;
    integrate(&field, x0, t_end, dt, -1.0)
}

/// Like [`integrate_1d`], halving dt on step-size errors. Without `dt` the
/// step starts from [`LawField::default_dt`].
#[allow(clippy::too_many_arguments)]
pub fn integrate_1d_adaptive(
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    x0: f64,
    t_end: f64,
    dt: Option<f64>,
    consts: &PhysicalConstants,
) -> Result<Trajectory1D> {
    let field = LawField::new(params, pair, p, energy, consts)?;
    let mut dt = match dt {
        Some(dt) => dt,
        None => field.default_dt()?,
    };
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        match integrate(&field, x0, t_end, dt, 1.0) {
            Err(e @ QhjError::StepSize { .. }) => {
                last = Some(e);
                dt *= 0.5;
            }
            other => return other,
        }
    }
    Err(last.expect("loop ran at least once"))
}

/// dx/dt from the positions alone: fourth-order central differences inside,
/// fourth-order one-sided stencils at the two ends on each side.
pub fn finite_difference_velocity(traj: &Trajectory1D) -> Option<Vec<f64>> {
    let x = &traj.positions;
    let n = x.len();
    if n < 5 {
        return None;
    }
    let h = traj.dt;
    let fwd0 = |a: &[f64]| (-25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2] + 16.0 * a[3] - 3.0 * a[4]) / (12.0 * h);
    let fwd1 = |a: &[f64]| (-3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2] - 6.0 * a[3] + a[4]) / (12.0 * h);
    let rev: Vec<f64> = x[n - 5..].iter().rev().copied().collect();
    let mut v = Vec::with_capacity(n);
    v.push(fwd0(&x[..5]));
    v.push(fwd1(&x[..5]));
    for i in 2..n - 2 {
        v.push((x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) / (12.0 * h));
    }
    v.push(-fwd1(&rev));
    v.push(-fwd0(&rev));
    Some(v)
}

/// Residual of the law along the path with ẋ re-derived from the positions,
/// so it does not hold by construction.
pub fn law_residual_profile(
    traj: &Trajectory1D,
    params: &ActionParams,
    pair: &BasisPair,
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let field = LawField::new(params, pair, p, energy, consts)?;
    let Some(v) = finite_difference_velocity(traj) else {
        return Err(QhjError::InvalidInput(format!(
            "trajectory has {} points; at least 5 are needed to differentiate it",
            traj.len()
        )));
    };
    traj.positions.iter().zip(&v).map(|(&x, &v)| field.residual(x, v)).collect()
}

/// CSV with columns t, x, v, residual.
pub fn trajectory_csv(traj: &Trajectory1D, residual: &[f64]) -> String {
    let mut out = String::from("t,x,v,residual\n");
    for i in 0..traj.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(traj.times[i]),
            fmt_f64(traj.positions[i]),
            fmt_f64(traj.velocities[i]),
            fmt_f64(residual.get(i).copied().unwrap_or(f64::NAN))
        );
    }
    out
}

/// Scaled value of (1/2)∇S0·v + V - E at `point`.
pub fn law_residual_3d<G>(
    gradient: G,
    velocity: [f64; 3],
    point: [f64; 3],
    pot: &Potential3D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<f64>
where
    G: Fn([f64; 3]) -> Result<[f64; 3]>,
{
    let g = gradient(point)?;
    let v = pot.eval(point, consts)?;
    let terms = [0, 1, 2].map(|q| 0.5 * g[q] * velocity[q]);
    let scale = terms.iter().chain([v, energy].iter()).fold(SCALE_FLOOR, |m, t| m.max(t.abs()));
    Ok((terms.iter().sum::<f64>() + v - energy).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action3d::{SeparableSystem, SumAction, SumActionParams};
    use crate::schrodinger::{analytic_basis, solve_basis_pair_from, AnalyticKind, Grid1D};

    const NAT: PhysicalConstants = PhysicalConstants { hbar: 1.0, mass: 1.0 };

    fn free() -> BasisPair {
        analytic_basis(AnalyticKind::Free { k: 1.0 }, &Grid1D::spanning(-5.0, 5.0, 1001).unwrap(), &NAT).unwrap()
    }

    fn harmonic() -> (BasisPair, Potential1D) {
        let g = Grid1D::spanning(-2.0, 2.0, 801).unwrap();
        let p = Potential1D::harmonic(1.0);
        (solve_basis_pair_from(&p, 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap(), p)
    }

    #[test]
    fn free_particle_is_classical() {
        let pair = free();
        let params = ActionParams::ratio(0.0, 0.0, 0.0).unwrap();
        let t = integrate_1d(&params, &pair, &Potential1D::Free, 0.5, 0.0, 3.0, 0.005, &NAT).unwrap();
        assert!(!t.boundary_hit);
        assert_eq!(t.len(), 601);
        for i in 0..t.len() {
            assert!((t.velocities[i] - 1.0).abs() < 1e-10);
            assert!((t.positions[i] - t.times[i]).abs() < 1e-10);
        }
        let res = law_residual_profile(&t, &params, &pair, &Potential1D::Free, 0.5, &NAT).unwrap();
        assert!(res.iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn boundary_stops_integration() {
        let pair = free();
        let params = ActionParams::ratio(0.0, 0.0, 0.0).unwrap();
        let t = integrate_1d(&params, &pair, &Potential1D::Free, 0.5, 4.0, 3.0, 0.005, &NAT).unwrap();
        assert!(t.boundary_hit);
        assert!(t.final_position() <= 5.0);
        assert_eq!(t.velocities.len(), t.len());
        assert!(integrate_1d(&params, &pair, &Potential1D::Free, 0.5, 6.0, 1.0, 0.01, &NAT).is_err());
    }

    #[test]
    fn step_size_guard_and_halving() {
        let pair = free();
        let params = ActionParams::ratio(0.0, 0.0, 0.0).unwrap();
        let err = integrate_1d(&params, &pair, &Potential1D::Free, 0.5, 0.0, 1.0, 0.5, &NAT).unwrap_err();
        assert!(matches!(err, QhjError::StepSize { .. }));
        let t = integrate_1d_adaptive(&params, &pair, &Potential1D::Free, 0.5, 0.0, 1.0, Some(0.5), &NAT).unwrap();
        assert!(t.dt <= pair.grid.dx);
        let t = integrate_1d_adaptive(&params, &pair, &Potential1D::Free, 0.5, 0.0, 1.0, None, &NAT).unwrap();
        assert!((t.dt - 0.005).abs() < 1e-15);
    }

    #[test]
    fn harmonic_path_obeys_law_and_reverses() {
        let (pair, p) = harmonic();
        let params = ActionParams::ratio(0.3, -0.5, 0.0).unwrap();
        let t = integrate_1d_adaptive(&params, &pair, &p, 0.5, -0.2, 1.0, None, &NAT).unwrap();
        assert!(!t.boundary_hit);
        let res = law_residual_profile(&t, &params, &pair, &p, 0.5, &NAT).unwrap();
        assert!(res.iter().fold(0.0f64, |m, r| m.max(*r)) < 1e-6);
        let back = integrate_1d_reverse(&params, &pair, &p, 0.5, t.final_position(), 1.0, t.dt, &NAT).unwrap();
        assert!((back.final_position() - (-0.2)).abs() < 1e-6);
        let csv = trajectory_csv(&t, &res);
        assert!(csv.starts_with("t,x,v,residual\n"));
        assert_eq!(csv.lines().count(), t.len() + 1);
    }

    #[test]
    fn perturbed_path_is_detected() {
        let (pair, p) = harmonic();
        let params = ActionParams::ratio(0.3, -0.5, 0.0).unwrap();
        let mut t = integrate_1d(&params, &pair, &p, 0.5, -0.2, 0.5, 1e-3, &NAT).unwrap();
        for (x, tm) in t.positions.iter_mut().zip(&t.times) {
            *x += 0.01 * tm * tm;
        }
        let res = law_residual_profile(&t, &params, &pair, &p, 0.5, &NAT).unwrap();
        assert!(res.iter().fold(0.0f64, |m, r| m.max(*r)) > 1e-3);
    }

    #[test]
    fn velocity_sign_is_constant_in_the_allowed_region() {
        let (pair, p) = harmonic();
        let params = ActionParams::ratio(0.3, -0.5, 0.0).unwrap();
        let field = LawField::new(&params, &pair, &p, 0.5, &NAT).unwrap();
        let signs: Vec<f64> = (-9..=9).map(|i| field.velocity(0.1 * i as f64).unwrap().signum()).collect();
        assert!(signs.iter().all(|s| *s == signs[0]));
        assert!(field.velocity(1.5).unwrap().signum() == -signs[0]);
    }

    fn sum_system() -> (SeparableSystem, SumAction) {
        let g = Grid1D::spanning(-2.0, 2.0, 801).unwrap();
        let h = solve_basis_pair_from(&Potential1D::harmonic(1.0), 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
        let f = analytic_basis(AnalyticKind::Free { k: 0.8 }, &g, &NAT).unwrap();
        let sys = SeparableSystem::new([h.clone(), f, h], NAT).unwrap();
        let a = SumAction::new(SumActionParams::new([0.2, -0.4, 0.6, 0.1, -0.3, 0.5], 0.0).unwrap(), &sys).unwrap();
        (sys, a)
    }

    #[test]
    fn three_dimensional_law_from_axis_laws() {
        let (sys, a) = sum_system();
        for point in [[0.1, -0.3, 0.7], [-1.2, 1.0, 0.2], [0.9, 0.0, -0.6]] {
            let g = a.gradient(point).unwrap();
            let v = [0, 1, 2]
                .map(|q| 2.0 * (sys.energies[q] - sys.pairs[q].potential.eval(point[q], &NAT).unwrap()) / g[q]);
            let r = law_residual_3d(|p| a.gradient(p), v, point, &sys.potential, sys.total_energy(), &NAT).unwrap();
            assert!(r < 1e-8);
            let r0 =
                law_residual_3d(|p| a.gradient(p), [0.0; 3], point, &sys.potential, sys.total_energy(), &NAT).unwrap();
            let vv = sys.potential.eval(point, &NAT).unwrap();
            let e = sys.total_energy();
            assert!((r0 - (vv - e).abs() / vv.abs().max(e.abs())).abs() < 1e-15);
        }
    }

    #[test]
    fn three_dimensional_residual_is_linear_in_perturbation() {
        let (sys, a) = sum_system();
        let point = [0.1, -0.3, 0.7];
        let g = a.gradient(point).unwrap();
        let v =
            [0, 1, 2].map(|q| 2.0 * (sys.energies[q] - sys.pairs[q].potential.eval(point[q], &NAT).unwrap()) / g[q]);
        let res = |eps: f64| {
            let w = [v[0] + eps, v[1] - 0.5 * eps, v[2] + 0.25 * eps];
            let raw = 0.5 * (g[0] * w[0] + g[1] * w[1] + g[2] * w[2]) + sys.potential.eval(point, &NAT).unwrap()
                - sys.total_energy();
            (law_residual_3d(|p| a.gradient(p), w, point, &sys.potential, sys.total_energy(), &NAT).unwrap(), raw)
        };
        let (r1, raw1) = res(1e-3);
        let (r2, raw2) = res(2e-3);
        assert!(r1 > 0.0);
        assert!((raw2 / raw1 - 2.0).abs() < 1e-6);
        assert!((r2 / r1 - 2.0).abs() < 1e-2);
    }
}
