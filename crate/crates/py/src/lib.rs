//! Python bindings for qhj-core.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qhj_core::action1d::{
    action_profile, cascade_profile, floyd_action_profile, floyd_to_slope_form, non_stationarity,
    qshje_residual_profile, ActionForm, ActionParams, FloydParams,
};
use qhj_core::action3d::{
    build_product_basis, embed_sum_in_general, eval_general_action, general_amplitude, parameter_rank, verify_3d,
    GeneralActionParams, Grid3, ProductBasis, RankFamily, SeparableSystem, SumAction, SumActionParams,
};
use qhj_core::cli::{run_suite, Command};
use qhj_core::config::ExperimentConfig;
use qhj_core::microstates::{is_rank_one_tensor, product_coefficients, AxisAmplitudes, CoefficientTensor};
use qhj_core::modified::{check_axis, AxisActionProfile};
use qhj_core::numerics::mod_distance;
use qhj_core::schrodinger::{analytic_basis, rescale_to_wronskian, se_residual, solve_basis_pair_from, AnalyticKind};
use qhj_core::trajectory::{integrate_1d_adaptive, law_residual_profile};
use qhj_core::{Grid1D, PhysicalConstants, Potential1D, QhjError};

fn err(e: QhjError) -> PyErr {
    match e {
        QhjError::InvalidInput(_)
        | QhjError::OutOfDomain { .. }
        | QhjError::OffGrid { .. }
        | QhjError::GridMismatch(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn consts(hbar: f64, mass: f64) -> PyResult<PhysicalConstants> {
    PhysicalConstants::new(hbar, mass).map_err(err)
}

fn params(mu: f64, nu: f64, l: f64, form: &str) -> PyResult<ActionParams> {
    let form = match form {
        "ratio" => ActionForm::Ratio,
        "slope" => ActionForm::Slope,
        other => return Err(PyValueError::new_err(format!("unknown action form '{other}' (expected ratio or slope)"))),
    };
    ActionParams::new(mu, nu, l, form).map_err(err)
}

/// Two real solutions of the one-dimensional Schrödinger equation on a grid.
#[pyclass(module = "qhj", frozen, skip_from_py_object)]
#[derive(Clone)]
struct BasisPair {
    inner: qhj_core::BasisPair,
}

#[pymethods]
impl BasisPair {
    /// Numeric pair for V = mω²x²/2 at energy E, initial conditions at `anchor`.
    #[staticmethod]
    #[pyo3(signature = (omega, energy, lo, hi, n, anchor=0.0, ic1=(1.0, 0.0), ic2=(0.0, 1.0), hbar=1.0, mass=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn harmonic(
        omega: f64,
        energy: f64,
        lo: f64,
        hi: f64,
        n: usize,
        anchor: f64,
        ic1: (f64, f64),
        ic2: (f64, f64),
        hbar: f64,
        mass: f64,
    ) -> PyResult<Self> {
        let g = Grid1D::spanning(lo, hi, n).map_err(err)?;
        let c = consts(hbar, mass)?;
        let inner =
            solve_basis_pair_from(&Potential1D::harmonic(omega), energy, &g, anchor, ic1, ic2, &c).map_err(err)?;
        Ok(Self { inner })
    }

    /// Closed-form (sin kx, cos kx) at E = ħ²k²/2m.
    #[staticmethod]
    #[pyo3(signature = (k, lo, hi, n, hbar=1.0, mass=1.0))]
    fn free(k: f64, lo: f64, hi: f64, n: usize, hbar: f64, mass: f64) -> PyResult<Self> {
        let g = Grid1D::spanning(lo, hi, n).map_err(err)?;
        let inner = analytic_basis(AnalyticKind::Free { k }, &g, &consts(hbar, mass)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid.points()
    }
    #[getter]
    fn phi1(&self) -> Vec<f64> {
        self.inner.phi1.clone()
    }
    #[getter]
    fn phi2(&self) -> Vec<f64> {
        self.inner.phi2.clone()
    }
    #[getter]
    fn dphi1(&self) -> Vec<f64> {
        self.inner.dphi1.clone()
    }
    #[getter]
    fn dphi2(&self) -> Vec<f64> {
        self.inner.dphi2.clone()
    }
    #[getter]
    fn wronskian(&self) -> f64 {
        self.inner.wronskian
    }
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy
    }

    /// Largest scaled Schrödinger residual of either member.
    fn se_residual(&self) -> PyResult<f64> {
        let p = &self.inner;
        Ok(se_residual(p, &p.potential, p.energy, &p.consts).map_err(err)?.max())
    }

    fn wronskian_drift(&self) -> f64 {
        self.inner.wronskian_drift()
    }

    /// Copy with φ2 scaled so the Wronskian equals `target`.
    fn rescaled(&self, target: f64) -> PyResult<Self> {
        Ok(Self { inner: rescale_to_wronskian(&self.inner, target).map_err(err)? })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// S0 over the grid of `pair`.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, l=0.0, form="ratio"))]
fn action(pair: &BasisPair, mu: f64, nu: f64, l: f64, form: &str) -> PyResult<Vec<f64>> {
    action_profile(&params(mu, nu, l, form)?, &pair.inner).map_err(err)
}

/// (S0, S0', S0'', S0''') at every node.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, l=0.0, form="ratio"))]
fn action_derivatives(pair: &BasisPair, mu: f64, nu: f64, l: f64, form: &str) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let p = &pair.inner;
    let c = cascade_profile(&params(mu, nu, l, form)?, p, &p.potential, p.energy, &p.consts).map_err(err)?;
    Ok(c.into_iter().map(|d| (d.s0, d.s1, d.s2, d.s3)).collect())
}

/// Scaled residual of the third-order equation at every node.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, l=0.0, form="ratio"))]
fn qshje_residual(pair: &BasisPair, mu: f64, nu: f64, l: f64, form: &str) -> PyResult<Vec<f64>> {
    let p = &pair.inner;
    qshje_residual_profile(&params(mu, nu, l, form)?, p, &p.potential, p.energy, &p.consts).map_err(err)
}

/// (holds, expected sign, min |S0'|) for the never-constant property.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, form="ratio"))]
fn non_stationary(pair: &BasisPair, mu: f64, nu: f64, form: &str) -> PyResult<(bool, f64, f64)> {
    let ns = non_stationarity(&params(mu, nu, 0.0, form)?, &pair.inner).map_err(err)?;
    Ok((ns.holds(), ns.expected_sign, ns.min_abs_slope))
}

/// Largest mod-πħ gap between Floyd's form and the equivalent slope form
/// after scaling the basis to the Wronskian Floyd's constants require.
#[pyfunction]
fn floyd_deviation(pair: &BasisPair, a: f64, b: f64, c: f64, k: f64) -> PyResult<f64> {
    let p = &pair.inner;
    let f = FloydParams::new(a, b, c, k).map_err(err)?;
    let scaled = rescale_to_wronskian(p, f.wronskian_magnitude(&p.consts) * p.wronskian.signum()).map_err(err)?;
    let u = floyd_action_profile(&f, &scaled).map_err(err)?;
    let v = action_profile(&floyd_to_slope_form(&f, &p.consts).map_err(err)?, &scaled).map_err(err)?;
    Ok(u.iter().zip(&v).fold(0.0, |m, (x, y)| m.max(mod_distance(*x, *y, std::f64::consts::PI * p.consts.hbar))))
}

/// Three free axes with wave numbers `k` and the product basis built on them.
#[pyclass(module = "qhj", frozen)]
struct FreeSystem {
    system: SeparableSystem,
    basis: ProductBasis,
}

#[pymethods]
impl FreeSystem {
    #[new]
    #[pyo3(signature = (k, lo=-4.0, hi=4.0, n=1601, hbar=1.0, mass=1.0))]
    fn new(k: [f64; 3], lo: f64, hi: f64, n: usize, hbar: f64, mass: f64) -> PyResult<Self> {
        let g = Grid1D::spanning(lo, hi, n).map_err(err)?;
        let system = SeparableSystem::free(k, [g; 3], consts(hbar, mass)?).map_err(err)?;
        let basis = build_product_basis(&system).map_err(err)?;
        Ok(Self { system, basis })
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.system.total_energy()
    }

    /// Sum of three one-dimensional actions with γ1..γ6.
    #[pyo3(signature = (gamma, point, l=0.0))]
    fn sum_action(&self, gamma: [f64; 6], point: [f64; 3], l: f64) -> PyResult<f64> {
        let g = SumActionParams::new(gamma, l).map_err(err)?;
        SumAction::new(g, &self.system).and_then(|a| a.eval(point)).map_err(err)
    }

    /// ħ·angle(Σνφ, Σμφ) + ħl over the eight products.
    #[pyo3(signature = (nu, mu, point, l=0.0))]
    fn general_action(&self, nu: [f64; 8], mu: [f64; 8], point: [f64; 3], l: f64) -> PyResult<f64> {
        let p = GeneralActionParams::new(nu, mu, l).map_err(err)?;
        eval_general_action(&p, &self.basis, point).map_err(err)
    }

    /// (λ, δ) with which the general action reproduces the sum action.
    #[pyo3(signature = (gamma, l=0.0))]
    fn embed(&self, gamma: [f64; 6], l: f64) -> PyResult<([f64; 8], [f64; 8])> {
        let g = embed_sum_in_general(&SumActionParams::new(gamma, l).map_err(err)?).map_err(err)?;
        Ok((g.nu, g.mu))
    }

    /// (rank, singular values) of the parameters → sampled ∇S0 map.
    #[pyo3(signature = (family, samples=64, seed=20240607))]
    fn rank(&self, family: &str, samples: usize, seed: u64) -> PyResult<(usize, Vec<f64>)> {
        let fam: RankFamily = family.parse().map_err(err)?;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let pts = self.system.random_points(samples, 0.2, &mut rng);
        let r = parameter_rank(fam, None, &self.basis, &pts, seed).map_err(err)?;
        Ok((r.rank, r.singular_values))
    }

    /// (max QSHJE residual, max continuity residual) of the general action
    /// and its amplitude on a cube grid.
    #[pyo3(signature = (nu, mu, lo, hi, n=20, stencil_h=2.5e-3))]
    fn verify_field(
        &self,
        nu: [f64; 8],
        mu: [f64; 8],
        lo: f64,
        hi: f64,
        n: usize,
        stencil_h: f64,
    ) -> PyResult<(f64, f64)> {
        let p = GeneralActionParams::new(nu, mu, 0.0).map_err(err)?;
        let mut grid = Grid3::cube(lo, hi, n).map_err(err)?;
        grid.stencil_h = stencil_h;
        let rep = verify_3d(
            |pt| eval_general_action(&p, &self.basis, pt),
            |pt| general_amplitude(&p, &self.basis, pt),
            &self.system.potential,
            self.system.total_energy(),
            &grid,
            &self.system.consts,
        )
        .map_err(err)?;
        Ok((rep.qshje_residual_max, rep.continuity_residual_max))
    }
}

fn tensor(c: Vec<Complex64>) -> PyResult<CoefficientTensor> {
    let arr: [Complex64; 8] = c
        .try_into()
        .map_err(|v: Vec<Complex64>| PyValueError::new_err(format!("expected 8 coefficients, got {}", v.len())))?;
    CoefficientTensor::new(arr).map_err(err)
}

/// Eight coefficients x_i·y_j·z_k at index 4i + 2j + k.
#[pyfunction]
fn product_tensor(x: [Complex64; 2], y: [Complex64; 2], z: [Complex64; 2]) -> PyResult<Vec<Complex64>> {
    Ok(product_coefficients(&AxisAmplitudes::from_pairs(x, y, z)).map_err(err)?.c.to_vec())
}

/// (separable, max minor, witness axes or None).
#[pyfunction]
#[pyo3(signature = (coefficients, tol=1e-9))]
#[allow(clippy::type_complexity)]
fn separability(coefficients: Vec<Complex64>, tol: f64) -> PyResult<(bool, f64, Option<[[Complex64; 2]; 3]>)> {
    let s = is_rank_one_tensor(&tensor(coefficients)?, tol).map_err(err)?;
    Ok((s.separable, s.max_minor, s.witness.map(|w| w.axes())))
}

/// Per-c1 summary of the modified equation on one axis: (route difference,
/// amplitude route, continuity, closed form) maxima.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, c1, l=0.0))]
fn modified_check(pair: &BasisPair, mu: f64, nu: f64, c1: f64, l: f64) -> PyResult<(f64, f64, f64, f64)> {
    let p = &pair.inner;
    let profile = AxisActionProfile::from_action(&params(mu, nu, l, "ratio")?, p, &p.potential, p.energy, &p.consts)
        .map_err(err)?;
    let e = check_axis(&profile, c1, &p.potential, p.energy, &p.consts).map_err(err)?.entry;
    Ok((e.route_difference, e.max_amplitude_route, e.max_continuity, e.max_closed_form))
}

/// (times, positions, velocities, law residual, boundary hit) from x0.
#[pyfunction]
#[pyo3(signature = (pair, mu, nu, x0, t_end, dt=None))]
#[allow(clippy::type_complexity)]
fn trajectory(
    pair: &BasisPair,
    mu: f64,
    nu: f64,
    x0: f64,
    t_end: f64,
    dt: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, bool)> {
    let p = &pair.inner;
    let bp = params(mu, nu, 0.0, "ratio")?;
    let t = integrate_1d_adaptive(&bp, p, &p.potential, p.energy, x0, t_end, dt, &p.consts).map_err(err)?;
    let r = law_residual_profile(&t, &bp, p, &p.potential, p.energy, &p.consts).map_err(err)?;
    Ok((t.times, t.positions, t.velocities, r, t.boundary_hit))
}

/// Runs a verification suite and returns its JSON report as a string.
#[pyfunction]
#[pyo3(signature = (command, config=None))]
fn run(command: &str, config: Option<&str>) -> PyResult<String> {
    let cfg = match config {
        Some(text) => ExperimentConfig::from_toml(text).map_err(err)?,
        None => ExperimentConfig::bundled(),
    };
    let cmd = match command {
        "basis" => Command::Basis,
        "action1d" => Command::Action1d,
        "compose" => Command::Compose,
        "rank" => Command::Rank { family: None },
        "modified" => Command::Modified,
        "microstates" => Command::Microstates,
        "trajectory" => Command::Trajectory,
        other => return Err(PyValueError::new_err(format!("unknown suite '{other}'"))),
    };
    let out = run_suite(cmd, &cfg).map_err(err)?;
    Ok(out[0].report(cfg.seed).to_string())
}

#[pymodule]
fn qhj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<BasisPair>()?;
    m.add_class::<FreeSystem>()?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(action_derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(qshje_residual, m)?)?;
    m.add_function(wrap_pyfunction!(non_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(floyd_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(product_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(separability, m)?)?;
    m.add_function(wrap_pyfunction!(modified_check, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
