//! Experiment configuration read from TOML.
//!
//! Every section is optional; missing sections take the values of the
//! bundled default configuration (see `configs/default.toml`).

use serde::{Deserialize, Serialize};

use crate::action1d::{ActionForm, ActionParams, FloydParams};
use crate::action3d::{Grid3, RankFamily, SeparableSystem};
use crate::error::{QhjError, Result};
use crate::microstates::CoefficientTensor;
use crate::modified::ContinuityConstants;
use crate::potentials::{PhysicalConstants, Potential1D};
use crate::schrodinger::{analytic_basis, solve_basis_pair_from, AnalyticKind, BasisPair, Grid1D};

/// The bundled default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default)]
    pub action1d: Action1dSpec,
    #[serde(default)]
    pub compose: ComposeSpec,
    #[serde(default)]
    pub rank: RankSpec,
    #[serde(default)]
    pub modified: ModifiedSpec,
    #[serde(default)]
    pub microstates: MicrostatesSpec,
    #[serde(default)]
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    20_240_607
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            constants: PhysicalConstants::default(),
            basis: BasisSpec::default(),
            action1d: Action1dSpec::default(),
            compose: ComposeSpec::default(),
            rank: RankSpec::default(),
            modified: ModifiedSpec::default(),
            microstates: MicrostatesSpec::default(),
            trajectory: TrajectorySpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| QhjError::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.basis.grid.to_grid()?;
        self.basis.potential.clone().validate()?;
        self.action1d.params()?;
        if let Some(f) = &self.action1d.floyd {
            f.validate()?;
        }
        self.compose.validated_gamma()?;
        self.compose.grid.to_grid()?;
        self.compose.field_grid.validate()?;
        if self.compose.k.iter().any(|k| !(*k > 0.0)) {
            return Err(QhjError::InvalidInput("compose.k entries must be positive".into()));
        }
        self.microstates.tensor()?;
        Ok(())
    }
}

/// Uniform grid given by its end points and node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<Grid1D> {
        Grid1D::spanning(self.lo, self.hi, self.n)
    }
}

/// How the basis pair is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisMethod {
    /// Runge-Kutta integration from the anchor.
    #[default]
    Numeric,
    /// Closed forms: free (any E > 0) or harmonic at its ground-state energy.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSpec {
    pub potential: Potential1D,
    pub energy: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub method: BasisMethod,
    #[serde(default)]
    pub anchor: f64,
    #[serde(default = "default_ic1")]
    pub ic1: (f64, f64),
    #[serde(default = "default_ic2")]
    pub ic2: (f64, f64),
}

fn default_ic1() -> (f64, f64) {
    (1.0, 0.0)
}

fn default_ic2() -> (f64, f64) {
    (0.0, 1.0)
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            potential: Potential1D::harmonic(1.0),
            energy: 0.5,
            grid: GridSpec { lo: -2.0, hi: 2.0, n: 3201 },
            method: BasisMethod::Numeric,
            anchor: 0.0,
            ic1: default_ic1(),
            ic2: default_ic2(),
        }
    }
}

impl BasisSpec {
    pub fn build(&self, consts: &PhysicalConstants) -> Result<BasisPair> {
        let grid = self.grid.to_grid()?;
        let mut potential = self.potential.clone();
        potential.validate()?;
        match self.method {
            BasisMethod::Numeric => {
                let anchor = grid.x(grid.nearest(self.anchor));
                solve_basis_pair_from(&potential, self.energy, &grid, anchor, self.ic1, self.ic2, consts)
            }
            BasisMethod::Analytic => {
                let kind = match potential {
                    Potential1D::Free if self.energy > 0.0 => {
                        AnalyticKind::Free { k: (2.0 * consts.mass * self.energy).sqrt() / consts.hbar }
                    }
                    Potential1D::Harmonic { omega } => AnalyticKind::Harmonic { omega, energy: self.energy },
                    _ => {
                        return Err(QhjError::InvalidInput(
                            "analytic bases exist for the free potential with E > 0 and the harmonic ground state"
                                .into(),
                        ))
                    }
                };
                analytic_basis(kind, &grid, consts)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Action1dSpec {
    #[serde(default)]
    pub form: ActionForm,
    pub mu: f64,
    pub nu: f64,
    #[serde(default)]
    pub l: f64,
    /// Random valid (μ, ν) draws certified in addition to the configured pair.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub floyd: Option<FloydParams>,
}

fn default_draws() -> usize {
    10
}

impl Default for Action1dSpec {
    fn default() -> Self {
        Self {
            form: ActionForm::Ratio,
            mu: 0.4,
            nu: -0.7,
            l: 0.0,
            draws: default_draws(),
            floyd: Some(FloydParams { a: 2.0, b: 1.5, c: 0.8, k: 0.3 }),
        }
    }
}

impl Action1dSpec {
    pub fn params(&self) -> Result<ActionParams> {
        ActionParams::new(self.mu, self.nu, self.l, self.form)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeSpec {
    /// Wave numbers of the free axes used by the 3D checks.
    pub k: [f64; 3],
    pub grid: GridSpec,
    /// γ1..γ6 of the explicitly dumped sum action.
    pub gamma: [f64; 6],
    #[serde(default)]
    pub l: f64,
    pub configs: usize,
    pub points: usize,
    pub field_grid: Grid3,
}

impl Default for ComposeSpec {
    fn default() -> Self {
        Self {
            k: [1.0, 1.3, 0.7],
            grid: GridSpec { lo: -4.0, hi: 4.0, n: 1601 },
            gamma: [0.3, -0.6, 1.2, 0.1, -0.4, 0.9],
            l: 0.0,
            configs: 20,
            points: 50,
            field_grid: Grid3 { lo: [0.2; 3], hi: [1.0; 3], n: [20; 3], stencil_h: 2.5e-3 },
        }
    }
}

impl ComposeSpec {
    pub fn validated_gamma(&self) -> Result<crate::action3d::SumActionParams> {
        crate::action3d::SumActionParams::new(self.gamma, self.l)
    }

    pub fn system(&self, consts: &PhysicalConstants) -> Result<SeparableSystem> {
        let g = self.grid.to_grid()?;
        SeparableSystem::free(self.k, [g; 3], *consts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSpec {
    /// Sample points; each contributes three gradient components.
    pub samples: usize,
    /// Families run when no `--family` is given.
    pub families: Vec<RankFamily>,
}

impl Default for RankSpec {
    fn default() -> Self {
        Self { samples: 64, families: vec![RankFamily::General, RankFamily::Sum, RankFamily::ProductCoeffs] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModifiedSpec {
    pub c1: Vec<f64>,
    pub constants: ContinuityConstants,
    /// Separation energies checked against `total_energy`.
    pub energies: [f64; 3],
    pub total_energy: f64,
}

impl Default for ModifiedSpec {
    fn default() -> Self {
        Self {
            c1: vec![-0.5, 0.0, 0.3, 1.0],
            constants: ContinuityConstants::new(0.3, -0.1, -0.2),
            energies: [0.5, 0.5, 0.5],
            total_energy: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicrostatesSpec {
    /// Random product tensors in the round-trip check.
    pub round_trips: usize,
    pub tolerance: f64,
    /// Tensor whose separability is reported, as (re, im) pairs.
    pub tensor: Vec<(f64, f64)>,
}

impl Default for MicrostatesSpec {
    fn default() -> Self {
        let mut tensor = vec![(0.0, 0.0); 8];
        tensor[0] = (1.0, 0.0);
        tensor[7] = (1.0, 0.0);
        Self { round_trips: 100, tolerance: crate::microstates::SEPARABILITY_TOL, tensor }
    }
}

impl MicrostatesSpec {
    pub fn tensor(&self) -> Result<CoefficientTensor> {
        if self.tensor.len() != 8 {
            return Err(QhjError::InvalidInput(format!(
                "microstates.tensor needs 8 entries, got {}",
                self.tensor.len()
            )));
        }
        let mut c = [num_complex::Complex64::new(0.0, 0.0); 8];
        for (z, (re, im)) in c.iter_mut().zip(&self.tensor) {
            *z = num_complex::Complex64::new(*re, *im);
        }
        CoefficientTensor::new(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub x0: f64,
    pub t_end: f64,
    /// Fixed step; when absent it is chosen so that max|ẋ|·dt = dx/2.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self { x0: -0.2, t_end: 1.0, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    /// Also write a gnuplot script next to each CSV.
    #[serde(default)]
    pub gnuplot: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "qhj-output".into(), gnuplot: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matches_defaults() {
        assert_eq!(ExperimentConfig::bundled(), ExperimentConfig::default());
    }

    #[test]
    fn empty_config_uses_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(ExperimentConfig::from_toml("sede = 3").is_err());
        let err = ExperimentConfig::from_toml("[compose]\nk = [1.0, 1.0, 1.0]\ngrid = { lo = -1.0, hi = 1.0, n = 201 }\ngamma = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]\nconfigs = 1\npoints = 1\nfield_grid = { lo = [0.0, 0.0, 0.0], hi = [1.0, 1.0, 1.0], n = [4, 4, 4] }\n")
            .unwrap_err();
        assert!(err.to_string().contains("γ1·γ2"));
        assert!(ExperimentConfig::from_toml("[constants]\nhbar = -1.0\nmass = 1.0").is_err());
    }

    #[test]
    fn free_potential_in_toml() {
        let cfg = ExperimentConfig::from_toml(
            "[basis]\npotential = { kind = \"free\" }\nenergy = 0.5\nmethod = \"analytic\"\ngrid = { lo = 0.0, hi = 5.0, n = 501 }\n",
        )
        .unwrap();
        let pair = cfg.basis.build(&cfg.constants).unwrap();
        assert!((pair.wronskian + 1.0).abs() < 1e-15);
    }
}
