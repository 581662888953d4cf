//! Superpositions of the eight product solutions: product-form coefficients,
//! their parameter count, rank-one tensor detection, and bipolar
//! wave-function reconstruction.
//!
//! A coefficient vector c[0..8] is viewed as the 2×2×2 tensor
//! T[i][j][k] = c[4i + 2j + k], with i, j, k selecting the first or second
//! solution along x, y, z respectively (the φ1..φ8 ordering).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QhjError, Result};
use crate::numerics::{central_d2, numerical_rank, SCALE_FLOOR};
use crate::potentials::{PhysicalConstants, Potential1D};
use crate::schrodinger::Grid1D;

/// Default relative tolerance for separability.
pub const SEPARABILITY_TOL: f64 = 1e-9;
/// Singular-value cutoff relative to the largest.
pub const RANK_TOL: f64 = 1e-8;

/// Eight complex coefficients ordered as φ1..φ8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTensor {
    pub c: [Complex64; 8],
}

impl CoefficientTensor {
    pub fn new(c: [Complex64; 8]) -> Result<Self> {
        if c.iter().all(|z| z.norm() == 0.0) {
            return Err(QhjError::InvalidInput("coefficient tensor is identically zero".into()));
        }
        Ok(Self { c })
    }

    pub fn from_real(c: [f64; 8]) -> Result<Self> {
        Self::new(c.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.c[4 * i + 2 * j + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Mode-`mode` flattening as a 2×4 matrix (rows indexed by that mode).
    fn flattening(&self, mode: usize) -> [[Complex64; 4]; 2] {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let idx = [i, j, k];
                    let row = idx[mode];
                    let others: Vec<usize> = (0..3).filter(|&d| d != mode).map(|d| idx[d]).collect();
                    m[row][2 * others[0] + others[1]] = self.get(i, j, k);
                }
            }
        }
        m
    }

    /// Largest |2×2 minor| over the three flattenings.
    pub fn max_minor(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for mode in 0..3 {
            let m = self.flattening(mode);
            for a in 0..4 {
                for b in a + 1..4 {
                    worst = worst.max((m[0][a] * m[1][b] - m[0][b] * m[1][a]).norm());
                }
            }
        }
        worst
    }
}

/// Per-axis amplitudes of φq = aq·Q1 + bq·Q2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAmplitudes {
    pub ax: Complex64,
    pub bx: Complex64,
    pub ay: Complex64,
    pub by: Complex64,
    pub az: Complex64,
    pub bz: Complex64,
}

impl AxisAmplitudes {
    pub fn from_pairs(x: [Complex64; 2], y: [Complex64; 2], z: [Complex64; 2]) -> Self {
        Self { ax: x[0], bx: x[1], ay: y[0], by: y[1], az: z[0], bz: z[1] }
    }

    pub fn axes(&self) -> [[Complex64; 2]; 3] {
        [[self.ax, self.bx], [self.ay, self.by], [self.az, self.bz]]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, pair) in ["x", "y", "z"].iter().zip(self.axes()) {
            if pair[0].norm() == 0.0 && pair[1].norm() == 0.0 {
                return Err(QhjError::InvalidInput(format!("axis {name} amplitudes are both zero")));
            }
        }
        Ok(())
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let mut z = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        Self { ax: z(), bx: z(), ay: z(), by: z(), az: z(), bz: z() }
    }

    #[cfg(test)]
    fn to_vec(self) -> [Complex64; 6] {
        [self.ax, self.bx, self.ay, self.by, self.az, self.bz]
    }
}

/// c'[4i + 2j + k] = x_i · y_j · z_k with component 0 = a, 1 = b.
pub fn product_coefficients(amps: &AxisAmplitudes) -> Result<CoefficientTensor> {
    amps.validate()?;
    let [x, y, z] = amps.axes();
    let mut c = [Complex64::new(0.0, 0.0); 8];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[4 * i + 2 * j + k] = x[i] * y[j] * z[k];
            }
        }
    }
    CoefficientTensor::new(c)
}

/// Real 16×12 Jacobian of the product map at `amps`. Inputs are ordered
/// (Re, Im) of (ax, bx, ay, by, az, bz); outputs (Re, Im) of c'1..c'8.
pub fn product_jacobian(amps: &AxisAmplitudes) -> DMatrix<f64> {
    let [x, y, z] = amps.axes();
    let mut jac = DMatrix::zeros(16, 12);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let out = 4 * i + 2 * j + k;
                // holomorphic partials of x_i y_j z_k
                let partials = [(i, y[j] * z[k]), (2 + j, x[i] * z[k]), (4 + k, x[i] * y[j])];
                for (input, d) in partials {
                    // complex derivative d acts on (Re, Im) as [[Re d, -Im d], [Im d, Re d]]
                    jac[(2 * out, 2 * input)] = d.re;
                    jac[(2 * out, 2 * input + 1)] = -d.im;
                    jac[(2 * out + 1, 2 * input)] = d.im;
                    jac[(2 * out + 1, 2 * input + 1)] = d.re;
                }
            }
        }
    }
    jac
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductRank {
    pub complex_rank: usize,
    pub real_rank: usize,
    pub singular_values: Vec<f64>,
}

/// Rank of the product map at one base point.
pub fn product_map_rank(base: &AxisAmplitudes) -> Result<ProductRank> {
    base.validate()?;
    let (real_rank, singular_values) = numerical_rank(&product_jacobian(base), RANK_TOL);
    Ok(ProductRank { complex_rank: real_rank / 2, real_rank, singular_values })
}

/// Ranks at three generic draws; errors unless they agree.
pub fn product_map_rank_generic(seed: u64) -> Result<(ProductRank, Vec<AxisAmplitudes>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<AxisAmplitudes> = (0..3).map(|_| AxisAmplitudes::random(&mut rng)).collect();
    let ranks = bases.iter().map(product_map_rank).collect::<Result<Vec<_>>>()?;
    if ranks.iter().any(|r| r.real_rank != ranks[0].real_rank) {
        return Err(QhjError::RankInstability {
            ranks: ranks.iter().map(|r| r.real_rank).collect(),
            singular_values: ranks.iter().map(|r| r.singular_values.clone()).collect(),
        });
    }
    Ok((ranks[0].clone(), bases))
}

/// Separability verdict with the recovered per-axis amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separability {
    pub separable: bool,
    /// Largest 2×2 minor over the flattenings divided by max|c|².
    pub max_minor: f64,
    pub witness: Option<AxisAmplitudes>,
    /// max|c - witness product| / max|c| when a witness exists.
    pub reconstruction_error: Option<f64>,
}

/// Rank-one test over the three mode flattenings. The witness is gauge-fixed
/// by setting the first nonzero component of the x and y pairs to 1.
pub fn is_rank_one_tensor(c: &CoefficientTensor, tol: f64) -> Result<Separability> {
    let scale = c.max_abs();
    if scale == 0.0 {
        return Err(QhjError::InvalidInput("coefficient tensor is identically zero".into()));
    }
    let max_minor = c.max_minor() / (scale * scale);
    if max_minor > tol {
        return Ok(Separability { separable: false, max_minor, witness: None, reconstruction_error: None });
    }
    // fibres through the largest entry are proportional to the axis vectors
    let (mut pi, mut pj, mut pk) = (0, 0, 0);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if c.get(i, j, k).norm() > c.get(pi, pj, pk).norm() {
                    (pi, pj, pk) = (i, j, k);
                }
            }
        }
    }
    let pivot = c.get(pi, pj, pk);
    let fx = [c.get(0, pj, pk), c.get(1, pj, pk)];
    let fy = [c.get(pi, 0, pk), c.get(pi, 1, pk)];
    let fz = [c.get(pi, pj, 0), c.get(pi, pj, 1)];
    let first_nonzero = |v: [Complex64; 2]| if v[0].norm() > tol * scale { v[0] } else { v[1] };
    let (gx, gy) = (first_nonzero(fx), first_nonzero(fy));
    let x = fx.map(|v| v / gx);
    let y = fy.map(|v| v / gy);
    let z = fz.map(|v| v * gx * gy / (pivot * pivot));
    let witness = AxisAmplitudes::from_pairs(x, y, z);
    let rebuilt = product_coefficients(&witness)?;
    let err = c.c.iter().zip(&rebuilt.c).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / scale;
    Ok(Separability {
        separable: err <= tol.max(1e-12),
        max_minor,
        witness: Some(witness),
        reconstruction_error: Some(err),
    })
}

/// φ = R(α·exp(iS0/ħ) + β·exp(-iS0/ħ)) pointwise.
pub fn reconstruct_wavefunction(
    r: &[f64],
    s0: &[f64],
    alpha: Complex64,
    beta: Complex64,
    consts: &PhysicalConstants,
) -> Result<Vec<Complex64>> {
    if r.len() != s0.len() {
        return Err(QhjError::GridMismatch(format!("{} amplitude samples vs {} action samples", r.len(), s0.len())));
    }
    if let Some(i) = r.iter().position(|v| !(*v > 0.0)) {
        return Err(QhjError::InvalidInput(format!("amplitude must be positive, sample {i} is {}", r[i])));
    }
    Ok(r.iter()
        .zip(s0)
        .map(|(&amp, &s)| {
            let phase = Complex64::from_polar(1.0, s / consts.hbar);
            amp * (alpha * phase + beta * phase.conj())
        })
        .collect())
}

/// Relative residual of the Schrödinger equation for complex samples, with
/// the same stencil-based scaling as the real residual.
pub fn complex_se_residual(
    grid: &Grid1D,
    psi: &[Complex64],
    p: &Potential1D,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    if psi.len() != grid.n {
        return Err(QhjError::GridMismatch(format!("{} samples on a grid of {}", psi.len(), grid.n)));
    }
    let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.iter().map(|z| z.im).collect();
    let c = consts.hbar * consts.hbar / (2.0 * consts.mass);
    let pot: Vec<Complex64> =
        (0..grid.n).map(|i| Ok(psi[i] * (p.eval(grid.x(i), consts)? - energy))).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(grid.n.saturating_sub(4));
    for i in 2..grid.n.saturating_sub(2) {
        let d2 = Complex64::new(central_d2(&re, i, grid.dx).unwrap(), central_d2(&im, i, grid.dx).unwrap());
        let kinetic = -c * d2;
        let stencil = pot[i - 2..=i + 2].iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let scale = kinetic.norm().max(stencil).max(SCALE_FLOOR);
        out.push((kinetic + pot[i]).norm() / scale);
    }
    Ok(out)
}

/// Per-axis bipolar data at one point: (R, S0, α, β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBipolar {
    pub r: f64,
    pub s0: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl AxisBipolar {
    pub fn value(&self, hbar: f64) -> Complex64 {
        let phase = Complex64::from_polar(1.0, self.s0 / hbar);
        self.r * (self.alpha * phase + self.beta * phase.conj())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipolarExpansion {
    /// Terms ordered by the sign pattern (sx, sy, sz) with z flipping fastest:
    /// (+,+,+), (+,+,-), (+,-,+), (+,-,-), (-,+,+), ...
    pub terms: [Complex64; 8],
    pub total: Complex64,
    /// φx·φy·φz computed directly.
    pub direct: Complex64,
}

impl BipolarExpansion {
    pub fn relative_mismatch(&self) -> f64 {
        (self.total - self.direct).norm() / self.direct.norm().max(SCALE_FLOOR)
    }
}

/// Expands φxφyφz into the eight exponential terms.
pub fn expand_bipolar_product(axes: [AxisBipolar; 3], hbar: f64) -> BipolarExpansion {
    let mut terms = [Complex64::new(0.0, 0.0); 8];
    let rprod = axes[0].r * axes[1].r * axes[2].r;
    for (idx, term) in terms.iter_mut().enumerate() {
        let mut coef = Complex64::new(rprod, 0.0);
        let mut phase = 0.0;
        for (q, axis) in axes.iter().enumerate() {
            let minus = (idx >> (2 - q)) & 1 == 1;
            if minus {
                coef *= axis.beta;
                phase -= axis.s0;
            } else {
                coef *= axis.alpha;
                phase += axis.s0;
            }
        }
        *term = coef * Complex64::from_polar(1.0, phase / hbar);
    }
    let total = terms.iter().sum();
    let direct = axes.iter().map(|a| a.value(hbar)).product();
    BipolarExpansion { terms, total, direct }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action1d::{cascade_profile, ActionParams};
    use crate::schrodinger::solve_basis_pair_from;

    const NAT: PhysicalConstants = PhysicalConstants { hbar: 1.0, mass: 1.0 };

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn amps(x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> AxisAmplitudes {
        AxisAmplitudes::from_pairs(x.map(c), y.map(c), z.map(c))
    }

    #[test]
    fn product_examples() {
        let t = product_coefficients(&amps([1.0; 2], [1.0; 2], [1.0; 2])).unwrap();
        assert!(t.c.iter().all(|z| *z == c(1.0)));
        let t = product_coefficients(&amps([1.0, 0.0], [1.0, 0.0], [1.0, 0.0])).unwrap();
        assert_eq!(t.c.map(|z| z.re), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = product_coefficients(&amps([1.0, 2.0], [1.0, 0.0], [1.0, 0.0])).unwrap();
        assert_eq!(t.c.map(|z| z.re), [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(product_coefficients(&amps([0.0, 0.0], [1.0, 0.0], [1.0, 0.0])).is_err());
    }

    #[test]
    fn generic_rank_is_four() {
        let (r, _) = product_map_rank_generic(42).unwrap();
        assert_eq!(r.complex_rank, 4);
        assert_eq!(r.real_rank, 8);
        assert!(product_map_rank(&amps([0.0, 0.0], [1.0, 2.0], [1.0, 0.5])).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = AxisAmplitudes::random(&mut rng);
        let jac = product_jacobian(&base);
        let h = 1e-6;
        for input in 0..12 {
            let mut plus = base.to_vec();
            let mut minus = base.to_vec();
            let bump = if input % 2 == 0 { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
            plus[input / 2] += bump;
            minus[input / 2] -= bump;
            let mk = |v: [Complex64; 6]| {
                product_coefficients(&AxisAmplitudes::from_pairs([v[0], v[1]], [v[2], v[3]], [v[4], v[5]])).unwrap()
            };
            let (tp, tm) = (mk(plus), mk(minus));
            for out in 0..8 {
                let d = (tp.c[out] - tm.c[out]) / (2.0 * h);
                assert!((d.re - jac[(2 * out, input)]).abs() < 1e-8);
                assert!((d.im - jac[(2 * out + 1, input)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ones_tensor_is_separable() {
        let t = CoefficientTensor::from_real([1.0; 8]).unwrap();
        let s = is_rank_one_tensor(&t, SEPARABILITY_TOL).unwrap();
        assert!(s.separable);
        let w = s.witness.unwrap();
        assert_eq!(w.axes(), [[c(1.0), c(1.0)]; 3]);
    }

    #[test]
    fn ghz_like_tensor_is_not_separable() {
        let t = CoefficientTensor::from_real([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = is_rank_one_tensor(&t, SEPARABILITY_TOL).unwrap();
        assert!(!s.separable);
        assert_eq!(s.max_minor, 1.0);
        assert!(CoefficientTensor::from_real([0.0; 8]).is_err());
    }

    #[test]
    fn witness_gauge_is_fixed() {
        let t = product_coefficients(&amps([0.0, 2.0], [3.0, -1.0], [0.5, 0.25])).unwrap();
        let s = is_rank_one_tensor(&t, SEPARABILITY_TOL).unwrap();
        let w = s.witness.unwrap();
        assert_eq!(w.bx, c(1.0));
        assert_eq!(w.ay, c(1.0));
        assert!(s.reconstruction_error.unwrap() < 1e-15);
    }

    #[test]
    fn bipolar_expansion_cases() {
        let axis = |r: f64, s0: f64, a: f64, b: f64| AxisBipolar { r, s0, alpha: c(a), beta: c(b) };
        let e = expand_bipolar_product(
            [axis(1.2, 0.3, 1.0, 0.0), axis(0.7, -1.1, 2.0, 0.0), axis(1.5, 2.2, 0.5, 0.0)],
            1.0,
        );
        assert!(e.terms[1..].iter().all(|t| t.norm() == 0.0));
        let expected = Complex64::from_polar(1.2 * 0.7 * 1.5, 0.3 - 1.1 + 2.2);
        assert!((e.terms[0] - expected).norm() < 1e-14);

        let e = expand_bipolar_product(
            [axis(1.2, 0.3, 0.5, 0.5), axis(0.7, -1.1, 0.5, 0.5), axis(1.5, 2.2, 0.5, 0.5)],
            1.0,
        );
        let expected = 1.2 * 0.7 * 1.5 * 0.3f64.cos() * (-1.1f64).cos() * 2.2f64.cos();
        assert!((e.total - c(expected)).norm() < 1e-14);
        // second term is ααβ with phase Sx + Sy - Sz
        let e =
            expand_bipolar_product([axis(1.0, 0.3, 1.0, 2.0), axis(1.0, 0.4, 1.0, 3.0), axis(1.0, 0.5, 1.0, 5.0)], 1.0);
        assert!((e.terms[1] - 5.0 * Complex64::from_polar(1.0, 0.3 + 0.4 - 0.5)).norm() < 1e-14);
        assert!((e.terms[4] - 2.0 * Complex64::from_polar(1.0, -0.3 + 0.4 + 0.5)).norm() < 1e-14);
    }

    #[test]
    fn bipolar_real_combination() {
        let r = vec![1.0, 2.0, 0.5];
        let s = vec![0.0, 1.0, -2.0];
        let phi = reconstruct_wavefunction(&r, &s, c(0.5), c(0.5), &NAT).unwrap();
        for i in 0..3 {
            assert!(phi[i].im.abs() < 1e-15);
            assert!((phi[i].re - r[i] * s[i].cos()).abs() < 1e-15);
        }
        assert!(reconstruct_wavefunction(&r, &s[..2], c(1.0), c(0.0), &NAT).is_err());
        assert!(reconstruct_wavefunction(&[0.0, 1.0, 1.0], &s, c(1.0), c(0.0), &NAT).is_err());
    }

    #[test]
    fn reconstructed_wavefunction_solves_schrodinger() {
        let g = Grid1D::spanning(-3.0, 3.0, 1201).unwrap();
        let pot = Potential1D::harmonic(1.0);
        let pair = solve_basis_pair_from(&pot, 0.5, &g, 0.0, (1.0, 0.0), (0.0, 1.0), &NAT).unwrap();
        let params = ActionParams::ratio(0.6, -0.3, 0.2).unwrap();
        let cascade = cascade_profile(&params, &pair, &pot, 0.5, &NAT).unwrap();
        let s0: Vec<f64> = cascade.iter().map(|d| d.s0).collect();
        let r: Vec<f64> = cascade.iter().map(|d| d.s1.abs().powf(-0.5)).collect();
        let psi = reconstruct_wavefunction(&r, &s0, c(1.0), c(0.0), &NAT).unwrap();
        let res = complex_se_residual(&g, &psi, &pot, 0.5, &NAT).unwrap();
        assert!(res.iter().fold(0.0f64, |m, v| m.max(*v)) < 1e-6);

        let bent: Vec<f64> = r.iter().zip(g.points()).map(|(v, x)| v * (1.0 + 0.01 * x.sin())).collect();
        let psi = reconstruct_wavefunction(&bent, &s0, c(1.0), c(0.0), &NAT).unwrap();
        let res = complex_se_residual(&g, &psi, &pot, 0.5, &NAT).unwrap();
        assert!(res.iter().fold(0.0f64, |m, v| m.max(*v)) > 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cplx() -> impl Strategy<Value = Complex64> {
            (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b))
        }

        proptest! {
            #[test]
            fn gauge_invariance(x0 in cplx(), x1 in cplx(), y0 in cplx(), y1 in cplx(), z0 in cplx(), z1 in cplx(),
                                lam in cplx(), mu in cplx()) {
                prop_assume!(lam.norm() > 0.1 && mu.norm() > 0.1);
                prop_assume!(x0.norm() + x1.norm() > 0.1 && y0.norm() + y1.norm() > 0.1 && z0.norm() + z1.norm() > 0.1);
                let base = AxisAmplitudes::from_pairs([x0, x1], [y0, y1], [z0, z1]);
                let moved = AxisAmplitudes::from_pairs([lam * x0, lam * x1], [mu * y0, mu * y1],
                                                       [z0 / (lam * mu), z1 / (lam * mu)]);
                let a = product_coefficients(&base).unwrap();
                let b = product_coefficients(&moved).unwrap();
                let scale = a.max_abs();
                for k in 0..8 {
                    prop_assert!((a.c[k] - b.c[k]).norm() <= 1e-12 * scale);
                }
            }

            #[test]
            fn round_trip(x0 in cplx(), x1 in cplx(), y0 in cplx(), y1 in cplx(), z0 in cplx(), z1 in cplx()) {
                prop_assume!(x0.norm() + x1.norm() > 0.1 && y0.norm() + y1.norm() > 0.1 && z0.norm() + z1.norm() > 0.1);
                let t = product_coefficients(&AxisAmplitudes::from_pairs([x0, x1], [y0, y1], [z0, z1])).unwrap();
                let s = is_rank_one_tensor(&t, SEPARABILITY_TOL).unwrap();
                prop_assert!(s.separable);
                let rebuilt = product_coefficients(&s.witness.unwrap()).unwrap();
                for k in 0..8 {
                    prop_assert!((rebuilt.c[k] - t.c[k]).norm() <= SEPARABILITY_TOL * t.max_abs());
                }
            }

            #[test]
            fn expansion_matches_direct_product(r in proptest::array::uniform3(0.1f64..3.0),
                                                s in proptest::array::uniform3(-10.0f64..10.0),
                                                a in proptest::array::uniform3(cplx()),
                                                b in proptest::array::uniform3(cplx())) {
                let axes = [0, 1, 2].map(|q| AxisBipolar { r: r[q], s0: s[q], alpha: a[q], beta: b[q] });
                let e = expand_bipolar_product(axes, 0.7);
                prop_assume!(e.direct.norm() > 1e-6);
                prop_assert!(e.relative_mismatch() < 1e-10);
            }
        }
    }
}
