//! Gaussian-state entropy machinery in the phase-space picture.
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂, …)` and the vacuum covariance is
//! the identity, so a thermal state with mean photon number `N` has
//! covariance `(2N + 1)·I`. All entropies are in nats.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::error::{check_nonneg, Error, Result};
use crate::model::ChannelSpec;

const SYMMETRY_TOL: f64 = 1e-12;
const SYMPLECTIC_EIG_TOL: f64 = 1e-10;

/// Entropy of a thermal state with mean photon number `x`:
/// `(1 + x) ln(1 + x) − x ln x`.
pub fn g_nats(x: f64) -> Result<f64> {
    let x = check_nonneg("x", x)?;
    Ok(thermal_entropy(x))
}

// Callers guarantee x >= 0.
fn thermal_entropy(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (1.0 + x) * x.ln_1p() - x * x.ln()
}

/// Inverse of [`g_nats`]: the thermal photon number carrying entropy `s`.
pub fn g_inv(s: f64) -> Result<f64> {
    let s = check_nonneg("s", s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while thermal_entropy(hi) < s {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let diff = thermal_entropy(mid) - s;
        if diff.abs() < 1e-12 || mid == lo || mid == hi {
            return Ok(mid);
        }
        if diff < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Block-diagonal symplectic form with per-mode blocks `[[0, 1], [−1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Covariance matrix of a centered Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Validates symmetry and the uncertainty principle (all symplectic
    /// eigenvalues at least one).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let cov = Self::checked_shape(entries)?;
        let nu = symplectic_eigenvalues(&cov)?;
        if let Some(&low) = nu.first() {
            if low < 1.0 - SYMPLECTIC_EIG_TOL {
                return Err(Error::InvalidCovariance(format!(
                    "symplectic eigenvalue {low} < 1 violates the uncertainty principle"
                )));
            }
        }
        Ok(cov)
    }

    fn checked_shape(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::InvalidCovariance(format!(
                "expected a non-empty 2n×2n matrix, got {rows}×{cols}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidCovariance(format!(
                "asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn identity(n_modes: usize) -> Self {
        Self(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn thermal(n_th: f64) -> Result<Self> {
        squeezed_thermal_cov(n_th, 0.0)
    }

    /// Block-diagonal covariance of uncorrelated subsystems.
    pub fn direct_sum(parts: &[&CovarianceMatrix]) -> Self {
        let dim: usize = parts.iter().map(|p| p.0.nrows()).sum();
        let mut out = DMatrix::zeros(dim, dim);
        let mut at = 0;
        for p in parts {
            let k = p.0.nrows();
            out.view_mut((at, at), (k, k)).copy_from(&p.0);
            at += k;
        }
        Self(out)
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Phase-space matrix `S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: rows - rows % 2,
                got: cols,
            });
        }
        let s = Self(entries);
        let defect = s.symplectic_defect();
        if defect.is_nan() || defect >= 1e-12 {
            return Err(Error::Config(format!(
                "matrix is not symplectic: ‖SΩSᵀ − Ω‖ = {defect:.3e}"
            )));
        }
        Ok(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `‖S Ω Sᵀ − Ω‖_max`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.0 * &omega * self.0.transpose() - omega).amax()
    }

    /// Lifts this transformation onto `modes` of an `n_modes`-mode system,
    /// acting as the identity elsewhere.
    pub fn embed(&self, modes: &[usize], n_modes: usize) -> Result<Self> {
        if modes.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: modes.len(),
            });
        }
        check_modes(modes, n_modes)?;
        let mut out = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for (i, &mi) in modes.iter().enumerate() {
            for (j, &mj) in modes.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        out[(2 * mi + a, 2 * mj + b)] = self.0[(2 * i + a, 2 * j + b)];
                    }
                }
            }
        }
        Ok(Self(out))
    }
}

fn check_modes(modes: &[usize], n_modes: usize) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::Config("mode selection is empty".into()));
    }
    for (i, &m) in modes.iter().enumerate() {
        if m >= n_modes {
            return Err(Error::DimensionMismatch {
                expected: n_modes,
                got: m,
            });
        }
        if modes[..i].contains(&m) {
            return Err(Error::Config(format!("mode {m} selected twice")));
        }
    }
    Ok(())
}

/// `(2N_th + 1)·diag(e^{2r}, e^{−2r})`.
pub fn squeezed_thermal_cov(n_th: f64, r: f64) -> Result<CovarianceMatrix> {
    let n_th = check_nonneg("n_th", n_th)?;
    let r = check_nonneg("r", r)?;
    let scale = 2.0 * n_th + 1.0;
    Ok(CovarianceMatrix(DMatrix::from_diagonal(
        &nalgebra::DVector::from_vec(vec![scale * (2.0 * r).exp(), scale * (-2.0 * r).exp()]),
    )))
}

/// Mean photon number `(Tr γ / 2 − 1) / 2` of a single-mode state.
pub fn mean_photon(cov: &CovarianceMatrix) -> Result<f64> {
    if cov.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: cov.n_modes(),
        });
    }
    let n = (cov.0.trace() / 2.0 - 1.0) / 2.0;
    if n < -SYMPLECTIC_EIG_TOL {
        return Err(Error::InvalidCovariance(format!(
            "negative mean photon number {n}"
        )));
    }
    Ok(n.max(0.0))
}

/// Symplectic eigenvalues, one per mode, ascending.
///
/// These are the moduli of the eigenvalues of `iΩγ`. We diagonalize the
/// similar real symmetric matrix `−(√γ Ω √γ)²`, whose eigenvalues are the
/// squared symplectic eigenvalues, each appearing twice.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<Vec<f64>> {
    let gamma = &cov.0;
    let n = cov.n_modes();
    let asym = (gamma - gamma.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidCovariance(format!(
            "asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
        )));
    }
    let eig = SymmetricEigen::new(symmetrized(gamma));
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidCovariance(
            "covariance matrix is not positive definite".into(),
        ));
    }
    let sqrt_diag = eig.eigenvalues.map(f64::sqrt);
    let root =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose();
    let a = &root * symplectic_form(n) * &root;
    let squared = symmetrized(&(a.transpose() * &a));
    let mut nu2: Vec<f64> = SymmetricEigen::new(squared)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nu2.sort_by(f64::total_cmp);
    Ok(nu2
        .chunks_exact(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Von Neumann entropy `Σᵢ g((νᵢ − 1)/2)`.
pub fn gaussian_entropy(cov: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(cov)?
        .into_iter()
        .map(|nu| thermal_entropy(((nu - 1.0) / 2.0).max(0.0)))
        .sum())
}

/// Two-mode dilation of the channel acting on `(A, E) → (B, F)`.
pub fn channel_symplectic(channel: ChannelSpec) -> Result<SymplecticMatrix> {
    let channel = channel.validated()?;
    let id = Matrix2::<f64>::identity();
    let conj = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let (aa, ae, ea, ee) = match channel {
        ChannelSpec::Attenuator { tau } => {
            let t = tau.sqrt();
            let r = (1.0 - tau).sqrt();
            (id * t, id * r, id * -r, id * t)
        }
        ChannelSpec::Amplifier { kappa } => {
            let c = kappa.sqrt();
            let s = (kappa - 1.0).sqrt();
            (id * c, conj * s, conj * s, id * c)
        }
    };
    let mut out = DMatrix::zeros(4, 4);
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(&aa);
    out.fixed_view_mut::<2, 2>(0, 2).copy_from(&ae);
    out.fixed_view_mut::<2, 2>(2, 0).copy_from(&ea);
    out.fixed_view_mut::<2, 2>(2, 2).copy_from(&ee);
    Ok(SymplecticMatrix(out))
}

/// `S γ Sᵀ`.
pub fn apply_symplectic(s: &SymplecticMatrix, cov: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.0.nrows() != cov.0.nrows() {
        return Err(Error::DimensionMismatch {
            expected: cov.0.nrows(),
            got: s.0.nrows(),
        });
    }
    Ok(CovarianceMatrix(symmetrized(
        &(&s.0 * &cov.0 * s.0.transpose()),
    )))
}

/// Reduced covariance on the `keep` modes, in the order given.
pub fn partial_trace_cov(cov: &CovarianceMatrix, keep: &[usize]) -> Result<CovarianceMatrix> {
    check_modes(keep, cov.n_modes())?;
    let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let k = idx.len();
    Ok(CovarianceMatrix(DMatrix::from_fn(k, k, |i, j| {
        cov.0[(idx[i], idx[j])]
    })))
}

/// Two-mode squeezed vacuum whose marginals are thermal with mean `n`.
pub fn thermal_purification(n: f64) -> Result<CovarianceMatrix> {
    let n = check_nonneg("n", n)?;
    let diag = 2.0 * n + 1.0;
    let off = 2.0 * (n * (n + 1.0)).sqrt();
    let mut out = DMatrix::identity(4, 4) * diag;
    out[(0, 2)] = off;
    out[(2, 0)] = off;
    out[(1, 3)] = -off;
    out[(3, 1)] = -off;
    Ok(CovarianceMatrix(out))
}

/// A channel, a single-mode Gaussian environment and a thermal input energy.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelPoint {
    pub channel: ChannelSpec,
    pub env_cov: CovarianceMatrix,
    pub input_photons: f64,
}

/// Exact coherent information (nats) of a thermal input with mean photon
/// number `N` through a channel with Gaussian environment.
///
/// Modes are `(R, A, E)`; `R` purifies the input, the channel acts on
/// `(A, E)`, and the result is `S(B) − S(R B)`.
pub fn gaussian_coherent_information(point: &GaussianChannelPoint) -> Result<f64> {
    if point.env_cov.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: point.env_cov.n_modes(),
        });
    }
    let input = thermal_purification(point.input_photons)?;
    let joint = CovarianceMatrix::direct_sum(&[&input, &point.env_cov]);
    let s = channel_symplectic(point.channel)?.embed(&[1, 2], 3)?;
    let out = apply_symplectic(&s, &joint)?;
    let s_b = gaussian_entropy(&partial_trace_cov(&out, &[1])?)?;
    let s_rb = gaussian_entropy(&partial_trace_cov(&out, &[0, 1])?)?;
    Ok(s_b - s_rb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn diag(v: &[f64]) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            v,
        )))
        .unwrap()
    }

    #[test]
    fn g_values() {
        assert_eq!(g_nats(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g_nats(1.0).unwrap(), 2.0 * LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(g_nats(2.0).unwrap() / LN_2, 2.7549, epsilon = 5e-5);
        assert!(g_nats(-1e-3).is_err());
        assert!(g_nats(f64::NAN).is_err());
        assert!(g_nats(f64::INFINITY).is_err());
        assert!(g_nats(1e-320).unwrap().is_finite());
    }

    #[test]
    fn g_inverse() {
        assert_eq!(g_inv(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g_inv(2.0 * LN_2).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g_inv(g_nats(7.3).unwrap()).unwrap(), 7.3, epsilon = 1e-9);
        assert!(g_inv(-0.1).is_err());
        let s = 3.21;
        assert!((g_nats(g_inv(s).unwrap()).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn g_is_increasing_and_concave_on_grid() {
        let xs: Vec<f64> = (0..=20_000).map(|i| i as f64 * 0.005).collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g_nats(x).unwrap()).collect();
        for w in gs.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in gs.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] < 1e-12);
        }
    }

    #[test]
    fn squeezed_thermal_entries() {
        assert_eq!(
            squeezed_thermal_cov(0.0, 0.0).unwrap(),
            CovarianceMatrix::identity(1)
        );
        let c = squeezed_thermal_cov(0.01, 0.1).unwrap();
        let expect_x = 1.02 * 0.2f64.exp();
        let expect_p = 1.02 * (-0.2f64).exp();
        assert_abs_diff_eq!(c.entries()[(0, 0)], expect_x, epsilon = 1e-15);
        assert_abs_diff_eq!(c.entries()[(1, 1)], expect_p, epsilon = 1e-15);
        assert!((c.entries()[(0, 0)] - 1.2459).abs() < 1e-4);
        assert!((c.entries()[(1, 1)] - 0.8351).abs() < 1e-4);
        assert_eq!(squeezed_thermal_cov(2.0, 0.0).unwrap(), diag(&[5.0, 5.0]));
        assert!(squeezed_thermal_cov(0.1, -0.1).is_err());
    }

    #[test]
    fn mean_photon_values() {
        assert_eq!(mean_photon(&CovarianceMatrix::identity(1)).unwrap(), 0.0);
        let n = mean_photon(&squeezed_thermal_cov(0.01, 0.1).unwrap()).unwrap();
        assert!((n - 0.0203).abs() < 5e-4);
        assert_abs_diff_eq!(mean_photon(&diag(&[5.0, 5.0])).unwrap(), 2.0);
        assert!(mean_photon(&CovarianceMatrix::identity(2)).is_err());
    }

    #[test]
    fn invalid_covariances_are_rejected() {
        let sub_vacuum = DMatrix::from_diagonal_element(2, 2, 0.5);
        assert!(CovarianceMatrix::new(sub_vacuum).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(CovarianceMatrix::new(asym).is_err());
        assert!(CovarianceMatrix::new(DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn symplectic_eigenvalue_examples() {
        let nu = symplectic_eigenvalues(&CovarianceMatrix::identity(3)).unwrap();
        assert_eq!(nu.len(), 3);
        for v in nu {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        for r in [0.0, 0.3, 1.0] {
            let nu = symplectic_eigenvalues(&squeezed_thermal_cov(1.5, r).unwrap()).unwrap();
            assert_abs_diff_eq!(nu[0], 4.0, epsilon = 1e-12);
        }
        let tmsv = symplectic_eigenvalues(&thermal_purification(3.0).unwrap()).unwrap();
        for v in tmsv {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn symplectic_eigenvalues_of_two_thermal_modes_are_sorted() {
        let c = CovarianceMatrix::direct_sum(&[
            &CovarianceMatrix::thermal(2.0).unwrap(),
            &CovarianceMatrix::thermal(0.5).unwrap(),
        ]);
        let nu = symplectic_eigenvalues(&c).unwrap();
        assert_abs_diff_eq!(nu[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nu[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_thermal_and_squeezed_states() {
        assert_abs_diff_eq!(
            gaussian_entropy(&CovarianceMatrix::identity(1)).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        for n in [0.0, 0.5, 1.0, 2.0, 10.0] {
            let s = gaussian_entropy(&CovarianceMatrix::thermal(n).unwrap()).unwrap();
            assert_abs_diff_eq!(s, g_nats(n).unwrap(), epsilon = 1e-12);
        }
        let s = gaussian_entropy(&squeezed_thermal_cov(0.01, 0.1).unwrap()).unwrap();
        assert_abs_diff_eq!(s, g_nats(0.01).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn channel_symplectic_identities() {
        let id = SymplecticMatrix::identity(2);
        assert_eq!(
            channel_symplectic(ChannelSpec::Attenuator { tau: 1.0 }).unwrap(),
            id
        );
        assert_eq!(
            channel_symplectic(ChannelSpec::Amplifier { kappa: 1.0 }).unwrap(),
            id
        );
        assert!(channel_symplectic(ChannelSpec::Attenuator { tau: 1.1 }).is_err());
        assert!(channel_symplectic(ChannelSpec::Amplifier { kappa: 0.99 }).is_err());
    }

    #[test]
    fn channel_symplectic_is_symplectic() {
        for c in [
            ChannelSpec::Attenuator { tau: 0.0 },
            ChannelSpec::Attenuator { tau: 0.37 },
            ChannelSpec::Amplifier { kappa: 1.02 },
            ChannelSpec::Amplifier { kappa: 7.5 },
        ] {
            assert!(channel_symplectic(c).unwrap().symplectic_defect() < 1e-12);
        }
    }

    #[test]
    fn balanced_beam_splitter_halves_photons() {
        let s = channel_symplectic(ChannelSpec::Attenuator { tau: 0.5 }).unwrap();
        let joint =
            CovarianceMatrix::direct_sum(&[&diag(&[3.0, 3.0]), &CovarianceMatrix::identity(1)]);
        let out = apply_symplectic(&s, &joint).unwrap();
        let b = partial_trace_cov(&out, &[0]).unwrap();
        assert_abs_diff_eq!(b.entries()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.entries()[(1, 1)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.entries()[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn apply_symplectic_examples() {
        let g = thermal_purification(0.7).unwrap();
        assert_eq!(
            apply_symplectic(&SymplecticMatrix::identity(2), &g).unwrap(),
            g
        );
        let bs = channel_symplectic(ChannelSpec::Attenuator { tau: 0.3 }).unwrap();
        let vac = apply_symplectic(&bs, &CovarianceMatrix::identity(2)).unwrap();
        assert!((vac.entries() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        // Amplifying the vacuum populates both outputs with kappa − 1 photons.
        let kappa = 1.02;
        let tms = channel_symplectic(ChannelSpec::Amplifier { kappa }).unwrap();
        let out = apply_symplectic(&tms, &CovarianceMatrix::identity(2)).unwrap();
        for m in 0..2 {
            let n = mean_photon(&partial_trace_cov(&out, &[m]).unwrap()).unwrap();
            assert_abs_diff_eq!(n, kappa - 1.0, epsilon = 1e-14);
        }
        assert!(apply_symplectic(&tms, &CovarianceMatrix::identity(3)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let g = thermal_purification(1.3).unwrap();
        assert_eq!(partial_trace_cov(&g, &[0, 1]).unwrap(), g);
        for m in 0..2 {
            let marginal = partial_trace_cov(&g, &[m]).unwrap();
            assert_abs_diff_eq!(mean_photon(&marginal).unwrap(), 1.3, epsilon = 1e-14);
            assert_abs_diff_eq!(marginal.entries()[(0, 1)], 0.0);
        }
        let a = squeezed_thermal_cov(0.2, 0.4).unwrap();
        let b = CovarianceMatrix::thermal(3.0).unwrap();
        let joint = CovarianceMatrix::direct_sum(&[&a, &b]);
        assert_eq!(partial_trace_cov(&joint, &[0]).unwrap(), a);
        assert_eq!(partial_trace_cov(&joint, &[1]).unwrap(), b);
        assert!(partial_trace_cov(&joint, &[]).is_err());
        assert!(partial_trace_cov(&joint, &[2]).is_err());
        assert!(partial_trace_cov(&joint, &[1, 1]).is_err());
    }

    #[test]
    fn thermal_purification_entries() {
        assert_eq!(
            thermal_purification(0.0).unwrap(),
            CovarianceMatrix::identity(2)
        );
        let g = thermal_purification(1.0).unwrap();
        let e = g.entries();
        let off = 2.0 * 2f64.sqrt();
        assert_abs_diff_eq!(e[(0, 0)], 3.0);
        assert_abs_diff_eq!(e[(0, 2)], off, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(1, 3)], -off, epsilon = 1e-15);
        assert!(CovarianceMatrix::new(e.clone()).is_ok());
    }

    fn pure_loss(tau: f64, n: f64) -> f64 {
        let point = GaussianChannelPoint {
            channel: ChannelSpec::Attenuator { tau },
            env_cov: CovarianceMatrix::identity(1),
            input_photons: n,
        };
        gaussian_coherent_information(&point).unwrap()
    }

    #[test]
    fn coherent_information_pure_loss_closed_form() {
        for tau in [0.5, 0.7, 0.9, 0.99] {
            for n in [0.1, 1.0, 5.0] {
                let expect = g_nats(tau * n).unwrap() - g_nats((1.0 - tau) * n).unwrap();
                assert_abs_diff_eq!(pure_loss(tau, n), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn identity_channel_transmits_full_entropy() {
        for env in [
            CovarianceMatrix::thermal(1.0).unwrap(),
            squeezed_thermal_cov(0.3, 0.5).unwrap(),
        ] {
            let point = GaussianChannelPoint {
                channel: ChannelSpec::Attenuator { tau: 1.0 },
                env_cov: env,
                input_photons: 2.5,
            };
            let ic = gaussian_coherent_information(&point).unwrap();
            assert_abs_diff_eq!(ic, g_nats(2.5).unwrap(), epsilon = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn squeezing_leaves_determinant_fixed(n_th in 0.0..5.0f64, r in 0.0..2.0f64) {
            let c = squeezed_thermal_cov(n_th, r).unwrap();
            let expect = (2.0 * n_th + 1.0).powi(2);
            prop_assert!((c.entries().determinant() - expect).abs() < 1e-12 * expect.max(1.0));
        }

        #[test]
        fn g_inv_round_trip(x in 0.0..100.0f64) {
            let back = g_inv(g_nats(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() < 1e-9 * x.max(1.0));
        }

        #[test]
        fn purification_is_pure(n in 0.0..50.0f64) {
            let nu = symplectic_eigenvalues(&thermal_purification(n).unwrap()).unwrap();
            for v in nu {
                prop_assert!((v - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn dilations_are_symplectic(tau in 0.0..=1.0f64, kappa in 1.0..20.0f64) {
            let att = channel_symplectic(ChannelSpec::Attenuator { tau }).unwrap();
            let amp = channel_symplectic(ChannelSpec::Amplifier { kappa }).unwrap();
            prop_assert!(att.symplectic_defect() < 1e-12);
            prop_assert!(amp.symplectic_defect() < 1e-12);
        }
    }
}
