//! Truncated Fock-space simulation of the attenuator and amplifier
//! dilations.
//!
//! Two-mode states are indexed `i·d + j` with the first mode (input `A`,
//! output `B`) as the major index. Every operator used here is real in the
//! Fock basis, so the simulation runs in real arithmetic; [`DensityMatrix`]
//! and [`matrix_exp`] also accept complex matrices.
//!
//! The coherent information of a thermal input is `S(B) − S(R B)`, where `R`
//! purifies the input. This avoids purifying the environment and keeps the
//! joint state at `d³` amplitudes per environment eigenvector.

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{check_nonneg, Error, Result};
use crate::model::{ChannelSpec, EnvironmentModel};

pub use nalgebra::Complex;
pub type Complex64 = Complex<f64>;

/// Largest truncation accepted before refusing to allocate.
pub const MAX_DIM: usize = 96;
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_KAPPA_MAX: f64 = 1.5;

const EIGEN_FLOOR: f64 = 1e-14;

/// `a` on levels `0..d`: `(n−1, n)` entries `√n`.
pub fn annihilation(d: usize) -> Result<DMatrix<f64>> {
    if d < 2 {
        return Err(Error::Config(format!(
            "truncation d = {d} must be at least 2"
        )));
    }
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    Ok(a)
}

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial on the scaled matrix (1-norm at most 1/2).
pub fn matrix_exp<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.clone().is_finite()) {
        return Err(Error::Config(
            "matrix exponential of non-finite entries".into(),
        ));
    }
    let norm = one_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = T::from_real(0.5f64.powi(squarings));
    let a = m * scale;
    let n = m.nrows();
    let mut result = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    for k in 1..=18 {
        term = (&term * &a) * T::from_real(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Which two-mode interaction a [`TwoModeUnitary`] realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Interaction {
    /// `θ(a†e − e†a)`, conserves `n_A + n_E`.
    BeamSplitter { theta: f64 },
    /// `r(a†e† − a e)`, conserves `n_A − n_E`.
    Squeezer { r: f64 },
}

impl Interaction {
    fn sector(self, i: usize, j: usize) -> isize {
        match self {
            Self::BeamSplitter { .. } => (i + j) as isize,
            Self::Squeezer { .. } => i as isize - j as isize,
        }
    }

    /// Nonzero generator entries `(target, value)` in the column of `|i, j⟩`.
    fn column(self, i: usize, j: usize, d: usize) -> Vec<((usize, usize), f64)> {
        let mut out = Vec::with_capacity(2);
        let sq = |x: usize, y: usize| ((x * y) as f64).sqrt();
        match self {
            Self::BeamSplitter { theta } => {
                if i + 1 < d && j >= 1 {
                    out.push(((i + 1, j - 1), theta * sq(i + 1, j)));
                }
                if i >= 1 && j + 1 < d {
                    out.push(((i - 1, j + 1), -theta * sq(i, j + 1)));
                }
            }
            Self::Squeezer { r } => {
                if i + 1 < d && j + 1 < d {
                    out.push(((i + 1, j + 1), r * sq(i + 1, j + 1)));
                }
                if i >= 1 && j >= 1 {
                    out.push(((i - 1, j - 1), -r * sq(i, j)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    matrix: DMatrix<f64>,
}

/// Real orthogonal operator on two truncated modes, stored as the diagonal
/// blocks of its conserved photon-number sectors.
#[derive(Debug, Clone)]
pub struct TwoModeUnitary {
    dim: usize,
    blocks: Vec<Block>,
}

impl TwoModeUnitary {
    fn from_interaction(interaction: Interaction, d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut sectors: BTreeMap<isize, Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..d {
            for j in 0..d {
                sectors
                    .entry(interaction.sector(i, j))
                    .or_default()
                    .push((i, j));
            }
        }
        let mut blocks = Vec::with_capacity(sectors.len());
        for states in sectors.into_values() {
            let k = states.len();
            let position = |s: (usize, usize)| states.iter().position(|&t| t == s);
            let mut generator = DMatrix::zeros(k, k);
            for (col, &(i, j)) in states.iter().enumerate() {
                for (target, value) in interaction.column(i, j, d) {
                    let row = position(target).expect("generator leaves its sector");
                    generator[(row, col)] = value;
                }
            }
            blocks.push(Block {
                indices: states.iter().map(|&(i, j)| i * d + j).collect(),
                matrix: matrix_exp(&generator)?,
            });
        }
        Ok(Self { dim: d, blocks })
    }

    /// The mode swap `|i, j⟩ → |j, i⟩`, the `τ = 0` beam splitter.
    pub fn swap(d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut blocks = Vec::new();
        for i in 0..d {
            for j in i..d {
                if i == j {
                    blocks.push(Block {
                        indices: vec![i * d + i],
                        matrix: DMatrix::identity(1, 1),
                    });
                } else {
                    blocks.push(Block {
                        indices: vec![i * d + j, j * d + i],
                        matrix: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
                    });
                }
            }
        }
        Ok(Self { dim: d, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `U x` for a two-mode amplitude vector of length `d²`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(x.len());
        for block in &self.blocks {
            let local =
                DVector::from_iterator(block.indices.len(), block.indices.iter().map(|&i| x[i]));
            if local.iter().all(|&v| v == 0.0) {
                continue;
            }
            let out = &block.matrix * local;
            for (&i, v) in block.indices.iter().zip(out.iter()) {
                y[i] = *v;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim * self.dim;
        let mut u = DMatrix::zeros(n, n);
        for block in &self.blocks {
            for (c, &col) in block.indices.iter().enumerate() {
                for (r, &row) in block.indices.iter().enumerate() {
                    u[(row, col)] = block.matrix[(r, c)];
                }
            }
        }
        u
    }

    /// `‖U†U − I‖_max` restricted to basis states with at most
    /// `max_photons` photons in total.
    pub fn unitarity_defect(&self, max_photons: usize) -> f64 {
        let d = self.dim;
        let low = |idx: usize| idx / d + idx % d <= max_photons;
        let mut defect: f64 = 0.0;
        for block in &self.blocks {
            let keep: Vec<usize> = (0..block.indices.len())
                .filter(|&p| low(block.indices[p]))
                .collect();
            if keep.is_empty() {
                continue;
            }
            let cols = block.matrix.select_columns(&keep);
            let gram = cols.transpose() * &cols;
            let eye = DMatrix::<f64>::identity(keep.len(), keep.len());
            defect = defect.max((gram - eye).amax());
        }
        defect
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Config(format!(
            "truncation d = {d} must be at least 2"
        )));
    }
    if d > MAX_DIM {
        return Err(Error::TooLarge {
            dim: d,
            limit: MAX_DIM,
        });
    }
    Ok(())
}

/// Beam splitter `exp[θ(a†e − e†a)]`, `θ = arctan √((1−τ)/τ)`, for
/// `τ ∈ (0, 1]`. A single photon in `A` stays in `B` with probability `τ`.
pub fn bs_unitary(tau: f64, d: usize) -> Result<TwoModeUnitary> {
    if !(tau.is_finite() && tau > 0.0 && tau <= 1.0) {
        return Err(Error::Domain {
            name: "tau",
            value: tau,
            expected: "in (0, 1]; use TwoModeUnitary::swap for tau = 0",
        });
    }
    let theta = ((1.0 - tau) / tau).sqrt().atan();
    TwoModeUnitary::from_interaction(Interaction::BeamSplitter { theta }, d)
}

/// Two-mode squeezer `exp[r(a†e† − a e)]`, `r = arctanh √((κ−1)/κ)`, for
/// `κ ∈ [1, 1.5]`.
pub fn tms_unitary(kappa: f64, d: usize) -> Result<TwoModeUnitary> {
    tms_unitary_limited(kappa, d, DEFAULT_KAPPA_MAX)
}

fn tms_unitary_limited(kappa: f64, d: usize, kappa_max: f64) -> Result<TwoModeUnitary> {
    if !(kappa.is_finite() && kappa >= 1.0 && kappa <= kappa_max) {
        return Err(Error::Domain {
            name: "kappa",
            value: kappa,
            expected: "in [1, kappa_max] for the Fock simulation",
        });
    }
    let r = ((kappa - 1.0) / kappa).sqrt().atanh();
    TwoModeUnitary::from_interaction(Interaction::Squeezer { r }, d)
}

/// Dense generator of the channel's dilation on `d²` levels, built from
/// Kronecker products of [`annihilation`]. Used to cross-check the
/// block construction.
pub fn dense_generator(channel: ChannelSpec, d: usize) -> Result<DMatrix<f64>> {
    let a = annihilation(d)?;
    let at = a.transpose();
    Ok(match channel.validated()? {
        ChannelSpec::Attenuator { tau } => {
            let theta = ((1.0 - tau) / tau).sqrt().atan();
            (at.kronecker(&a) - a.kronecker(&at)) * theta
        }
        ChannelSpec::Amplifier { kappa } => {
            let r = ((kappa - 1.0) / kappa).sqrt().atanh();
            (at.kronecker(&at) - a.kronecker(&a)) * r
        }
    })
}

/// Hermitian, positive semidefinite, unit-trace matrix on `d` Fock levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let herm = hermiticity_defect(&entries)?;
        if herm > 1e-12 {
            return Err(Error::Config(format!(
                "density matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::Config(format!(
                "density matrix trace {trace} is not 1"
            )));
        }
        let low = SymmetricEigen::new(entries.clone()).eigenvalues.min();
        if low < -1e-10 {
            return Err(Error::Config(format!(
                "density matrix has negative eigenvalue {low:.3e}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    /// Occupation probabilities `⟨n|ρ|n⟩`.
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|v| v.re).collect()
    }
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok((m - m.adjoint())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max))
}

fn entropy_of_spectrum(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    eigenvalues
        .into_iter()
        .filter(|&l| l > EIGEN_FLOOR)
        .map(|l| -l * l.ln())
        .sum()
}

fn entropy_real_psd(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (&m + m.transpose()) * 0.5;
    entropy_of_spectrum(SymmetricEigen::new(sym).eigenvalues.iter().copied())
}

/// Von Neumann entropy in nats.
pub fn entropy_dm(rho: &DensityMatrix) -> Result<f64> {
    let herm = hermiticity_defect(&rho.0)?;
    if herm > 1e-12 {
        return Err(Error::Config(format!(
            "entropy of a non-Hermitian matrix (defect {herm:.3e})"
        )));
    }
    Ok(entropy_of_spectrum(
        SymmetricEigen::new(rho.0.clone())
            .eigenvalues
            .iter()
            .copied(),
    ))
}

/// Weight on the two highest levels of a distribution.
fn top_two(populations: &[f64]) -> f64 {
    populations.iter().rev().take(2).map(|p| p.max(0.0)).sum()
}

/// Thermal occupation probabilities on `d` levels, renormalized, with the
/// top-two tail weight of the normalized distribution.
fn thermal_populations(n: f64, d: usize) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = if n == 0.0 {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    } else {
        let ratio = n / (n + 1.0);
        (0..d).map(|k| ratio.powi(k as i32) / (n + 1.0)).collect()
    };
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let tail = top_two(&p);
    (p, tail)
}

/// Smallest `d` whose thermal top-two tail is below `threshold`.
fn thermal_dim_for(n: f64, threshold: f64) -> usize {
    if n == 0.0 {
        return 2;
    }
    let ratio = n / (n + 1.0);
    // Untruncated weight of levels d−2 and d−1 is ratio^{d−2}(1 + ratio)/(n + 1).
    let k = ((threshold * (n + 1.0) / (1.0 + ratio)).ln() / ratio.ln()).ceil();
    (k.max(0.0) as usize) + 2
}

/// Two-mode squeezed vacuum `Σ √p_n |n, n⟩` purifying a thermal state of
/// mean photon number `n`, normalized on `d` levels per mode.
pub fn tmsv_vector(n: f64, d: usize, tail_threshold: f64) -> Result<DVector<f64>> {
    let n = check_nonneg("N", n)?;
    check_dim(d)?;
    let (p, tail) = thermal_populations(n, d);
    if tail > tail_threshold {
        return Err(Error::Truncation {
            dim: d,
            tail_mass: tail,
            threshold: tail_threshold,
            suggested_dim: thermal_dim_for(n, tail_threshold),
        });
    }
    let mut v = DVector::zeros(d * d);
    for (k, pk) in p.iter().enumerate() {
        v[k * d + k] = pk.sqrt();
    }
    Ok(v)
}

/// Eigen-ensemble of an environment state on `d` levels.
#[derive(Debug, Clone)]
struct Ensemble {
    weights: Vec<f64>,
    vectors: Vec<DVector<f64>>,
    /// Diagonal in the Fock basis (phase covariant).
    diagonal: bool,
    tail_mass: f64,
}

impl Ensemble {
    fn density(&self) -> DMatrix<f64> {
        let d = self.vectors.first().map_or(0, |v| v.len());
        let mut rho = DMatrix::zeros(d, d);
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            rho += v * v.transpose() * *w;
        }
        rho
    }
}

fn basis(d: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[k] = 1.0;
    v
}

fn squeeze_operator(r: f64, d: usize) -> Result<DMatrix<f64>> {
    let a = annihilation(d)?;
    let a2 = &a * &a;
    // exp[(r/2)(a†² − a²)] stretches the x quadrature by e^{r}.
    matrix_exp(&((a2.transpose() - a2) * (0.5 * r)))
}

fn environment_ensemble(env: &EnvironmentModel, d: usize, tail_threshold: f64) -> Result<Ensemble> {
    check_dim(d)?;
    env.summary()?;
    let truncation = |tail: f64, suggested: usize| Error::Truncation {
        dim: d,
        tail_mass: tail,
        threshold: tail_threshold,
        suggested_dim: suggested.max(d + 1),
    };
    let ensemble = match *env {
        EnvironmentModel::Fock { n } => {
            let n = n as usize;
            if n + 2 >= d {
                return Err(truncation(1.0, n + 3));
            }
            Ensemble {
                weights: vec![1.0],
                vectors: vec![basis(d, n)],
                diagonal: true,
                tail_mass: 0.0,
            }
        }
        EnvironmentModel::Thermal { n_th } => {
            let (p, tail) = thermal_populations(n_th, d);
            let kept: Vec<usize> = (0..d).filter(|&k| p[k] > 0.0).collect();
            Ensemble {
                weights: kept.iter().map(|&k| p[k]).collect(),
                vectors: kept.iter().map(|&k| basis(d, k)).collect(),
                diagonal: true,
                tail_mass: tail,
            }
        }
        EnvironmentModel::SqueezedThermal { n_th, r } => {
            let (p, _) = thermal_populations(n_th, d);
            let s = squeeze_operator(r, d)?;
            let kept: Vec<usize> = (0..d).filter(|&k| p[k] > 1e-16).collect();
            let total: f64 = kept.iter().map(|&k| p[k]).sum();
            let mut ens = Ensemble {
                weights: kept.iter().map(|&k| p[k] / total).collect(),
                vectors: kept.iter().map(|&k| s.column(k).into_owned()).collect(),
                diagonal: r == 0.0,
                tail_mass: 0.0,
            };
            let pops: Vec<f64> = ens.density().diagonal().iter().copied().collect();
            ens.tail_mass = top_two(&pops);
            ens
        }
        EnvironmentModel::Generic { .. } => {
            return Err(Error::UnsupportedOracle {
                oracle: "fock",
                env: env.to_string(),
            })
        }
    };
    if ensemble.tail_mass > tail_threshold {
        return Err(truncation(ensemble.tail_mass, 2 * d));
    }
    Ok(ensemble)
}

/// Density matrix of the environment truncated to `d` levels. Squeezed
/// thermal states apply `exp[(r/2)(a†² − a²)]` to the thermal state.
pub fn env_density_matrix(
    env: &EnvironmentModel,
    d: usize,
    tail_threshold: f64,
) -> Result<DensityMatrix> {
    let ens = environment_ensemble(env, d, tail_threshold)?;
    let rho = ens.density();
    let trace = rho.trace();
    DensityMatrix::from_real(&(rho / trace))
}

/// Truncation policy for [`coherent_information_fock`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockConfig {
    /// First truncation tried; `None` picks 20 for attenuators and 24 for
    /// amplifiers.
    pub start_dim: Option<usize>,
    /// The truncation is doubled up to this cap while the tail is too heavy.
    pub max_dim: usize,
    pub tail_threshold: f64,
    pub kappa_max: f64,
    /// Amplifier input energy cap.
    pub amplifier_max_photons: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            start_dim: None,
            max_dim: 48,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            kappa_max: DEFAULT_KAPPA_MAX,
            amplifier_max_photons: 5.0,
        }
    }
}

impl FockConfig {
    /// A single run at truncation `d`.
    pub fn fixed(d: usize) -> Self {
        Self {
            start_dim: Some(d),
            max_dim: d,
            ..Self::default()
        }
    }

    pub fn with_tail_threshold(self, tail_threshold: f64) -> Self {
        Self {
            tail_threshold,
            ..self
        }
    }

    fn dims(&self, channel: ChannelSpec) -> Vec<usize> {
        let start = self
            .start_dim
            .unwrap_or(if channel.is_attenuator() { 20 } else { 24 });
        let cap = self.max_dim.max(2);
        let mut d = start.clamp(2, cap);
        let mut out = vec![d];
        while d < cap {
            d = (2 * d).min(cap);
            out.push(d);
        }
        out
    }
}

/// Coherent information from the Fock simulation, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `s_output − s_exchange`, nats.
    pub i_c: f64,
    /// `S(B)`.
    pub s_output: f64,
    /// `S(R B)`, the entropy exchange.
    pub s_exchange: f64,
    /// `S(F)` for pure environments, where it must equal `s_exchange`.
    pub s_env_output: Option<f64>,
    /// Largest weight on the top two levels of `R`, `E`, `B` or `F`.
    pub tail_mass: f64,
    /// Unitarity defect of the dilation on states with at most `d/2` photons.
    pub unitarity_defect: f64,
    pub dim_used: usize,
}

/// Coherent information of a thermal input with mean photon number `n`,
/// raising the truncation until the tail mass is below the threshold.
pub fn coherent_information_fock(
    channel: ChannelSpec,
    env: &EnvironmentModel,
    n: f64,
    config: &FockConfig,
) -> Result<OracleResult> {
    let channel = channel.validated()?;
    let n = check_nonneg("N", n)?;
    if let ChannelSpec::Amplifier { kappa } = channel {
        if kappa > config.kappa_max {
            return Err(Error::Domain {
                name: "kappa",
                value: kappa,
                expected: "at most the configured Fock kappa_max",
            });
        }
        if n > config.amplifier_max_photons {
            return Err(Error::Domain {
                name: "N",
                value: n,
                expected: "at most the configured amplifier photon cap",
            });
        }
    }
    if matches!(env, EnvironmentModel::Generic { .. }) {
        return Err(Error::UnsupportedOracle {
            oracle: "fock",
            env: env.to_string(),
        });
    }
    let mut last_err = None;
    for d in config.dims(channel) {
        match simulate(channel, env, n, d, config) {
            Ok(result) if result.tail_mass <= config.tail_threshold => return Ok(result),
            Ok(result) => {
                last_err = Some(Error::Truncation {
                    dim: d,
                    tail_mass: result.tail_mass,
                    threshold: config.tail_threshold,
                    suggested_dim: 2 * d,
                })
            }
            Err(e @ Error::Truncation { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one truncation is tried"))
}

fn simulate(
    channel: ChannelSpec,
    env: &EnvironmentModel,
    n: f64,
    d: usize,
    config: &FockConfig,
) -> Result<OracleResult> {
    // Input and environment are checked against the tail threshold by the
    // caller through the combined tail mass; build them without failing.
    let ens = environment_ensemble(env, d, f64::INFINITY)?;
    let (p_in, tail_in) = thermal_populations(n, d);
    let unitary = match channel {
        ChannelSpec::Attenuator { tau: 0.0 } => TwoModeUnitary::swap(d)?,
        ChannelSpec::Attenuator { tau } => bs_unitary(tau, d)?,
        ChannelSpec::Amplifier { kappa } => tms_unitary_limited(kappa, d, config.kappa_max)?,
    };

    // Rows (r, b), columns (k, f): amplitude of |r⟩_R |b⟩_B |f⟩_F in the
    // k-th environment branch, weighted by √w_k.
    let components = ens.weights.len();
    let mut factor = DMatrix::<f64>::zeros(d * d, components * d);
    for (k, (w, phi)) in ens.weights.iter().zip(&ens.vectors).enumerate() {
        for (r, p) in p_in.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let mut x = DVector::zeros(d * d);
            for (e, amp) in phi.iter().enumerate() {
                x[r * d + e] = *amp;
            }
            let out = unitary.apply(&x);
            let scale = (w * p).sqrt();
            for b in 0..d {
                for f in 0..d {
                    factor[(r * d + b, k * d + f)] = scale * out[b * d + f];
                }
            }
        }
    }

    let mut rho_b = DMatrix::<f64>::zeros(d, d);
    for r in 0..d {
        let rows = factor.rows(r * d, d);
        rho_b += rows * rows.transpose();
    }
    let mut pops_f = vec![0.0; d];
    for k in 0..components {
        for (f, p) in pops_f.iter_mut().enumerate() {
            *p += factor.column(k * d + f).norm_squared();
        }
    }
    let pops_b: Vec<f64> = rho_b.diagonal().iter().copied().collect();
    let pops_e: Vec<f64> = ens.density().diagonal().iter().copied().collect();
    let tail_mass = [
        tail_in,
        top_two(&pops_e),
        top_two(&pops_b),
        top_two(&pops_f),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let s_output = entropy_real_psd(rho_b);
    let s_exchange = if ens.diagonal {
        // ρ_RB commutes with n_R − n_B.
        let mut sectors: BTreeMap<isize, Vec<usize>> = BTreeMap::new();
        for r in 0..d {
            for b in 0..d {
                sectors
                    .entry(r as isize - b as isize)
                    .or_default()
                    .push(r * d + b);
            }
        }
        sectors
            .values()
            .map(|rows| {
                let sub = factor.select_rows(rows);
                entropy_real_psd(&sub * sub.transpose())
            })
            .sum()
    } else if factor.ncols() < factor.nrows() {
        entropy_real_psd(factor.transpose() * &factor)
    } else {
        entropy_real_psd(&factor * factor.transpose())
    };
    let s_env_output = (components == 1).then(|| entropy_real_psd(factor.transpose() * &factor));

    Ok(OracleResult {
        i_c: s_output - s_exchange,
        s_output,
        s_exchange,
        s_env_output,
        tail_mass,
        unitarity_defect: unitary.unitarity_defect(d / 2),
        dim_used: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::g_nats;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    fn state(d: usize, i: usize, j: usize) -> DVector<f64> {
        basis(d * d, i * d + j)
    }

    #[test]
    fn annihilation_examples() {
        assert_eq!(
            annihilation(2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        );
        assert!(annihilation(1).is_err());
        let d = 7;
        let a = annihilation(d).unwrap();
        let number = a.transpose() * &a;
        for n in 0..d {
            assert_abs_diff_eq!(number[(n, n)], n as f64, epsilon = 1e-14);
        }
        let comm = &a * a.transpose() - a.transpose() * &a;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[(i, j)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn matrix_exp_examples() {
        let zero = DMatrix::<f64>::zeros(5, 5);
        assert_eq!(matrix_exp(&zero).unwrap(), DMatrix::identity(5, 5));

        let phases = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.0, PI),
            Complex64::new(0.0, PI / 2.0),
            Complex64::new(0.0, 0.0),
        ]));
        let e = matrix_exp(&phases).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)].im, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(2, 2)].re, 1.0, epsilon = 1e-14);

        let m = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8);
        let prod = matrix_exp(&m).unwrap() * matrix_exp(&(-&m)).unwrap();
        assert!((prod - DMatrix::<f64>::identity(6, 6)).amax() < 1e-10);

        let mut bad = DMatrix::<f64>::zeros(2, 2);
        bad[(0, 1)] = f64::NAN;
        assert!(matrix_exp(&bad).is_err());
    }

    #[test]
    fn matrix_exp_of_rotation_generator() {
        let t = 2.3;
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = matrix_exp(&g).unwrap();
        assert_abs_diff_eq!(e[(0, 0)], t.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 0)], t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn block_unitaries_match_dense_exponential() {
        let d = 6;
        for channel in [
            ChannelSpec::Attenuator { tau: 0.7 },
            ChannelSpec::Amplifier { kappa: 1.3 },
        ] {
            let dense = matrix_exp(&dense_generator(channel, d).unwrap()).unwrap();
            let blocks = match channel {
                ChannelSpec::Attenuator { tau } => bs_unitary(tau, d).unwrap(),
                ChannelSpec::Amplifier { kappa } => tms_unitary(kappa, d).unwrap(),
            };
            assert!((dense - blocks.to_dense()).amax() < 1e-12);
        }
    }

    #[test]
    fn beam_splitter_examples() {
        let d = 8;
        let id = bs_unitary(1.0, d).unwrap().to_dense();
        assert!((id - DMatrix::<f64>::identity(d * d, d * d)).amax() < 1e-15);
        assert!(bs_unitary(0.0, d).is_err());

        let out = bs_unitary(0.5, d).unwrap().apply(&state(d, 1, 0));
        assert_abs_diff_eq!(out[d], 0.5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(out[1].abs(), 0.5f64.sqrt(), epsilon = 1e-14);
        // Reduced state on B is the maximally mixed qubit.
        let p_b1 = out[d].powi(2);
        let s = -(p_b1 * p_b1.ln() + (1.0 - p_b1) * (1.0 - p_b1).ln());
        assert_abs_diff_eq!(s, LN_2, epsilon = 1e-12);

        let out = bs_unitary(0.98, d).unwrap().apply(&state(d, 1, 0));
        let p_b1: f64 = (0..d).map(|f| out[d + f].powi(2)).sum();
        assert_abs_diff_eq!(p_b1, 0.98, epsilon = 1e-13);
    }

    #[test]
    fn beam_splitter_conserves_photon_number_and_unitarity() {
        let d = 12;
        let u = bs_unitary(0.63, d).unwrap();
        let dense = u.to_dense();
        for row in 0..d * d {
            for col in 0..d * d {
                let (n_row, n_col) = (row / d + row % d, col / d + col % d);
                if n_row != n_col && n_row < d && n_col < d {
                    assert!(dense[(row, col)].abs() < 1e-10);
                }
            }
        }
        assert!(u.unitarity_defect(d / 2) < 1e-10);
    }

    #[test]
    fn squeezer_examples() {
        let d = 12;
        let id = tms_unitary(1.0, d).unwrap().to_dense();
        assert!((id - DMatrix::<f64>::identity(d * d, d * d)).amax() < 1e-15);
        assert!(tms_unitary(0.9, d).is_err());
        assert!(tms_unitary(1.6, d).is_err());

        let kappa: f64 = 1.02;
        let u = tms_unitary(kappa, d).unwrap();
        assert!(u.unitarity_defect(d / 2) < 1e-10);
        let out = u.apply(&state(d, 0, 0));
        let r = ((kappa - 1.0) / kappa).sqrt().atanh();
        let mut mean = 0.0;
        for n in 0..d {
            let p = out[n * d + n].powi(2);
            let expect = r.tanh().powi(2 * n as i32) / r.cosh().powi(2);
            assert_abs_diff_eq!(p, expect, epsilon = 1e-12);
            mean += n as f64 * p;
        }
        assert_abs_diff_eq!(mean, kappa - 1.0, epsilon = 1e-12);
        let tail = out[(d - 2) * d + d - 2].powi(2) + out[(d - 1) * d + d - 1].powi(2);
        assert!(tail < 1e-8);
    }

    #[test]
    fn swap_exchanges_modes() {
        let d = 5;
        let out = TwoModeUnitary::swap(d).unwrap().apply(&state(d, 3, 1));
        assert_eq!(out, state(d, 1, 3));
    }

    #[test]
    fn environment_states() {
        for d in [4, 9] {
            let rho =
                env_density_matrix(&EnvironmentModel::Thermal { n_th: 0.0 }, d, 1e-8).unwrap();
            assert_eq!(rho.populations()[0], 1.0);
            assert_abs_diff_eq!(entropy_dm(&rho).unwrap(), 0.0);
        }
        let rho = env_density_matrix(&EnvironmentModel::Fock { n: 1 }, 10, 1e-8).unwrap();
        assert_eq!(rho.populations()[1], 1.0);
        assert_abs_diff_eq!(entropy_dm(&rho).unwrap(), 0.0, epsilon = 1e-12);

        let rho = env_density_matrix(&EnvironmentModel::Thermal { n_th: 1.0 }, 40, 1e-8).unwrap();
        assert_abs_diff_eq!(
            entropy_dm(&rho).unwrap(),
            g_nats(1.0).unwrap(),
            epsilon = 1e-6
        );

        let generic = EnvironmentModel::Generic { n_e: 1.0, s_e: 0.5 };
        assert!(matches!(
            env_density_matrix(&generic, 10, 1e-8),
            Err(Error::UnsupportedOracle { .. })
        ));
        let heavy = env_density_matrix(&EnvironmentModel::Thermal { n_th: 5.0 }, 10, 1e-8);
        match heavy {
            Err(Error::Truncation { suggested_dim, .. }) => assert!(suggested_dim > 10),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn squeezed_thermal_state_matches_its_covariance() {
        let (n_th, r) = (0.01, 0.1);
        let rho =
            env_density_matrix(&EnvironmentModel::SqueezedThermal { n_th, r }, 20, 1e-8).unwrap();
        assert_abs_diff_eq!(
            entropy_dm(&rho).unwrap(),
            g_nats(n_th).unwrap(),
            epsilon = 1e-9
        );
        let mean: f64 = rho
            .populations()
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum();
        let expect = ((2.0 * n_th + 1.0) * (2.0 * r).cosh() - 1.0) / 2.0;
        assert_abs_diff_eq!(mean, expect, epsilon = 1e-10);
        // ⟨x²⟩ in vacuum-normalized units is (2N_th + 1) e^{2r}.
        let a = annihilation(20).unwrap();
        let x = &a + a.transpose();
        let rho_re = rho.entries().map(|v| v.re);
        assert_abs_diff_eq!(
            (&x * &x * rho_re).trace(),
            1.02 * 0.2f64.exp(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn tmsv_examples() {
        let v = tmsv_vector(0.0, 6, 1e-8).unwrap();
        assert_eq!(v, state(6, 0, 0));
        let d = 40;
        let v = tmsv_vector(1.0, d, 1e-8).unwrap();
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-10);
        let s: f64 = (0..d)
            .map(|k| v[k * d + k].powi(2))
            .map(|p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .sum();
        assert_abs_diff_eq!(s, g_nats(1.0).unwrap(), epsilon = 1e-6);
        assert!(matches!(
            tmsv_vector(5.0, 20, 1e-8),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let pure = DMatrix::from_fn(3, 3, |i, j| if i == 1 && j == 1 { 1.0 } else { 0.0 });
        assert_abs_diff_eq!(
            entropy_dm(&DensityMatrix::from_real(&pure).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-9
        );
        for k in [2usize, 5] {
            let mixed = DMatrix::<f64>::identity(k, k) / k as f64;
            let s = entropy_dm(&DensityMatrix::from_real(&mixed).unwrap()).unwrap();
            assert_abs_diff_eq!(s, (k as f64).ln(), epsilon = 1e-12);
        }
        // A pure superposition with a complex phase.
        let v = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let rho = DensityMatrix::new(&v * v.adjoint()).unwrap();
        assert_abs_diff_eq!(entropy_dm(&rho).unwrap(), 0.0, epsilon = 1e-9);
        let not_herm = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.5]);
        assert!(DensityMatrix::from_real(&not_herm).is_err());
    }

    #[test]
    fn pure_loss_oracle_matches_closed_form() {
        for (tau, n) in [(0.5, 0.5), (0.9, 1.0), (0.7, 2.0)] {
            let res = coherent_information_fock(
                ChannelSpec::Attenuator { tau },
                &EnvironmentModel::vacuum(),
                n,
                &FockConfig::default(),
            )
            .unwrap();
            let expect = g_nats(tau * n).unwrap() - g_nats((1.0 - tau) * n).unwrap();
            assert_abs_diff_eq!(res.i_c, expect, epsilon = 1e-6);
            assert!(res.tail_mass < 1e-8);
            assert_abs_diff_eq!(res.i_c, res.s_output - res.s_exchange);
        }
    }

    #[test]
    fn pure_environment_exchange_equals_environment_output() {
        for channel in [
            ChannelSpec::Attenuator { tau: 0.8 },
            ChannelSpec::Amplifier { kappa: 1.05 },
        ] {
            for env in [EnvironmentModel::vacuum(), EnvironmentModel::Fock { n: 1 }] {
                let res = coherent_information_fock(
                    channel,
                    &env,
                    0.7,
                    &FockConfig::fixed(20).with_tail_threshold(1e-6),
                )
                .unwrap();
                let s_f = res.s_env_output.expect("pure environment");
                assert_abs_diff_eq!(s_f, res.s_exchange, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fully_reflective_attenuator_has_no_coherent_information_for_vacuum() {
        let res = coherent_information_fock(
            ChannelSpec::Attenuator { tau: 0.0 },
            &EnvironmentModel::vacuum(),
            1.0,
            &FockConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(res.s_output, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.i_c, -g_nats(1.0).unwrap(), epsilon = 1e-7);
    }

    #[test]
    fn oracle_rejects_unsupported_inputs() {
        let cfg = FockConfig::default();
        let amp = ChannelSpec::Amplifier { kappa: 1.02 };
        let generic = EnvironmentModel::Generic { n_e: 3.0, s_e: 1.0 };
        assert!(matches!(
            coherent_information_fock(amp, &generic, 1.0, &cfg),
            Err(Error::UnsupportedOracle { .. })
        ));
        assert!(coherent_information_fock(
            ChannelSpec::Amplifier { kappa: 2.0 },
            &EnvironmentModel::vacuum(),
            1.0,
            &cfg
        )
        .is_err());
        assert!(coherent_information_fock(amp, &EnvironmentModel::vacuum(), 6.0, &cfg).is_err());
        assert!(matches!(
            coherent_information_fock(
                ChannelSpec::Attenuator { tau: 0.9 },
                &EnvironmentModel::vacuum(),
                5.0,
                &FockConfig::fixed(12)
            ),
            Err(Error::Truncation { .. })
        ));
        assert!(matches!(
            coherent_information_fock(
                ChannelSpec::Attenuator { tau: 0.9 },
                &EnvironmentModel::vacuum(),
                1.0,
                &FockConfig::fixed(200)
            ),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn adaptive_truncation_doubles_to_cap() {
        let cfg = FockConfig::default();
        assert_eq!(
            cfg.dims(ChannelSpec::Attenuator { tau: 0.5 }),
            vec![20, 40, 48]
        );
        assert_eq!(
            cfg.dims(ChannelSpec::Amplifier { kappa: 1.1 }),
            vec![24, 48]
        );
        assert_eq!(
            FockConfig::fixed(32).dims(ChannelSpec::Attenuator { tau: 0.5 }),
            vec![32]
        );
    }

    #[test]
    fn converged_result_is_stable_under_larger_truncation() {
        let channel = ChannelSpec::Attenuator { tau: 0.9 };
        let env = EnvironmentModel::Thermal { n_th: 0.3 };
        let a = coherent_information_fock(channel, &env, 0.4, &FockConfig::fixed(30)).unwrap();
        assert!(a.tail_mass < 1e-8);
        let b = coherent_information_fock(channel, &env, 0.4, &FockConfig::fixed(40)).unwrap();
        assert_abs_diff_eq!(a.i_c, b.i_c, epsilon = 1e-9);
    }
}
