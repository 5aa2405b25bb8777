//! Closed-form upper and lower bounds on the energy-constrained quantum
//! capacity of general attenuators and amplifiers.
//!
//! Every formula depends on the environment only through `N_E`, its entropy
//! `S_E` and `N_th = g⁻¹(S_E)`, so all functions take an [`EnvSummary`].
//! Results are in nats.
//!
//! Upper bounds come from the linear (`q_u1`) and exponential (`q_u2`) forms
//! of the conditional entropy power inequality applied to the complementary
//! channel; the lower bounds evaluate the coherent information of a thermal
//! input with a Gaussian-optimizer estimate of the output entropy.

use std::fmt;

use crate::error::{check_nonneg, Error, Result};
use crate::fock::{self, FockConfig, OracleResult};
use crate::gaussian::{self, g_nats, CovarianceMatrix, GaussianChannelPoint};
use crate::model::{ChannelSpec, EnvSummary, EnvironmentModel, Units};

/// Sandwich tolerance against the exact Gaussian oracle, in bits.
pub const GAUSSIAN_ORACLE_TOL_BITS: f64 = 1e-3;
/// Sandwich tolerance against the truncated Fock oracle, in bits.
pub const FOCK_ORACLE_TOL_BITS: f64 = 0.02;
/// Slack before a lower bound above the upper bound is flagged, in nats.
pub const ORDERING_TOL_NATS: f64 = 1e-9;

fn tau_checked(tau: f64) -> Result<f64> {
    ChannelSpec::attenuator(tau).map(|_| tau)
}

fn kappa_checked(kappa: f64) -> Result<f64> {
    ChannelSpec::amplifier(kappa).map(|_| kappa)
}

/// Maximal output entropy minus the linear bound on the complementary
/// output: `g(τN + (1−τ)N_E) − (1−τ)S_E`.
pub fn attenuator_q_u1(tau: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let tau = tau_checked(tau)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats(tau * n + (1.0 - tau) * env.n_e)? - (1.0 - tau) * env.s_e)
}

/// `g(τN + (1−τ)N_E) − ln((1−τ) + τ e^{−S_E}) − S_E`.
pub fn attenuator_q_u2(tau: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let tau = tau_checked(tau)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats(tau * n + (1.0 - tau) * env.n_e)?
        - ((1.0 - tau) + tau * (-env.s_e).exp()).ln()
        - env.s_e)
}

/// `g((1−τ)N_th + τN) − g((1−τ)N + τN_E) − S_E`.
pub fn attenuator_q_l(tau: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let tau = tau_checked(tau)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats((1.0 - tau) * env.n_th + tau * n)?
        - g_nats((1.0 - tau) * n + tau * env.n_e)?
        - env.s_e)
}

/// `g(κN + (κ−1)(N_E+1)) − (κ−1)/(2κ−1)·S_E − ln(2κ−1)`.
pub fn amplifier_q_u1(kappa: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let kappa = kappa_checked(kappa)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats(kappa * n + (kappa - 1.0) * (env.n_e + 1.0))?
        - (kappa - 1.0) / (2.0 * kappa - 1.0) * env.s_e
        - (2.0 * kappa - 1.0).ln())
}

/// `g(κN + (κ−1)(N_E+1)) − ln(κ−1 + κ e^{−S_E}) − S_E`.
pub fn amplifier_q_u2(kappa: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let kappa = kappa_checked(kappa)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats(kappa * n + (kappa - 1.0) * (env.n_e + 1.0))?
        - (kappa - 1.0 + kappa * (-env.s_e).exp()).ln()
        - env.s_e)
}

/// `g((κ−1)N_th + κ(N+1)) − g((κ−1)N + κ(N_E+1)) − S_E`, with the photon
/// numbers exactly as in the published lower bound.
pub fn amplifier_q_l(kappa: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let kappa = kappa_checked(kappa)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats((kappa - 1.0) * env.n_th + kappa * (n + 1.0))?
        - g_nats((kappa - 1.0) * n + kappa * (env.n_e + 1.0))?
        - env.s_e)
}

/// The amplifier lower bound with photon numbers taken from the two-mode
/// squeezer itself: output `κN + (κ−1)(N_th+1)` and weak-complementary
/// output `(κ−1)(N+1) + κN_E`. Each argument is one photon below the
/// published one; consistency reports show both so the gap is visible.
pub fn amplifier_q_l_direct(kappa: f64, n: f64, env: &EnvSummary) -> Result<f64> {
    let kappa = kappa_checked(kappa)?;
    let n = check_nonneg("N", n)?;
    Ok(g_nats(kappa * n + (kappa - 1.0) * (env.n_th + 1.0))?
        - g_nats((kappa - 1.0) * (n + 1.0) + kappa * env.n_e)?
        - env.s_e)
}

/// The three bounds for one channel, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub q_u1: f64,
    pub q_u2: f64,
    pub q_l: f64,
}

impl Bounds {
    pub fn evaluate(channel: ChannelSpec, n: f64, env: &EnvSummary) -> Result<Self> {
        match channel.validated()? {
            ChannelSpec::Attenuator { tau } => Ok(Self {
                q_u1: attenuator_q_u1(tau, n, env)?,
                q_u2: attenuator_q_u2(tau, n, env)?,
                q_l: attenuator_q_l(tau, n, env)?,
            }),
            ChannelSpec::Amplifier { kappa } => Ok(Self {
                q_u1: amplifier_q_u1(kappa, n, env)?,
                q_u2: amplifier_q_u2(kappa, n, env)?,
                q_l: amplifier_q_l(kappa, n, env)?,
            }),
        }
    }

    pub fn upper(&self) -> f64 {
        self.q_u1.min(self.q_u2)
    }

    /// Signed amounts by which `value` escapes `[q_l − tol, upper + tol]`;
    /// non-positive entries mean the corresponding side holds.
    pub fn gaps(&self, value: f64) -> (f64, f64) {
        (self.q_l - value, value - self.upper())
    }
}

/// Machine-readable consistency notes attached to report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    /// `q_l > min(q_u1, q_u2)`.
    LowerAboveUpper,
    GaussianBelowLower,
    GaussianAboveUpper,
    FockBelowLower,
    FockAboveUpper,
    /// The environment has no covariance-matrix description.
    GaussianUnavailable,
    /// The environment has no state-level Fock representation.
    FockUnavailable,
    /// The Fock simulation did not converge within the truncation cap.
    FockTruncated,
}

impl Flag {
    pub const ALL: [Flag; 8] = [
        Flag::LowerAboveUpper,
        Flag::GaussianBelowLower,
        Flag::GaussianAboveUpper,
        Flag::FockBelowLower,
        Flag::FockAboveUpper,
        Flag::GaussianUnavailable,
        Flag::FockUnavailable,
        Flag::FockTruncated,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Flag::LowerAboveUpper => "lower_above_upper",
            Flag::GaussianBelowLower => "gaussian_below_lower",
            Flag::GaussianAboveUpper => "gaussian_above_upper",
            Flag::FockBelowLower => "fock_below_lower",
            Flag::FockAboveUpper => "fock_above_upper",
            Flag::GaussianUnavailable => "gaussian_unavailable",
            Flag::FockUnavailable => "fock_unavailable",
            Flag::FockTruncated => "fock_truncated",
        }
    }

    /// An oracle value landed outside the bounds.
    pub fn is_sandwich_violation(self) -> bool {
        matches!(
            self,
            Flag::LowerAboveUpper
                | Flag::GaussianBelowLower
                | Flag::GaussianAboveUpper
                | Flag::FockBelowLower
                | Flag::FockAboveUpper
        )
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Which coherent-information oracles to run alongside the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleSet {
    pub gaussian: bool,
    pub fock: bool,
}

impl OracleSet {
    pub const NONE: Self = Self {
        gaussian: false,
        fock: false,
    };
    pub const GAUSSIAN: Self = Self {
        gaussian: true,
        fock: false,
    };
    pub const FOCK: Self = Self {
        gaussian: false,
        fock: true,
    };
    pub const BOTH: Self = Self {
        gaussian: true,
        fock: true,
    };
}

/// Fock-oracle output carried by a report, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOracleValue {
    pub i_c: f64,
    pub tail_mass: f64,
    pub dim_used: usize,
}

/// Bounds and oracle values for one (channel, environment, N) point.
///
/// Values are stored in nats and converted on access so that the bits and
/// nats views of a report differ by exactly a factor of `ln 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub channel: ChannelSpec,
    pub env: EnvironmentModel,
    pub n: f64,
    pub units: Units,
    pub bounds_nats: Bounds,
    pub oracle_gaussian_nats: Option<f64>,
    pub oracle_fock: Option<FockOracleValue>,
    pub flags: Vec<Flag>,
}

impl BoundsReport {
    /// Bounds only, with the ordering check applied.
    pub fn bounds_only(
        channel: ChannelSpec,
        env: EnvironmentModel,
        n: f64,
        units: Units,
    ) -> Result<Self> {
        let summary = env.summary()?;
        let bounds_nats = Bounds::evaluate(channel, n, &summary)?;
        let mut report = Self {
            channel,
            env,
            n,
            units,
            bounds_nats,
            oracle_gaussian_nats: None,
            oracle_fock: None,
            flags: Vec::new(),
        };
        if bounds_nats.q_l > bounds_nats.upper() + ORDERING_TOL_NATS {
            report.flag(Flag::LowerAboveUpper);
        }
        Ok(report)
    }

    pub fn q_u1(&self) -> f64 {
        self.units.from_nats(self.bounds_nats.q_u1)
    }

    pub fn q_u2(&self) -> f64 {
        self.units.from_nats(self.bounds_nats.q_u2)
    }

    pub fn q_l(&self) -> f64 {
        self.units.from_nats(self.bounds_nats.q_l)
    }

    pub fn q_l_clamped(&self) -> f64 {
        self.q_l().max(0.0)
    }

    pub fn oracle_gaussian(&self) -> Option<f64> {
        self.oracle_gaussian_nats.map(|v| self.units.from_nats(v))
    }

    pub fn oracle_fock(&self) -> Option<f64> {
        self.oracle_fock
            .as_ref()
            .map(|o| self.units.from_nats(o.i_c))
    }

    pub fn with_units(&self, units: Units) -> Self {
        Self {
            units,
            ..self.clone()
        }
    }

    pub fn flag(&mut self, flag: Flag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }

    /// Records a Gaussian-oracle value and checks it against the bounds.
    pub fn attach_gaussian(&mut self, i_c_nats: f64) {
        let tol = GAUSSIAN_ORACLE_TOL_BITS * std::f64::consts::LN_2;
        let (low, high) = self.bounds_nats.gaps(i_c_nats);
        if low > tol {
            self.flag(Flag::GaussianBelowLower);
        }
        if high > tol {
            self.flag(Flag::GaussianAboveUpper);
        }
        self.oracle_gaussian_nats = Some(i_c_nats);
    }

    /// Records a Fock-oracle value and checks it against `reference`, the
    /// bounds of the environment the simulation actually used.
    pub fn attach_fock(&mut self, result: &OracleResult, reference: &Bounds) {
        let tol = FOCK_ORACLE_TOL_BITS * std::f64::consts::LN_2;
        let (low, high) = reference.gaps(result.i_c);
        if low > tol {
            self.flag(Flag::FockBelowLower);
        }
        if high > tol {
            self.flag(Flag::FockAboveUpper);
        }
        self.oracle_fock = Some(FockOracleValue {
            i_c: result.i_c,
            tail_mass: result.tail_mass,
            dim_used: result.dim_used,
        });
    }

    pub fn has_sandwich_violation(&self) -> bool {
        self.flags.iter().any(|f| f.is_sandwich_violation())
    }
}

/// Covariance matrix of a Gaussian environment.
pub fn environment_covariance(env: &EnvironmentModel) -> Result<CovarianceMatrix> {
    match *env {
        EnvironmentModel::Thermal { n_th } => CovarianceMatrix::thermal(n_th),
        EnvironmentModel::SqueezedThermal { n_th, r } => gaussian::squeezed_thermal_cov(n_th, r),
        EnvironmentModel::Fock { n: 0 } => Ok(CovarianceMatrix::identity(1)),
        _ => Err(Error::UnsupportedOracle {
            oracle: "gaussian",
            env: env.to_string(),
        }),
    }
}

/// Exact coherent information of a thermal input for a Gaussian environment.
pub fn gaussian_oracle(channel: ChannelSpec, env: &EnvironmentModel, n: f64) -> Result<f64> {
    let point = GaussianChannelPoint {
        channel,
        env_cov: environment_covariance(env)?,
        input_photons: n,
    };
    gaussian::gaussian_coherent_information(&point)
}

/// Evaluates the bounds and the requested oracles for one point.
///
/// Oracle failures are errors here; sweeps that should keep going use
/// [`BoundsReport::bounds_only`] with the `attach_*` methods instead.
pub fn bounds_report(
    channel: ChannelSpec,
    env: EnvironmentModel,
    n: f64,
    units: Units,
    oracles: OracleSet,
    fock_config: &FockConfig,
) -> Result<BoundsReport> {
    let mut report = BoundsReport::bounds_only(channel, env, n, units)?;
    if oracles.gaussian {
        report.attach_gaussian(gaussian_oracle(channel, &env, n)?);
    }
    if oracles.fock {
        let result = fock::coherent_information_fock(channel, &env, n, fock_config)?;
        let reference = report.bounds_nats;
        report.attach_fock(&result, &reference);
    }
    Ok(report)
}
