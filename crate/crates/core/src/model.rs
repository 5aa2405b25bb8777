//! Channel and environment descriptions shared by every evaluator.
//!
//! Both types have a compact text form used on the command line and in
//! report CSVs: `att:0.98`, `amp:1.02`, `thermal:1`, `sqthermal:0.01:0.1`,
//! `fock:1`, `generic:3:1.9095` (the last field of `generic` is an entropy
//! in nats).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, Error, Result};
use crate::gaussian::{g_inv, g_nats};

/// Single-mode bosonic channel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    /// Beam splitter with transmissivity `tau` in [0, 1].
    Attenuator { tau: f64 },
    /// Two-mode squeezer with gain `kappa` >= 1.
    Amplifier { kappa: f64 },
}

impl ChannelSpec {
    pub fn attenuator(tau: f64) -> Result<Self> {
        Self::Attenuator { tau }.validated()
    }

    pub fn amplifier(kappa: f64) -> Result<Self> {
        Self::Amplifier { kappa }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Attenuator { tau } if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) => {
                Err(Error::Domain {
                    name: "tau",
                    value: tau,
                    expected: "in [0, 1]",
                })
            }
            Self::Amplifier { kappa } if !(kappa.is_finite() && kappa >= 1.0) => {
                Err(Error::Domain {
                    name: "kappa",
                    value: kappa,
                    expected: "finite and >= 1",
                })
            }
            _ => Ok(self),
        }
    }

    pub fn is_attenuator(&self) -> bool {
        matches!(self, Self::Attenuator { .. })
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Attenuator { tau } => write!(f, "att:{tau}"),
            Self::Amplifier { kappa } => write!(f, "amp:{kappa}"),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "channel",
            input: s.to_string(),
        };
        let fields = split_fields(s);
        let [kind, value] = fields.as_slice() else {
            return Err(bad());
        };
        let value: f64 = value.parse().map_err(|_| bad())?;
        match *kind {
            "att" | "attenuator" => Self::attenuator(value),
            "amp" | "amplifier" => Self::amplifier(value),
            _ => Err(bad()),
        }
    }
}

/// The environment state fed into the channel's second port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentModel {
    Thermal {
        n_th: f64,
    },
    SqueezedThermal {
        n_th: f64,
        r: f64,
    },
    Fock {
        n: u32,
    },
    /// Only the mean photon number and entropy (nats) are known.
    Generic {
        n_e: f64,
        s_e: f64,
    },
}

/// Scalar summary of an environment: mean photon number `n_e`, entropy `s_e`
/// in nats, and the entropy-equivalent thermal photon number `n_th`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSummary {
    pub n_e: f64,
    pub s_e: f64,
    pub n_th: f64,
}

impl EnvSummary {
    pub fn is_pure(&self) -> bool {
        self.s_e == 0.0
    }
}

impl EnvironmentModel {
    pub fn vacuum() -> Self {
        Self::Fock { n: 0 }
    }

    pub fn validated(self) -> Result<Self> {
        self.summary().map(|_| self)
    }

    /// Computes `(N_E, S_E, N_th)` with `N_th = g⁻¹(S_E)`.
    pub fn summary(&self) -> Result<EnvSummary> {
        match *self {
            Self::Thermal { n_th } => {
                let n_th = check_nonneg("n_th", n_th)?;
                let s_e = g_nats(n_th)?;
                Ok(EnvSummary {
                    n_e: n_th,
                    s_e,
                    n_th: g_inv(s_e)?,
                })
            }
            Self::SqueezedThermal { n_th, r } => {
                let n_th = check_nonneg("n_th", n_th)?;
                let r = check_nonneg("r", r)?;
                let s_e = g_nats(n_th)?;
                Ok(EnvSummary {
                    n_e: ((2.0 * n_th + 1.0) * (2.0 * r).cosh() - 1.0) / 2.0,
                    s_e,
                    n_th: g_inv(s_e)?,
                })
            }
            Self::Fock { n } => Ok(EnvSummary {
                n_e: f64::from(n),
                s_e: 0.0,
                n_th: 0.0,
            }),
            Self::Generic { n_e, s_e } => {
                let n_e = check_nonneg("n_e", n_e)?;
                let s_e = check_nonneg("s_e", s_e)?;
                let s_max = g_nats(n_e)?;
                if s_e > s_max + 1e-12 {
                    return Err(Error::InvalidEnvironment(format!(
                        "entropy {s_e} nats exceeds the thermal maximum {s_max} at N_E = {n_e}"
                    )));
                }
                Ok(EnvSummary {
                    n_e,
                    s_e,
                    n_th: g_inv(s_e)?,
                })
            }
        }
    }

    /// True when the state has a centered Gaussian covariance description.
    pub fn is_gaussian(&self) -> bool {
        matches!(
            self,
            Self::Thermal { .. } | Self::SqueezedThermal { .. } | Self::Fock { n: 0 }
        )
    }
}

impl fmt::Display for EnvironmentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Thermal { n_th } => write!(f, "thermal:{n_th}"),
            Self::SqueezedThermal { n_th, r } => write!(f, "sqthermal:{n_th}:{r}"),
            Self::Fock { n } => write!(f, "fock:{n}"),
            Self::Generic { n_e, s_e } => write!(f, "generic:{n_e}:{s_e}"),
        }
    }
}

impl FromStr for EnvironmentModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "environment",
            input: s.to_string(),
        };
        let fields = split_fields(s);
        let num =
            |i: usize| -> Result<f64> { fields.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let env = match (fields.first().copied(), fields.len()) {
            (Some("thermal"), 2) => Self::Thermal { n_th: num(1)? },
            (Some("sqthermal" | "squeezed-thermal"), 3) => Self::SqueezedThermal {
                n_th: num(1)?,
                r: num(2)?,
            },
            (Some("fock"), 2) => Self::Fock {
                n: fields[1].parse().map_err(|_| bad())?,
            },
            (Some("vacuum"), 1) => Self::vacuum(),
            (Some("generic"), 3) => Self::Generic {
                n_e: num(1)?,
                s_e: num(2)?,
            },
            _ => return Err(bad()),
        };
        env.validated()
    }
}

fn split_fields(s: &str) -> Vec<&str> {
    s.trim().split(':').map(str::trim).collect()
}

/// Presentation units for entropies and capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    /// Converts a value in nats into these units.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Self::Bits => nats / std::f64::consts::LN_2,
            Self::Nats => nats,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bits => "bits",
            Self::Nats => "nats",
        })
    }
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bits" => Ok(Self::Bits),
            "nats" => Ok(Self::Nats),
            _ => Err(Error::Parse {
                what: "units",
                input: s.to_string(),
            }),
        }
    }
}
