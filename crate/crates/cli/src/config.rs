use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use qcap_core::sweep::FigurePreset;
use qcap_core::{
    ChannelSpec, EnvironmentModel, FockConfig, GridSpec, NGrid, OracleChoice, SweepConfig, Units,
};
use serde::Deserialize;

/// Sweep parameters shared by the command line and the TOML config file.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepParams {
    /// Figure preset used as the base configuration
    #[arg(long)]
    pub preset: Option<String>,
    /// Channel kind (att, amp) or full spec such as att:0.98
    #[arg(long)]
    pub channel: Option<String>,
    /// Attenuator transmissivity
    #[arg(long)]
    pub tau: Option<f64>,
    /// Amplifier gain
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Environment kind (thermal, sqthermal, fock, vacuum, generic) or full spec
    #[arg(long)]
    pub env: Option<String>,
    /// Thermal photon number
    #[arg(long)]
    pub nth: Option<f64>,
    /// Squeezing parameter
    #[arg(long)]
    pub r: Option<f64>,
    /// Fock environment photon number
    #[arg(long)]
    pub fock_n: Option<u32>,
    /// Generic environment mean photon number
    #[arg(long)]
    pub ne: Option<f64>,
    /// Generic environment entropy, nats
    #[arg(long)]
    pub se: Option<f64>,
    /// Input energy grid start:stop:count
    #[arg(long)]
    pub n_grid: Option<String>,
    /// bits or nats
    #[arg(long)]
    pub units: Option<String>,
    /// none, gaussian, fock or both
    #[arg(long)]
    pub oracle: Option<String>,
    /// Fixed Fock truncation instead of the adaptive schedule
    #[arg(long)]
    pub fock_dim: Option<usize>,
    /// Largest tolerated Fock tail mass
    #[arg(long)]
    pub fock_tail: Option<f64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Grid parameters for the consistency report.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReportParams {
    /// Comma-separated channels, e.g. att:0.6,amp:1.02
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
    /// Comma-separated environments, e.g. thermal:1,fock:1
    #[arg(long, value_delimiter = ',')]
    pub envs: Option<Vec<String>>,
    /// Comma-separated input energies
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<f64>>,
    /// gaussian, fock or both
    #[arg(long)]
    pub oracle: Option<String>,
    #[arg(long)]
    pub fock_dim: Option<usize>,
    #[arg(long)]
    pub fock_tail: Option<f64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),+) => {
        Self { $($field: $flags.$field.or($file.$field)),+ }
    };
}

impl SweepParams {
    /// Flags take precedence over file values, field by field.
    pub fn overlay(self, file: Self) -> Self {
        overlay!(
            self, file, preset, channel, tau, kappa, env, nth, r, fock_n, ne, se, n_grid, units,
            oracle, fock_dim, fock_tail, out
        )
    }

    pub fn resolve(&self) -> Result<SweepConfig> {
        let preset = self
            .preset
            .as_deref()
            .map(FigurePreset::from_name)
            .transpose()?;
        let channel = match resolve_channel(self.channel.as_deref(), self.tau, self.kappa)? {
            Some(c) => c,
            None => match preset {
                Some(p) => p.channel(),
                None => bail!("no channel given; use --channel, --tau, --kappa or --preset"),
            },
        };
        let env = self.resolve_env()?;
        let (env, fock_oracle_env) = match (env, preset) {
            (Some(env), _) => (env, None),
            (None, Some(p)) => (p.env(), p.fock_oracle_env()),
            (None, None) => bail!("no environment given; use --env or --preset"),
        };
        let n_grid = match &self.n_grid {
            Some(s) => s.parse::<NGrid>()?,
            None => NGrid::new(0.0, 5.0, 101)?,
        };
        let config = SweepConfig {
            units: parse_opt::<Units>(self.units.as_deref())?.unwrap_or_default(),
            oracles: parse_opt::<OracleChoice>(self.oracle.as_deref())?.unwrap_or_default(),
            fock: fock_config(self.fock_dim, self.fock_tail),
            fock_oracle_env,
            ..SweepConfig::new(channel, env, n_grid)
        };
        config.validate()?;
        Ok(config)
    }

    fn resolve_env(&self) -> Result<Option<EnvironmentModel>> {
        let (kind, inline) = match self.env.as_deref() {
            Some(s) => {
                let mut parts = s.split(':').map(str::trim);
                let kind = parts.next().unwrap_or_default().to_string();
                (Some(kind), parts.map(str::to_string).collect::<Vec<_>>())
            }
            None => (None, Vec::new()),
        };
        let inline_num = |i: usize, name: &str| -> Result<Option<f64>> {
            inline
                .get(i)
                .map(|v| {
                    v.parse::<f64>()
                        .with_context(|| format!("bad {name} in --env"))
                })
                .transpose()
        };
        let kind = match kind {
            Some(k) => k,
            None if self.ne.is_some() || self.se.is_some() => "generic".into(),
            None if self.fock_n.is_some() => "fock".into(),
            None if self.r.is_some() => "sqthermal".into(),
            None if self.nth.is_some() => "thermal".into(),
            None => return Ok(None),
        };
        let need = |v: Option<f64>, flag: &str| -> Result<f64> {
            v.with_context(|| format!("environment {kind} needs --{flag}"))
        };
        let env = match kind.as_str() {
            "thermal" => EnvironmentModel::Thermal {
                n_th: need(self.nth.or(inline_num(0, "nth")?), "nth")?,
            },
            "sqthermal" | "squeezed-thermal" => EnvironmentModel::SqueezedThermal {
                n_th: need(self.nth.or(inline_num(0, "nth")?), "nth")?,
                r: need(self.r.or(inline_num(1, "r")?), "r")?,
            },
            "fock" => {
                let n = match (self.fock_n, inline.first()) {
                    (Some(n), _) => n,
                    (None, Some(v)) => v.parse().context("bad photon number in --env")?,
                    (None, None) => bail!("environment fock needs --fock-n"),
                };
                EnvironmentModel::Fock { n }
            }
            "vacuum" => EnvironmentModel::vacuum(),
            "generic" => EnvironmentModel::Generic {
                n_e: need(self.ne.or(inline_num(0, "ne")?), "ne")?,
                s_e: need(self.se.or(inline_num(1, "se")?), "se")?,
            },
            other => bail!(
                "unknown environment {other:?}; expected thermal, sqthermal, fock, vacuum or generic"
            ),
        };
        Ok(Some(env.validated()?))
    }
}

impl ReportParams {
    pub fn overlay(self, file: Self) -> Self {
        overlay!(self, file, channels, envs, ns, oracle, fock_dim, fock_tail, out)
    }

    pub fn resolve(&self) -> Result<GridSpec> {
        let channels = self
            .channels
            .iter()
            .flatten()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<ChannelSpec>())
            .collect::<Result<Vec<_>, _>>()?;
        let envs = self
            .envs
            .iter()
            .flatten()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<EnvironmentModel>())
            .collect::<Result<Vec<_>, _>>()?;
        let oracles =
            parse_opt::<OracleChoice>(self.oracle.as_deref())?.unwrap_or(OracleChoice::Both);
        if oracles == OracleChoice::None {
            bail!("a consistency report needs --oracle gaussian, fock or both");
        }
        Ok(GridSpec {
            channels,
            envs,
            ns: self.ns.clone().unwrap_or_default(),
            oracles,
            fock: fock_config(self.fock_dim, self.fock_tail),
        })
    }
}

fn resolve_channel(
    spec: Option<&str>,
    tau: Option<f64>,
    kappa: Option<f64>,
) -> Result<Option<ChannelSpec>> {
    let Some(spec) = spec else {
        return match (tau, kappa) {
            (Some(_), Some(_)) => {
                bail!("--tau and --kappa are mutually exclusive without --channel")
            }
            (Some(tau), None) => Ok(Some(ChannelSpec::attenuator(tau)?)),
            (None, Some(kappa)) => Ok(Some(ChannelSpec::amplifier(kappa)?)),
            (None, None) => Ok(None),
        };
    };
    let (kind, inline) = match spec.split_once(':') {
        Some((k, v)) => {
            let v: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("bad channel parameter in {spec:?}"))?;
            (k.trim(), Some(v))
        }
        None => (spec.trim(), None),
    };
    let channel = match kind {
        "att" | "attenuator" => {
            ChannelSpec::attenuator(tau.or(inline).context("attenuator needs --tau")?)?
        }
        "amp" | "amplifier" => {
            ChannelSpec::amplifier(kappa.or(inline).context("amplifier needs --kappa")?)?
        }
        other => bail!("unknown channel {other:?}; expected att or amp"),
    };
    Ok(Some(channel))
}

fn parse_opt<T>(s: Option<&str>) -> Result<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    Ok(s.map(str::parse).transpose()?)
}

fn fock_config(dim: Option<usize>, tail: Option<f64>) -> FockConfig {
    let base = dim.map(FockConfig::fixed).unwrap_or_default();
    match tail {
        Some(t) => base.with_tail_threshold(t),
        None => base,
    }
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}
