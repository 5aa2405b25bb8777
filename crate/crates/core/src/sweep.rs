//! Parameter sweeps over the input energy, figure presets and the
//! bound-versus-oracle consistency report.
//!
//! Sweep CSV layout (`# schema=1`):
//!
//! ```text
//! # schema=1
//! # channel=att:0.98 env=sqthermal:0.01:0.1 units=bits oracle=both
//! N,q_u1,q_u2,q_l,q_l_clamped,i_c_gaussian,i_c_fock,tail_mass,fock_dim,flags
//! ```
//!
//! Oracle columns appear only when requested. When the Fock oracle runs on
//! a stand-in environment (`# fock_oracle_env=` line), the bounds for that
//! environment follow as `fock_env_q_l,fock_env_q_u`. The `flags` cell holds
//! [`Flag`] tokens separated by `|`.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    self, amplifier_q_l_direct, Bounds, BoundsReport, Flag, OracleSet, FOCK_ORACLE_TOL_BITS,
    GAUSSIAN_ORACLE_TOL_BITS,
};
use crate::error::{Error, Result};
use crate::fock::{coherent_information_fock, FockConfig};
use crate::gaussian::g_nats;
use crate::model::{ChannelSpec, EnvironmentModel, Units};

pub const SCHEMA_VERSION: u32 = 1;

/// Renders a number with 15 significant digits, locale-free.
pub fn format_number(v: f64) -> String {
    format!("{v:.14e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    #[default]
    None,
    Gaussian,
    Fock,
    Both,
}

impl OracleChoice {
    pub fn set(self) -> OracleSet {
        match self {
            Self::None => OracleSet::NONE,
            Self::Gaussian => OracleSet::GAUSSIAN,
            Self::Fock => OracleSet::FOCK,
            Self::Both => OracleSet::BOTH,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Gaussian => "gaussian",
            Self::Fock => "fock",
            Self::Both => "both",
        }
    }
}

impl FromStr for OracleChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Self::None),
            "gaussian" => Ok(Self::Gaussian),
            "fock" => Ok(Self::Fock),
            "both" => Ok(Self::Both),
            _ => Err(Error::Parse {
                what: "oracle choice",
                input: s.to_string(),
            }),
        }
    }
}

/// Evenly spaced input energies `start..=stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl NGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start >= 0.0 && stop > start && count >= 2) {
            return Err(Error::Config(format!(
                "N grid {start}:{stop}:{count} needs 0 <= start < stop and count >= 2"
            )));
        }
        Ok(Self { start, stop, count })
    }

    pub fn points(&self) -> Vec<f64> {
        let last = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

impl FromStr for NGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "N grid (start:stop:count)",
            input: s.to_string(),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(bad());
        };
        Self::new(
            start.trim().parse().map_err(|_| bad())?,
            stop.trim().parse().map_err(|_| bad())?,
            count.trim().parse().map_err(|_| bad())?,
        )
    }
}

impl std::fmt::Display for NGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub channel: ChannelSpec,
    pub env: EnvironmentModel,
    pub n_grid: NGrid,
    pub units: Units,
    pub oracles: OracleChoice,
    pub fock: FockConfig,
    /// Environment simulated by the Fock oracle when `env` has no state
    /// representation of its own.
    pub fock_oracle_env: Option<EnvironmentModel>,
}

impl SweepConfig {
    pub fn new(channel: ChannelSpec, env: EnvironmentModel, n_grid: NGrid) -> Self {
        Self {
            channel,
            env,
            n_grid,
            units: Units::Bits,
            oracles: OracleChoice::None,
            fock: FockConfig::default(),
            fock_oracle_env: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validated()?;
        self.env.validated()?;
        NGrid::new(self.n_grid.start, self.n_grid.stop, self.n_grid.count)?;
        if let Some(env) = &self.fock_oracle_env {
            env.validated()?;
        }
        Ok(())
    }
}

/// One sweep row: the report plus the bounds the Fock value was checked
/// against when a stand-in environment was simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub report: BoundsReport,
    pub fock_reference: Option<Bounds>,
}

/// Evaluates one grid point, turning oracle failures into row flags.
pub fn evaluate_row(config: &SweepConfig, n: f64) -> Result<SweepRow> {
    let mut report = BoundsReport::bounds_only(config.channel, config.env, n, config.units)?;
    let set = config.oracles.set();
    if set.gaussian {
        match bounds::gaussian_oracle(config.channel, &config.env, n) {
            Ok(v) => report.attach_gaussian(v),
            Err(Error::UnsupportedOracle { .. }) => report.flag(Flag::GaussianUnavailable),
            Err(e) => return Err(e),
        }
    }
    let mut fock_reference = None;
    if set.fock {
        let oracle_env = config.fock_oracle_env.unwrap_or(config.env);
        let reference = match config.fock_oracle_env {
            Some(env) => {
                let b = Bounds::evaluate(config.channel, n, &env.summary()?)?;
                fock_reference = Some(b);
                b
            }
            None => report.bounds_nats,
        };
        match coherent_information_fock(config.channel, &oracle_env, n, &config.fock) {
            Ok(result) => report.attach_fock(&result, &reference),
            Err(Error::Truncation { .. } | Error::TooLarge { .. }) => {
                report.flag(Flag::FockTruncated)
            }
            Err(Error::UnsupportedOracle { .. } | Error::Domain { .. }) => {
                report.flag(Flag::FockUnavailable)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SweepRow {
        report,
        fock_reference,
    })
}

/// All rows of a sweep, in grid order. Rows are evaluated in parallel.
pub fn sweep_rows(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config
        .n_grid
        .points()
        .par_iter()
        .map(|&n| evaluate_row(config, n))
        .collect()
}

pub fn render_csv(config: &SweepConfig, rows: &[SweepRow]) -> String {
    let set = config.oracles.set();
    let substitute = set.fock && config.fock_oracle_env.is_some();
    let mut out = String::new();
    let _ = writeln!(out, "# schema={SCHEMA_VERSION}");
    let _ = writeln!(
        out,
        "# channel={} env={} units={} oracle={}",
        config.channel,
        config.env,
        config.units,
        config.oracles.name()
    );
    if let (true, Some(env)) = (set.fock, config.fock_oracle_env) {
        let _ = writeln!(out, "# fock_oracle_env={env}");
    }
    let mut header = vec!["N", "q_u1", "q_u2", "q_l", "q_l_clamped"];
    if set.gaussian {
        header.push("i_c_gaussian");
    }
    if set.fock {
        header.extend(["i_c_fock", "tail_mass", "fock_dim"]);
    }
    if substitute {
        header.extend(["fock_env_q_l", "fock_env_q_u"]);
    }
    header.push("flags");
    let _ = writeln!(out, "{}", header.join(","));

    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    for row in rows {
        let r = &row.report;
        let mut cells = vec![
            format_number(r.n),
            format_number(r.q_u1()),
            format_number(r.q_u2()),
            format_number(r.q_l()),
            format_number(r.q_l_clamped()),
        ];
        if set.gaussian {
            cells.push(opt(r.oracle_gaussian()));
        }
        if set.fock {
            cells.push(opt(r.oracle_fock()));
            cells.push(opt(r.oracle_fock.as_ref().map(|o| o.tail_mass)));
            cells.push(
                r.oracle_fock
                    .as_ref()
                    .map(|o| o.dim_used.to_string())
                    .unwrap_or_default(),
            );
        }
        if substitute {
            cells.push(opt(row.fock_reference.map(|b| r.units.from_nats(b.q_l))));
            cells.push(opt(row
                .fock_reference
                .map(|b| r.units.from_nats(b.upper()))));
        }
        cells.push(
            r.flags
                .iter()
                .map(|f| f.token())
                .collect::<Vec<_>>()
                .join("|"),
        );
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Runs a sweep and renders it as CSV.
pub fn run_sweep(config: &SweepConfig) -> Result<String> {
    let rows = sweep_rows(config)?;
    Ok(render_csv(config, &rows))
}

/// The published figure configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 8] = [
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig4a,
        Self::Fig4b,
        Self::Fig5a,
        Self::Fig5b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4a => "fig4a",
            Self::Fig4b => "fig4b",
            Self::Fig5a => "fig5a",
            Self::Fig5b => "fig5b",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name.trim())
            .ok_or_else(|| Error::UnknownPreset {
                name: name.to_string(),
                valid: Self::ALL.map(|p| p.name()).join(", "),
            })
    }

    pub fn channel(self) -> ChannelSpec {
        match self {
            Self::Fig2a => ChannelSpec::Attenuator { tau: 0.99 },
            Self::Fig3a | Self::Fig4a | Self::Fig5a => ChannelSpec::Attenuator { tau: 0.98 },
            Self::Fig2b | Self::Fig3b | Self::Fig4b | Self::Fig5b => {
                ChannelSpec::Amplifier { kappa: 1.02 }
            }
        }
    }

    pub fn env(self) -> EnvironmentModel {
        match self {
            Self::Fig2a | Self::Fig2b => EnvironmentModel::Thermal { n_th: 1.0 },
            Self::Fig3a | Self::Fig3b => EnvironmentModel::SqueezedThermal { n_th: 0.01, r: 0.1 },
            Self::Fig4a | Self::Fig4b => EnvironmentModel::Generic { n_e: 0.2, s_e: 0.0 },
            Self::Fig5a | Self::Fig5b => EnvironmentModel::Generic {
                n_e: 3.0,
                s_e: g_nats(2.0).expect("g(2) is finite"),
            },
        }
    }

    /// A concrete pure state for the Fock oracle where the figure's
    /// environment is only specified by `(N_E, S_E)`.
    pub fn fock_oracle_env(self) -> Option<EnvironmentModel> {
        match self {
            Self::Fig4a | Self::Fig4b => Some(EnvironmentModel::Fock { n: 1 }),
            _ => None,
        }
    }

    /// `N ∈ [0, 5]` on 101 points, bits, no oracles.
    pub fn sweep_config(self) -> SweepConfig {
        SweepConfig {
            fock_oracle_env: self.fock_oracle_env(),
            ..SweepConfig::new(
                self.channel(),
                self.env(),
                NGrid::new(0.0, 5.0, 101).expect("valid preset grid"),
            )
        }
    }
}

impl FromStr for FigurePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

pub fn run_preset(name: &str) -> Result<String> {
    run_sweep(&FigurePreset::from_name(name)?.sweep_config())
}

/// Points checked by [`consistency_report`]: the product of channels,
/// environments and input energies.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub channels: Vec<ChannelSpec>,
    pub envs: Vec<EnvironmentModel>,
    pub ns: Vec<f64>,
    pub oracles: OracleChoice,
    pub fock: FockConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Gaussian,
    Fock,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Fock => "fock",
        }
    }

    pub fn tolerance_bits(self) -> f64 {
        match self {
            Self::Gaussian => GAUSSIAN_ORACLE_TOL_BITS,
            Self::Fock => FOCK_ORACLE_TOL_BITS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Unavailable,
    Truncated,
}

impl CheckStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Unavailable => "unavailable",
            Self::Truncated => "truncated",
        }
    }
}

/// One oracle check at one point. Values are in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub channel: ChannelSpec,
    pub env: EnvironmentModel,
    pub n: f64,
    pub oracle: OracleKind,
    pub status: CheckStatus,
    pub i_c: Option<f64>,
    pub q_l: f64,
    pub q_u: f64,
    /// `q_l − i_c`; positive means the lower bound is violated.
    pub lower_gap: Option<f64>,
    /// `i_c − min(q_u1, q_u2)`; positive means the upper bound is violated.
    pub upper_gap: Option<f64>,
    pub tail_mass: Option<f64>,
    /// Amplifier only: lower bound with the squeezer's own photon numbers.
    pub q_l_direct: Option<f64>,
    /// Amplifier only: `q_l − q_l_direct`.
    pub bookkeeping_shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn attenuator_failures(&self) -> usize {
        self.attenuator_rows(CheckStatus::Fail)
    }

    pub fn attenuator_truncations(&self) -> usize {
        self.attenuator_rows(CheckStatus::Truncated)
    }

    fn attenuator_rows(&self, status: CheckStatus) -> usize {
        self.rows
            .iter()
            .filter(|r| r.channel.is_attenuator() && r.status == status)
            .count()
    }

    /// 0 when every attenuator check passed or was unavailable, 2 on a
    /// sandwich violation, 3 on a truncation failure.
    pub fn exit_code(&self) -> i32 {
        if self.attenuator_failures() > 0 {
            2
        } else if self.attenuator_truncations() > 0 {
            3
        } else {
            0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema={SCHEMA_VERSION}");
        let _ = writeln!(
            out,
            "channel,env,N,oracle,status,i_c,q_l,q_u,lower_gap,upper_gap,tolerance,tail_mass,q_l_direct,bookkeeping_shift"
        );
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.channel,
                r.env,
                format_number(r.n),
                r.oracle.name(),
                r.status.name(),
                opt(r.i_c),
                format_number(r.q_l),
                format_number(r.q_u),
                opt(r.lower_gap),
                opt(r.upper_gap),
                format_number(r.oracle.tolerance_bits()),
                opt(r.tail_mass),
                opt(r.q_l_direct),
                opt(r.bookkeeping_shift),
            );
        }
        out
    }

    /// One line per status count plus the worst amplifier discrepancies.
    pub fn summary(&self) -> String {
        let count = |s: CheckStatus| self.rows.iter().filter(|r| r.status == s).count();
        let mut out = format!(
            "{} checks: {} pass, {} fail ({} attenuator), {} unavailable, {} truncated\n",
            self.rows.len(),
            count(CheckStatus::Pass),
            count(CheckStatus::Fail),
            self.attenuator_failures(),
            count(CheckStatus::Unavailable),
            count(CheckStatus::Truncated),
        );
        let amp: Vec<&ConsistencyRow> = self
            .rows
            .iter()
            .filter(|r| !r.channel.is_attenuator())
            .collect();
        if !amp.is_empty() {
            let max_abs = |f: fn(&ConsistencyRow) -> Option<f64>| {
                amp.iter()
                    .filter_map(|r| f(r))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let _ = writeln!(
                out,
                "amplifier: max |q_l - q_l_direct| = {:.6} bits, max lower gap = {:.6} bits, max upper gap = {:.6} bits",
                max_abs(|r| r.bookkeeping_shift.map(f64::abs)),
                max_abs(|r| r.lower_gap),
                max_abs(|r| r.upper_gap),
            );
        }
        out
    }
}

fn check_row(
    channel: ChannelSpec,
    env: EnvironmentModel,
    n: f64,
    oracle: OracleKind,
    fock: &FockConfig,
) -> Result<ConsistencyRow> {
    let units = Units::Bits;
    let summary = env.summary()?;
    let b = Bounds::evaluate(channel, n, &summary)?;
    let (q_l_direct, bookkeeping_shift) = match channel {
        ChannelSpec::Amplifier { kappa } => {
            let direct = amplifier_q_l_direct(kappa, n, &summary)?;
            (
                Some(units.from_nats(direct)),
                Some(units.from_nats(b.q_l - direct)),
            )
        }
        ChannelSpec::Attenuator { .. } => (None, None),
    };
    let mut row = ConsistencyRow {
        channel,
        env,
        n,
        oracle,
        status: CheckStatus::Unavailable,
        i_c: None,
        q_l: units.from_nats(b.q_l),
        q_u: units.from_nats(b.upper()),
        lower_gap: None,
        upper_gap: None,
        tail_mass: None,
        q_l_direct,
        bookkeeping_shift,
    };
    let value = match oracle {
        OracleKind::Gaussian => match bounds::gaussian_oracle(channel, &env, n) {
            Ok(v) => Some(v),
            Err(Error::UnsupportedOracle { .. }) => None,
            Err(e) => return Err(e),
        },
        OracleKind::Fock => match coherent_information_fock(channel, &env, n, fock) {
            Ok(res) => {
                row.tail_mass = Some(res.tail_mass);
                Some(res.i_c)
            }
            Err(Error::Truncation { tail_mass, .. }) => {
                row.status = CheckStatus::Truncated;
                row.tail_mass = Some(tail_mass);
                None
            }
            Err(Error::TooLarge { .. }) => {
                row.status = CheckStatus::Truncated;
                None
            }
            Err(Error::UnsupportedOracle { .. } | Error::Domain { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    if let Some(v) = value {
        let i_c = units.from_nats(v);
        let lower_gap = row.q_l - i_c;
        let upper_gap = i_c - row.q_u;
        let tol = oracle.tolerance_bits();
        row.i_c = Some(i_c);
        row.lower_gap = Some(lower_gap);
        row.upper_gap = Some(upper_gap);
        row.status = if lower_gap <= tol && upper_gap <= tol {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
    }
    Ok(row)
}

/// Checks `q_l ≤ I_c ≤ min(q_u1, q_u2)` on every grid point with each
/// requested oracle. Points are evaluated in parallel; row order follows
/// channels, then environments, then energies, then oracle.
pub fn consistency_report(grid: &GridSpec) -> Result<ConsistencyReport> {
    let mut kinds = Vec::new();
    let set = grid.oracles.set();
    if set.gaussian {
        kinds.push(OracleKind::Gaussian);
    }
    if set.fock {
        kinds.push(OracleKind::Fock);
    }
    let mut tasks = Vec::new();
    for &channel in &grid.channels {
        channel.validated()?;
        for &env in &grid.envs {
            env.validated()?;
            for &n in &grid.ns {
                for &kind in &kinds {
                    tasks.push((channel, env, n, kind));
                }
            }
        }
    }
    let rows = tasks
        .par_iter()
        .map(|&(channel, env, n, kind)| check_row(channel, env, n, kind, &grid.fock))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport { rows })
}
