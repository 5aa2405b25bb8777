//! Fixed workloads shared by the benchmarks.

use qcap_core::{ChannelSpec, EnvironmentModel};

/// Channel and environment pairs spanning the figure presets.
pub fn workloads() -> Vec<(&'static str, ChannelSpec, EnvironmentModel)> {
    vec![
        (
            "att_thermal",
            ChannelSpec::Attenuator { tau: 0.9 },
            EnvironmentModel::Thermal { n_th: 1.0 },
        ),
        (
            "att_squeezed",
            ChannelSpec::Attenuator { tau: 0.98 },
            EnvironmentModel::SqueezedThermal { n_th: 0.01, r: 0.1 },
        ),
        (
            "amp_thermal",
            ChannelSpec::Amplifier { kappa: 1.02 },
            EnvironmentModel::Thermal { n_th: 1.0 },
        ),
    ]
}
