//! Versioned model parameters and the built-in scenarios derived from them.
//!
//! The shipped file is embedded at build time. Setting `NFE_PARAMS` to a path
//! replaces it for [`Params::load_default`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::{
    Extension, LinkProfile, Mode, Placement, Scenario, TerminationSpec, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::geometry::{CouplingKernel, DeviceLayout};

pub const PARAMS_ENV: &str = "NFE_PARAMS";
const EMBEDDED: &str = include_str!("../../data/params.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirProfile {
    pub kernel: CouplingKernel,
    pub link: LinkProfile,
    pub dielectric_epsilon_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapeProfile {
    pub gap_m: f64,
    pub extension: Extension,
    pub link: LinkProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyProfile {
    pub kernel: CouplingKernel,
    pub extension: Extension,
    pub link: LinkProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub schema_version: u32,
    pub version: String,
    pub termination: TerminationSpec,
    pub layouts: BTreeMap<String, DeviceLayout>,
    pub air: AirProfile,
    /// Orientation gain tables per test configuration (`cfg1`, `cfg2`, `cfg3`).
    pub gains: BTreeMap<String, [f64; 8]>,
    pub tape: TapeProfile,
    pub body: BodyProfile,
}

impl Params {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Params =
            toml::from_str(text).map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "parameter file schema_version {} is not supported",
                p.schema_version
            )));
        }
        for id in builtin_ids() {
            p.scenario(&id)?;
        }
        Ok(p)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("parameter file: {e}")))
    }

    pub fn embedded() -> Self {
        Self::from_toml(EMBEDDED).expect("embedded parameter file is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The file named by `NFE_PARAMS`, or the embedded defaults.
    pub fn load_default() -> Result<Self> {
        match std::env::var_os(PARAMS_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::embedded()),
        }
    }

    fn layout(&self, name: &str) -> Result<DeviceLayout> {
        self.layouts
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("parameter file has no layout `{name}`")))
    }

    fn gains(&self, name: &str) -> Result<[f64; 8]> {
        self.gains
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("parameter file has no gain table `{name}`")))
    }

    fn air_kernel(&self, table: &str) -> Result<CouplingKernel> {
        let mut k = self.air.kernel;
        k.orientation_gain = self.gains(table)?;
        Ok(k)
    }

    /// Builds a built-in scenario by id (see [`builtin_ids`]).
    pub fn scenario(&self, id: &str) -> Result<Scenario> {
        let unknown = || Error::Config(format!("unknown scenario `{id}`"));
        let base = |mode, config: &str, test: &str, tx, rx, kernel| Scenario {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            mode,
            config: Some(config.to_string()),
            test: Some(test.to_string()),
            tx,
            rx,
            kernel,
            extension: None,
            termination: self.termination,
            link: self.air.link,
            fixed_gap_m: None,
        };
        let at = |layout, rotation_deg| Placement {
            layout,
            rotation_deg,
        };

        let s = if let Some((cfg, test)) = id.split_once("_test") {
            let k: usize = test.parse().map_err(|_| unknown())?;
            let (tx_layout, rx_layout, max) = match cfg {
                "cfg1" => ("east", "west", 8),
                "cfg2" => ("west", "west", 8),
                "cfg3" => ("square", "square", 2),
                _ => return Err(unknown()),
            };
            if k == 0 || k > max {
                return Err(unknown());
            }
            base(
                Mode::DifferentialAir,
                cfg,
                test,
                at(self.layout(tx_layout)?, 0.0),
                at(self.layout(rx_layout)?, 45.0 * (k - 1) as f64),
                self.air_kernel(cfg)?,
            )
        } else {
            match id {
                "dielectric" => {
                    let mut k = self.air_kernel("cfg1")?;
                    k.epsilon_r = self.air.dielectric_epsilon_r;
                    base(
                        Mode::DifferentialDielectric,
                        "dielectric",
                        "1",
                        at(self.layout("east")?, 0.0),
                        at(self.layout("west")?, 0.0),
                        k,
                    )
                }
                "tape" => {
                    let mut s = base(
                        Mode::ConductorExtended,
                        "tape",
                        "1",
                        at(self.layout("west")?, 0.0),
                        at(self.layout("west")?, 0.0),
                        self.air_kernel("cfg2")?,
                    );
                    s.extension = Some(self.tape.extension);
                    s.link = self.tape.link;
                    s.fixed_gap_m = Some(self.tape.gap_m);
                    s
                }
                "body" => {
                    let mut s = base(
                        Mode::BodyAssisted,
                        "body",
                        "1",
                        at(self.layout("west")?, 0.0),
                        at(self.layout("west")?, 0.0),
                        self.body.kernel,
                    );
                    s.extension = Some(self.body.extension);
                    s.link = self.body.link;
                    s
                }
                _ => return Err(unknown()),
            }
        };
        s.validate()?;
        Ok(s)
    }
}

/// Ids accepted by [`Params::scenario`].
pub fn builtin_ids() -> Vec<String> {
    let mut ids = Vec::new();
    for k in 1..=8 {
        ids.push(format!("cfg1_test{k}"));
    }
    for k in 1..=8 {
        ids.push(format!("cfg2_test{k}"));
    }
    ids.push("cfg3_test1".into());
    ids.push("cfg3_test2".into());
    ids.extend(["dielectric", "tape", "body"].map(String::from));
    ids
}
