//! JSON scenario files: a base model, a change of measure, optional named
//! presets and the analytic targets used by the verification checks.
//!
//! ```json
//! {
//!   "name": "esscher_r",
//!   "mixing": {"family": "gamma", "rate": 4, "shape": 2},
//!   "interarrival_kernel": {"family": "exponential", "rate": "theta"},
//!   "claims": {"family": "exponential", "rate": 2},
//!   "premium_rate": 2,
//!   "measure_change": {"esscher": 0.5, "xi": {"type": "unit"}}
//! }
//! ```
//!
//! `mixing` is one law or an array of two independent laws. Kernel
//! parameters and `premium_rate` may be numbers or expressions in `theta`
//! (see [`crate::expr`]). `measure_change` holds `tilt` and `xi` plus at most
//! one interarrival target: `rho` (exponential with rate `rho(theta)`),
//! `target_kernel` (any kernel), or `esscher` (Esscher parameter `r`, which
//! also fixes the claim tilt). Without a target the interarrival law is kept.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::change_of_measure::esscher_change;
use crate::distributions::DistSpec;
use crate::error::{CmrpError, Result};
use crate::expr::Expr;
use crate::model::{
    validate_reweight, validate_tilt, ClaimTilt, CmrpModel, KernelSpec, MeasureChange, MixReweight,
    MixingSpec, TargetKernel,
};

/// Scenario files shipped with the crate, addressable by file name.
pub const BUILTIN: &[(&str, &str)] = &[
    (
        "example_ga_iga.json",
        include_str!("../scenarios/example_ga_iga.json"),
    ),
    (
        "polya_lundberg.json",
        include_str!("../scenarios/polya_lundberg.json"),
    ),
    (
        "poisson_lognormal.json",
        include_str!("../scenarios/poisson_lognormal.json"),
    ),
    (
        "poisson_beta.json",
        include_str!("../scenarios/poisson_beta.json"),
    ),
    (
        "esscher_r.json",
        include_str!("../scenarios/esscher_r.json"),
    ),
    (
        "dirac_exp.json",
        include_str!("../scenarios/dirac_exp.json"),
    ),
    (
        "exp_shift.json",
        include_str!("../scenarios/exp_shift.json"),
    ),
    (
        "gamma_mixed_ruin.json",
        include_str!("../scenarios/gamma_mixed_ruin.json"),
    ),
];

/// Tolerance for the admissibility checks run at load time.
pub const LOAD_TOL: f64 = 1e-6;

/// Law of a statistic of `Θ` under the target measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingPushforward {
    pub statistic: Expr,
    pub target: DistSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: CmrpModel,
    pub change: Option<MeasureChange>,
    pub presets: BTreeMap<String, MeasureChange>,
    pub mixing_pushforward: Option<MixingPushforward>,
    /// Grid-tilt renormalization constant, when one was applied.
    pub tilt_normalization: Option<f64>,
}

impl Scenario {
    /// Load from a file, falling back to the built-in scenario of the same
    /// name when the path does not exist.
    pub fn load(path: &str) -> Result<Scenario> {
        let p = FsPath::new(path);
        if p.exists() {
            let text =
                std::fs::read_to_string(p).map_err(|e| CmrpError::Io(format!("{path}: {e}")))?;
            return Scenario::from_json(&text).map_err(|e| prefix_config(path, e));
        }
        match builtin_text(path) {
            Some(text) => Scenario::from_json(text).map_err(|e| prefix_config(path, e)),
            None => Err(CmrpError::Io(format!("{path}: no such scenario file"))),
        }
    }

    pub fn builtin(name: &str) -> Result<Scenario> {
        let text = builtin_text(name)
            .ok_or_else(|| CmrpError::Io(format!("{name}: no built-in scenario")))?;
        Scenario::from_json(text).map_err(|e| prefix_config(name, e))
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let raw: RawScenario = parse(text)?;
        raw.build()
    }

    /// The scenario's change of measure, or the named preset.
    pub fn change_named(&self, preset: Option<&str>) -> Result<&MeasureChange> {
        match preset {
            Some(name) => self
                .presets
                .get(name)
                .ok_or_else(|| CmrpError::config("presets", format!("no preset named `{name}`"))),
            None => self.change.as_ref().ok_or_else(|| {
                CmrpError::config("measure_change", "scenario declares no change of measure")
            }),
        }
    }

    /// The scenario's change of measure (identity when none is declared).
    pub fn change_or_identity(&self) -> MeasureChange {
        self.change.clone().unwrap_or_else(MeasureChange::identity)
    }
}

fn builtin_text(name: &str) -> Option<&'static str> {
    let file = FsPath::new(name).file_name()?.to_str()?;
    let file = if file.ends_with(".json") {
        file.to_string()
    } else {
        format!("{file}.json")
    };
    BUILTIN.iter().find(|(n, _)| *n == file).map(|(_, t)| *t)
}

fn prefix_config(source: &str, e: CmrpError) -> CmrpError {
    match e {
        CmrpError::Config { path, message } => CmrpError::Config {
            path,
            message: format!("{source}: {message}"),
        },
        other => other,
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CmrpError::config(path, e.into_inner().to_string())
    })
}

fn from_value<T: DeserializeOwned>(v: &Value, at: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            at.to_string()
        } else {
            format!("{at}.{inner}")
        };
        CmrpError::config(path, e.into_inner().to_string())
    })
}

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        CmrpError::Config { .. } => e,
        other => CmrpError::config(path, other.to_string()),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    mixing: Value,
    interarrival_kernel: RawKernel,
    claims: RawDist,
    premium_rate: Expr,
    #[serde(default)]
    measure_change: Option<RawChange>,
    #[serde(default)]
    presets: Vec<RawPreset>,
    #[serde(default)]
    mixing_pushforward: Option<RawPushforward>,
}

#[derive(Deserialize)]
struct RawDist {
    family: String,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

impl RawDist {
    fn build(&self) -> Result<DistSpec> {
        DistSpec::from_params(&self.family, &self.params)
    }
}

#[derive(Deserialize)]
struct RawKernel {
    family: String,
    #[serde(flatten)]
    params: BTreeMap<String, Expr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreset {
    name: String,
    measure_change: RawChange,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPushforward {
    statistic: Expr,
    target: RawDist,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChange {
    #[serde(default)]
    tilt: Option<RawTilt>,
    #[serde(default)]
    xi: Option<RawXi>,
    #[serde(default)]
    rho: Option<Expr>,
    #[serde(default)]
    target_kernel: Option<RawKernel>,
    #[serde(default)]
    esscher: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawTilt {
    Unit,
    Esscher {
        r: f64,
    },
    Grid {
        knots: Vec<f64>,
        values: Vec<f64>,
        #[serde(default = "yes")]
        normalize: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawXi {
    Unit,
    DensityRatio { target: Value },
    Expression { value: Expr },
    Grid { knots: Vec<f64>, values: Vec<f64> },
}

fn build_mixing(v: &Value, path: &str) -> Result<MixingSpec> {
    let comps = match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let p = format!("{path}[{i}]");
                let raw: RawDist = from_value(item, &p)?;
                at(&p, raw.build())
            })
            .collect::<Result<Vec<_>>>()?,
        _ => {
            let raw: RawDist = from_value(v, path)?;
            vec![at(path, raw.build())?]
        }
    };
    at(path, MixingSpec::new(comps))
}

impl RawScenario {
    fn build(self) -> Result<Scenario> {
        let mixing = build_mixing(&self.mixing, "mixing")?;
        let kernel = at(
            "interarrival_kernel",
            KernelSpec::new(
                &self.interarrival_kernel.family,
                self.interarrival_kernel.params.clone(),
            ),
        )?;
        let claims = at("claims", self.claims.build())?;
        let model = at(
            "",
            CmrpModel::new(mixing, kernel, claims, self.premium_rate),
        )?;

        let mut tilt_normalization = None;
        let change = match &self.measure_change {
            Some(raw) => {
                let (mc, norm) = raw.build(&model, "measure_change")?;
                tilt_normalization = norm;
                Some(mc)
            }
            None => None,
        };
        let mut presets = BTreeMap::new();
        for (i, p) in self.presets.iter().enumerate() {
            let path = format!("presets[{i}]");
            let (mc, _) = p
                .measure_change
                .build(&model, &format!("{path}.measure_change"))?;
            if presets.insert(p.name.clone(), mc).is_some() {
                return Err(CmrpError::config(
                    path,
                    format!("duplicate preset name `{}`", p.name),
                ));
            }
        }
        let mixing_pushforward = match &self.mixing_pushforward {
            Some(raw) => Some(MixingPushforward {
                statistic: raw.statistic.clone(),
                target: at("mixing_pushforward.target", raw.target.build())?,
            }),
            None => None,
        };
        Ok(Scenario {
            name: self.name,
            description: self.description,
            model,
            change,
            presets,
            mixing_pushforward,
            tilt_normalization,
        })
    }
}

impl RawChange {
    fn build(&self, model: &CmrpModel, path: &str) -> Result<(MeasureChange, Option<f64>)> {
        let targets = [
            self.rho.is_some(),
            self.target_kernel.is_some(),
            self.esscher.is_some(),
        ];
        if targets.iter().filter(|&&b| b).count() > 1 {
            return Err(CmrpError::config(
                path,
                "give at most one of `rho`, `target_kernel`, `esscher`",
            ));
        }
        let reweight = match &self.xi {
            None | Some(RawXi::Unit) => MixReweight::Unit,
            Some(RawXi::DensityRatio { target }) => MixReweight::DensityRatio {
                target: build_mixing(target, &format!("{path}.xi.target"))?,
            },
            Some(RawXi::Expression { value }) => MixReweight::Expression(value.clone()),
            Some(RawXi::Grid { knots, values }) => at(
                &format!("{path}.xi"),
                MixReweight::grid(knots.clone(), values.clone()),
            )?,
        };
        let mut norm = None;
        let mc = if let Some(r) = self.esscher {
            if self.tilt.is_some() {
                return Err(CmrpError::config(
                    format!("{path}.tilt"),
                    "`esscher` fixes the claim tilt; remove `tilt`",
                ));
            }
            at(
                &format!("{path}.esscher"),
                esscher_change(model, r, reweight),
            )?
        } else {
            let tilt_path = format!("{path}.tilt");
            let tilt = match &self.tilt {
                None | Some(RawTilt::Unit) => ClaimTilt::Unit,
                Some(RawTilt::Esscher { r }) => {
                    at(&tilt_path, crate::model::esscher_tilt(model, *r))?
                }
                Some(RawTilt::Grid {
                    knots,
                    values,
                    normalize,
                }) => {
                    let t = if *normalize {
                        ClaimTilt::grid_normalized(knots.clone(), values.clone(), &model.claims)
                    } else {
                        ClaimTilt::grid(knots.clone(), values.clone())
                    };
                    let t = at(&tilt_path, t)?;
                    if *normalize {
                        norm = Some(t.normalization());
                    }
                    t
                }
            };
            let target = if let Some(rho) = &self.rho {
                TargetKernel::Poisson { rho: rho.clone() }
            } else if let Some(k) = &self.target_kernel {
                TargetKernel::Kernel(at(
                    &format!("{path}.target_kernel"),
                    KernelSpec::new(&k.family, k.params.clone()),
                )?)
            } else {
                TargetKernel::Identity
            };
            MeasureChange {
                tilt,
                reweight,
                target,
            }
        };
        at(path, mc.validate_against(model))?;
        let rep = at(
            &format!("{path}.tilt"),
            validate_tilt(model, &mc.tilt, 100_000, LOAD_TOL),
        )?;
        if !rep.passed {
            return Err(CmrpError::config(
                format!("{path}.tilt"),
                format!("E[f(X)] = {} is not 1 (tolerance {LOAD_TOL})", rep.estimate),
            ));
        }
        let rep = at(
            &format!("{path}.xi"),
            validate_reweight(model, &mc.reweight, LOAD_TOL),
        )?;
        if !rep.passed {
            return Err(CmrpError::config(
                format!("{path}.xi"),
                format!(
                    "E[xi(theta)] = {} is not 1 (tolerance {LOAD_TOL})",
                    rep.estimate
                ),
            ));
        }
        Ok((mc, norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_load_and_validate() {
        for (name, _) in BUILTIN {
            let s = Scenario::builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(format!("{}.json", s.name), *name);
        }
    }

    #[test]
    fn bare_names_resolve() {
        assert_eq!(Scenario::load("esscher_r").unwrap().name, "esscher_r");
        assert_eq!(Scenario::load("esscher_r.json").unwrap().name, "esscher_r");
    }

    #[test]
    fn errors_report_key_path() {
        let text = r#"{"name":"x","mixing":{"family":"dirac","point":1},
            "interarrival_kernel":{"family":"exponential","rate":"theta"},
            "claims":{"family":"exponential","rate":-2},"premium_rate":1}"#;
        match Scenario::from_json(text).unwrap_err() {
            CmrpError::Config { path, .. } => assert_eq!(path, "claims"),
            e => panic!("{e:?}"),
        }
        let text = r#"{"name":"x","mixing":[{"family":"gamma","rate":1,"shape":2},{"family":"gamma","rate":1,"shap":2}],
            "interarrival_kernel":{"family":"exponential","rate":"theta1"},
            "claims":{"family":"exponential","rate":2},"premium_rate":1}"#;
        match Scenario::from_json(text).unwrap_err() {
            CmrpError::Config { path, .. } => assert_eq!(path, "mixing[1]"),
            e => panic!("{e:?}"),
        }
        let text = r#"{"name":"x","mixing":{"family":"dirac","point":1},
            "interarrival_kernel":{"family":"exponential","rate":"theta"},
            "claims":{"family":"exponential","rate":2},"premium_rate":1,
            "measure_change":{"tilt":{"type":"esscher","r":"big"}}}"#;
        match Scenario::from_json(text).unwrap_err() {
            CmrpError::Config { path, .. } => {
                assert!(path.starts_with("measure_change.tilt"), "{path}")
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn invalid_reweight_is_rejected() {
        let text = r#"{"name":"x","mixing":{"family":"gamma","rate":1,"shape":2},
            "interarrival_kernel":{"family":"exponential","rate":"theta"},
            "claims":{"family":"exponential","rate":2},"premium_rate":1,
            "measure_change":{"xi":{"type":"expression","value":"theta"}}}"#;
        match Scenario::from_json(text).unwrap_err() {
            CmrpError::Config { path, message } => {
                assert_eq!(path, "measure_change.xi");
                assert!(message.contains("is not 1"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn duplicate_presets_are_rejected() {
        let text = r#"{"name":"x","mixing":{"family":"dirac","point":1},
            "interarrival_kernel":{"family":"exponential","rate":"theta"},
            "claims":{"family":"exponential","rate":2},"premium_rate":1,
            "presets":[{"name":"a","measure_change":{}},{"name":"a","measure_change":{}}]}"#;
        assert!(matches!(
            Scenario::from_json(text),
            Err(CmrpError::Config { .. })
        ));
    }

    #[test]
    fn grid_tilt_normalization_is_reported() {
        let s = Scenario::builtin("polya_lundberg.json").unwrap();
        let c = s.tilt_normalization.unwrap();
        assert!(c > 0.8 && c < 1.3);
    }
}
