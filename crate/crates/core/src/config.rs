//! TOML run configuration. Every field and source is referenced by a
//! registered name; `validate` resolves them all before anything runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::carnot::{custom_group, euclidean_group, group_plugin, heisenberg_group, CarnotGroup};
use crate::error::{Error, Result};
use crate::estimates::{EstimateSettings, SystemInstance, ID_AVERAGED, ID_ENERGY, ID_INFIMUM, ID_LARGE_RADIUS, ID_POWER_MEAN, ID_PRODUCT, ID_WEAK_FORM};
use crate::fields::{field_by_name, flux_by_name, source_by_name, NamedSpec};
use crate::liouville::{Form, LiouvilleInputs, SystemDescription};
use crate::norm::{factorial_norm, gauge_norm, HomogeneousNorm};
use crate::quadrature::{Method, QuadratureBudget};
use crate::sharpness::SearchSettings;

pub const CHECK_HARNACK: &str = "harnack_scan";
pub const CHECK_DENSITY: &str = "density_scan";
pub const CHECK_LIOUVILLE: &str = "liouville";
pub const CHECK_CLASSIFY: &str = "classify";
pub const CHECK_COUNTEREXAMPLE: &str = "counterexample";

/// Every check name a config may list.
pub const CHECK_NAMES: [&str; 12] = [
    ID_WEAK_FORM,
    ID_ENERGY,
    ID_PRODUCT,
    ID_AVERAGED,
    ID_POWER_MEAN,
    ID_INFIMUM,
    ID_LARGE_RADIUS,
    CHECK_HARNACK,
    CHECK_DENSITY,
    CHECK_LIOUVILLE,
    CHECK_CLASSIFY,
    CHECK_COUNTEREXAMPLE,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Euclidean { dim: usize },
    Heisenberg { n: usize },
    Custom { plugin: String },
}

impl GroupSpec {
    pub fn build(&self) -> Result<CarnotGroup> {
        match self {
            GroupSpec::Euclidean { dim } => euclidean_group(*dim),
            GroupSpec::Heisenberg { n } => heisenberg_group(*n),
            GroupSpec::Custom { plugin } => custom_group(group_plugin(plugin)?),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    #[default]
    Gauge,
    Factorial,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    #[serde(default)]
    pub kind: NormChoice,
}

impl NormSpec {
    pub fn build(&self, g: &CarnotGroup) -> HomogeneousNorm {
        match self.kind {
            NormChoice::Gauge => gauge_norm(g),
            NormChoice::Factorial => factorial_norm(g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub exclusion_radius: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec {
            samples: d_samples(),
            method: Method::MonteCarlo,
            exclusion_radius: 0.0,
        }
    }
}

fn d_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub p: f64,
    pub q: f64,
    pub u: NamedSpec,
    pub v: NamedSpec,
    #[serde(default = "zero_source")]
    pub f: NamedSpec,
    #[serde(default = "zero_source")]
    pub g: NamedSpec,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub inf_u: Option<f64>,
    #[serde(default)]
    pub inf_v: Option<f64>,
    #[serde(default)]
    pub flux_u: Option<NamedSpec>,
    #[serde(default)]
    pub flux_v: Option<NamedSpec>,
}

fn zero_source() -> NamedSpec {
    NamedSpec::new("zero")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackSpec {
    #[serde(default = "d_harnack_radii")]
    pub radii: Vec<f64>,
    /// σ of the u and v scans; default is the midpoint used by the chain.
    #[serde(default)]
    pub sigma_u: Option<f64>,
    #[serde(default)]
    pub sigma_v: Option<f64>,
    #[serde(default = "d_eps")]
    pub density_epsilon: f64,
    #[serde(default)]
    pub samples: Option<usize>,
}

impl Default for HarnackSpec {
    fn default() -> Self {
        HarnackSpec {
            radii: d_harnack_radii(),
            sigma_u: None,
            sigma_v: None,
            density_epsilon: d_eps(),
            samples: None,
        }
    }
}

fn d_harnack_radii() -> Vec<f64> {
    (0..7).map(|k| 2f64.powi(k)).collect()
}

fn d_eps() -> f64 {
    1e-2
}

/// A number kept as written so that "7/3" or 0.1 stay exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Numeral {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Numeral {
    pub fn text(&self) -> String {
        match self {
            Numeral::Int(i) => i.to_string(),
            Numeral::Float(f) => format!("{f:?}"),
            Numeral::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleSpec {
    /// Defaults to the homogeneous dimension of the group.
    #[serde(rename = "Q", default)]
    pub hom_dim: Option<Numeral>,
    #[serde(default)]
    pub p: Option<Numeral>,
    #[serde(default)]
    pub q: Option<Numeral>,
    #[serde(default)]
    pub a: Option<Numeral>,
    #[serde(default)]
    pub b: Option<Numeral>,
    #[serde(default = "d_form")]
    pub form: Form,
    #[serde(default)]
    pub general_operators: bool,
}

impl Default for LiouvilleSpec {
    fn default() -> Self {
        LiouvilleSpec {
            hom_dim: None,
            p: None,
            q: None,
            a: None,
            b: None,
            form: d_form(),
            general_operators: false,
        }
    }
}

fn d_form() -> Form {
    Form::Max
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: d_dir(),
            format: OutputFormat::Json,
        }
    }
}

fn d_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// report.json plus the CSV tables
    #[default]
    Json,
    /// CSV tables only
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub checks: Vec<String>,
    #[serde(default = "d_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "d_jobs")]
    pub jobs: usize,
    pub group: GroupSpec,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default)]
    pub budget: BudgetSpec,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub estimates: EstimateSettings,
    #[serde(default)]
    pub harnack: HarnackSpec,
    #[serde(default)]
    pub liouville: LiouvilleSpec,
    #[serde(default)]
    pub classify: Option<SystemDescription>,
    #[serde(default)]
    pub sharpness: SearchSettings,
    #[serde(default)]
    pub output: OutputSpec,
}

fn d_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn d_jobs() -> usize {
    1
}

const NEEDS_SYSTEM: [&str; 9] = [
    ID_WEAK_FORM,
    ID_ENERGY,
    ID_PRODUCT,
    ID_AVERAGED,
    ID_POWER_MEAN,
    ID_INFIMUM,
    ID_LARGE_RADIUS,
    CHECK_HARNACK,
    CHECK_DENSITY,
];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn wants(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == check)
    }

    pub fn base_budget(&self) -> QuadratureBudget {
        QuadratureBudget::new(self.budget.samples, self.seed)
            .with_method(self.budget.method)
            .with_exclusion(self.budget.exclusion_radius)
    }

    /// Schema-level checks plus resolution of every registered name.
    pub fn validate(&self) -> Result<()> {
        if self.checks.is_empty() {
            return Err(Error::Config("no checks listed".into()));
        }
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.as_str()) {
                return Err(Error::UnknownName {
                    kind: "check",
                    name: c.clone(),
                });
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.budget.samples == 0 {
            return Err(Error::Config("budget.samples must be positive".into()));
        }
        let g = self.group.build()?;
        let norm = self.norm.build(&g);
        if NEEDS_SYSTEM.iter().any(|c| self.wants(c)) {
            self.instance_with(&g, &norm)?;
        }
        if self.wants(CHECK_LIOUVILLE) || self.wants(CHECK_COUNTEREXAMPLE) {
            self.liouville_inputs(&g)?;
        }
        if self.wants(CHECK_CLASSIFY) && self.classify.is_none() {
            return Err(Error::Config("check \"classify\" needs a [classify] table".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Config("the listed checks need a [system] table".into()))
    }

    pub fn instance(&self) -> Result<SystemInstance> {
        let g = self.group.build()?;
        let norm = self.norm.build(&g);
        self.instance_with(&g, &norm)
    }

    fn instance_with(&self, g: &CarnotGroup, norm: &HomogeneousNorm) -> Result<SystemInstance> {
        let s = self.system()?;
        let u = field_by_name(&s.u, g, norm)?;
        let v = field_by_name(&s.v, g, norm)?;
        let flux_u = s.flux_u.as_ref().map(|f| flux_by_name(f, s.p)).transpose()?;
        let flux_v = s.flux_v.as_ref().map(|f| flux_by_name(f, s.q)).transpose()?;
        Ok(SystemInstance::new(g.clone(), norm.clone(), s.p, s.q, u, v)?
            .with_sources(source_by_name(&s.f)?, source_by_name(&s.g)?)
            .with_exponents(s.a, s.b)
            .with_infima(s.inf_u, s.inf_v)
            .with_radii(self.radii.clone())
            .with_budget(self.base_budget())
            .with_operators(flux_u, flux_v))
    }

    /// Condition inputs: explicit [liouville] values, else the system and group.
    pub fn liouville_inputs(&self, g: &CarnotGroup) -> Result<LiouvilleInputs> {
        let l = &self.liouville;
        let sys = self.system.as_ref();
        let pick = |given: &Option<Numeral>, fallback: Option<f64>, name: &str| -> Result<String> {
            match (given, fallback) {
                (Some(n), _) => Ok(n.text()),
                (None, Some(v)) => Ok(format!("{v:?}")),
                (None, None) => Err(Error::Config(format!("liouville check needs {name}"))),
            }
        };
        let inputs = LiouvilleInputs::parse(
            &pick(&l.hom_dim, Some(g.hom_dim() as f64), "Q")?,
            &pick(&l.p, sys.map(|s| s.p), "p")?,
            &pick(&l.q, sys.map(|s| s.q), "q")?,
            &pick(&l.a, sys.and_then(|s| s.a), "a")?,
            &pick(&l.b, sys.and_then(|s| s.b), "b")?,
        )?;
        Ok(inputs.with_general_operators(l.general_operators))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
checks = ["weak_form", "caccioppoli"]

[group]
kind = "euclidean"
dim = 3

[system]
p = 2
q = 2
u = { name = "constant", c = 1.0 }
v = { name = "constant", c = 2.0 }
"#;

    #[test]
    fn minimal_config_parses_and_validates() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.radii, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(c.system.as_ref().unwrap().f.name, "zero");
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn schema_errors() {
        assert!(RunConfig::from_toml(&MINIMAL.replace("seed = 7", "")).is_err());
        assert!(RunConfig::from_toml(&format!("{MINIMAL}\nbogus = 1\n")).is_err());
        let c = RunConfig::from_toml(&MINIMAL.replace("\"caccioppoli\"", "\"nope\"")).unwrap();
        assert!(matches!(c.validate(), Err(Error::UnknownName { .. })));
        let c = RunConfig::from_toml(&MINIMAL.replace("\"constant\", c = 1.0", "\"missing_field\"")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn liouville_inputs_stay_exact() {
        let mut c = RunConfig::from_toml(MINIMAL).unwrap();
        c.liouville.a = Some(Numeral::Text("7/3".into()));
        c.liouville.b = Some(Numeral::Float(0.1));
        let g = c.group.build().unwrap();
        let li = c.liouville_inputs(&g).unwrap();
        assert!(li.a.is_exact() && li.b.is_exact() && li.hom_dim.is_exact());
        assert_eq!(li.hom_dim.to_f64(), 3.0);
    }
}
