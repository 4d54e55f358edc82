//! Experiment configuration: one JSON document, validated and hashed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use wittlab::geometry::field::{FieldExpr, TrigTerm};
use wittlab::geometry::vec3::{M3, P3};
use wittlab::geometry::{MorseModel, SurfaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Resonances,
    Spectrum,
    Converge,
    Correlations,
    Morse,
    Tunneling,
    Fukaya,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::Resonances,
        Pipeline::Spectrum,
        Pipeline::Converge,
        Pipeline::Correlations,
        Pipeline::Morse,
        Pipeline::Tunneling,
        Pipeline::Fukaya,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Resonances => "resonances",
            Pipeline::Spectrum => "spectrum",
            Pipeline::Converge => "converge",
            Pipeline::Correlations => "correlations",
            Pipeline::Morse => "morse",
            Pipeline::Tunneling => "tunneling",
            Pipeline::Fukaya => "fukaya",
        }
    }

    pub fn parse(s: &str) -> Option<Pipeline> {
        Pipeline::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Sphere,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Height function z on the sphere.
    SphereHeight {},
    SphereLinear { b: P3 },
    /// z − bump·x² on the sphere.
    SphereBumped { bump: f64 },
    /// c + b·p + ½ pᵀqp restricted to the sphere.
    Quadratic { c: f64, b: P3, q: M3 },
    /// amp (cos 2π(x − sx) + cos 2π(y − sy)) / 4π² on the torus.
    TorusCosine {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default)]
        shift: [f64; 2],
    },
    /// Σ amp cos(2π(p x + q y) − phase) on the torus.
    TorusTrig { terms: Vec<TrigSpec> },
    TorusSaddleConnection {},
    TorusXOnly {},
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    pub amp: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: Surface,
    pub function: FunctionSpec,
    #[serde(default = "one")]
    pub normalization: f64,
}

impl ModelSpec {
    pub fn field(&self) -> FieldExpr {
        match &self.function {
            FunctionSpec::SphereHeight {} => FieldExpr::sphere_linear([0.0, 0.0, 1.0]),
            FunctionSpec::SphereLinear { b } => FieldExpr::sphere_linear(*b),
            FunctionSpec::SphereBumped { bump } => FieldExpr::sphere_bumped(*bump),
            FunctionSpec::Quadratic { c, b, q } => FieldExpr::Quadratic { c: *c, b: *b, q: *q },
            FunctionSpec::TorusCosine { amp, shift } => FieldExpr::torus_cosine(*amp, *shift),
            FunctionSpec::TorusTrig { terms } => FieldExpr::Trig(
                terms.iter().map(|t| TrigTerm { amp: t.amp, p: t.p, q: t.q, phase: t.phase }).collect(),
            ),
            FunctionSpec::TorusSaddleConnection {} => FieldExpr::torus_saddle_connection(),
            FunctionSpec::TorusXOnly {} => FieldExpr::torus_x_only(),
        }
    }

    pub fn build(&self) -> Result<MorseModel, String> {
        let kind = match self.kind {
            Surface::Sphere => SurfaceKind::UnitSphereEmbedded,
            Surface::Torus => SurfaceKind::FlatTorusUnitSquare,
        };
        MorseModel::new(kind, self.field(), self.normalization).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum Epsilon0Policy {
    /// Half the distance to the first nonzero resonance, per degree.
    HalfGap {},
    Fixed { values: [f64; 3] },
}

impl Default for Epsilon0Policy {
    fn default() -> Self {
        Epsilon0Policy::HalfGap {}
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Per-cell tolerance of the adaptive correlation quadrature.
    pub quadrature: f64,
    pub ode: f64,
    /// Eigenpair residual relative to the operator norm.
    pub eigen: f64,
    /// Relative merge tolerance for resonance values.
    pub merge: f64,
    /// Distance below which a separatrix counts as hitting another saddle.
    pub transversality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quadrature: 1e-9, ode: 1e-10, eigen: 1e-11, merge: 1e-9, transversality: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    /// Eigenvalues reported per degree.
    pub count: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { count: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSpec {
    pub degree: usize,
    pub count: usize,
    /// (hbar, mesh level) pairs, hbar decreasing.
    pub schedule: Vec<(f64, u32)>,
}

impl Default for ConvergeSpec {
    fn default() -> Self {
        ConvergeSpec { degree: 0, count: 2, schedule: vec![(0.4, 2), (0.3, 3), (0.2, 3), (0.15, 4), (0.1, 4)] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    One,
    CosX,
    CosY,
    SinX,
    X,
    Y,
    Z,
}

impl Observable {
    pub fn eval(self, p: P3) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::CosX => (2.0 * PI * p[0]).cos(),
            Observable::CosY => (2.0 * PI * p[1]).cos(),
            Observable::SinX => (2.0 * PI * p[0]).sin(),
            Observable::X => p[0],
            Observable::Y => p[1],
            Observable::Z => p[2],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationSpec {
    /// ψ1 is transported by the flow, ψ2 is the weight.
    pub observables: [Observable; 2],
    pub t_max: f64,
    pub dt: f64,
    pub max_depth: u32,
    /// Defaults to the first configured mesh level.
    pub mesh_level: Option<u32>,
}

impl Default for CorrelationSpec {
    fn default() -> Self {
        CorrelationSpec { observables: [Observable::CosX, Observable::One], t_max: 8.0, dt: 0.1, max_depth: 12, mesh_level: None }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorseSpec {
    /// Draw orientations from this seed instead of the canonical choice.
    pub orientation_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriplePreset {
    Torus,
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FukayaSpec {
    pub triple: TriplePreset,
    /// Critical point ids, one per difference function. Defaults to a
    /// preset-specific triple with nonzero count.
    pub ids: Option<[usize; 3]>,
    /// Defaults to the last configured mesh level.
    pub mesh_level: Option<u32>,
    /// Levels at which the discrete cup count is compared with the
    /// geometric count.
    pub cup_levels: Vec<u32>,
}

impl Default for FukayaSpec {
    fn default() -> Self {
        FukayaSpec { triple: TriplePreset::Torus, ids: None, mesh_level: None, cup_levels: vec![2, 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSpec {
    pub mesh_off: bool,
    pub matrices_coo: bool,
}

impl Default for ExportSpec {
    fn default() -> Self {
        ExportSpec { mesh_off: true, matrices_coo: false }
    }
}

fn default_levels() -> Vec<u32> {
    vec![3]
}

fn default_hbar() -> Vec<f64> {
    vec![0.3, 0.2, 0.15]
}

fn default_cutoff() -> f64 {
    5.0
}

fn default_density() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_levels")]
    pub mesh_levels: Vec<u32>,
    #[serde(default = "default_hbar")]
    pub hbar_grid: Vec<f64>,
    #[serde(default = "default_cutoff")]
    pub lambda_cutoff: f64,
    #[serde(default)]
    pub epsilon0_policy: Epsilon0Policy,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    /// Seeds per axis for the critical point search.
    #[serde(default = "default_density")]
    pub seed_density: usize,
    pub pipelines: Vec<Pipeline>,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub converge: ConvergeSpec,
    #[serde(default)]
    pub correlation: CorrelationSpec,
    #[serde(default)]
    pub morse: MorseSpec,
    #[serde(default)]
    pub fukaya: FukayaSpec,
    #[serde(default)]
    pub export: ExportSpec,
}

fn positive(name: &str, x: f64) -> Result<(), String> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {x}"))
    }
}

fn strictly_decreasing(name: &str, xs: &[f64]) -> Result<(), String> {
    for &h in xs {
        positive(name, h)?;
    }
    if let Some(w) = xs.windows(2).find(|w| w[1] >= w[0]) {
        return Err(format!("{name} must be strictly decreasing: {} is followed by {}", w[0], w[1]));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.model.build()?;
        strictly_decreasing("hbar_grid", &self.hbar_grid)?;
        positive("lambda_cutoff", self.lambda_cutoff)?;
        let t = &self.tolerances;
        for (n, x) in [
            ("tolerances.quadrature", t.quadrature),
            ("tolerances.ode", t.ode),
            ("tolerances.eigen", t.eigen),
            ("tolerances.merge", t.merge),
            ("tolerances.transversality", t.transversality),
        ] {
            positive(n, x)?;
        }
        if let Epsilon0Policy::Fixed { values } = &self.epsilon0_policy {
            for x in values {
                positive("epsilon0_policy.values", *x)?;
            }
        }
        if self.mesh_levels.is_empty() {
            return Err("mesh_levels must not be empty".into());
        }
        if let Some(l) = self.mesh_levels.iter().find(|&&l| l > 6) {
            return Err(format!("mesh level {l} exceeds the supported maximum 6"));
        }
        if self.seed_density < 4 {
            return Err("seed_density must be at least 4".into());
        }
        if self.spectrum.count == 0 || self.converge.count == 0 {
            return Err("spectrum.count and converge.count must be positive".into());
        }
        if self.converge.degree > 2 {
            return Err("converge.degree must be 0, 1 or 2".into());
        }
        let hs: Vec<f64> = self.converge.schedule.iter().map(|s| s.0).collect();
        strictly_decreasing("converge.schedule hbar", &hs)?;
        let c = &self.correlation;
        positive("correlation.t_max", c.t_max)?;
        positive("correlation.dt", c.dt)?;
        if c.dt > c.t_max {
            return Err("correlation.dt exceeds correlation.t_max".into());
        }
        if self.pipelines.is_empty() {
            return Err("pipelines must not be empty".into());
        }
        let mut p = self.pipelines.clone();
        p.sort();
        if p.windows(2).any(|w| w[0] == w[1]) {
            return Err("pipelines must not repeat".into());
        }
        Ok(())
    }

    /// sha256 of the canonical serialization, with the pipeline selection
    /// left out so that partial runs of one experiment share a hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().expect("object").remove("pipelines");
        let bytes = serde_json::to_vec(&v).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn wants(&self, p: Pipeline) -> bool {
        self.pipelines.contains(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"model": {"kind": "sphere", "function": {"name": "sphere_height"}}, "pipelines": ["resonances"]}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MIN).unwrap();
        assert_eq!(c.mesh_levels, vec![3]);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.converge.schedule.len(), 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MIN.replace("\"pipelines\"", "\"colour\": 1, \"pipelines\"");
        assert!(ExperimentConfig::from_json(&bad).unwrap_err().contains("colour"));
        let bad = MIN.replace("\"sphere_height\"", "\"sphere_height\", \"scale\": 2");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = MIN.replace("\"pipelines\"", "\"tolerances\": {\"odee\": 1e-8}, \"pipelines\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn hbar_grid_must_decrease() {
        let bad = MIN.replace("\"pipelines\"", "\"hbar_grid\": [0.2, 0.3], \"pipelines\"");
        assert!(ExperimentConfig::from_json(&bad).unwrap_err().contains("decreasing"));
        let bad = MIN.replace("\"pipelines\"", "\"hbar_grid\": [0.2, 0.2], \"pipelines\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let bad = MIN.replace("\"pipelines\"", "\"tolerances\": {\"eigen\": 0}, \"pipelines\"");
        assert!(ExperimentConfig::from_json(&bad).unwrap_err().contains("eigen"));
    }

    #[test]
    fn surface_and_function_must_match() {
        let bad = MIN.replace("sphere_height", "torus_x_only");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn hash_ignores_formatting_and_pipeline_selection() {
        let a = ExperimentConfig::from_json(MIN).unwrap();
        let spaced = MIN.replace(": ", ":   ");
        let b = ExperimentConfig::from_json(&spaced).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(&MIN.replace("[\"resonances\"]", "[\"spectrum\"]")).unwrap();
        assert_eq!(a.hash(), c.hash());
        let d = ExperimentConfig::from_json(&MIN.replace("\"pipelines\"", "\"seed\": 4, \"pipelines\"")).unwrap();
        assert_ne!(a.hash(), d.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
