//! Run configuration: a sectioned TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use spinkin::conservation::{StructureKind, PATTERN_TOL};
use spinkin::equilibrium::SpinShifts;
use spinkin::model::{build_vop, RateConvention};
use spinkin::scalar::Cplx;
use spinkin::{
    EnergyGrid, EquilibriumParams, GaugeRotation, InteractionSet, Masses, Model, Preset, SpinBlock, StateSpec,
    StepConfig,
};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub gauge: GaugeSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub check: CheckSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A 2×2 matrix as four real entries or four `(re, im)` pairs, row-major.
pub type MatrixEntries = Vec<f64>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionEntries {
    pub ab: MatrixEntries,
    pub cd: MatrixEntries,
    pub ad: MatrixEntries,
    pub cb: MatrixEntries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_masses")]
    pub masses: [f64; 4],
    #[serde(default = "default_rates")]
    pub rates: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions: Option<InteractionEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions_file: Option<PathBuf>,
}

fn default_masses() -> [f64; 4] {
    Masses::default().0
}

fn default_rates() -> String {
    RateConvention::default().name().into()
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            preset: None,
            masses: default_masses(),
            rates: default_rates(),
            interactions: None,
            interactions_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub h: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = EnergyGrid::default();
        GridSection { n: g.n(), h: g.h() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub include_cons: bool,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let c = StepConfig::default();
        IntegratorSection {
            dt: c.dt,
            t_end: c.t_end,
            stride: c.stride,
            include_cons: c.include_cons,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// `benchmark`, `fermi-dirac`, `uniform` or `custom`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<[f64; 3]>,
    /// Common spin shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Spin shifts of the a/c and b/d species.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_shifts: Option<[f64; 2]>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: "benchmark".into(),
            level: None,
            path: None,
            beta: None,
            nu: None,
            shift: None,
            paired_shifts: None,
        }
    }
}

/// Per-species unitaries for classification and conserved moments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    /// Use the gauge that belongs to the model preset.
    #[serde(default)]
    pub preset: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, flatten)]
    pub matrices: GaugeMatrices,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeMatrices {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<MatrixEntries>,
}

impl GaugeMatrices {
    fn is_empty(&self) -> bool {
        self.a.is_none() && self.b.is_none() && self.c.is_none() && self.d.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Refinement factor of the fitting grid for analytic initial states.
    pub refine: usize,
    /// Force a structure class instead of the classified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    /// Classifier tolerance.
    pub pattern_tol: f64,
    /// Largest relative mismatch of a conserved moment accepted after a fit.
    pub moment_tol: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            refine: 4,
            class: None,
            pattern_tol: PATTERN_TOL,
            moment_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write a snapshot every this many samples; 0 writes none.
    pub snapshot_every: usize,
    pub record_sigma: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            snapshot_every: 10,
            record_sigma: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub n: usize,
    pub h: f64,
    pub samples: usize,
    pub seed: u64,
    /// `midpoint` (the solver's weights) or `trapezoid`.
    pub weights: String,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            n: 6,
            h: 0.5,
            samples: 100,
            seed: 1,
            weights: "midpoint".into(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn matrix(name: &str, e: &[f64]) -> Result<SpinBlock, CliError> {
    let z: Vec<Cplx<f64>> = match e.len() {
        4 => e.iter().map(|&x| Cplx::new(x, 0.0)).collect(),
        8 => e.chunks(2).map(|p| Cplx::new(p[0], p[1])).collect(),
        k => return Err(invalid(format!("{name}: expected 4 or 8 numbers, got {k}"))),
    };
    if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(invalid(format!("{name}: non-finite entry")));
    }
    Ok(SpinBlock::new(z[0], z[1], z[2], z[3]))
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn preset(&self) -> Result<Option<Preset>, CliError> {
        self.model
            .preset
            .as_deref()
            .map(|name| Preset::from_name(name).ok_or_else(|| invalid(format!("unknown preset {name:?}"))))
            .transpose()
    }

    pub fn interactions(&self) -> Result<InteractionSet, CliError> {
        let m = &self.model;
        let explicit = match (&m.interactions, &m.interactions_file) {
            (Some(_), Some(_)) => return Err(invalid("give interactions inline or as a file, not both")),
            (Some(e), None) => Some(e.clone()),
            (None, Some(p)) => Some(read_toml::<InteractionEntries>(&self.resolve(p))?),
            (None, None) => None,
        };
        match (explicit, self.preset()?) {
            (Some(_), Some(_)) => Err(invalid("give a preset or explicit interactions, not both")),
            (Some(e), None) => Ok(InteractionSet {
                ab: matrix("ab", &e.ab)?,
                cd: matrix("cd", &e.cd)?,
                ad: matrix("ad", &e.ad)?,
                cb: matrix("cb", &e.cb)?,
            }),
            (None, Some(p)) => Ok(p.interactions()),
            (None, None) => Err(invalid("model needs a preset or interaction matrices")),
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let masses = Masses::new(self.model.masses)?;
        let rates = RateConvention::from_name(&self.model.rates)
            .ok_or_else(|| invalid(format!("unknown rate convention {:?}", self.model.rates)))?;
        let v = self.interactions()?;
        build_vop(&v)?;
        Ok(Model::new(masses, v)?.with_rates(rates))
    }

    pub fn grid(&self) -> Result<EnergyGrid, CliError> {
        Ok(EnergyGrid::new(self.grid.n, self.grid.h)?)
    }

    pub fn step_config(&self) -> Result<StepConfig, CliError> {
        let i = &self.integrator;
        let c = StepConfig {
            dt: i.dt,
            t_end: i.t_end,
            stride: i.stride,
            include_cons: i.include_cons,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn state_spec(&self) -> Result<StateSpec, CliError> {
        let s = &self.initial;
        match s.kind.as_str() {
            "benchmark" => Ok(StateSpec::Benchmark),
            "uniform" => {
                let level = s.level.ok_or_else(|| invalid("uniform initial state needs `level`"))?;
                if !(0.0..=1.0).contains(&level) {
                    return Err(invalid(format!("level {level} outside [0, 1]")));
                }
                Ok(StateSpec::UniformFill(level))
            }
            "custom" => {
                let p = s.path.as_ref().ok_or_else(|| invalid("custom initial state needs `path`"))?;
                Ok(StateSpec::Custom(self.resolve(p)))
            }
            "fermi-dirac" => {
                let beta = s.beta.ok_or_else(|| invalid("fermi-dirac initial state needs `beta`"))?;
                let mut p = EquilibriumParams::simple(beta, s.nu.unwrap_or([0.0; 3]));
                p.spin_shifts = match (s.shift, s.paired_shifts) {
                    (Some(_), Some(_)) => return Err(invalid("give `shift` or `paired_shifts`, not both")),
                    (Some(c), None) => SpinShifts::Common(c),
                    (None, Some([ac, bd])) => SpinShifts::Paired { ac, bd },
                    (None, None) => SpinShifts::None,
                };
                Ok(StateSpec::FermiDirac(p))
            }
            k => Err(invalid(format!("unknown initial state kind {k:?}"))),
        }
    }

    /// The configured gauge, if any.
    pub fn gauge(&self) -> Result<Option<GaugeRotation>, CliError> {
        let g = &self.gauge;
        let inline = !g.matrices.is_empty();
        if [g.preset, g.file.is_some(), inline].iter().filter(|&&b| b).count() > 1 {
            return Err(invalid("gauge: give one of `preset`, `file` or inline matrices"));
        }
        if g.preset {
            let p = self.preset()?.ok_or_else(|| invalid("gauge.preset needs a model preset"))?;
            return Ok(Some(p.gauge()));
        }
        let m = match &g.file {
            Some(p) => read_toml::<GaugeMatrices>(&self.resolve(p))?,
            None if inline => g.matrices.clone(),
            None => return Ok(None),
        };
        let one = |name: &str, e: &Option<MatrixEntries>| match e {
            Some(e) => matrix(name, e),
            None => Ok(SpinBlock::identity()),
        };
        let u = [one("a", &m.a)?, one("b", &m.b)?, one("c", &m.c)?, one("d", &m.d)?];
        Ok(Some(GaugeRotation::new(u)?))
    }

    pub fn forced_class(&self) -> Result<Option<StructureKind>, CliError> {
        self.fit
            .class
            .as_deref()
            .map(|name| StructureKind::from_name(name).ok_or_else(|| invalid(format!("unknown class {name:?}"))))
            .transpose()
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => self.resolve(&self.output.dir),
        }
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model()?;
        self.grid()?;
        self.step_config()?;
        self.state_spec()?;
        self.gauge()?;
        self.forced_class()?;
        if self.fit.refine == 0 {
            return Err(invalid("fit.refine must be at least 1"));
        }
        if self.check.n < 2 || !(self.check.h > 0.0) {
            return Err(invalid("check grid needs n ≥ 2 and h > 0"));
        }
        if !["midpoint", "trapezoid"].contains(&self.check.weights.as_str()) {
            return Err(invalid(format!("unknown check weights {:?}", self.check.weights)));
        }
        Ok(())
    }
}
