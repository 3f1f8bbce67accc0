//! Scenario configuration: a TOML document of overrides on top of a named preset.

use serde::{Deserialize, Serialize};

use coopmag_core::couplings::{CouplingOptions, JMode};
use coopmag_core::dynamics::{InitialState, SolverSettings, DEFAULT_DENSE_MAX_QUBITS, DEFAULT_TRAJECTORY_MAX_QUBITS};
use coopmag_core::params::{preset, Bias, Preset};
use coopmag_core::specfun::QuadratureSettings;

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// couplings | bands | spectrum | dynamics | correlations | bath-probe
    pub kind: String,
    pub preset: String,
    /// Master seed for disorder sampling and trajectory unraveling.
    pub seed: u64,
    pub bath: BathOverrides,
    pub qubits: QubitOverrides,
    pub environment: EnvironmentOverrides,
    pub sweep: Sweep,
    pub couplings: CouplingsSection,
    pub bands: BandsSection,
    pub spectrum: SpectrumSection,
    pub dynamics: DynamicsSection,
    pub disorder: DisorderSection,
    pub bath_probe: BathProbeSection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: String::new(),
            preset: "yig-nv".into(),
            seed: 0,
            bath: BathOverrides::default(),
            qubits: QubitOverrides::default(),
            environment: EnvironmentOverrides::default(),
            sweep: Sweep::default(),
            couplings: CouplingsSection::default(),
            bands: BandsSection::default(),
            spectrum: SpectrumSection::default(),
            dynamics: DynamicsSection::default(),
            disorder: DisorderSection::default(),
            bath_probe: BathProbeSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// CGS overrides of the preset's film parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_stiffness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface_spin_density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gilbert_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_field_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gyromagnetic_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub film_thickness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_conductivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_relaxation_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_susceptibility: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    /// Spacing in units of λ; takes precedence over `lattice_constant`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_over_lambda: Option<f64>,
    /// Spacing in cm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_field_splitting: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gyromagnetic_ratio: Option<f64>,
    /// Explicit coordinates in units of λ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions_over_lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentOverrides {
    /// Kelvin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// ω_qi − Δ_F in rad/s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    /// Gauss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applied_field: Option<f64>,
}

/// Lists swept by the scenarios; an empty list means the single configured value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub a_over_lambda: Vec<f64>,
    /// Kelvin.
    pub temperature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingsSection {
    /// asymptotic | full, used for the matrices fed to spectra and dynamics.
    pub j_mode: String,
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_points: usize,
    pub quadrature: QuadratureSettings,
}

impl Default for CouplingsSection {
    fn default() -> Self {
        CouplingsSection {
            j_mode: JMode::default().name().into(),
            rho_min: 0.05,
            rho_max: 5.0,
            n_points: 200,
            quadrature: QuadratureSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSection {
    pub methods: Vec<String>,
    pub n_max: usize,
    pub taper: bool,
    pub n_k: usize,
}

impl Default for BandsSection {
    fn default() -> Self {
        BandsSection {
            methods: vec!["truncated-sum".into(), "poisson".into()],
            n_max: 100_000,
            taper: true,
            n_k: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Also sweep a/λ over [from, to] with `points` samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<SweepRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        (0..self.points).map(|k| self.from + (self.to - self.from) * k as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    /// dense | trajectories
    pub solver: String,
    pub initial: InitialState,
    /// End of the time grid in units of 1/Γ₀.
    pub t_max: f64,
    pub n_trajectories: usize,
    pub rtol: f64,
    pub atol: f64,
    pub check_positivity: bool,
    pub dense_max_qubits: usize,
    pub trajectory_max_qubits: usize,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        DynamicsSection {
            solver: "dense".into(),
            initial: InitialState::AllExcited,
            t_max: 5.0,
            n_trajectories: s.n_trajectories,
            rtol: s.rtol,
            atol: s.atol,
            check_positivity: false,
            dense_max_qubits: DEFAULT_DENSE_MAX_QUBITS,
            trajectory_max_qubits: DEFAULT_TRAJECTORY_MAX_QUBITS,
        }
    }
}

impl DynamicsSection {
    pub fn solver_settings(&self, master_seed: u64) -> SolverSettings {
        SolverSettings {
            n_trajectories: self.n_trajectories,
            master_seed,
            rtol: self.rtol,
            atol: self.atol,
            dense_max_qubits: self.dense_max_qubits,
            trajectory_max_qubits: self.trajectory_max_qubits,
            check_positivity: self.check_positivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderSection {
    /// Displacements are uniform on (−aξ/2, aξ/2).
    pub xi: f64,
    pub n_realizations: usize,
}

impl Default for DisorderSection {
    fn default() -> Self {
        DisorderSection { xi: 0.0, n_realizations: 1 }
    }
}

impl DisorderSection {
    pub fn is_active(&self) -> bool {
        self.xi > 0.0 || self.n_realizations > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathProbeSection {
    pub components: Vec<String>,
    /// Frequencies in units of ω_qi.
    pub omega: SweepRange,
    /// Wavenumbers in units of 1/λ.
    pub k_lambda: SweepRange,
}

impl Default for BathProbeSection {
    fn default() -> Self {
        BathProbeSection {
            components: vec!["minus-plus".into(), "plus-minus".into()],
            omega: SweepRange { from: 0.9, to: 1.1, points: 41 },
            k_lambda: SweepRange { from: 0.0, to: 3.0, points: 61 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: "coopmag-out".into() }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Parses a TOML document after applying dotted-path overrides (`a.b = value`).
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self, RunError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        for (path, raw) in overrides {
            set_path(&mut table, path, parse_value(raw))?;
        }
        let config: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn j_mode(&self) -> Result<JMode, RunError> {
        JMode::from_name(&self.couplings.j_mode).map_err(|e| RunError::Config(format!("couplings.j_mode: {e}")))
    }

    pub fn coupling_options(&self, with_jz: bool) -> Result<CouplingOptions, RunError> {
        Ok(CouplingOptions { j_mode: self.j_mode()?, with_jz, quadrature: self.couplings.quadrature })
    }

    /// Field-level checks that do not need the physics layer.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |field: &str, why: &str| Err(RunError::Config(format!("{field}: {why}")));
        if self.kind.is_empty() {
            return bad("kind", "no scenario kind given");
        }
        if let Some(n) = self.qubits.n_qubits {
            if n == 0 {
                return bad("qubits.n_qubits", "must be at least 1");
            }
        }
        if self.environment.detuning.is_some() && self.environment.applied_field.is_some() {
            return bad("environment", "give either detuning or applied_field, not both");
        }
        if self.qubits.positions_over_lambda.is_some() && !self.sweep.a_over_lambda.is_empty() {
            return bad("sweep.a_over_lambda", "cannot sweep the spacing of explicit positions");
        }
        for (field, list) in [("sweep.a_over_lambda", &self.sweep.a_over_lambda)] {
            if list.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return bad(field, "values must be positive");
            }
        }
        if self.sweep.temperature.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return bad("sweep.temperature", "values must be non-negative");
        }
        if !(self.disorder.xi >= 0.0) || !self.disorder.xi.is_finite() {
            return bad("disorder.xi", "must be non-negative");
        }
        if self.disorder.n_realizations == 0 {
            return bad("disorder.n_realizations", "must be at least 1");
        }
        if !(self.dynamics.t_max > 0.0) || !self.dynamics.t_max.is_finite() {
            return bad("dynamics.t_max", "must be positive");
        }
        if self.dynamics.n_trajectories == 0 {
            return bad("dynamics.n_trajectories", "must be at least 1");
        }
        if !(self.couplings.rho_min > 0.0) || !(self.couplings.rho_max > self.couplings.rho_min) {
            return bad("couplings", "need 0 < rho_min < rho_max");
        }
        if self.couplings.n_points < 2 {
            return bad("couplings.n_points", "need at least 2 points");
        }
        if self.bands.n_k == 0 || self.bands.n_max == 0 {
            return bad("bands", "n_k and n_max must be positive");
        }
        for (field, r) in [
            ("spectrum.range", self.spectrum.range.as_ref()),
            ("bath_probe.omega", Some(&self.bath_probe.omega)),
            ("bath_probe.k_lambda", Some(&self.bath_probe.k_lambda)),
        ] {
            if let Some(r) = r {
                if r.points == 0 || !r.from.is_finite() || !r.to.is_finite() {
                    return bad(field, "need finite bounds and at least one point");
                }
            }
        }
        if let Some(r) = &self.spectrum.range {
            if !(r.from > 0.0) || !(r.to > 0.0) {
                return bad("spectrum.range", "spacings must be positive");
            }
        }
        self.j_mode()?;
        self.couplings.quadrature.validate().map_err(|e| RunError::Config(format!("couplings.quadrature: {e}")))?;
        Ok(())
    }

    /// The preset with every override applied. The spacing stays in cm; a/λ
    /// overrides are resolved once λ is known.
    pub fn preset_with_overrides(&self) -> Result<Preset, RunError> {
        let mut p = preset(&self.preset).map_err(|e| RunError::Config(format!("preset: {e}")))?;
        let b = &self.bath;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.bath.spin_stiffness, b.spin_stiffness);
        set(&mut p.bath.surface_spin_density, b.surface_spin_density);
        set(&mut p.bath.gilbert_alpha, b.gilbert_alpha);
        set(&mut p.bath.zero_field_gap, b.zero_field_gap);
        set(&mut p.bath.gyromagnetic_ratio, b.gyromagnetic_ratio);
        set(&mut p.bath.film_thickness, b.film_thickness);
        match (b.spin_conductivity, b.spin_relaxation_time, b.static_susceptibility) {
            (None, None, None) => {}
            (Some(sigma), Some(tau), Some(chi)) => {
                p.bath.longitudinal = Some(coopmag_core::params::LongitudinalTransport {
                    spin_conductivity: sigma,
                    spin_relaxation_time: tau,
                    static_susceptibility: chi,
                })
            }
            _ => {
                return Err(RunError::Config(
                    "bath: spin_conductivity, spin_relaxation_time and static_susceptibility go together".into(),
                ))
            }
        }
        let q = &self.qubits;
        if let Some(n) = q.n_qubits {
            p.qubits.n_qubits = n;
        }
        set(&mut p.qubits.lattice_constant, q.lattice_constant);
        set(&mut p.qubits.standoff, q.standoff);
        set(&mut p.qubits.zero_field_splitting, q.zero_field_splitting);
        set(&mut p.qubits.gyromagnetic_ratio, q.gyromagnetic_ratio);
        let e = &self.environment;
        set(&mut p.environment.temperature, e.temperature);
        if let Some(w) = e.detuning {
            p.environment.bias = Bias::Detuning { angular_frequency: w };
        }
        if let Some(g) = e.applied_field {
            p.environment.bias = Bias::Field { gauss: g };
        }
        Ok(p)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // reuse the TOML grammar for numbers, booleans, arrays and inline tables
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), RunError> {
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| RunError::Config(format!("empty override key '{path}'")))?;
    let mut node = table;
    for key in keys {
        let entry = node.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| RunError::Config(format!("override '{path}': '{key}' is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
