//! Run configuration: TOML with `[circuit]`, `[numerics]`, `[sweep]` and `[output]` tables.

use crate::error::CliError;
use jjline::analysis::{default_bias_grid, SweepPolicy};
use jjline::circuit::modes_from_spacing;
use jjline::{Boundary, CircuitSpec, Cutoffs, SolverOptions};
use serde::{Deserialize, Serialize};

/// Rounding error of `N_m` from `delta` above which a warning is emitted.
pub const SPACING_WARN_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Open,
    Short,
}

impl From<Termination> for Boundary {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Open => Boundary::OpenEnd,
            Termination::Short => Boundary::ShortEnd,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitBlock {
    pub boundary: Termination,
    pub e_j: f64,
    pub e_c: f64,
    /// `Z / R_q`.
    pub z_ratio: f64,
    pub omega_c: f64,
    pub n_modes: Option<usize>,
    /// Mode spacing; converted to `n_modes` during validation.
    pub delta: Option<f64>,
    pub bias: f64,
}

impl Default for CircuitBlock {
    fn default() -> Self {
        CircuitBlock {
            boundary: Termination::Open,
            e_j: 1.0,
            e_c: 1.0,
            z_ratio: 1.0,
            omega_c: 4.0,
            n_modes: None,
            delta: None,
            bias: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsBlock {
    /// Photon energy cut in units of the mode spacing.
    pub cutoff_spacings: f64,
    /// Absolute photon energy cut; overrides `cutoff_spacings`.
    pub energy_cutoff: Option<f64>,
    pub charge_cutoff: usize,
    pub flux_levels: usize,
    pub oscillator_cutoff: usize,
    pub max_configs: usize,
    pub n_bands: usize,
    /// Bias points on `[0, 1/2]`; the grid is mirrored onto `[-1/2, 1/2]`.
    pub bias_points: usize,
    pub dense_threshold: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Lorentzian half-width of the spectral function.
    pub gamma: f64,
    /// Eigenstates entering the spectral function.
    pub n_states: usize,
    pub skip_failed: bool,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        let c = Cutoffs::with_energy(0.0);
        let s = SolverOptions::default();
        NumericsBlock {
            cutoff_spacings: jjline::polaron::DEFAULT_CUTOFF_SPACINGS,
            energy_cutoff: None,
            charge_cutoff: c.charge_cutoff,
            flux_levels: c.flux_levels,
            oscillator_cutoff: c.oscillator_cutoff,
            max_configs: c.max_configs,
            n_bands: 4,
            bias_points: 11,
            dense_threshold: s.dense_threshold,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            gamma: jjline::analysis::DEFAULT_LINEWIDTH,
            n_states: 24,
            skip_failed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl OmegaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points).map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepBlock {
    pub e_j: Vec<f64>,
    pub z_ratio: Vec<f64>,
    pub n_modes: Vec<usize>,
    /// Explicit bias grid; replaces `numerics.bias_points`.
    pub bias: Vec<f64>,
    pub omega: Option<OmegaGrid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputBlock {
    pub dir: String,
    pub format: Format,
    /// Divide bands by the critical-impedance reference level.
    pub rescale: bool,
    /// Scale each spectral column to unit maximum.
    pub normalize: bool,
    pub audit: bool,
    pub cache: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into(), format: Format::Csv, rescale: true, normalize: false, audit: false, cache: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub circuit: CircuitBlock,
    pub numerics: NumericsBlock,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
}

/// A parsed config plus the non-fatal findings made while reading it.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a config. `strict` turns unknown keys into errors.
pub fn parse_config(text: &str, strict: bool) -> Result<Parsed, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| parse_error(text, e))?;
    let mut unknown = Vec::new();
    let mut config: RunConfig =
        serde_ignored::deserialize(de, |path| unknown.push(path.to_string())).map_err(|e| parse_error(text, e))?;
    let mut warnings = Vec::new();
    if !unknown.is_empty() {
        if strict {
            return Err(CliError::UnknownKeys(unknown));
        }
        warnings.extend(unknown.iter().map(|k| format!("ignored unknown key `{k}`")));
    }
    warnings.extend(config.reconcile()?);
    config.validate()?;
    Ok(Parsed { config, warnings })
}

fn parse_error(text: &str, e: toml::de::Error) -> CliError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            (Some(line), Some(column))
        }
        None => (None, None),
    };
    CliError::Parse { line, column, message: e.message().to_string() }
}

fn range_error(field: &str, allowed: &str, got: impl std::fmt::Display) -> CliError {
    CliError::Validation { field: field.to_string(), allowed: allowed.to_string(), got: got.to_string() }
}

fn check_positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(range_error(field, "finite, > 0", v))
    }
}

fn check_count(field: &str, v: usize, lo: usize, hi: usize) -> Result<(), CliError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(range_error(field, &format!("integer in [{lo}, {hi}]"), v))
    }
}

fn check_e_j(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(range_error(field, "finite, >= 0", v))
    }
}

impl RunConfig {
    /// Resolves `delta` into `n_modes`. Returns the warnings raised.
    fn reconcile(&mut self) -> Result<Vec<String>, CliError> {
        let c = &mut self.circuit;
        let mut warnings = Vec::new();
        match (c.n_modes, c.delta) {
            (Some(_), Some(_)) => {
                return Err(range_error("circuit.delta", "only one of `n_modes` and `delta`", "both given"));
            }
            (None, Some(delta)) => {
                check_positive("circuit.omega_c", c.omega_c)?;
                check_positive("circuit.delta", delta)?;
                let (n, err) =
                    modes_from_spacing(c.omega_c, delta).map_err(|e| range_error("circuit.delta", "finite, > 0", e))?;
                if err > SPACING_WARN_THRESHOLD {
                    let exact = std::f64::consts::PI * c.omega_c / (2.0 * delta);
                    warnings.push(format!(
                        "delta = {delta} gives n_modes = {exact:.2}; rounded to {n} (relative error {:.1}%)",
                        100.0 * err
                    ));
                }
                c.n_modes = Some(n);
                c.delta = None;
            }
            (None, None) => c.n_modes = Some(10),
            (Some(_), None) => {}
        }
        Ok(warnings)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.circuit;
        check_e_j("circuit.e_j", c.e_j)?;
        check_positive("circuit.e_c", c.e_c)?;
        check_positive("circuit.z_ratio", c.z_ratio)?;
        check_positive("circuit.omega_c", c.omega_c)?;
        if c.delta.is_some() {
            return Err(range_error("circuit.delta", "resolved into n_modes", "unresolved"));
        }
        check_count("circuit.n_modes", self.n_modes(), 1, 64)?;
        if !c.bias.is_finite() {
            return Err(range_error("circuit.bias", "finite", c.bias));
        }
        let n = &self.numerics;
        check_positive("numerics.cutoff_spacings", n.cutoff_spacings)?;
        if let Some(e) = n.energy_cutoff {
            check_positive("numerics.energy_cutoff", e)?;
        }
        check_count("numerics.charge_cutoff", n.charge_cutoff, 1, 256)?;
        check_count("numerics.flux_levels", n.flux_levels, 1, 512)?;
        check_count("numerics.oscillator_cutoff", n.oscillator_cutoff, 8, 1536)?;
        check_count("numerics.max_configs", n.max_configs, 1, 50_000_000)?;
        check_count("numerics.n_bands", n.n_bands, 1, 64)?;
        check_count("numerics.bias_points", n.bias_points, 2, 10_001)?;
        check_count("numerics.dense_threshold", n.dense_threshold, 1, 20_000)?;
        if !(n.tolerance > 0.0 && n.tolerance <= 1e-3) {
            return Err(range_error("numerics.tolerance", "in (0, 1e-3]", n.tolerance));
        }
        check_count("numerics.max_iterations", n.max_iterations, 1, 1_000_000)?;
        check_positive("numerics.gamma", n.gamma)?;
        check_count("numerics.n_states", n.n_states, 1, 4096)?;
        let s = &self.sweep;
        for &e in &s.e_j {
            check_e_j("sweep.e_j", e)?;
        }
        for &z in &s.z_ratio {
            check_positive("sweep.z_ratio", z)?;
        }
        for &m in &s.n_modes {
            check_count("sweep.n_modes", m, 1, 64)?;
        }
        for &b in &s.bias {
            if !(b.abs() <= 0.5) {
                return Err(range_error("sweep.bias", "in [-0.5, 0.5]", b));
            }
        }
        if let Some(w) = &s.omega {
            if !(w.min.is_finite() && w.max.is_finite() && w.min >= 0.0 && w.max > w.min) {
                return Err(range_error("sweep.omega", "0 <= min < max, finite", format!("[{}, {}]", w.min, w.max)));
            }
            check_count("sweep.omega.points", w.points, 1, 1_000_000)?;
        }
        if self.output.dir.is_empty() {
            return Err(range_error("output.dir", "non-empty path", "\"\""));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.circuit.n_modes.unwrap_or(10)
    }

    /// Circuit at the configured bias.
    pub fn spec(&self) -> Result<CircuitSpec, CliError> {
        let c = &self.circuit;
        CircuitSpec::new(c.e_j, c.e_c, c.z_ratio, c.omega_c, self.n_modes(), c.boundary.into(), c.bias)
            .map_err(CliError::from)
    }

    pub fn cutoffs_for(&self, spec: &CircuitSpec) -> Cutoffs {
        let n = &self.numerics;
        Cutoffs {
            energy_cutoff: n.energy_cutoff.unwrap_or(n.cutoff_spacings * spec.spacing()),
            charge_cutoff: n.charge_cutoff,
            flux_levels: n.flux_levels,
            oscillator_cutoff: n.oscillator_cutoff,
            max_configs: n.max_configs,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            dense_threshold: self.numerics.dense_threshold,
            tolerance: self.numerics.tolerance,
            max_iterations: self.numerics.max_iterations,
            ..SolverOptions::default()
        }
    }

    pub fn policy(&self) -> SweepPolicy {
        if self.numerics.skip_failed {
            SweepPolicy::SkipAndMark
        } else {
            SweepPolicy::FailFast
        }
    }

    pub fn bias_grid(&self) -> Vec<f64> {
        if self.sweep.bias.is_empty() {
            default_bias_grid(self.numerics.bias_points)
        } else {
            self.sweep.bias.clone()
        }
    }

    /// Spectral frequencies; defaults to `[0, ω_c]` in 401 points.
    pub fn omega_grid(&self) -> Vec<f64> {
        self.sweep.omega.clone().unwrap_or(OmegaGrid { min: 0.0, max: self.circuit.omega_c, points: 401 }).values()
    }

    /// Josephson energies for multi-point commands, falling back to the circuit value.
    pub fn e_j_values(&self) -> Vec<f64> {
        if self.sweep.e_j.is_empty() {
            vec![self.circuit.e_j]
        } else {
            self.sweep.e_j.clone()
        }
    }

    pub fn z_values(&self) -> Vec<f64> {
        if self.sweep.z_ratio.is_empty() {
            vec![self.circuit.z_ratio]
        } else {
            self.sweep.z_ratio.clone()
        }
    }

    pub fn n_modes_values(&self) -> Vec<usize> {
        if self.sweep.n_modes.is_empty() {
            vec![self.n_modes()]
        } else {
            self.sweep.n_modes.clone()
        }
    }

    /// Canonical TOML text: all defaults explicit, `delta` resolved.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The part of the config that determines payloads; output location,
    /// format, audit and caching are excluded.
    pub fn payload_subset(&self) -> String {
        #[derive(Serialize)]
        struct Subset<'a> {
            circuit: &'a CircuitBlock,
            numerics: &'a NumericsBlock,
            sweep: &'a SweepBlock,
            rescale: bool,
            normalize: bool,
        }
        toml::to_string(&Subset {
            circuit: &self.circuit,
            numerics: &self.numerics,
            sweep: &self.sweep,
            rescale: self.output.rescale,
            normalize: self.output.normalize,
        })
        .expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let p = parse_config("[circuit]\ne_j = 0.5\n", true).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.config.circuit.e_j, 0.5);
        assert_eq!(p.config.n_modes(), 10);
        assert!(!p.config.output.audit);
        assert_eq!(p.config.numerics, NumericsBlock::default());
    }

    #[test]
    fn delta_is_rounded_to_a_mode_count() {
        let p = parse_config("[circuit]\nomega_c = 4.0\ndelta = 0.66\n", true).unwrap();
        assert_eq!(p.config.circuit.n_modes, Some(10));
        assert_eq!(p.config.circuit.delta, None);
        assert_eq!(p.warnings.len(), 1);
        assert!(p.warnings[0].contains("9.52"), "{}", p.warnings[0]);
    }

    #[test]
    fn commensurate_delta_is_silent() {
        let delta = std::f64::consts::PI * 4.0 / 20.0;
        let p = parse_config(&format!("[circuit]\ndelta = {delta}\n"), true).unwrap();
        assert_eq!(p.config.n_modes(), 10);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn delta_and_modes_conflict() {
        let e = parse_config("[circuit]\nn_modes = 4\ndelta = 0.5\n", true).unwrap_err();
        assert!(matches!(e, CliError::Validation { ref field, .. } if field == "circuit.delta"));
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = "[circuit]\ne_jj = 1.0\n[extra]\nx = 1\n";
        match parse_config(text, true).unwrap_err() {
            CliError::UnknownKeys(keys) => assert_eq!(keys, vec!["circuit.e_jj".to_string(), "extra".to_string()]),
            e => panic!("{e:?}"),
        }
        let p = parse_config(text, false).unwrap();
        assert_eq!(p.warnings.len(), 2);
    }

    #[test]
    fn parse_error_has_position() {
        match parse_config("[circuit]\ne_j = = 1\n", true).unwrap_err() {
            CliError::Parse { line, column, .. } => {
                assert_eq!(line, Some(2));
                assert!(column.is_some());
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn validation_names_field_and_range() {
        match parse_config("[numerics]\nn_bands = 0\n", true).unwrap_err() {
            CliError::Validation { field, allowed, got } => {
                assert_eq!(field, "numerics.n_bands");
                assert!(allowed.contains("[1, 64]"));
                assert_eq!(got, "0");
            }
            e => panic!("{e:?}"),
        }
        assert!(parse_config("[circuit]\nz_ratio = -1.0\n", true).is_err());
        assert!(parse_config("[sweep]\nbias = [0.7]\n", true).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let text = "[sweep]\ne_j = [0.25, 1.0]\nomega = { min = 0.0, max = 3.0, points = 7 }\n[circuit]\ndelta = 0.66\nboundary = \"short\"\n";
        let a = parse_config(text, true).unwrap().config;
        let canon = a.to_canonical();
        let b = parse_config(&canon, true).unwrap();
        assert_eq!(a, b.config);
        assert!(b.warnings.is_empty());
        assert_eq!(canon, b.config.to_canonical());
    }

    #[test]
    fn cutoffs_follow_spacing() {
        let cfg = parse_config("[circuit]\nn_modes = 5\nomega_c = 4.0\n", true).unwrap().config;
        let spec = cfg.spec().unwrap();
        assert!((cfg.cutoffs_for(&spec).energy_cutoff - 13.0 * spec.spacing()).abs() < 1e-12);
    }
}
