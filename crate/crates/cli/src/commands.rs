//! The computations behind each subcommand.

use crate::cache::Cache;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::record::{
    content_key, record_key, AuditEntry, DualityReport, FitReport, HeatmapCell, HeatmapReport, ModesTable, Payload,
    Provenance, ResultRecord, SCHEMA_VERSION,
};
use jjline::analysis::{band_sweep, extract_duality, fit_mobility, rescale_bands, spectral_function, BandStructure, MobilityFit};
use jjline::circuit::{charge_gauge_bath, line_normal_modes};
use jjline::polaron::spectrum;
use jjline::{Boundary, CircuitSpec, Cutoffs};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Line normal modes and the charge-gauge bath.
    Modes,
    /// Band structure over the bias zone.
    Bands,
    /// Mobility fit of the rescaled bands.
    Fit,
    /// Charge and dual flux mobilities, the duality map and the self-dual point.
    Duality,
    /// Photonic spectral function at zero bias.
    Spectroscopy,
    /// Mobility over a (Z, E_J) grid.
    Heatmap,
    /// Built-in oracle and invariant checks.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Bands => "bands",
            Command::Fit => "fit",
            Command::Duality => "duality",
            Command::Spectroscopy => "spectroscopy",
            Command::Heatmap => "heatmap",
            Command::Verify => "verify",
        }
    }
}

pub struct Context {
    pub cache: Cache,
    pub audit: bool,
}

/// One output unit: a record and the file stem it is written under.
#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub stem: String,
    pub record: ResultRecord,
}

pub fn run(command: Command, cfg: &RunConfig, warnings: &[String], ctx: &Context) -> Result<Vec<Product>, CliError> {
    match command {
        Command::Bands | Command::Fit => {
            let sizes = cfg.n_modes_values();
            let many = sizes.len() > 1;
            sizes
                .into_iter()
                .map(|m| {
                    let mut c = cfg.clone();
                    c.circuit.n_modes = Some(m);
                    c.sweep.n_modes.clear();
                    let stem = if many { format!("{}-nm{m}", command.name()) } else { command.name().to_string() };
                    produce(command, stem, &c, warnings, ctx)
                })
                .collect()
        }
        Command::Verify => Ok(vec![verify(cfg, warnings)]),
        _ => Ok(vec![produce(command, command.name().to_string(), cfg, warnings, ctx)?]),
    }
}

fn produce(
    command: Command,
    stem: String,
    cfg: &RunConfig,
    warnings: &[String],
    ctx: &Context,
) -> Result<Product, CliError> {
    let key = record_key(command.name(), cfg);
    let (payload, hit) = ctx.cache.get_or_compute("record", &key, || compute(command, cfg, &ctx.cache))?;
    let mut provenance = Provenance::now(warnings.to_vec());
    provenance.cache_hit = hit;
    if ctx.audit {
        provenance.audit = Some(audit(cfg, &audit_targets(command, cfg)?)?);
    }
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        key,
        command: command.name().to_string(),
        config: cfg.clone(),
        payload,
        provenance,
    };
    Ok(Product { stem, record })
}

fn compute(command: Command, cfg: &RunConfig, cache: &Cache) -> Result<Payload, CliError> {
    let spec = cfg.spec()?;
    match command {
        Command::Modes => {
            let bath = line_normal_modes(&spec)?;
            let charge_gauge = match spec.boundary {
                Boundary::OpenEnd => Some(charge_gauge_bath(&bath, spec.e_c)?),
                Boundary::ShortEnd => None,
            };
            Ok(Payload::Modes(ModesTable {
                spec,
                sum_rule_residual: bath.sum_rule_residual(),
                bath,
                charge_gauge,
                spacing: spec.spacing(),
            }))
        }
        Command::Bands => {
            let raw = sweep(cfg, &spec, cache)?;
            Ok(Payload::Bands(if cfg.output.rescale { rescale(cfg, &spec, &raw, cache)? } else { raw }))
        }
        Command::Fit => {
            let (bands, fit) = mobility(cfg, &spec, cache)?;
            Ok(Payload::Fit(FitReport { bands, fit }))
        }
        Command::Duality => duality(cfg, &spec, cache).map(Payload::Duality),
        Command::Spectroscopy => {
            let omega = cfg.omega_grid();
            let curves = cfg
                .e_j_values()
                .par_iter()
                .map(|&e_j| {
                    let s = spec.with_e_j(e_j);
                    let mut d = spectral_function(&s, cfg.numerics.gamma, &omega, cfg.numerics.n_states, &cfg.cutoffs_for(&s), &cfg.solver())?;
                    if cfg.output.normalize {
                        d.normalize();
                    }
                    Ok(d)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Payload::Spectroscopy(curves))
        }
        Command::Heatmap => {
            let points: Vec<(f64, f64)> =
                cfg.z_values().iter().flat_map(|&z| cfg.e_j_values().into_iter().map(move |e| (z, e))).collect();
            let cells = points
                .par_iter()
                .map(|&(z, e_j)| {
                    let (_, fit) = mobility(cfg, &spec.with_z_ratio(z).with_e_j(e_j), cache)?;
                    Ok(HeatmapCell { z_ratio: z, e_j, fit })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Payload::Heatmap(HeatmapReport { boundary: spec.boundary, n_modes: spec.n_modes, cells }))
        }
        Command::Verify => unreachable!("verify is never cached"),
    }
}

/// Raw band sweep for `spec`, cached on its own so fits and heatmaps share it.
fn sweep_with(cfg: &RunConfig, spec: &CircuitSpec, n_bands: usize, cache: &Cache) -> Result<BandStructure, CliError> {
    let template = spec.with_bias(0.0);
    let grid = cfg.bias_grid();
    let cutoffs = cfg.cutoffs_for(spec);
    let solver = cfg.solver();
    let policy = cfg.policy();
    let key = content_key(&[
        &SCHEMA_VERSION.to_string(),
        &json(&template),
        &json(&grid),
        &n_bands.to_string(),
        &json(&cutoffs),
        &json(&solver),
        &json(&policy),
    ]);
    let (bands, _) = cache.get_or_compute("sweep", &key, || {
        band_sweep(&template, &grid, n_bands, &cutoffs, &solver, policy).map_err(CliError::from)
    })?;
    Ok(bands)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("key parts serialize")
}

fn sweep(cfg: &RunConfig, spec: &CircuitSpec, cache: &Cache) -> Result<BandStructure, CliError> {
    sweep_with(cfg, spec, cfg.numerics.n_bands, cache)
}

/// Divides by the third zero-bias level of the `Z = R_q` sweep at the same `E_J` and `N_m`.
fn rescale(cfg: &RunConfig, spec: &CircuitSpec, raw: &BandStructure, cache: &Cache) -> Result<BandStructure, CliError> {
    let n = cfg.numerics.n_bands.max(3);
    let reference = sweep_with(cfg, &spec.with_z_ratio(1.0), n, cache)?;
    Ok(rescale_bands(raw, &reference)?)
}

fn mobility(cfg: &RunConfig, spec: &CircuitSpec, cache: &Cache) -> Result<(BandStructure, MobilityFit), CliError> {
    let bands = rescale(cfg, spec, &sweep(cfg, spec, cache)?, cache)?;
    let fit = fit_mobility(&bands)?;
    Ok((bands, fit))
}

fn duality(cfg: &RunConfig, spec: &CircuitSpec, cache: &Cache) -> Result<DualityReport, CliError> {
    let energies = cfg.sweep.e_j.clone();
    if energies.len() < 2 || energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Validation {
            field: "sweep.e_j".into(),
            allowed: "at least two strictly increasing values for `duality`".into(),
            got: format!("{energies:?}"),
        });
    }
    let charge = CircuitSpec { boundary: Boundary::OpenEnd, ..*spec };
    let flux = charge.dual();
    let jobs: Vec<CircuitSpec> = energies.iter().flat_map(|&e| [charge.with_e_j(e), flux.with_e_j(e)]).collect();
    let fits = jobs.par_iter().map(|s| mobility(cfg, s, cache).map(|r| r.1)).collect::<Result<Vec<_>, _>>()?;
    let charge_fits: Vec<(f64, MobilityFit)> = energies.iter().zip(fits.iter().step_by(2)).map(|(&e, f)| (e, f.clone())).collect();
    let flux_fits: Vec<(f64, MobilityFit)> =
        energies.iter().zip(fits.iter().skip(1).step_by(2)).map(|(&e, f)| (e, f.clone())).collect();
    let pairs = |v: &[(f64, MobilityFit)]| v.iter().map(|(e, f)| (*e, f.mu)).collect::<Vec<_>>();
    let map = extract_duality(&pairs(&charge_fits), &pairs(&flux_fits))?;
    let self_dual_fit = match map.self_dual_point {
        Some(star) => Some(mobility(cfg, &charge.with_e_j(star), cache)?.1),
        None => None,
    };
    Ok(DualityReport { z_ratio: charge.z_ratio, n_modes: charge.n_modes, charge_fits, flux_fits, map, self_dual_fit })
}

fn audit_targets(command: Command, cfg: &RunConfig) -> Result<Vec<(String, CircuitSpec)>, CliError> {
    let spec = cfg.spec()?.with_bias(0.0);
    let label = |s: &CircuitSpec| format!("{:?} Z={} E_J={} N_m={}", s.boundary, s.z_ratio, s.e_j, s.n_modes);
    let specs: Vec<CircuitSpec> = match command {
        Command::Modes | Command::Verify => Vec::new(),
        Command::Bands | Command::Fit => vec![spec],
        Command::Spectroscopy => cfg.e_j_values().into_iter().map(|e| spec.with_e_j(e)).collect(),
        Command::Heatmap => cfg
            .z_values()
            .into_iter()
            .flat_map(|z| cfg.e_j_values().into_iter().map(move |e| spec.with_z_ratio(z).with_e_j(e)))
            .collect(),
        Command::Duality => {
            let charge = CircuitSpec { boundary: Boundary::OpenEnd, ..spec };
            cfg.sweep.e_j.iter().flat_map(|&e| [charge.with_e_j(e), charge.dual().with_e_j(e)]).collect()
        }
    };
    Ok(specs.iter().map(|s| (label(s), *s)).collect())
}

/// Cutoffs one notch above `c`: 25% more photon energy, four more charge
/// states, half again as many fluxonium levels.
pub fn enlarged(c: &Cutoffs) -> Cutoffs {
    Cutoffs {
        energy_cutoff: 1.25 * c.energy_cutoff,
        charge_cutoff: c.charge_cutoff + 4,
        flux_levels: c.flux_levels + c.flux_levels.div_ceil(2),
        ..*c
    }
}

fn audit(cfg: &RunConfig, targets: &[(String, CircuitSpec)]) -> Result<Vec<AuditEntry>, CliError> {
    let k = cfg.numerics.n_bands;
    targets
        .par_iter()
        .map(|(label, s)| {
            let base = cfg.cutoffs_for(s);
            let big = enlarged(&base);
            let a = spectrum(s, &base, k, &cfg.solver())?.energies;
            let b = spectrum(s, &big, k, &cfg.solver())?.energies;
            let (mut abs, mut rel) = (0.0_f64, 0.0_f64);
            for (x, y) in a.iter().zip(&b) {
                abs = abs.max((x - y).abs());
                rel = rel.max((x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE));
            }
            Ok(AuditEntry { label: label.clone(), base, enlarged: big, max_abs_change: abs, max_rel_change: rel })
        })
        .collect()
}

/// Runs the property suite. Timings go to provenance so the payload is reproducible.
fn verify(cfg: &RunConfig, warnings: &[String]) -> Product {
    let mut outcomes = jjline::verify::run_suite(None);
    let mut provenance = Provenance::now(warnings.to_vec());
    for o in &mut outcomes {
        provenance.timings.push((o.name.clone(), o.seconds));
        o.seconds = 0.0;
    }
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        key: record_key("verify", cfg),
        command: "verify".into(),
        config: cfg.clone(),
        payload: Payload::Verify(outcomes),
        provenance,
    };
    Product { stem: "verify".into(), record }
}
