//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use jjline::analysis::{
    band_sweep, extract_duality, fit_mobility, rescale_bands, spectral_function, BandStructure, SweepPolicy,
};
use jjline::circuit::{charge_gauge_bath, line_normal_modes, Boundary, CircuitSpec};
use jjline::linalg::SolverOptions;
use jjline::polaron::{spectrum, Cutoffs};
use jjline::reference::{dense_ed_charge, dense_ed_charge_gauge_flux, dense_ed_flux, BareBasisSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

const SUM_RULE_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-7;
const GAUGE_TOL: f64 = 1e-6;
const SCALE_TOL: f64 = 0.05;
const FIT_TOL: f64 = 0.05;
const DUALITY_TOL: f64 = 0.03;
const SELF_DUAL_TOL: f64 = 0.01;

/// Critical line: ħω_c = 4E_C, E_C = 1.
const OMEGA_C: f64 = 4.0;
/// Mode count for the fit and duality criteria.
const FIT_MODES: usize = 7;
/// Bias points on [0, 1/2]; bands are mirror-symmetric.
const HALF_GRID: usize = 11;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn half_grid() -> Vec<f64> {
    (0..HALF_GRID).map(|i| 0.5 * i as f64 / (HALF_GRID - 1) as f64).collect()
}

/// Sweeps keyed by (boundary, Z, E_J, N_m), rescaled by the Z = R_q run at the same E_J and N_m.
struct Sweeps {
    raw: Mutex<HashMap<(Boundary, u64, u64, usize), BandStructure>>,
}

impl Sweeps {
    fn raw(&self, b: Boundary, z: f64, e_j: f64, n: usize) -> Result<BandStructure, String> {
        let key = (b, z.to_bits(), e_j.to_bits(), n);
        if let Some(s) = self.raw.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let spec = CircuitSpec::unit(e_j, z, OMEGA_C, n, b).map_err(|e| e.to_string())?;
        let s = band_sweep(&spec, &half_grid(), 4, &Cutoffs::defaults_for(&spec), &SolverOptions::default(), SweepPolicy::FailFast)
            .map_err(|e| e.to_string())?;
        self.raw.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }

    fn rescaled(&self, b: Boundary, z: f64, e_j: f64, n: usize) -> Result<BandStructure, String> {
        let reference = self.raw(b, 1.0, e_j, n)?;
        rescale_bands(&self.raw(b, z, e_j, n)?, &reference).map_err(|e| e.to_string())
    }

    fn mobility(&self, b: Boundary, e_j: f64, n: usize) -> Result<f64, String> {
        let f = fit_mobility(&self.rescaled(b, 1.0, e_j, n)?).map_err(|e| e.to_string())?;
        Ok(f.mu)
    }
}

fn sum_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    let mut smallest_short = f64::INFINITY;
    for n in 1..=32 {
        let z = rng.random_range(0.1..10.0);
        let wc = rng.random_range(0.5..40.0);
        let open = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::OpenEnd).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max((open.coupling_sum() - open.inductive_scale).abs() / open.inductive_scale);
        let short = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::ShortEnd).unwrap()).map_err(|e| e.to_string())?;
        smallest_short = smallest_short.min(short.sum_rule_residual() / short.inductive_scale);
    }
    let detail = format!("open max rel residual {worst:.2e} (tol {SUM_RULE_TOL:e}); short min rel residual {smallest_short:.3e}");
    if worst < SUM_RULE_TOL && smallest_short > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut cases = Vec::new();
    for b in [Boundary::OpenEnd, Boundary::ShortEnd] {
        for n in [1usize, 2] {
            for z in [0.5, 1.0, 2.0] {
                for e_j in [0.0, 0.5, 2.0] {
                    cases.push((b, n, z, e_j));
                }
            }
        }
    }
    let opts = SolverOptions::default();
    let results: Vec<Result<(f64, String), String>> = cases
        .par_iter()
        .map(|&(b, n, z, e_j)| {
            let spec = CircuitSpec::unit(e_j, z, OMEGA_C, n, b).unwrap().with_bias(0.2);
            let (cut, bare) = match b {
                Boundary::OpenEnd => {
                    let mut c = Cutoffs::with_energy(60.0);
                    c.charge_cutoff = 8;
                    (c, BareBasisSpec { junction_cutoff: 8, fock_cutoffs: vec![if n == 1 { 40 } else { 30 }; n], max_dim: 100_000 })
                }
                Boundary::ShortEnd => {
                    let mut c = Cutoffs::with_energy(36.0);
                    c.flux_levels = 64;
                    (c, BareBasisSpec { junction_cutoff: 80, fock_cutoffs: vec![if n == 1 { 40 } else { 24 }; n], max_dim: 100_000 })
                }
            };
            let pol = spectrum(&spec, &cut, 5, &opts).map_err(|e| e.to_string())?.energies;
            let reference = match b {
                Boundary::OpenEnd => dense_ed_charge(&spec, &bare, 5, &opts),
                Boundary::ShortEnd => dense_ed_flux(&spec, &bare, 5, &opts),
            }
            .map_err(|e| e.to_string())?
            .energies;
            let worst = pol.iter().zip(&reference).map(|(a, r)| rel(*a, *r)).fold(0.0, f64::max);
            Ok((worst, format!("{b:?} N_m={n} Z={z} E_J={e_j}")))
        })
        .collect();
    let mut worst = (0.0, String::new());
    for r in results {
        let r = r?;
        if r.0 >= worst.0 {
            worst = r;
        }
    }
    let detail = format!("{} cases, worst rel deviation {:.2e} at {} (tol {ORACLE_TOL:e})", cases.len(), worst.0, worst.1);
    if worst.0 < ORACLE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gauge_invariance() -> Outcome {
    let opts = SolverOptions::default();
    let cases: Vec<(f64, f64)> = [0.5, 1.0, 2.0].iter().flat_map(|&z| [0.5, 2.0].map(|e| (z, e))).collect();
    let results: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|&(z, e_j)| {
            let spec = CircuitSpec::unit(e_j, z, OMEGA_C, 2, Boundary::ShortEnd).unwrap().with_bias(0.2);
            let bare = BareBasisSpec { junction_cutoff: 80, fock_cutoffs: vec![24; 2], max_dim: 100_000 };
            let flux = dense_ed_flux(&spec, &bare, 4, &opts).map_err(|e| e.to_string())?.energies;
            let charge = dense_ed_charge_gauge_flux(&spec, &bare, 4, &opts).map_err(|e| e.to_string())?.energies;
            Ok(flux.iter().zip(&charge).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max))
        })
        .collect();
    let mut worst = 0.0_f64;
    for r in results {
        worst = worst.max(r?);
    }
    let detail = format!("N_m=2, {} cases, worst rel deviation {worst:.2e} (tol {GAUGE_TOL:e})", cases.len());
    if worst < GAUGE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_band_spread(sets: &[BandStructure]) -> f64 {
    let mut worst = 0.0_f64;
    for a in sets {
        for b in sets {
            for (ra, rb) in a.energies.iter().zip(&b.energies) {
                for s in 0..3 {
                    worst = worst.max((ra[s] - rb[s]).abs());
                }
            }
        }
    }
    worst
}

fn critical_scale_invariance(sweeps: &Sweeps) -> Outcome {
    let sizes = [5usize, 7, 10];
    let mut spreads = Vec::new();
    for z in [1.0, 0.5, 2.0] {
        let sets: Vec<BandStructure> = sizes
            .par_iter()
            .map(|&n| sweeps.rescaled(Boundary::OpenEnd, z, 1.0, n))
            .collect::<Result<_, _>>()?;
        spreads.push(max_band_spread(&sets));
    }
    let detail = format!(
        "max rescaled spread over N_m {{5,7,10}}: Z=R_q {:.4}, Z=R_q/2 {:.4}, Z=2R_q {:.4} (tol {SCALE_TOL})",
        spreads[0], spreads[1], spreads[2]
    );
    if spreads[0] < SCALE_TOL && spreads[1] > SCALE_TOL && spreads[2] > SCALE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cft_fit_quality(sweeps: &Sweeps) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for e_j in [0.25, 1.0, 2.0] {
        let f = fit_mobility(&sweeps.rescaled(Boundary::OpenEnd, 1.0, e_j, FIT_MODES)?).map_err(|e| e.to_string())?;
        let worst = f.band_residuals.iter().take(3).fold(0.0_f64, |a, &b| a.max(b));
        ok &= worst < FIT_TOL && !f.flagged;
        parts.push(format!("E_J={e_j}: μ={:.4}, max rms(bands 1-3)={worst:.4}", f.mu));
    }
    let detail = format!("N_m={FIT_MODES}; {} (tol {FIT_TOL})", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn duality_relation(sweeps: &Sweeps) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for e_j in [0.25, 1.0, 2.0, 4.0] {
        let mu = sweeps.mobility(Boundary::OpenEnd, e_j, FIT_MODES)?;
        let mu_bar = sweeps.mobility(Boundary::ShortEnd, e_j, FIT_MODES)?;
        let d = (mu + mu_bar - 1.0).abs();
        ok &= d < DUALITY_TOL;
        parts.push(format!("E_J={e_j}: μ={mu:.4} μ̄={mu_bar:.4} |μ+μ̄-1|={d:.4}"));
    }
    let detail = format!("N_m={FIT_MODES}; {} (tol {DUALITY_TOL})", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn self_dual_point(sweeps: &Sweeps) -> Outcome {
    let energies = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut charge = Vec::new();
    let mut flux = Vec::new();
    for e_j in energies {
        charge.push((e_j, sweeps.mobility(Boundary::OpenEnd, e_j, FIT_MODES)?));
        flux.push((e_j, sweeps.mobility(Boundary::ShortEnd, e_j, FIT_MODES)?));
    }
    let map = extract_duality(&charge, &flux).map_err(|e| e.to_string())?;
    let star = map.self_dual_point.ok_or("μ(E_J) does not cross 1/2 on the sampled range")?;
    // check the interpolated root against a fresh sweep at E_J*
    let mu_star = sweeps.mobility(Boundary::OpenEnd, star, FIT_MODES)?;
    let detail = format!("E_J*={star:.4} E_C, fresh fit μ(E_J*)={mu_star:.4} (tol {SELF_DUAL_TOL}), F(E_J*)={:.4}", map.apply(star).ok().flatten().unwrap_or(f64::NAN));
    if (mu_star - 0.5).abs() < SELF_DUAL_TOL && star < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Largest-weight peak within `0.4Δ` of the first bare line mode.
fn first_mode_peak(z: f64, e_j: f64) -> Result<(f64, f64), String> {
    let spec = CircuitSpec::unit(e_j, z, 2.0, 6, Boundary::ShortEnd).unwrap();
    let omega_1 = line_normal_modes(&spec).map_err(|e| e.to_string())?.frequencies[0];
    let window = 0.4 * spec.spacing();
    let mut c = Cutoffs::with_energy(10.0 * spec.spacing());
    c.flux_levels = 48;
    let d = spectral_function(&spec, 0.02, &[omega_1], 12, &c, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let peak = d
        .peaks
        .iter()
        .filter(|p| (p.energy - omega_1).abs() < window)
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .ok_or_else(|| format!("no peak near Ω_1 at Z={z}, E_J={e_j}"))?;
    Ok((peak.energy, omega_1))
}

fn spectroscopy() -> Outcome {
    let spec = CircuitSpec::unit(0.0, 1.0, OMEGA_C, 4, Boundary::OpenEnd).unwrap();
    let bath = charge_gauge_bath(&line_normal_modes(&spec).map_err(|e| e.to_string())?, 1.0).map_err(|e| e.to_string())?;
    let d = spectral_function(&spec, 0.02, &bath.frequencies, 16, &Cutoffs::with_energy(12.0), &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let mut free = 0.0_f64;
    for &w in &bath.frequencies {
        let p = d.peaks.iter().min_by(|a, b| (a.energy - w).abs().total_cmp(&(b.energy - w).abs())).unwrap();
        free = free.max((p.energy - w).abs()).max((p.weight - 1.0).abs());
    }
    let shifts: Vec<(f64, f64)> = [0.5, 2.0]
        .par_iter()
        .map(|&z| {
            let (hi, w1) = first_mode_peak(z, 10.0)?;
            let (lo, _) = first_mode_peak(z, 2.0)?;
            Ok::<_, String>((hi - w1, lo - hi))
        })
        .collect::<Result<_, _>>()?;
    let detail = format!(
        "E_J=0 peak offset/weight error {free:.1e}; flux Ω_1 at Ē_J=10 within {:.4}/{:.4} of bare; shift Ē_J 10→2: Z̄=R_q/2 {:+.4}, Z̄=2R_q {:+.4}",
        shifts[0].0, shifts[1].0, shifts[0].1, shifts[1].1
    );
    if free < 1e-9 && shifts[0].1 < 0.0 && shifts[1].1 > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn property_suite() -> Outcome {
    let outcomes = jjline::verify::run_suite(None);
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{}: {}", o.name, o.detail)).collect();
    if failed.is_empty() {
        Ok(format!("{} properties pass", outcomes.len()))
    } else {
        Err(format!("{} of {} failed: {}", failed.len(), outcomes.len(), failed.join("; ")))
    }
}

fn main() {
    let sweeps = Sweeps { raw: Mutex::new(HashMap::new()) };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("sum rule", Box::new(sum_rule)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("gauge invariance", Box::new(gauge_invariance)),
        ("critical scale invariance", Box::new(|| critical_scale_invariance(&sweeps))),
        ("critical band fit", Box::new(|| cft_fit_quality(&sweeps))),
        ("duality relation", Box::new(|| duality_relation(&sweeps))),
        ("self-dual point", Box::new(|| self_dual_point(&sweeps))),
        ("spectroscopy", Box::new(spectroscopy)),
        ("property suite", Box::new(property_suite)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = run();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS [{}] {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failures += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
