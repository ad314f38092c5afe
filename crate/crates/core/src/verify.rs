//! Self-contained invariant and oracle checks, runnable from the command line.

use crate::analysis::{
    anticrossings, band_sweep, cft_energy, cft_levels, default_bias_grid, extract_duality, fit_mobility,
    lorentzian_sum, BandStructure, SpectralPeak, SweepPolicy,
};
use crate::circuit::{charge_gauge_bath, line_normal_modes, Boundary, CircuitSpec};
use crate::linalg::SolverOptions;
use crate::polaron::{assemble, spectrum, Cutoffs};
use crate::reference::{
    charge_gauge_hessian, dense_ed_charge, flux_quadratic_levels, network_frequencies, symplectic_frequencies,
    BareBasisSpec,
};
use crate::special::displacement_table;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

type CheckFn = fn() -> Result<String, String>;

pub struct Check {
    pub name: &'static str,
    pub run: CheckFn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Every check, in reporting order.
pub fn property_suite() -> Vec<Check> {
    vec![
        Check { name: "sum-rule", run: sum_rule },
        Check { name: "laguerre-vs-matrix-exponential", run: laguerre_vs_expm },
        Check { name: "charge-free-bands", run: charge_free_bands },
        Check { name: "flux-quadratic-oracle", run: flux_quadratic_oracle },
        Check { name: "charge-gauge-normal-modes", run: charge_gauge_normal_modes },
        Check { name: "hermiticity", run: hermiticity },
        Check { name: "variational-cutoffs", run: variational_cutoffs },
        Check { name: "reference-variational", run: reference_variational },
        Check { name: "bias-periodicity-and-symmetry", run: bias_periodicity },
        Check { name: "oracle-single-mode", run: oracle_single_mode },
        Check { name: "cft-formula-properties", run: cft_properties },
        Check { name: "fit-round-trips", run: fit_round_trips },
        Check { name: "duality-identity", run: duality_identity },
        Check { name: "spectral-positivity-linearity", run: spectral_linearity },
        Check { name: "anticrossing-alignment", run: anticrossing_alignment },
    ]
}

/// Runs the checks whose name contains `filter` (all when `None`), in parallel,
/// reporting in suite order.
pub fn run_suite(filter: Option<&str>) -> Vec<CheckOutcome> {
    let checks: Vec<Check> =
        property_suite().into_iter().filter(|c| filter.is_none_or(|f| c.name.contains(f))).collect();
    checks
        .par_iter()
        .map(|c| {
            let t = Instant::now();
            let r = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
            let (passed, detail) = match r {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name: c.name.to_string(), passed, detail, seconds: t.elapsed().as_secs_f64() }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn sum_rule() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for n in 1..=32 {
        let z = rng.random_range(0.2..5.0);
        let wc = rng.random_range(0.5..20.0);
        let open = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::OpenEnd).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        worst = worst.max(open.sum_rule_residual().abs() / open.inductive_scale);
        let short = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::ShortEnd).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let r = short.sum_rule_residual() / short.inductive_scale;
        ensure(r > 1e-3, || format!("short-ended residual {r:e} at N_m = {n}"))?;
    }
    ensure(worst < 1e-10, || format!("open-ended relative residual {worst:e}"))?;
    Ok(format!("max relative residual {worst:.1e}"))
}

fn laguerre_vs_expm() -> Result<String, String> {
    let size = 70;
    let mut worst = 0.0_f64;
    for x in [0.3, -0.8, 1.5] {
        let gen = DMatrix::from_fn(size, size, |i, j| {
            if i == j + 1 {
                x * (i as f64).sqrt()
            } else if j == i + 1 {
                -x * (j as f64).sqrt()
            } else {
                0.0
            }
        });
        let d = gen.exp();
        let t = displacement_table(size, x);
        for m in 0..15 {
            for n in 0..15 {
                worst = worst.max((d[(m, n)] - t[m * size + n]).abs());
            }
        }
    }
    ensure(worst < 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn charge_free_bands() -> Result<String, String> {
    let spec = CircuitSpec::unit(0.0, 1.0, 4.0, 3, Boundary::OpenEnd).map_err(|e| e.to_string())?;
    let grid = default_bias_grid(6);
    let b = band_sweep(&spec, &grid, 2, &Cutoffs::with_energy(10.0), &SolverOptions::default(), SweepPolicy::FailFast)
        .map_err(|e| e.to_string())?;
    let e_c = charge_gauge_bath(&line_normal_modes(&spec).map_err(|e| e.to_string())?, 1.0)
        .map_err(|e| e.to_string())?
        .e_c_tilde;
    let worst = b.bias.iter().zip(&b.energies).map(|(x, r)| (r[0] - 4.0 * e_c * x * x).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-10, || format!("lowest band off 4Ẽ_C ξ² by {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn flux_quadratic_oracle() -> Result<String, String> {
    let mut worst = 0.0_f64;
    for phi in [0.0, 0.3] {
        let spec = CircuitSpec::unit(0.0, 1.0, 4.0, 2, Boundary::ShortEnd).map_err(|e| e.to_string())?.with_bias(phi);
        let exact = flux_quadratic_levels(&spec, 4).map_err(|e| e.to_string())?;
        let got = spectrum(&spec, &Cutoffs::with_energy(36.0), 4, &SolverOptions::default())
            .map_err(|e| e.to_string())?
            .energies;
        for (a, b) in got.iter().zip(&exact) {
            worst = worst.max(rel(*a, *b));
        }
    }
    ensure(worst < 1e-8, || format!("relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.1e}"))
}

fn charge_gauge_normal_modes() -> Result<String, String> {
    let mut worst = 0.0_f64;
    for (z, n) in [(0.5, 3), (1.0, 6), (2.0, 9)] {
        let spec = CircuitSpec::unit(0.0, z, 4.0, n, Boundary::OpenEnd).map_err(|e| e.to_string())?;
        let modes = line_normal_modes(&spec).map_err(|e| e.to_string())?;
        let bath = charge_gauge_bath(&modes, 1.0).map_err(|e| e.to_string())?;
        let sym = symplectic_frequencies(&charge_gauge_hessian(&modes, 1.0)).map_err(|e| e.to_string())?;
        let net = network_frequencies(&spec).map_err(|e| e.to_string())?;
        ensure(net.len() == bath.len(), || format!("network has {} modes, bath {}", net.len(), bath.len()))?;
        for ((a, b), c) in bath.frequencies.iter().zip(&sym).zip(&net) {
            worst = worst.max(rel(*a, *b)).max(rel(*a, *c));
        }
    }
    ensure(worst < 1e-10, || format!("relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.1e}"))
}

fn hermiticity() -> Result<String, String> {
    let charge = CircuitSpec::unit(1.2, 1.5, 4.0, 3, Boundary::OpenEnd).map_err(|e| e.to_string())?.with_bias(0.3);
    let flux = CircuitSpec::unit(1.2, 0.7, 4.0, 2, Boundary::ShortEnd).map_err(|e| e.to_string())?.with_bias(0.3);
    let mut c = Cutoffs::with_energy(9.0);
    c.flux_levels = 12;
    let mut worst = 0.0_f64;
    for s in [charge, flux] {
        let h = assemble(&s, &c).map_err(|e| e.to_string())?;
        worst = worst.max(h.operator.max_asymmetry());
    }
    ensure(worst < 1e-12, || format!("asymmetry {worst:e}"))?;
    Ok(format!("max asymmetry {worst:.1e}"))
}

fn variational_cutoffs() -> Result<String, String> {
    let o = SolverOptions::default();
    let charge = CircuitSpec::unit(1.5, 1.0, 4.0, 2, Boundary::OpenEnd).map_err(|e| e.to_string())?.with_bias(0.2);
    let mut prev: Option<Vec<f64>> = None;
    for e in [6.0, 9.0, 12.0, 15.0] {
        let r = spectrum(&charge, &Cutoffs::with_energy(e), 4, &o).map_err(|e| e.to_string())?.energies;
        if let Some(p) = &prev {
            ensure(r.iter().zip(p).all(|(a, b)| *a <= b + 1e-12), || format!("charge level rose at E_cut = {e}"))?;
        }
        prev = Some(r);
    }
    let flux = CircuitSpec::unit(1.5, 1.0, 4.0, 2, Boundary::ShortEnd).map_err(|e| e.to_string())?.with_bias(0.2);
    let mut prev: Option<Vec<f64>> = None;
    for (e, n) in [(6.0, 6), (9.0, 12), (12.0, 24)] {
        let mut c = Cutoffs::with_energy(e);
        c.flux_levels = n;
        let r = spectrum(&flux, &c, 4, &o).map_err(|e| e.to_string())?.energies;
        if let Some(p) = &prev {
            ensure(r.iter().zip(p).all(|(a, b)| *a <= b + 1e-10), || format!("flux level rose at E_cut = {e}"))?;
        }
        prev = Some(r);
    }
    Ok("levels non-increasing under cutoff growth".into())
}

fn reference_variational() -> Result<String, String> {
    let spec = CircuitSpec::unit(1.0, 1.0, 4.0, 2, Boundary::OpenEnd).map_err(|e| e.to_string())?.with_bias(0.1);
    let mut prev: Option<Vec<f64>> = None;
    for f in [4, 8, 12] {
        let r = dense_ed_charge(&spec, &BareBasisSpec::uniform(6, f, 2), 4, &SolverOptions::default())
            .map_err(|e| e.to_string())?
            .energies;
        if let Some(p) = &prev {
            ensure(r.iter().zip(p).all(|(a, b)| *a <= b + 1e-12), || format!("reference level rose at Fock cutoff {f}"))?;
        }
        prev = Some(r);
    }
    Ok("reference levels non-increasing under Fock growth".into())
}

fn bias_periodicity() -> Result<String, String> {
    let o = SolverOptions::default();
    let mut c = Cutoffs::with_energy(9.0);
    c.flux_levels = 16;
    let mut worst = 0.0_f64;
    for b in [Boundary::OpenEnd, Boundary::ShortEnd] {
        let spec = CircuitSpec::unit(1.0, 1.0, 4.0, 2, b).map_err(|e| e.to_string())?;
        let at = |x: f64| spectrum(&spec.with_bias(x), &c, 3, &o).map(|r| r.energies).map_err(|e| e.to_string());
        let (e0, e1, em) = (at(0.3)?, at(1.3)?, at(-0.3)?);
        for i in 0..3 {
            worst = worst.max((e0[i] - e1[i]).abs()).max((e0[i] - em[i]).abs());
        }
    }
    ensure(worst < 1e-8, || format!("bias shift changed levels by {worst:e}"))?;
    Ok(format!("max change {worst:.1e}"))
}

fn oracle_single_mode() -> Result<String, String> {
    let spec = CircuitSpec::unit(0.5, 1.0, 4.0, 1, Boundary::OpenEnd).map_err(|e| e.to_string())?.with_bias(0.2);
    let mut c = Cutoffs::with_energy(60.0);
    c.charge_cutoff = 8;
    let o = SolverOptions::default();
    let a = spectrum(&spec, &c, 5, &o).map_err(|e| e.to_string())?.energies;
    let b = dense_ed_charge(&spec, &BareBasisSpec::uniform(8, 40, 1), 5, &o).map_err(|e| e.to_string())?.energies;
    let worst = a.iter().zip(&b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max);
    ensure(worst < 1e-7, || format!("relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.1e}"))
}

fn cft_properties() -> Result<String, String> {
    for mu in [0.05, 0.3, 0.5, 0.8, 0.97] {
        let mut prev = -1.0;
        for i in 0..=50 {
            let x = 0.5 * i as f64 / 50.0;
            let e = cft_energy(mu, x, 0, 0).map_err(|e| e.to_string())?;
            let m = cft_energy(mu, -x, 0, 0).map_err(|e| e.to_string())?;
            ensure((e - m).abs() < 1e-15, || format!("not even at μ = {mu}, ξ = {x}"))?;
            ensure(e > prev, || format!("not increasing at μ = {mu}, ξ = {x}"))?;
            prev = e;
            if x <= 0.25 {
                // λ(ξ + 1) = λ(ξ): compare via the cosine argument, ξ + 1 is outside the zone
                let l1 = crate::analysis::cft_lambda(mu, x + 1.0);
                let l0 = crate::analysis::cft_lambda(mu, x);
                ensure((l1 - l0).abs() < 1e-12, || format!("not periodic at μ = {mu}, ξ = {x}"))?;
            }
        }
    }
    Ok("even, periodic, increasing on [0, 1/2]".into())
}

fn fit_round_trips() -> Result<String, String> {
    let spec = CircuitSpec::unit(1.0, 1.0, 4.0, 8, Boundary::OpenEnd).map_err(|e| e.to_string())?;
    let grid = default_bias_grid(41);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let mu: f64 = rng.random();
        let e = grid.iter().map(|&x| cft_levels(mu, x, 1)).collect::<crate::error::Result<Vec<_>>>();
        let b = BandStructure::from_levels(spec, grid.clone(), e.map_err(|e| e.to_string())?, Some(1.0))
            .map_err(|e| e.to_string())?;
        let f = fit_mobility(&b).map_err(|e| e.to_string())?;
        worst = worst.max((f.mu - mu).abs());
    }
    ensure(worst < 1e-5, || format!("max |Δμ| = {worst:e}"))?;
    Ok(format!("max |Δμ| = {worst:.1e} over 100 draws"))
}

fn duality_identity() -> Result<String, String> {
    let samples: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&e: &f64| (e, 1.0 / (1.0 + e))).collect();
    let d = extract_duality(&samples, &samples).map_err(|e| e.to_string())?;
    ensure(d.map.iter().all(|(x, y)| x == y), || format!("map not identity: {:?}", d.map))?;
    let star = d.self_dual_point.ok_or("no self-dual point")?;
    ensure((star - 1.0).abs() < 1e-3, || format!("E_J* = {star}"))?;
    Ok(format!("identity on {} samples, E_J* = {star:.6}", d.map.len()))
}

fn spectral_linearity() -> Result<String, String> {
    let omega: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
    let peaks = [SpectralPeak { energy: 0.7, weight: 0.4 }, SpectralPeak { energy: 2.1, weight: 0.9 }];
    let base = lorentzian_sum(&omega, &peaks, 0.05);
    ensure(base.iter().all(|v| *v >= 0.0), || "negative spectral value".into())?;
    let mut dup = peaks.to_vec();
    dup.push(peaks[1]);
    let a: f64 = base.iter().sum();
    let b: f64 = lorentzian_sum(&omega, &dup, 0.05).iter().sum();
    let one: f64 = lorentzian_sum(&omega, &peaks[1..], 0.05).iter().sum();
    ensure((b - a - one).abs() < 1e-10 * b, || format!("duplicating a weight added {} instead of {one}", b - a))?;
    Ok("non-negative and linear in the weights".into())
}

fn anticrossing_alignment() -> Result<String, String> {
    let grid = default_bias_grid(11);
    let step = 0.05;
    let o = SolverOptions::default();
    let mut found = Vec::new();
    for b in [Boundary::OpenEnd, Boundary::ShortEnd] {
        let spec = CircuitSpec::unit(1.0, 1.0, 4.0, 4, b).map_err(|e| e.to_string())?;
        let bands = band_sweep(&spec, &grid, 3, &Cutoffs::defaults_for(&spec), &o, SweepPolicy::FailFast)
            .map_err(|e| e.to_string())?;
        found.push((0..2).map(|s| anticrossings(&bands, s)).collect::<Vec<_>>());
    }
    for s in 0..2 {
        let (c, f) = (&found[0][s], &found[1][s]);
        ensure(!c.is_empty() && c.len() == f.len(), || format!("bands {s}/{}: charge {c:?}, flux {f:?}", s + 1))?;
        ensure(c.iter().zip(f).all(|(x, y)| (x - y).abs() <= step + 1e-12), || {
            format!("bands {s}/{}: charge {c:?}, flux {f:?}", s + 1)
        })?;
    }
    Ok(format!("gap minima charge {:?}, flux {:?}", found[0], found[1]))
}
