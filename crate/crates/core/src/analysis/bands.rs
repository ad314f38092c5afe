use crate::circuit::CircuitSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::SolverOptions;
use crate::polaron::{spectrum, Cutoffs};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// What a sweep does when one bias point fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPolicy {
    #[default]
    FailFast,
    /// Keep going; failed points hold NaN and are listed in `failed`.
    SkipAndMark,
}

/// Lowest bands over a bias grid, shifted so the minimum of the lowest band is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub spec: CircuitSpec,
    pub cutoffs: Cutoffs,
    pub bias: Vec<f64>,
    /// `energies[j][s]`, ascending in `s`. Non-finite entries serialize as null.
    #[serde(with = "nan_as_null")]
    pub energies: Vec<Vec<f64>>,
    /// Absolute energy subtracted from every entry.
    pub origin: f64,
    /// Set once the bands are divided by a critical-impedance reference level.
    pub rescale_reference: Option<f64>,
    pub failed: Vec<usize>,
}

impl BandStructure {
    /// Bands given directly, e.g. synthetic ones in units of `ħΔ`. Shifts by the
    /// lowest-band minimum like a computed sweep does.
    pub fn from_levels(
        spec: CircuitSpec,
        bias: Vec<f64>,
        mut energies: Vec<Vec<f64>>,
        rescale_reference: Option<f64>,
    ) -> Result<Self> {
        if bias.len() != energies.len() {
            return Err(invalid("energies", format!("{} rows for {} bias points", energies.len(), bias.len())));
        }
        let origin = lowest_band_minimum(&energies);
        for row in &mut energies {
            row.iter_mut().for_each(|e| *e -= origin);
        }
        Ok(BandStructure {
            spec,
            cutoffs: Cutoffs::defaults_for(&spec),
            bias,
            energies,
            origin,
            rescale_reference,
            failed: Vec::new(),
        })
    }

    pub fn n_bands(&self) -> usize {
        self.energies.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn band(&self, s: usize) -> Vec<f64> {
        self.energies.iter().map(|row| row.get(s).copied().unwrap_or(f64::NAN)).collect()
    }

    /// Grid index of the bias closest to `xi`, if within `1e-12`.
    pub fn index_of(&self, xi: f64) -> Option<usize> {
        self.bias.iter().position(|&b| (b - xi).abs() <= 1e-12)
    }

    /// Largest `|E(ξ) - E(-ξ)|` over mirrored grid pairs.
    pub fn mirror_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (j, &b) in self.bias.iter().enumerate() {
            if let Some(m) = self.index_of(-b) {
                for (x, y) in self.energies[j].iter().zip(&self.energies[m]) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Option<f64>>> =
            rows.iter().map(|r| r.iter().map(|&x| x.is_finite().then_some(x)).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Option<f64>>> = Deserialize::deserialize(d)?;
        Ok(rows.into_iter().map(|r| r.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect()).collect())
    }
}

fn lowest_band_minimum(energies: &[Vec<f64>]) -> f64 {
    energies.iter().filter_map(|r| r.first().copied()).filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min)
}

/// `points` biases on `[0, 1/2]` mirrored onto `[-1/2, 1/2]`, ascending.
pub fn default_bias_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    let half: Vec<f64> = (0..points).map(|i| 0.5 * i as f64 / (points - 1) as f64).collect();
    let mut grid: Vec<f64> = half.iter().skip(1).rev().map(|x| -x).collect();
    grid.extend(half);
    grid
}

/// Lowest `n_bands` levels at every bias of `grid`. Only `|ξ|` is solved;
/// the negative half is filled by mirror symmetry.
pub fn band_sweep(
    template: &CircuitSpec,
    grid: &[f64],
    n_bands: usize,
    cutoffs: &Cutoffs,
    opts: &SolverOptions,
    policy: SweepPolicy,
) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(invalid("n_bands", "must be >= 1"));
    }
    if let Some(&b) = grid.iter().find(|b| !(b.abs() <= 0.5)) {
        return Err(invalid("bias", format!("grid point {b} outside [-1/2, 1/2]")));
    }
    let key = |x: f64| (x.abs() * 1e12).round() as i64;
    let mut unique: Vec<f64> = grid.iter().map(|b| b.abs()).collect();
    unique.sort_by(|a, b| a.partial_cmp(b).unwrap());
    unique.dedup_by(|a, b| key(*a) == key(*b));

    let solved: Vec<Result<Vec<f64>>> = unique
        .par_iter()
        .map(|&xi| spectrum(&template.with_bias(xi), cutoffs, n_bands, opts).map(|r| r.energies))
        .collect();

    let mut energies = Vec::with_capacity(grid.len());
    let mut failed = Vec::new();
    for (j, &b) in grid.iter().enumerate() {
        let u = unique.iter().position(|&x| key(x) == key(b)).expect("grid point solved");
        match &solved[u] {
            Ok(levels) if levels.len() >= n_bands => energies.push(levels[..n_bands].to_vec()),
            Ok(levels) => {
                let e = Error::CutoffSaturation {
                    what: "basis",
                    cutoff: levels.len(),
                    detail: format!("only {} levels for {n_bands} bands", levels.len()),
                };
                match policy {
                    SweepPolicy::FailFast => return Err(Error::SweepPoint { index: j, bias: b, source: Box::new(e) }),
                    SweepPolicy::SkipAndMark => {
                        failed.push(j);
                        energies.push(vec![f64::NAN; n_bands]);
                    }
                }
            }
            Err(e) => match policy {
                SweepPolicy::FailFast => return Err(Error::SweepPoint { index: j, bias: b, source: Box::new(e.clone()) }),
                SweepPolicy::SkipAndMark => {
                    failed.push(j);
                    energies.push(vec![f64::NAN; n_bands]);
                }
            },
        }
    }
    let origin = lowest_band_minimum(&energies);
    for row in &mut energies {
        row.iter_mut().for_each(|e| *e -= origin);
    }
    Ok(BandStructure {
        spec: *template,
        cutoffs: *cutoffs,
        bias: grid.to_vec(),
        energies,
        origin,
        rescale_reference: None,
        failed,
    })
}

/// Third level at zero bias of a critical-impedance sweep.
pub fn reference_level(reference: &BandStructure) -> Result<f64> {
    let j = reference
        .index_of(0.0)
        .ok_or_else(|| Error::MissingReference("reference grid has no zero-bias point".into()))?;
    if reference.failed.contains(&j) {
        return Err(Error::MissingReference("zero-bias point of the reference failed".into()));
    }
    let e3 = reference.energies[j]
        .get(2)
        .copied()
        .ok_or_else(|| Error::MissingReference("reference has fewer than three bands".into()))?;
    if !(e3 > 0.0 && e3.is_finite()) {
        return Err(Error::MissingReference(format!("third level {e3} is not positive")));
    }
    Ok(e3)
}

/// Divides every energy by the reference's third level at zero bias.
pub fn rescale_bands(bands: &BandStructure, reference: &BandStructure) -> Result<BandStructure> {
    if bands.rescale_reference.is_some() {
        return Err(invalid("bands", "already rescaled"));
    }
    if reference.rescale_reference.is_some() {
        return Err(invalid("reference", "must be an unscaled sweep"));
    }
    if reference.spec.boundary != bands.spec.boundary || reference.spec.n_modes != bands.spec.n_modes {
        return Err(invalid("reference", "must share the boundary and N_m of the bands"));
    }
    let e3 = reference_level(reference)?;
    let mut out = bands.clone();
    for row in &mut out.energies {
        row.iter_mut().for_each(|e| *e /= e3);
    }
    out.rescale_reference = Some(e3);
    Ok(out)
}

/// Bias positions of the local minima of the gap between bands `s` and `s + 1`,
/// restricted to `ξ >= 0`. The endpoints `0` and `1/2` are symmetry points and
/// count as minima when the gap rises away from them.
pub fn anticrossings(bands: &BandStructure, s: usize) -> Vec<f64> {
    let mut half: Vec<(f64, f64)> = bands
        .bias
        .iter()
        .zip(&bands.energies)
        .filter(|(b, _)| **b >= 0.0)
        .filter_map(|(&b, row)| Some((b, row.get(s + 1)? - row.get(s)?)))
        .filter(|(_, g)| g.is_finite())
        .collect();
    half.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = half.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left = if i > 0 { half[i - 1].1 } else { f64::INFINITY };
        let right = if i + 1 < n { half[i + 1].1 } else { f64::INFINITY };
        if half[i].1 < left && half[i].1 <= right {
            out.push(half[i].0);
        }
    }
    out
}
