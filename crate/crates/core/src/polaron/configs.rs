use crate::error::{invalid, Error, Result};
use std::collections::HashMap;

/// Energy-truncated set of photon occupation vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonConfigSet {
    pub frequencies: Vec<f64>,
    pub energy_cutoff: f64,
    occupations: Vec<u16>,
    energies: Vec<f64>,
    index: HashMap<Vec<u16>, usize>,
}

impl PhotonConfigSet {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn config(&self, i: usize) -> &[u16] {
        let m = self.n_modes();
        &self.occupations[i * m..(i + 1) * m]
    }

    /// `Σ_k n_k ω_k` of configuration `i`.
    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn position(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u16]> {
        (0..self.len()).map(move |i| self.config(i))
    }

    /// Largest occupation of any mode.
    pub fn max_occupation(&self) -> usize {
        self.occupations.iter().copied().max().unwrap_or(0) as usize
    }
}

/// All occupation vectors with `Σ n_k ω_k < e_cut`, ordered by (energy, vector).
pub fn build_photon_configs(frequencies: &[f64], e_cut: f64, max_configs: usize) -> Result<PhotonConfigSet> {
    if !(e_cut > 0.0 && e_cut.is_finite()) {
        return Err(invalid("energy_cutoff", format!("must be finite and > 0, got {e_cut}")));
    }
    if let Some((i, &w)) = frequencies.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::NonPositiveFrequency { context: "photon configurations".into(), index: i, value: w });
    }
    let m = frequencies.len();
    let mut found: Vec<(f64, Vec<u16>)> = Vec::new();
    let mut current = vec![0u16; m];
    fn walk(
        k: usize,
        energy: f64,
        freqs: &[f64],
        e_cut: f64,
        current: &mut Vec<u16>,
        found: &mut Vec<(f64, Vec<u16>)>,
        max: usize,
    ) -> bool {
        if k == freqs.len() {
            found.push((energy, current.clone()));
            return found.len() <= max;
        }
        let mut n = 0u16;
        loop {
            let e = energy + n as f64 * freqs[k];
            if e >= e_cut {
                break;
            }
            current[k] = n;
            if !walk(k + 1, e, freqs, e_cut, current, found, max) {
                return false;
            }
            n += 1;
        }
        current[k] = 0;
        true
    }
    if !walk(0, 0.0, frequencies, e_cut, &mut current, &mut found, max_configs) {
        return Err(Error::BasisOverflow { what: "photon configurations", size: found.len(), max: max_configs });
    }
    // recompute energies in a fixed summation order before sorting
    for (e, occ) in found.iter_mut() {
        *e = occ.iter().zip(frequencies).map(|(&n, w)| n as f64 * w).sum();
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut occupations = Vec::with_capacity(found.len() * m);
    let mut energies = Vec::with_capacity(found.len());
    let mut index = HashMap::with_capacity(found.len());
    for (i, (e, occ)) in found.into_iter().enumerate() {
        occupations.extend_from_slice(&occ);
        energies.push(e);
        index.insert(occ, i);
    }
    Ok(PhotonConfigSet { frequencies: frequencies.to_vec(), energy_cutoff: e_cut, occupations, energies, index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_modes_by_hand() {
        let set = build_photon_configs(&[1.0, 2.0], 2.5, 100).unwrap();
        let got: Vec<Vec<u16>> = set.iter().map(|c| c.to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0]]);
    }

    #[test]
    fn vacuum_only_below_lowest_frequency() {
        let set = build_photon_configs(&[0.7, 1.3], 0.7, 10).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.config(0), &[0, 0]);
    }

    #[test]
    fn overflow_is_reported() {
        let err = build_photon_configs(&[0.1, 0.1, 0.1], 3.0, 50).unwrap_err();
        assert!(matches!(err, Error::BasisOverflow { .. }));
    }

    #[test]
    fn downward_closed_and_indexed() {
        let set = build_photon_configs(&[0.4, 0.9, 1.1, 1.7], 4.0, 10_000).unwrap();
        for (i, c) in set.iter().enumerate() {
            assert_eq!(set.position(c), Some(i));
            for k in 0..c.len() {
                if c[k] > 0 {
                    let mut lower = c.to_vec();
                    lower[k] -= 1;
                    assert!(set.position(&lower).is_some());
                }
            }
        }
        assert!(set.iter().enumerate().all(|(i, _)| set.energy(i) < 4.0));
    }
}
