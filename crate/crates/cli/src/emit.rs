//! CSV tables and JSON records.
//!
//! CSV energies are divided by `E_C` and labelled `[E_C]`; rescaled band
//! columns carry a `_rescaled` suffix instead. Impedances are in `R_q`.
//! Floats are written as the shortest decimal that parses back to the same
//! value; `NaN` marks a failed sweep point and an empty cell a value that is
//! undefined (e.g. `F(E_J)` outside the common mobility range).

use crate::cache::write_atomic;
use crate::config::Format;
use crate::error::CliError;
use crate::record::{Payload, ResultRecord};
use jjline::Boundary;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let mut b = ryu::Buffer::new();
    let s = b.format(x);
    s.strip_suffix(".0").unwrap_or(s).to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn mobility_name(b: Boundary) -> &'static str {
    match b {
        Boundary::OpenEnd => "mu",
        Boundary::ShortEnd => "mu_bar",
    }
}

/// CSV tables of a record as `(file suffix, table)`; the main table has an empty suffix.
pub fn tables(record: &ResultRecord) -> Vec<(&'static str, Table)> {
    let e_c = record.config.circuit.e_c;
    match &record.payload {
        Payload::Modes(m) => {
            let mut t = Table::new(
                ["k", "Omega[E_C]", "f[E_C]", "omega[E_C]", "g[E_C]"].map(String::from).to_vec(),
            );
            for k in 0..m.bath.len() {
                let cg = m.charge_gauge.as_ref();
                t.rows.push(vec![
                    (k + 1).to_string(),
                    num(m.bath.frequencies[k] / e_c),
                    num(m.bath.couplings[k] / e_c),
                    opt(cg.map(|c| c.frequencies[k] / e_c)),
                    opt(cg.map(|c| c.couplings[k] / e_c)),
                ]);
            }
            let mut s = Table::new(
                ["Delta[E_C]", "E_L[E_C]", "sum_rule_residual[E_C]", "E_C_tilde[E_C]", "josephson_suppression"]
                    .map(String::from)
                    .to_vec(),
            );
            let cg = m.charge_gauge.as_ref();
            s.rows.push(vec![
                num(m.spacing / e_c),
                num(2.0 * m.bath.inductive_scale / e_c),
                num(m.sum_rule_residual / e_c),
                opt(cg.map(|c| c.e_c_tilde / e_c)),
                opt(cg.map(|c| c.josephson_suppression)),
            ]);
            vec![("", t), ("-summary", s)]
        }
        Payload::Bands(b) => vec![("", band_table(b, record.config.numerics.n_bands, e_c))],
        Payload::Fit(f) => {
            let n = f.fit.band_residuals.len();
            let mut header: Vec<String> = ["E_J[E_C]", "Z[R_q]", "n_modes", mobility_name(f.bands.spec.boundary), "rms_rescaled"]
                .map(String::from)
                .to_vec();
            header.extend((1..=n).map(|s| format!("rms_band{s}_rescaled")));
            header.extend(["fitted_band", "grid_size", "at_bound", "flagged"].map(String::from));
            let mut t = Table::new(header);
            let s = &f.bands.spec;
            let mut row = vec![num(s.e_j / e_c), num(s.z_ratio), s.n_modes.to_string(), num(f.fit.mu), num(f.fit.rms_residual)];
            row.extend(f.fit.band_residuals.iter().map(|&r| num(r)));
            row.extend([
                (f.fit.band_index + 1).to_string(),
                f.fit.grid_size.to_string(),
                f.fit.at_bound.to_string(),
                f.fit.flagged.to_string(),
            ]);
            t.rows.push(row);
            vec![("", t)]
        }
        Payload::Duality(d) => {
            let mut t = Table::new(
                ["E_J[E_C]", "mu", "mu_bar", "F[E_C]", "flagged"].map(String::from).to_vec(),
            );
            for ((e, c), (_, f)) in d.charge_fits.iter().zip(&d.flux_fits) {
                let image = d.map.apply(*e).ok().flatten();
                t.rows.push(vec![
                    num(e / e_c),
                    num(c.mu),
                    num(f.mu),
                    opt(image.map(|x| x / e_c)),
                    (c.flagged || f.flagged).to_string(),
                ]);
            }
            let mut s = Table::new(
                ["E_J_star[E_C]", "mu_interpolated", "mu_direct", "F_star[E_C]"].map(String::from).to_vec(),
            );
            if let Some(star) = d.map.self_dual_point {
                s.rows.push(vec![
                    num(star / e_c),
                    num(0.5),
                    opt(d.self_dual_fit.as_ref().map(|f| f.mu)),
                    opt(d.map.apply(star).ok().flatten().map(|x| x / e_c)),
                ]);
            }
            vec![("", t), ("-self-dual", s)]
        }
        Payload::Spectroscopy(curves) => {
            let normalized = curves.iter().any(|c| c.normalized);
            let d = if normalized { "D_normalized" } else { "D" };
            let mut t = Table::new(vec!["E_J[E_C]".into(), "omega[E_C]".into(), d.into()]);
            let mut p = Table::new(["E_J[E_C]", "energy[E_C]", "weight"].map(String::from).to_vec());
            for c in curves {
                for (w, v) in c.omega.iter().zip(&c.values) {
                    t.rows.push(vec![num(c.spec.e_j / e_c), num(w / e_c), num(*v)]);
                }
                for pk in &c.peaks {
                    p.rows.push(vec![num(c.spec.e_j / e_c), num(pk.energy / e_c), num(pk.weight)]);
                }
            }
            vec![("", t), ("-peaks", p)]
        }
        Payload::Heatmap(h) => {
            let mut t = Table::new(
                ["Z[R_q]", "E_J[E_C]", mobility_name(h.boundary), "rms_rescaled", "at_bound", "flagged"]
                    .map(String::from)
                    .to_vec(),
            );
            for c in &h.cells {
                t.rows.push(vec![
                    num(c.z_ratio),
                    num(c.e_j / e_c),
                    num(c.fit.mu),
                    num(c.fit.rms_residual),
                    c.fit.at_bound.to_string(),
                    c.fit.flagged.to_string(),
                ]);
            }
            vec![("", t)]
        }
        Payload::Verify(outcomes) => {
            let mut t = Table::new(["property", "passed", "detail"].map(String::from).to_vec());
            for o in outcomes {
                t.rows.push(vec![o.name.clone(), o.passed.to_string(), o.detail.clone()]);
            }
            vec![("", t)]
        }
    }
}

/// Band table; the column count follows `n_bands` so an empty sweep still has a full header.
pub fn band_table(b: &jjline::analysis::BandStructure, n_bands: usize, e_c: f64) -> Table {
    let rescaled = b.rescale_reference.is_some();
    let mut header = vec![b.spec.boundary.bias_name().to_string()];
    header.extend((1..=n_bands).map(|s| if rescaled { format!("E{s}_rescaled") } else { format!("E{s}[E_C]") }));
    let mut t = Table::new(header);
    let scale = if rescaled { 1.0 } else { 1.0 / e_c };
    for (xi, row) in b.bias.iter().zip(&b.energies) {
        let mut r = vec![num(*xi)];
        r.extend((0..n_bands).map(|s| row.get(s).map_or_else(|| "NaN".into(), |&e| num(e * scale))));
        t.rows.push(r);
    }
    t
}

/// Record without its payload, written next to CSV tables.
#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    key: &'a str,
    command: &'a str,
    config: &'a crate::config::RunConfig,
    provenance: &'a crate::record::Provenance,
}

pub fn record_json(record: &ResultRecord) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(record).expect("records serialize");
    v.push(b'\n');
    v
}

pub fn read_record(path: &Path) -> Result<ResultRecord, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

/// Writes one record; returns the paths written, in order.
pub fn emit_results(record: &ResultRecord, stem: &str, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    match format {
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            write_atomic(dir, &path, &record_json(record))?;
            written.push(path);
        }
        Format::Csv => {
            for (suffix, table) in tables(record) {
                let path = dir.join(format!("{stem}{suffix}.csv"));
                write_atomic(dir, &path, &table.to_csv())?;
                written.push(path);
            }
            let meta = Metadata {
                schema_version: record.schema_version,
                key: &record.key,
                command: &record.command,
                config: &record.config,
                provenance: &record.provenance,
            };
            let mut bytes = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
            bytes.push(b'\n');
            let path = dir.join(format!("{stem}.provenance.json"));
            write_atomic(dir, &path, &bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_decimals() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.5), "-0.5");
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(num(f64::NAN), "NaN");
        for x in [1.0 / 3.0, 2.0_f64.sqrt(), 6.02214076e23, 5e-324] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.rows.push(vec!["x, y".into(), "1".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "a,b\n\"x, y\",1\n");
    }
}
