//! Measure files: JSON (`schema_version`, `ambient_dim`, `points`, `weights`)
//! or CSV with header `x0,…,x{d-1},w`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fracproj::{DiscreteMeasure, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv || !text.trim_start().starts_with('{') {
        return measure_from_csv(&text).with_context(|| format!("parsing {}", path.display()));
    }
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn measure_from_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[header.len() - 1] != "w" {
        bail!("CSV measure needs columns x0,...,w");
    }
    let dim = header.len() - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for row in reader.records() {
        let row = row?;
        for k in 0..dim {
            coords.push(row[k].trim().parse::<f64>()?);
        }
        weights.push(row[dim].trim().parse::<f64>()?);
    }
    Ok(DiscreteMeasure::new(PointCloud::new(dim, coords)?, weights)?)
}

pub fn render_measure(mu: &DiscreteMeasure, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string(mu)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = (0..mu.dim()).map(|k| format!("x{k}")).collect();
            header.push("w".into());
            writer.write_record(&header)?;
            for i in 0..mu.len() {
                let mut row: Vec<String> = mu.point(i).iter().map(|x| format!("{x:?}")).collect();
                row.push(format!("{:?}", mu.weights()[i]));
                writer.write_record(&row)?;
            }
            Ok(String::from_utf8(writer.into_inner()?)?)
        }
    }
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_series(dir: &Path, series: &fracproj::experiments::Series) -> Result<()> {
    let mut text = String::new();
    for (x, y) in &series.points {
        text.push_str(&format!("{x:?} {y:?}\n"));
    }
    let path = dir.join(format!("{}.dat", series.name));
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mu = fracproj::cantor_measure(3).unwrap();
        let text = render_measure(&mu, Format::Csv).unwrap();
        assert!(text.starts_with("x0,w\n"));
        assert_eq!(measure_from_csv(&text).unwrap(), mu);
    }
}
