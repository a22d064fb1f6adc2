use std::path::Path;

use crate::CliError;

/// Smallest accepted sample.
pub const MIN_OBSERVATIONS: usize = 10;

/// Reads a two-column CSV of observations. A first row that does not parse
/// as numbers is taken to be a header.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::usage(format!("{}: line {line}: {e}", path.display())))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed = match (record.len(), record.get(0), record.get(1)) {
            (2, Some(x), Some(y)) => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((x, y)) if x.is_finite() && y.is_finite() => pairs.push((x, y)),
            None if i == 0 && record.len() == 2 => continue,
            _ => {
                return Err(CliError::usage(format!(
                    "{}: line {line}: expected two finite numbers, got `{}`",
                    path.display(),
                    record.iter().collect::<Vec<_>>().join(",")
                )))
            }
        }
    }
    if pairs.len() < MIN_OBSERVATIONS {
        return Err(CliError::usage(format!(
            "{}: {} observations, at least {MIN_OBSERVATIONS} needed",
            path.display(),
            pairs.len()
        )));
    }
    Ok(pairs)
}
