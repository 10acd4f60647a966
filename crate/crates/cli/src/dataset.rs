use std::path::Path;

use meterdp::CountVector;

use crate::CliError;

/// Column sums of a 0/1 CSV with a header row of predicate names. Reads one
/// record at a time.
pub fn load_dataset(path: &Path) -> Result<CountVector, CliError> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let parse_err = |row: u64, column: usize, message: String| CliError::Parse {
        path: name.clone(),
        row,
        column,
        message,
    };
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, 0, e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) && header.len() <= 1 {
        return Err(parse_err(1, 0, "empty file: expected a header row".into()));
    }
    let d = header.len();
    let mut sums = vec![0u64; d];
    let mut n = 0u64;
    let mut record = csv::StringRecord::new();
    loop {
        // Row numbers count the header as row 1.
        let row = n + 2;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(row, 0, e.to_string())),
        }
        if record.len() != d {
            return Err(parse_err(
                row,
                record.len().min(d) + 1,
                format!("expected {d} fields, found {}", record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            match cell.trim() {
                "0" => {}
                "1" => sums[j] += 1,
                other => {
                    return Err(parse_err(
                        row,
                        j + 1,
                        format!("expected 0 or 1, found {other:?}"),
                    ));
                }
            }
        }
        n += 1;
    }
    CountVector::new(n, sums).map_err(CliError::from)
}
