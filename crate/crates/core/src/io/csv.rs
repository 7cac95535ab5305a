use std::path::Path;

use crate::cloud::{ClassLabel, Point3, PointCloud};
use crate::error::{Error, Result};

/// Reads `x,y,z[,label]` rows. A first row that does not parse as numbers is
/// treated as a header. Row numbers in errors are 1-based file lines.
pub fn read_csv(path: impl AsRef<Path>, has_label: bool) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, has_label, path.display().to_string())
}

pub(crate) fn parse_csv(text: &str, has_label: bool, source: String) -> Result<PointCloud> {
    let expected = if has_label { 4 } else { 3 };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            reason: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != expected {
            return Err(Error::Parse {
                row,
                reason: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let coords: std::result::Result<Vec<f64>, _> = record.iter().take(3).map(str::parse::<f64>).collect();
        let coords = match coords {
            Ok(c) => c,
            Err(_) if row == 1 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row,
                    reason: format!("non-numeric coordinate: {e}"),
                })
            }
        };
        let label = if has_label {
            let field = &record[3];
            Some(field.parse::<ClassLabel>().map_err(|e| Error::Parse {
                row,
                reason: format!("invalid label {field:?}: {e}"),
            })?)
        } else {
            None
        };
        points.push(Point3 {
            x: coords[0],
            y: coords[1],
            z: coords[2],
            label,
        });
    }
    PointCloud::new(points, source)
}
