//! Point cloud ingestion from LAS and CSV.

mod csv;
mod las;

pub use self::csv::read_csv;
pub use self::las::{read_las, read_las_bytes, LasHeaderSummary};
