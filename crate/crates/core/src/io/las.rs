//! Minimal read-only LAS 1.2–1.4 reader.
//!
//! Only coordinates and the classification field are decoded; every other
//! attribute of the point record is skipped. Compressed (LAZ) data and point
//! formats 9 and 10 (waveform packets in the extended layout) are rejected.

use std::io::{Cursor, Seek, SeekFrom};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LASF";
const MIN_HEADER_SIZE: usize = 227;
const LAS14_HEADER_SIZE: usize = 375;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasHeaderSummary {
    pub version: (u8, u8),
    pub point_record_format: u8,
    pub point_count: u64,
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

/// Core record length for each supported point format.
fn base_record_length(format: u8) -> Option<usize> {
    Some(match format {
        0 => 20,
        1 => 28,
        2 => 26,
        3 => 34,
        4 => 57,
        5 => 63,
        6 => 30,
        7 => 36,
        8 => 38,
        _ => return None,
    })
}

pub fn read_las(path: impl AsRef<Path>) -> Result<(PointCloud, LasHeaderSummary)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    read_las_bytes(&bytes, path.display().to_string())
}

pub fn read_las_bytes(bytes: &[u8], source: impl Into<String>) -> Result<(PointCloud, LasHeaderSummary)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing LASF signature".into()));
    }
    if bytes.len() < MIN_HEADER_SIZE {
        return Err(Error::Corrupt {
            offset: bytes.len() as u64,
            reason: format!("header truncated, need at least {MIN_HEADER_SIZE} bytes"),
        });
    }
    let mut r = Cursor::new(bytes);
    r.seek(SeekFrom::Start(24))?;
    let major = r.read_u8()?;
    let minor = r.read_u8()?;
    if major != 1 || !(2..=4).contains(&minor) {
        return Err(Error::Unsupported(format!("LAS version {major}.{minor}")));
    }
    r.seek(SeekFrom::Start(94))?;
    let header_size = r.read_u16::<LittleEndian>()? as usize;
    let point_offset = r.read_u32::<LittleEndian>()? as u64;
    let _vlr_count = r.read_u32::<LittleEndian>()?;
    let raw_format = r.read_u8()?;
    let record_length = r.read_u16::<LittleEndian>()? as usize;
    let legacy_count = r.read_u32::<LittleEndian>()? as u64;

    if raw_format & 0xC0 != 0 {
        return Err(Error::Unsupported("compressed (LAZ) point data".into()));
    }
    let format = raw_format & 0x3F;
    let base_len = base_record_length(format)
        .ok_or_else(|| Error::Unsupported(format!("point record format {format}")))?;
    if record_length < base_len {
        return Err(Error::Format(format!(
            "record length {record_length} shorter than the {base_len} bytes format {format} requires"
        )));
    }

    r.seek(SeekFrom::Start(131))?;
    let mut scale = [0.0; 3];
    let mut offset = [0.0; 3];
    for s in &mut scale {
        *s = r.read_f64::<LittleEndian>()?;
    }
    for o in &mut offset {
        *o = r.read_f64::<LittleEndian>()?;
    }
    if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Format(format!("scale factors must be positive, got {scale:?}")));
    }

    let mut point_count = legacy_count;
    if minor >= 4 {
        if header_size < LAS14_HEADER_SIZE || bytes.len() < LAS14_HEADER_SIZE {
            return Err(Error::Corrupt {
                offset: bytes.len().min(header_size) as u64,
                reason: "LAS 1.4 header truncated".into(),
            });
        }
        r.seek(SeekFrom::Start(247))?;
        let extended = r.read_u64::<LittleEndian>()?;
        if legacy_count == 0 || extended != 0 {
            point_count = extended;
        }
    }

    let body_needed = point_count
        .checked_mul(record_length as u64)
        .and_then(|n| n.checked_add(point_offset))
        .ok_or_else(|| Error::Format("point count overflows the file size".into()))?;
    if (bytes.len() as u64) < body_needed {
        let complete = (bytes.len() as u64).saturating_sub(point_offset) / record_length as u64;
        return Err(Error::Corrupt {
            offset: point_offset + complete * record_length as u64,
            reason: format!("header declares {point_count} points but only {complete} complete records follow"),
        });
    }

    let class_offset = if format >= 6 { 16 } else { 15 };
    let mut points = Vec::with_capacity(point_count as usize);
    for i in 0..point_count {
        let start = (point_offset + i * record_length as u64) as usize;
        let rec = &bytes[start..start + record_length];
        let mut c = Cursor::new(rec);
        let raw = [
            c.read_i32::<LittleEndian>()?,
            c.read_i32::<LittleEndian>()?,
            c.read_i32::<LittleEndian>()?,
        ];
        let class_byte = rec[class_offset];
        let label = if format >= 6 { class_byte } else { class_byte & 0x1F };
        points.push(Point3 {
            x: raw[0] as f64 * scale[0] + offset[0],
            y: raw[1] as f64 * scale[1] + offset[1],
            z: raw[2] as f64 * scale[2] + offset[2],
            label: Some(label as u32),
        });
    }

    let summary = LasHeaderSummary {
        version: (major, minor),
        point_record_format: format,
        point_count,
        scale,
        offset,
    };
    let cloud = PointCloud::new(points, source)?;
    Ok((cloud, summary))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use byteorder::WriteBytesExt;

    /// Writes a minimal LAS file. Test fixture only.
    pub(crate) fn build_las(
        minor: u8,
        format: u8,
        scale: [f64; 3],
        offset: [f64; 3],
        records: &[([i32; 3], u8)],
        declared: u64,
    ) -> Vec<u8> {
        let header_size: u16 = if minor >= 4 { 375 } else { 227 };
        let rec_len = base_record_length(format).unwrap() as u16;
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.resize(24, 0);
        b.push(1);
        b.push(minor);
        b.resize(94, 0);
        b.write_u16::<LittleEndian>(header_size).unwrap();
        b.write_u32::<LittleEndian>(header_size as u32).unwrap();
        b.write_u32::<LittleEndian>(0).unwrap();
        b.push(format);
        b.write_u16::<LittleEndian>(rec_len).unwrap();
        b.write_u32::<LittleEndian>(if minor >= 4 { 0 } else { declared as u32 }).unwrap();
        b.resize(131, 0);
        for s in scale {
            b.write_f64::<LittleEndian>(s).unwrap();
        }
        for o in offset {
            b.write_f64::<LittleEndian>(o).unwrap();
        }
        b.resize(header_size as usize, 0);
        if minor >= 4 {
            b[247..255].copy_from_slice(&declared.to_le_bytes());
        }
        let class_offset = if format >= 6 { 16 } else { 15 };
        for (xyz, class) in records {
            let mut rec = vec![0u8; rec_len as usize];
            for (k, v) in xyz.iter().enumerate() {
                rec[4 * k..4 * k + 4].copy_from_slice(&v.to_le_bytes());
            }
            rec[class_offset] = *class;
            b.extend_from_slice(&rec);
        }
        b
    }

    #[test]
    fn applies_scale_and_offset() {
        let recs = [([100, 200, 300], 2), ([0, 0, 0], 6), ([-5, 10, 1], 5)];
        let bytes = build_las(2, 1, [0.01; 3], [0.0; 3], &recs, 3);
        let (cloud, header) = read_las_bytes(&bytes, "mem").unwrap();
        assert_eq!(header.point_count, 3);
        assert_eq!(cloud.len(), 3);
        let p = cloud.points[0];
        assert_eq!((p.x, p.y, p.z), (100.0 * 0.01, 200.0 * 0.01, 300.0 * 0.01));
        assert!((p.x - 1.0).abs() < 1e-12 && (p.z - 3.0).abs() < 1e-12);
        assert_eq!(cloud.labels().unwrap(), vec![2, 6, 5]);
        assert!(!cloud.normalized);
    }

    #[test]
    fn reconstructs_bit_exact_with_offset() {
        let recs = [([123456, -7, 99], 2)];
        let bytes = build_las(3, 3, [0.001, 0.01, 0.1], [500000.5, 4e6, -12.25], &recs, 1);
        let (cloud, h) = read_las_bytes(&bytes, "mem").unwrap();
        let p = cloud.points[0];
        assert_eq!(p.x, 123456.0 * 0.001 + 500000.5);
        assert_eq!(p.y, -7.0 * 0.01 + 4e6);
        assert_eq!(p.z, 99.0 * 0.1 + -12.25);
        assert_eq!(h.version, (1, 3));
    }

    #[test]
    fn las14_extended_format_uses_full_class_byte() {
        let recs = [([1, 2, 3], 40), ([4, 5, 6], 9)];
        let bytes = build_las(4, 6, [1.0; 3], [0.0; 3], &recs, 2);
        let (cloud, h) = read_las_bytes(&bytes, "mem").unwrap();
        assert_eq!(h.point_record_format, 6);
        assert_eq!(h.point_count, 2);
        assert_eq!(cloud.labels().unwrap(), vec![40, 9]);
    }

    #[test]
    fn truncated_body_is_corruption() {
        let recs: Vec<_> = (0..9).map(|i| ([i, i, i], 2u8)).collect();
        let bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &recs, 10);
        match read_las_bytes(&bytes, "mem") {
            Err(Error::Corrupt { offset, .. }) => assert_eq!(offset, 227 + 9 * 20),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_magic_version_and_format() {
        let mut bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &[([0, 0, 0], 1)], 1);
        bytes[0] = b'X';
        assert!(matches!(read_las_bytes(&bytes, "m"), Err(Error::Format(_))));

        let mut bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &[([0, 0, 0], 1)], 1);
        bytes[25] = 1;
        assert!(matches!(read_las_bytes(&bytes, "m"), Err(Error::Unsupported(_))));

        let mut bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &[([0, 0, 0], 1)], 1);
        bytes[104] = 9;
        assert!(matches!(read_las_bytes(&bytes, "m"), Err(Error::Unsupported(_))));

        let mut bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &[([0, 0, 0], 1)], 1);
        bytes[104] = 0x80 | 3;
        assert!(matches!(read_las_bytes(&bytes, "m"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn legacy_formats_mask_classification_flags() {
        // bits 5-7 are synthetic/key-point/withheld flags
        let bytes = build_las(2, 0, [1.0; 3], [0.0; 3], &[([0, 0, 0], 0b1010_0101)], 1);
        let (cloud, _) = read_las_bytes(&bytes, "m").unwrap();
        assert_eq!(cloud.points[0].label, Some(5));
    }
}
