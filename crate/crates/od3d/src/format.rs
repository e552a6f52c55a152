//! Bit-exact binary persistence for [`ODTensor`].
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! magic  "OD3D"                     4 bytes
//! version        u16 = 1
//! category       u16 (0 = unspecified, 1 = specified)
//! year           u32
//! n_ics          u32
//! n_days         u32
//! offsets        n_days x u64      absolute offset of each day slab
//! slabs          per day: u64 nnz, then nnz x (u32 i, u32 j, u32 count)
//!                sorted by (i, j), zero counts never stored
//! total          u64               sum of every count
//! checksum       u32               CRC-32 over all preceding bytes
//! ```
//!
//! Saving is canonical: a loaded tensor re-saves to identical bytes.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::calendar::days_in_year;
use crate::model::TimeCategory;
use crate::tensor::{Cell, ODTensor};

pub const MAGIC: [u8; 4] = *b"OD3D";
pub const VERSION: u16 = 1;

const HEADER_LEN: u64 = 20;
const SLAB_HEADER_LEN: u64 = 8;
const CELL_LEN: u64 = 12;
const FOOTER_LEN: u64 = 8 + 4; // total + checksum

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a tensor file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated")]
    Truncated,
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid category code {0}")]
    BadCategory(u16),
    #[error("day count {n_days} impossible for year {year}")]
    BadDayCount { year: i32, n_days: u32 },
    #[error("slab offset table is inconsistent")]
    BadOffsets,
    #[error("day {day} slab is malformed: {reason}")]
    BadSlab { day: u32, reason: &'static str },
    #[error("stored total {stored} != sum of cells {computed}")]
    TotalMismatch { stored: u64, computed: u64 },
    #[error("year {0} not representable in the file format")]
    BadYear(i32),
}

/// Parsed file header, including the slab offset table.
#[derive(Debug, Clone)]
pub struct TensorFileHeader {
    pub version: u16,
    pub category: TimeCategory,
    pub year: i32,
    pub n_ics: u32,
    pub n_days: u32,
    pub offsets: Vec<u64>,
}

/// Cheap per-file facts for inspection without decoding cells.
#[derive(Debug, Clone)]
pub struct TensorSummary {
    pub version: u16,
    pub category: TimeCategory,
    pub year: i32,
    pub n_ics: u32,
    pub n_days: u32,
    pub total: u64,
    pub nonzero_cells: u64,
    pub file_bytes: u64,
}

/// Serializes a tensor to its canonical byte form.
pub fn to_bytes(tensor: &ODTensor) -> Result<Vec<u8>, FormatError> {
    let year = u32::try_from(tensor.year()).map_err(|_| FormatError::BadYear(tensor.year()))?;
    let n_days = tensor.n_days() as u64;
    let nnz: u64 = tensor.nonzero_cells();
    let body_len = HEADER_LEN + 8 * n_days + SLAB_HEADER_LEN * n_days + CELL_LEN * nnz + FOOTER_LEN;
    let mut buf = Vec::with_capacity(body_len as usize);

    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&tensor.category().code().to_le_bytes());
    buf.extend_from_slice(&year.to_le_bytes());
    buf.extend_from_slice(&tensor.n_ics().to_le_bytes());
    buf.extend_from_slice(&tensor.n_days().to_le_bytes());

    let mut offset = HEADER_LEN + 8 * n_days;
    for t in 0..tensor.n_days() {
        buf.extend_from_slice(&offset.to_le_bytes());
        offset += SLAB_HEADER_LEN + CELL_LEN * tensor.day_cells(t).len() as u64;
    }

    let mut total = 0u64;
    for t in 0..tensor.n_days() {
        let slab = tensor.day_cells(t);
        buf.extend_from_slice(&(slab.len() as u64).to_le_bytes());
        for c in slab {
            buf.extend_from_slice(&c.origin.to_le_bytes());
            buf.extend_from_slice(&c.dest.to_le_bytes());
            buf.extend_from_slice(&c.count.to_le_bytes());
            total += u64::from(c.count);
        }
    }

    buf.extend_from_slice(&total.to_le_bytes());
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

/// Writes a tensor file; returns the number of bytes written.
pub fn save(tensor: &ODTensor, path: impl AsRef<Path>) -> Result<u64, FormatError> {
    let bytes = to_bytes(tensor)?;
    fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated)?;
        if end > self.data.len() {
            return Err(FormatError::Truncated);
        }
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Checks magic, version and checksum, then parses the header.
///
/// The checksum is verified before anything after the version field is
/// interpreted, so any corruption in the metadata, offset table, slabs or
/// footer surfaces as [`FormatError::ChecksumMismatch`].
fn checked_cursor(data: &[u8]) -> Result<Cursor<'_>, FormatError> {
    if data.len() < 4 {
        return Err(FormatError::Truncated);
    }
    if data[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if data.len() < 6 {
        return Err(FormatError::Truncated);
    }
    let version = u16::from_le_bytes(data[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    if (data.len() as u64) < HEADER_LEN + FOOTER_LEN {
        return Err(FormatError::Truncated);
    }
    let body = &data[..data.len() - 4];
    let stored = u32::from_le_bytes(data[data.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }
    Ok(Cursor { data, pos: 6 })
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<TensorFileHeader, FormatError> {
    let category = cur.u16()?;
    let category = TimeCategory::from_code(category).ok_or(FormatError::BadCategory(category))?;
    let year = cur.u32()? as i32;
    let n_ics = cur.u32()?;
    let n_days = cur.u32()?;
    if n_days != days_in_year(year) {
        return Err(FormatError::BadDayCount { year, n_days });
    }
    let mut offsets = Vec::with_capacity(n_days as usize);
    for _ in 0..n_days {
        offsets.push(cur.u64()?);
    }
    Ok(TensorFileHeader {
        version: VERSION,
        category,
        year,
        n_ics,
        n_days,
        offsets,
    })
}

/// Validates the offset table and returns the byte length of each slab.
fn slab_lengths(header: &TensorFileHeader, file_len: u64) -> Result<Vec<u64>, FormatError> {
    let first = HEADER_LEN + 8 * u64::from(header.n_days);
    let slabs_end = file_len - FOOTER_LEN;
    let mut lengths = Vec::with_capacity(header.offsets.len());
    for (k, &off) in header.offsets.iter().enumerate() {
        let next = header.offsets.get(k + 1).copied().unwrap_or(slabs_end);
        if off >= next {
            return Err(FormatError::BadOffsets);
        }
        lengths.push(next - off);
    }
    if header.offsets.first().copied() != Some(first) {
        return Err(FormatError::BadOffsets);
    }
    for (day, &len) in lengths.iter().enumerate() {
        if len < SLAB_HEADER_LEN || (len - SLAB_HEADER_LEN) % CELL_LEN != 0 {
            return Err(FormatError::BadSlab {
                day: day as u32,
                reason: "length does not fit the cell layout",
            });
        }
    }
    Ok(lengths)
}

/// Decodes a tensor from bytes, verifying integrity and every invariant.
pub fn from_bytes(data: &[u8]) -> Result<ODTensor, FormatError> {
    let mut cur = checked_cursor(data)?;
    let header = parse_header(&mut cur)?;
    let lengths = slab_lengths(&header, data.len() as u64)?;

    let mut days = Vec::with_capacity(header.n_days as usize);
    let mut total = 0u64;
    for (day, &len) in lengths.iter().enumerate() {
        let day = day as u32;
        let nnz = cur.u64()?;
        if nnz != (len - SLAB_HEADER_LEN) / CELL_LEN {
            return Err(FormatError::BadSlab {
                day,
                reason: "nnz does not match slab length",
            });
        }
        let mut slab = Vec::with_capacity(nnz as usize);
        let mut prev: Option<(u32, u32)> = None;
        for _ in 0..nnz {
            let origin = cur.u32()?;
            let dest = cur.u32()?;
            let count = cur.u32()?;
            if origin >= header.n_ics || dest >= header.n_ics {
                return Err(FormatError::BadSlab {
                    day,
                    reason: "cell coordinates out of bounds",
                });
            }
            if count == 0 {
                return Err(FormatError::BadSlab {
                    day,
                    reason: "zero count stored",
                });
            }
            if let Some(p) = prev {
                if p >= (origin, dest) {
                    return Err(FormatError::BadSlab {
                        day,
                        reason: "cells not strictly sorted by (i, j)",
                    });
                }
            }
            prev = Some((origin, dest));
            total += u64::from(count);
            slab.push(Cell {
                origin,
                dest,
                count,
            });
        }
        days.push(slab);
    }

    let stored_total = cur.u64()?;
    if stored_total != total {
        return Err(FormatError::TotalMismatch {
            stored: stored_total,
            computed: total,
        });
    }
    Ok(ODTensor::from_slabs(
        header.year,
        header.category,
        header.n_ics,
        days,
    ))
}

/// Reads a tensor file.
pub fn load(path: impl AsRef<Path>) -> Result<ODTensor, FormatError> {
    from_bytes(&fs::read(path)?)
}

/// Reads header, footer total and cell count without decoding the slabs.
/// Integrity is still verified.
pub fn read_summary(path: impl AsRef<Path>) -> Result<TensorSummary, FormatError> {
    let data = fs::read(path)?;
    let mut cur = checked_cursor(&data)?;
    let header = parse_header(&mut cur)?;
    let lengths = slab_lengths(&header, data.len() as u64)?;
    let nonzero_cells = lengths
        .iter()
        .map(|l| (l - SLAB_HEADER_LEN) / CELL_LEN)
        .sum();
    let total_pos = data.len() - FOOTER_LEN as usize;
    let total = u64::from_le_bytes(data[total_pos..total_pos + 8].try_into().unwrap());
    Ok(TensorSummary {
        version: header.version,
        category: header.category,
        year: header.year,
        n_ics: header.n_ics,
        n_days: header.n_days,
        total,
        nonzero_cells,
        file_bytes: data.len() as u64,
    })
}
