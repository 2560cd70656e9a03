//! MetaImage (`.mhd` + `.raw`) reading and writing.
//!
//! Only uncompressed single-channel 3-D images are handled. The payload is
//! x-fastest, z-slowest; byte order defaults to little-endian.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    UChar,
    Short,
    UShort,
    Float,
}

impl ElementType {
    pub fn size(self) -> usize {
        match self {
            ElementType::UChar => 1,
            ElementType::Short | ElementType::UShort => 2,
            ElementType::Float => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementType::UChar => "MET_UCHAR",
            ElementType::Short => "MET_SHORT",
            ElementType::UShort => "MET_USHORT",
            ElementType::Float => "MET_FLOAT",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "MET_UCHAR" => Ok(ElementType::UChar),
            "MET_SHORT" => Ok(ElementType::Short),
            "MET_USHORT" => Ok(ElementType::UShort),
            "MET_FLOAT" => Ok(ElementType::Float),
            other => Err(Error::UnsupportedElementType(other.to_string())),
        }
    }
}

/// Parsed header of a MetaImage file.
#[derive(Clone, Debug, PartialEq)]
pub struct MhdHeader {
    pub geometry: Geometry,
    pub element_type: ElementType,
    pub big_endian: bool,
    /// `None` when the payload follows the header in the same file
    /// (`ElementDataFile = LOCAL`).
    pub data_file: Option<String>,
}

impl MhdHeader {
    /// Decodes a raw payload into grey values.
    pub fn decode(&self, raw: &[u8]) -> Result<Volume> {
        let count = self.geometry.voxel_count();
        let size = self.element_type.size();
        let expected = count * size;
        if raw.len() != expected {
            return Err(Error::DataSizeMismatch {
                expected,
                actual: raw.len(),
            });
        }
        let be = self.big_endian;
        let data: Vec<f64> = match self.element_type {
            ElementType::UChar => raw.iter().map(|&b| f64::from(b)).collect(),
            ElementType::Short => raw
                .chunks_exact(2)
                .map(|c| {
                    let b = [c[0], c[1]];
                    f64::from(if be {
                        i16::from_be_bytes(b)
                    } else {
                        i16::from_le_bytes(b)
                    })
                })
                .collect(),
            ElementType::UShort => raw
                .chunks_exact(2)
                .map(|c| {
                    let b = [c[0], c[1]];
                    f64::from(if be {
                        u16::from_be_bytes(b)
                    } else {
                        u16::from_le_bytes(b)
                    })
                })
                .collect(),
            ElementType::Float => raw
                .chunks_exact(4)
                .map(|c| {
                    let b = [c[0], c[1], c[2], c[3]];
                    f64::from(if be {
                        f32::from_be_bytes(b)
                    } else {
                        f32::from_le_bytes(b)
                    })
                })
                .collect(),
        };
        Volume::new(self.geometry, data)
    }

    /// Header text, terminated by the `ElementDataFile` line.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut s = String::new();
        let _ = writeln!(s, "ObjectType = Image");
        let _ = writeln!(s, "NDims = 3");
        let _ = writeln!(s, "BinaryData = True");
        let msb = if self.big_endian { "True" } else { "False" };
        let _ = writeln!(s, "BinaryDataByteOrderMSB = {msb}");
        let _ = writeln!(s, "CompressedData = False");
        let _ = writeln!(s, "DimSize = {} {} {}", g.dims[0], g.dims[1], g.dims[2]);
        let _ = writeln!(
            s,
            "ElementSpacing = {} {} {}",
            g.spacing[0], g.spacing[1], g.spacing[2]
        );
        let _ = writeln!(
            s,
            "Offset = {} {} {}",
            g.origin[0], g.origin[1], g.origin[2]
        );
        let _ = writeln!(s, "ElementType = {}", self.element_type.name());
        let _ = writeln!(
            s,
            "ElementDataFile = {}",
            self.data_file.as_deref().unwrap_or("LOCAL")
        );
        s
    }
}

fn header_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Header(format!("line {line}: {msg}"))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| header_err(line, format!("bad value {t:?} for {key}")))
        })
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(header_err(line, format!("bad boolean {value:?} for {key}"))),
    }
}

fn triple<T: Copy>(line: usize, key: &str, v: Vec<T>) -> Result<[T; 3]> {
    match v.as_slice() {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(header_err(
            line,
            format!("{key} needs 3 values, got {}", v.len()),
        )),
    }
}

/// Parses a header from the start of `bytes`.
///
/// Returns the header and the offset just past the `ElementDataFile` line,
/// which is where a `LOCAL` payload begins.
pub fn parse_mhd(bytes: &[u8]) -> Result<(MhdHeader, usize)> {
    let mut object_type = None;
    let mut ndims = None;
    let mut dims = None;
    let mut spacing = [1.0; 3];
    let mut origin = [0.0; 3];
    let mut element_type = None;
    let mut big_endian = false;
    let mut data_file = None;

    let mut pos = 0usize;
    let mut line_no = 0usize;
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |e| pos + e + 1);
        let raw_line = &bytes[pos..end];
        pos = end;
        line_no += 1;

        let line = std::str::from_utf8(raw_line)
            .map_err(|_| header_err(line_no, "header is not valid UTF-8"))?
            .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| header_err(line_no, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(header_err(line_no, format!("bad key {key:?}")));
        }

        match key {
            "ObjectType" => object_type = Some(value.to_string()),
            "NDims" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| header_err(line_no, format!("bad NDims {value:?}")))?;
                if n != 3 {
                    return Err(Error::UnsupportedDims(n));
                }
                ndims = Some(n);
            }
            "DimSize" => dims = Some(triple(line_no, key, parse_list(line_no, key, value)?)?),
            "ElementSpacing" | "ElementSize" => {
                spacing = triple(line_no, key, parse_list(line_no, key, value)?)?;
            }
            "Offset" | "Origin" | "Position" => {
                origin = triple(line_no, key, parse_list(line_no, key, value)?)?;
            }
            "ElementType" => element_type = Some(ElementType::parse(value)?),
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => {
                big_endian = parse_bool(line_no, key, value)?;
            }
            "CompressedData" => {
                if parse_bool(line_no, key, value)? {
                    return Err(header_err(line_no, "compressed payloads are not supported"));
                }
            }
            "ElementNumberOfChannels" => {
                if value != "1" {
                    return Err(header_err(
                        line_no,
                        "only single-channel images are supported",
                    ));
                }
            }
            "ElementDataFile" => {
                data_file = Some(if value.eq_ignore_ascii_case("LOCAL") {
                    None
                } else {
                    Some(value.to_string())
                });
                // payload or nothing follows
                break;
            }
            _ => {}
        }
    }

    match object_type.as_deref() {
        Some("Image") => {}
        Some(other) => return Err(Error::Header(format!("ObjectType {other:?} is not Image"))),
        None => return Err(Error::Header("missing ObjectType".into())),
    }
    if ndims.is_none() {
        return Err(Error::Header("missing NDims".into()));
    }
    let dims = dims.ok_or_else(|| Error::Header("missing DimSize".into()))?;
    let element_type = element_type.ok_or_else(|| Error::Header("missing ElementType".into()))?;
    let data_file = data_file.ok_or_else(|| Error::Header("missing ElementDataFile".into()))?;
    let geometry =
        Geometry::new(dims, spacing, origin).map_err(|e| Error::Header(e.to_string()))?;

    Ok((
        MhdHeader {
            geometry,
            element_type,
            big_endian,
            data_file,
        },
        pos,
    ))
}

/// Reads a volume. Integer element types are widened to `f64` exactly.
pub fn load_mhd(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, offset) = parse_mhd(&bytes)?;
    match &header.data_file {
        None => header.decode(&bytes[offset..]),
        Some(name) => {
            let raw_path = path.parent().unwrap_or(Path::new(".")).join(name);
            let raw = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
            header.decode(&raw)
        }
    }
}

/// Reads a mask; every non-zero voxel is set.
pub fn load_mask_mhd(path: impl AsRef<Path>) -> Result<Mask> {
    load_mhd(path).map(|v| Mask::from_volume(&v))
}

fn write_pair(path: &Path, header: &MhdHeader, payload: &[u8]) -> Result<()> {
    let raw_name = header
        .data_file
        .as_deref()
        .expect("paired writer always names a data file");
    let raw_path = path.parent().unwrap_or(Path::new(".")).join(raw_name);
    fs::write(path, header.to_text()).map_err(|e| Error::io(path, e))?;
    fs::write(&raw_path, payload).map_err(|e| Error::io(&raw_path, e))?;
    Ok(())
}

fn raw_name(path: &Path) -> Result<String> {
    path.with_extension("raw")
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no file name", path.display())))
}

/// Writes a mask as `MET_UCHAR` with values 0 and 1, payload next to the
/// header with a `.raw` extension.
pub fn save_mask_mhd(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if mask.geometry().voxel_count() == 0 {
        return Err(Error::InvalidParameter("mask has empty dimensions".into()));
    }
    let header = MhdHeader {
        geometry: *mask.geometry(),
        element_type: ElementType::UChar,
        big_endian: false,
        data_file: Some(raw_name(path)?),
    };
    write_pair(path, &header, &mask.to_bytes())
}

/// Writes a volume as little-endian `MET_FLOAT`.
pub fn save_volume_mhd(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = MhdHeader {
        geometry: *volume.geometry(),
        element_type: ElementType::Float,
        big_endian: false,
        data_file: Some(raw_name(path)?),
    };
    let payload: Vec<u8> = volume
        .data()
        .iter()
        .flat_map(|&g| (g as f32).to_le_bytes())
        .collect();
    write_pair(path, &header, &payload)
}

/// Single-file (`ElementDataFile = LOCAL`) encoding of a mask.
pub fn mask_to_local_mhd(mask: &Mask) -> Vec<u8> {
    let header = MhdHeader {
        geometry: *mask.geometry(),
        element_type: ElementType::UChar,
        big_endian: false,
        data_file: None,
    };
    let mut out = header.to_text().into_bytes();
    out.extend(mask.to_bytes());
    out
}

/// Single-file (`ElementDataFile = LOCAL`) encoding of a volume as
/// little-endian `MET_FLOAT`.
pub fn volume_to_local_mhd(volume: &Volume) -> Vec<u8> {
    let header = MhdHeader {
        geometry: *volume.geometry(),
        element_type: ElementType::Float,
        big_endian: false,
        data_file: None,
    };
    let mut out = header.to_text().into_bytes();
    out.extend(volume.data().iter().flat_map(|&g| (g as f32).to_le_bytes()));
    out
}

/// Decodes an in-memory header plus payload. A `LOCAL` header carries its
/// own payload and `raw` must then be `None`.
pub fn decode_mhd(header_bytes: &[u8], raw: Option<&[u8]>) -> Result<Volume> {
    let (header, offset) = parse_mhd(header_bytes)?;
    match (&header.data_file, raw) {
        (_, Some(raw)) => header.decode(raw),
        (None, None) => header.decode(&header_bytes[offset..]),
        (Some(name), None) => Err(Error::Header(format!(
            "payload {name:?} referenced by the header was not provided"
        ))),
    }
}
