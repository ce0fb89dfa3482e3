//! Grid snapshot files.
//!
//! A snapshot starts with one header line
//!
//! ```text
//! # grazing-snapshot n=<n> v_max=<v_max> time=<t> eps=<eps> gamma=<gamma>
//! ```
//!
//! followed by the `n^3` node values with `i` varying fastest. Files ending in
//! `.bin` store the values as flat little-endian `f64`; anything else stores
//! one decimal value per line in round-trip precision.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Distribution, GridSpec};
use crate::{Error, Result};

const MAGIC: &str = "# grazing-snapshot";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Text,
    Binary,
}

impl SnapshotFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => Self::Binary,
            _ => Self::Text,
        }
    }
}

/// Metadata stored in a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub v_max: f64,
    pub time: f64,
    pub eps: f64,
    pub gamma: f64,
}

impl SnapshotHeader {
    fn line(&self) -> String {
        format!(
            "{MAGIC} n={} v_max={} time={} eps={} gamma={}\n",
            self.n, self.v_max, self.time, self.eps, self.gamma
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let rest = line
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Snapshot("missing snapshot header".into()))?;
        let mut n = None;
        let mut fields = [None; 4];
        for token in rest.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Snapshot(format!("malformed header field {token:?}")))?;
            let bad = || Error::Snapshot(format!("bad value for {key}: {value:?}"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "v_max" | "time" | "eps" | "gamma" => {
                    let slot = ["v_max", "time", "eps", "gamma"]
                        .iter()
                        .position(|k| *k == key)
                        .unwrap();
                    fields[slot] = Some(value.parse::<f64>().map_err(|_| bad())?);
                }
                _ => return Err(Error::Snapshot(format!("unknown header field {key:?}"))),
            }
        }
        let missing = |name: &str| Error::Snapshot(format!("header lacks {name}"));
        Ok(Self {
            n: n.ok_or_else(|| missing("n"))?,
            v_max: fields[0].ok_or_else(|| missing("v_max"))?,
            time: fields[1].ok_or_else(|| missing("time"))?,
            eps: fields[2].ok_or_else(|| missing("eps"))?,
            gamma: fields[3].ok_or_else(|| missing("gamma"))?,
        })
    }
}

/// Encodes a snapshot in memory.
pub fn encode_snapshot(f: &Distribution, header: &SnapshotHeader, format: SnapshotFormat) -> Vec<u8> {
    let mut out = header.line().into_bytes();
    match format {
        SnapshotFormat::Binary => {
            out.reserve(8 * f.values().len());
            for v in f.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        SnapshotFormat::Text => {
            for v in f.values() {
                writeln!(out, "{v}").expect("writing to a Vec cannot fail");
            }
        }
    }
    out
}

/// Writes `f` to `path`; the header's `n` and `v_max` are taken from `f`.
pub fn write_snapshot(path: &Path, f: &Distribution, time: f64, eps: f64, gamma: f64) -> Result<()> {
    let header = SnapshotHeader {
        n: f.grid().n(),
        v_max: f.grid().v_max(),
        time,
        eps,
        gamma,
    };
    fs::write(path, encode_snapshot(f, &header, SnapshotFormat::from_path(path)))?;
    Ok(())
}

/// Decodes a snapshot from bytes.
pub fn decode_snapshot(bytes: &[u8], format: SnapshotFormat) -> Result<(SnapshotHeader, Distribution)> {
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Snapshot("missing header line".into()))?;
    let line = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Snapshot("header is not UTF-8".into()))?;
    let header = SnapshotHeader::parse(line.trim_end())?;
    let grid = GridSpec::new(header.n, header.v_max)?;
    let body = &bytes[newline + 1..];
    let values: Vec<f64> = match format {
        SnapshotFormat::Binary => {
            if body.len() != 8 * grid.len() {
                return Err(Error::Snapshot(format!(
                    "expected {} bytes of data, found {}",
                    8 * grid.len(),
                    body.len()
                )));
            }
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }
        SnapshotFormat::Text => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::Snapshot("body is not UTF-8".into()))?;
            text.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Snapshot(format!("bad value {t:?}")))
                })
                .collect::<Result<_>>()?
        }
    };
    if values.len() != grid.len() {
        return Err(Error::Snapshot(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    Ok((header, Distribution::from_values(grid, values)?))
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Distribution)> {
    let bytes = fs::read(path)?;
    decode_snapshot(&bytes, SnapshotFormat::from_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    fn sample() -> Distribution {
        let g = GridSpec::new(8, 2.5).unwrap();
        Distribution::maxwellian(g, 1.0, Vec3::new(0.1, 0.0, -0.2), 0.7).unwrap()
    }

    #[test]
    fn round_trip_both_formats() {
        let f = sample();
        let header = SnapshotHeader {
            n: 8,
            v_max: 2.5,
            time: 0.125,
            eps: 0.1,
            gamma: -3.0,
        };
        for format in [SnapshotFormat::Text, SnapshotFormat::Binary] {
            let bytes = encode_snapshot(&f, &header, format);
            let (h, g) = decode_snapshot(&bytes, format).unwrap();
            assert_eq!(h, header);
            assert_eq!(g, f);
        }
    }

    #[test]
    fn rejects_truncated_data() {
        let f = sample();
        let header = SnapshotHeader {
            n: 8,
            v_max: 2.5,
            time: 0.0,
            eps: 1.0,
            gamma: -1.0,
        };
        let mut bytes = encode_snapshot(&f, &header, SnapshotFormat::Binary);
        bytes.truncate(bytes.len() - 8);
        assert!(decode_snapshot(&bytes, SnapshotFormat::Binary).is_err());
        assert!(decode_snapshot(b"n=8\n1\n", SnapshotFormat::Text).is_err());
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(SnapshotFormat::from_path(Path::new("a/f.bin")), SnapshotFormat::Binary);
        assert_eq!(SnapshotFormat::from_path(Path::new("f.txt")), SnapshotFormat::Text);
        assert_eq!(SnapshotFormat::from_path(Path::new("f")), SnapshotFormat::Text);
    }
}
