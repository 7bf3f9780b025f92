//! Waveform CSV files and JSON configs.
//!
//! A waveform file starts with `# fs=<Hz> t0=<s> unit=<string>`; further
//! `key=value` pairs on that line are kept as metadata. Each following line
//! holds one sample. Blank lines and later `#` lines are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::Waveform;

/// A waveform plus the header's extra `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFile {
    pub waveform: Waveform,
    pub metadata: BTreeMap<String, String>,
}

fn parse_header(line: &str) -> Result<(f64, f64, String, BTreeMap<String, String>)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "expected header `# fs=<Hz> t0=<s> unit=<string>`".into(),
        })?;
    let mut fields = BTreeMap::new();
    for token in body.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header field {token:?} is not key=value"),
        })?;
        fields.insert(k.to_string(), v.to_string());
    }
    let mut number = |key: &str| -> Result<f64> {
        let v = fields.remove(key).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header lacks {key}="),
        })?;
        v.parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("{key}={v} is not a number"),
        })
    };
    let fs = number("fs")?;
    let t0 = number("t0")?;
    let unit = fields.remove("unit").unwrap_or_default();
    Ok((fs, t0, unit, fields))
}

/// Reads a waveform CSV from any reader.
pub fn read_waveform(reader: impl Read) -> Result<WaveformFile> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let (fs, t0, unit, metadata) = parse_header(header.trim())?;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let value = text.split(',').next().unwrap_or("").trim();
        let x: f64 = value.parse().map_err(|_| Error::Parse {
            line: i + 2,
            message: format!("{value:?} is not a number"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("sample {value} is not finite"),
            });
        }
        samples.push(x);
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no samples".into(),
        });
    }
    let waveform = Waveform::with_unit(samples, fs, t0, unit).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    Ok(WaveformFile { waveform, metadata })
}

/// Writes a waveform CSV; samples use 17 significant digits.
pub fn write_waveform(w: &Waveform, metadata: &BTreeMap<String, String>, mut out: impl Write) -> Result<()> {
    write!(out, "# fs={} t0={} unit={}", w.sample_rate(), w.start_time(), unit_token(w.unit()))?;
    for (k, v) in metadata {
        write!(out, " {k}={v}")?;
    }
    writeln!(out)?;
    for x in w.samples() {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

fn unit_token(unit: &str) -> String {
    unit.split_whitespace().collect::<Vec<_>>().join("_")
}

pub fn load_waveform(path: impl AsRef<Path>) -> Result<WaveformFile> {
    read_waveform(fs::File::open(path)?)
}

pub fn save_waveform(path: impl AsRef<Path>, w: &Waveform, metadata: &BTreeMap<String, String>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    write_waveform(w, metadata, &mut file)?;
    file.flush()?;
    Ok(())
}

/// Loads any JSON config (scenario, chain, filter, spectrum).
pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let samples = vec![0.1, -1.0 / 3.0, std::f64::consts::PI * 1e-300, 1e300, -0.0];
        let w = Waveform::with_unit(samples, 4920.0, -1.0 / 4920.0, "m/s^2").unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("amplitude".to_string(), "2.5".to_string());
        let mut buf = Vec::new();
        write_waveform(&w, &meta, &mut buf).unwrap();
        let back = read_waveform(buf.as_slice()).unwrap();
        assert_eq!(back.waveform, w);
        assert_eq!(back.metadata, meta);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "# fs=100 t0=0 unit=V\n1.0\n2.0\nabc\n";
        match read_waveform(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match read_waveform("1.0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(read_waveform("# fs=100 unit=V\n1\n".as_bytes()).is_err());
        assert!(read_waveform("# fs=100 t0=0\n".as_bytes()).is_err());
    }
}
