//! Predictor parameter files: one JSON header line, then the raw
//! little-endian `f64` values of each network in header order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gan::{NetKind, NetShape, SeqNetParams};
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "occlutrack-predictor";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    nets: Vec<NetEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetEntry {
    shape: NetShape,
    len: usize,
}

/// Generator plus the discriminator it was trained against, when kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorFile {
    pub generator: SeqNetParams,
    pub discriminator: Option<SeqNetParams>,
}

pub fn write_predictor(mut out: impl Write, file: &PredictorFile) -> Result<()> {
    let nets: Vec<&SeqNetParams> = std::iter::once(&file.generator)
        .chain(file.discriminator.as_ref())
        .collect();
    let header = Header {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        nets: nets
            .iter()
            .map(|n| NetEntry {
                shape: *n.shape(),
                len: n.values().len(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for net in nets {
        for v in net.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictor(input: impl Read) -> Result<PredictorFile> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    if header.format != FORMAT_TAG || header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported predictor file {} v{}",
            header.format, header.version
        )));
    }
    let mut nets = Vec::with_capacity(header.nets.len());
    for entry in &header.nets {
        let mut bytes = vec![0u8; entry.len * 8];
        reader
            .read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("truncated parameter blob: {e}")))?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        nets.push(SeqNetParams::from_values(entry.shape, values)?);
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format("trailing bytes after parameter blob".into()));
    }
    let mut it = nets.into_iter();
    let generator = it
        .next()
        .filter(|g| g.shape().kind == NetKind::Generator)
        .ok_or_else(|| Error::Format("first network must be a generator".into()))?;
    let discriminator = it.next();
    if discriminator
        .as_ref()
        .is_some_and(|d| d.shape().kind != NetKind::Discriminator)
        || it.next().is_some()
    {
        return Err(Error::Format(
            "expected at most one discriminator after the generator".into(),
        ));
    }
    Ok(PredictorFile {
        generator,
        discriminator,
    })
}

pub fn save_predictor(path: impl AsRef<Path>, file: &PredictorFile) -> Result<()> {
    write_predictor(BufWriter::new(File::create(path)?), file)
}

pub fn load_predictor(path: impl AsRef<Path>) -> Result<PredictorFile> {
    read_predictor(File::open(path)?)
}
