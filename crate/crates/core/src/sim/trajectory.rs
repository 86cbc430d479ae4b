//! Trajectory container and its two file formats.
//!
//! The text format is a header line `p=<p> T=<T>` followed by one line per
//! time step holding `p` space-separated 0/1 digits in node order. The
//! binary format is a 16-byte header (`BARTRJ01`, little-endian u16 `p`,
//! six reserved zero bytes) followed by one little-endian u64 integer
//! encoding per state.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::MAX_NODES;
use crate::sim::State;

const BINARY_MAGIC: &[u8; 8] = b"BARTRJ01";

/// Ordered state sequence `x(0)..x(T)` over `p` nodes; `T` counts
/// transitions, so the sequence holds `T + 1` states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    p: usize,
    states: Vec<State>,
}

impl Trajectory {
    pub fn new(p: usize, states: Vec<State>) -> Result<Self> {
        if p == 0 || p > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "p must be in 1..={MAX_NODES}, got {p}"
            )));
        }
        if states.is_empty() {
            return Err(Error::InvalidConfig(
                "a trajectory needs at least one state".into(),
            ));
        }
        for state in &states {
            State::from_value(state.value(), p)?;
        }
        Ok(Self { p, states })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of transitions.
    pub fn t(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p={} T={}", self.p, self.t())?;
        let mut line = String::with_capacity(2 * self.p);
        for state in &self.states {
            line.clear();
            for i in 0..self.p {
                if i > 0 {
                    line.push(' ');
                }
                line.push(if state.bit(i) { '1' } else { '0' });
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header.trim();
        let (p, t) = parse_header(header)?;
        let mut states = Vec::with_capacity(t + 1);
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bits: Vec<bool> = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::MalformedFile(format!(
                        "expected 0 or 1, found {other:?}"
                    ))),
                })
                .collect::<Result<_>>()?;
            if bits.len() != p {
                return Err(Error::MalformedFile(format!(
                    "state line has {} digits, expected {p}",
                    bits.len()
                )));
            }
            states.push(State::from_bits(&bits));
        }
        if states.len() != t + 1 {
            return Err(Error::MalformedFile(format!(
                "header promises {} states, found {}",
                t + 1,
                states.len()
            )));
        }
        Self::new(p, states)
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.p as u16).to_le_bytes())?;
        out.write_all(&[0u8; 6])?;
        for state in &self.states {
            out.write_all(&state.value().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..8] != BINARY_MAGIC {
            return Err(Error::MalformedFile("bad magic".into()));
        }
        let p = u16::from_le_bytes([header[8], header[9]]) as usize;
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        if payload.len() % 8 != 0 {
            return Err(Error::MalformedFile(
                "payload is not a whole number of u64 states".into(),
            ));
        }
        let mut states = Vec::with_capacity(payload.len() / 8);
        for chunk in payload.chunks_exact(8) {
            let value = u64::from_le_bytes(chunk.try_into().unwrap());
            states.push(State::from_value(value, p).map_err(|_| {
                Error::MalformedFile(format!("state {value} does not fit in {p} bits"))
            })?);
        }
        Self::new(p, states)
    }

    /// Writes the text format at `path`.
    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_text(BufWriter::new(File::create(path)?))
    }

    /// Writes the binary format at `path`.
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(BufWriter::new(File::create(path)?))
    }

    /// Reads either format, sniffing the binary magic.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let head = reader.fill_buf()?;
        if head.starts_with(BINARY_MAGIC) {
            Self::read_binary(reader)
        } else {
            Self::read_text(reader)
        }
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let mut p = None;
    let mut t = None;
    for token in header.split_whitespace() {
        if let Some(v) = token.strip_prefix("p=") {
            p = v.parse().ok();
        } else if let Some(v) = token.strip_prefix("T=") {
            t = v.parse().ok();
        }
    }
    match (p, t) {
        (Some(p), Some(t)) => Ok((p, t)),
        _ => Err(Error::MalformedFile(format!(
            "bad header {header:?}, expected \"p=<p> T=<T>\""
        ))),
    }
}
