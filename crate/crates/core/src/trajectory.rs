//! Uniformly sampled multivariate time series.
//!
//! Two on-disk encodings are supported:
//!
//! * text: a single header line
//!   `# chaosflow-traj v1; dt=<float>; t0=<float>; cols=<comma-separated labels>`
//!   followed by one CSV row per sample;
//! * binary: magic `CFTJ`, version `u32`, `dt` `f64`, `t0` `f64`, `d` `u32`,
//!   `n` `u64` (row count), then `n * d` row-major `f64`, all little-endian.
//!
//! Floats are written with Rust's shortest round-trip formatting, so both
//! encodings reproduce the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{fingerprint_bytes, Error, Result};

pub const TEXT_MAGIC: &str = "# chaosflow-traj v1";
pub const BINARY_MAGIC: &[u8; 4] = b"CFTJ";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    t0: f64,
    dim: usize,
    states: Vec<f64>,
    labels: Vec<String>,
}

impl Trajectory {
    /// Builds a trajectory from row-major states.
    pub fn new(dt: f64, t0: f64, dim: usize, states: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive and finite, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidParameter("t0 must be finite".into()));
        }
        if dim == 0 {
            return Err(Error::BadShape("trajectory needs at least one column".into()));
        }
        if !states.len().is_multiple_of(dim) {
            return Err(Error::BadShape(format!("{} values do not form rows of width {dim}", states.len())));
        }
        if labels.len() != dim {
            return Err(Error::BadShape(format!("{} labels for {dim} columns", labels.len())));
        }
        if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadShape(format!("non-finite value at row {}", pos / dim)));
        }
        Ok(Self { dt, t0, dim, states, labels })
    }

    /// Same as [`Trajectory::new`] with labels `x1..xd`.
    pub fn with_default_labels(dt: f64, t0: f64, dim: usize, states: Vec<f64>) -> Result<Self> {
        Self::new(dt, t0, dim, states, default_labels(dim))
    }

    pub fn from_rows(dt: f64, t0: f64, rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let dim = labels.len();
        let mut states = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::BadShape(format!("row {i} has {} values, expected {dim}", row.len())));
            }
            states.extend_from_slice(row);
        }
        Self::new(dt, t0, dim, states, labels)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row-major state matrix.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    /// Contiguous block of rows `start..start + len`, row-major.
    pub fn slice_rows(&self, start: usize, len: usize) -> &[f64] {
        &self.states[start * self.dim..(start + len) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|j| self.column(j)).collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Per-column maximum absolute value.
    pub fn abs_envelope(&self) -> Vec<f64> {
        let mut env = vec![0.0f64; self.dim];
        for row in self.rows() {
            for (e, v) in env.iter_mut().zip(row) {
                *e = e.max(v.abs());
            }
        }
        env
    }

    /// First `n` rows as a new trajectory.
    pub fn truncated(&self, n: usize) -> Trajectory {
        let n = n.min(self.len());
        Trajectory {
            dt: self.dt,
            t0: self.t0,
            dim: self.dim,
            states: self.states[..n * self.dim].to_vec(),
            labels: self.labels.clone(),
        }
    }

    /// SHA-256 of the canonical binary encoding.
    pub fn fingerprint(&self) -> String {
        fingerprint_bytes(&self.to_binary_bytes())
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TEXT_MAGIC}; dt={}; t0={}; cols={}", self.dt, self.t0, self.labels.join(","))?;
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty trajectory file".into()))??;
        let (dt, t0, labels) = parse_text_header(&header)?;
        let dim = labels.len();
        let mut states = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = states.len();
            for field in line.split(',') {
                let v: f64 =
                    field.trim().parse().map_err(|_| Error::Format(format!("row {i}: cannot parse {field:?}")))?;
                states.push(v);
            }
            if states.len() - before != dim {
                return Err(Error::Format(format!(
                    "row {i} has {} fields, header declares {dim}",
                    states.len() - before
                )));
            }
        }
        Self::new(dt, t0, dim, states, labels)
    }

    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.states.len() * 8);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.t0.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.states {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes the binary variant. Labels are not stored there, so they come back as `x1..xd`.
    pub fn from_binary_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        if cur.take(4)? != BINARY_MAGIC {
            return Err(Error::Format("missing CFTJ magic".into()));
        }
        let version = cur.u32()?;
        if version != BINARY_VERSION {
            return Err(Error::Format(format!("unsupported trajectory version {version}")));
        }
        let dt = cur.f64()?;
        let t0 = cur.f64()?;
        let dim = cur.u32()? as usize;
        let n = cur.u64()? as usize;
        let count = n.checked_mul(dim).ok_or_else(|| Error::Format("row count overflow".into()))?;
        if cur.remaining() != count * 8 {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header declares {}",
                cur.remaining(),
                count * 8
            )));
        }
        let states = (0..count).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        Self::with_default_labels(dt, t0, dim, states)
    }

    /// Writes text or binary depending on the extension (`.bin`/`.cftj` are binary).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        if is_binary_path(path) {
            let mut file = file;
            file.write_all(&self.to_binary_bytes())?;
            file.flush()?;
        } else {
            let mut file = file;
            self.write_text(&mut file)?;
            file.flush()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut file = File::open(path)?;
        if is_binary_path(path) {
            let mut bytes = Vec::new();
            file.read_to_end(&mut bytes)?;
            Self::from_binary_bytes(&bytes)
        } else {
            Self::read_text(BufReader::new(file))
        }
    }
}

pub fn default_labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

fn is_binary_path(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("bin" | "cftj"))
}

fn parse_text_header(header: &str) -> Result<(f64, f64, Vec<String>)> {
    let rest =
        header.strip_prefix(TEXT_MAGIC).ok_or_else(|| Error::Format(format!("bad trajectory header {header:?}")))?;
    let (mut dt, mut t0, mut cols) = (None, None, None);
    for part in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| Error::Format(format!("bad header field {part:?}")))?;
        match key.trim() {
            "dt" => dt = value.trim().parse::<f64>().ok(),
            "t0" => t0 = value.trim().parse::<f64>().ok(),
            "cols" => cols = Some(value.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>()),
            _ => {}
        }
    }
    match (dt, t0, cols) {
        (Some(dt), Some(t0), Some(cols)) => Ok((dt, t0, cols)),
        _ => Err(Error::Format(format!("incomplete trajectory header {header:?}"))),
    }
}

/// Little-endian reader over a byte slice.
pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Trajectory {
        Trajectory::from_rows(
            0.01,
            0.0,
            &[vec![1.0, -2.5, 3.25], vec![0.1, 0.2, 0.30000000000000004]],
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap()
    }

    #[test]
    fn header_line_format() {
        let mut buf = Vec::new();
        sample().write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "# chaosflow-traj v1; dt=0.01; t0=0; cols=x,y,z");
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn binary_layout() {
        let bytes = sample().to_binary_bytes();
        assert_eq!(&bytes[..4], b"CFTJ");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 0.01);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 36 + 6 * 8);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Trajectory::with_default_labels(0.0, 0.0, 1, vec![1.0]).is_err());
        assert!(Trajectory::with_default_labels(0.1, 0.0, 2, vec![1.0]).is_err());
        assert!(Trajectory::with_default_labels(0.1, 0.0, 1, vec![f64::NAN]).is_err());
        assert!(Trajectory::from_binary_bytes(b"XXXX").is_err());
        let mut bytes = sample().to_binary_bytes();
        bytes.pop();
        assert!(Trajectory::from_binary_bytes(&bytes).is_err());
        assert!(Trajectory::read_text("# chaosflow-traj v1; dt=0.1; t0=0; cols=a,b\n1,2,3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip_bit_exact(
            values in prop::collection::vec(-1e6f64..1e6, 1..60),
            dt in 1e-4f64..1.0,
            t0 in -10.0f64..10.0,
        ) {
            let dim = 3;
            let n = values.len() / dim * dim;
            prop_assume!(n > 0);
            let traj = Trajectory::with_default_labels(dt, t0, dim, values[..n].to_vec()).unwrap();

            let mut buf = Vec::new();
            traj.write_text(&mut buf).unwrap();
            let back = Trajectory::read_text(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &traj);

            let back = Trajectory::from_binary_bytes(&traj.to_binary_bytes()).unwrap();
            prop_assert_eq!(back.states().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            traj.states().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(back.dt().to_bits(), dt.to_bits());
        }
    }
}
