//! Observation projection and memory-window sampling.
//!
//! A training sequence is a contiguous slice of `memory_len + recurrent_len + 1`
//! observed states: the first `memory_len + 1` rows seed the model, the last
//! `recurrent_len` rows are the recurrent targets. The split is left to the
//! trainer so the dataset file stays independent of the loss.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trajectory::ByteCursor;
use crate::{Error, Result, Trajectory};

pub const DATASET_MAGIC: &[u8; 4] = b"CFDS";
pub const DATASET_VERSION: u32 = 1;

/// Ordered, zero-based indices of the observed state components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSpec {
    pub indices: Vec<usize>,
}

impl ObservationSpec {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn full(dim: usize) -> Self {
        Self { indices: (0..dim).collect() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::InvalidObservation("no observed indices".into()));
        }
        if let Some(&index) = self.indices.iter().find(|&&i| i >= dim) {
            return Err(Error::BadObservation { index, dim });
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidObservation("indices must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub m_sequences: usize,
    pub memory_len: usize,
    pub recurrent_len: usize,
    pub seed: u64,
    /// Standardise each observed channel before windowing. Off by default.
    #[serde(default)]
    pub normalize: bool,
}

impl DatasetSpec {
    pub fn sequence_len(&self) -> usize {
        self.memory_len + self.recurrent_len + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_sequences == 0 {
            return Err(Error::InvalidParameter("m_sequences must be at least 1".into()));
        }
        if self.recurrent_len == 0 {
            return Err(Error::InvalidParameter("recurrent_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-channel affine map `(x − mean) / scale` fitted on a training trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    /// Column means and sample standard deviations; constant columns get scale 1.
    pub fn fit(traj: &Trajectory) -> Result<Self> {
        if traj.len() < 2 {
            return Err(Error::InsufficientData { required: 2, available: traj.len() });
        }
        let n = traj.len() as f64;
        let (mut mean, mut scale) = (Vec::new(), Vec::new());
        for c in traj.columns() {
            let mu = c.iter().sum::<f64>() / n;
            let sd = (c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            mean.push(mu);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn map(&self, traj: &Trajectory, f: impl Fn(f64, f64, f64) -> f64) -> Result<Trajectory> {
        if traj.dim() != self.dim() {
            return Err(Error::BadShape(format!(
                "normalization has {} channels, trajectory {}",
                self.dim(),
                traj.dim()
            )));
        }
        let d = self.dim();
        let states =
            traj.states().iter().enumerate().map(|(i, &v)| f(v, self.mean[i % d], self.scale[i % d])).collect();
        Trajectory::new(traj.dt(), traj.t0(), d, states, traj.labels().to_vec())
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<Trajectory> {
        self.map(traj, |v, m, s| (v - m) / s)
    }

    pub fn invert(&self, traj: &Trajectory) -> Result<Trajectory> {
        self.map(traj, |v, m, s| v * s + m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub spec: DatasetSpec,
    pub obs_dim: usize,
    pub dt: f64,
    /// `M × L × m`, row-major, where `L` is the sequence length.
    pub sequences: Vec<f64>,
    pub source_fingerprint: String,
    /// Present when the windows were standardised; `None` means raw states.
    pub normalization: Option<Normalization>,
}

/// Keeps only the observed columns.
pub fn project_observed(traj: &Trajectory, obs: &ObservationSpec) -> Result<Trajectory> {
    obs.validate(traj.dim())?;
    let mut states = Vec::with_capacity(traj.len() * obs.len());
    for row in traj.rows() {
        states.extend(obs.indices.iter().map(|&i| row[i]));
    }
    let labels = obs.indices.iter().map(|&i| traj.labels()[i].clone()).collect();
    Trajectory::new(traj.dt(), traj.t0(), obs.len(), states, labels)
}

/// Window start offsets, one uniform draw per window in order.
pub fn sample_offsets(n_rows: usize, spec: &DatasetSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let len = spec.sequence_len();
    if n_rows < len {
        return Err(Error::InsufficientData { required: len, available: n_rows });
    }
    let max_offset = n_rows - len;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.m_sequences).map(|_| rng.random_range(0..=max_offset)).collect())
}

/// Draws `M` windows uniformly at random (with replacement) from `traj`.
///
/// With `spec.normalize`, the trajectory is standardised first and the
/// statistics travel with the dataset.
pub fn sample_sequences(traj: &Trajectory, spec: &DatasetSpec) -> Result<SequenceDataset> {
    let offsets = sample_offsets(traj.len(), spec)?;
    let normalization = if spec.normalize { Some(Normalization::fit(traj)?) } else { None };
    let scaled;
    let source = match &normalization {
        Some(n) => {
            scaled = n.apply(traj)?;
            &scaled
        }
        None => traj,
    };
    let len = spec.sequence_len();
    let mut sequences = Vec::with_capacity(offsets.len() * len * traj.dim());
    for &start in &offsets {
        sequences.extend_from_slice(source.slice_rows(start, len));
    }
    Ok(SequenceDataset {
        spec: *spec,
        obs_dim: traj.dim(),
        dt: traj.dt(),
        sequences,
        source_fingerprint: traj.fingerprint(),
        normalization,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetSidecar {
    format: String,
    version: u32,
    spec: DatasetSpec,
    obs_dim: usize,
    sequence_len: usize,
    dt: f64,
    source_fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization: Option<Normalization>,
}

impl SequenceDataset {
    pub fn len(&self) -> usize {
        self.spec.m_sequences
    }

    pub fn is_empty(&self) -> bool {
        self.spec.m_sequences == 0
    }

    pub fn sequence_len(&self) -> usize {
        self.spec.sequence_len()
    }

    /// Sequence `i` as `L × m` row-major values.
    pub fn sequence(&self, i: usize) -> &[f64] {
        let stride = self.sequence_len() * self.obs_dim;
        &self.sequences[i * stride..(i + 1) * stride]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.sequences.chunks_exact(self.sequence_len() * self.obs_dim)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let fp = hex::decode(&self.source_fingerprint)
            .map_err(|e| Error::Format(format!("source fingerprint is not hex: {e}")))?;
        let mut out = Vec::with_capacity(64 + fp.len() + self.sequences.len() * 8);
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        for v in
            [self.spec.m_sequences as u64, self.spec.memory_len as u64, self.spec.recurrent_len as u64, self.spec.seed]
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.obs_dim as u32).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&(fp.len() as u32).to_le_bytes());
        out.extend_from_slice(&fp);
        match &self.normalization {
            Some(n) => {
                out.extend_from_slice(&1u32.to_le_bytes());
                for v in n.mean.iter().chain(&n.scale) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            None => out.extend_from_slice(&0u32.to_le_bytes()),
        }
        for v in &self.sequences {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        if cur.take(4)? != DATASET_MAGIC {
            return Err(Error::Format("missing CFDS magic".into()));
        }
        let version = cur.u32()?;
        if version != DATASET_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let mut spec = DatasetSpec {
            m_sequences: cur.u64()? as usize,
            memory_len: cur.u64()? as usize,
            recurrent_len: cur.u64()? as usize,
            seed: cur.u64()?,
            normalize: false,
        };
        let obs_dim = cur.u32()? as usize;
        let dt = cur.f64()?;
        let fp_len = cur.u32()? as usize;
        let source_fingerprint = hex::encode(cur.take(fp_len)?);
        let normalization = match cur.u32()? {
            0 => None,
            1 => {
                let mean = (0..obs_dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
                let scale = (0..obs_dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
                Some(Normalization { mean, scale })
            }
            f => return Err(Error::Format(format!("bad normalization flag {f}"))),
        };
        spec.normalize = normalization.is_some();
        let count = spec.m_sequences * spec.sequence_len() * obs_dim;
        if cur.remaining() != count * 8 {
            return Err(Error::Format(format!(
                "dataset payload holds {} bytes, header declares {}",
                cur.remaining(),
                count * 8
            )));
        }
        let sequences = (0..count).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        if sequences.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("dataset contains non-finite values".into()));
        }
        Ok(Self { spec, obs_dim, dt, sequences, source_fingerprint, normalization })
    }

    /// Path of the JSON sidecar written next to `path`.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".json");
        PathBuf::from(name)
    }

    pub fn sidecar_json(&self) -> Result<String> {
        let sidecar = DatasetSidecar {
            format: "chaosflow-dataset".into(),
            version: DATASET_VERSION,
            spec: self.spec,
            obs_dim: self.obs_dim,
            sequence_len: self.sequence_len(),
            dt: self.dt,
            source_fingerprint: self.source_fingerprint.clone(),
            normalization: self.normalization.clone(),
        };
        Ok(serde_json::to_string_pretty(&sidecar)?)
    }

    /// Writes the binary dataset and its JSON sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        file.write_all(&self.to_bytes()?)?;
        file.flush()?;
        std::fs::write(Self::sidecar_path(path), self.sidecar_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
