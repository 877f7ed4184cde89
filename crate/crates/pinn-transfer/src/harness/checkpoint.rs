//! Versioned binary checkpoints and the shared singular-vector archive.
//!
//! Checkpoint layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "PINNCKPT"
//! version    u32
//! confighash u64
//! meta       u32 count, then (u16 key len, key, u32 value len, value)
//! blocks     u32 count, then (u16 name len, name, u8 ndim, u64 dims..., f64 data...)
//! ```
//!
//! The basis archive holds the frozen `U`, `V` factors once, keyed by a
//! content hash, so any number of sigma-mode checkpoints can reference it:
//!
//! ```text
//! magic      8 bytes  "PINNBAS\0"
//! version    u32
//! id         u64
//! m          u64
//! u, v       m*m f64 each
//! ```
//!
//! Text formats round-trip floats lossily; these files are byte-exact.

use super::config::fnv1a;
use crate::linalg::Matrix;
use crate::network::{HiddenWeight, NetworkParams};
use crate::optim::OptimizerState;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const CKPT_MAGIC: &[u8; 8] = b"PINNCKPT";
pub const CKPT_VERSION: u32 = 1;
pub const BASIS_MAGIC: &[u8; 8] = b"PINNBAS\0";
pub const BASIS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad magic: not a {0} file")]
    BadMagic(&'static str),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("truncated or corrupt file at byte {0}")]
    Truncated(usize),
    #[error("missing block '{0}'")]
    MissingBlock(String),
    #[error("missing metadata key '{0}'")]
    MissingMeta(String),
    #[error("block '{name}' has shape {got:?}, expected {expected:?}")]
    Shape { name: String, got: Vec<u64>, expected: Vec<u64> },
    #[error("structural mismatch: checkpoint has {field} = {ckpt}, run config has {cfg}")]
    Structural { field: &'static str, ckpt: String, cfg: String },
    #[error("checkpoint references basis {want:#018x} but archive holds {got:#018x}")]
    BasisMismatch { want: u64, got: u64 },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: Vec<f64>,
}

impl Block {
    pub fn vector(name: &str, data: &[f64]) -> Self {
        Block { name: name.to_string(), dims: vec![data.len() as u64], data: data.to_vec() }
    }

    pub fn matrix(name: &str, m: &Matrix) -> Self {
        Block {
            name: name.to_string(),
            dims: vec![m.rows() as u64, m.cols() as u64],
            data: m.as_slice().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// An ordered, faithful container for everything in a checkpoint file.
/// Load followed by save reproduces the bytes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: u64,
    pub meta: Vec<(String, String)>,
    pub blocks: Vec<Block>,
}

impl Checkpoint {
    pub fn meta_value(&self, key: &str) -> Result<&str, CheckpointError> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CheckpointError::MissingMeta(key.to_string()))
    }

    pub fn block(&self, name: &str) -> Result<&Block, CheckpointError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| CheckpointError::MissingBlock(name.to_string()))
    }

    pub fn has_block(&self, name: &str) -> bool {
        self.blocks.iter().any(|b| b.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CKPT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (k, v) in &self.meta {
            out.extend_from_slice(&(k.len() as u16).to_le_bytes());
            out.extend_from_slice(k.as_bytes());
            out.extend_from_slice(&(v.len() as u32).to_le_bytes());
            out.extend_from_slice(v.as_bytes());
        }
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            out.extend_from_slice(&(b.name.len() as u16).to_le_bytes());
            out.extend_from_slice(b.name.as_bytes());
            out.push(b.dims.len() as u8);
            for d in &b.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &b.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CKPT_MAGIC {
            return Err(CheckpointError::BadMagic("checkpoint"));
        }
        let version = r.u32()?;
        if version != CKPT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let config_hash = r.u64()?;
        let n_meta = r.u32()? as usize;
        let mut meta = Vec::with_capacity(n_meta);
        for _ in 0..n_meta {
            let klen = r.u16()? as usize;
            let k = r.utf8(klen)?;
            let vlen = r.u32()? as usize;
            let v = r.utf8(vlen)?;
            meta.push((k, v));
        }
        let n_blocks = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let nlen = r.u16()? as usize;
            let name = r.utf8(nlen)?;
            let ndim = r.u8()? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(r.u64()?);
            }
            let n: u64 = dims.iter().product();
            let mut data = Vec::with_capacity(n as usize);
            for _ in 0..n {
                data.push(r.f64()?);
            }
            blocks.push(Block { name, dims, data });
        }
        Ok(Checkpoint { version, config_hash, meta, blocks })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        write_bytes(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)
            .map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
        Self::decode(&bytes)
    }

    /// Refuse to reuse a checkpoint whose structure (problem, dimensions,
    /// width, output size) differs from the requested configuration.
    pub fn check_structure(
        &self,
        problem: &str,
        dim: usize,
        width: usize,
        r: usize,
    ) -> Result<(), CheckpointError> {
        let checks: [(&'static str, String, String); 4] = [
            ("problem", self.meta_value("problem")?.to_string(), problem.to_string()),
            ("dim", self.meta_value("dim")?.to_string(), dim.to_string()),
            ("width", self.meta_value("width")?.to_string(), width.to_string()),
            ("r", self.meta_value("r")?.to_string(), r.to_string()),
        ];
        for (field, ckpt, cfg) in checks {
            if ckpt != cfg {
                return Err(CheckpointError::Structural { field, ckpt, cfg });
            }
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Truncated(self.pos));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn utf8(&mut self, n: usize) -> Result<String, CheckpointError> {
        let pos = self.pos;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CheckpointError::Truncated(pos))
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CheckpointError> {
    let wrap = |source: std::io::Error| CheckpointError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(wrap)?;
    f.write_all(bytes).map_err(wrap)?;
    Ok(())
}

// ============================================================================
// Shared basis archive
// ============================================================================

/// The frozen `U`, `V` factors shared by every sigma-mode checkpoint of one
/// pretrained model.
#[derive(Debug, Clone)]
pub struct BasisArchive {
    pub id: u64,
    pub u: Matrix,
    pub v: Matrix,
}

impl BasisArchive {
    /// Content id: hash of the factor bytes in order.
    pub fn content_id(u: &Matrix, v: &Matrix) -> u64 {
        let mut bytes = Vec::with_capacity((u.as_slice().len() + v.as_slice().len()) * 8);
        for val in u.as_slice().iter().chain(v.as_slice()) {
            bytes.extend_from_slice(&val.to_le_bytes());
        }
        fnv1a(&bytes)
    }

    pub fn new(u: Matrix, v: Matrix) -> Self {
        let id = Self::content_id(&u, &v);
        BasisArchive { id, u, v }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let m = self.u.rows() as u64;
        let mut out = Vec::new();
        out.extend_from_slice(BASIS_MAGIC);
        out.extend_from_slice(&BASIS_VERSION.to_le_bytes());
        out.extend_from_slice(&self.id.to_le_bytes());
        out.extend_from_slice(&m.to_le_bytes());
        for v in self.u.as_slice().iter().chain(self.v.as_slice()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        write_bytes(path, &out)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)
            .map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(8)? != BASIS_MAGIC {
            return Err(CheckpointError::BadMagic("basis archive"));
        }
        let version = r.u32()?;
        if version != BASIS_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let id = r.u64()?;
        let m = r.u64()? as usize;
        let read_matrix = |r: &mut Reader| -> Result<Matrix, CheckpointError> {
            let mut data = Vec::with_capacity(m * m);
            for _ in 0..m * m {
                data.push(r.f64()?);
            }
            Ok(Matrix::from_fn(m, m, |i, j| data[i * m + j]))
        };
        let u = read_matrix(&mut r)?;
        let v = read_matrix(&mut r)?;
        Ok(BasisArchive { id, u, v })
    }
}

// ============================================================================
// Model <-> checkpoint conversion
// ============================================================================

/// Assemble a checkpoint document from a trained model.
#[allow(clippy::too_many_arguments)]
pub fn build_checkpoint(
    params: &NetworkParams,
    main_opt: Option<&OptimizerState>,
    sigma_opt: Option<&OptimizerState>,
    config_hash: u64,
    meta: Vec<(String, String)>,
    basis_id: Option<u64>,
) -> Checkpoint {
    let mut all_meta = meta;
    if let Some(id) = basis_id {
        all_meta.push(("basis_id".to_string(), format!("{id:#018x}")));
    }
    let mut blocks = vec![
        Block::matrix("w0", &params.w0),
        Block::vector("b0", &params.b0),
    ];
    match &params.hidden {
        HiddenWeight::Dense(w) => blocks.push(Block::matrix("w1", w)),
        HiddenWeight::Factored { sigma, .. } => blocks.push(Block::vector("sigma", sigma)),
    }
    blocks.push(Block::vector("b1", &params.b1));
    blocks.push(Block::matrix("w2", &params.w2));
    blocks.push(Block::vector("b2", &params.b2));

    for (prefix, opt) in [("opt_main", main_opt), ("opt_sigma", sigma_opt)] {
        let Some(opt) = opt else { continue };
        all_meta.push((format!("{prefix}_kind"), opt.kind.id().to_string()));
        all_meta.push((format!("{prefix}_step"), opt.step_count.to_string()));
        for (name, m) in opt.first_moments() {
            blocks.push(Block::vector(&format!("{prefix}.m.{name}"), m));
        }
        for (name, v) in opt.second_moments() {
            blocks.push(Block::vector(&format!("{prefix}.v.{name}"), v));
        }
    }
    Checkpoint { version: CKPT_VERSION, config_hash, meta: all_meta, blocks }
}

/// Rebuild network parameters from a checkpoint, pulling frozen bases from
/// the archive when the hidden weight is factored.
pub fn params_from_checkpoint(
    ckpt: &Checkpoint,
    basis: Option<&BasisArchive>,
) -> Result<NetworkParams, CheckpointError> {
    let w0 = matrix_block(ckpt, "w0")?;
    let b0 = vector_block(ckpt, "b0")?;
    let b1 = vector_block(ckpt, "b1")?;
    let w2 = matrix_block(ckpt, "w2")?;
    let b2 = vector_block(ckpt, "b2")?;
    let hidden = if ckpt.has_block("w1") {
        HiddenWeight::Dense(matrix_block(ckpt, "w1")?)
    } else {
        let sigma = vector_block(ckpt, "sigma")?;
        let want = parse_basis_id(ckpt.meta_value("basis_id")?)?;
        let basis = basis.ok_or(CheckpointError::MissingBlock("basis archive".to_string()))?;
        if basis.id != want {
            return Err(CheckpointError::BasisMismatch { want, got: basis.id });
        }
        HiddenWeight::factored(basis.u.clone(), basis.v.clone(), sigma)?
    };
    Ok(NetworkParams::new(w0, b0, hidden, b1, w2, b2)?)
}

fn parse_basis_id(s: &str) -> Result<u64, CheckpointError> {
    let trimmed = s.trim_start_matches("0x");
    u64::from_str_radix(trimmed, 16).map_err(|_| CheckpointError::MissingMeta("basis_id".to_string()))
}

fn matrix_block(ckpt: &Checkpoint, name: &str) -> Result<Matrix, CheckpointError> {
    let b = ckpt.block(name)?;
    if b.dims.len() != 2 {
        return Err(CheckpointError::Shape {
            name: name.to_string(),
            got: b.dims.clone(),
            expected: vec![0, 0],
        });
    }
    let (rows, cols) = (b.dims[0] as usize, b.dims[1] as usize);
    if rows * cols != b.data.len() {
        return Err(CheckpointError::Shape {
            name: name.to_string(),
            got: b.dims.clone(),
            expected: vec![b.data.len() as u64],
        });
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| b.data[i * cols + j]))
}

fn vector_block(ckpt: &Checkpoint, name: &str) -> Result<Vec<f64>, CheckpointError> {
    let b = ckpt.block(name)?;
    if b.dims.len() != 1 {
        return Err(CheckpointError::Shape {
            name: name.to_string(),
            got: b.dims.clone(),
            expected: vec![b.data.len() as u64],
        });
    }
    Ok(b.data.clone())
}
