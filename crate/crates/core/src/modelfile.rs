//! The `.agrm` container.
//!
//! ```text
//! "AGRM"  u16 version
//! u32 len, config block (UTF-8 `key=value` lines)
//! u32 count, then per token: u32 len, UTF-8 bytes
//! u32 count, then per tensor: u16 len, name, u32 rows, u32 cols, rows*cols f64
//! u32 CRC32 of everything above
//! ```
//!
//! All integers and floats are little-endian.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"AGRM";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic bytes)")]
    BadMagic,

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Crc { stored: u32, computed: u32 },

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ModelFileError {
    /// Bytes on disk cannot be trusted (as opposed to a version or I/O problem).
    pub fn is_corrupt(&self) -> bool {
        matches!(
            self,
            ModelFileError::BadMagic | ModelFileError::Crc { .. } | ModelFileError::Malformed(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Decoded sections, independent of what the model does with them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelFile {
    pub config: Vec<(String, String)>,
    pub vocab: Vec<String>,
    pub tensors: Vec<Tensor>,
}

fn malformed(msg: impl Into<String>) -> ModelFileError {
    ModelFileError::Malformed(msg.into())
}

fn len_u32(n: usize, what: &str) -> Result<u32, ModelFileError> {
    u32::try_from(n).map_err(|_| malformed(format!("{what} too large ({n})")))
}

impl ModelFile {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelFileError> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

        let mut block = String::new();
        for (k, v) in &self.config {
            if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(malformed(format!("config entry {k:?} cannot be encoded")));
            }
            block.push_str(k);
            block.push('=');
            block.push_str(v);
            block.push('\n');
        }
        out.extend_from_slice(&len_u32(block.len(), "config block")?.to_le_bytes());
        out.extend_from_slice(block.as_bytes());

        out.extend_from_slice(&len_u32(self.vocab.len(), "vocabulary")?.to_le_bytes());
        for token in &self.vocab {
            out.extend_from_slice(&len_u32(token.len(), "token")?.to_le_bytes());
            out.extend_from_slice(token.as_bytes());
        }

        out.extend_from_slice(&len_u32(self.tensors.len(), "tensor list")?.to_le_bytes());
        for t in &self.tensors {
            if t.data.len() != t.rows * t.cols {
                return Err(malformed(format!("tensor {} has inconsistent size", t.name)));
            }
            let name_len = u16::try_from(t.name.len())
                .map_err(|_| malformed(format!("tensor name {:?} too long", t.name)))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&len_u32(t.rows, "tensor rows")?.to_le_bytes());
            out.extend_from_slice(&len_u32(t.cols, "tensor cols")?.to_le_bytes());
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }

        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    /// Checks magic, then version, then checksum, and only then parses.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFileError> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(ModelFileError::BadMagic);
        }
        if bytes.len() < 6 {
            return Err(malformed("truncated header"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(ModelFileError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        if bytes.len() < 10 {
            return Err(malformed("truncated header"));
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(ModelFileError::Crc { stored, computed });
        }

        let mut r = Reader {
            buf: payload,
            pos: 6,
        };
        let block_len = r.u32()? as usize;
        let block = std::str::from_utf8(r.take(block_len)?)
            .map_err(|_| malformed("config block is not UTF-8"))?;
        let mut config = Vec::new();
        for line in block.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| malformed(format!("config line {line:?} has no '='")))?;
            config.push((k.to_string(), v.to_string()));
        }

        let n_vocab = r.u32()? as usize;
        let mut vocab = Vec::with_capacity(n_vocab.min(1 << 20));
        for i in 0..n_vocab {
            let len = r.u32()? as usize;
            let token = std::str::from_utf8(r.take(len)?)
                .map_err(|_| malformed(format!("vocabulary entry {i} is not UTF-8")))?;
            vocab.push(token.to_string());
        }

        let n_tensors = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n_tensors.min(64));
        for _ in 0..n_tensors {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| malformed("tensor name is not UTF-8"))?
                .to_string();
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let n = rows
                .checked_mul(cols)
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| malformed(format!("tensor {name} overruns the file")))?;
            let data = r
                .take(n * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push(Tensor {
                name,
                rows,
                cols,
                data,
            });
        }
        if r.remaining() != 0 {
            return Err(malformed(format!("{} trailing bytes", r.remaining())));
        }
        Ok(ModelFile {
            config,
            vocab,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let bytes = std::fs::read(path).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFileError> {
        if n > self.remaining() {
            return Err(malformed("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, ModelFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
