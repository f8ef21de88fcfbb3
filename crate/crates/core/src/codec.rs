//! Little-endian framing shared by the index (`SDIM`) and embedding (`SEMB`)
//! binary files: fixed header, length-prefixed records, trailing CRC32.

use thiserror::Error;

use crate::store::EmbeddingRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },
    #[error("file truncated: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("{0} trailing bytes after checksum")]
    TrailingBytes(usize),
    #[error("invalid field: {0}")]
    InvalidField(String),
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u16(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn dim(&mut self, dim: usize) -> Result<(), FormatError> {
        let d = u32::try_from(dim)
            .map_err(|_| FormatError::InvalidField(format!("dimension {dim} exceeds u32")))?;
        self.u32(d);
        Ok(())
    }

    fn short_str(&mut self, field: &str, s: &str) -> Result<(), FormatError> {
        let len = u16::try_from(s.len()).map_err(|_| {
            FormatError::InvalidField(format!("{field} is {} bytes, limit is 65535", s.len()))
        })?;
        self.u16(len);
        self.buf.extend_from_slice(s.as_bytes());
        Ok(())
    }

    pub fn record(&mut self, id: u64, doc_key: &str, snippet: Option<&str>, vector: &[f32]) -> Result<(), FormatError> {
        self.u64(id);
        self.short_str("doc_key", doc_key)?;
        self.short_str("snippet", snippet.unwrap_or(""))?;
        for v in vector {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        Ok(())
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and version, leaving the cursor after them.
    pub fn open(bytes: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Self, FormatError> {
        let mut r = Self { bytes, pos: 0 };
        let found: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &found != magic {
            return Err(FormatError::BadMagic {
                expected: *magic,
                found,
            });
        }
        let found = r.u16()?;
        if found != version {
            return Err(FormatError::UnsupportedVersion {
                found,
                supported: version,
            });
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn short_str(&mut self, field: &str) -> Result<String, FormatError> {
        let len = self.u16()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| FormatError::InvalidField(format!("{field} at offset {} is not UTF-8", self.pos - len)))
    }

    pub fn record(&mut self, dim: usize) -> Result<EmbeddingRecord, FormatError> {
        let id = self.u64()?;
        let doc_key = self.short_str("doc_key")?;
        let snippet = self.short_str("snippet")?;
        let raw = self.take(dim * 4)?;
        let vector = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(EmbeddingRecord {
            id,
            doc_key,
            snippet: (!snippet.is_empty()).then_some(snippet),
            vector,
        })
    }

    /// Reads `count` records without trusting `count` for preallocation.
    pub fn records(&mut self, count: u64, dim: usize) -> Result<Vec<EmbeddingRecord>, FormatError> {
        let min_record = 8 + 2 + 2 + dim * 4;
        let cap = (self.remaining() / min_record).min(count as usize);
        let mut out = Vec::with_capacity(cap);
        for _ in 0..count {
            out.push(self.record(dim)?);
        }
        Ok(out)
    }

    /// Reads the trailing CRC and validates it against everything before it.
    pub fn finish(mut self) -> Result<(), FormatError> {
        let body_end = self.pos;
        let stored = self.u32()?;
        if self.remaining() > 0 {
            return Err(FormatError::TrailingBytes(self.remaining()));
        }
        let computed = crc32fast::hash(&self.bytes[..body_end]);
        if stored != computed {
            return Err(FormatError::ChecksumMismatch { stored, computed });
        }
        Ok(())
    }
}
