//! Little-endian byte helpers shared by the projector snapshot and the model
//! checkpoint formats. Floats travel as raw IEEE-754 bits, so round trips are
//! exact.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }

    pub fn matrix(&mut self, m: &Matrix) {
        self.u64(m.rows() as u64);
        self.u64(m.cols() as u64);
        for &v in m.as_slice() {
            self.f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        ByteReader { buf, pos: 0, what }
    }

    fn fail(&self, field: &'static str, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.what.to_string(),
            field,
            reason: reason.into(),
        }
    }

    pub fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.fail(
                field,
                format!("truncated at byte {} (needed {n} more)", self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn expect(&mut self, magic: &[u8], field: &'static str) -> Result<()> {
        let got = self.take(magic.len(), field)?;
        if got != magic {
            return Err(self.fail(field, format!("expected {magic:?}, found {got:?}")));
        }
        Ok(())
    }

    pub fn u32(&mut self, field: &'static str) -> Result<u32> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, field: &'static str) -> Result<u64> {
        let b = self.take(8, field)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self, field: &'static str) -> Result<usize> {
        let v = self.u64(field)?;
        usize::try_from(v).map_err(|_| self.fail(field, format!("{v} does not fit in usize")))
    }

    pub fn f64(&mut self, field: &'static str) -> Result<f64> {
        Ok(f64::from_bits(self.u64(field)?))
    }

    pub fn str(&mut self, field: &'static str) -> Result<String> {
        let n = self.usize(field)?;
        let b = self.take(n, field)?;
        String::from_utf8(b.to_vec()).map_err(|e| self.fail(field, e.to_string()))
    }

    pub fn matrix(&mut self, field: &'static str) -> Result<Matrix> {
        let rows = self.usize(field)?;
        let cols = self.usize(field)?;
        let n = rows
            .checked_mul(cols)
            .filter(|n| {
                n.checked_mul(8)
                    .is_some_and(|b| b <= self.buf.len() - self.pos)
            })
            .ok_or_else(|| self.fail(field, format!("{rows}x{cols} exceeds remaining payload")))?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(self.f64(field)?);
        }
        Matrix::from_vec(rows, cols, data).map_err(|e| self.fail(field, e.to_string()))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.fail(
                "trailer",
                format!("{} unexpected trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}
