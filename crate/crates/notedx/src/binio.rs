//! Little-endian binary readers/writers for checkpoints and embedding files.
//!
//! Short reads surface as [`Error::Truncated`], bad magic as
//! [`Error::Corrupt`], and version skew as [`Error::Version`] so callers can
//! tell the three apart.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub struct BinWriter<W: Write> {
    inner: W,
}

impl<W: Write> BinWriter<W> {
    pub fn new(inner: W) -> Self {
        BinWriter { inner }
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        self.inner.write_all(magic)?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn usize(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn f64_slice(&mut self, vs: &[f64]) -> Result<()> {
        self.usize(vs.len())?;
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }

    pub fn u64_slice(&mut self, vs: &[u64]) -> Result<()> {
        self.usize(vs.len())?;
        for &v in vs {
            self.u64(v)?;
        }
        Ok(())
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.usize(s.len())?;
        self.inner.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub struct BinReader<R: Read> {
    inner: R,
    context: &'static str,
}

impl<R: Read> BinReader<R> {
    pub fn new(inner: R, context: &'static str) -> Self {
        BinReader { inner, context }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Truncated(self.context.to_string())
            } else {
                Error::Io(e)
            }
        })
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        if &buf != magic {
            return Err(Error::Corrupt(format!(
                "{}: bad magic {buf:?}",
                self.context
            )));
        }
        Ok(())
    }

    pub fn expect_version(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::Version { expected, found });
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    }

    pub fn f64_vec(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        let mut out = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    pub fn u64_vec(&mut self) -> Result<Vec<u64>> {
        let n = self.usize()?;
        let mut out = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            out.push(self.u64()?);
        }
        Ok(out)
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.usize()?;
        if n > (1 << 24) {
            return Err(Error::Corrupt(format!(
                "{}: unreasonable string length {n}",
                self.context
            )));
        }
        let mut buf = vec![0u8; n];
        self.fill(&mut buf)?;
        String::from_utf8(buf)
            .map_err(|_| Error::Corrupt(format!("{}: invalid utf-8 string", self.context)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_error_kinds() {
        let mut buf = Vec::new();
        {
            let mut w = BinWriter::new(&mut buf);
            w.magic(b"TEST").unwrap();
            w.u32(1).unwrap();
            w.f64_slice(&[1.5, -2.25]).unwrap();
            w.string("hello").unwrap();
            w.finish().unwrap();
        }
        let mut r = BinReader::new(&buf[..], "test");
        r.expect_magic(b"TEST").unwrap();
        r.expect_version(1).unwrap();
        assert_eq!(r.f64_vec().unwrap(), vec![1.5, -2.25]);
        assert_eq!(r.string().unwrap(), "hello");

        // truncated
        let mut r = BinReader::new(&buf[..6], "test");
        r.expect_magic(b"TEST").unwrap();
        assert!(matches!(r.u32(), Err(Error::Truncated(_))));

        // version mismatch
        let mut r = BinReader::new(&buf[..], "test");
        r.expect_magic(b"TEST").unwrap();
        assert!(matches!(
            r.expect_version(9),
            Err(Error::Version { expected: 9, found: 1 })
        ));

        // corrupt magic
        let mut bad = buf.clone();
        bad[0] = b'X';
        let mut r = BinReader::new(&bad[..], "test");
        assert!(matches!(r.expect_magic(b"TEST"), Err(Error::Corrupt(_))));
    }
}
