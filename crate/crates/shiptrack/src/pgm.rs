//! Portable graymap reading and writing.
//!
//! Reads binary (`P5`) and plain (`P2`) graymaps with any maxval up to
//! 65535; writes binary graymaps, two big-endian bytes per sample when
//! maxval exceeds 255.

use std::fs;
use std::path::Path;

use crate::error::{io_err, malformed, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples, each `<= maxval`.
    pub samples: Vec<u16>,
}

impl Graymap {
    pub fn new(width: usize, height: usize, maxval: u16, samples: Vec<u16>) -> Option<Self> {
        (maxval > 0 && samples.len() == width * height && samples.iter().all(|&s| s <= maxval)).then_some(Graymap {
            width,
            height,
            maxval,
            samples,
        })
    }
}

struct Header<'a> {
    rest: &'a [u8],
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        loop {
            match self.rest.first() {
                Some(c) if c.is_ascii_whitespace() => self.rest = &self.rest[1..],
                Some(b'#') => {
                    let end = self.rest.iter().position(|&c| c == b'\n').unwrap_or(self.rest.len());
                    self.rest = &self.rest[end..];
                }
                _ => return,
            }
        }
    }

    fn number(&mut self) -> std::result::Result<u32, String> {
        self.skip_space();
        let len = self.rest.iter().take_while(|c| c.is_ascii_digit()).count();
        if len == 0 {
            return Err("expected a decimal number".into());
        }
        let text = std::str::from_utf8(&self.rest[..len]).expect("ascii digits");
        self.rest = &self.rest[len..];
        text.parse().map_err(|_| format!("number {text} out of range"))
    }
}

pub fn parse(bytes: &[u8]) -> std::result::Result<Graymap, String> {
    let plain = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P2") => true,
        _ => return Err("not a graymap (expected P5 or P2)".into()),
    };
    let mut h = Header { rest: &bytes[2..] };
    let width = h.number()? as usize;
    let height = h.number()? as usize;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let maxval = maxval as u16;
    let n = width.checked_mul(height).ok_or("dimensions overflow")?;
    let samples = if plain {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v = h.number().map_err(|_| "truncated sample data".to_string())?;
            out.push(u16::try_from(v).map_err(|_| format!("sample {v} out of range"))?);
        }
        out
    } else {
        match h.rest.first() {
            Some(c) if c.is_ascii_whitespace() => h.rest = &h.rest[1..],
            _ => return Err("missing whitespace after header".into()),
        }
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        if h.rest.len() < need {
            return Err(format!("expected {need} bytes of sample data, found {}", h.rest.len()));
        }
        if wide {
            h.rest[..need].chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
        } else {
            h.rest[..need].iter().map(|&b| u16::from(b)).collect()
        }
    };
    if let Some(v) = samples.iter().find(|&&s| s > maxval) {
        return Err(format!("sample {v} exceeds maxval {maxval}"));
    }
    Ok(Graymap {
        width,
        height,
        maxval,
        samples,
    })
}

pub fn encode(g: &Graymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", g.width, g.height, g.maxval).into_bytes();
    if g.maxval > 255 {
        out.reserve(g.samples.len() * 2);
        for s in &g.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(g.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn read(path: &Path) -> Result<Graymap> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse(&bytes).map_err(|reason| malformed(path, reason))
}

pub fn write(path: &Path, g: &Graymap) -> Result<()> {
    fs::write(path, encode(g)).map_err(io_err(path))
}
