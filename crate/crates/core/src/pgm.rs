//! 8-bit PGM reader and writer.
//!
//! Reads binary (`P5`) and ASCII (`P2`) graymaps with maxval 255. Writes `P5`
//! only, quantizing gray values with round-half-up and clamping to `[0, 255]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Frame, Mask};

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(frame)).map_err(|e| Error::file(path, e))
}

/// Writes a mask as `P5` with values {0, 255}.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_mask(mask)).map_err(|e| Error::file(path, e))
}

pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = header(frame.width(), frame.height());
    out.extend(frame.data().iter().map(|v| quantize(*v)));
    out
}

pub fn encode_mask(mask: &Mask) -> Vec<u8> {
    let mut out = header(mask.width(), mask.height());
    out.extend(mask.data().iter().map(|v| if *v { 255u8 } else { 0 }));
    out
}

fn header(width: usize, height: usize) -> Vec<u8> {
    format!("P5\n{width} {height}\n255\n").into_bytes()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur
        .token()
        .ok_or_else(|| Error::MalformedHeader("empty file".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unknown magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(maxval));
    }
    let expected = width * height;
    let data: Vec<f64> = if binary {
        // exactly one whitespace byte separates maxval from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::TruncatedPayload { expected, found: 0 });
        }
        let payload = &bytes[cur.pos + 1..];
        if payload.len() < expected {
            return Err(Error::TruncatedPayload { expected, found: payload.len() });
        }
        payload[..expected].iter().map(|b| *b as f64).collect()
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            match cur.token() {
                Some(tok) => {
                    let v: u32 = std::str::from_utf8(tok)
                        .ok()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::MalformedHeader("bad ASCII sample".into()))?;
                    if v > maxval {
                        return Err(Error::MalformedHeader(format!("sample {v} exceeds maxval")));
                    }
                    data.push(v as f64);
                }
                None => return Err(Error::TruncatedPayload { expected, found: data.len() }),
            }
        }
        data
    };
    Frame::new(width, height, data)
}
