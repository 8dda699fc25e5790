//! Netpbm file I/O and plain-text data formats.
//!
//! Images are read from P2/P5 PGM files with maxval ≤ 255 and written as
//! binary P5 (values rounded to nearest and clamped to [0, 255]). Masks are
//! stored as P4 portable bitmaps, one bit per pixel, rows padded to byte
//! boundaries. Tonal data travels as `index,value` CSV with 17 significant
//! digits so that `f64` round-trips are exact.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Image, Mask};

/// Pulls the next whitespace-delimited token, skipping `#` comments.
struct TokenReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> TokenReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        TokenReader { data, pos: 0 }
    }

    fn next_token(&mut self) -> Result<&'a str> {
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.data.len() {
            return Err(Error::MalformedFile("unexpected end of header".into()));
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .map_err(|_| Error::MalformedFile("non-ASCII header token".into()))
    }

    fn next_usize(&mut self) -> Result<usize> {
        let tok = self.next_token()?;
        tok.parse()
            .map_err(|_| Error::MalformedFile(format!("expected integer, got {:?}", tok)))
    }

    /// Position just past the single whitespace byte that ends the header.
    fn binary_payload(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.data.len() || !self.data[self.pos].is_ascii_whitespace() {
            return Err(Error::MalformedFile("missing separator before payload".into()));
        }
        self.pos += 1;
        Ok(&self.data[self.pos..])
    }
}

/// Reads a P2 (ASCII) or P5 (binary) PGM file with maxval ≤ 255.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut tokens = TokenReader::new(bytes);
    let magic = tokens.next_token()?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::MalformedFile(format!("unsupported magic {:?}", magic)));
    }
    let width = tokens.next_usize()?;
    let height = tokens.next_usize()?;
    let maxval = tokens.next_usize()?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedFile("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::MalformedFile(format!("maxval {} out of range (1..=255)", maxval)));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if magic == "P2" {
        for _ in 0..n {
            let v = tokens
                .next_usize()
                .map_err(|_| Error::MalformedFile("truncated payload".into()))?;
            if v > maxval {
                return Err(Error::MalformedFile(format!("sample {} exceeds maxval {}", v, maxval)));
            }
            values.push(v as f64);
        }
    } else {
        let payload = tokens.binary_payload()?;
        if payload.len() < n {
            return Err(Error::MalformedFile("truncated payload".into()));
        }
        for &b in &payload[..n] {
            if b as usize > maxval {
                return Err(Error::MalformedFile(format!("sample {} exceeds maxval {}", b, maxval)));
            }
            values.push(b as f64);
        }
    }
    Image::new(width, height, values)
}

/// Writes a binary P5 PGM; values are rounded to nearest and clamped to [0, 255].
pub fn write_pgm(image: &Image, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", image.width(), image.height())?;
    let bytes: Vec<u8> = image
        .values()
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Reads a P4 portable bitmap as a mask; a set bit means a stored pixel.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_mask(&bytes)
}

pub fn parse_mask(bytes: &[u8]) -> Result<Mask> {
    let mut tokens = TokenReader::new(bytes);
    let magic = tokens.next_token()?;
    if magic != "P4" {
        return Err(Error::MalformedFile(format!("unsupported magic {:?} (want P4)", magic)));
    }
    let width = tokens.next_usize()?;
    let height = tokens.next_usize()?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedFile("zero mask dimension".into()));
    }
    let payload = tokens.binary_payload()?;
    let row_bytes = width.div_ceil(8);
    if payload.len() < row_bytes * height {
        return Err(Error::MalformedFile("truncated payload".into()));
    }
    let mut bits = Vec::with_capacity(width * height);
    for y in 0..height {
        let row = &payload[y * row_bytes..(y + 1) * row_bytes];
        for x in 0..width {
            let byte = row[x / 8];
            bits.push(byte & (0x80 >> (x % 8)) != 0);
        }
    }
    Mask::new(width, height, bits)
}

/// Writes a mask as a P4 portable bitmap, MSB-first, rows byte-padded.
pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P4\n{} {}\n", mask.width(), mask.height())?;
    w.write_all(&encode_mask_payload(mask))?;
    w.flush()?;
    Ok(())
}

pub fn encode_mask_payload(mask: &Mask) -> Vec<u8> {
    let row_bytes = mask.width().div_ceil(8);
    let mut out = vec![0u8; row_bytes * mask.height()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.is_set(y * mask.width() + x) {
                out[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    out
}

/// Writes `index,value` rows with 17 significant digits (exact f64 round-trip).
pub fn write_value_csv(path: &Path, rows: &[(usize, f64)]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "index,value")?;
    for &(i, v) in rows {
        writeln!(w, "{},{:.16e}", i, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_value_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "index,value") {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::MalformedFile(format!("line {}: missing comma", lineno + 1)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::MalformedFile(format!("line {}: bad index", lineno + 1)))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::MalformedFile(format!("line {}: bad value", lineno + 1)))?;
        rows.push((idx, val));
    }
    Ok(rows)
}

/// Debug dump of a sparse operator as `row,col,value` CSV.
pub fn write_operator_csv(path: &Path, op: &crate::operators::SparseOperator) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "row,col,value")?;
    for (r, c, v) in op.entries() {
        writeln!(w, "{},{},{:.16e}", r, c, v)?;
    }
    w.flush()?;
    Ok(())
}
