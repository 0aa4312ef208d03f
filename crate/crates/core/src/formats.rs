//! Binary file formats: PGM masks, PPM color maps, IMAP1 label rasters and
//! PMAP1 probability stacks. All multi-byte fields are little-endian.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, InstanceMap, ProbMap};

pub const IMAP_MAGIC: &[u8] = b"IMAP1\n";
pub const PMAP_MAGIC: &[u8] = b"PMAP1\n";

/// Encodes a mask as binary PGM with maxval 255 (1 -> 255).
pub fn encode_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&v| if v != 0 { 255 } else { 0 }));
    out
}

/// Decodes a binary PGM; samples above 127 map to 1.
pub fn decode_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let mut header = HeaderReader::new(bytes);
    if header.token()? != "P5" {
        return Err(Error::Format("not a binary PGM (expected P5)".into()));
    }
    let width = header.number()?;
    let height = header.number()?;
    let maxval = header.number()?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let pixels = header.body()?;
    if pixels.len() < width * height {
        return Err(Error::Format(format!(
            "PGM truncated: {} of {} samples",
            pixels.len(),
            width * height
        )));
    }
    let data = pixels[..width * height]
        .iter()
        .map(|&v| (v > 127) as u8)
        .collect();
    BinaryMask::from_vec(height, width, data)
}

/// Raw 8-bit single-band PGM samples, for source rasters that are not masks.
pub fn decode_pgm_samples(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut header = HeaderReader::new(bytes);
    if header.token()? != "P5" {
        return Err(Error::Format("not a binary PGM (expected P5)".into()));
    }
    let width = header.number()?;
    let height = header.number()?;
    let maxval = header.number()?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let pixels = header.body()?;
    if pixels.len() < width * height {
        return Err(Error::Format("PGM truncated".into()));
    }
    Ok((height, width, pixels[..width * height].to_vec()))
}

pub fn encode_pgm_samples(height: usize, width: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// Binary PPM ("P6") from interleaved RGB bytes.
pub fn encode_ppm(height: usize, width: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let mut header = HeaderReader::new(bytes);
    if header.token()? != "P6" {
        return Err(Error::Format("not a binary PPM (expected P6)".into()));
    }
    let width = header.number()?;
    let height = header.number()?;
    if header.number()? != 255 {
        return Err(Error::Format("PPM maxval must be 255".into()));
    }
    let body = header.body()?;
    if body.len() < width * height * 3 {
        return Err(Error::Format("PPM truncated".into()));
    }
    let px = body[..width * height * 3]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok((height, width, px))
}

pub fn encode_imap(map: &InstanceMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(IMAP_MAGIC.len() + 12 + map.labels().len() * 4);
    out.extend_from_slice(IMAP_MAGIC);
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&map.max_label().to_le_bytes());
    for &l in map.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_imap(bytes: &[u8]) -> Result<InstanceMap> {
    let rest = bytes
        .strip_prefix(IMAP_MAGIC)
        .ok_or_else(|| Error::Format("missing IMAP1 magic".into()))?;
    let mut words = Words::new(rest);
    let height = words.next_u32()? as usize;
    let width = words.next_u32()? as usize;
    let max_label = words.next_u32()?;
    let labels = (0..height * width)
        .map(|_| words.next_u32())
        .collect::<Result<Vec<_>>>()?;
    InstanceMap::from_vec(height, width, labels, max_label)
}

pub fn encode_pmap(map: &ProbMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(PMAP_MAGIC.len() + 12 + map.data().len() * 4);
    out.extend_from_slice(PMAP_MAGIC);
    out.extend_from_slice(&(map.channels() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    for &v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_pmap(bytes: &[u8]) -> Result<ProbMap> {
    let rest = bytes
        .strip_prefix(PMAP_MAGIC)
        .ok_or_else(|| Error::Format("missing PMAP1 magic".into()))?;
    let mut words = Words::new(rest);
    let channels = words.next_u32()? as usize;
    let height = words.next_u32()? as usize;
    let width = words.next_u32()? as usize;
    let data = (0..channels * height * width)
        .map(|_| words.next_u32().map(f32::from_bits))
        .collect::<Result<Vec<_>>>()?;
    ProbMap::from_vec(channels, height, width, data)
}

struct Words<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Words<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn next_u32(&mut self) -> Result<u32> {
        let chunk = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        self.pos += 4;
        Ok(u32::from_le_bytes(chunk.try_into().unwrap()))
    }
}

// Netpbm header: whitespace-separated tokens, `#` comments to end of line,
// exactly one whitespace byte before the raster.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&b) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("truncated netpbm header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Format("non-ASCII netpbm header".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Format(format!("bad netpbm header field {tok:?}")))
    }

    fn body(self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(Error::Format("missing separator before raster".into())),
        }
    }
}
