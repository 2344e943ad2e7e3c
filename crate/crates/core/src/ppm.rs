//! Binary PPM (P6) images, 8-bit channels only.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a binary PPM: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ppm {
    pub width: u32,
    pub height: u32,
    /// RGB triples, row-major.
    pub pixels: Vec<u8>,
}

impl Ppm {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, PpmError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(PpmError::Format(format!(
                "expected {expected} pixel bytes, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image whose pixel at (x, y) is `f(x, y)`.
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PpmError> {
        let mut pos = 0;
        let mut fields = [0u32; 3];
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P6" {
            return Err(PpmError::Format("missing P6 magic".into()));
        }
        for slot in fields.iter_mut() {
            let tok = next_token(bytes, &mut pos)?;
            *slot = std::str::from_utf8(tok)
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| PpmError::Format("bad header number".into()))?;
        }
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(PpmError::Format(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = width as usize * height as usize * 3;
        let raster = bytes
            .get(pos..pos + len)
            .ok_or_else(|| PpmError::Format("truncated raster".into()))?;
        Self::new(width, height, raster.to_vec())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read(path: &Path) -> Result<Self, PpmError> {
        Self::decode(&fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), PpmError> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    /// Copies the `w`x`h` region whose top-left corner is (x, y). `None` if
    /// the region does not lie entirely inside the image.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Option<Self> {
        if w == 0 || h == 0 || x.checked_add(w)? > self.width || y.checked_add(h)? > self.height {
            return None;
        }
        let stride = self.width as usize * 3;
        let mut pixels = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = row as usize * stride + x as usize * 3;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize * 3]);
        }
        Some(Self {
            width: w,
            height: h,
            pixels,
        })
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], PpmError> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(PpmError::Format("truncated header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}
