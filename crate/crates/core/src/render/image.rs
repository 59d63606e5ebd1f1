use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbaImage};

use crate::error::{Error, Result};

/// RGBA8 image, row-major, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Framebuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Framebuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height * 4],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let i = 4 * (x + self.width * y);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2], self.pixels[i + 3]]
    }

    pub fn is_black(&self) -> bool {
        self.pixels.iter().all(|&b| b == 0)
    }

    /// FNV-1a over dimensions and pixel bytes.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let dims = [self.width as u64, self.height as u64];
        for b in dims.iter().flat_map(|d| d.to_le_bytes()).chain(self.pixels.iter().copied()) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    fn to_image(&self) -> Result<RgbaImage> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Image(format!(
                "cannot encode a {}x{} framebuffer",
                self.width, self.height
            )));
        }
        RgbaImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .ok_or_else(|| Error::Image("pixel buffer does not match dimensions".into()))
    }
}

/// Lossless PNG encoding.
pub fn encode_png(fb: &Framebuffer) -> Result<Vec<u8>> {
    let img = fb.to_image()?;
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<Framebuffer> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?
        .into_rgba8();
    Ok(Framebuffer {
        width: img.width() as usize,
        height: img.height() as usize,
        pixels: img.into_raw(),
    })
}

/// Writes PNG, or binary PPM when the extension is `.ppm`. PPM carries no
/// alpha channel.
pub fn save_image(fb: &Framebuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_ppm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    let bytes = if is_ppm {
        fb.to_image()?;
        let mut out = format!("P6\n{} {}\n255\n", fb.width, fb.height).into_bytes();
        for px in fb.pixels.chunks_exact(4) {
            out.extend_from_slice(&px[..3]);
        }
        out
    } else {
        encode_png(fb)?
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
