//! Grayscale PGM (binary P5) and PNG files.
//!
//! Decoding accepts single-channel rasters with 8- or 16-bit samples and
//! scales them to `[0, 1]` by the container's maximum value. Encoding clips to
//! `[0, 1]` and rounds to the nearest code.

use std::io::Cursor;
use std::path::Path;

use hushcam_core::Image;

use crate::error::{DecodeError, Error, Result};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    #[default]
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "pgm" => Some(ImageFormat::Pgm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleDepth {
    Eight,
    Sixteen,
}

impl SampleDepth {
    fn max_code(self) -> f64 {
        match self {
            SampleDepth::Eight => 255.0,
            SampleDepth::Sixteen => 65535.0,
        }
    }
}

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}

/// Decodes by content, not by file extension.
pub fn decode(bytes: &[u8]) -> Result<Image, DecodeError> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.first() == Some(&b'P') {
        decode_pgm(bytes)
    } else {
        Err(DecodeError::UnknownContainer(bytes.iter().take(4).copied().collect()))
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, DecodeError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(DecodeError::MalformedHeader(what))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image, DecodeError> {
    let magic = bytes.get(..2).ok_or(DecodeError::MalformedHeader("magic number"))?;
    match magic {
        b"P5" => {}
        b"P6" => return Err(DecodeError::UnsupportedChannels(3)),
        b"P7" => return Err(DecodeError::UnsupportedVariant("P7 (PAM)".into())),
        [b'P', d @ b'1'..=b'4'] => {
            return Err(DecodeError::UnsupportedVariant(format!("P{} (plain or bitmap)", *d as char)))
        }
        _ => return Err(DecodeError::MalformedHeader("magic number")),
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(DecodeError::BadMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(DecodeError::MalformedHeader("zero dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(DecodeError::MalformedHeader("missing separator after maxval"));
    }
    let data = &bytes[h.pos + 1..];
    let wide = maxval > 255;
    let expected = width * height * if wide { 2 } else { 1 };
    if data.len() < expected {
        return Err(DecodeError::Truncated {
            expected,
            found: data.len(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let pixels: Vec<f64> = if wide {
        data[..expected]
            .chunks_exact(2)
            .map(|b| (u16::from_be_bytes([b[0], b[1]]) as f64 * scale).min(1.0))
            .collect()
    } else {
        data[..expected].iter().map(|&b| (b as f64 * scale).min(1.0)).collect()
    };
    Image::new(width, height, pixels).map_err(|_| DecodeError::MalformedHeader("dimensions"))
}

pub fn decode_png(bytes: &[u8]) -> Result<Image, DecodeError> {
    let png_err = |e: png::DecodingError| DecodeError::Png(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    let channels = info.color_type.samples() as u8;
    if info.color_type != png::ColorType::Grayscale {
        return Err(DecodeError::UnsupportedChannels(channels));
    }
    let depth = info.bit_depth as u32;
    if !matches!(info.bit_depth, png::BitDepth::Eight | png::BitDepth::Sixteen) {
        return Err(DecodeError::UnsupportedBitDepth(depth));
    }
    let size = reader
        .output_buffer_size()
        .ok_or(DecodeError::MalformedHeader("image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let line = frame.line_size;
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf[..frame.buffer_size()].chunks_exact(line) {
        if depth == 16 {
            pixels.extend(
                row[..2 * w]
                    .chunks_exact(2)
                    .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0),
            );
        } else {
            pixels.extend(row[..w].iter().map(|&b| b as f64 / 255.0));
        }
    }
    Image::new(w, h, pixels).map_err(|_| DecodeError::MalformedHeader("dimensions"))
}

fn quantize(img: &Image, depth: SampleDepth) -> Vec<u8> {
    let max = depth.max_code();
    let code = |v: f64| (v.clamp(0.0, 1.0) * max).round();
    match depth {
        SampleDepth::Eight => img.pixels().iter().map(|&v| code(v) as u8).collect(),
        SampleDepth::Sixteen => img
            .pixels()
            .iter()
            .flat_map(|&v| (code(v) as u16).to_be_bytes())
            .collect(),
    }
}

pub fn encode_pgm(img: &Image, depth: SampleDepth) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), depth.max_code()).into_bytes();
    out.extend(quantize(img, depth));
    out
}

pub fn encode_png(img: &Image, depth: SampleDepth) -> Vec<u8> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(match depth {
        SampleDepth::Eight => png::BitDepth::Eight,
        SampleDepth::Sixteen => png::BitDepth::Sixteen,
    });
    // Writing into a Vec cannot fail once the header is consistent.
    let mut writer = enc.write_header().expect("valid png header");
    writer.write_image_data(&quantize(img, depth)).expect("in-memory png write");
    writer.finish().expect("in-memory png write");
    out
}

pub fn encode(img: &Image, format: ImageFormat, depth: SampleDepth) -> Vec<u8> {
    match format {
        ImageFormat::Pgm => encode_pgm(img, depth),
        ImageFormat::Png => encode_png(img, depth),
    }
}
