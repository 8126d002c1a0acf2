//! PNG (8/16-bit, display-encoded) and PFM (32-bit float, linear) images.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{to_gamma, to_linear, Domain, GammaCurve, ImageBuffer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pfm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("png") => Ok(ImageFormat::Png),
            Some("pfm") => Ok(ImageFormat::Pfm),
            _ => Err(Error::format(path, "unknown image extension (expected .png or .pfm)")),
        }
    }
}

/// How stored PNG samples are interpreted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadOptions {
    pub gamma: GammaCurve,
    /// PNG samples are already linear; skip gamma decoding.
    pub png_is_linear: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            gamma: GammaCurve::default(),
            png_is_linear: false,
        }
    }
}

/// Load an image tagged with its storage domain: PFM is linear, PNG is
/// gamma unless `png_is_linear`.
pub fn read_image(path: &Path, opts: ReadOptions) -> Result<ImageBuffer> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Pfm => read_pfm(path),
        ImageFormat::Png => {
            let img = read_png(path)?;
            Ok(if opts.png_is_linear {
                img.with_domain(Domain::Linear)
            } else {
                img
            })
        }
    }
}

/// Load an image and bring it to the linear domain.
pub fn read_image_linear(path: &Path, opts: ReadOptions) -> Result<ImageBuffer> {
    let img = read_image(path, opts)?;
    match img.domain() {
        Domain::Linear => Ok(img),
        Domain::Gamma => to_linear(&img, opts.gamma).map_err(|e| Error::format(path, e.to_string())),
    }
}

/// Write `img`, converting to the storage domain of the format. PNG output
/// is clamped to [0, 1] and quantized to `png_bits` (8 or 16).
pub fn write_image(path: &Path, img: &ImageBuffer, gamma: GammaCurve, png_bits: u8) -> Result<()> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Pfm => {
            let lin = match img.domain() {
                Domain::Linear => img.clone(),
                Domain::Gamma => to_linear(&img.clamped(0.0, f64::MAX), gamma)?,
            };
            write_pfm(path, &lin)
        }
        ImageFormat::Png => {
            let enc = match img.domain() {
                Domain::Gamma => img.clamped(0.0, 1.0),
                Domain::Linear => to_gamma(&img.clamped(0.0, 1.0), gamma)?,
            };
            write_png(path, &enc, png_bits)
        }
    }
}

pub fn read_png(path: &Path) -> Result<ImageBuffer> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, format!("PNG decode: {e}")))?;
    let (color, depth) = reader.output_color_type();
    let in_channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::format(path, "indexed PNG is not supported"));
        }
    };
    let max = match depth {
        png::BitDepth::Eight => 255.0,
        png::BitDepth::Sixteen => 65535.0,
        other => {
            return Err(Error::format(
                path,
                format!("unsupported bit depth {other:?} (expected 8 or 16)"),
            ))
        }
    };
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, format!("PNG decode: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let bytes = &buf[..info.buffer_size()];
    let samples: Vec<f64> = match depth {
        png::BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / max)
            .collect(),
        _ => bytes.iter().map(|&b| b as f64 / max).collect(),
    };
    // drop alpha
    let out_channels = if in_channels >= 3 { 3 } else { 1 };
    let data = if in_channels == out_channels {
        samples
    } else {
        samples
            .chunks_exact(in_channels)
            .flat_map(|px| px[..out_channels].to_vec())
            .collect()
    };
    ImageBuffer::new(w, h, out_channels, Domain::Gamma, data).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_png(path: &Path, img: &ImageBuffer, bits: u8) -> Result<()> {
    let depth = match bits {
        8 => png::BitDepth::Eight,
        16 => png::BitDepth::Sixteen,
        other => return Err(Error::arg(format!("PNG bit depth must be 8 or 16, got {other}"))),
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    enc.set_color(if img.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    enc.set_depth(depth);
    let bytes: Vec<u8> = match depth {
        png::BitDepth::Sixteen => img
            .data()
            .iter()
            .flat_map(|&v| ((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes())
            .collect(),
        _ => img
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect(),
    };
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::format(path, format!("PNG encode: {e}")))?;
    writer
        .write_image_data(&bytes)
        .and_then(|_| writer.finish())
        .map_err(|e| Error::format(path, format!("PNG encode: {e}")))
}

pub fn encode_pfm(img: &ImageBuffer) -> Vec<u8> {
    let tag = if img.channels() == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    let row = img.width() * img.channels();
    for y in (0..img.height()).rev() {
        for &v in &img.data()[y * row..(y + 1) * row] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(path: &Path, bytes: &[u8]) -> Result<ImageBuffer> {
    // three whitespace-terminated header tokens after the tag line
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PFM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match tokens[0].as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(path, format!("bad PFM tag {other:?}"))),
    };
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::format(path, format!("bad PFM {what} {s:?}")))
    };
    let w = parse(&tokens[1], "width")? as usize;
    let h = parse(&tokens[2], "height")? as usize;
    let scale = parse(&tokens[3], "scale")?;
    if scale == 0.0 {
        return Err(Error::format(path, "PFM scale must be nonzero"));
    }
    let little = scale < 0.0;
    let need = w * h * channels * 4;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < need {
        return Err(Error::format(
            path,
            format!(
                "truncated PFM raster at byte offset {}: need {need} bytes, have {}",
                pos + raster.len(),
                raster.len()
            ),
        ));
    }
    let row = w * channels;
    let mut data = vec![0.0; w * h * channels];
    for (i, b) in raster[..need].chunks_exact(4).enumerate() {
        let arr = [b[0], b[1], b[2], b[3]];
        let v = if little {
            f32::from_le_bytes(arr)
        } else {
            f32::from_be_bytes(arr)
        };
        let (file_row, col) = (i / row, i % row);
        data[(h - 1 - file_row) * row + col] = v as f64;
    }
    ImageBuffer::new(w, h, channels, Domain::Linear, data).map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_pfm(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(path, &bytes)
}

pub fn write_pfm(path: &Path, img: &ImageBuffer) -> Result<()> {
    fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f32_image(w: usize, h: usize, c: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, c, Domain::Linear, |x, y, k| {
            (((x * 31 + y * 17 + k * 7) as f32 * 0.013_7).fract() * 1.7) as f64
        })
        .unwrap()
    }

    #[test]
    fn pfm_round_trip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        for c in [1, 3] {
            let p = dir.path().join(format!("img{c}.pfm"));
            let img = f32_image(7, 5, c);
            write_image(&p, &img, GammaCurve::default(), 16).unwrap();
            let back = read_image(&p, ReadOptions::default()).unwrap();
            assert_eq!(back, img);
            assert_eq!(encode_pfm(&back), fs::read(&p).unwrap());
        }
    }

    #[test]
    fn pfm_big_endian_and_errors() {
        let p = Path::new("x.pfm");
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_be_bytes());
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        let img = decode_pfm(p, &bytes).unwrap();
        assert_eq!(img.data(), &[0.5, 2.0]);
        assert!(decode_pfm(p, &bytes[..bytes.len() - 1]).is_err());
        assert!(decode_pfm(p, b"P5\n1 1\n-1.0\n\0\0\0\0").is_err());
    }

    #[test]
    fn png16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        let lin = ImageBuffer::from_fn(9, 4, 3, Domain::Linear, |x, y, c| (x + 2 * y + c) as f64 / 20.0).unwrap();
        let gamma = GammaCurve::default();
        write_image(&p, &lin, gamma, 16).unwrap();
        let stored = read_image(&p, ReadOptions::default()).unwrap();
        assert_eq!(stored.domain(), Domain::Gamma);
        let enc = to_gamma(&lin, gamma).unwrap();
        for (a, b) in enc.data().iter().zip(stored.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
        let back = read_image_linear(&p, ReadOptions::default()).unwrap();
        let again = to_gamma(&back, gamma).unwrap();
        for (a, b) in enc.data().iter().zip(again.data()) {
            assert!((a - b).abs() <= 1.0 / 65535.0);
        }
    }

    #[test]
    fn png8_gray_and_linear_flag() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        let img = ImageBuffer::from_fn(4, 3, 1, Domain::Gamma, |x, y, _| (x * 3 + y) as f64 / 255.0).unwrap();
        write_image(&p, &img, GammaCurve::default(), 8).unwrap();
        let opts = ReadOptions {
            png_is_linear: true,
            ..ReadOptions::default()
        };
        let lin = read_image_linear(&p, opts).unwrap();
        assert_eq!(lin.domain(), Domain::Linear);
        for (a, b) in img.data().iter().zip(lin.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unsupported_bit_depth_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("four.png");
        let file = fs::File::create(&p).unwrap();
        let mut enc = png::Encoder::new(file, 2, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Four);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0x1F, 0xF1]).unwrap();
        w.finish().unwrap();
        match read_image(&p, ReadOptions::default()) {
            Err(Error::Format { message, .. }) => assert!(message.contains("bit depth"), "{message}"),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(ImageFormat::from_path(Path::new("a.jpg")).is_err());
    }
}
