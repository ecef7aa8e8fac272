//! Image files: 16-bit PGM depth (millimeters), PFM depth/normals (meters, little
//! endian, bottom row first) and 16-bit grayscale PNG labels.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::geometry::Vec3;
use crate::{Error, Result};

use super::{DepthImage, Image, LabelImage, NormalImage};

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.into() }
}

/// Reads whitespace-separated header tokens; comment lines start with `#`.
fn header_tokens<'a>(bytes: &'a [u8], count: usize, path: &Path) -> Result<(Vec<&'a str>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut pos = 0;
    while tokens.len() < count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, "truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| parse_err(path, "non-ASCII header"))?);
    }
    // Exactly one whitespace byte separates the header from the raster.
    Ok((tokens, pos + 1))
}

fn parse_dim(token: &str, path: &Path) -> Result<usize> {
    token.parse().map_err(|_| parse_err(path, format!("bad dimension {token:?}")))
}

pub fn write_pgm16(depth: &DepthImage, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n65535\n", depth.width(), depth.height())?;
    for &z in depth.data() {
        let mm = (z * 1000.0).round().clamp(0.0, 65535.0) as u16;
        out.write_all(&mm.to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pgm16(path: &Path) -> Result<DepthImage> {
    let bytes = fs::read(path)?;
    let (tok, start) = header_tokens(&bytes, 4, path)?;
    if tok[0] != "P5" || tok[3] != "65535" {
        return Err(parse_err(path, "expected a 16-bit binary PGM"));
    }
    let (w, h) = (parse_dim(tok[1], path)?, parse_dim(tok[2], path)?);
    let raster = bytes.get(start..start + 2 * w * h).ok_or_else(|| parse_err(path, "truncated raster"))?;
    let data = raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 1000.0).collect();
    Image::from_vec(w, h, data)
}

fn write_pfm(path: &Path, width: usize, height: usize, channels: usize, value: impl Fn(usize, usize) -> f32) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "{}\n{} {}\n-1.0\n", if channels == 3 { "PF" } else { "Pf" }, width, height)?;
    for j in (0..height).rev() {
        for i in 0..width {
            for c in 0..channels {
                out.write_all(&value(j * width + i, c).to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_pfm(path: &Path, channels: usize) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path)?;
    let (tok, start) = header_tokens(&bytes, 4, path)?;
    let expected = if channels == 3 { "PF" } else { "Pf" };
    if tok[0] != expected {
        return Err(parse_err(path, format!("expected {expected} header, found {:?}", tok[0])));
    }
    let (w, h) = (parse_dim(tok[1], path)?, parse_dim(tok[2], path)?);
    let scale: f64 = tok[3].parse().map_err(|_| parse_err(path, "bad scale"))?;
    let little = scale < 0.0;
    let raster = bytes.get(start..start + 4 * channels * w * h).ok_or_else(|| parse_err(path, "truncated raster"))?;
    let values: Vec<f32> = raster
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
        })
        .collect();
    // Flip rows back to top-first order.
    let row = channels * w;
    let mut data = Vec::with_capacity(values.len());
    for j in (0..h).rev() {
        data.extend_from_slice(&values[j * row..(j + 1) * row]);
    }
    Ok((w, h, data))
}

pub fn write_pfm_depth(depth: &DepthImage, path: &Path) -> Result<()> {
    write_pfm(path, depth.width(), depth.height(), 1, |idx, _| depth.data()[idx] as f32)
}

pub fn read_pfm_depth(path: &Path) -> Result<DepthImage> {
    let (w, h, data) = read_pfm(path, 1)?;
    Image::from_vec(w, h, data.into_iter().map(f64::from).collect())
}

pub fn write_pfm_normals(normals: &NormalImage, path: &Path) -> Result<()> {
    write_pfm(path, normals.width(), normals.height(), 3, |idx, c| normals.data()[idx][c] as f32)
}

/// Reads a three-channel PFM; non-zero normals are renormalized after the f32 round trip.
pub fn read_pfm_normals(path: &Path) -> Result<NormalImage> {
    let (w, h, data) = read_pfm(path, 3)?;
    let normals = data
        .chunks_exact(3)
        .map(|c| {
            let n = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
            let len = n.norm();
            if len > 0.0 { n / len } else { n }
        })
        .collect();
    Image::from_vec(w, h, normals)
}

pub fn write_png16(labels: &LabelImage, path: &Path) -> Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    let mut encoder = png::Encoder::new(file, labels.width() as u32, labels.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| Error::Format(e.to_string()))?;
    let bytes: Vec<u8> = labels.data().iter().flat_map(|l| l.to_be_bytes()).collect();
    writer.write_image_data(&bytes).map_err(|e| Error::Format(e.to_string()))?;
    writer.finish().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn read_png16(path: &Path) -> Result<LabelImage> {
    let decoder = png::Decoder::new(BufReader::new(fs::File::open(path)?));
    let mut reader = decoder.read_info().map_err(|e| parse_err(path, e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(parse_err(path, "expected 16-bit grayscale PNG"));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; 2 * w * h];
    reader.next_frame(&mut buf).map_err(|e| parse_err(path, e.to_string()))?;
    Image::from_vec(w, h, buf.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth() -> DepthImage {
        Image::from_vec(3, 2, vec![0.0, 0.5, 1.25, 2.0, 0.001, 65.0]).unwrap()
    }

    #[test]
    fn pfm_depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        write_pfm_depth(&depth(), &p).unwrap();
        let back = read_pfm_depth(&p).unwrap();
        for (a, b) in depth().data().iter().zip(back.data()) {
            assert_eq!(*a as f32 as f64, *b);
        }
        assert!(read_pfm_normals(&p).is_err());
    }

    #[test]
    fn pfm_normals_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.pfm");
        let n = Image::from_vec(2, 1, vec![Vec3::new(0.0, 0.6, -0.8), Vec3::zeros()]).unwrap();
        write_pfm_normals(&n, &p).unwrap();
        let back = read_pfm_normals(&p).unwrap();
        assert!((back.data()[0] - n.data()[0]).norm() < 1e-7);
        assert_eq!(back.data()[1], Vec3::zeros());
    }

    #[test]
    fn pgm_stores_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pgm");
        write_pgm16(&depth(), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        let back = read_pgm16(&p).unwrap();
        assert_eq!(back.data(), &[0.0, 0.5, 1.25, 2.0, 0.001, 65.0]);
    }

    #[test]
    fn png_labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.png");
        let labels = Image::from_vec(3, 2, vec![0, 1, 2, 300, 65535, 7]).unwrap();
        write_png16(&labels, &p).unwrap();
        assert_eq!(read_png16(&p).unwrap(), labels);
    }
}
