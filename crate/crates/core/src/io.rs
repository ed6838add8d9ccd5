//! Linear 16-bit PNG encoding of HDR maps and 8-bit visualizations.
//!
//! A stored value decodes as `offset + raw / 65535 · scale`; the encoding
//! parameters live outside the PNG (sidecar metadata or a manifest).

use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, Rgb as PxRgb};
use serde::{Deserialize, Serialize};

use crate::brdf::{Vec3, ALPHA_MIN};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, RadianceImage, Rgb, ScalarMap};
use crate::maps::SvbrdfMaps;

pub const PNG16_MAX: f64 = 65535.0;

/// Affine decoding parameters of a 16-bit PNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub offset: f64,
    pub scale: f64,
}

impl Encoding {
    pub const UNIT: Encoding = Encoding {
        offset: 0.0,
        scale: 1.0,
    };
    /// Unit vectors stored as `(n + 1) / 2`.
    pub const SIGNED_UNIT: Encoding = Encoding {
        offset: -1.0,
        scale: 2.0,
    };

    pub fn encode(&self, v: f64) -> u16 {
        (((v - self.offset) / self.scale).clamp(0.0, 1.0) * PNG16_MAX).round() as u16
    }

    pub fn decode(&self, raw: u16) -> f64 {
        self.offset + raw as f64 / PNG16_MAX * self.scale
    }

    /// Largest decode error for values inside the encoded range.
    pub fn half_step(&self) -> f64 {
        0.5 * self.scale / PNG16_MAX
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    /// Scale to the image maximum (1.0 for an all-zero image); never clips.
    Max,
    /// Fixed scale; larger values clip to the PNG ceiling.
    Fixed(f64),
}

/// Metadata returned by [`png16_write`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Png16Meta {
    pub scale: f64,
    /// Number of channel values clipped at the ceiling.
    #[serde(default)]
    pub clipped: usize,
    /// True when the scale was a fixed exposure, so ceiling values mean
    /// saturation.
    #[serde(default)]
    pub fixed_exposure: bool,
}

fn write_rgb16(path: &Path, w: usize, h: usize, raw: Vec<u16>) -> Result<()> {
    let buf: ImageBuffer<PxRgb<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized to dimensions");
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

fn write_gray16(path: &Path, w: usize, h: usize, raw: Vec<u16>) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized to dimensions");
    buf.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?)
}

fn check_dims(path: &Path, got: (usize, usize), want: Option<(usize, usize)>) -> Result<()> {
    match want {
        Some(want) if want != got => Err(Error::DimensionMismatch(format!(
            "{}: decoded {}x{}, expected {}x{}",
            path.display(),
            got.0,
            got.1,
            want.0,
            want.1
        ))),
        _ => Ok(()),
    }
}

/// Writes linear radiance; returns the scale needed to decode it.
pub fn png16_write(img: &RadianceImage, path: impl AsRef<Path>, exposure: Exposure) -> Result<Png16Meta> {
    img.check_radiance("png16_write")?;
    let (scale, fixed) = match exposure {
        Exposure::Max => {
            let m = img.max_value();
            (if m > 0.0 { m } else { 1.0 }, false)
        }
        Exposure::Fixed(s) if s > 0.0 && s.is_finite() => (s, true),
        Exposure::Fixed(s) => return Err(Error::InvalidInput(format!("exposure scale {s} must be positive"))),
    };
    let enc = Encoding { offset: 0.0, scale };
    let mut clipped = 0;
    let raw: Vec<u16> = img
        .data()
        .iter()
        .flat_map(|p| p.iter().copied())
        .map(|v| {
            if v > scale {
                clipped += 1;
            }
            enc.encode(v)
        })
        .collect();
    write_rgb16(path.as_ref(), img.width(), img.height(), raw)?;
    Ok(Png16Meta {
        scale,
        clipped,
        fixed_exposure: fixed,
    })
}

/// Reads linear radiance written by [`png16_write`].
pub fn png16_read(path: impl AsRef<Path>, scale: f64) -> Result<RadianceImage> {
    let (img, _) = read_rgb16(path.as_ref(), Encoding { offset: 0.0, scale }, None)?;
    Ok(img)
}

/// Reads a 16-bit RGB PNG, also returning pixels where any channel sits at
/// the ceiling.
pub fn read_rgb16(path: &Path, enc: Encoding, dims: Option<(usize, usize)>) -> Result<(Grid<Rgb>, Mask)> {
    let img = open(path)?.into_rgb16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    check_dims(path, (w, h), dims)?;
    let mut px = Vec::with_capacity(w * h);
    let mut ceil = Vec::with_capacity(w * h);
    for p in img.pixels() {
        px.push(p.0.map(|r| enc.decode(r)));
        ceil.push(p.0.contains(&u16::MAX));
    }
    Ok((Grid::from_vec(w, h, px)?, Grid::from_vec(w, h, ceil)?))
}

pub fn write_rgb16_map(map: &Grid<Rgb>, enc: Encoding, path: impl AsRef<Path>) -> Result<()> {
    let raw = map.data().iter().flat_map(|p| p.map(|v| enc.encode(v))).collect();
    write_rgb16(path.as_ref(), map.width(), map.height(), raw)
}

pub fn write_gray16_map(map: &ScalarMap, enc: Encoding, path: impl AsRef<Path>) -> Result<()> {
    let raw = map.data().iter().map(|&v| enc.encode(v)).collect();
    write_gray16(path.as_ref(), map.width(), map.height(), raw)
}

pub fn read_gray16_map(path: impl AsRef<Path>, enc: Encoding, dims: Option<(usize, usize)>) -> Result<ScalarMap> {
    let path = path.as_ref();
    let img = open(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    check_dims(path, (w, h), dims)?;
    Grid::from_vec(w, h, img.pixels().map(|p| enc.decode(p.0[0])).collect())
}

/// Normal map as `(n + 1) / 2`; pixels outside `mask` are stored as zero.
pub fn write_normal_map(normals: &Grid<Vec3>, mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let enc = Encoding::SIGNED_UNIT;
    let raw = normals
        .data()
        .iter()
        .zip(mask.data())
        .flat_map(|(n, &m)| if m { [n.x, n.y, n.z].map(|v| enc.encode(v)) } else { [0; 3] })
        .collect();
    write_rgb16(path.as_ref(), normals.width(), normals.height(), raw)
}

/// Reads a normal map; vectors are re-normalized on `mask` and zero elsewhere.
pub fn read_normal_map(path: impl AsRef<Path>, mask: &Mask) -> Result<Grid<Vec3>> {
    let (g, _) = read_rgb16(path.as_ref(), Encoding::SIGNED_UNIT, Some(mask.dims()))?;
    let mut out = g.map(|p| Vec3::new(p[0], p[1], p[2]).try_normalize(1e-12).unwrap_or_else(Vec3::z));
    for (n, &m) in out.data_mut().iter_mut().zip(mask.data()) {
        if !m {
            *n = Vec3::zeros();
        }
    }
    Ok(out)
}

/// Coverage implied by a normal map: pixels not stored as zero.
pub fn normal_map_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let (g, _) = read_rgb16(path.as_ref(), Encoding::UNIT, None)?;
    Ok(g.map(|p| p.iter().any(|&v| v > 0.0)))
}

pub fn write_rgb8(img: &Grid<[u8; 3]>, path: impl AsRef<Path>) -> Result<()> {
    let raw = img.data().iter().flat_map(|p| *p).collect();
    let buf: ImageBuffer<PxRgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer sized to dimensions");
    buf.save_with_format(path.as_ref(), ImageFormat::Png)?;
    Ok(())
}

pub fn read_rgb8(path: impl AsRef<Path>) -> Result<Grid<[u8; 3]>> {
    let img = open(path.as_ref())?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Grid::from_vec(w, h, img.pixels().map(|p| p.0).collect())
}

pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let raw = mask.data().iter().map(|&m| if m { 255u8 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, raw).expect("buffer sized to dimensions");
    buf.save_with_format(path.as_ref(), ImageFormat::Png)?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = open(path.as_ref())?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Grid::from_vec(w, h, img.pixels().map(|p| p.0[0] >= 128).collect())
}

/// File stems of the five maps, in write order.
pub const MAP_NAMES: [&str; 5] = ["diffuse", "specular", "roughness", "normal", "depth"];

/// Decoding parameters of a written map set (only depth needs any).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSetMeta {
    /// Min/max of depth over the mask.
    pub depth: Encoding,
}

/// Writes `{prefix}{diffuse,specular,roughness,normal,depth}.png` into `dir`.
/// Albedos and roughness use the unit encoding, normals `(n + 1) / 2`, and
/// depth its min/max range over the mask.
pub fn write_map_set(dir: impl AsRef<Path>, prefix: &str, maps: &SvbrdfMaps) -> Result<MapSetMeta> {
    let dir = dir.as_ref();
    let file = |name: &str| dir.join(format!("{prefix}{name}.png"));
    let mut masked = maps.clone();
    masked.clear_outside_mask();
    write_rgb16_map(&masked.diffuse, Encoding::UNIT, file("diffuse"))?;
    write_rgb16_map(&masked.specular, Encoding::UNIT, file("specular"))?;
    write_gray16_map(&masked.roughness, Encoding::UNIT, file("roughness"))?;
    write_normal_map(&masked.normal, &masked.mask, file("normal"))?;
    let (lo, hi) = masked
        .depth
        .data()
        .iter()
        .zip(masked.mask.data())
        .filter(|(_, &m)| m)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&d, _)| (lo.min(d), hi.max(d)));
    let depth = if lo.is_finite() {
        Encoding {
            offset: lo,
            scale: if hi > lo { hi - lo } else { 1.0 },
        }
    } else {
        Encoding::UNIT
    };
    write_gray16_map(&masked.depth, depth, file("depth"))?;
    Ok(MapSetMeta { depth })
}

/// Reads a map set written by [`write_map_set`]. Values outside `mask` are
/// zeroed, normals re-normalized and roughness clamped to its valid range.
pub fn read_map_set(dir: impl AsRef<Path>, prefix: &str, meta: &MapSetMeta, mask: &Mask) -> Result<SvbrdfMaps> {
    let dir = dir.as_ref();
    let file = |name: &str| dir.join(format!("{prefix}{name}.png"));
    let dims = Some(mask.dims());
    let mut maps = SvbrdfMaps {
        diffuse: read_rgb16(&file("diffuse"), Encoding::UNIT, dims)?.0,
        specular: read_rgb16(&file("specular"), Encoding::UNIT, dims)?.0,
        roughness: read_gray16_map(file("roughness"), Encoding::UNIT, dims)?,
        normal: read_normal_map(file("normal"), mask)?,
        depth: read_gray16_map(file("depth"), meta.depth, dims)?,
        mask: mask.clone(),
    };
    for (r, &m) in maps.roughness.data_mut().iter_mut().zip(mask.data()) {
        if m {
            *r = r.clamp(ALPHA_MIN, 1.0);
        }
    }
    maps.clear_outside_mask();
    Ok(maps)
}

/// Short stable digest of a serializable configuration.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(value).expect("configurations serialize");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// 8-bit sRGB-ish preview: `clamp(v / scale)^(1/2.2)`.
pub fn tonemap_preview(img: &RadianceImage, scale: f64) -> Grid<[u8; 3]> {
    let s = if scale > 0.0 { scale } else { 1.0 };
    img.map(|p| p.map(|v| ((v / s).clamp(0.0, 1.0).powf(1.0 / 2.2) * 255.0).round() as u8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_endpoints() {
        let e = Encoding { offset: 0.0, scale: 3.7 };
        assert_eq!(e.encode(3.7), u16::MAX);
        assert_eq!(e.decode(u16::MAX), 3.7);
        assert_eq!(e.encode(-1.0), 0);
        let n = Encoding::SIGNED_UNIT;
        assert_eq!(n.decode(n.encode(-1.0)), -1.0);
        assert_eq!(n.decode(n.encode(1.0)), 1.0);
    }

    #[test]
    fn radiance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Grid::from_fn(7, 5, |x, y| [x as f64 * 0.5, y as f64 * 0.1, 3.7 * ((x + y) % 2) as f64]);
        let meta = png16_write(&img, &p, Exposure::Max).unwrap();
        assert_eq!(meta.scale, 3.7);
        let back = png16_read(&p, meta.scale).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= meta.scale / PNG16_MAX * 0.5 + 1e-9);
            }
        }
        assert_eq!(back.get(1, 0)[2], 3.7);
    }

    #[test]
    fn zero_image_and_fixed_exposure() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.png");
        let meta = png16_write(&Grid::zeros(3, 3), &p, Exposure::Max).unwrap();
        assert_eq!(meta.scale, 1.0);
        assert!(png16_read(&p, 1.0).unwrap().data().iter().all(|v| *v == [0.0; 3]));

        let img = Grid::filled(2, 2, [0.5, 2.0, 0.1]);
        let meta = png16_write(&img, &p, Exposure::Fixed(1.0)).unwrap();
        assert_eq!(meta.clipped, 4);
        let (_, sat) = read_rgb16(&p, Encoding::UNIT, None).unwrap();
        assert_eq!(sat.count(), 4);
    }

    #[test]
    fn map_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut maps = SvbrdfMaps::empty(6, 4);
        for i in 0..24 {
            if i % 5 != 0 {
                maps.mask.data_mut()[i] = true;
                maps.diffuse.data_mut()[i] = [0.1 * (i % 7) as f64, 0.5, 1.0];
                maps.specular.data_mut()[i] = [0.04; 3];
                maps.roughness.data_mut()[i] = ALPHA_MIN + 0.03 * i as f64;
                maps.normal.data_mut()[i] = Vec3::new(0.1 * (i % 3) as f64, -0.2, 1.0).normalize();
                maps.depth.data_mut()[i] = 2.0 + 0.01 * i as f64;
            }
        }
        let meta = write_map_set(dir.path(), "gt_", &maps).unwrap();
        assert_eq!(meta.depth.offset, 2.01);
        let back = read_map_set(dir.path(), "gt_", &meta, &maps.mask).unwrap();
        back.validate().unwrap();
        for i in 0..24 {
            assert!((back.depth.data()[i] - maps.depth.data()[i]).abs() <= meta.depth.half_step() + 1e-12);
            assert!((back.normal.data()[i] - maps.normal.data()[i]).norm() < 1e-4);
            assert!((back.roughness.data()[i] - maps.roughness.data()[i]).abs() <= 1e-5);
        }
    }

    #[test]
    fn missing_file_and_dimension_check() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            png16_read(dir.path().join("nope.png"), 1.0),
            Err(Error::MissingFile(_))
        ));
        let p = dir.path().join("m.png");
        write_gray16_map(&Grid::zeros(4, 3), Encoding::UNIT, &p).unwrap();
        assert!(matches!(
            read_gray16_map(&p, Encoding::UNIT, Some((3, 3))),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
