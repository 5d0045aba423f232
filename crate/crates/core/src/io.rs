//! PFM and PNG input/output and disparity visualization.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ColorImage, GrayImage, Grid};

/// Parses a grayscale PFM image. Rows are stored bottom-to-top; `inf`
/// marks unknown disparity.
pub fn parse_pfm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut token = |what: &str| -> Result<(String, usize)> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pfm {
                offset: start,
                message: format!("missing {what}"),
            });
        }
        Ok((String::from_utf8_lossy(&bytes[start..pos]).into_owned(), start))
    };

    let (magic, at) = token("header")?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(Error::UnsupportedPfm(magic)),
        _ => {
            return Err(Error::Pfm {
                offset: at,
                message: format!("bad magic {magic:?}"),
            })
        }
    }
    let mut number = |what: &str| -> Result<(f64, usize)> {
        let (t, at) = token(what)?;
        t.parse::<f64>().map(|v| (v, at)).map_err(|_| Error::Pfm {
            offset: at,
            message: format!("bad {what} {t:?}"),
        })
    };
    let (w, at_w) = number("width")?;
    let (h, at_h) = number("height")?;
    let (scale, at_s) = number("scale")?;
    for (v, at, what) in [(w, at_w, "width"), (h, at_h, "height")] {
        if !(v >= 0.0 && v.fract() == 0.0) {
            return Err(Error::Pfm {
                offset: at,
                message: format!("bad {what} {v}"),
            });
        }
    }
    if scale == 0.0 {
        return Err(Error::Pfm {
            offset: at_s,
            message: "scale must be non-zero".into(),
        });
    }
    let (w, h) = (w as usize, h as usize);
    // exactly one whitespace byte separates the header from the payload
    let data_start = pos + 1;
    let need = w * h * 4;
    if bytes.len() < data_start + need {
        return Err(Error::Pfm {
            offset: bytes.len(),
            message: format!("truncated payload: expected {need} bytes after offset {data_start}"),
        });
    }
    let little = scale < 0.0;
    let payload = &bytes[data_start..data_start + need];
    let mut img = Grid::new(w, h, 0.0);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, row) = (i % w, i / w);
        *img.get_mut(x, h - 1 - row) = v as f64;
    }
    Ok(img)
}

pub fn read_pfm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes)
}

/// Little-endian grayscale PFM encoding of `img` (values stored as `f32`).
pub fn encode_pfm(img: &GrayImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for &v in img.row(y) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_pfm(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
    }
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// 8-bit color image as RGB values in `[0, 255]`.
pub fn read_color(path: &Path) -> Result<ColorImage> {
    let img = open_image(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Grid::from_fn(w as usize, h as usize, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }))
}

/// Mask image; a pixel is included when its (first-channel) value is 255.
pub fn read_mask(path: &Path) -> Result<Grid<bool>> {
    let img = open_image(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Grid::from_fn(w as usize, h as usize, |x, y| img.get_pixel(x as u32, y as u32).0[0] == 255))
}

pub fn write_color(img: &Grid<[u8; 3]>, path: &Path) -> Result<()> {
    let buf: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    image::save_buffer(path, &buf, img.width() as u32, img.height() as u32, image::ColorType::Rgb8).map_err(|source| {
        Error::Image {
            path: path.to_path_buf(),
            source,
        }
    })
}

pub fn write_color_f64(img: &ColorImage, path: &Path) -> Result<()> {
    write_color(&img.map(|c| c.map(|v| v.round().clamp(0.0, 255.0) as u8)), path)
}

/// Perceptually uniform ramp from dark purple to yellow.
const RAMP: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Ramp color of one disparity; black for non-finite values.
pub fn ramp_color(d: f64, disp_max: f64) -> [u8; 3] {
    if !d.is_finite() {
        return [0, 0, 0];
    }
    let t = (d / disp_max).clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let s = t - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = ((1.0 - s) * RAMP[i][c] + s * RAMP[i + 1][c]).round() as u8;
    }
    out
}

/// Linear map of `[0, disp_max]` onto the color ramp. Pixels outside
/// `valid` (when given) or with non-finite disparity are black.
pub fn colorize(disp: &GrayImage, disp_max: f64, valid: Option<&Grid<bool>>) -> Grid<[u8; 3]> {
    assert!(disp_max > 0.0, "disp_max must be positive");
    Grid::from_fn(disp.width(), disp.height(), |x, y| {
        if valid.is_some_and(|m| !*m.get(x, y)) {
            [0, 0, 0]
        } else {
            ramp_color(*disp.get(x, y), disp_max)
        }
    })
}
