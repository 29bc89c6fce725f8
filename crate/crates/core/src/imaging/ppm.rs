//! 16-bit binary PPM (P6, maxval 65535, big-endian) plus the JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use super::{ImageMeta, LinearImage};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAXVAL: u32 = 65535;

/// `foo.ppm` -> `foo.meta.json`.
pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("meta.json")
}

struct Header {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("file shorter than the magic number".into()));
    }
    if &bytes[..2] != b"P6" {
        return Err(Error::NotP6(String::from_utf8_lossy(&bytes[..2]).into_owned()));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments may separate header tokens.
        let mut saw_space = false;
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => {
                    saw_space = true;
                    pos += 1;
                }
                Some(b'#') => {
                    while let Some(b) = bytes.get(pos) {
                        pos += 1;
                        if *b == b'\n' || *b == b'\r' {
                            break;
                        }
                    }
                    saw_space = true;
                }
                _ => break,
            }
        }
        if !saw_space {
            return Err(Error::MalformedHeader(format!("missing separator before field {i}")));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!("expected a number for field {i}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("number {text:?} out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != MAXVAL {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        data_offset: pos,
    })
}

/// Decodes a P6 16-bit file into `(width, height, samples)`.
pub fn decode_ppm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let h = parse_header(bytes)?;
    let expected = h.width * h.height * 6;
    let body = &bytes[h.data_offset..];
    if body.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: body.len(),
        });
    }
    let samples = body[..expected]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((h.width, h.height, samples))
}

/// Encodes samples with the canonical header `P6\n<w> <h>\n65535\n`.
pub fn encode_ppm16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height * 3, "sample count");
    let header = format!("P6\n{width} {height}\n{MAXVAL}\n");
    let mut out = Vec::with_capacity(header.len() + samples.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Reads an image and its sidecar. Values are taken verbatim, no scaling.
pub fn read_ppm16<T: Scalar>(path: &Path) -> Result<LinearImage<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, samples) = decode_ppm16(&bytes)?;
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(Error::MissingSidecar(side));
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: ImageMeta<T> = serde_json::from_str(&text).map_err(|e| Error::json(&side, e))?;
    let data = samples.into_iter().map(|s| T::of(f64::from(s))).collect();
    LinearImage::new(width, height, data, meta)
}

/// Rounds half up and clamps into the 16-bit range.
fn quantize<T: Scalar>(v: T) -> u16 {
    let q = (v + T::of(0.5)).floor();
    q.max(T::zero()).min(T::of(f64::from(MAXVAL))).to_u16().unwrap_or(0)
}

/// Writes the image as P6/65535 plus `<image>.meta.json`.
pub fn write_ppm16<T: Scalar>(img: &LinearImage<T>, path: &Path) -> Result<()> {
    let samples: Vec<u16> = img.data().iter().map(|v| quantize(*v)).collect();
    let bytes = encode_ppm16(img.width(), img.height(), &samples);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(img.meta()).map_err(|e| Error::json(&side, e))?;
    text.push('\n');
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_meta(path: &Path, bl: f64, sat: f64) {
        let meta = ImageMeta {
            black_level: [bl; 3],
            saturation_level: [sat; 3],
            camera_id: "canon5d".to_string(),
            black_subtracted: false,
        };
        fs::write(sidecar_path(path), serde_json::to_string(&meta).unwrap()).unwrap();
    }

    #[test]
    fn reads_values_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        fs::write(&path, encode_ppm16(2, 1, &[300, 300, 300, 100, 100, 100])).unwrap();
        write_meta(&path, 129.0, 3692.0);
        let img: LinearImage<f64> = read_ppm16(&path).unwrap();
        assert_eq!(img.data(), &[300.0, 300.0, 300.0, 100.0, 100.0, 100.0]);
        assert_eq!(img.black_level(), [129.0; 3]);
        assert_eq!(img.saturation_level(), [3692.0; 3]);
        assert_eq!(img.camera_id(), "canon5d");
        assert!(!img.black_subtracted());
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            decode_ppm16(b"P6\n1 1\n255\n\0\0\0"),
            Err(Error::UnsupportedMaxval(255))
        ));
        assert!(matches!(decode_ppm16(b"P5\n1 1\n65535\n\0\0"), Err(Error::NotP6(_))));
        assert!(matches!(
            decode_ppm16(b"P6\n2 1\n65535\n\0\0\0\0"),
            Err(Error::Truncated { expected: 12, found: 4 })
        ));
        assert!(matches!(
            decode_ppm16(b"P6\nx 1\n65535\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(decode_ppm16(b"P6 1 1 65535"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn comments_in_header_are_skipped() {
        let (w, h, s) = decode_ppm16(b"P6 # made by hand\n1\t1 # size\n65535\n\x01\x02\0\0\xff\xff").unwrap();
        assert_eq!((w, h), (1, 1));
        assert_eq!(s, vec![0x0102, 0, 0xffff]);
    }

    #[test]
    fn missing_sidecar_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lonely.ppm");
        fs::write(&path, encode_ppm16(1, 1, &[1, 2, 3])).unwrap();
        assert!(matches!(read_ppm16::<f64>(&path), Err(Error::MissingSidecar(_))));
    }

    #[test]
    fn write_rounds_half_up() {
        assert_eq!(quantize(2.5f64), 3);
        assert_eq!(quantize(2.4999f64), 2);
        assert_eq!(quantize(70000.0f64), 65535);
    }

    proptest! {
        #[test]
        fn canonical_files_round_trip_byte_identically(
            w in 1usize..6,
            h in 1usize..6,
            seed in proptest::collection::vec(any::<u16>(), 75),
        ) {
            let samples: Vec<u16> = seed.iter().cycle().take(w * h * 3).map(|s| s % 4096).collect();
            let bytes = encode_ppm16(w, h, &samples);
            let dir = tempfile::tempdir().unwrap();
            let src = dir.path().join("src.ppm");
            fs::write(&src, &bytes).unwrap();
            write_meta(&src, 64.0, 4095.0);
            let img: LinearImage<f64> = read_ppm16(&src).unwrap();
            let dst = dir.path().join("dst.ppm");
            write_ppm16(&img, &dst).unwrap();
            prop_assert_eq!(fs::read(&dst).unwrap(), bytes);
        }
    }
}
