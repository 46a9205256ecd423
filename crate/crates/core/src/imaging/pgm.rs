//! Portable graymap (P5 binary, P2 ASCII) with maxval 255.

use super::{GrayImage, Raster};
use crate::error::{Error, Result};

fn decode_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Decode { offset, message: message.into() }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    /// Skips whitespace and `#` comments running to end of line.
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(decode_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| decode_err(start, format!("{what} out of range")))
    }
}

pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(decode_err(0, "missing magic number"));
    }
    let ascii = match bytes[1] {
        b'5' => false,
        b'2' => true,
        _ => return Err(decode_err(1, "only P5 and P2 graymaps are supported")),
    };
    let mut hdr = Header { bytes, pos: 2 };
    if hdr.pos < bytes.len() && !bytes[hdr.pos].is_ascii_whitespace() && bytes[hdr.pos] != b'#' {
        return Err(decode_err(hdr.pos, "expected whitespace after magic number"));
    }
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval_at = {
        hdr.skip_space();
        hdr.pos
    };
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(decode_err(maxval_at, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(decode_err(maxval_at, format!("maxval {maxval} unsupported, expected 255")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| decode_err(maxval_at, "image dimensions overflow"))?;

    let data = if ascii {
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            hdr.skip_space();
            if hdr.pos >= bytes.len() {
                return Err(decode_err(hdr.pos, format!("truncated payload: {} of {n} samples", data.len())));
            }
            let at = hdr.pos;
            let v = hdr.number("sample")?;
            if v > 255 {
                return Err(decode_err(at, format!("sample {v} exceeds maxval")));
            }
            data.push(v as u8);
        }
        data
    } else {
        // exactly one whitespace byte separates maxval from the payload
        if hdr.pos >= bytes.len() || !bytes[hdr.pos].is_ascii_whitespace() {
            return Err(decode_err(hdr.pos, "expected single whitespace before payload"));
        }
        let start = hdr.pos + 1;
        let available = bytes.len() - start;
        if available < n {
            return Err(decode_err(bytes.len(), format!("truncated payload: {available} of {n} bytes")));
        }
        bytes[start..start + n].to_vec()
    };
    GrayImage::new(width, height, data)
}

/// Binary P5 encoding with a minimal header.
pub fn save_pgm(img: &impl Raster) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BinaryImage;
    use proptest::prelude::*;

    #[test]
    fn decodes_binary_and_ascii() {
        let mut p5 = b"P5 2 2 255\n".to_vec();
        p5.extend_from_slice(&[0, 255, 128, 7]);
        let a = load_pgm(&p5).unwrap();
        assert_eq!((a.width(), a.height()), (2, 2));
        assert_eq!(a.data(), &[0, 255, 128, 7]);

        let b = load_pgm(b"P2\n# made by hand\n2 2\n255\n0 255\n128 7\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut p5 = b"P5 2 2 255\n".to_vec();
        p5.extend_from_slice(&[1, 2, 3]);
        match load_pgm(&p5) {
            Err(Error::Decode { offset, message }) => {
                assert_eq!(offset, p5.len());
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_pgm(b"P2 2 2 255 1 2 3"), Err(Error::Decode { .. })));
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(load_pgm(b"P6 1 1 255\n\0\0\0"), Err(Error::Decode { offset: 1, .. })));
        assert!(matches!(load_pgm(b"P5 1 1 65535\n\0\0"), Err(Error::Decode { offset: 7, .. })));
        assert!(matches!(load_pgm(b"P5 x 1 255\n\0"), Err(Error::Decode { offset: 3, .. })));
        assert!(load_pgm(b"").is_err());
        assert!(load_pgm(b"P2 1 1 255 256").is_err());
    }

    #[test]
    fn minimal_stream() {
        let img = GrayImage::filled(1, 1, 0);
        let bytes = save_pgm(&img);
        assert_eq!(bytes, b"P5\n1 1\n255\n\0");
        assert_eq!(load_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn full_frame_payload_size() {
        let img = GrayImage::filled(640, 480, 9);
        let bytes = save_pgm(&img);
        let header = b"P5\n640 480\n255\n".len();
        assert_eq!(bytes.len() - header, 307_200);
    }

    #[test]
    fn binary_images_encode_as_graymaps() {
        let bin = BinaryImage::from_fn(3, 2, |x, y| (x + y) % 2 == 0);
        assert_eq!(load_pgm(&save_pgm(&bin)).unwrap(), bin.to_gray());
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..24, h in 1usize..24, seed in any::<u64>()) {
            let mut s = seed;
            let img = GrayImage::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            });
            prop_assert_eq!(load_pgm(&save_pgm(&img)).unwrap(), img);
        }
    }
}
