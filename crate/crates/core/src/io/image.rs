use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// An 8-bit RGB image with interleaved pixels in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("dimensions", format!("{width}x{height} image is empty")));
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved `r, g, b` bytes.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Channel-planar series: every red value in row-major order, then green,
/// then blue.
pub fn flatten_image(img: &ImageTensor) -> TimeSeries {
    let values = (0..3)
        .flat_map(|c| img.pixels.iter().skip(c).step_by(3).map(|&b| f64::from(b)))
        .collect();
    TimeSeries::new(values).expect("an image has at least one finite value")
}

/// Inverse of [`flatten_image`]. One trailing extra value is tolerated and
/// dropped; values are rounded and clamped to `0..=255`.
pub fn unflatten_image(series: &TimeSeries, width: usize, height: usize) -> Result<ImageTensor> {
    let plane = width * height;
    let n = plane * 3;
    let values = series.values();
    if values.len() != n && values.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: values.len(),
        });
    }
    let mut pixels = vec![0u8; n];
    for (c, chunk) in values[..n].chunks(plane).enumerate() {
        for (p, &v) in chunk.iter().enumerate() {
            pixels[3 * p + c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    ImageTensor::new(width, height, pixels)
}

struct Header {
    width: usize,
    height: usize,
    data_start: usize,
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::MalformedHeader("unexpected end of header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u64> {
    let tok = header_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::MalformedHeader(format!("invalid {what} `{tok}`")))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != "P6" {
        return Err(Error::UnsupportedPpmVariant(magic));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(u32::try_from(maxval).unwrap_or(u32::MAX)));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing separator after maxval".into())),
    }
    let dims = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .filter(|(w, h)| w.checked_mul(*h).and_then(|p| p.checked_mul(3)).is_some())
        .ok_or_else(|| Error::MalformedHeader(format!("dimensions {width}x{height} too large")))?;
    Ok(Header {
        width: dims.0,
        height: dims.1,
        data_start: pos,
    })
}

/// Parses a binary (`P6`, maxval 255) PPM image.
pub fn decode_ppm(bytes: &[u8]) -> Result<ImageTensor> {
    let h = parse_header(bytes)?;
    let expected = h.width * h.height * 3;
    let data = &bytes[h.data_start..];
    if data.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            actual: data.len(),
        });
    }
    ImageTensor::new(h.width, h.height, data[..expected].to_vec())
}

pub fn encode_ppm(img: &ImageTensor) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageTensor> {
    decode_ppm(&fs::read(path)?)
}

pub fn write_ppm(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_ppm(img))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pixel() {
        let img = ImageTensor::new(1, 1, vec![10, 20, 30]).unwrap();
        assert_eq!(flatten_image(&img).values(), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn channel_planar_order() {
        let img = ImageTensor::new(2, 1, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(flatten_image(&img).values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn clamps_and_rounds() {
        let s = TimeSeries::new(vec![-3.2, 260.7, 127.5, 0.49, 1.0, 2.0]).unwrap();
        let img = unflatten_image(&s, 2, 1).unwrap();
        assert_eq!(img.pixel(0, 0), [0, 128, 1]);
        assert_eq!(img.pixel(1, 0), [255, 0, 2]);
    }

    #[test]
    fn length_slack_of_one() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 99.0]).unwrap();
        assert_eq!(unflatten_image(&s, 1, 1).unwrap().pixels(), &[1, 2, 3]);
        let s = TimeSeries::new(vec![1.0; 5]).unwrap();
        assert!(unflatten_image(&s, 1, 1).is_err());
        let s = TimeSeries::new(vec![1.0; 2]).unwrap();
        assert!(unflatten_image(&s, 1, 1).is_err());
    }

    #[test]
    fn header_errors_are_distinct() {
        let e = decode_ppm(b"P3\n1 1\n255\n0 0 0\n").unwrap_err();
        assert!(e.to_string().contains("unsupported PPM variant"), "{e}");
        let e = decode_ppm(b"P6\n1 1\n65535\n\0\0\0\0\0\0").unwrap_err();
        assert!(e.to_string().contains("unsupported maxval"), "{e}");
        let e = decode_ppm(b"P6\n2 2\n255\n\0\0\0").unwrap_err();
        assert!(matches!(e, Error::TruncatedData { expected: 12, actual: 3 }), "{e}");
        let e = decode_ppm(b"P6\nx 2\n255\n").unwrap_err();
        assert!(matches!(e, Error::MalformedHeader(_)), "{e}");
        let e = decode_ppm(b"P6\n2").unwrap_err();
        assert!(matches!(e, Error::MalformedHeader(_)), "{e}");
    }

    #[test]
    fn comments_in_header() {
        let img = decode_ppm(b"P6 # made by hand\n# another\n1 # w\n1\n255\n\x07\x08\x09").unwrap();
        assert_eq!(img.pixels(), &[7, 8, 9]);
    }

    #[test]
    fn raster_may_start_with_whitespace_bytes() {
        let img = decode_ppm(b"P6\n1 1\n255\n\n\t ").unwrap();
        assert_eq!(img.pixels(), b"\n\t ");
    }

    fn image() -> impl Strategy<Value = ImageTensor> {
        (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h * 3)
                .prop_map(move |px| ImageTensor::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn flatten_round_trip(img in image()) {
            let back = unflatten_image(&flatten_image(&img), img.width(), img.height()).unwrap();
            prop_assert_eq!(back, img);
        }

        #[test]
        fn ppm_round_trip(img in image()) {
            let bytes = encode_ppm(&img);
            let back = decode_ppm(&bytes).unwrap();
            prop_assert_eq!(encode_ppm(&back), bytes);
            prop_assert_eq!(back, img);
        }
    }
}
