use std::path::Path;

use super::{LabeledDataset, NormStats};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Truncated {
                offset: self.pos as u64,
                needed: n as u64,
            }),
        }
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let offset = self.pos as u64;
        let found = self.u32_be()?;
        if found != expected {
            return Err(Error::BadMagic {
                offset,
                expected: expected.to_be_bytes().to_vec(),
                found: found.to_be_bytes().to_vec(),
            });
        }
        Ok(())
    }
}

/// Parses an IDX image file into a `rows*cols x N` matrix scaled to `[0, 1]`.
/// Pixels of one image are laid out row-major in its column.
pub fn parse_idx_images(bytes: &[u8]) -> Result<DataMatrix> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(IDX_IMAGES_MAGIC)?;
    let n = c.u32_be()? as usize;
    let rows = c.u32_be()? as usize;
    let cols = c.u32_be()? as usize;
    let d = rows * cols;
    if n == 0 || d == 0 {
        return Err(Error::Format {
            offset: 4,
            message: format!("empty image file ({n} images of {rows}x{cols})"),
        });
    }
    let pixels = c.take(n * d)?;
    if c.pos != bytes.len() {
        return Err(Error::Format {
            offset: c.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    let m = nalgebra::DMatrix::from_column_slice(
        d,
        n,
        &pixels.iter().map(|&p| p as f64 / 255.0).collect::<Vec<_>>(),
    );
    Ok(DataMatrix::wrap(m))
}

/// Parses an IDX label file into one byte per sample.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(IDX_LABELS_MAGIC)?;
    let n = c.u32_be()? as usize;
    let labels = c.take(n)?.to_vec();
    if c.pos != bytes.len() {
        return Err(Error::Format {
            offset: c.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    Ok(labels)
}

/// Loads an IDX image/label pair as a data set with classes `"0".."9"`.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let x = load_idx_images(images_path)?;
    let labels = parse_idx_labels(&std::fs::read(labels_path)?)?;
    if labels.len() != x.cols() {
        return Err(Error::Format {
            offset: 4,
            message: format!(
                "label file holds {} labels but the image file holds {} images",
                labels.len(),
                x.cols()
            ),
        });
    }
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            offset: 8 + pos as u64,
            message: format!("label {} is not a digit", labels[pos]),
        });
    }
    let class_names = (0..10).map(|i| i.to_string()).collect();
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let norm = NormStats::identity(x.rows());
    LabeledDataset::from_labels(x, &labels, class_names, norm)
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<DataMatrix> {
    parse_idx_images(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IDX_IMAGES_MAGIC, n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    fn labels(values: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        b.extend_from_slice(&(values.len() as u32).to_be_bytes());
        b.extend_from_slice(values);
        b
    }

    #[test]
    fn all_zero_single_image() {
        let x = parse_idx_images(&images(1, 2, 3, &[0; 6])).unwrap();
        assert_eq!(x.shape(), (6, 1));
        assert!(x.to_row_major().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pixel_position_maps_row_major() {
        // second image, pixel (row 1, col 0) is 255
        let px = [0, 0, 0, 0, 0, 0, 255, 0];
        let x = parse_idx_images(&images(2, 2, 2, &px)).unwrap();
        assert_eq!(x.shape(), (4, 2));
        assert_eq!(x[(2, 1)], 1.0);
        let total: f64 = x.to_row_major().iter().sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let mut b = images(1, 1, 1, &[0]);
        b[3] = 0x01;
        assert!(matches!(
            parse_idx_images(&b),
            Err(Error::BadMagic { offset: 0, .. })
        ));
        assert!(matches!(
            parse_idx_labels(&images(1, 1, 1, &[0])),
            Err(Error::BadMagic { offset: 0, .. })
        ));
    }

    #[test]
    fn truncated_pixels() {
        let b = images(2, 2, 2, &[0; 5]);
        assert!(matches!(
            parse_idx_images(&b),
            Err(Error::Truncated {
                offset: 16,
                needed: 8
            })
        ));
        assert!(matches!(
            parse_idx_images(&b[..10]),
            Err(Error::Truncated { offset: 8, .. })
        ));
    }

    #[test]
    fn count_mismatch_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        std::fs::write(&ip, images(2, 1, 1, &[0, 255])).unwrap();
        std::fs::write(&lp, labels(&[3])).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Format { .. })));

        std::fs::write(&lp, labels(&[3, 7])).unwrap();
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.n_classes(), 10);
        assert_eq!(ds.labels(), vec![3, 7]);
        assert_eq!(ds.class_names[7], "7");
    }
}
