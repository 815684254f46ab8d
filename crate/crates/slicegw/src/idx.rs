//! The IDX container used by MNIST: a big-endian header (magic number,
//! then one `u32` per dimension) followed by raw `u8` data.

use std::fs;
use std::path::Path;

use slicegw_core::autodiff::Tensor;
use slicegw_core::data::{Domain, LabeledDataset, Split};

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

struct Header {
    dims: Vec<usize>,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path, magic: u32, ndims: usize) -> Result<Header> {
    let err = |offset: usize, message: String| Error::Idx { path: path.to_path_buf(), offset: offset as u64, message };
    let word = |offset: usize| -> Result<u32> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| err(offset, format!("truncated header: file has {} bytes", bytes.len())))
    };
    let found = word(0)?;
    if found != magic {
        return Err(err(0, format!("bad magic 0x{found:08x}, expected 0x{magic:08x}")));
    }
    let dims = (0..ndims).map(|k| word(4 + 4 * k).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let data_offset = 4 + 4 * ndims;
    let expected = dims.iter().product::<usize>();
    let available = bytes.len() - data_offset;
    if available < expected {
        return Err(err(
            bytes.len(),
            format!("truncated data: header promises {expected} bytes after offset {data_offset}, found {available}"),
        ));
    }
    if available > expected {
        return Err(err(data_offset + expected, format!("{} trailing bytes after the data", available - expected)));
    }
    Ok(Header { dims, data_offset })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image file and its label file. Pixels are scaled by `1/255`
/// and each image is flattened row-major. The class count is one more
/// than the largest label.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, split: Split) -> Result<LabeledDataset> {
    let (ipath, lpath) = (images.as_ref(), labels.as_ref());
    let ibytes = read(ipath)?;
    let lbytes = read(lpath)?;
    let ih = parse_header(&ibytes, ipath, IMAGES_MAGIC, 3)?;
    let lh = parse_header(&lbytes, lpath, LABELS_MAGIC, 1)?;
    let (n, rows, cols) = (ih.dims[0], ih.dims[1], ih.dims[2]);
    if lh.dims[0] != n {
        return Err(Error::Idx {
            path: lpath.to_path_buf(),
            offset: 4,
            message: format!("count mismatch: {} labels for {n} images in {}", lh.dims[0], ipath.display()),
        });
    }
    let pixels: Vec<f64> = ibytes[ih.data_offset..].iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels: Vec<usize> = lbytes[lh.data_offset..].iter().map(|&b| usize::from(b)).collect();
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let features = Tensor::from_vec(n, rows * cols, pixels)?;
    Ok(LabeledDataset::new(features, labels, classes, Domain::Source, split)?)
}

/// Encodes images (`n` items of `rows x cols` bytes) in the IDX layout.
pub fn encode_images(pixels: &[u8], n: usize, rows: usize, cols: usize) -> Vec<u8> {
    assert_eq!(pixels.len(), n * rows * cols, "pixel buffer does not match the dimensions");
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path, images: &[u8], labels: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let (i, l) = (dir.join("img"), dir.join("lbl"));
        fs::write(&i, images).unwrap();
        fs::write(&l, labels).unwrap();
        (i, l)
    }

    #[test]
    fn two_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        #[rustfmt::skip]
        let images = [
            0x00, 0x00, 0x08, 0x03,
            0x00, 0x00, 0x00, 0x02,
            0x00, 0x00, 0x00, 0x02,
            0x00, 0x00, 0x00, 0x03,
            0, 51, 255, 102, 153, 204,
            255, 0, 1, 2, 3, 4,
        ];
        let labels = [0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 3];
        let (i, l) = fixture(dir.path(), &images, &labels);
        let ds = load_idx(&i, &l, Split::Train).unwrap();
        assert_eq!((ds.len(), ds.dim(), ds.classes()), (2, 6, 8));
        assert_eq!(ds.labels(), &[7, 3]);
        assert_eq!(ds.features().row(0), &[0.0, 0.2, 1.0, 0.4, 0.6, 0.8]);
        assert_eq!(ds.features().get(1, 2), 1.0 / 255.0);
        assert_eq!(images.to_vec(), encode_images(&images[16..], 2, 2, 3));
        assert_eq!(labels.to_vec(), encode_labels(&[7, 3]));
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = fixture(dir.path(), &encode_images(&[0; 8], 2, 2, 2), &encode_labels(&[1, 2, 3]));
        let err = load_idx(&i, &l, Split::Train).unwrap_err().to_string();
        assert!(err.contains("count mismatch") && err.contains("byte offset 4"), "{err}");
    }

    #[test]
    fn bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let good_labels = encode_labels(&[1, 2]);
        let mut bad = encode_images(&[0; 8], 2, 2, 2);
        bad[3] = 0x01;
        let (i, l) = fixture(dir.path(), &bad, &good_labels);
        let err = load_idx(&i, &l, Split::Train).unwrap_err().to_string();
        assert!(err.contains("bad magic 0x00000801") && err.contains("byte offset 0"), "{err}");

        let mut short = encode_images(&[0; 8], 2, 2, 2);
        short.truncate(20);
        let (i, l) = fixture(dir.path(), &short, &good_labels);
        let err = load_idx(&i, &l, Split::Train).unwrap_err().to_string();
        assert!(err.contains("truncated data") && err.contains("byte offset 20"), "{err}");

        let (i, l) = fixture(dir.path(), &[0, 0, 8], &good_labels);
        assert!(load_idx(&i, &l, Split::Train).unwrap_err().to_string().contains("truncated header"));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_idx("/nonexistent/img", "/nonexistent/lbl", Split::Test).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/img"), "{err}");
    }
}
