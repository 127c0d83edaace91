//! IDX reader for the MNIST distribution files (uncompressed).
//!
//! Layout: big-endian u32 magic (`0x00000803` images, `0x00000801` labels),
//! one big-endian u32 per dimension, then raw unsigned bytes.

use std::fs;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

const MNIST_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

struct Cursor<'a> {
    name: String,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::format_at_offset(
                &self.name,
                self.pos as u64,
                format!("truncated header while reading {what}"),
            )
        })?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4-byte slice")))
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(Error::format_at_offset(
                &self.name,
                self.bytes.len() as u64,
                format!("truncated payload: expected {len} bytes after header, found {available}"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn expect_magic(&mut self, expected: u32) -> Result<()> {
        let magic = self.u32_be("magic number")?;
        if magic != expected {
            let kind = match magic {
                IDX_IMAGES_MAGIC => " (this is an image file)",
                IDX_LABELS_MAGIC => " (this is a label file)",
                _ => "",
            };
            return Err(Error::format_at_offset(
                &self.name,
                0,
                format!("bad magic number {magic:#010x}, expected {expected:#010x}{kind}"),
            ));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_idx_images(name: &str, bytes: &[u8]) -> Result<IdxImages> {
    let mut cur = Cursor {
        name: name.to_string(),
        bytes,
        pos: 0,
    };
    cur.expect_magic(IDX_IMAGES_MAGIC)?;
    let count = cur.u32_be("image count")? as usize;
    let rows = cur.u32_be("row count")? as usize;
    let cols = cur.u32_be("column count")? as usize;
    let pixels = cur.payload(count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(name: &str, bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor {
        name: name.to_string(),
        bytes,
        pos: 0,
    };
    cur.expect_magic(IDX_LABELS_MAGIC)?;
    let count = cur.u32_be("label count")? as usize;
    Ok(cur.payload(count)?.to_vec())
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    parse_idx_images(&path.display().to_string(), &read_file(path)?)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(&path.display().to_string(), &read_file(path)?)
}

/// Loads an image/label pair; pixels are scaled to `[0, 1]` by `/ 255`.
pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images = read_idx_images(images_path.as_ref())?;
    let labels = read_idx_labels(labels_path.as_ref())?;
    let label_name = labels_path.as_ref().display().to_string();
    if images.count != labels.len() {
        return Err(Error::format_at_offset(
            label_name,
            4,
            format!(
                "label count {} does not match image count {}",
                labels.len(),
                images.count
            ),
        ));
    }
    if let Some(i) = labels.iter().position(|&y| y as usize >= MNIST_CLASSES) {
        return Err(Error::format_at_offset(
            label_name,
            8 + i as u64,
            format!("label {} outside 0..{MNIST_CLASSES}", labels[i]),
        ));
    }
    let features = images.pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels = labels.into_iter().map(usize::from).collect();
    LabeledDataset::new(features, labels, MNIST_CLASSES, images.rows * images.cols)
}
