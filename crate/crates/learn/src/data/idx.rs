//! The IDX container used by MNIST: a big-endian `u32` magic number, one
//! big-endian `u32` per dimension, then the raw bytes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Which MNIST file pair a store was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    /// File name prefix of the standard MNIST distribution.
    pub fn file_prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!(
                "unknown split `{s}` (expected train|test)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_header(path: &Path, bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let need = 4 * (1 + dims);
    if bytes.len() < need {
        return Err(Error::format(
            path,
            format!("truncated header: {} bytes, need {need}", bytes.len()),
        ));
    }
    let word = |k: usize| u32::from_be_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes"));
    let found = word(0);
    if found != magic {
        return Err(Error::format(
            path,
            format!("bad magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let sizes: Vec<usize> = (1..=dims).map(|k| word(k) as usize).collect();
    let body: usize = sizes.iter().product();
    if bytes.len() - need != body {
        return Err(Error::format(
            path,
            format!(
                "header announces {body} data bytes, file has {}",
                bytes.len() - need
            ),
        ));
    }
    Ok(sizes)
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let sizes = read_header(path, &bytes, IMAGES_MAGIC, 3)?;
    Ok(IdxImages {
        count: sizes[0],
        rows: sizes[1],
        cols: sizes[2],
        pixels: bytes[16..].to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_header(path, &bytes, LABELS_MAGIC, 1)?;
    Ok(bytes[8..].to_vec())
}

pub fn write_idx_images(path: &Path, images: &IdxImages) -> Result<()> {
    if images.pixels.len() != images.count * images.rows * images.cols {
        return Err(Error::Shape(
            "pixel buffer does not match the image dimensions".into(),
        ));
    }
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for word in [
        IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Images and digit labels of one MNIST split.
#[derive(Debug, Clone)]
pub struct MnistStore {
    split: Split,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
    by_digit: Vec<Vec<u32>>,
}

impl MnistStore {
    pub fn new(split: Split, images: IdxImages, labels: Vec<u8>) -> Result<Self> {
        if images.count != labels.len() {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        if images.rows * images.cols != crate::model::IMAGE_PIXELS {
            return Err(Error::Data(format!(
                "images are {}x{}, expected 28x28",
                images.rows, images.cols
            )));
        }
        let mut by_digit = vec![Vec::new(); 10];
        for (i, &d) in labels.iter().enumerate() {
            if d > 9 {
                return Err(Error::Data(format!(
                    "label {d} of image {i} is not a digit"
                )));
            }
            by_digit[d as usize].push(i as u32);
        }
        Ok(MnistStore {
            split,
            rows: images.rows,
            cols: images.cols,
            pixels: images.pixels,
            labels,
            by_digit,
        })
    }

    /// Read `{train,t10k}-images-idx3-ubyte` and `{train,t10k}-labels-idx1-ubyte`
    /// from `dir`.
    pub fn load(dir: &Path, split: Split) -> Result<Self> {
        let prefix = split.file_prefix();
        let images = read_idx_images(&dir.join(format!("{prefix}-images-idx3-ubyte")))?;
        let labels = read_idx_labels(&dir.join(format!("{prefix}-labels-idx1-ubyte")))?;
        MnistStore::new(split, images, labels)
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: u32) -> u8 {
        self.labels[id as usize]
    }

    pub fn pixels(&self, id: u32) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[id as usize * size..(id as usize + 1) * size]
    }

    /// Pixels of one image scaled to `[0, 1]`.
    pub fn image(&self, id: u32) -> Vec<f64> {
        self.pixels(id)
            .iter()
            .map(|&p| f64::from(p) / 255.0)
            .collect()
    }

    /// Pixel-wise maximum of several images: the observation of an instant
    /// at which several atoms hold.
    pub fn compose_into(&self, ids: &[u32], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &id in ids {
            for (o, &p) in out.iter_mut().zip(self.pixels(id)) {
                *o = o.max(f64::from(p) / 255.0);
            }
        }
    }

    pub fn ids_of_digit(&self, digit: usize) -> &[u32] {
        &self.by_digit[digit]
    }
}
