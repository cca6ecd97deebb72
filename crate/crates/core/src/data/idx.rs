use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::blobs::TaskSplit;
use crate::domain::TaskDistribution;
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Greyscale images with one byte label each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImageSet {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, image after image.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, what: &'static str) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(Error::Truncated {
        what,
        needed: at + 4,
        available: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
}

fn check_magic(bytes: &[u8], file: &'static str, expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0, file)?;
    if found != expected {
        return Err(Error::BadMagic { file, expected, found });
    }
    Ok(())
}

impl IdxImageSet {
    /// Parses image and label files already in memory.
    pub fn parse(images: &[u8], labels: &[u8]) -> Result<Self> {
        check_magic(images, "images", IMAGE_MAGIC)?;
        let count = be_u32(images, 4, "image header")? as usize;
        let rows = be_u32(images, 8, "image header")? as usize;
        let cols = be_u32(images, 12, "image header")? as usize;
        let needed = 16 + count * rows * cols;
        if images.len() < needed {
            return Err(Error::Truncated {
                what: "image pixels",
                needed,
                available: images.len(),
            });
        }
        check_magic(labels, "labels", LABEL_MAGIC)?;
        let label_count = be_u32(labels, 4, "label header")? as usize;
        if label_count != count {
            return Err(Error::CountMismatch {
                images: count,
                labels: label_count,
            });
        }
        if labels.len() < 8 + count {
            return Err(Error::Truncated {
                what: "labels",
                needed: 8 + count,
                available: labels.len(),
            });
        }
        Ok(IdxImageSet {
            rows,
            cols,
            pixels: images[16..needed].to_vec(),
            labels: labels[8..8 + count].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Pixels of image `i` scaled to `[0, 1]`.
    pub fn image_f64(&self, i: usize) -> Vec<f64> {
        self.image(i).iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn to_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::with_capacity(16 + self.pixels.len());
        for v in [IMAGE_MAGIC, self.len() as u32, self.rows as u32, self.cols as u32] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&self.pixels);
        let mut lab = Vec::with_capacity(8 + self.len());
        lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        lab.extend_from_slice(&(self.len() as u32).to_be_bytes());
        lab.extend_from_slice(&self.labels);
        (img, lab)
    }

    /// First `per_class` images of each label, in file order.
    pub fn subset_per_class(&self, per_class: usize) -> Self {
        let mut seen: BTreeMap<u8, usize> = BTreeMap::new();
        let mut out = IdxImageSet {
            rows: self.rows,
            cols: self.cols,
            pixels: Vec::new(),
            labels: Vec::new(),
        };
        for i in 0..self.len() {
            let n = seen.entry(self.labels[i]).or_default();
            if *n < per_class {
                *n += 1;
                out.pixels.extend_from_slice(self.image(i));
                out.labels.push(self.labels[i]);
            }
        }
        out
    }

    fn distribution(&self, classes: &[u8]) -> Result<TaskDistribution> {
        let (mut pts, mut labels) = (Vec::new(), Vec::new());
        for i in 0..self.len() {
            if classes.contains(&self.labels[i]) {
                pts.push(self.image_f64(i));
                labels.push(self.labels[i] as usize);
            }
        }
        if pts.is_empty() {
            return Err(Error::EmptyTask { task: 0 });
        }
        TaskDistribution::uniform(self.rows * self.cols, pts, labels)
    }
}

pub fn idx_read(images: &Path, labels: &Path) -> Result<IdxImageSet> {
    IdxImageSet::parse(&fs::read(images)?, &fs::read(labels)?)
}

pub fn idx_write(set: &IdxImageSet, images: &Path, labels: &Path) -> Result<()> {
    let (img, lab) = set.to_bytes();
    fs::write(images, img)?;
    fs::write(labels, lab)?;
    Ok(())
}

/// How IDX files become a class-incremental task sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSource {
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
    #[serde(default = "two")]
    pub classes_per_task: usize,
    #[serde(default = "hundred")]
    pub train_per_class: usize,
    #[serde(default = "twenty_five")]
    pub test_per_class: usize,
}

fn two() -> usize {
    2
}
fn hundred() -> usize {
    100
}
fn twenty_five() -> usize {
    25
}

/// Consecutive label groups of `classes_per_task` become tasks.
pub fn idx_task_sequence(
    train: &IdxImageSet,
    test: &IdxImageSet,
    classes_per_task: usize,
    train_per_class: usize,
    test_per_class: usize,
) -> Result<Vec<TaskSplit>> {
    if classes_per_task == 0 {
        return Err(Error::InvalidArgument("classes per task must be positive".into()));
    }
    let train = train.subset_per_class(train_per_class);
    let test = test.subset_per_class(test_per_class);
    let mut labels = train.labels.clone();
    labels.sort_unstable();
    labels.dedup();
    labels
        .chunks(classes_per_task)
        .enumerate()
        .map(|(t, group)| {
            let tag = |e: Error| match e {
                Error::EmptyTask { .. } => Error::EmptyTask { task: t + 1 },
                e => e,
            };
            Ok(TaskSplit {
                train: train.distribution(group).map_err(tag)?,
                test: test.distribution(group).map_err(tag)?,
            })
        })
        .collect()
}

impl IdxSource {
    pub fn load(&self) -> Result<Vec<TaskSplit>> {
        let train = idx_read(Path::new(&self.train_images), Path::new(&self.train_labels))?;
        let test = idx_read(Path::new(&self.test_images), Path::new(&self.test_labels))?;
        idx_task_sequence(&train, &test, self.classes_per_task, self.train_per_class, self.test_per_class)
    }
}
