//! Frames of discernment and their subsets.
//!
//! A [`Frame`] fixes an ordered list of mutually exclusive hypotheses; label
//! `i` owns bit `i` of a [`Subset`] mask. Frames are compared by an identity
//! token handed out at construction, so two frames with the same labels are
//! still distinct and their subsets cannot be mixed.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

pub const MAX_FRAME_SIZE: usize = 64;

static NEXT_FRAME_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId(u64);

#[derive(Debug)]
struct FrameInner {
    id: FrameId,
    labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Frame(Arc<FrameInner>);

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Frame {}

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyFrame);
        }
        if labels.len() > MAX_FRAME_SIZE {
            return Err(Error::FrameTooLarge(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let id = FrameId(NEXT_FRAME_ID.fetch_add(1, Ordering::Relaxed));
        Ok(Frame(Arc::new(FrameInner { id, labels })))
    }

    pub fn id(&self) -> FrameId {
        self.0.id
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn full_mask(&self) -> u64 {
        mask_for_size(self.len())
    }

    pub fn full(&self) -> Subset {
        Subset::raw(self, self.full_mask())
    }

    pub fn empty_set(&self) -> Subset {
        Subset::raw(self, 0)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
                frame: self.labels().join(","),
            })
    }

    pub fn singleton(&self, label: &str) -> Result<Subset> {
        Ok(Subset::raw(self, 1 << self.index_of(label)?))
    }

    /// Builds the subset containing exactly `labels`.
    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<Subset> {
        let mut mask = 0;
        for label in labels {
            mask |= 1 << self.index_of(label.as_ref())?;
        }
        Ok(Subset::raw(self, mask))
    }

    pub fn from_mask(&self, mask: u64) -> Result<Subset> {
        if mask & !self.full_mask() != 0 {
            return Err(Error::MaskOutOfRange {
                mask,
                size: self.len(),
            });
        }
        Ok(Subset::raw(self, mask))
    }

    pub fn owns(&self, subset: Subset) -> bool {
        subset.frame == self.id()
    }

    pub fn check(&self, subset: Subset) -> Result<()> {
        if self.owns(subset) {
            Ok(())
        } else {
            Err(Error::FrameMismatch)
        }
    }

    /// Renders a subset as `{a,b}`. The full set renders as its labels too;
    /// callers that want `theta` check [`Subset::is_full`] themselves.
    pub fn render(&self, subset: Subset) -> String {
        let names: Vec<&str> = self
            .labels()
            .iter()
            .enumerate()
            .filter(|(i, _)| subset.mask >> i & 1 == 1)
            .map(|(_, l)| l.as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }

    /// Every subset of the frame in mask order. Only sensible for small frames.
    pub fn all_subsets(&self) -> impl Iterator<Item = Subset> + '_ {
        assert!(self.len() < 32, "enumerating 2^{} subsets", self.len());
        (0..=self.full_mask()).map(move |m| Subset::raw(self, m))
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels().join(","))
    }
}

fn mask_for_size(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A subset of a frame, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subset {
    frame: FrameId,
    size: u8,
    mask: u64,
}

impl Subset {
    fn raw(frame: &Frame, mask: u64) -> Self {
        Subset {
            frame: frame.id(),
            size: frame.len() as u8,
            mask,
        }
    }

    pub fn mask(self) -> u64 {
        self.mask
    }

    pub fn frame_id(self) -> FrameId {
        self.frame
    }

    pub fn len(self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn is_full(self) -> bool {
        self.mask == mask_for_size(self.size as usize)
    }

    pub fn complement(self) -> Subset {
        Subset {
            mask: !self.mask & mask_for_size(self.size as usize),
            ..self
        }
    }

    fn same_frame(self, other: Subset) -> Result<()> {
        if self.frame == other.frame {
            Ok(())
        } else {
            Err(Error::FrameMismatch)
        }
    }

    pub fn intersect(self, other: Subset) -> Result<Subset> {
        self.same_frame(other)?;
        Ok(Subset {
            mask: self.mask & other.mask,
            ..self
        })
    }

    pub fn union(self, other: Subset) -> Result<Subset> {
        self.same_frame(other)?;
        Ok(Subset {
            mask: self.mask | other.mask,
            ..self
        })
    }

    pub fn is_subset_of(self, other: Subset) -> Result<bool> {
        self.same_frame(other)?;
        Ok(self.mask & !other.mask == 0)
    }

    pub(crate) fn with_mask(self, mask: u64) -> Subset {
        Subset { mask, ..self }
    }
}

/// A refinement `w` of a coarse frame into a fine one: each coarse label is
/// split into a non-empty block of fine labels, the blocks partitioning the
/// fine frame.
#[derive(Debug, Clone)]
pub struct Refinement {
    coarse: Frame,
    fine: Frame,
    images: Vec<u64>,
}

impl Refinement {
    pub fn new<K, V, L>(coarse: &Frame, fine: &Frame, mapping: &[(K, V)]) -> Result<Self>
    where
        K: AsRef<str>,
        V: AsRef<[L]>,
        L: AsRef<str>,
    {
        let mut images: Vec<Option<u64>> = vec![None; coarse.len()];
        for (label, block) in mapping {
            let i = coarse.index_of(label.as_ref())?;
            if images[i].is_some() {
                return Err(Error::DuplicateLabel(label.as_ref().to_string()));
            }
            let image = fine.subset(block.as_ref())?.mask();
            if image == 0 {
                return Err(Error::EmptyImage(label.as_ref().to_string()));
            }
            images[i] = Some(image);
        }
        let mut seen = 0u64;
        let mut out = Vec::with_capacity(images.len());
        for (i, image) in images.into_iter().enumerate() {
            let image = image.ok_or_else(|| Error::MissingImage(coarse.labels()[i].clone()))?;
            let overlap = seen & image;
            if overlap != 0 {
                let bit = overlap.trailing_zeros() as usize;
                return Err(Error::OverlappingImages(fine.labels()[bit].clone()));
            }
            seen |= image;
            out.push(image);
        }
        let missing = fine.full_mask() & !seen;
        if missing != 0 {
            let bit = missing.trailing_zeros() as usize;
            return Err(Error::UncoveredLabel(fine.labels()[bit].clone()));
        }
        Ok(Refinement {
            coarse: coarse.clone(),
            fine: fine.clone(),
            images: out,
        })
    }

    /// Each label mapped to itself.
    pub fn identity(frame: &Frame) -> Self {
        Refinement {
            coarse: frame.clone(),
            fine: frame.clone(),
            images: (0..frame.len()).map(|i| 1 << i).collect(),
        }
    }

    pub fn coarse(&self) -> &Frame {
        &self.coarse
    }

    pub fn fine(&self) -> &Frame {
        &self.fine
    }

    pub fn image_of(&self, label: &str) -> Result<Subset> {
        let i = self.coarse.index_of(label)?;
        Ok(Subset::raw(&self.fine, self.images[i]))
    }

    /// `w(A)`: the union of the images of `a`'s members.
    pub fn refine(&self, a: Subset) -> Result<Subset> {
        self.coarse.check(a)?;
        let mask = self
            .images
            .iter()
            .enumerate()
            .filter(|(i, _)| a.mask >> i & 1 == 1)
            .fold(0, |acc, (_, image)| acc | image);
        Ok(Subset::raw(&self.fine, mask))
    }

    pub fn mapping(&self) -> BTreeMap<String, Vec<String>> {
        self.coarse
            .labels()
            .iter()
            .zip(&self.images)
            .map(|(label, &image)| {
                let block = self
                    .fine
                    .labels()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| image >> j & 1 == 1)
                    .map(|(_, l)| l.clone())
                    .collect();
                (label.clone(), block)
            })
            .collect()
    }
}

/// A frame whose elements are the pairs `(a, b)` of two factor frames, in
/// row-major order.
#[derive(Debug, Clone)]
pub struct ProductFrame {
    frame: Frame,
    left: Frame,
    right: Frame,
}

impl ProductFrame {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(left: &[S], right: &[T]) -> Result<Self> {
        let left = Frame::new(left.iter().map(|s| s.as_ref().to_string()))?;
        let right = Frame::new(right.iter().map(|s| s.as_ref().to_string()))?;
        let count = left.len() * right.len();
        if count > MAX_FRAME_SIZE {
            return Err(Error::FrameTooLarge(count));
        }
        let labels = left
            .labels()
            .iter()
            .flat_map(|a| right.labels().iter().map(move |b| pair_label(a, b)));
        let frame = Frame::new(labels)?;
        Ok(ProductFrame { frame, left, right })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn left(&self) -> &Frame {
        &self.left
    }

    pub fn right(&self) -> &Frame {
        &self.right
    }

    pub fn pair(&self, a: &str, b: &str) -> Result<Subset> {
        let i = self.left.index_of(a)?;
        let j = self.right.index_of(b)?;
        Ok(Subset::raw(&self.frame, 1 << (i * self.right.len() + j)))
    }

    /// `A × B` for a left-factor subset `a` and right-factor subset `b`.
    pub fn product(&self, a: Subset, b: Subset) -> Result<Subset> {
        self.left.check(a)?;
        self.right.check(b)?;
        let width = self.right.len();
        let mut mask = 0;
        for i in 0..self.left.len() {
            if a.mask >> i & 1 == 1 {
                mask |= b.mask << (i * width);
            }
        }
        Ok(Subset::raw(&self.frame, mask))
    }

    /// All pairs whose first component is `a`.
    pub fn cylinder_left(&self, a: &str) -> Result<Subset> {
        self.product(self.left.singleton(a)?, self.right.full())
    }

    /// All pairs whose second component is `b`.
    pub fn cylinder_right(&self, b: &str) -> Result<Subset> {
        self.product(self.left.full(), self.right.singleton(b)?)
    }
}

pub fn pair_label(a: &str, b: &str) -> String {
    format!("({a},{b})")
}
