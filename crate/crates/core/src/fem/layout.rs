use crate::error::{Error, Result};
use std::ops::Range;

/// Named contiguous blocks of a global unknown vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    names: Vec<String>,
    offsets: Vec<usize>,
    len: usize,
}

impl BlockLayout {
    pub fn new<S: AsRef<str>>(blocks: &[(S, usize)]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut offsets = Vec::new();
        let mut len = 0;
        for (name, size) in blocks {
            let name = name.as_ref();
            if names.iter().any(|n| n == name) {
                return Err(Error::Descriptor(format!("duplicate block `{name}`")));
            }
            names.push(name.to_string());
            offsets.push(len);
            len += size;
        }
        offsets.push(len);
        Ok(BlockLayout { names, offsets, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn range(&self, name: &str) -> Result<Range<usize>> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Descriptor(format!("missing block `{name}`")))?;
        Ok(self.offsets[i]..self.offsets[i + 1])
    }

    pub fn offset(&self, name: &str) -> Result<usize> {
        Ok(self.range(name)?.start)
    }

    /// Name of the block containing global index `i`.
    pub fn block_of(&self, i: usize) -> Option<&str> {
        (0..self.names.len())
            .find(|&k| self.offsets[k] <= i && i < self.offsets[k + 1])
            .map(|k| self.names[k].as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub layout: BlockLayout,
    pub data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(layout: BlockLayout) -> Self {
        let data = vec![0.0; layout.len()];
        BlockVector { layout, data }
    }

    pub fn block(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.data[self.layout.range(name)?])
    }

    pub fn block_mut(&mut self, name: &str) -> Result<&mut [f64]> {
        let r = self.layout.range(name)?;
        Ok(&mut self.data[r])
    }

    /// First entry of a block, for single-value (global) blocks.
    pub fn scalar(&self, name: &str) -> Result<f64> {
        self.block(name)?
            .first()
            .copied()
            .ok_or_else(|| Error::Descriptor(format!("block `{name}` is empty")))
    }
}
