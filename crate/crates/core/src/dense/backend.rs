use std::fmt;
use std::str::FromStr;

use crate::error::{LinalgError, Result};

/// GEMM cache-blocking parameters: rows of A per block, shared dimension per
/// block, columns of B per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSizes {
    pub mc: usize,
    pub kc: usize,
    pub nc: usize,
}

impl Default for BlockSizes {
    fn default() -> Self {
        BlockSizes { mc: 64, kc: 64, nc: 64 }
    }
}

/// Execution backend for GEMM and the column-parallel base kernels.
///
/// The parallel backend is externally synchronous: every call returns only
/// after all of its workers have finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backend {
    name: String,
    parallel_width: usize,
    block_sizes: BlockSizes,
}

/// Below this many multiply-adds a call is not worth spreading over threads.
const MIN_PARALLEL_WORK: usize = 1 << 15;

impl Backend {
    pub fn new(name: impl Into<String>, parallel_width: usize, block_sizes: BlockSizes) -> Result<Self> {
        if parallel_width == 0 {
            return Err(LinalgError::InvalidArgument("parallel width must be at least 1".into()));
        }
        if block_sizes.mc == 0 || block_sizes.kc == 0 || block_sizes.nc == 0 {
            return Err(LinalgError::InvalidArgument(format!(
                "block sizes must be positive, got {block_sizes:?}"
            )));
        }
        Ok(Backend {
            name: name.into(),
            parallel_width,
            block_sizes,
        })
    }

    pub fn sequential() -> Self {
        Backend {
            name: "seq".into(),
            parallel_width: 1,
            block_sizes: BlockSizes::default(),
        }
    }

    /// Parallel backend with one worker per available hardware thread.
    pub fn parallel() -> Self {
        let width = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self::parallel_with_width(width.max(1))
    }

    pub fn parallel_with_width(width: usize) -> Self {
        Backend {
            name: "par".into(),
            parallel_width: width.max(1),
            block_sizes: BlockSizes::default(),
        }
    }

    pub fn with_block_sizes(mut self, block_sizes: BlockSizes) -> Result<Self> {
        self = Backend::new(self.name, self.parallel_width, block_sizes)?;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parallel_width(&self) -> usize {
        self.parallel_width
    }

    pub fn block_sizes(&self) -> BlockSizes {
        self.block_sizes
    }

    /// Number of workers to use for `units` independent pieces of work
    /// totalling `work` multiply-adds.
    pub(crate) fn workers_for(&self, units: usize, work: usize) -> usize {
        if self.parallel_width == 1 || work < MIN_PARALLEL_WORK {
            1
        } else {
            self.parallel_width.min(units).max(1)
        }
    }
}

impl Default for Backend {
    fn default() -> Self {
        Backend::sequential()
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "seq" => Ok(Backend::sequential()),
            "par" => Ok(Backend::parallel()),
            other => Err(format!("unknown backend `{other}` (expected seq|par)")),
        }
    }
}

/// Split `0..len` into `parts` contiguous ranges whose lengths are multiples
/// of `align` (except possibly the last).
pub(crate) fn partition(len: usize, parts: usize, align: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.max(1);
    let align = align.max(1);
    let chunk = len.div_ceil(parts).div_ceil(align) * align;
    let chunk = chunk.max(1);
    (0..len)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(len))
        .collect()
}
