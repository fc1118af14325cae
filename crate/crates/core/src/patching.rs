//! Sliding-window patch extraction and overlap-averaged reconstruction.

use crate::error::{Error, Result};
use crate::imagecore::{clamp_intensity, Image};

/// Geometry of a dense sliding-window scan over an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_side: usize,
    pub stride: usize,
    pub image_width: usize,
    pub image_height: usize,
}

impl PatchGrid {
    pub fn new(
        image_width: usize,
        image_height: usize,
        patch_side: usize,
        stride: usize,
    ) -> Result<Self> {
        if patch_side == 0 || stride == 0 {
            return Err(Error::InvalidParameter(
                "patch side and stride must be positive".into(),
            ));
        }
        if patch_side > image_width.min(image_height) {
            return Err(Error::DimensionMismatch(format!(
                "{patch_side}x{patch_side} patch does not fit a {image_width}x{image_height} image"
            )));
        }
        Ok(Self {
            patch_side,
            stride,
            image_width,
            image_height,
        })
    }

    /// Patch positions per row of the scan.
    pub fn positions_x(&self) -> usize {
        (self.image_width - self.patch_side) / self.stride + 1
    }

    /// Rows of patch positions.
    pub fn positions_y(&self) -> usize {
        (self.image_height - self.patch_side) / self.stride + 1
    }

    /// Number of patches (columns of the patch matrix).
    pub fn columns(&self) -> usize {
        self.positions_x() * self.positions_y()
    }

    /// Pixels per patch.
    pub fn patch_len(&self) -> usize {
        self.patch_side * self.patch_side
    }

    /// Top-left corner of patch `j`.
    pub fn origin(&self, j: usize) -> (usize, usize) {
        let px = self.positions_x();
        ((j % px) * self.stride, (j / px) * self.stride)
    }

    /// Number of patches covering each pixel, row-major.
    pub fn coverage(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.image_width * self.image_height];
        for j in 0..self.columns() {
            let (x0, y0) = self.origin(j);
            for dy in 0..self.patch_side {
                let row = (y0 + dy) * self.image_width + x0;
                for c in &mut counts[row..row + self.patch_side] {
                    *c += 1;
                }
            }
        }
        counts
    }
}

/// `M x N` matrix with one row-major vectorized patch per column, stored
/// column-major so each patch is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    grid: PatchGrid,
    data: Vec<f64>,
}

impl PatchMatrix {
    pub fn from_columns(grid: PatchGrid, data: Vec<f64>) -> Result<Self> {
        let need = grid.patch_len() * grid.columns();
        if data.len() != need {
            return Err(Error::DimensionMismatch(format!(
                "patch grid needs {need} values, got {}",
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    /// Patch length `M`.
    pub fn rows(&self) -> usize {
        self.grid.patch_len()
    }

    /// Patch count `N`.
    pub fn cols(&self) -> usize {
        self.grid.columns()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.data[j * m..(j + 1) * m]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        let m = self.rows();
        &mut self.data[j * m..(j + 1) * m]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.rows())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Same grid, replaced contents.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::from_columns(self.grid, data)
    }
}

/// Collect every `patch_side x patch_side` window at the given stride.
/// Column `j` is the patch at position `(j % positions_x, j / positions_x)`.
pub fn extract_patches(img: &Image, patch_side: usize, stride: usize) -> Result<PatchMatrix> {
    let grid = PatchGrid::new(img.width(), img.height(), patch_side, stride)?;
    let mut data = Vec::with_capacity(grid.patch_len() * grid.columns());
    let px = img.pixels();
    for j in 0..grid.columns() {
        let (x0, y0) = grid.origin(j);
        for dy in 0..patch_side {
            let row = (y0 + dy) * img.width() + x0;
            data.extend_from_slice(&px[row..row + patch_side]);
        }
    }
    PatchMatrix::from_columns(grid, data)
}

/// Average all patch estimates covering each pixel.
///
/// Pixels covered by no patch (only possible with stride > 1) are copied from
/// `fallback`; it is an error to leave such pixels without one. The result
/// is clamped to `[0, 255]`.
pub fn reconstruct_from_patches(
    estimates: &PatchMatrix,
    fallback: Option<&Image>,
) -> Result<Image> {
    let grid = estimates.grid();
    let (w, h) = (grid.image_width, grid.image_height);
    if let Some(fb) = fallback {
        if fb.width() != w || fb.height() != h {
            return Err(Error::DimensionMismatch(format!(
                "fallback image is {}x{}, grid expects {w}x{h}",
                fb.width(),
                fb.height()
            )));
        }
    }
    let p = grid.patch_side;
    let mut sum = vec![0.0f64; w * h];
    let mut count = vec![0u32; w * h];
    for (j, patch) in estimates.columns().enumerate() {
        let (x0, y0) = grid.origin(j);
        for dy in 0..p {
            let row = (y0 + dy) * w + x0;
            for dx in 0..p {
                sum[row + dx] += patch[dy * p + dx];
                count[row + dx] += 1;
            }
        }
    }
    let mut pixels = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let v = if count[i] > 0 {
            sum[i] / f64::from(count[i])
        } else {
            match fallback {
                Some(fb) => fb.pixels()[i],
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "pixel ({}, {}) is not covered by any patch and no fallback image was given",
                        i % w,
                        i / w
                    )))
                }
            }
        };
        pixels.push(clamp_intensity(v));
    }
    Image::new(w, h, pixels)
}
