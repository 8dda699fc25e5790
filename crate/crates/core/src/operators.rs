//! Discrete differential operators with homogeneous Neumann boundaries.
//!
//! All operators act on row-major grids and are stored in compressed sparse
//! row form with entries canonically ordered by (row, col). Missing
//! neighbours at the image border encode the Neumann condition, which makes
//! every row sum to zero: constants lie in the kernel of each operator.

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::par;

/// Square sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    /// Builds from per-row entry lists; columns must be strictly increasing
    /// within each row.
    fn from_rows(rows: Vec<Vec<(usize, f64)>>, symmetric: bool) -> Self {
        let n = rows.len();
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator { n, row_ptr, col_idx, values, symmetric }
    }

    /// Non-symmetric constructor for assembled systems.
    pub(crate) fn from_row_lists(rows: Vec<Vec<(usize, f64)>>) -> Self {
        SparseOperator::from_rows(rows, false)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the operator was assembled as symmetric (Laplacian, biharmonic).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// All entries in canonical (row, col) order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    fn row_apply(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(c, v)| v * x[c]).sum()
    }

    /// Matrix-vector product, row-parallel.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        par::map_indexed(self.n, |i| self.row_apply(i, x))
    }

    pub(crate) fn apply_seq(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        par::map_indexed_seq(self.n, |i| self.row_apply(i, x))
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for (r, c, v) in self.entries() {
            rows[c].push((r, v));
        }
        // Entries per transposed row come out in ascending column order
        // because `entries` walks rows in order.
        SparseOperator::from_rows(rows, self.symmetric)
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.n, other.n);
        let rows = par::map_indexed(self.n, |i| {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    match acc.binary_search_by_key(&j, |e| e.0) {
                        Ok(pos) => acc[pos].1 += a * b,
                        Err(pos) => acc.insert(pos, (j, a * b)),
                    }
                }
            }
            acc
        });
        SparseOperator::from_rows(rows, false)
    }

    pub fn scale(&self, factor: f64) -> SparseOperator {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// Largest |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.entries()
            .map(|(r, c, _)| r.abs_diff(c))
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn mark_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }
}

/// Contrast and presmoothing parameters of the edge-enhancing diffusion tensor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EedParams {
    pub lambda: f64,
    pub sigma: f64,
}

impl EedParams {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {}", lambda)));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {}", sigma)));
        }
        Ok(EedParams { lambda, sigma })
    }
}

impl Default for EedParams {
    /// λ = 0.8, σ = 0.7 — the contrast/presmoothing pair used for all
    /// EED experiments here.
    fn default() -> Self {
        EedParams { lambda: 0.8, sigma: 0.7 }
    }
}

/// Which inpainting operator drives a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Homogeneous,
    Biharmonic,
    Eed(EedParams),
}

impl OperatorKind {
    pub fn is_linear(&self) -> bool {
        !matches!(self, OperatorKind::Eed(_))
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::Homogeneous => write!(f, "homogeneous"),
            OperatorKind::Biharmonic => write!(f, "biharmonic"),
            OperatorKind::Eed(p) => write!(f, "eed(lambda={},sigma={})", p.lambda, p.sigma),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("operator dimensions must be positive".into()));
    }
    Ok(())
}

/// 5-point Laplacian with grid spacing 1: entry 1 for each existing axial
/// neighbour, diagonal = −(number of existing neighbours).
pub fn assemble_laplacian(width: usize, height: usize) -> Result<SparseOperator> {
    check_dims(width, height)?;
    let n = width * height;
    let rows = par::map_indexed(n, |i| {
        let (x, y) = (i % width, i / width);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
        let mut neighbours = 0usize;
        if y > 0 {
            row.push((i - width, 1.0));
            neighbours += 1;
        }
        if x > 0 {
            row.push((i - 1, 1.0));
            neighbours += 1;
        }
        if x + 1 < width {
            neighbours += 1;
        }
        if y + 1 < height {
            neighbours += 1;
        }
        row.push((i, -(neighbours as f64)));
        if x + 1 < width {
            row.push((i + 1, 1.0));
        }
        if y + 1 < height {
            row.push((i + width, 1.0));
        }
        row
    });
    Ok(SparseOperator::from_rows(rows, true))
}

/// Biharmonic operator −Δ², the exact matrix square of the Neumann Laplacian
/// negated (13-point stencil in the interior).
pub fn assemble_biharmonic(width: usize, height: usize) -> Result<SparseOperator> {
    let a = assemble_laplacian(width, height)?;
    Ok(a.matmul(&a).scale(-1.0).mark_symmetric(true))
}

/// Charbonnier diffusivity (1 + s/λ²)^(−1/2) for squared gradient magnitude `s`.
pub fn charbonnier_diffusivity(grad_sq: f64, lambda: f64) -> Result<f64> {
    if !(grad_sq >= 0.0) {
        return Err(Error::InvalidInput(format!("grad_sq must be nonnegative, got {}", grad_sq)));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {}", lambda)));
    }
    Ok(1.0 / (1.0 + grad_sq / (lambda * lambda)).sqrt())
}

/// Per-pixel diffusion tensor entries (d11, d12, d22).
fn diffusion_tensors(u: &Image, params: EedParams) -> Result<Vec<(f64, f64, f64)>> {
    let smoothed = crate::grid::gaussian_smooth(u, params.sigma)?;
    let (w, h) = (u.width(), u.height());
    let vals = smoothed.values();
    let at = |x: isize, y: isize| -> f64 {
        // Central differences use the same mirrored boundaries as smoothing.
        let xi = x.clamp(0, w as isize - 1) as usize;
        let yi = y.clamp(0, h as isize - 1) as usize;
        vals[yi * w + xi]
    };
    let lambda = params.lambda;
    Ok(par::map_indexed(w * h, move |i| {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
        let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
        let s = gx * gx + gy * gy;
        if s == 0.0 {
            // Zero gradient: identity tensor, the continuous limit.
            (1.0, 0.0, 1.0)
        } else {
            let mu = charbonnier_diffusivity(s, lambda).expect("validated inputs");
            // Eigenvector parallel to the gradient carries mu, the
            // orthogonal one carries 1.
            let d11 = (mu * gx * gx + gy * gy) / s;
            let d22 = (mu * gy * gy + gx * gx) / s;
            let d12 = (mu - 1.0) * gx * gy / s;
            (d11, d12, d22)
        }
    }))
}

/// Assembles div(D ∇·) for the edge-enhancing diffusion tensor of `u` with
/// the standard 3×3 central finite-difference stencil.
///
/// Flux terms that would reach outside the grid are dropped, which encodes
/// the Neumann condition and keeps every row sum at zero. On a constant
/// image the tensor is the identity everywhere and the assembled operator
/// equals [`assemble_laplacian`] exactly.
pub fn assemble_eed(u: &Image, params: EedParams) -> Result<SparseOperator> {
    let tensors = diffusion_tensors(u, params)?;
    let (w, h) = (u.width(), u.height());
    let n = w * h;
    let rows = par::map_indexed(n, |i| {
        let (x, y) = (i % w, i / w);
        let d11 = |xx: usize, yy: usize| tensors[yy * w + xx].0;
        let d12 = |xx: usize, yy: usize| tensors[yy * w + xx].1;
        let d22 = |xx: usize, yy: usize| tensors[yy * w + xx].2;

        // Stencil offsets (dx, dy) -> weight; centre handled at the end.
        let add = |acc: &mut Vec<(usize, f64)>, dx: isize, dy: isize, weight: f64| {
            if weight == 0.0 {
                return;
            }
            let xx = x as isize + dx;
            let yy = y as isize + dy;
            debug_assert!(xx >= 0 && yy >= 0 && xx < w as isize && yy < h as isize);
            let j = yy as usize * w + xx as usize;
            match acc.binary_search_by_key(&j, |e| e.0) {
                Ok(pos) => acc[pos].1 += weight,
                Err(pos) => acc.insert(pos, (j, weight)),
            }
        };

        let mut acc: Vec<(usize, f64)> = Vec::with_capacity(9);
        let (xe, xw) = (x + 1 < w, x > 0); // east/west neighbour exists
        let (ys, yn) = (y + 1 < h, y > 0); // south/north neighbour exists

        // d/dx (d11 d/dx u): half-point averaged conductivities.
        if xe {
            add(&mut acc, 1, 0, (d11(x, y) + d11(x + 1, y)) / 2.0);
        }
        if xw {
            add(&mut acc, -1, 0, (d11(x, y) + d11(x - 1, y)) / 2.0);
        }
        // d/dy (d22 d/dy u).
        if ys {
            add(&mut acc, 0, 1, (d22(x, y) + d22(x, y + 1)) / 2.0);
        }
        if yn {
            add(&mut acc, 0, -1, (d22(x, y) + d22(x, y - 1)) / 2.0);
        }
        // d/dx (d12 d/dy u): quarter weights on the corners.
        if xe && ys {
            add(&mut acc, 1, 1, d12(x + 1, y) / 4.0);
        }
        if xe && yn {
            add(&mut acc, 1, -1, -d12(x + 1, y) / 4.0);
        }
        if xw && ys {
            add(&mut acc, -1, 1, -d12(x - 1, y) / 4.0);
        }
        if xw && yn {
            add(&mut acc, -1, -1, d12(x - 1, y) / 4.0);
        }
        // d/dy (d12 d/dx u).
        if ys && xe {
            add(&mut acc, 1, 1, d12(x, y + 1) / 4.0);
        }
        if ys && xw {
            add(&mut acc, -1, 1, -d12(x, y + 1) / 4.0);
        }
        if yn && xe {
            add(&mut acc, 1, -1, -d12(x, y - 1) / 4.0);
        }
        if yn && xw {
            add(&mut acc, -1, -1, d12(x, y - 1) / 4.0);
        }

        // Centre = −(sum of off-diagonals): zero row sum by construction.
        let off_sum: f64 = acc.iter().map(|&(_, v)| v).sum();
        // Drop exact-zero off-diagonal entries so the degenerate (constant
        // image) case matches the Laplacian structure bit for bit.
        acc.retain(|&(_, v)| v != 0.0);
        add(&mut acc, 0, 0, -off_sum);
        if acc.binary_search_by_key(&i, |e| e.0).is_err() {
            // Centre weight was exactly zero (1x1 grid): keep the diagonal.
            let pos = acc.binary_search_by_key(&i, |e| e.0).unwrap_err();
            acc.insert(pos, (i, 0.0));
        }
        acc
    });
    Ok(SparseOperator::from_rows(rows, false))
}

/// Builds the linear operator for a kind, given the current estimate `u`
/// (only used by EED).
pub fn assemble_for(kind: OperatorKind, u: &Image) -> Result<SparseOperator> {
    match kind {
        OperatorKind::Homogeneous => assemble_laplacian(u.width(), u.height()),
        OperatorKind::Biharmonic => assemble_biharmonic(u.width(), u.height()),
        OperatorKind::Eed(params) => assemble_eed(u, params),
    }
}
