//! Expected mutual information of a two-way contingency table.
//!
//! Tables are flattened row-major into `rows * cols` categories so the
//! generic simplex machinery applies unchanged. The expected mutual
//! information at posterior mean `u` is
//! `I(u) = sum_i h(u_i+) + sum_j h(u_+j) - sum_ij h(u_ij)` with a common `N = n + s`.

use crate::conservative::{sandwich, IndexSpace, ResidueBundle, Sandwich};
use crate::error::{IdmError, Result};
use crate::exact::entropy_interval_exact;
use crate::model::{u_from_t, u_zero, Counts, IdmConfig, Interval, IntervalKind, Region, TVector, UPoint};
use crate::oracle::{for_each_composition, grid_extrema, Extremes, GridSpec};
use crate::special::EntropyContext;

/// Shape of a contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TableDims {
    pub rows: usize,
    pub cols: usize,
}

impl TableDims {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }
}

/// A `rows x cols` table of counts `n_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCounts {
    cells: Vec<u64>,
    dims: TableDims,
}

impl JointCounts {
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(IdmError::EmptyTable);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(IdmError::RaggedTable { row, expected: cols, found: r.len() });
            }
        }
        let dims = TableDims { rows: rows.len(), cols };
        Ok(Self { cells: rows.into_iter().flatten().collect(), dims })
    }

    pub fn dims(&self) -> TableDims {
        self.dims
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.cells[self.dims.index(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.cells.chunks(self.dims.cols).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Row sums `n_i+`.
    pub fn row_marginals(&self) -> Counts {
        Counts::new(self.cells.chunks(self.dims.cols).map(|r| r.iter().sum()).collect()).expect("rows >= 1")
    }

    /// Column sums `n_+j`.
    pub fn col_marginals(&self) -> Counts {
        let mut out = vec![0; self.dims.cols];
        for r in self.cells.chunks(self.dims.cols) {
            for (acc, &x) in out.iter_mut().zip(r) {
                *acc += x;
            }
        }
        Counts::new(out).expect("cols >= 1")
    }

    /// Cells in row-major order as one count vector.
    pub fn flattened(&self) -> Counts {
        Counts::new(self.cells.clone()).expect("table is nonempty")
    }
}

fn marginals(values: &[f64], dims: TableDims) -> (Vec<f64>, Vec<f64>) {
    let mut row = vec![0.0; dims.rows];
    let mut col = vec![0.0; dims.cols];
    for (idx, &v) in values.iter().enumerate() {
        let (i, j) = dims.cell(idx);
        row[i] += v;
        col[j] += v;
    }
    (row, col)
}

/// `I(u) = H_row + H_col - H_joint` on a flattened joint point.
pub fn expected_mi(u: &UPoint, dims: TableDims) -> Result<f64> {
    if u.len() != dims.cells() {
        return Err(IdmError::DimensionMismatch { expected: dims.cells(), found: u.len() });
    }
    let ctx = EntropyContext::new(u.n_plus_s())?;
    let h = |x: f64| ctx.h_raw(x.clamp(0.0, 1.0));
    let (row, col) = marginals(u.values(), dims);
    let joint: f64 = u.values().iter().map(|&x| h(x)).sum();
    Ok(row.iter().map(|&x| h(x)).sum::<f64>() + col.iter().map(|&x| h(x)).sum::<f64>() - joint)
}

/// Mutual information `sum p_ij ln(p_ij / (p_i+ p_+j))` of a chance table.
pub fn plugin_mi(p: &[f64], dims: TableDims) -> f64 {
    let (row, col) = marginals(p, dims);
    p.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(idx, &x)| {
            let (i, j) = dims.cell(idx);
            x * (x / (row[i] * col[j])).ln()
        })
        .sum()
}

/// Bound from the three exact entropy intervals taken independently.
///
/// Valid, but can be far wider than needed because the three entropies
/// share one prior weight vector.
pub fn mi_crude_interval(jc: &JointCounts, cfg: &IdmConfig) -> Interval {
    let row = entropy_interval_exact(&jc.row_marginals(), cfg);
    let col = entropy_interval_exact(&jc.col_marginals(), cfg);
    let joint = entropy_interval_exact(&jc.flattened(), cfg);
    let lower = row.lower() + col.lower() - joint.upper();
    let upper = row.upper() + col.upper() - joint.lower();
    Interval::new(lower, upper.max(lower), IntervalKind::ConservativeOuter).expect("ordered")
}

/// Residue bundle of the expected mutual information over the cell grid.
///
/// `R_ij^ub = sigma [h'(u0_i+) + h'(u0_+j) - h'(u0_ij + sigma)]` and
/// `R_ij^lb = sigma [h'(u0_i+ + sigma) + h'(u0_+j + sigma) - h'(u0_ij)]`.
pub fn mi_residues(jc: &JointCounts, cfg: &IdmConfig) -> Result<ResidueBundle> {
    let dims = jc.dims();
    let u0 = u_zero(&jc.flattened(), cfg);
    let sig = u0.sigma();
    let ctx = EntropyContext::new(u0.n_plus_s())?;
    let dh = |x: f64| ctx.h_prime_raw(x.clamp(0.0, 1.0));
    let (row, col) = marginals(u0.values(), dims);
    let mut resid_ub = Vec::with_capacity(dims.cells());
    let mut resid_lb = Vec::with_capacity(dims.cells());
    for (idx, &u) in u0.values().iter().enumerate() {
        let (i, j) = dims.cell(idx);
        resid_ub.push(sig * (dh(row[i]) + dh(col[j]) - dh(u + sig)));
        resid_lb.push(sig * (dh(row[i] + sig) + dh(col[j] + sig) - dh(u)));
    }
    ResidueBundle::new(
        expected_mi(&u0, dims)?,
        resid_ub,
        resid_lb,
        IndexSpace::Grid { rows: dims.rows, cols: dims.cols },
    )
}

/// Outer bound and corner witnesses for the expected mutual information.
pub fn mi_sandwich(jc: &JointCounts, cfg: &IdmConfig) -> Result<Sandwich> {
    let dims = jc.dims();
    let bundle = mi_residues(jc, cfg)?;
    sandwich(&bundle, |u| expected_mi(u, dims).expect("dims match"), &jc.flattened(), cfg)
}

/// A product prior weight `t_ij = a_i b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorT {
    pub row_t: TVector,
    pub col_t: TVector,
}

impl TensorT {
    /// The flattened outer product `a ⊗ b`.
    pub fn outer(&self) -> TVector {
        let values =
            self.row_t.values().iter().flat_map(|&a| self.col_t.values().iter().map(move |&b| a * b)).collect();
        TVector::new(values).expect("product of simplex points lies on the simplex")
    }
}

/// Factorizes the corner `t_ij = delta_(i,i0) delta_(j,j0)` as `e_i0 ⊗ e_j0`,
/// showing the corner is also a product prior.
pub fn tensor_vertex_check(jc: &JointCounts, cell: (usize, usize)) -> Result<TensorT> {
    let dims = jc.dims();
    let (row, col) = cell;
    if row >= dims.rows || col >= dims.cols {
        return Err(IdmError::CellOutOfRange { row, col, rows: dims.rows, cols: dims.cols });
    }
    Ok(TensorT { row_t: TVector::vertex(dims.rows, row)?, col_t: TVector::vertex(dims.cols, col)? })
}

/// Extremes of the expected mutual information over product priors `a ⊗ b`
/// with `a`, `b` on uniform grids of the given step.
pub fn tensor_oracle_interval(jc: &JointCounts, cfg: &IdmConfig, grid_step: f64) -> Result<Interval> {
    let grid = GridSpec::new(grid_step)?;
    let dims = jc.dims();
    let row_grid = crate::oracle::simplex_grid(dims.rows, &grid)?;
    let col_count = grid.point_count(dims.cols);
    let total = (row_grid.len() as u128).saturating_mul(col_count);
    if total > grid.max_points() as u128 {
        return Err(IdmError::GridTooLarge { points: total, cap: grid.max_points() });
    }
    let counts = jc.flattened();
    let s = cfg.s();
    let n_plus_s = counts.total() as f64 + s;
    let n: Vec<f64> = counts.values().iter().map(|&c| c as f64).collect();
    let div = grid.divisions() as f64;
    let mut u = UPoint::from_parts(vec![0.0; dims.cells()], n_plus_s, s / n_plus_s, Region::Shifted);
    let mut ext = Extremes::new();
    for a in &row_grid {
        for_each_composition(dims.cols, grid.divisions(), |k| {
            for (idx, slot) in u.values_mut().iter_mut().enumerate() {
                let (i, j) = dims.cell(idx);
                let t = a.values()[i] * (k[j] as f64 / div);
                *slot = (n[idx] + s * t) / n_plus_s;
            }
            ext.push(expected_mi(&u, dims).expect("dims match"));
        });
    }
    for idx in 0..dims.cells() {
        let tt = tensor_vertex_check(jc, dims.cell(idx))?;
        ext.push(expected_mi(&u_from_t(&counts, cfg, &tt.outer())?, dims)?);
    }
    ext.into_interval()
}

/// Extremes of the expected mutual information over a grid of the full
/// `rows * cols` simplex.
pub fn full_oracle_interval(jc: &JointCounts, cfg: &IdmConfig, grid: &GridSpec) -> Result<Interval> {
    let dims = jc.dims();
    grid_extrema(|u| expected_mi(u, dims).expect("dims match"), &jc.flattened(), cfg, grid)
}
