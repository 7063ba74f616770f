//! Space-time record of the per-destination road densities.

use alloc::vec;
use alloc::vec::Vec;

use crate::network::{DestIndex, RoadId};
use crate::solver::{DensityField, Grid};

/// Road densities `rho_d(t_n, x_k)` and their totals for `n = 0..=steps`.
///
/// Cells are numbered globally: road `r` owns `offset(r)..offset(r) + cells(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistory {
    dx: f64,
    dt: f64,
    /// Policy slab length in steps; distances sample the slab boundaries.
    slab_steps: usize,
    num_dest: usize,
    offsets: Vec<usize>,
    total_cells: usize,
    /// One frame per recorded time level, destination-major.
    frames: Vec<Vec<f64>>,
    totals: Vec<Vec<f64>>,
}

impl DensityHistory {
    pub fn new(grid: &Grid, num_dest: usize, slab_steps: usize) -> Self {
        let mut offsets = Vec::with_capacity(grid.cells_per_road.len());
        let mut acc = 0;
        for &c in &grid.cells_per_road {
            offsets.push(acc);
            acc += c;
        }
        DensityHistory {
            dx: grid.dx,
            dt: grid.dt,
            slab_steps,
            num_dest,
            offsets,
            total_cells: acc,
            frames: Vec::with_capacity(grid.steps + 1),
            totals: Vec::with_capacity(grid.steps + 1),
        }
    }

    /// The empty network over the whole horizon.
    pub fn zeros(grid: &Grid, num_dest: usize, slab_steps: usize) -> Self {
        let mut h = Self::new(grid, num_dest, slab_steps);
        for _ in 0..=grid.steps {
            h.frames.push(vec![0.0; num_dest * h.total_cells]);
            h.totals.push(vec![0.0; h.total_cells]);
        }
        h
    }

    /// Appends one time level from per-road fields (one population per destination).
    pub fn push(&mut self, roads: &[DensityField]) {
        let mut frame = vec![0.0; self.num_dest * self.total_cells];
        let mut total = vec![0.0; self.total_cells];
        for (r, field) in roads.iter().enumerate() {
            let off = self.offsets[r];
            for d in 0..self.num_dest {
                let dst = &mut frame[d * self.total_cells + off..d * self.total_cells + off + field.cells()];
                dst.copy_from_slice(field.population(d));
            }
            for k in 0..field.cells() {
                total[off + k] = field.total(k);
            }
        }
        self.frames.push(frame);
        self.totals.push(total);
    }

    /// Number of recorded time levels.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Index of the last recorded time level.
    pub fn last_step(&self) -> usize {
        self.frames.len().saturating_sub(1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn slab_steps(&self) -> usize {
        self.slab_steps
    }

    pub fn num_dest(&self) -> usize {
        self.num_dest
    }

    pub fn num_roads(&self) -> usize {
        self.offsets.len()
    }

    pub fn cells(&self, road: RoadId) -> usize {
        let end = self.offsets.get(road.0 + 1).copied().unwrap_or(self.total_cells);
        end - self.offsets[road.0]
    }

    fn range(&self, road: RoadId) -> core::ops::Range<usize> {
        let start = self.offsets[road.0];
        start..start + self.cells(road)
    }

    pub fn density(&self, step: usize, d: DestIndex, road: RoadId, cell: usize) -> f64 {
        self.frames[step][d.0 * self.total_cells + self.offsets[road.0] + cell]
    }

    pub fn road_density(&self, step: usize, d: DestIndex, road: RoadId) -> &[f64] {
        let r = self.range(road);
        &self.frames[step][d.0 * self.total_cells + r.start..d.0 * self.total_cells + r.end]
    }

    pub fn total(&self, step: usize, road: RoadId, cell: usize) -> f64 {
        self.totals[step][self.offsets[road.0] + cell]
    }

    pub fn road_totals(&self, step: usize, road: RoadId) -> &[f64] {
        &self.totals[step][self.range(road)]
    }

    /// Mutable access for building scripted histories. Keeps the totals in sync.
    pub fn set(&mut self, step: usize, d: DestIndex, road: RoadId, cell: usize, value: f64) {
        let g = self.offsets[road.0] + cell;
        self.frames[step][d.0 * self.total_cells + g] = value;
        let mut s = 0.0;
        for e in 0..self.num_dest {
            s += self.frames[step][e * self.total_cells + g];
        }
        self.totals[step][g] = s;
    }

    /// Same discretization, destinations and length.
    pub fn same_shape(&self, other: &DensityHistory) -> bool {
        self.dx == other.dx
            && self.dt == other.dt
            && self.slab_steps == other.slab_steps
            && self.num_dest == other.num_dest
            && self.offsets == other.offsets
            && self.total_cells == other.total_cells
            && self.frames.len() == other.frames.len()
    }

    pub(crate) fn frame(&self, step: usize) -> &[f64] {
        &self.frames[step]
    }
}
