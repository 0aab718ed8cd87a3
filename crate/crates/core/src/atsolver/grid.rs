//! Masked structured grids on `[-1, 1]^d` and sampled scalar fields.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Role of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Inside the domain with at least one exterior neighbor; carries Dirichlet data.
    Boundary,
    Exterior,
}

/// Domain realized by the node mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridDomain {
    /// `[-1, 1]`.
    Interval,
    /// `B_2D(0, 1)`.
    Disk,
    /// `B_2D(0, 1) x [-1, 1]`.
    Cylinder,
}

impl GridDomain {
    pub fn dimension(self) -> usize {
        match self {
            GridDomain::Interval => 1,
            GridDomain::Disk => 2,
            GridDomain::Cylinder => 3,
        }
    }

    pub fn contains(self, p: &Vec3) -> bool {
        // Nodes exactly on the circle count as inside.
        const SLACK: f64 = 1e-12;
        match self {
            GridDomain::Interval => p.x.abs() <= 1.0 + SLACK,
            GridDomain::Disk => p.x * p.x + p.y * p.y <= 1.0 + SLACK,
            GridDomain::Cylinder => p.x * p.x + p.y * p.y <= 1.0 + SLACK && p.z.abs() <= 1.0 + SLACK,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridDomain::Interval => "interval",
            GridDomain::Disk => "disk",
            GridDomain::Cylinder => "cylinder",
        }
    }
}

/// Structured grid with `n` nodes per used axis on `[-1, 1]` plus one padding
/// layer of exterior nodes, so every inside node has all its neighbors in range.
#[derive(Clone, Debug)]
pub struct Grid {
    pub domain: GridDomain,
    /// Nodes per used axis, padding excluded.
    pub n: usize,
    pub h: f64,
    /// Padded extents; unused axes have extent 1.
    pub dims: [usize; 3],
    pub strides: [usize; 3],
    pub kind: Vec<NodeKind>,
    /// `true` at the lower corner of every cell whose corners are all inside.
    pub cell_active: Vec<bool>,
}

impl Grid {
    pub fn new(domain: GridDomain, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Config(format!("grid needs at least 4 nodes per axis, got {n}")));
        }
        let d = domain.dimension();
        let h = 2.0 / (n - 1) as f64;
        let mut dims = [1; 3];
        for e in dims.iter_mut().take(d) {
            *e = n + 2;
        }
        let strides = [1, dims[0], dims[0] * dims[1]];
        let total = dims.iter().product();
        let mut grid = Self {
            domain,
            n,
            h,
            dims,
            strides,
            kind: vec![NodeKind::Exterior; total],
            cell_active: vec![false; total],
        };
        let inside: Vec<bool> = (0..total).map(|i| grid.is_real(i) && domain.contains(&grid.point(i))).collect();
        let offsets = grid.neighbor_offsets();
        for i in 0..total {
            if !inside[i] {
                continue;
            }
            let on_boundary = offsets
                .iter()
                .any(|&o| !inside[(i as isize + o) as usize]);
            grid.kind[i] = if on_boundary { NodeKind::Boundary } else { NodeKind::Interior };
        }
        let corners = grid.cell_corner_offsets();
        for i in 0..total {
            let c = grid.coords(i);
            let fits = (0..d).all(|k| c[k] + 1 < dims[k]);
            grid.cell_active[i] = fits && corners.iter().all(|&o| inside[i + o]);
        }
        Ok(grid)
    }

    /// Smallest even node count with spacing at most `h`.
    pub fn nodes_for_spacing(h: f64) -> usize {
        let mut n = (2.0 / h - 1e-9).ceil() as usize + 1;
        if n % 2 == 1 {
            n += 1;
        }
        n
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        [
            i % self.dims[0],
            (i / self.strides[1]) % self.dims[1],
            i / self.strides[2],
        ]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + c[1] * self.strides[1] + c[2] * self.strides[2]
    }

    /// Not part of the padding layer.
    fn is_real(&self, i: usize) -> bool {
        let c = self.coords(i);
        (0..self.dimension()).all(|k| c[k] >= 1 && c[k] <= self.n)
    }

    pub fn point(&self, i: usize) -> Vec3 {
        let c = self.coords(i);
        let mut p = Vec3::zeros();
        for k in 0..self.dimension() {
            p[k] = -1.0 + (c[k] as f64 - 1.0) * self.h;
        }
        p
    }

    pub fn is_inside(&self, i: usize) -> bool {
        self.kind[i] != NodeKind::Exterior
    }

    /// Linear offsets of the `3^d` stencil, center included, in lexicographic order.
    pub fn neighbor_offsets(&self) -> Vec<isize> {
        let d = self.dimension();
        let mut out = Vec::with_capacity(3usize.pow(d as u32));
        for s in 0..3usize.pow(d as u32) {
            let mut off = 0isize;
            let mut rest = s;
            for k in 0..d {
                off += ((rest % 3) as isize - 1) * self.strides[k] as isize;
                rest /= 3;
            }
            out.push(off);
        }
        out
    }

    /// Offsets from a cell's lower corner to its `2^d` corners; bit `k` of the
    /// corner number selects the upper node along axis `k`.
    pub fn cell_corner_offsets(&self) -> Vec<usize> {
        let d = self.dimension();
        (0..1usize << d)
            .map(|b| (0..d).filter(|k| b >> k & 1 == 1).map(|k| self.strides[k]).sum())
            .collect()
    }

    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.cell_active[i]).collect()
    }

    /// Measure of the union of active cells.
    pub fn masked_measure(&self) -> f64 {
        self.active_cells().len() as f64 * self.h.powi(self.dimension() as i32)
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kind.iter().filter(|&&k| k == kind).count()
    }

    /// Copy of padded node values as a field on the real nodes.
    pub fn snapshot(&self, values: &[f64], exterior: f64) -> ScalarField {
        let d = self.dimension();
        let mut dims = [1; 3];
        for e in dims.iter_mut().take(d) {
            *e = self.n;
        }
        let mut out = Vec::with_capacity(dims.iter().product());
        let mut inside = Vec::with_capacity(out.capacity());
        let lo = |k: usize| usize::from(k < d);
        for c2 in 0..dims[2] {
            for c1 in 0..dims[1] {
                for c0 in 0..dims[0] {
                    let i = self.index([c0 + lo(0), c1 + lo(1), c2 + lo(2)]);
                    let keep = self.is_inside(i);
                    out.push(if keep { values[i] } else { exterior });
                    inside.push(keep);
                }
            }
        }
        let mut origin = Vec3::zeros();
        for k in 0..d {
            origin[k] = -1.0;
        }
        ScalarField {
            dims,
            origin,
            spacing: self.h,
            values: out,
            inside,
        }
    }
}

/// Node samples on a uniform lattice, `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: f64,
    pub values: Vec<f64>,
    /// Nodes that belong to the computational domain.
    pub inside: Vec<bool>,
}

impl ScalarField {
    /// Samples `f` on every node of an all-inside lattice.
    pub fn from_fn(dims: [usize; 3], origin: Vec3, spacing: f64, f: impl Fn(&Vec3) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(&(origin + spacing * Vec3::new(i as f64, j as f64, k as f64))));
                }
            }
        }
        let inside = vec![true; values.len()];
        Self {
            dims,
            origin,
            spacing,
            values,
            inside,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dims.iter().filter(|&&n| n > 1).count()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.spacing * Vec3::new(i as f64, j as f64, k as f64)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .zip(&self.inside)
            .filter(|(_, &inside)| inside)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    }
}
