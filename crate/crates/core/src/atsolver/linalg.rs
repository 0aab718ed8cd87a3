//! Q1 element matrices, assembled `3^d`-point stencils and Jacobi-preconditioned CG.

use rayon::prelude::*;

use super::grid::Grid;
use crate::error::{Error, Result};

const CHUNK: usize = 4096;

/// Reference Q1 stiffness on a cell of side `h` (`2^d x 2^d`, corner numbering
/// as in [`Grid::cell_corner_offsets`]).
pub fn q1_stiffness(dim: usize, h: f64) -> Vec<Vec<f64>> {
    let s1 = [[1.0, -1.0], [-1.0, 1.0]];
    let m1 = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
    let nc = 1 << dim;
    let scale = h.powi(dim as i32 - 2);
    let mut k = vec![vec![0.0; nc]; nc];
    for (a, row) in k.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let bit = |x: usize, j: usize| x >> j & 1;
            *v = scale
                * (0..dim)
                    .map(|axis| {
                        (0..dim)
                            .map(|j| {
                                if j == axis {
                                    s1[bit(a, j)][bit(b, j)]
                                } else {
                                    m1[bit(a, j)][bit(b, j)]
                                }
                            })
                            .product::<f64>()
                    })
                    .sum::<f64>();
        }
    }
    k
}

/// Assembled symmetric operator with one `3^d` coefficient row per node.
#[derive(Clone, Debug)]
pub struct Stencil {
    width: usize,
    offsets: Vec<isize>,
    pub coef: Vec<f64>,
}

impl Stencil {
    /// `sum_e c_e K_e + diag(extra)` over active cells.
    pub fn assemble(grid: &Grid, cell_coef: &[f64], kref: &[Vec<f64>], extra: Option<&[f64]>) -> Self {
        let d = grid.dimension();
        let width = 3usize.pow(d as u32);
        let offsets = grid.neighbor_offsets();
        let corners = grid.cell_corner_offsets();
        let center = (width - 1) / 2;
        let slot = |a: usize, b: usize| -> usize {
            (0..d)
                .map(|k| ((b >> k & 1) as isize - (a >> k & 1) as isize + 1) as usize * 3usize.pow(k as u32))
                .sum()
        };
        let slots: Vec<Vec<usize>> = (0..corners.len())
            .map(|a| (0..corners.len()).map(|b| slot(a, b)).collect())
            .collect();
        let mut coef = vec![0.0; grid.len() * width];
        coef.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
            if !grid.is_inside(i) {
                return;
            }
            for (a, &off) in corners.iter().enumerate() {
                // Cell whose corner `a` is node `i`.
                let Some(lower) = i.checked_sub(off) else { continue };
                if !grid.cell_active[lower] {
                    continue;
                }
                let c = cell_coef[lower];
                for b in 0..corners.len() {
                    row[slots[a][b]] += c * kref[a][b];
                }
            }
            if let Some(extra) = extra {
                row[center] += extra[i];
            }
        });
        Self { width, offsets, coef }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.coef[i * self.width + (self.width - 1) / 2]
    }

    /// `y_i = (A x)_i` on rows where `rows[i]`, zero elsewhere.
    pub fn apply(&self, x: &[f64], rows: &[bool], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = if rows[i] { self.row_dot(i, x) } else { 0.0 };
        });
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let row = &self.coef[i * self.width..(i + 1) * self.width];
        row.iter()
            .zip(&self.offsets)
            .map(|(c, &o)| c * x[(i as isize + o) as usize])
            .sum()
    }

    /// Quadratic form `x^T A x` summed over inside rows.
    pub fn quadratic_form(&self, x: &[f64], rows: &[bool]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, rows, &mut ax);
        dot(&ax, x)
    }
}

/// Chunked dot product; the chunk partials are summed in order, so the result
/// does not depend on the thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    partial.iter().sum()
}

/// Ordered parallel sum of `f(i)` over `0..n`.
pub fn ordered_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    partial.iter().sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` on the `free` rows with the other entries of `x` held fixed.
///
/// `x` is the warm start. Every iterate lowers the quadratic energy, so an
/// early exit never increases it.
pub fn pcg(a: &Stencil, b: &[f64], x: &mut [f64], free: &[bool], tol: f64, max_iter: usize) -> Result<CgStats> {
    let n = x.len();
    let mut r = vec![0.0; n];
    // Reference scale: the right-hand side with the free unknowns set to zero.
    let mut fixed = x.to_vec();
    for (v, &f) in fixed.iter_mut().zip(free) {
        if f {
            *v = 0.0;
        }
    }
    a.apply(&fixed, free, &mut r);
    r.par_iter_mut().zip(b).zip(free).for_each(|((ri, bi), &f)| {
        *ri = if f { bi - *ri } else { 0.0 };
    });
    let scale = dot(&r, &r).sqrt().max(f64::MIN_POSITIVE);
    a.apply(x, free, &mut r);
    r.par_iter_mut().zip(b).zip(free).for_each(|((ri, bi), &f)| {
        *ri = if f { bi - *ri } else { 0.0 };
    });
    let inv_diag: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| if free[i] { 1.0 / a.diagonal(i) } else { 0.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(p, q)| p * q).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / scale;
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(Error::CgNotConverged {
                iterations: it,
                residual: res,
            });
        }
        a.apply(&p, free, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        z.par_iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((zi, ri), di)| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        res = dot(&r, &r).sqrt() / scale;
        it += 1;
    }
    Ok(CgStats {
        iterations: it,
        relative_residual: res,
    })
}
