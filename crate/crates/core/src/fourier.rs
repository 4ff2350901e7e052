//! Functions on F_q^d under the dual measure convention.
//!
//! The space side carries the normalized counting measure `dx` (point mass
//! `q^{-d}`); the frequency side carries the counting measure `dm`.
//!
//! ```text
//! fourier_transform:  g^(x)   = sum_m chi(-x.m) g(m)            (dm -> dx)
//! inverse transform:  f^v(m)  = q^{-d} sum_x chi(m.x) f(x)      (dx -> dm)
//! convolution:        f*h(y)  = q^{-d} sum_x f(y - x) h(x)
//! ```
//!
//! Points are laid out row-major: `(x_1, ..., x_d) -> sum_i x_i q^{d-i}`, so
//! the last coordinate varies fastest.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chars::Character;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::field::{FieldElement, Prime};
use crate::varieties::Variety;

pub const MAX_DIMENSION: usize = 6;

/// The shape `F_q^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    q: Prime,
    d: usize,
}

impl Grid {
    pub fn new(q: Prime, d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange(d));
        }
        let size = (q.get() as u128).pow(d as u32);
        if size > usize::MAX as u128 / 64 {
            return Err(Error::CapExceeded {
                q: q.get(),
                d,
                size,
                cap: usize::MAX as u128 / 64,
            });
        }
        Ok(Grid { q, d })
    }

    pub fn q(self) -> Prime {
        self.q
    }

    pub fn d(self) -> usize {
        self.d
    }

    pub fn len(self) -> usize {
        (self.q.get() as usize).pow(self.d as u32)
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Index step of coordinate `axis` (0-based).
    pub fn stride(self, axis: usize) -> usize {
        (self.q.get() as usize).pow((self.d - 1 - axis) as u32)
    }

    pub fn coords(self, mut index: usize) -> Vec<u64> {
        let q = self.q.get() as usize;
        let mut out = vec![0u64; self.d];
        for slot in out.iter_mut().rev() {
            *slot = (index % q) as u64;
            index /= q;
        }
        out
    }

    pub fn index_of(self, coords: &[u64]) -> usize {
        let q = self.q.get();
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * q as usize + (c % q) as usize)
    }

    /// All coordinates, flattened `len x d`, in index order.
    pub fn coordinate_table(self) -> Vec<u32> {
        let q = self.q.get() as u32;
        let mut table = Vec::with_capacity(self.len() * self.d);
        let mut current = vec![0u32; self.d];
        for _ in 0..self.len() {
            table.extend_from_slice(&current);
            for slot in current.iter_mut().rev() {
                *slot += 1;
                if *slot == q {
                    *slot = 0;
                } else {
                    break;
                }
            }
        }
        table
    }

    /// Index of `x_a - x_b`.
    pub fn sub_index(self, a: usize, b: usize) -> usize {
        let q = self.q;
        let (ca, cb) = (self.coords(a), self.coords(b));
        let diff: Vec<u64> = ca.iter().zip(&cb).map(|(&x, &y)| q.sub_raw(x, y)).collect();
        self.index_of(&diff)
    }

    /// Index of `-x_a`.
    pub fn neg_index(self, a: usize) -> usize {
        let q = self.q;
        let neg: Vec<u64> = self.coords(a).iter().map(|&x| q.sub_raw(0, x)).collect();
        self.index_of(&neg)
    }

    /// Dot product `x_a . x_b` in F_q.
    pub fn dot(self, a: usize, b: usize) -> u64 {
        let q = self.q;
        self.coords(a)
            .iter()
            .zip(self.coords(b))
            .fold(0, |acc, (&x, y)| q.add_raw(acc, q.mul_raw(x, y)))
    }
}

/// A point of F_q^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    q: Prime,
    coords: Vec<u64>,
}

impl Point {
    pub fn new(q: Prime, coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange(coords.len()));
        }
        Ok(Point {
            q,
            coords: coords.iter().map(|&c| q.reduce(c)).collect(),
        })
    }

    pub fn from_elements(elements: &[FieldElement]) -> Result<Self> {
        let first = elements
            .first()
            .ok_or(Error::DimensionOutOfRange(0))?
            .modulus();
        if let Some(bad) = elements.iter().find(|e| e.modulus() != first) {
            return Err(Error::ModulusMismatch {
                left: first.get(),
                right: bad.modulus().get(),
            });
        }
        let raw: Vec<i64> = elements.iter().map(|e| e.value() as i64).collect();
        Point::new(first, &raw)
    }

    pub fn origin(grid: Grid) -> Self {
        Point {
            q: grid.q(),
            coords: vec![0; grid.d()],
        }
    }

    pub fn from_index(grid: Grid, index: usize) -> Self {
        Point {
            q: grid.q(),
            coords: grid.coords(index),
        }
    }

    pub fn q(&self) -> Prime {
        self.q
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn index_in(&self, grid: Grid) -> Result<usize> {
        if grid.q() != self.q || grid.d() != self.d() {
            return Err(Error::ShapeMismatch(format!(
                "point in F_{}^{} used on grid F_{}^{}",
                self.q,
                self.d(),
                grid.q(),
                grid.d()
            )));
        }
        Ok(grid.index_of(&self.coords))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureSide {
    /// Normalized counting measure, point mass `q^{-d}`.
    SpaceDx,
    /// Counting measure, point mass 1.
    FreqDm,
}

impl MeasureSide {
    fn name(self) -> &'static str {
        match self {
            MeasureSide::SpaceDx => "space (dx)",
            MeasureSide::FreqDm => "frequency (dm)",
        }
    }

    pub fn point_mass(self, grid: Grid) -> f64 {
        match self {
            MeasureSide::SpaceDx => 1.0 / grid.len() as f64,
            MeasureSide::FreqDm => 1.0,
        }
    }
}

/// Anything integrated against a weighted counting measure.
pub trait Measured {
    fn values(&self) -> &[Complex64];
    fn point_mass(&self) -> f64;
}

/// A complex function on F_q^d tagged with its measure.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    side: MeasureSide,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, side: MeasureSide, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, side, values })
    }

    pub fn from_real(grid: Grid, side: MeasureSide, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            side,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(grid: Grid, side: MeasureSide) -> Self {
        Self::constant(grid, side, Complex64::new(0.0, 0.0))
    }

    pub fn constant(grid: Grid, side: MeasureSide, value: Complex64) -> Self {
        GridFunction {
            grid,
            side,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, side: MeasureSide, mut f: impl FnMut(&[u64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        GridFunction { grid, side, values }
    }

    /// `value` at `index`, zero elsewhere.
    pub fn delta(grid: Grid, side: MeasureSide, index: usize, value: f64) -> Self {
        let mut out = Self::zeros(grid, side);
        out.values[index] = Complex64::new(value, 0.0);
        out
    }

    /// Characteristic function of a set of indices.
    pub fn indicator(grid: Grid, side: MeasureSide, indices: &[usize]) -> Self {
        let mut out = Self::zeros(grid, side);
        for &i in indices {
            out.values[i] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn side(&self) -> MeasureSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, index: usize) -> Complex64 {
        self.values[index]
    }

    pub fn at_point(&self, point: &Point) -> Result<Complex64> {
        Ok(self.values[point.index_in(self.grid)?])
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(format!(
                "F_{}^{} vs F_{}^{}",
                self.grid.q(),
                self.grid.d(),
                other.grid.q(),
                other.grid.d()
            )));
        }
        if self.side != other.side {
            return Err(Error::WrongSide {
                expected: self.side.name(),
                found: other.side.name(),
            });
        }
        Ok(())
    }

    pub fn require_side(&self, side: MeasureSide) -> Result<()> {
        if self.side != side {
            return Err(Error::WrongSide {
                expected: side.name(),
                found: self.side.name(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridFunction {
            grid: self.grid,
            side: self.side,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn pointwise_mul(&self, other: &GridFunction) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        GridFunction {
            grid: self.grid,
            side: self.side,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Re-tags the same values with another measure.
    pub fn with_side(mut self, side: MeasureSide) -> Self {
        self.side = side;
        self
    }

    /// `integral f conj(h)` against the function's measure.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        let w = self.side.point_mass(self.grid);
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * w)
    }

    pub fn lp_norm(&self, p: Exponent) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Measured for GridFunction {
    fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn point_mass(&self) -> f64 {
        self.side.point_mass(self.grid)
    }
}

/// A function on the points of a variety, measured by its normalized surface
/// measure (point mass `1/|V|`).
#[derive(Clone, Debug)]
pub struct SurfaceFunction {
    variety: Arc<Variety>,
    values: Vec<Complex64>,
}

impl SurfaceFunction {
    pub fn new(variety: Arc<Variety>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != variety.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a variety of {} points",
                values.len(),
                variety.len()
            )));
        }
        Ok(SurfaceFunction { variety, values })
    }

    pub fn from_real(variety: Arc<Variety>, values: &[f64]) -> Result<Self> {
        let values = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(variety, values)
    }

    pub fn constant(variety: Arc<Variety>, value: Complex64) -> Self {
        let values = vec![value; variety.len()];
        SurfaceFunction { variety, values }
    }

    /// Indicator of the points of `V` whose grid indices are listed.
    pub fn indicator_of(variety: Arc<Variety>, grid_indices: &[usize]) -> Result<Self> {
        let mut values = vec![Complex64::new(0.0, 0.0); variety.len()];
        for &g in grid_indices {
            let pos = variety.position(g).ok_or_else(|| {
                Error::InvalidParameter(format!("grid index {g} is not on the variety"))
            })?;
            values[pos] = Complex64::new(1.0, 0.0);
        }
        Ok(SurfaceFunction { variety, values })
    }

    /// Restriction `f|_V` of a grid function.
    pub fn restrict(variety: Arc<Variety>, f: &GridFunction) -> Result<Self> {
        if f.grid() != variety.grid() {
            return Err(Error::ShapeMismatch("restriction to a variety on another grid".into()));
        }
        let values = variety.points().iter().map(|&i| f.at(i)).collect();
        Ok(SurfaceFunction { variety, values })
    }

    pub fn variety(&self) -> &Arc<Variety> {
        &self.variety
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `h V` as a function on `(F_q^d, dx)`.
    pub fn extend_by_zero(&self) -> GridFunction {
        let grid = self.variety.grid();
        let mut out = GridFunction::zeros(grid, MeasureSide::SpaceDx);
        for (&i, &v) in self.variety.points().iter().zip(&self.values) {
            out.values[i] = v;
        }
        out
    }

    pub fn inner(&self, other: &SurfaceFunction) -> Result<Complex64> {
        if !self.variety.same_as(&other.variety) {
            return Err(Error::ShapeMismatch("surface functions on different varieties".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            / self.values.len() as f64)
    }

    pub fn lp_norm(&self, p: Exponent) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn weak_norm(&self, r: Exponent) -> Result<f64> {
        weak_lr_norm(self, r)
    }
}

impl Measured for SurfaceFunction {
    fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn point_mass(&self) -> f64 {
        1.0 / self.values.len() as f64
    }
}

/// `(integral |f|^p)^{1/p}`, or the maximum modulus for `p = inf`.
pub fn lp_norm<M: Measured + ?Sized>(f: &M, p: Exponent) -> Result<f64> {
    p.require_admissible()?;
    Ok(lp_norm_of_magnitudes(
        f.values().iter().map(|v| v.norm()),
        f.point_mass(),
        p,
    ))
}

/// Norm of nonnegative magnitudes under point mass `w`; `p` must be admissible.
pub(crate) fn lp_norm_of_magnitudes(
    magnitudes: impl Iterator<Item = f64> + Clone,
    w: f64,
    p: Exponent,
) -> f64 {
    let peak = magnitudes.clone().fold(0.0, f64::max);
    if p.is_infinite() || peak == 0.0 {
        return peak;
    }
    let pv = p.value();
    if p == Exponent::ONE {
        return w * magnitudes.sum::<f64>();
    }
    // Scale by the peak so large q^d-sized values cannot overflow.
    let sum: f64 = magnitudes.map(|m| (m / peak).powf(pv)).sum();
    peak * (w * sum).powf(1.0 / pv)
}

/// Weak-type quasinorm `sup_lambda lambda mu(|g| >= lambda)^{1/r}`, with
/// `lambda` ranging over attained values of `|g|`.
pub fn weak_lr_norm<M: Measured + ?Sized>(g: &M, r: Exponent) -> Result<f64> {
    r.require_admissible()?;
    let mut mags: Vec<f64> = g.values().iter().map(|v| v.norm()).collect();
    Ok(weak_norm_of_magnitudes(&mut mags, g.point_mass(), r))
}

pub(crate) fn weak_norm_of_magnitudes(mags: &mut [f64], w: f64, r: Exponent) -> f64 {
    mags.sort_by(|a, b| b.total_cmp(a));
    if r.is_infinite() {
        return mags.first().copied().unwrap_or(0.0);
    }
    let inv_r = r.inv_f64();
    // For tied levels the last index carries the full level-set measure, so the
    // running maximum over all indices equals the maximum over distinct levels.
    mags.iter()
        .enumerate()
        .take_while(|(_, &m)| m > 0.0)
        .map(|(k, &m)| m * ((k + 1) as f64 * w).powf(inv_r))
        .fold(0.0, f64::max)
}

/// Which algorithm evaluates a transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformPath {
    /// Direct `O(q^{2d})` summation.
    Direct,
    /// One axis at a time, `O(d q^{d+1})`.
    Factorized,
}

/// `g^(x) = sum_m chi(-x.m) g(m)`; input on `dm`, output on `dx`.
pub fn fourier_transform(g: &GridFunction) -> Result<GridFunction> {
    fourier_transform_with(g, TransformPath::Factorized)
}

pub fn fourier_transform_with(g: &GridFunction, path: TransformPath) -> Result<GridFunction> {
    g.require_side(MeasureSide::FreqDm)?;
    let values = transform(g.grid, &g.values, -1, path);
    Ok(GridFunction {
        grid: g.grid,
        side: MeasureSide::SpaceDx,
        values,
    })
}

/// `f^v(m) = q^{-d} sum_x chi(m.x) f(x)`; input on `dx`, output on `dm`.
pub fn inverse_fourier_transform(f: &GridFunction) -> Result<GridFunction> {
    inverse_fourier_transform_with(f, TransformPath::Factorized)
}

pub fn inverse_fourier_transform_with(f: &GridFunction, path: TransformPath) -> Result<GridFunction> {
    f.require_side(MeasureSide::SpaceDx)?;
    let scale = 1.0 / f.grid.len() as f64;
    let mut values = transform(f.grid, &f.values, 1, path);
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(GridFunction {
        grid: f.grid,
        side: MeasureSide::FreqDm,
        values,
    })
}

/// `out(y) = sum_x chi(sign * y.x) input(x)`, unnormalized.
pub(crate) fn transform(grid: Grid, input: &[Complex64], sign: i64, path: TransformPath) -> Vec<Complex64> {
    match path {
        TransformPath::Direct => transform_direct(grid, input, sign),
        TransformPath::Factorized => {
            let mut values = input.to_vec();
            transform_in_place(grid, &mut values, sign);
            values
        }
    }
}

fn transform_direct(grid: Grid, input: &[Complex64], sign: i64) -> Vec<Complex64> {
    let q = grid.q();
    let chi = Character::canonical(q);
    let d = grid.d();
    let coords = grid.coordinate_table();
    let n = grid.len();
    (0..n)
        .map(|y| {
            let cy = &coords[y * d..(y + 1) * d];
            (0..n)
                .map(|x| {
                    let cx = &coords[x * d..(x + 1) * d];
                    let dot = cy
                        .iter()
                        .zip(cx)
                        .fold(0u64, |acc, (&a, &b)| q.add_raw(acc, q.mul_raw(a as u64, b as u64)));
                    let phase = if sign < 0 { q.sub_raw(0, dot) } else { dot };
                    chi.at(phase) * input[x]
                })
                .sum()
        })
        .collect()
}

/// Axis-by-axis transform: each axis is a `q x q` character matrix applied to
/// every line of the grid along that axis.
pub(crate) fn transform_in_place(grid: Grid, values: &mut [Complex64], sign: i64) {
    let q = grid.q();
    let n = q.get() as usize;
    let chi = Character::canonical(q);
    let kernel: Vec<Complex64> = (0..n)
        .flat_map(|j| {
            let chi = &chi;
            (0..n).map(move |i| {
                let k = q.mul_raw(i as u64, j as u64);
                chi.at(if sign < 0 { q.sub_raw(0, k) } else { k })
            })
        })
        .collect();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.d() {
        let stride = grid.stride(axis);
        let block = stride * n;
        for start in (0..values.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + i * stride];
                }
                for j in 0..n {
                    let row = &kernel[j * n..(j + 1) * n];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, v) in row.iter().zip(&line) {
                        acc += k * v;
                    }
                    values[base + j * stride] = acc;
                }
            }
        }
    }
}

/// `f * h` on `(F_q^d, dx)` through the convolution theorem.
pub fn convolve(f: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
    f.require_side(MeasureSide::SpaceDx)?;
    f.check_compatible(h)?;
    let fv = inverse_fourier_transform(f)?;
    let hv = inverse_fourier_transform(h)?;
    fourier_transform(&fv.pointwise_mul(&hv)?)
}

/// `f * h(y) = q^{-d} sum_x f(y - x) h(x)` by direct summation.
pub fn convolve_direct(f: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
    f.require_side(MeasureSide::SpaceDx)?;
    f.check_compatible(h)?;
    let grid = f.grid;
    let n = grid.len();
    let scale = 1.0 / n as f64;
    let values = (0..n)
        .map(|y| {
            (0..n)
                .filter(|&x| h.values[x] != Complex64::new(0.0, 0.0))
                .map(|x| f.values[grid.sub_index(y, x)] * h.values[x])
                .sum::<Complex64>()
                * scale
        })
        .collect();
    Ok(GridFunction {
        grid,
        side: MeasureSide::SpaceDx,
        values,
    })
}

/// One identity of the transform, measured over random inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Largest error relative to the size of the inputs.
    pub max_relative_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub q: u64,
    pub d: usize,
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

/// Inversion, Plancherel, the convolution theorem against direct
/// summation, and factorized against direct transforms, on `trials` random
/// complex functions.
pub fn check_identities(grid: Grid, trials: usize, seed: u64, tolerance: f64) -> Result<IdentityReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut random = |side: MeasureSide| -> Result<GridFunction> {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GridFunction::new(grid, side, values)
    };
    let sup = |f: &GridFunction| f.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut worst = [0.0f64; 4];
    for _ in 0..trials {
        let f = random(MeasureSide::SpaceDx)?;
        let h = random(MeasureSide::SpaceDx)?;
        let fv = inverse_fourier_transform(&f)?;
        let back = fourier_transform(&fv)?;
        worst[0] = worst[0].max(back.max_abs_diff(&f) / sup(&f));

        let lhs = f.lp_norm(Exponent::TWO)?;
        let rhs = fv.lp_norm(Exponent::TWO)?;
        worst[1] = worst[1].max((lhs - rhs).abs() / lhs);

        let direct = inverse_fourier_transform(&convolve_direct(&f, &h)?)?;
        let product = fv.pointwise_mul(&inverse_fourier_transform(&h)?)?;
        worst[2] = worst[2].max(direct.max_abs_diff(&product) / sup(&product).max(f64::MIN_POSITIVE));

        let fast = inverse_fourier_transform_with(&f, TransformPath::Factorized)?;
        let slow = inverse_fourier_transform_with(&f, TransformPath::Direct)?;
        worst[3] = worst[3].max(fast.max_abs_diff(&slow) / sup(&slow).max(f64::MIN_POSITIVE));
    }
    let names = ["inversion", "plancherel", "convolution", "factorized-transform"];
    let checks: Vec<IdentityCheck> = names
        .iter()
        .zip(worst)
        .map(|(name, err)| IdentityCheck {
            name: name.to_string(),
            max_relative_error: err,
            passed: err <= tolerance,
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport {
        q: grid.q().get(),
        d: grid.d(),
        seed,
        trials,
        tolerance,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(q: u64, d: usize) -> Grid {
        Grid::new(Prime::new(q).unwrap(), d).unwrap()
    }

    fn random(grid: Grid, side: MeasureSide, rng: &mut ChaCha8Rng) -> GridFunction {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GridFunction::new(grid, side, values).unwrap()
    }

    #[test]
    fn layout_is_row_major() {
        let g = grid(3, 2);
        assert_eq!(g.index_of(&[1, 2]), 5);
        assert_eq!(g.coords(5), vec![1, 2]);
        let table = g.coordinate_table();
        for i in 0..g.len() {
            assert_eq!(
                table[i * 2..i * 2 + 2].iter().map(|&c| c as u64).collect::<Vec<_>>(),
                g.coords(i)
            );
        }
        assert_eq!(g.sub_index(g.index_of(&[0, 1]), g.index_of(&[1, 2])), g.index_of(&[2, 2]));
        assert_eq!(g.neg_index(g.index_of(&[1, 0])), g.index_of(&[2, 0]));
        assert!(Grid::new(Prime::new(3).unwrap(), 7).is_err());
        assert!(Grid::new(Prime::new(3).unwrap(), 0).is_err());
    }

    #[test]
    fn transform_of_constant_is_point_mass() {
        let g = grid(3, 2);
        let one = GridFunction::constant(g, MeasureSide::FreqDm, Complex64::new(1.0, 0.0));
        let hat = fourier_transform(&one).unwrap();
        assert!((hat.at(0) - Complex64::new(9.0, 0.0)).norm() < 1e-12);
        assert!(hat.values()[1..].iter().all(|v| v.norm() < 1e-12));
        assert_eq!(hat.side(), MeasureSide::SpaceDx);
    }

    #[test]
    fn transform_of_delta_is_unimodular() {
        let g = grid(5, 2);
        let m0 = g.index_of(&[2, 3]);
        let delta = GridFunction::delta(g, MeasureSide::FreqDm, m0, 1.0);
        let hat = fourier_transform(&delta).unwrap();
        let chi = Character::canonical(g.q());
        for x in 0..g.len() {
            let expected = chi.at(g.q().sub_raw(0, g.dot(x, m0)));
            assert!((hat.at(x) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_transform_examples() {
        let g = grid(3, 2);
        let spike = GridFunction::delta(g, MeasureSide::SpaceDx, 0, 9.0);
        let v = inverse_fourier_transform(&spike).unwrap();
        assert!(v.values().iter().all(|x| (x - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        let one = GridFunction::constant(g, MeasureSide::SpaceDx, Complex64::new(1.0, 0.0));
        let v = inverse_fourier_transform(&one).unwrap();
        assert!((v.at(0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(v.values()[1..].iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn wrong_side_is_rejected() {
        let g = grid(3, 1);
        let f = GridFunction::zeros(g, MeasureSide::SpaceDx);
        assert!(matches!(fourier_transform(&f), Err(Error::WrongSide { .. })));
        let h = GridFunction::zeros(g, MeasureSide::FreqDm);
        assert!(inverse_fourier_transform(&h).is_err());
        assert!(convolve(&h, &h).is_err());
        assert!(convolve(&f, &h).is_err());
        let other = GridFunction::zeros(grid(5, 1), MeasureSide::SpaceDx);
        assert!(matches!(convolve(&f, &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn factorized_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (q, d) in [(3, 1), (3, 3), (5, 2), (7, 2)] {
            let g = grid(q, d);
            let f = random(g, MeasureSide::SpaceDx, &mut rng);
            let a = inverse_fourier_transform_with(&f, TransformPath::Direct).unwrap();
            let b = inverse_fourier_transform_with(&f, TransformPath::Factorized).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
            let h = random(g, MeasureSide::FreqDm, &mut rng);
            let a = fourier_transform_with(&h, TransformPath::Direct).unwrap();
            let b = fourier_transform_with(&h, TransformPath::Factorized).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (q, d) in [(3, 2), (3, 3), (5, 2), (5, 3), (7, 2), (7, 3)] {
            let g = grid(q, d);
            let f = random(g, MeasureSide::SpaceDx, &mut rng);
            let fv = inverse_fourier_transform(&f).unwrap();
            let back = fourier_transform(&fv).unwrap();
            assert!(back.max_abs_diff(&f) < 1e-10);
            let lhs = fv.lp_norm(Exponent::TWO).unwrap();
            let rhs = f.lp_norm(Exponent::TWO).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }

    #[test]
    fn orthogonality_of_characters() {
        for q in [3, 5, 7] {
            for d in 1..=3 {
                let g = grid(q, d);
                let chi = Character::canonical(g.q());
                let n = g.len() as f64;
                for m in 0..g.len() {
                    let s: Complex64 = (0..g.len()).map(|x| chi.at(g.dot(m, x))).sum();
                    let expected = if m == 0 { n } else { 0.0 };
                    assert!((s - Complex64::new(expected, 0.0)).norm() < 1e-9 * n);
                }
            }
        }
    }

    #[test]
    fn convolution_identities() {
        let g = grid(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random(g, MeasureSide::SpaceDx, &mut rng);
        let unit = GridFunction::delta(g, MeasureSide::SpaceDx, 0, g.len() as f64);
        assert!(convolve(&f, &unit).unwrap().max_abs_diff(&f) < 1e-10);
        assert!(convolve_direct(&f, &unit).unwrap().max_abs_diff(&f) < 1e-12);
        let one = GridFunction::constant(g, MeasureSide::SpaceDx, Complex64::new(1.0, 0.0));
        assert!(convolve(&one, &one).unwrap().max_abs_diff(&one) < 1e-10);

        let h = random(g, MeasureSide::SpaceDx, &mut rng);
        let direct = convolve_direct(&f, &h).unwrap();
        assert!(convolve(&f, &h).unwrap().max_abs_diff(&direct) < 1e-10);
        let lhs = inverse_fourier_transform(&direct).unwrap();
        let rhs = inverse_fourier_transform(&f)
            .unwrap()
            .pointwise_mul(&inverse_fourier_transform(&h).unwrap())
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn norm_examples() {
        for (q, d) in [(3, 1), (3, 2), (5, 2)] {
            let g = grid(q, d);
            let delta = GridFunction::delta(g, MeasureSide::SpaceDx, 0, 1.0);
            for p in ["1", "3/2", "2", "7"] {
                let p: Exponent = p.parse().unwrap();
                let expected = (g.len() as f64).powf(-p.inv_f64());
                assert!((delta.lp_norm(p).unwrap() - expected).abs() < 1e-12);
            }
            assert_eq!(delta.lp_norm(Exponent::INFINITY).unwrap(), 1.0);
        }
        let g = grid(3, 1);
        let one = GridFunction::constant(g, MeasureSide::SpaceDx, Complex64::new(1.0, 0.0));
        assert!((one.lp_norm(Exponent::TWO).unwrap() - 1.0).abs() < 1e-15);
        let below_one: Exponent = "1/2".parse().unwrap();
        assert!(matches!(one.lp_norm(below_one), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn holder_monotonicity_on_dx() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = grid(5, 2);
        let exps: Vec<Exponent> = ["1", "4/3", "2", "3", "8", "inf"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        for _ in 0..20 {
            let f = random(g, MeasureSide::SpaceDx, &mut rng);
            let norms: Vec<f64> = exps.iter().map(|&p| f.lp_norm(p).unwrap()).collect();
            for w in norms.windows(2) {
                assert!(w[0] <= w[1] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn weak_norm_examples_on_a_variety() {
        let q = Prime::new(5).unwrap();
        let circle = Arc::new(crate::varieties::make_sphere(q, 2, q.one()).unwrap());
        let one = SurfaceFunction::constant(circle.clone(), Complex64::new(1.0, 0.0));
        for r in ["1", "2", "3", "inf"] {
            assert!((one.weak_norm(r.parse().unwrap()).unwrap() - 1.0).abs() < 1e-15);
            assert!((one.lp_norm(r.parse().unwrap()).unwrap() - 1.0).abs() < 1e-15);
        }
        let half: Vec<f64> = (0..circle.len()).map(|k| if k % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let h = SurfaceFunction::from_real(circle, &half).unwrap();
        assert!((h.weak_norm(Exponent::ONE).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weak_norm_is_below_strong_norm_and_matches_continuous_sup() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let q = Prime::new(7).unwrap();
        let circle = Arc::new(crate::varieties::make_sphere(q, 2, q.one()).unwrap());
        for _ in 0..50 {
            // Few distinct levels so that ties occur.
            let values: Vec<f64> = (0..circle.len()).map(|_| rng.gen_range(0..4) as f64).collect();
            let g = SurfaceFunction::from_real(circle.clone(), &values).unwrap();
            for r in ["1", "2", "3"] {
                let r: Exponent = r.parse().unwrap();
                let weak = g.weak_norm(r).unwrap();
                assert!(weak <= g.lp_norm(r).unwrap() * (1.0 + 1e-12));
                // sup over lambda > 0 of lambda mu(|g| > lambda)^{1/r}, approached
                // from just below each attained level.
                let w = 1.0 / values.len() as f64;
                let mut sup: f64 = 0.0;
                for &level in values.iter().filter(|&&v| v > 0.0) {
                    for eps in [1e-3, 1e-6, 1e-9] {
                        let lambda = level * (1.0 - eps);
                        let count = values.iter().filter(|&&v| v > lambda).count();
                        sup = sup.max(lambda * (count as f64 * w).powf(r.inv_f64()));
                    }
                }
                assert!((sup - weak).abs() <= 1e-8 * weak.max(1.0));
            }
        }
    }

    #[test]
    fn weak_norm_of_plain_magnitudes() {
        let r: Exponent = "2".parse().unwrap();
        // Level sets {4}, {4,1}: max(4 * (1/4)^{1/2}, 1 * (2/4)^{1/2}) = 2.
        let mut mags = vec![0.0, 1.0, 4.0, 0.0];
        assert!((weak_norm_of_magnitudes(&mut mags, 0.25, r) - 2.0).abs() < 1e-15);
        let mut zeros = vec![0.0; 3];
        assert_eq!(weak_norm_of_magnitudes(&mut zeros, 1.0 / 3.0, r), 0.0);
    }

    #[test]
    fn identity_report_passes() {
        let grid = Grid::new(Prime::new(5).unwrap(), 2).unwrap();
        let report = check_identities(grid, 5, 1, 1e-10).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.checks.len(), 4);
    }
}
