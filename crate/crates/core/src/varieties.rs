//! Varieties in F_q^d, their normalized surface measures, and the cone
//! closed forms.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chars::gauss_sum;
use crate::error::{Error, Result};
use crate::field::{sqrt_of_minus_one, FieldElement, Prime};
use crate::fourier::{transform, Grid, GridFunction, MeasureSide, Point, TransformPath};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarietyKind {
    /// `x_1^2 + ... + x_d^2 = j`, `j != 0`.
    Sphere { j: u64 },
    /// `x_1^2 + ... + x_{d-1}^2 = x_d`.
    Paraboloid,
    /// `x_1^2 + ... + x_{d-2}^2 = x_{d-1} x_d`.
    Cone,
    /// The `q^{d/2}`-point subspace inside the even-dimensional cone.
    IsotropicSubspace,
    Custom { name: String },
}

impl fmt::Display for VarietyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarietyKind::Sphere { j } => write!(f, "sphere(j={j})"),
            VarietyKind::Paraboloid => write!(f, "paraboloid"),
            VarietyKind::Cone => write!(f, "cone"),
            VarietyKind::IsotropicSubspace => write!(f, "isotropic-subspace"),
            VarietyKind::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

const NOT_ON_VARIETY: u32 = u32::MAX;

/// A nonempty point set with its normalized counting measure.
#[derive(Debug)]
pub struct Variety {
    grid: Grid,
    kind: VarietyKind,
    points: Vec<usize>,
    /// Position of each grid index in `points`, or `NOT_ON_VARIETY`.
    positions: Vec<u32>,
    coords: Vec<u32>,
    sigma_check: OnceLock<GridFunction>,
}

impl Variety {
    /// Builds a variety from grid indices (deduplicated and sorted).
    pub fn from_indices(grid: Grid, kind: VarietyKind, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::EmptyVariety);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= grid.len()) {
            return Err(Error::ShapeMismatch(format!("index {bad} outside the grid")));
        }
        let mut positions = vec![NOT_ON_VARIETY; grid.len()];
        let mut coords = Vec::with_capacity(indices.len() * grid.d());
        for (k, &i) in indices.iter().enumerate() {
            positions[i] = k as u32;
            coords.extend(grid.coords(i).into_iter().map(|c| c as u32));
        }
        Ok(Variety {
            grid,
            kind,
            points: indices,
            positions,
            coords,
            sigma_check: OnceLock::new(),
        })
    }

    /// Zero set of an arbitrary predicate on coordinates.
    pub fn from_predicate(
        grid: Grid,
        kind: VarietyKind,
        predicate: impl Fn(&[u64]) -> bool,
    ) -> Result<Self> {
        let d = grid.d();
        let table = grid.coordinate_table();
        let mut buf = vec![0u64; d];
        let indices = (0..grid.len())
            .filter(|&i| {
                for (slot, &c) in buf.iter_mut().zip(&table[i * d..(i + 1) * d]) {
                    *slot = c as u64;
                }
                predicate(&buf)
            })
            .collect();
        Self::from_indices(grid, kind, indices)
    }

    pub fn custom(
        q: Prime,
        d: usize,
        name: &str,
        predicate: impl Fn(&[u64]) -> bool,
    ) -> Result<Self> {
        let grid = Grid::new(q, d)?;
        Self::from_predicate(grid, VarietyKind::Custom { name: name.into() }, predicate)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn q(&self) -> Prime {
        self.grid.q()
    }

    pub fn d(&self) -> usize {
        self.grid.d()
    }

    pub fn kind(&self) -> &VarietyKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted grid indices of the points.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Coordinates of the `k`-th point.
    pub fn point_coords(&self, k: usize) -> &[u32] {
        let d = self.d();
        &self.coords[k * d..(k + 1) * d]
    }

    /// Flattened coordinates of all points, `len x d`.
    pub fn coordinate_table(&self) -> &[u32] {
        &self.coords
    }

    pub fn point(&self, k: usize) -> Point {
        Point::from_index(self.grid, self.points[k])
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.positions.get(index).is_some_and(|&p| p != NOT_ON_VARIETY)
    }

    pub fn contains(&self, point: &Point) -> Result<bool> {
        Ok(self.contains_index(point.index_in(self.grid)?))
    }

    /// Position of a grid index in the point list.
    pub fn position(&self, index: usize) -> Option<usize> {
        match self.positions.get(index) {
            Some(&p) if p != NOT_ON_VARIETY => Some(p as usize),
            _ => None,
        }
    }

    pub fn same_as(&self, other: &Variety) -> bool {
        std::ptr::eq(self, other) || (self.grid == other.grid && self.points == other.points)
    }

    /// `V = -V`.
    pub fn is_symmetric(&self) -> bool {
        self.points
            .iter()
            .all(|&i| self.contains_index(self.grid.neg_index(i)))
    }

    /// `V` as a 0/1 function.
    pub fn indicator(&self, side: MeasureSide) -> GridFunction {
        GridFunction::indicator(self.grid, side, &self.points)
    }

    /// `(q^d / |V|) 1_V` on `(F_q^d, dx)`.
    pub fn surface_measure_density(&self) -> GridFunction {
        let value = self.grid.len() as f64 / self.len() as f64;
        let mut values = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for &i in &self.points {
            values[i] = Complex64::new(value, 0.0);
        }
        GridFunction::new(self.grid, MeasureSide::SpaceDx, values).expect("grid-sized")
    }

    /// `sigma^v(m) = |V|^{-1} sum_{x in V} chi(m.x)`, cached.
    pub fn sigma_check(&self) -> &GridFunction {
        self.sigma_check.get_or_init(|| {
            let ind: Vec<Complex64> = self.indicator(MeasureSide::FreqDm).into_values();
            let scale = 1.0 / self.len() as f64;
            let mut values = transform(self.grid, &ind, 1, TransformPath::Factorized);
            values.iter_mut().for_each(|v| *v *= scale);
            values[0] = Complex64::new(1.0, 0.0);
            GridFunction::new(self.grid, MeasureSide::FreqDm, values).expect("grid-sized")
        })
    }

    /// `sigma^v(m)` by summing over the points, independent of the cache.
    pub fn sigma_check_direct_at(&self, m: usize) -> Complex64 {
        let q = self.q();
        let d = self.d();
        let chi = crate::chars::Character::canonical(q);
        let mc = self.grid.coords(m);
        let total: Complex64 = (0..self.len())
            .map(|k| {
                let x = &self.coords[k * d..(k + 1) * d];
                let dot = mc
                    .iter()
                    .zip(x)
                    .fold(0, |acc, (&a, &b)| q.add_raw(acc, q.mul_raw(a, b as u64)));
                chi.at(dot)
            })
            .sum();
        total / self.len() as f64
    }

    pub fn sigma_check_direct(&self) -> GridFunction {
        let values = (0..self.grid.len())
            .map(|m| self.sigma_check_direct_at(m))
            .collect();
        GridFunction::new(self.grid, MeasureSide::FreqDm, values).expect("grid-sized")
    }

    pub fn regularity_report(&self) -> RegularityReport {
        regularity_report(self)
    }
}

fn sum_of_squares(q: Prime, xs: &[u64]) -> u64 {
    xs.iter().fold(0, |acc, &x| q.add_raw(acc, q.mul_raw(x, x)))
}

/// `S_j = {x_1^2 + ... + x_d^2 = j}`.
pub fn make_sphere(q: Prime, d: usize, j: FieldElement) -> Result<Variety> {
    if j.modulus() != q {
        return Err(Error::ModulusMismatch {
            left: q.get(),
            right: j.modulus().get(),
        });
    }
    if j.is_zero() {
        return Err(Error::InvalidParameter("sphere radius j must be nonzero".into()));
    }
    if d < 2 {
        return Err(Error::DimensionOutOfRange(d));
    }
    let grid = Grid::new(q, d)?;
    let jv = j.value();
    Variety::from_predicate(grid, VarietyKind::Sphere { j: jv }, |x| {
        sum_of_squares(q, x) == jv
    })
}

/// `{x_1^2 + ... + x_{d-1}^2 = x_d}`.
pub fn make_paraboloid(q: Prime, d: usize) -> Result<Variety> {
    if d < 2 {
        return Err(Error::DimensionOutOfRange(d));
    }
    let grid = Grid::new(q, d)?;
    Variety::from_predicate(grid, VarietyKind::Paraboloid, |x| {
        sum_of_squares(q, &x[..d - 1]) == x[d - 1]
    })
}

/// `{x_1^2 + ... + x_{d-2}^2 = x_{d-1} x_d}`.
pub fn make_cone(q: Prime, d: usize) -> Result<Variety> {
    if d < 3 {
        return Err(Error::DimensionOutOfRange(d));
    }
    let grid = Grid::new(q, d)?;
    let gamma = GammaForm::new(q.one(), d)?;
    Variety::from_predicate(grid, VarietyKind::Cone, |x| gamma.eval(x) == 0)
}

/// `{(t_1, i t_1, ..., t_k, i t_k, s, 0)}` with `i^2 = -1` and `k = (d-2)/2`.
///
/// `Ok(None)` when `-1` is not a square in F_q.
pub fn isotropic_subspace(q: Prime, d: usize) -> Result<Option<Variety>> {
    if d < 4 || d % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "the isotropic subspace needs even d >= 4, got {d}"
        )));
    }
    let Some(i) = sqrt_of_minus_one(q) else {
        return Ok(None);
    };
    let grid = Grid::new(q, d)?;
    let free = d / 2;
    let n = q.get() as usize;
    let mut indices = Vec::with_capacity(n.pow(free as u32));
    let mut params = vec![0u64; free];
    let mut coords = vec![0u64; d];
    for _ in 0..n.pow(free as u32) {
        for (k, &t) in params[..free - 1].iter().enumerate() {
            coords[2 * k] = t;
            coords[2 * k + 1] = q.mul_raw(i.value(), t);
        }
        coords[d - 2] = params[free - 1];
        coords[d - 1] = 0;
        indices.push(grid.index_of(&coords));
        for slot in params.iter_mut() {
            *slot += 1;
            if *slot == q.get() {
                *slot = 0;
            } else {
                break;
            }
        }
    }
    Variety::from_indices(grid, VarietyKind::IsotropicSubspace, indices).map(Some)
}

/// `Gamma_l(xi) = xi_1^2 + ... + xi_{d-2}^2 - l xi_{d-1} xi_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaForm {
    ell: FieldElement,
    d: usize,
}

impl GammaForm {
    pub fn new(ell: FieldElement, d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::DimensionOutOfRange(d));
        }
        Ok(GammaForm { ell, d })
    }

    /// The frequency-side form with `l = 4`.
    pub fn frequency(q: Prime, d: usize) -> Result<Self> {
        Self::new(q.element(4), d)
    }

    pub fn ell(&self) -> FieldElement {
        self.ell
    }

    /// Value at raw coordinates.
    pub fn eval(&self, xi: &[u64]) -> u64 {
        let q = self.ell.modulus();
        let d = self.d;
        let squares = sum_of_squares(q, &xi[..d - 2]);
        let cross = q.mul_raw(self.ell.value(), q.mul_raw(xi[d - 2], xi[d - 1]));
        q.sub_raw(squares, cross)
    }

    pub fn eval_point(&self, xi: &Point) -> Result<FieldElement> {
        if xi.q() != self.ell.modulus() || xi.d() != self.d {
            return Err(Error::ShapeMismatch("point does not match the form".into()));
        }
        Ok(self.ell.modulus().element(self.eval(xi.coords()) as i64))
    }
}

/// `C^v(m)` for the cone from the four-branch Gauss-sum formula.
pub fn cone_fourier_closed_form(q: Prime, d: usize, m: &Point) -> Result<Complex64> {
    if d < 3 {
        return Err(Error::DimensionOutOfRange(d));
    }
    let gamma = GammaForm::frequency(q, d)?.eval_point(m)?;
    let g = gauss_sum(q);
    let qf = q.get() as f64;
    let qd = qf.powi(d as i32);
    let delta = if m.is_origin() { 1.0 / qf } else { 0.0 };
    let value = if d % 2 == 0 {
        let gp = g.power(d as u32 - 2);
        if gamma.is_zero() {
            Complex64::new(delta, 0.0) + gp * ((qf - 1.0) / qd)
        } else {
            -gp / qd
        }
    } else if gamma.is_zero() {
        Complex64::new(delta, 0.0)
    } else {
        g.power(d as u32 - 1) * (f64::from((-gamma).eta()) / qd)
    };
    Ok(value)
}

/// `C* = {m : Gamma_4(m) = 0}` as sorted grid indices.
pub fn dual_cone(q: Prime, d: usize) -> Result<Vec<usize>> {
    let grid = Grid::new(q, d)?;
    let gamma = GammaForm::frequency(q, d)?;
    let dd = grid.d();
    let table = grid.coordinate_table();
    let mut buf = vec![0u64; dd];
    Ok((0..grid.len())
        .filter(|&i| {
            for (slot, &c) in buf.iter_mut().zip(&table[i * dd..(i + 1) * dd]) {
                *slot = c as u64;
            }
            gamma.eval(&buf) == 0
        })
        .collect())
}

/// Measured size and decay constants of a variety.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub size: usize,
    /// `|V| / q^{d-1}`.
    pub size_ratio: f64,
    /// `max_{m != 0} |sigma^v(m)|`.
    pub max_decay: f64,
    /// `max_decay * q^{(d-1)/2}`.
    pub decay_ratio: f64,
    /// Counts of `m != 0` by the value of `|sigma^v(m)| q^{(d-1)/2}`, rounded
    /// to four decimals.
    pub branch_histogram: BTreeMap<String, usize>,
}

impl RegularityReport {
    /// Both constants within `c`: `1/c <= size_ratio <= c` and
    /// `decay_ratio <= c`.
    pub fn is_regular_at(&self, c: f64) -> bool {
        self.size_ratio >= 1.0 / c && self.size_ratio <= c && self.decay_ratio <= c
    }

    pub fn is_regular(&self) -> bool {
        self.is_regular_at(2.0)
    }
}

pub fn regularity_report(v: &Variety) -> RegularityReport {
    let q = v.q().get() as f64;
    let d = v.d() as i32;
    let sigma = v.sigma_check();
    let normal = q.powf(f64::from(d - 1) / 2.0);
    let mut histogram = BTreeMap::new();
    let mut max_decay: f64 = 0.0;
    for value in &sigma.values()[1..] {
        let m = value.norm();
        max_decay = max_decay.max(m);
        let mut key = format!("{:.4}", m * normal);
        if key == "-0.0000" {
            key = "0.0000".into();
        }
        *histogram.entry(key).or_insert(0) += 1;
    }
    RegularityReport {
        size: v.len(),
        size_ratio: v.len() as f64 / q.powi(d - 1),
        max_decay,
        decay_ratio: max_decay * normal,
        branch_histogram: histogram,
    }
}

/// `sum_{m in C*} |E^v(m)|^2 / (q^{-d-1} |E| + q^{-3d/2} |E|^2)`, with `E^v`
/// the inverse transform of `1_E` on `(F_q^d, dx)`.
pub fn dual_cone_energy_ratio(q: Prime, d: usize, set: &[usize]) -> Result<f64> {
    if d < 4 || d % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "dual-cone energy needs even d >= 4, got {d}"
        )));
    }
    let grid = Grid::new(q, d)?;
    let e = GridFunction::indicator(grid, MeasureSide::SpaceDx, set);
    let size = e.values().iter().filter(|v| v.re != 0.0).count();
    if size == 0 {
        return Err(Error::InvalidParameter("the set E is empty".into()));
    }
    let ev = crate::fourier::inverse_fourier_transform(&e)?;
    let lhs: f64 = dual_cone(q, d)?
        .into_iter()
        .map(|m| ev.at(m).norm_sqr())
        .sum();
    let qf = q.get() as f64;
    let df = d as f64;
    let size = size as f64;
    let rhs = qf.powf(-df - 1.0) * size + qf.powf(-1.5 * df) * size * size;
    Ok(lhs / rhs)
}
