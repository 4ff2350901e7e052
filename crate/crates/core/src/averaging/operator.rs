use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::fourier::{
    lp_norm_of_magnitudes, transform_in_place, weak_norm_of_magnitudes, Grid, GridFunction,
    MeasureSide, SurfaceFunction,
};
use crate::varieties::Variety;

/// How an operator application is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplyPath {
    /// Cheaper of the two by operation count.
    Auto,
    /// Sum over the support of the input and the points of `V`.
    Direct,
    /// Multiply by `sigma^v` on the frequency side.
    Spectral,
}

/// Output quasinorm on `(V, sigma)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputNorm {
    Strong,
    Weak,
}

/// `A_V f(y) = |V|^{-1} sum_{x in V} f(y - x)` for `y in V`, mapping
/// `L^p(F_q^d, dx)` to `L^r(V, sigma)`.
#[derive(Debug)]
pub struct RestrictedAveragingOperator {
    variety: Arc<Variety>,
    /// `(a - b) mod q` at `a * q + b`.
    sub: Vec<u32>,
    strides: Vec<usize>,
    overlaps: OnceLock<Vec<u32>>,
}

impl RestrictedAveragingOperator {
    pub fn new(variety: Arc<Variety>) -> Self {
        let grid = variety.grid();
        let q = grid.q().get() as usize;
        let sub = (0..q * q)
            .map(|k| ((k / q + q - k % q) % q) as u32)
            .collect();
        let strides = (0..grid.d()).map(|axis| grid.stride(axis)).collect();
        RestrictedAveragingOperator {
            variety,
            sub,
            strides,
            overlaps: OnceLock::new(),
        }
    }

    pub fn variety(&self) -> &Arc<Variety> {
        &self.variety
    }

    pub fn grid(&self) -> Grid {
        self.variety.grid()
    }

    /// `|V|`.
    pub fn size(&self) -> usize {
        self.variety.len()
    }

    /// `q^d`.
    pub fn grid_len(&self) -> usize {
        self.grid().len()
    }

    #[inline]
    fn diff_index(&self, a: &[u32], b: &[u32]) -> usize {
        let q = self.grid().q().get() as usize;
        a.iter()
            .zip(b)
            .zip(&self.strides)
            .map(|((&x, &y), &s)| self.sub[x as usize * q + y as usize] as usize * s)
            .sum()
    }

    fn grid_coords(&self, index: usize) -> Vec<u32> {
        self.grid().coords(index).into_iter().map(|c| c as u32).collect()
    }

    fn direct_cost(&self, support: usize) -> f64 {
        (self.size() as f64) * (support.min(self.size()) as f64) * self.grid().d() as f64
    }

    fn spectral_cost(&self) -> f64 {
        let grid = self.grid();
        8.0 * grid.d() as f64 * grid.len() as f64 * grid.q().get() as f64
    }

    fn pick(&self, path: ApplyPath, support: usize) -> ApplyPath {
        match path {
            ApplyPath::Auto if self.direct_cost(support) <= self.spectral_cost() => ApplyPath::Direct,
            ApplyPath::Auto => ApplyPath::Spectral,
            other => other,
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<SurfaceFunction> {
        self.apply_with(f, ApplyPath::Auto)
    }

    pub fn apply_with(&self, f: &GridFunction, path: ApplyPath) -> Result<SurfaceFunction> {
        f.require_side(MeasureSide::SpaceDx)?;
        if f.grid() != self.grid() {
            return Err(Error::ShapeMismatch("input lives on another grid".into()));
        }
        let (re, im) = split(f.values());
        let out_re = self.apply_real_with(&re, path);
        let out_im = self.apply_real_with(&im, path);
        SurfaceFunction::new(self.variety.clone(), join(&out_re, &out_im))
    }

    /// `A_V^* h(x) = q^d / |V|^2 sum_{y in V} V(y - x) h(y)`.
    pub fn apply_adjoint(&self, h: &SurfaceFunction) -> Result<GridFunction> {
        self.apply_adjoint_with(h, ApplyPath::Auto)
    }

    pub fn apply_adjoint_with(&self, h: &SurfaceFunction, path: ApplyPath) -> Result<GridFunction> {
        if !h.variety().same_as(&self.variety) {
            return Err(Error::ShapeMismatch("surface function on another variety".into()));
        }
        let (re, im) = split(h.values());
        let out_re = self.adjoint_real_with(&re, path);
        let out_im = self.adjoint_real_with(&im, path);
        GridFunction::new(self.grid(), MeasureSide::SpaceDx, join(&out_re, &out_im))
    }

    pub fn apply_real(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real_with(f, ApplyPath::Auto)
    }

    pub fn apply_real_with(&self, f: &[f64], path: ApplyPath) -> Vec<f64> {
        assert_eq!(f.len(), self.grid_len(), "input length");
        let support: Vec<usize> = (0..f.len()).filter(|&i| f[i] != 0.0).collect();
        match self.pick(path, support.len()) {
            ApplyPath::Spectral => self.apply_spectral(f),
            _ if support.len() < self.size() => self.apply_scatter(f, &support),
            _ => self.apply_gather(f),
        }
    }

    /// `|V|^{-1} sum_{e} f(e) [y - e in V]`, cost `|V| |supp f|`.
    fn apply_scatter(&self, f: &[f64], support: &[usize]) -> Vec<f64> {
        let v = &self.variety;
        let d = v.d();
        let table = v.coordinate_table();
        let mut out = vec![0.0; v.len()];
        for &e in support {
            let ce = self.grid_coords(e);
            let fe = f[e];
            for (k, slot) in out.iter_mut().enumerate() {
                if v.contains_index(self.diff_index(&table[k * d..(k + 1) * d], &ce)) {
                    *slot += fe;
                }
            }
        }
        let scale = 1.0 / v.len() as f64;
        out.iter_mut().for_each(|x| *x *= scale);
        out
    }

    /// `|V|^{-1} sum_{x in V} f(y - x)`, cost `|V|^2`.
    fn apply_gather(&self, f: &[f64]) -> Vec<f64> {
        let v = &self.variety;
        let d = v.d();
        let table = v.coordinate_table();
        let scale = 1.0 / v.len() as f64;
        (0..v.len())
            .map(|ky| {
                let y = &table[ky * d..(ky + 1) * d];
                let total: f64 = (0..v.len())
                    .map(|kx| f[self.diff_index(y, &table[kx * d..(kx + 1) * d])])
                    .sum();
                total * scale
            })
            .collect()
    }

    /// `(f^v sigma^v)^` restricted to `V`.
    fn apply_spectral(&self, f: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let sigma = self.variety.sigma_check().values();
        let scale = 1.0 / grid.len() as f64;
        let mut values: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        transform_in_place(grid, &mut values, 1);
        for (v, s) in values.iter_mut().zip(sigma) {
            *v *= s * scale;
        }
        transform_in_place(grid, &mut values, -1);
        self.variety.points().iter().map(|&i| values[i].re).collect()
    }

    pub fn adjoint_real(&self, h: &[f64]) -> Vec<f64> {
        self.adjoint_real_with(h, ApplyPath::Auto)
    }

    pub fn adjoint_real_with(&self, h: &[f64], path: ApplyPath) -> Vec<f64> {
        assert_eq!(h.len(), self.size(), "input length");
        let support = h.iter().filter(|&&x| x != 0.0).count();
        match self.pick(path, support) {
            ApplyPath::Spectral => self.adjoint_spectral(h),
            _ => self.adjoint_scatter(h),
        }
    }

    /// Adds `h(y)` at every `y - w`, `w in V`.
    fn adjoint_scatter(&self, h: &[f64]) -> Vec<f64> {
        let v = &self.variety;
        let d = v.d();
        let table = v.coordinate_table();
        let mut out = vec![0.0; self.grid_len()];
        for (ky, &hy) in h.iter().enumerate() {
            if hy == 0.0 {
                continue;
            }
            let y = &table[ky * d..(ky + 1) * d];
            for kw in 0..v.len() {
                out[self.diff_index(y, &table[kw * d..(kw + 1) * d])] += hy;
            }
        }
        let n = v.len() as f64;
        let scale = self.grid_len() as f64 / (n * n);
        out.iter_mut().for_each(|x| *x *= scale);
        out
    }

    /// `q^d / |V| ((hV)^v conj(sigma^v))^`.
    fn adjoint_spectral(&self, h: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let sigma = self.variety.sigma_check().values();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (&i, &x) in self.variety.points().iter().zip(h) {
            values[i] = Complex64::new(x, 0.0);
        }
        transform_in_place(grid, &mut values, 1);
        let scale = 1.0 / self.size() as f64;
        for (v, s) in values.iter_mut().zip(sigma) {
            *v *= s.conj() * scale;
        }
        transform_in_place(grid, &mut values, -1);
        values.into_iter().map(|v| v.re).collect()
    }

    /// `|V cap (z + V)|` for every `z`.
    pub fn overlap_counts(&self) -> &[u32] {
        self.overlaps.get_or_init(|| {
            let n = self.size() as f64;
            if n * n * self.grid().d() as f64 <= self.spectral_cost() {
                let v = &self.variety;
                let d = v.d();
                let table = v.coordinate_table();
                let mut counts = vec![0u32; self.grid_len()];
                for ky in 0..v.len() {
                    let y = &table[ky * d..(ky + 1) * d];
                    for kw in 0..v.len() {
                        counts[self.diff_index(y, &table[kw * d..(kw + 1) * d])] += 1;
                    }
                }
                counts
            } else {
                // |V|^2 / q^d (|sigma^v|^2)^, rounded.
                let grid = self.grid();
                let mut values: Vec<Complex64> = self
                    .variety
                    .sigma_check()
                    .values()
                    .iter()
                    .map(|s| Complex64::new(s.norm_sqr(), 0.0))
                    .collect();
                transform_in_place(grid, &mut values, -1);
                let scale = n * n / grid.len() as f64;
                values.iter().map(|v| (v.re * scale).round() as u32).collect()
            }
        })
    }

    /// `||f||_{L^p(dx)}` of a real function.
    pub fn input_norm(&self, f: &[f64], p: Exponent) -> f64 {
        lp_norm_of_magnitudes(f.iter().map(|x| x.abs()), 1.0 / self.grid_len() as f64, p)
    }

    /// `||u||` on `(V, sigma)` in the strong or weak sense.
    pub fn output_norm(&self, u: &[f64], r: Exponent, kind: OutputNorm) -> f64 {
        let w = 1.0 / self.size() as f64;
        match kind {
            OutputNorm::Strong => lp_norm_of_magnitudes(u.iter().map(|x| x.abs()), w, r),
            OutputNorm::Weak => {
                let mut mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();
                weak_norm_of_magnitudes(&mut mags, w, r)
            }
        }
    }

    /// `||A_V f||_r / ||f||_p` for a real input; zero for `f = 0`.
    pub fn ratio_real(&self, f: &[f64], p: Exponent, r: Exponent, kind: OutputNorm) -> f64 {
        let denominator = self.input_norm(f, p);
        if denominator == 0.0 {
            return 0.0;
        }
        self.output_norm(&self.apply_real(f), r, kind) / denominator
    }

    /// `||A_V f||_r / ||f||_p` for a complex input.
    pub fn ratio(&self, f: &GridFunction, p: Exponent, r: Exponent, kind: OutputNorm) -> Result<f64> {
        p.require_admissible()?;
        r.require_admissible()?;
        let denominator = f.lp_norm(p)?;
        if denominator == 0.0 {
            return Ok(0.0);
        }
        let out = self.apply(f)?;
        let numerator = match kind {
            OutputNorm::Strong => out.lp_norm(r)?,
            OutputNorm::Weak => out.weak_norm(r)?,
        };
        Ok(numerator / denominator)
    }
}

fn split(values: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        values.iter().map(|v| v.re).collect(),
        values.iter().map(|v| v.im).collect(),
    )
}

fn join(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
}
