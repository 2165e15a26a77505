//! Periodic fields of relaxed states on `[−π, π)³` (axes `t`, `x₁`, `x₂`) and
//! their Fourier-side tooling for the relaxed Euler operator.

use nalgebra::{SMatrix, SVector, SymmetricEigen, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::{StateVector, WaveCone};
use crate::symbol::{symbol, SymbolMatrix};

pub type Projector = SMatrix<f64, 8, 8>;

/// Largest per-axis size accepted for a full three-dimensional grid.
pub const MAX_CUBE: usize = 128;

/// Grid sizes along `(t, x₁, x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusDims(pub [usize; 3]);

impl TorusDims {
    pub fn cube(n: usize) -> Result<Self> {
        if n > MAX_CUBE {
            return Err(Error::Config(format!(
                "3-D grids are capped at {MAX_CUBE} per axis, got {n}"
            )));
        }
        Self::new([n, n, n])
    }

    /// `N × 1 × N`: fields varying in `t` and `x₂` only.
    pub fn slice(n: usize) -> Result<Self> {
        Self::new([n, 1, n])
    }

    pub fn new(n: [usize; 3]) -> Result<Self> {
        for &k in &n {
            if !k.is_power_of_two() {
                return Err(Error::Config(format!(
                    "grid size {k} is not a power of two"
                )));
            }
        }
        Ok(TorusDims(n))
    }

    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.0[1] + i[1]) * self.0[2] + i[2]
    }

    fn multi_index(&self, mut k: usize) -> [usize; 3] {
        let i2 = k % self.0[2];
        k /= self.0[2];
        [k / self.0[1], k % self.0[1], i2]
    }

    /// Integer frequency of every flat index, in `[−N/2, N/2)` per axis.
    fn frequency(&self, k: usize) -> [i64; 3] {
        let i = self.multi_index(k);
        let mut out = [0; 3];
        for a in 0..3 {
            let n = self.0[a] as i64;
            let v = i[a] as i64;
            out[a] = if v < n / 2 || n == 1 { v } else { v - n };
        }
        out
    }

    /// Unit directions a real field's mode at flat index `k` stands for. A
    /// Nyquist component `−N/2` is also `+N/2`, so such modes carry every
    /// sign choice; other modes carry one direction. Empty at the mean.
    fn directions(&self, k: usize) -> Vec<[f64; 3]> {
        let f = self.frequency(k);
        let mut out = vec![f];
        for a in 0..3 {
            if self.0[a] > 1 && f[a] == -(self.0[a] as i64) / 2 {
                let flipped: Vec<[i64; 3]> = out
                    .iter()
                    .map(|v| {
                        let mut w = *v;
                        w[a] = -w[a];
                        w
                    })
                    .collect();
                out.extend(flipped);
            }
        }
        out.into_iter().filter_map(unit).collect()
    }

    /// Axes with more than one node.
    pub fn active_axes(&self) -> Vec<usize> {
        (0..3).filter(|&a| self.0[a] > 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    pub dims: TorusDims,
    pub values: Vec<StateVector>,
}

impl TorusField {
    pub fn new(dims: TorusDims, values: Vec<StateVector>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::Config(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                dims.len()
            )));
        }
        Ok(TorusField { dims, values })
    }

    pub fn constant(dims: TorusDims, z: StateVector) -> Self {
        TorusField {
            dims,
            values: vec![z; dims.len()],
        }
    }

    /// Samples `f` at the nodes `x = −π + 2πi/N`.
    pub fn from_fn(dims: TorusDims, f: impl Fn([f64; 3]) -> StateVector + Sync) -> Self {
        let values = (0..dims.len())
            .into_par_iter()
            .map(|k| {
                let i = dims.multi_index(k);
                let x = [0, 1, 2].map(|a| {
                    -std::f64::consts::PI
                        + 2.0 * std::f64::consts::PI * i[a] as f64 / dims.0[a] as f64
                });
                f(x)
            })
            .collect();
        TorusField { dims, values }
    }

    pub fn mean(&self) -> StateVector {
        self.values.iter().sum::<StateVector>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_squared()).sum::<f64>() / self.values.len() as f64)
            .sqrt()
    }

    /// Periodic shift by whole cells.
    pub fn translate(&self, shift: [i64; 3]) -> TorusField {
        let d = self.dims;
        let mut values = vec![StateVector::zeros(); d.len()];
        for (k, v) in self.values.iter().enumerate() {
            let i = d.multi_index(k);
            let j = [0, 1, 2].map(|a| (i[a] as i64 + shift[a]).rem_euclid(d.0[a] as i64) as usize);
            values[d.index(j)] = *v;
        }
        TorusField { dims: d, values }
    }

    fn spectrum(&self) -> Vec<Vec<Complex64>> {
        (0..8)
            .into_par_iter()
            .map(|c| {
                let mut buf: Vec<Complex64> = self
                    .values
                    .iter()
                    .map(|v| Complex64::new(v[c], 0.0))
                    .collect();
                fft3(&mut buf, self.dims, false);
                buf
            })
            .collect()
    }

    fn from_spectrum(dims: TorusDims, mut spec: Vec<Vec<Complex64>>) -> TorusField {
        spec.par_iter_mut().for_each(|b| fft3(b, dims, true));
        let scale = 1.0 / dims.len() as f64;
        let values = (0..dims.len())
            .map(|k| StateVector::from_fn(|c, _| spec[c][k].re * scale))
            .collect();
        TorusField { dims, values }
    }
}

fn fft3(buf: &mut [Complex64], dims: TorusDims, inverse: bool) {
    let mut planner = FftPlanner::new();
    let [n0, n1, n2] = dims.0;
    for (len, stride) in [(n2, 1), (n1, n2), (n0, n1 * n2)] {
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for start in 0..dims.len() {
            if (start / stride) % len != 0 {
                continue;
            }
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = buf[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                buf[start + j * stride] = *v;
            }
        }
    }
}

fn unit(k: [i64; 3]) -> Option<[f64; 3]> {
    let v = Vector3::new(k[0] as f64, k[1] as f64, k[2] as f64);
    let n = v.norm();
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Spectral `𝒜`-residual: `(Σ_{κ≠0} ‖𝔸(κ/|κ|) ẑ(κ)‖² / Σ_κ ‖ẑ(κ)‖²)^{1/2}`.
/// Nyquist modes average the term over their sign choices.
pub fn afree_residual(f: &TorusField) -> f64 {
    let spec = f.spectrum();
    let terms: Vec<(f64, f64)> = (0..f.dims.len())
        .into_par_iter()
        .map(|k| {
            let zhat: [Complex64; 8] = std::array::from_fn(|c| spec[c][k]);
            let total: f64 = zhat.iter().map(|z| z.norm_sqr()).sum();
            let dirs = f.dims.directions(k);
            let res = dirs
                .iter()
                .map(|&xi| {
                    let a = symbol(xi);
                    let re = a * SVector::<f64, 8>::from_fn(|c, _| zhat[c].re);
                    let im = a * SVector::<f64, 8>::from_fn(|c, _| zhat[c].im);
                    re.norm_squared() + im.norm_squared()
                })
                .sum::<f64>()
                / dirs.len().max(1) as f64;
            (res, total)
        })
        .collect();
    // summed in index order so the result does not depend on the thread count
    let (num, den) = terms.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// `P(ξ) = I − 𝔸(ξ)ᵀ(𝔸(ξ)𝔸(ξ)ᵀ)⁻¹𝔸(ξ)`, the orthogonal projector onto
/// `ker 𝔸(ξ)`.
pub fn projector(xi: [f64; 3]) -> Result<Projector> {
    let a: SymbolMatrix = symbol(xi);
    let gram = a * a.transpose();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Internal(format!("symbol loses rank at {xi:?}")))?;
    Ok(Projector::identity() - a.transpose() * inv * a)
}

/// Projector onto the common kernel of several symbols.
fn common_kernel_projector(dirs: &[[f64; 3]]) -> Projector {
    let gram: Projector = dirs
        .iter()
        .map(|&xi| {
            let a = symbol(xi);
            a.transpose() * a
        })
        .sum();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax();
    let mut p = Projector::zeros();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= 1e-12 * top {
            let v = eig.eigenvectors.column(i);
            p += v * v.transpose();
        }
    }
    p
}

/// Projects onto `𝒜`-free fields frequency by frequency; the mean is kept.
/// A Nyquist mode is projected onto the kernels of all its sign choices at
/// once, so the result stays real.
pub fn afree_projection(f: &TorusField) -> Result<TorusField> {
    let mut spec = f.spectrum();
    let n = f.dims.len();
    let updates: Vec<(usize, [Complex64; 8])> = (0..n)
        .into_par_iter()
        .map(|k| (k, f.dims.directions(k)))
        .filter(|(_, dirs)| !dirs.is_empty())
        .map(|(k, dirs)| {
            let p = if dirs.len() == 1 {
                projector(dirs[0])?
            } else {
                common_kernel_projector(&dirs)
            };
            let re = p * SVector::<f64, 8>::from_fn(|c, _| spec[c][k].re);
            let im = p * SVector::<f64, 8>::from_fn(|c, _| spec[c][k].im);
            Ok((k, std::array::from_fn(|c| Complex64::new(re[c], im[c]))))
        })
        .collect::<Result<_>>()?;
    for (k, z) in updates {
        for c in 0..8 {
            spec[c][k] = z[c];
        }
    }
    Ok(TorusField::from_spectrum(f.dims, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Sharp indicator; the field takes exactly two values.
    #[default]
    Indicator,
    /// Indicator averaged over one cell width along the oscillation.
    Smoothed,
}

/// Smallest integer vector parallel to `xi`, if one with entries up to
/// `max_entry` exists.
pub fn lattice_direction(xi: &Vector3<f64>, max_entry: i64) -> Option<[i64; 3]> {
    let top = xi.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    let v = xi / top;
    (1..=max_entry).find_map(|s| {
        let w = v * s as f64;
        let r = w.map(|c| c.round());
        ((w - r).amax() < 1e-9).then(|| [r[0] as i64, r[1] as i64, r[2] as i64])
    })
}

/// Laminate along the integer direction `k`: the node takes `z_a` where the
/// phase of `n k·x` lies in the first `λ` of the period and `z_b` elsewhere,
/// so `z_a` has mass `λ`.
pub fn laminate_along(
    za: &StateVector,
    zb: &StateVector,
    lambda: f64,
    n: u32,
    k: [i64; 3],
    dims: TorusDims,
    profile: Profile,
) -> Result<TorusField> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Domain(
            "laminate frequency must be at least 1".into(),
        ));
    }
    for a in 0..3 {
        if dims.0[a] == 1 && k[a] != 0 {
            return Err(Error::Domain(format!(
                "direction {k:?} leaves the grid slice along axis {a}"
            )));
        }
    }
    if k == [0, 0, 0] {
        return Err(Error::Domain("laminate direction must be nonzero".into()));
    }
    let m = *dims.0.iter().max().unwrap() as i64;
    // phase numerator of n k·x in units of 2π/m
    let step: [i64; 3] = [0, 1, 2].map(|a| n as i64 * k[a] * (m / dims.0[a] as i64));
    let width = step.iter().map(|s| s.abs()).max().unwrap() as f64 / m as f64;
    let indicator = |theta: f64| -> f64 {
        if theta.rem_euclid(1.0) < lambda {
            0.0
        } else {
            1.0
        }
    };
    let values = (0..dims.len())
        .map(|idx| {
            let i = dims.multi_index(idx);
            let p = (0..3)
                .map(|a| step[a] * i[a] as i64)
                .sum::<i64>()
                .rem_euclid(m);
            let theta = p as f64 / m as f64;
            let chi = match profile {
                Profile::Indicator => {
                    if (p as f64) < lambda * m as f64 {
                        0.0
                    } else {
                        1.0
                    }
                }
                Profile::Smoothed => {
                    let sub = 8;
                    (0..sub)
                        .map(|s| indicator(theta + width * ((s as f64 + 0.5) / sub as f64 - 0.5)))
                        .sum::<f64>()
                        / sub as f64
                }
            };
            za + (zb - za) * chi
        })
        .collect();
    TorusField::new(dims, values)
}

/// Laminate along the wave direction of `z_b − z_a`.
pub fn laminate(
    za: &StateVector,
    zb: &StateVector,
    lambda: f64,
    n: u32,
    dims: TorusDims,
    profile: Profile,
) -> Result<TorusField> {
    let cone = WaveCone::default();
    let xi = cone
        .direction(&(zb - za))
        .ok_or_else(|| Error::Domain("z_b − z_a is not in the wave cone".into()))?;
    let k = lattice_direction(&xi, 8).ok_or_else(|| {
        Error::Domain(format!("wave direction {xi:?} is not a lattice direction"))
    })?;
    laminate_along(za, zb, lambda, n, k, dims, profile)
}

/// Distribution of node values along the segment `[ref_a, ref_b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalYM {
    /// Segment parameters of the bins, equally spaced on `[0, 1]`.
    pub centers: Vec<f64>,
    pub masses: Vec<f64>,
    /// Histogram of `dist(z, segment line)/|ref_b − ref_a|` on
    /// `[0, max_distance]`.
    pub distance_masses: Vec<f64>,
    pub mean_distance: f64,
    pub max_distance: f64,
    /// Parameters outside `[0, 1]` are clamped into the end bins.
    pub clamped_mass: f64,
}

impl EmpiricalYM {
    pub fn mass_at(&self, parameter: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.masses)
            .filter(|(c, _)| (*c - parameter).abs() < 1e-12)
            .map(|(_, m)| m)
            .sum()
    }

    /// Bins carrying more than `floor` mass.
    pub fn atoms(&self, floor: f64) -> Vec<(f64, f64)> {
        self.centers
            .iter()
            .zip(&self.masses)
            .filter(|(_, &m)| m > floor)
            .map(|(&c, &m)| (c, m))
            .collect()
    }

    /// Bin centers as states `ref_a + c (ref_b − ref_a)`.
    pub fn bin_states(&self, ref_a: &StateVector, ref_b: &StateVector) -> Vec<StateVector> {
        self.centers
            .iter()
            .map(|c| ref_a + (ref_b - ref_a) * *c)
            .collect()
    }
}

pub fn empirical_ym(
    f: &TorusField,
    ref_a: &StateVector,
    ref_b: &StateVector,
    bins: usize,
) -> Result<EmpiricalYM> {
    let d = ref_b - ref_a;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return Err(Error::Domain("reference states coincide".into()));
    }
    if bins < 2 {
        return Err(Error::Config(
            "empirical measure needs at least 2 bins".into(),
        ));
    }
    let w = 1.0 / f.values.len() as f64;
    let mut masses = vec![0.0; bins];
    let mut clamped = 0.0;
    let dists: Vec<f64> = f
        .values
        .iter()
        .map(|z| {
            let s = (z - ref_a).dot(&d) / dd;
            if !(0.0..=1.0).contains(&s) {
                clamped += w;
            }
            let b = (s.clamp(0.0, 1.0) * (bins - 1) as f64).round() as usize;
            masses[b] += w;
            (z - ref_a - d * s).norm() / dd.sqrt()
        })
        .collect();
    let max_distance = dists.iter().copied().fold(0.0, f64::max);
    let mut distance_masses = vec![0.0; bins];
    for &x in &dists {
        let b = if max_distance > 0.0 {
            ((x / max_distance) * (bins - 1) as f64).round() as usize
        } else {
            0
        };
        distance_masses[b] += w;
    }
    Ok(EmpiricalYM {
        centers: (0..bins).map(|i| i as f64 / (bins - 1) as f64).collect(),
        masses,
        distance_masses,
        mean_distance: dists.iter().sum::<f64>() * w,
        max_distance,
        clamped_mass: clamped,
    })
}

/// Mean of `‖g − f‖` over the nodes.
pub fn mean_distance(f: &TorusField, g: &TorusField) -> f64 {
    f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).norm())
        .sum::<f64>()
        / f.values.len() as f64
}
