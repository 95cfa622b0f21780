//! 2π-periodic fields sampled on a uniform grid `u_j = 2πj/n`.
//!
//! Mode coefficients are normalised as `c_k = (1/n) Σ_j f_j e^{-i k u_j}`,
//! so `f(u) = Σ_k c_k e^{i k u}` and Parseval reads
//! `(1/n) Σ_j |f_j|^2 = Σ_k |c_k|^2`. The Nyquist mode `k = n/2` is treated
//! as `c_{n/2} cos(n u / 2)`, which keeps real fields real under every
//! operation here.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub const DEFAULT_GRID: usize = 64;

pub fn is_valid_grid(n: usize) -> bool {
    n >= 8 && n.is_power_of_two()
}

fn check_grid(n: usize) -> Result<()> {
    if is_valid_grid(n) {
        Ok(())
    } else {
        Err(Error::InvalidGrid(n))
    }
}

/// Grid node `u_j`.
pub fn node(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| node(j, n)).collect()
}

/// Signed wavenumber of FFT slot `j`; the Nyquist slot maps to `+n/2`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn fft_forward(data: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()));
    fft.process(data);
}

fn fft_inverse(data: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(data.len()));
    fft.process(data);
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    samples: Vec<Complex64>,
    real: bool,
}

/// Result of [`PeriodicField::resample`]; `aliased` is set when the source
/// carries modes the target grid cannot represent.
#[derive(Clone, Debug)]
pub struct Resampled {
    pub field: PeriodicField,
    pub aliased: bool,
}

impl PeriodicField {
    pub fn from_real(samples: Vec<f64>) -> Result<Self> {
        check_grid(samples.len())?;
        Ok(Self {
            samples: samples
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect(),
            real: true,
        })
    }

    pub fn from_complex(samples: Vec<Complex64>) -> Result<Self> {
        check_grid(samples.len())?;
        Ok(Self {
            samples,
            real: false,
        })
    }

    pub fn from_fn_real(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        Self::from_real(nodes(n).into_iter().map(f).collect())
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(n)?;
        Self::from_complex(nodes(n).into_iter().map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_fn_real(n, |_| c)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Real parts of the samples.
    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.samples[j]
    }

    /// Mode coefficients in FFT slot order.
    pub fn modes(&self) -> Vec<Complex64> {
        let mut data = self.samples.clone();
        fft_forward(&mut data);
        let scale = 1.0 / self.n() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    pub fn from_modes(mut modes: Vec<Complex64>, real: bool) -> Result<Self> {
        check_grid(modes.len())?;
        fft_inverse(&mut modes);
        if real {
            modes.iter_mut().for_each(|c| c.im = 0.0);
        }
        Ok(Self {
            samples: modes,
            real,
        })
    }

    fn map_modes(&self, mut g: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        let n = self.n();
        let mut modes = self.modes();
        for (j, c) in modes.iter_mut().enumerate() {
            *c = g(wavenumber(j, n), *c);
        }
        // grid size was validated on construction
        Self::from_modes(modes, self.real).expect("valid grid")
    }

    /// Spectral derivative of order 1 or 2.
    pub fn differentiate(&self, order: u32) -> Result<Self> {
        let n = self.n() as i64;
        let nyquist = n / 2;
        match order {
            1 => Ok(self.map_modes(|k, c| {
                if k == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, k as f64)
                }
            })),
            2 => Ok(self.map_modes(|k, c| c * (-((k * k) as f64)))),
            _ => Err(Error::Domain(format!(
                "derivative order {order} unsupported (1 or 2)"
            ))),
        }
    }

    /// Samples of `u -> f(u + theta)`.
    pub fn shift(&self, theta: f64) -> Self {
        let nyquist = self.n() as i64 / 2;
        self.map_modes(|k, c| {
            if k == nyquist {
                c * (k as f64 * theta).cos()
            } else {
                c * Complex64::from_polar(1.0, k as f64 * theta)
            }
        })
    }

    /// Sixteenth-order exponential filter `exp(-strength (|k| / (n/2))^16)`.
    pub fn filter(&self, strength: f64) -> Self {
        if strength == 0.0 {
            return self.clone();
        }
        let half = self.n() as f64 / 2.0;
        self.map_modes(|k, c| c * filter_factor(k, half, strength))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Energy carried by wavenumber `±k`: `|c_k|^2 + |c_{-k}|^2`
    /// (a single slot for `k = 0` and `k = n/2`).
    pub fn mode_energy(&self, k: usize) -> f64 {
        let n = self.n();
        if k > n / 2 {
            return 0.0;
        }
        let modes = self.modes();
        if k == 0 || k == n / 2 {
            modes[k].norm_sqr()
        } else {
            modes[k].norm_sqr() + modes[n - k].norm_sqr()
        }
    }

    /// Energy in wavenumbers `|k| > 3n/8`, i.e. the top quarter of the
    /// resolved band. Small values mean the field is spectrally resolved.
    pub fn top_quarter_energy(&self) -> f64 {
        let n = self.n();
        let cut = 3 * n / 8;
        ((cut + 1)..=(n / 2)).map(|k| self.mode_energy(k)).sum()
    }

    /// Largest wavenumber whose coefficient exceeds `tol` in modulus.
    pub fn degree(&self, tol: f64) -> usize {
        let n = self.n();
        self.modes()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(j, _)| wavenumber(j, n).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Trigonometric interpolation onto `m` nodes.
    pub fn resample(&self, m: usize) -> Result<Resampled> {
        check_grid(m)?;
        let n = self.n();
        let modes = self.modes();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        let floor = 1e-13 * self.max_abs().max(1.0);
        let mut aliased = false;
        for (j, c) in modes.iter().enumerate() {
            let k = wavenumber(j, n);
            let kabs = k.unsigned_abs() as usize;
            if m < n && kabs >= m / 2 && c.norm() > floor {
                aliased = true;
            }
            if kabs == n / 2 && m > n {
                // cos(n u / 2) occupies two slots on the finer grid
                out[n / 2] += *c * 0.5;
                out[m - n / 2] += *c * 0.5;
            } else {
                out[k.rem_euclid(m as i64) as usize] += *c;
            }
        }
        let field = Self::from_modes(out, self.real)?;
        Ok(Resampled { field, aliased })
    }

    /// Value of the trigonometric interpolant at an arbitrary `u`.
    pub fn eval(&self, u: f64) -> Complex64 {
        let n = self.n();
        let nyquist = n as i64 / 2;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in self.modes().iter().enumerate() {
            let k = wavenumber(j, n);
            if k == nyquist {
                acc += c * (k as f64 * u).cos();
            } else {
                acc += c * Complex64::from_polar(1.0, k as f64 * u);
            }
        }
        if self.real {
            Complex64::new(acc.re, 0.0)
        } else {
            acc
        }
    }

    pub fn sup_distance(&self, other: &PeriodicField) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn filter_factor(k: i64, half: f64, strength: f64) -> f64 {
    let r = k.unsigned_abs() as f64 / half;
    (-strength * r.powi(16)).exp()
}

/// Spectral u-derivatives of a real sampled row without the bookkeeping of
/// [`PeriodicField`]; used by inner loops over many rows.
pub fn real_derivatives(samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut data);
    let scale = 1.0 / n as f64;
    let mut d1 = data.clone();
    let mut d2 = data;
    for j in 0..n {
        let k = wavenumber(j, n);
        let c = d1[j] * scale;
        d1[j] = if k == n as i64 / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            c * Complex64::new(0.0, k as f64)
        };
        d2[j] = c * (-((k * k) as f64));
    }
    fft_inverse(&mut d1);
    fft_inverse(&mut d2);
    (
        d1.iter().map(|c| c.re).collect(),
        d2.iter().map(|c| c.re).collect(),
    )
}

/// First spectral u-derivative of a complex sampled row.
pub fn complex_derivative(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut data = samples.to_vec();
    fft_forward(&mut data);
    let scale = 1.0 / n as f64;
    for (j, c) in data.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        *c = if k == n as i64 / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            *c * Complex64::new(0.0, k as f64 * scale)
        };
    }
    fft_inverse(&mut data);
    data
}

/// Second spectral u-derivative of a complex sampled row.
pub fn complex_second_derivative(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut data = samples.to_vec();
    fft_forward(&mut data);
    let scale = 1.0 / n as f64;
    for (j, c) in data.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        *c *= -((k * k) as f64) * scale;
    }
    fft_inverse(&mut data);
    data
}

/// Exponential filter applied to a real row in place.
pub fn filter_real_in_place(samples: &mut [f64], strength: f64) {
    if strength == 0.0 {
        return;
    }
    let n = samples.len();
    let half = n as f64 / 2.0;
    let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut data);
    let scale = 1.0 / n as f64;
    for (j, c) in data.iter_mut().enumerate() {
        *c *= scale * filter_factor(wavenumber(j, n), half, strength);
    }
    fft_inverse(&mut data);
    for (s, c) in samples.iter_mut().zip(&data) {
        *s = c.re;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sup(a: &PeriodicField, b: impl Fn(f64) -> f64) -> f64 {
        let n = a.n();
        (0..n)
            .map(|j| (a.get(j) - Complex64::new(b(node(j, n)), 0.0)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(
            PeriodicField::from_real(vec![0.0; 63]),
            Err(Error::InvalidGrid(63))
        );
        assert_eq!(
            PeriodicField::from_real(vec![0.0; 4]),
            Err(Error::InvalidGrid(4))
        );
    }

    #[test]
    fn differentiate_examples() {
        let f = PeriodicField::from_fn_real(64, f64::cos).unwrap();
        assert!(sup(&f.differentiate(1).unwrap(), |u| -u.sin()) < 1e-13);
        let one = PeriodicField::constant(64, 1.0).unwrap();
        assert!(one.differentiate(2).unwrap().max_abs() < 1e-13);
        let s3 = PeriodicField::from_fn_real(64, |u| (3.0 * u).sin()).unwrap();
        assert!(sup(&s3.differentiate(1).unwrap(), |u| 3.0 * (3.0 * u).cos()) < 1e-13);
        assert!(f.differentiate(3).is_err());
    }

    #[test]
    fn differentiation_exact_below_half_band() {
        let f = PeriodicField::from_fn_real(64, |u| (31.0 * u).sin() + (17.0 * u).cos()).unwrap();
        let d2 = f.differentiate(2).unwrap();
        assert!(
            sup(&d2, |u| -961.0 * (31.0 * u).sin()
                - 289.0 * (17.0 * u).cos())
                < 1e-9
        );
    }

    #[test]
    fn shift_examples() {
        let f = PeriodicField::from_fn_real(32, f64::cos).unwrap();
        assert!(sup(&f.shift(PI / 2.0), |u| -u.sin()) < 1e-14);
        assert!(f.shift(0.0).sup_distance(&f) < 1e-15);
    }

    #[test]
    fn filter_examples() {
        let n = 64;
        let f = PeriodicField::from_fn_real(n, |u| u.sin() + 0.3 * (5.0 * u).cos()).unwrap();
        assert_eq!(f.filter(0.0), f);
        let c = PeriodicField::constant(n, 2.5).unwrap();
        assert!(sup(&c.filter(36.0), |_| 2.5) < 1e-14);
        let k = (n / 2 - 1) as f64;
        let top = PeriodicField::from_fn_real(n, |u| (k * u).sin()).unwrap();
        let damp = (-36.0 * (k / (n as f64 / 2.0)).powi(16)).exp();
        let e = sup(&top.filter(36.0), |u| damp * (k * u).sin());
        assert!(e < 1e-13, "{e:e} {damp:e}");
    }

    #[test]
    fn norms_and_energy() {
        let s = PeriodicField::from_fn_real(64, f64::sin).unwrap();
        assert!((s.max_abs() - 1.0).abs() < 1e-15);
        let c2 = PeriodicField::from_fn_real(64, |u| (2.0 * u).cos()).unwrap();
        // direct sum: (1/n) Σ cos^2(2u_j) = 1/2, all of it in wavenumber 2
        let direct: f64 = c2.re().iter().map(|x| x * x).sum::<f64>() / 64.0;
        assert!((direct - 0.5).abs() < 1e-15);
        assert!((c2.mode_energy(2) - direct).abs() < 1e-15);
        assert!(c2.mode_energy(1) < 1e-30);
    }

    #[test]
    fn resample_is_exact_for_resolved_fields() {
        let f = PeriodicField::from_fn_real(16, f64::cos).unwrap();
        let r = f.resample(32).unwrap();
        assert!(!r.aliased);
        assert!(sup(&r.field, f64::cos) < 1e-15);
        let down = r.field.resample(16).unwrap();
        assert!(!down.aliased);
        assert!(down.field.sup_distance(&f) < 1e-15);
    }

    #[test]
    fn resample_flags_aliasing() {
        let f = PeriodicField::from_fn_real(32, |u| (10.0 * u).cos()).unwrap();
        assert!(f.resample(8).unwrap().aliased);
        assert!(!f.resample(64).unwrap().aliased);
    }

    #[test]
    fn eval_interpolates_between_nodes() {
        let f = PeriodicField::from_fn_real(32, |u| (3.0 * u).sin() + 0.5).unwrap();
        for u in [0.1, 1.234, 5.0] {
            assert!((f.eval(u).re - ((3.0 * u).sin() + 0.5)).abs() < 1e-14);
        }
    }

    fn random_field() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 32)
    }

    /// Random real field with no Nyquist content, where shifts form a group.
    fn band_limited() -> impl Strategy<Value = PeriodicField> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16).prop_map(|coef| {
            PeriodicField::from_fn_real(32, |u| {
                coef.iter()
                    .enumerate()
                    .map(|(k, (a, b))| a * (k as f64 * u).cos() + b * (k as f64 * u).sin())
                    .sum()
            })
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn parseval(samples in random_field()) {
            let f = PeriodicField::from_real(samples.clone()).unwrap();
            let lhs: f64 = samples.iter().map(|x| x * x).sum::<f64>() / 32.0;
            let rhs: f64 = (0..=16).map(|k| f.mode_energy(k)).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn modes_round_trip(samples in random_field()) {
            let f = PeriodicField::from_real(samples).unwrap();
            let back = PeriodicField::from_modes(f.modes(), true).unwrap();
            prop_assert!(back.sup_distance(&f) <= 1e-12);
        }

        #[test]
        fn shifts_compose(f in band_limited(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let lhs = f.shift(a).shift(b);
            let rhs = f.shift(a + b);
            prop_assert!(lhs.sup_distance(&rhs) <= 1e-12);
        }

        #[test]
        fn derivative_commutes_with_shift(f in band_limited(), a in -3.0f64..3.0) {
            let lhs = f.shift(a).differentiate(1).unwrap();
            let rhs = f.differentiate(1).unwrap().shift(a);
            prop_assert!(lhs.sup_distance(&rhs) <= 1e-11);
            prop_assert!(f.shift(a).differentiate(2).unwrap()
                .sup_distance(&f.differentiate(2).unwrap().shift(a)) <= 1e-10);
        }

        #[test]
        fn derivative_annihilates_constants(c in -5.0f64..5.0) {
            let f = PeriodicField::constant(16, c).unwrap();
            prop_assert!(f.differentiate(1).unwrap().max_abs() <= 1e-13);
            prop_assert!(f.differentiate(2).unwrap().max_abs() <= 1e-13);
        }
    }
}
