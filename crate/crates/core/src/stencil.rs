//! Finite-difference weights on uniform grids in the `v` direction.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::lorentz::LVec3;

/// Types that finite-difference stencils can be applied to.
pub trait Sample: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

impl Sample for LVec3 {
    fn zero() -> Self {
        LVec3::ZERO
    }
}

/// Fornberg's recursion: weights for derivatives `0..=max_order` at `x0`
/// from samples at `xs`. Returned as `weights[order][node]`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative of order `order` at index `at` of a uniformly spaced sequence,
/// using `width` consecutive samples. The window is centred when possible
/// and slides to one side near the ends.
pub fn uniform_derivative<T: Sample>(
    values: &[T],
    spacing: f64,
    at: usize,
    order: usize,
    width: usize,
) -> T {
    let len = values.len();
    let width = width.min(len);
    let start = at.saturating_sub(width / 2).min(len.saturating_sub(width));
    let xs: Vec<f64> = (start..start + width).map(|i| i as f64).collect();
    let w = fornberg_weights(at as f64, &xs, order);
    let scale = spacing.powi(order as i32);
    let mut acc = T::zero();
    for (k, &wk) in w[order].iter().enumerate() {
        acc = acc + values[start + k] * (wk / scale);
    }
    acc
}

/// Stencil width for derivative `order` at accuracy `accuracy` that keeps
/// the accuracy on one-sided windows (5 points for a fourth-order first
/// derivative, 6 for a fourth-order second derivative).
pub fn width_for(order: usize, accuracy: usize) -> usize {
    accuracy + order
}

/// Precomputed weights of one derivative for every index of a sequence of
/// fixed length, so per-node loops avoid recomputing Fornberg weights.
#[derive(Clone, Debug)]
pub struct RowStencil {
    windows: Vec<(usize, Vec<f64>)>,
}

impl RowStencil {
    pub fn new(len: usize, spacing: f64, order: usize, accuracy: usize) -> Self {
        let width = width_for(order, accuracy).min(len);
        let scale = spacing.powi(order as i32);
        let windows = (0..len)
            .map(|at| {
                let start = at.saturating_sub(width / 2).min(len - width);
                let xs: Vec<f64> = (start..start + width).map(|i| i as f64).collect();
                let w = fornberg_weights(at as f64, &xs, order);
                (start, w[order].iter().map(|x| x / scale).collect())
            })
            .collect();
        Self { windows }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Apply at index `at`, reading samples through `get(row)`.
    pub fn apply<T: Sample>(&self, at: usize, get: impl Fn(usize) -> T) -> T {
        let (start, w) = &self.windows[at];
        let mut acc = T::zero();
        for (k, &wk) in w.iter().enumerate() {
            acc = acc + get(start + k) * wk;
        }
        acc
    }
}
