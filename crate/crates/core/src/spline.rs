//! Dyadic B-spline spaces on a compact interval.
//!
//! The interval `A = [lo, hi)` is mapped affinely onto `[0, 1)`. At level `m`
//! and order `r` the space is spanned by
//!
//! ```text
//! phi_k(x) = 2^{m/2} g_r(2^m u(x) - k) 1_{x in A},   k = -r, ..., 2^m - 1
//! ```
//!
//! where `u` is the reference coordinate and `g_r` is the cardinal B-spline of
//! degree `r` supported on `[0, r + 1]`, so the dimension is `2^m + r`.
//! Boundary splines are truncated, not renormalised; this keeps the spaces
//! nested across levels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;

pub const MAX_ORDER: u32 = 4;
pub const MAX_LEVEL: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// `[-radius, radius]`.
    pub fn symmetric(radius: f64) -> Result<Self> {
        Interval::new(-radius, radius)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Half-open membership `lo <= x < hi`.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    #[inline]
    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    /// `points` equally spaced points from `lo` to `hi` inclusive.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => (0..points)
                .map(|i| self.lo + self.length() * i as f64 / (points - 1) as f64)
                .collect(),
        }
    }
}

/// Values of the `r + 1` splines that may be non-zero at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalValues {
    /// Index of the first value in the basis.
    pub first: usize,
    pub len: usize,
    pub values: [f64; MAX_ORDER as usize + 1],
}

impl LocalValues {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values[..self.len]
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.first + i, v))
    }
}

/// The space `S_{m,r}` on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineBasis {
    interval: Interval,
    level: u32,
    order: u32,
}

/// Builds `S_{m,r}` on `interval`.
pub fn build_basis(interval: Interval, level: u32, order: u32) -> Result<SplineBasis> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if level > MAX_LEVEL {
        return Err(Error::UnsupportedLevel(level));
    }
    Ok(SplineBasis {
        interval,
        level,
        order,
    })
}

impl SplineBasis {
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `2^m + r`.
    pub fn dim(&self) -> usize {
        (1usize << self.level) + self.order as usize
    }

    /// `2^{m/2}`.
    pub fn scale(&self) -> f64 {
        math::sqrt(math::exp2i(self.level as i32))
    }

    /// The non-zero splines at `x`, or `None` outside the interval.
    ///
    /// Uses the uniform-knot Cox-de Boor recursion on the cell containing `x`.
    #[inline]
    pub fn eval_local(&self, x: f64) -> Option<LocalValues> {
        if !self.interval.contains(x) {
            return None;
        }
        let cells = 1usize << self.level;
        let u = self.interval.to_unit(x) * cells as f64;
        let mut cell = math::floor(u) as usize;
        if cell >= cells {
            // rounding at the right edge
            cell = cells - 1;
        }
        let s = u - cell as f64;
        let r = self.order as usize;
        let mut values = [0.0; MAX_ORDER as usize + 1];
        values[0] = 1.0;
        // values[i] holds g_d(s + d - i), the spline with shift k = cell - d + i
        for d in 1..=r {
            let inv = 1.0 / d as f64;
            let mut next = [0.0; MAX_ORDER as usize + 1];
            for (i, slot) in next.iter_mut().enumerate().take(d + 1) {
                let t = s + (d - i) as f64;
                let left = if i >= 1 { values[i - 1] } else { 0.0 };
                let right = if i < d { values[i] } else { 0.0 };
                *slot = (t * left + (d as f64 + 1.0 - t) * right) * inv;
            }
            values = next;
        }
        let scale = self.scale();
        for v in values.iter_mut().take(r + 1) {
            *v *= scale;
        }
        // shift k = cell - r + i  ->  basis index k + r = cell + i
        Some(LocalValues {
            first: cell,
            len: r + 1,
            values,
        })
    }

    /// All `dim` basis values at `x` (zero outside the interval).
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        if let Some(local) = self.eval_local(x) {
            for (j, v) in local.iter() {
                out[j] = v;
            }
        }
        out
    }

    /// `sum_k coefficients[k] phi_k(x)`.
    #[inline]
    pub fn eval_combination(&self, coefficients: &[f64], x: f64) -> f64 {
        debug_assert_eq!(coefficients.len(), self.dim());
        match self.eval_local(x) {
            Some(local) => local.iter().map(|(j, v)| coefficients[j] * v).sum(),
            None => 0.0,
        }
    }

    /// Coefficients in `S_{m+1,r}` of the function with `coefficients` in
    /// this space, from the two-scale relation
    /// `g_r(t) = 2^{-r} sum_j C(r+1, j) g_r(2t - j)`.
    pub fn refine(&self, coefficients: &[f64]) -> (SplineBasis, Vec<f64>) {
        assert_eq!(coefficients.len(), self.dim());
        let fine = SplineBasis {
            level: self.level + 1,
            ..*self
        };
        let r = self.order as i64;
        let weight = math::exp2i(-(self.order as i32)) / core::f64::consts::SQRT_2;
        let fine_cells = 1i64 << fine.level;
        let mut out = vec![0.0; fine.dim()];
        for (idx, &c) in coefficients.iter().enumerate() {
            let k = idx as i64 - r;
            for j in 0..=r + 1 {
                let fine_k = 2 * k + j;
                if fine_k < -r || fine_k >= fine_cells {
                    // support outside the interval
                    continue;
                }
                out[(fine_k + r) as usize] += c * weight * binomial(r as u64 + 1, j as u64);
            }
        }
        (fine, out)
    }

    /// Exact `int_A t(x)^2 dx / |A|` for `t = sum coefficients[k] phi_k`,
    /// via Gauss-Legendre quadrature on each dyadic cell.
    pub fn mean_square(&self, coefficients: &[f64]) -> f64 {
        let cells = 1usize << self.level;
        let width = self.interval.length() / cells as f64;
        let mut total = 0.0;
        for cell in 0..cells {
            let left = self.interval.lo() + cell as f64 * width;
            for (node, weight) in GAUSS5 {
                let x = left + 0.5 * width * (1.0 + node);
                let v = self.eval_combination(coefficients, x);
                total += 0.5 * weight * v * v;
            }
        }
        total / cells as f64
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Five-point Gauss-Legendre rule on `[-1, 1]`, exact to degree 9.
const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Empirical normal equations of a least-squares fit in a spline space.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSystem {
    pub dim: usize,
    /// Row-major `dim x dim`, `(1/n) sum phi_i(X_k) phi_j(X_k)` over points in A.
    pub gram: Vec<f64>,
    /// `(1/n) sum phi_i(X_k) y_k` over points in A.
    pub moment: Vec<f64>,
    pub n_in_a: usize,
    /// Total number of samples `n`, the normalisation used above.
    pub n_total: usize,
    /// Ratio of extreme eigenvalues of `gram`; infinite when singular.
    pub condition_estimate: f64,
}

impl DesignSystem {
    pub fn gram_at(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.gram_at(i, i)).sum()
    }
}

/// Accumulates the Gram matrix and moment vector over the samples in the
/// interval.
pub fn assemble(basis: &SplineBasis, xs: &[f64], responses: &[f64]) -> Result<DesignSystem> {
    if xs.len() != responses.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: responses.len(),
        });
    }
    let dim = basis.dim();
    let mut gram = vec![0.0; dim * dim];
    let mut moment = vec![0.0; dim];
    let mut n_in_a = 0;
    for (&x, &y) in xs.iter().zip(responses) {
        let Some(local) = basis.eval_local(x) else {
            continue;
        };
        n_in_a += 1;
        for (i, vi) in local.iter() {
            moment[i] += vi * y;
            // upper triangle, mirrored below
            for (j, vj) in local.iter().filter(|&(j, _)| j >= i) {
                gram[i * dim + j] += vi * vj;
            }
        }
    }
    let n = xs.len().max(1) as f64;
    for i in 0..dim {
        moment[i] /= n;
        for j in i..dim {
            let v = gram[i * dim + j] / n;
            gram[i * dim + j] = v;
            gram[j * dim + i] = v;
        }
    }
    let condition_estimate = linalg::condition_number(&gram, dim);
    Ok(DesignSystem {
        dim,
        gram,
        moment,
        n_in_a,
        n_total: xs.len(),
        condition_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cardinal B-spline by repeated numerical convolution of the unit box,
    /// evaluated through the truncated-power formula
    /// `g_r(t) = (1/r!) sum_j (-1)^j C(r+1,j) (t-j)_+^r`.
    fn cardinal(r: u32, t: f64) -> f64 {
        if r == 0 {
            return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
        }
        if t <= 0.0 || t >= (r + 1) as f64 {
            return 0.0;
        }
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        (0..=r + 1)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let base = t - j as f64;
                let pow = if base > 0.0 { base.powi(r as i32) } else { 0.0 };
                sign * binomial(r as u64 + 1, j as u64) * pow
            })
            .sum::<f64>()
            / fact
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn dimensions() {
        for m in 0..=7 {
            for r in 0..=4 {
                let basis = build_basis(unit(), m, r).unwrap();
                assert_eq!(basis.dim(), (1 << m) + r as usize);
            }
        }
        assert_eq!(build_basis(unit(), 2, 5), Err(Error::UnsupportedOrder(5)));
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn single_box() {
        let basis = build_basis(unit(), 0, 0).unwrap();
        assert_eq!(basis.dim(), 1);
        assert_eq!(basis.eval(0.5), vec![1.0]);
        assert_eq!(basis.eval(0.0), vec![1.0]);
        assert_eq!(basis.eval(1.0), vec![0.0]);
        assert_eq!(basis.eval(-0.1), vec![0.0]);
    }

    #[test]
    fn histogram_basis() {
        let basis = build_basis(unit(), 3, 0).unwrap();
        assert_eq!(basis.dim(), 8);
        let scale = 8f64.sqrt();
        for bin in 0..8 {
            let x = (bin as f64 + 0.5) / 8.0;
            let values = basis.eval(x);
            for (j, v) in values.iter().enumerate() {
                let expected = if j == bin { scale } else { 0.0 };
                assert!((v - expected).abs() < 1e-15);
            }
        }
        let basis = build_basis(unit(), 1, 0).unwrap();
        let v = basis.eval(0.25);
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn matches_truncated_power_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let interval = Interval::new(-1.5, 2.0).unwrap();
        for m in 0..=6 {
            for r in 0..=4 {
                let basis = build_basis(interval, m, r).unwrap();
                for _ in 0..200 {
                    let x = rng.random_range(-1.5..2.0);
                    let values = basis.eval(x);
                    let u = interval.to_unit(x) * (1u64 << m) as f64;
                    for (idx, v) in values.iter().enumerate() {
                        let k = idx as f64 - r as f64;
                        let expected = basis.scale() * cardinal(r, u - k);
                        assert!((v - expected).abs() < 1e-11, "m={m} r={r} x={x}");
                    }
                }
                assert!(basis.eval(2.0).iter().all(|&v| v == 0.0));
                assert!(basis.eval(-1.6).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn at_most_order_plus_one_nonzero() {
        let basis = build_basis(unit(), 4, 3).unwrap();
        for i in 0..1000 {
            let x = i as f64 / 1000.0;
            assert!(basis.eval(x).iter().filter(|v| **v != 0.0).count() <= 4);
        }
    }

    #[test]
    fn hat_functions_sum_to_one() {
        let basis = build_basis(unit(), 2, 1).unwrap();
        assert_eq!(basis.dim(), 5);
        for i in 0..=400 {
            let x = 0.25 + 0.5 * i as f64 / 400.0;
            let total: f64 = basis.eval(x).iter().sum::<f64>() / basis.scale();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_reproduces_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let interval = Interval::new(-2.0, 3.0).unwrap();
        for m in 0..=5 {
            for r in 0..=4 {
                let basis = build_basis(interval, m, r).unwrap();
                let coef: Vec<f64> = (0..basis.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (fine, fine_coef) = basis.refine(&coef);
                assert_eq!(fine.dim(), fine_coef.len());
                for x in interval.grid(301).into_iter().take(300) {
                    let coarse_v = basis.eval_combination(&coef, x);
                    let fine_v = fine.eval_combination(&fine_coef, x);
                    assert!((coarse_v - fine_v).abs() < 1e-10, "m={m} r={r} x={x}");
                }
            }
        }
    }

    #[test]
    fn mean_square_of_box() {
        let basis = build_basis(Interval::new(2.0, 6.0).unwrap(), 2, 0).unwrap();
        // one box of height 2 on a quarter of the interval
        let coef = [1.0, 0.0, 0.0, 0.0];
        assert!((basis.mean_square(&coef) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn assemble_empty_and_small() {
        let basis = build_basis(unit(), 0, 0).unwrap();
        let sys = assemble(&basis, &[2.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sys.n_in_a, 0);
        assert_eq!(sys.gram, vec![0.0]);
        assert_eq!(sys.moment, vec![0.0]);
        assert!(sys.condition_estimate.is_infinite());

        let sys = assemble(&basis, &[0.2, 0.8], &[1.0, 3.0]).unwrap();
        assert_eq!(sys.gram, vec![1.0]);
        assert_eq!(sys.moment, vec![2.0]);
        assert_eq!(sys.n_in_a, 2);

        assert!(assemble(&basis, &[0.2], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn histogram_gram_is_diagonal_occupancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis = build_basis(unit(), 3, 0).unwrap();
        let xs: Vec<f64> = (0..997).map(|_| rng.random_range(-0.2..1.2)).collect();
        let ys = vec![0.0; xs.len()];
        let sys = assemble(&basis, &xs, &ys).unwrap();
        for i in 0..8 {
            let in_bin = xs
                .iter()
                .filter(|&&x| (0.0..1.0).contains(&x) && ((x * 8.0).floor() as usize) == i)
                .count();
            let expected = 8.0 * in_bin as f64 / xs.len() as f64;
            for j in 0..8 {
                let v = sys.gram_at(i, j);
                if i == j {
                    assert!((v - expected).abs() < 1e-14);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }
}
