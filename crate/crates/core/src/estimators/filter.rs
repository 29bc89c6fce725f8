//! Separable Gaussian smoothing and derivative filters with reflect padding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major 2-D grid of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }
}

/// Half-sample symmetric reflection: `... c b a | a b c ... | c b a ...`.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// How the one-sided taps `w[0..=r]` extend to `-r..=r`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    /// `w(-i) = w(i)`.
    Even,
    /// `w(-i) = w(i)` and the taps sum to zero.
    EvenZeroSum,
    /// `w(-i) = -w(i)`.
    Odd,
}

struct Kernel<T> {
    taps: Vec<T>,
    symmetry: Symmetry,
}

impl<T: Scalar> Kernel<T> {
    /// Sampled Gaussian derivative of `order`, truncated at `ceil(3 sigma)`.
    ///
    /// Moment-normalised so that the discrete filter is exact on polynomials
    /// of the matching degree: order 0 sums to 1, order 1 maps `x` to 1,
    /// order 2 maps `x^2` to 2.
    fn gaussian(order: u8, sigma: T) -> Self {
        let r = (T::of(3.0) * sigma).ceil().to_usize().unwrap_or(0).max(1);
        let two_s2 = T::of(2.0) * sigma * sigma;
        let g: Vec<T> = (0..=r)
            .map(|i| {
                let x = T::of_usize(i);
                (-(x * x) / two_s2).exp()
            })
            .collect();
        let two = T::of(2.0);
        let g_sum = g[0] + two * g[1..].iter().copied().sum::<T>();
        let i2g: T = (1..=r).map(|i| T::of_usize(i * i) * g[i]).sum::<T>() * two;
        match order {
            0 => Kernel {
                taps: g.iter().map(|v| *v / g_sum).collect(),
                symmetry: Symmetry::Even,
            },
            // w(i) = i g(i) / sum_j j^2 g(j)
            1 => Kernel {
                taps: (0..=r).map(|i| T::of_usize(i) * g[i] / i2g).collect(),
                symmetry: Symmetry::Odd,
            },
            // w(i) = a (i^2 - mu) g(i): mu zeroes the tap sum, a sets sum_i i^2 w(i) = 2.
            _ => {
                let i4g: T = (1..=r).map(|i| T::of_usize(i * i * i * i) * g[i]).sum::<T>() * two;
                let mu = i2g / g_sum;
                let scale = two / (i4g - mu * i2g);
                Kernel {
                    taps: (0..=r).map(|i| (T::of_usize(i * i) - mu) * g[i] * scale).collect(),
                    symmetry: Symmetry::EvenZeroSum,
                }
            }
        }
    }

    /// Correlates a reflect-padded 1-D signal of length `n` read through `at`.
    ///
    /// Taps are applied in +/- pairs, so derivative kernels send constants to exactly 0.
    fn apply(&self, n: usize, at: impl Fn(usize) -> T, out: &mut [T]) {
        let r = self.taps.len() - 1;
        for (x, o) in out.iter_mut().enumerate().take(n) {
            let centre = at(x);
            let mut acc = match self.symmetry {
                Symmetry::Even => self.taps[0] * centre,
                Symmetry::EvenZeroSum | Symmetry::Odd => T::zero(),
            };
            for i in 1..=r {
                let fwd = at(reflect(x as isize + i as isize, n));
                let back = at(reflect(x as isize - i as isize, n));
                acc += self.taps[i]
                    * match self.symmetry {
                        Symmetry::Even => fwd + back,
                        Symmetry::EvenZeroSum => fwd + back - centre - centre,
                        Symmetry::Odd => fwd - back,
                    };
            }
            *o = acc;
        }
    }
}

fn separable<T: Scalar>(grid: &Grid<T>, kx: &Kernel<T>, ky: &Kernel<T>) -> Grid<T> {
    let (w, h) = (grid.width, grid.height);
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = &grid.data[y * w..(y + 1) * w];
        kx.apply(w, |x| row[x], &mut tmp[y * w..(y + 1) * w]);
    }
    let mut out = vec![T::zero(); w * h];
    let mut col = vec![T::zero(); h];
    for x in 0..w {
        ky.apply(h, |y| tmp[y * w + x], &mut col);
        for (y, v) in col.iter().enumerate() {
            out[y * w + x] = *v;
        }
    }
    Grid {
        width: w,
        height: h,
        data: out,
    }
}

/// Gaussian blur (order 0) or gradient magnitude of the `order`-th Gaussian
/// derivative, `sqrt(d^n/dx^n ^2 + d^n/dy^n ^2)`.
///
/// `sigma = 0` with order 0 returns the grid unchanged.
pub fn gaussian_derivative<T: Scalar>(grid: &Grid<T>, order: u8, sigma: T) -> Result<Grid<T>> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("derivative order {order} not in 0..=2")));
    }
    if !(sigma >= T::zero() && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma {sigma}")));
    }
    if sigma == T::zero() {
        return if order == 0 {
            Ok(grid.clone())
        } else {
            Err(Error::SigmaRequired(order))
        };
    }
    let smooth = Kernel::gaussian(0, sigma);
    if order == 0 {
        return Ok(separable(grid, &smooth, &smooth));
    }
    let deriv = Kernel::gaussian(order, sigma);
    let dx = separable(grid, &deriv, &smooth);
    let dy = separable(grid, &smooth, &deriv);
    let data = dx
        .data
        .iter()
        .zip(&dy.data)
        .map(|(a, b)| (*a * *a + *b * *b).sqrt())
        .collect();
    Ok(Grid {
        width: grid.width,
        height: grid.height,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = Grid::from_fn(17, 13, |_, _| 123.25f64);
        for order in 1..=2 {
            for sigma in [0.5, 1.0, 2.5, 6.0] {
                let d = gaussian_derivative(&g, order, sigma).unwrap();
                assert!(d.data().iter().all(|v| *v == 0.0), "order {order} sigma {sigma}");
            }
        }
    }

    #[test]
    fn blur_preserves_total_of_interior_content() {
        // Content farther than the kernel radius from the border never reflects.
        let g = Grid::from_fn(40, 30, |x, y| {
            if (12..28).contains(&x) && (10..20).contains(&y) {
                ((x * 7 + y * 3) % 11) as f64
            } else {
                0.0
            }
        });
        let before: f64 = g.data().iter().sum();
        let after: f64 = gaussian_derivative(&g, 0, 2.0).unwrap().data().iter().sum();
        assert!((after - before).abs() <= 1e-9 * before);
        let k = Kernel::<f64>::gaussian(0, 1.7);
        let total = k.taps[0] + 2.0 * k.taps[1..].iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ramp_first_derivative_matches_finite_difference() {
        // Finite-difference oracle: f(x+1) - f(x) = 1 for f = x, so |grad| = 1.
        let g = Grid::from_fn(32, 20, |x, _| x as f64);
        let d = gaussian_derivative(&g, 1, 1.0).unwrap();
        let r = 3;
        for y in r..20 - r {
            for x in r..32 - r {
                let fd = g.get(x + 1, y) - g.get(x, y);
                assert!((d.get(x, y) - fd).abs() < 1e-6, "({x},{y}) = {}", d.get(x, y));
            }
        }
    }

    #[test]
    fn parabola_second_derivative_is_two() {
        let g = Grid::from_fn(40, 9, |x, _| {
            let x = x as f64;
            x * x
        });
        let d = gaussian_derivative(&g, 2, 1.5).unwrap();
        for x in 5..35 {
            assert!((d.get(x, 4) - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_sigma_needs_order_zero() {
        let g = Grid::from_fn(4, 4, |x, y| (x + y) as f64);
        assert_eq!(gaussian_derivative(&g, 0, 0.0).unwrap(), g);
        assert!(matches!(gaussian_derivative(&g, 1, 0.0), Err(Error::SigmaRequired(1))));
        assert!(gaussian_derivative(&g, 3, 1.0).is_err());
    }
}
