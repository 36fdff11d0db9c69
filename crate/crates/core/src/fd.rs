//! Uniform planar grids and a second-order flux-form divergence
//! operator, `Div0[flux(grad z)] - rhs`, used by every graph-level
//! residual in the crate.

use crate::error::Result;
use crate::exec::{map_indexed, Exec};

/// Samples of a height function on `x0 + i h`, `y0 + j h`, stored
/// row-major (`j * nx + i`).
///
/// `period` marks multivalued heights (helicoid-like graphs): all
/// differences are reduced modulo the period, so a branch cut inside
/// the grid is invisible to the difference operators.
#[derive(Debug, Clone)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub period: Option<f64>,
}

impl Grid {
    pub fn sample(
        exec: Exec,
        x0: f64,
        y0: f64,
        h: f64,
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64 + Send + Sync,
    ) -> Self {
        let values = map_indexed(exec, nx * ny, |k| {
            let (i, j) = (k % nx, k / nx);
            f(x0 + i as f64 * h, y0 + j as f64 * h)
        });
        Self {
            x0,
            y0,
            h,
            nx,
            ny,
            values,
            period: None,
        }
    }

    /// Square grid `[-half, half]^2` with spacing close to `h` and the
    /// origin on a node.
    pub fn centered(
        exec: Exec,
        half: f64,
        h: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync,
    ) -> Self {
        let m = (half / h).ceil() as usize;
        let n = 2 * m + 1;
        let x0 = -(m as f64) * h;
        Self::sample(exec, x0, x0, h, n, n, f)
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// `z(b) - z(a)` with the period folded out.
    #[inline]
    fn diff(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        match self.period {
            Some(p) => d - p * (d / p).round(),
            None => d,
        }
    }

    /// Gradient at the midpoint of the edge `(i, j) -> (i + 1, j)`.
    fn grad_east(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h;
        let zx = self.diff(self.at(i, j), self.at(i + 1, j)) / h;
        let zy = (self.diff(self.at(i, j - 1), self.at(i, j + 1))
            + self.diff(self.at(i + 1, j - 1), self.at(i + 1, j + 1)))
            / (4.0 * h);
        (zx, zy)
    }

    /// Gradient at the midpoint of the edge `(i, j) -> (i, j + 1)`.
    fn grad_north(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h;
        let zy = self.diff(self.at(i, j), self.at(i, j + 1)) / h;
        let zx = (self.diff(self.at(i - 1, j), self.at(i + 1, j))
            + self.diff(self.at(i - 1, j + 1), self.at(i + 1, j + 1)))
            / (4.0 * h);
        (zx, zy)
    }

    /// Centered gradient at a node.
    pub fn grad(&self, i: usize, j: usize) -> (f64, f64) {
        let h2 = 2.0 * self.h;
        (
            self.diff(self.at(i - 1, j), self.at(i + 1, j)) / h2,
            self.diff(self.at(i, j - 1), self.at(i, j + 1)) / h2,
        )
    }
}

/// Residual samples on the interior of a grid; `None` where the point
/// was masked out or lies on the grid boundary.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Option<f64>>,
}

impl ResidualField {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn evaluated(&self) -> usize {
        self.values.iter().flatten().count()
    }

    /// Value at the node nearest to `(x, y)`, if that node was evaluated
    /// and lies within a hundredth of a spacing.
    pub fn at_point(&self, x: f64, y: f64) -> Option<f64> {
        let fi = (x - self.x0) / self.h;
        let fj = (y - self.y0) / self.h;
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-2 || (fj - j).abs() > 1e-2 || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        self.values[j * self.nx + i]
    }

    /// Max residuals of `self` and `finer` over the nodes evaluated in
    /// both, for convergence-order estimates on a fixed point set.
    pub fn common_max(&self, finer: &ResidualField) -> (f64, f64) {
        let mut out = (0.0f64, 0.0f64);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let Some(a) = self.values[j * self.nx + i] else {
                    continue;
                };
                let (x, y) = (self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h);
                if let Some(b) = finer.at_point(x, y) {
                    out.0 = out.0.max(a.abs());
                    out.1 = out.1.max(b.abs());
                }
            }
        }
        out
    }
}

/// Second-order conservative evaluation of `Div0[flux(grad z)] - rhs`
/// at interior nodes where `mask(x, y)` holds. Fluxes are taken at edge
/// midpoints from a compact 3x3 stencil.
pub fn divergence_residual<F, M>(
    exec: Exec,
    grid: &Grid,
    rhs: f64,
    flux: F,
    mask: M,
) -> Result<ResidualField>
where
    F: Fn(f64, f64) -> Result<(f64, f64)> + Send + Sync,
    M: Fn(f64, f64) -> bool + Send + Sync,
{
    let (nx, ny) = (grid.nx, grid.ny);
    let h = grid.h;
    let cells = map_indexed(exec, nx * ny, |k| -> Result<Option<f64>> {
        let (i, j) = (k % nx, k / nx);
        if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny || !mask(grid.x(i), grid.y(j)) {
            return Ok(None);
        }
        let (ex, ey) = grid.grad_east(i, j);
        let (wx, wy) = grid.grad_east(i - 1, j);
        let (nx_, ny_) = grid.grad_north(i, j);
        let (sx, sy) = grid.grad_north(i, j - 1);
        let east = flux(ex, ey)?.0;
        let west = flux(wx, wy)?.0;
        let north = flux(nx_, ny_)?.1;
        let south = flux(sx, sy)?.1;
        Ok(Some((east - west) / h + (north - south) / h - rhs))
    });
    let values = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ResidualField {
        x0: grid.x0,
        y0: grid.y0,
        h,
        nx,
        ny,
        values,
    })
}

/// Mask for the closed annulus `r_min <= |(x, y)| <= r_max`.
pub fn annulus(r_min: f64, r_max: f64) -> impl Fn(f64, f64) -> bool + Send + Sync + Copy {
    move |x: f64, y: f64| {
        let r = x.hypot(y);
        r >= r_min && r <= r_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let g = Grid::centered(Exec::Sequential, 1.0, 0.1, |x, y| {
            1.5 * x * x + 0.5 * y * y - x * y
        });
        let r =
            divergence_residual(Exec::Sequential, &g, 4.0, |a, b| Ok((a, b)), |_, _| true).unwrap();
        assert!(r.max_abs() < 1e-11);
        assert_eq!(r.evaluated(), 19 * 19);
    }

    #[test]
    fn period_hides_the_branch_cut() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let res = |h: f64, period: Option<f64>| {
            let mut g = Grid::centered(Exec::Sequential, 2.0, h, |x, y| y.atan2(x));
            g.period = period;
            divergence_residual(
                Exec::Parallel,
                &g,
                0.0,
                |a, b| Ok((a, b)),
                annulus(0.5, 2.0),
            )
            .unwrap()
        };
        assert!(res(0.05, None).max_abs() > 10.0);
        let (a, b) = res(0.05, Some(two_pi)).common_max(&res(0.025, Some(two_pi)));
        assert!(a < 0.05 && a / b > 3.8, "{a} {b}");
    }
}
