//! Uniform one-dimensional grids and the fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[x_min, x_max]` with `n_points` nodes, endpoints included.
///
/// A periodic grid stores one period of `n_points` distinct nodes; the node
/// that would sit at `x_min + period` is implied, so `x_max = x_min + period -
/// dx` and the spacing is still `(x_max - x_min) / (n_points - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    #[serde(default)]
    periodic: bool,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid("n_points", "a grid needs at least two nodes"));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::invalid(
                "x_min/x_max",
                format!("need finite x_min < x_max, got [{x_min}, {x_max}]"),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            periodic: false,
        })
    }

    /// Periodic grid of `n_points` distinct nodes covering one `period`.
    pub fn periodic(x_min: f64, period: f64, n_points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid("period", "must be positive and finite"));
        }
        let dx = period / n_points as f64;
        let mut grid = Self::new(x_min, x_min + period - dx, n_points)?;
        grid.periodic = true;
        Ok(grid)
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn centered(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    /// Length of one period, `None` for bounded grids.
    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.dx() * self.n_points as f64)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn sample<T>(&self, f: impl Fn(f64) -> T) -> Field<T> {
        Field {
            grid: *self,
            values: self.points().into_iter().map(f).collect(),
        }
    }

    /// Trapezoid rule over the grid. On a periodic grid this is the
    /// rectangle rule over one period, which is spectrally accurate.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let sum: f64 = values.iter().sum();
        if self.periodic {
            sum * self.dx()
        } else {
            (sum - 0.5 * (values[0] + values[self.n_points - 1])) * self.dx()
        }
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_points == other.n_points
            && self.periodic == other.periodic
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.dx()
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.dx()
    }

    pub(crate) fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Index and fractional offset of the cell containing `x`, if inside.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.x_min) / self.dx();
        if self.periodic {
            let n = self.n_points as f64;
            let s = s.rem_euclid(n);
            let i = (s.floor() as usize).min(self.n_points - 1);
            return Some((i, s - i as f64));
        }
        let last = (self.n_points - 1) as f64;
        if !(-1e-9..=last + 1e-9).contains(&s) {
            return None;
        }
        let s = s.clamp(0.0, last);
        let i = (s.floor() as usize).min(self.n_points - 2);
        Some((i, s - i as f64))
    }
}

/// Samples of a real or complex quantity on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T = f64> {
    pub grid: Grid1D,
    pub values: Vec<T>,
}

impl<T> Field<T> {
    pub fn new(grid: Grid1D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }
}

impl Field<f64> {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Fourth-order finite-difference derivative. Periodic grids wrap;
    /// bounded grids switch to one-sided fourth-order stencils at the edges.
    pub fn derivative(&self) -> Field {
        let n = self.grid.len();
        let h = self.grid.dx();
        let v = &self.values;
        let values = if self.grid.is_periodic() {
            let at = |i: isize| v[i.rem_euclid(n as isize) as usize];
            (0..n as isize)
                .map(|i| (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h))
                .collect()
        } else if n < 5 {
            (0..n)
                .map(|i| {
                    let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                    (v[b] - v[a]) / ((b - a) as f64 * h)
                })
                .collect()
        } else {
            (0..n)
                .map(|i| {
                    if i >= 2 && i + 2 < n {
                        (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
                    } else if i < 2 {
                        one_sided(&v[..5], i, h)
                    } else {
                        let s = n - 5;
                        one_sided(&v[s..], i - s, h)
                    }
                })
                .collect()
        };
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Running integral `∫_{x_0}^{x} f`, starting from the first node, using
    /// cell-wise cubic interpolation through the four nearest nodes.
    pub fn cumulative_integral(&self) -> Field {
        let n = self.grid.len();
        let h = self.grid.dx();
        let v = &self.values;
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let cell = if n < 4 {
                0.5 * h * (v[i] + v[i + 1])
            } else if self.grid.is_periodic() {
                let at = |j: isize| v[j.rem_euclid(n as isize) as usize];
                let j = i as isize;
                h / 24.0 * (-at(j - 1) + 13.0 * at(j) + 13.0 * at(j + 1) - at(j + 2))
            } else if i >= 1 && i + 2 < n {
                h / 24.0 * (-v[i - 1] + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2])
            } else if i == 0 {
                h / 24.0 * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3])
            } else {
                h / 24.0 * (9.0 * v[i + 1] + 19.0 * v[i] - 5.0 * v[i - 1] + v[i - 2])
            };
            out[i + 1] = out[i] + cell;
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    /// Cubic (four-point Lagrange) interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (i, f) = self.grid.locate(x)?;
        let n = self.grid.len();
        let v = &self.values;
        if n < 4 {
            let j = (i + 1).min(n - 1);
            return Some(v[i] + f * (v[j] - v[i]));
        }
        let (base, t) = if self.grid.is_periodic() {
            (i as isize - 1, f + 1.0)
        } else {
            let b = (i as isize - 1).clamp(0, n as isize - 4);
            (b, (i as isize - b) as f64 + f)
        };
        let at = |k: isize| v[(base + k).rem_euclid(n as isize) as usize];
        let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        Some(w0 * at(0) + w1 * at(1) + w2 * at(2) + w3 * at(3))
    }
}

/// Fourth-order one-sided derivative at position `at` (0 or 1) of a
/// five-point window, or at the mirrored positions 3/4.
fn one_sided(w: &[f64], at: usize, h: f64) -> f64 {
    const STENCILS: [[f64; 5]; 5] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
        [1.0, -8.0, 0.0, 8.0, -1.0],
        [-1.0, 6.0, -18.0, 10.0, 3.0],
        [3.0, -16.0, 36.0, -48.0, 25.0],
    ];
    STENCILS[at]
        .iter()
        .zip(w)
        .map(|(c, v)| c * v)
        .sum::<f64>()
        / (12.0 * h)
}
