use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

/// Direction of the Cole-Hopf map between heights, slopes and `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpzDirection {
    /// `φ = exp(-h / 2ν)`
    HeightToPhi,
    /// `h = -2ν ln φ`
    PhiToHeight,
    /// `φ = exp(-∫_0^x v / 2ν)`
    VelocityToPhi,
    /// `v = -2ν φ_x / φ`
    PhiToVelocity,
}

fn require_positive(phi: &Field) -> Result<()> {
    match phi.values.iter().position(|&p| !(p > 0.0)) {
        Some(i) => Err(Error::Domain(format!(
            "phi must be positive, got {} at x = {}",
            phi.values[i],
            phi.grid.x(i)
        ))),
        None => Ok(()),
    }
}

pub fn kpz_transform(field: &Field, nu: f64, direction: KpzDirection) -> Result<Field> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu", "must be positive"));
    }
    let two_nu = 2.0 * nu;
    let map = |f: &dyn Fn(f64) -> f64, src: &Field| Field {
        grid: src.grid,
        values: src.values.iter().map(|&v| f(v)).collect(),
    };
    match direction {
        KpzDirection::HeightToPhi => Ok(map(&|h| (-h / two_nu).exp(), field)),
        KpzDirection::PhiToHeight => {
            require_positive(field)?;
            Ok(map(&|p| -two_nu * p.ln(), field))
        }
        KpzDirection::VelocityToPhi => {
            let mut potential = field.cumulative_integral();
            // Potential measured from x = 0 when the grid covers it, else
            // from the left edge.
            let grid = field.grid;
            let covers_origin = grid.x_min() <= 0.0 && 0.0 <= grid.x_max();
            if covers_origin {
                let at_origin = potential.interpolate(0.0).unwrap_or(0.0);
                potential.values.iter_mut().for_each(|v| *v -= at_origin);
            }
            Ok(map(&|p| (-p / two_nu).exp(), &potential))
        }
        KpzDirection::PhiToVelocity => {
            require_positive(field)?;
            let dphi = field.derivative();
            Ok(Field {
                grid: field.grid,
                values: dphi
                    .values
                    .iter()
                    .zip(&field.values)
                    .map(|(d, p)| -two_nu * d / p)
                    .collect(),
            })
        }
    }
}

/// Largest `|h_t + h_x²/2 - ν h_xx|` between two slices `dt` apart.
///
/// The time derivative is the forward difference and the spatial terms are
/// averaged over the two slices (second-order central differences), so the
/// residual is `O(dx² + dt²)` for smooth solutions. Bounded grids skip their
/// two edge nodes.
pub fn kpz_residual(h_prev: &Field, h_next: &Field, dt: f64, nu: f64) -> Result<f64> {
    h_prev.grid.check_same(&h_next.grid)?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let grid = h_prev.grid;
    let n = grid.len();
    if n < 3 {
        return Err(Error::invalid("n_points", "need at least three nodes"));
    }
    let dx = grid.dx();
    let spatial = |h: &[f64], i: usize| {
        let (l, r) = if grid.is_periodic() {
            ((i + n - 1) % n, (i + 1) % n)
        } else {
            (i - 1, i + 1)
        };
        let hx = (h[r] - h[l]) / (2.0 * dx);
        let hxx = (h[r] - 2.0 * h[i] + h[l]) / (dx * dx);
        0.5 * hx * hx - nu * hxx
    };
    let range = if grid.is_periodic() { 0..n } else { 1..n - 1 };
    Ok(range
        .map(|i| {
            let ht = (h_next.values[i] - h_prev.values[i]) / dt;
            let s = 0.5 * (spatial(&h_prev.values, i) + spatial(&h_next.values, i));
            (ht + s).abs()
        })
        .fold(0.0, f64::max))
}
