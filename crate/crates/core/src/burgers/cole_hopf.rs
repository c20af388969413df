use crate::error::{Error, Result};
use crate::grid::Field;
use crate::quad::Integrator;

type Profile<'a> = Box<dyn Fn(f64) -> f64 + Sync + 'a>;

/// Exact Burgers solution from initial data through the ratio
///
/// `v(x, t) = ∫ (x - x')/t e^{-H/2ν} dx' / ∫ e^{-H/2ν} dx'`,
/// `H = Φ(x') + (x - x')² / (2t)`, `Φ(x') = ∫_0^{x'} u0`.
///
/// Both integrals are taken over a window around the characteristic foot
/// outside which the integrand is below `e^{-40}` of its peak, with
/// `min H` subtracted so that small `ν` cannot underflow.
pub struct ColeHopf<'a> {
    u0: Profile<'a>,
    potential: Profile<'a>,
    max_speed: f64,
    nu: f64,
}

impl<'a> ColeHopf<'a> {
    /// Use an analytic initial velocity and its potential; `max_speed`
    /// bounds `|u0|` everywhere.
    pub fn from_functions(
        u0: impl Fn(f64) -> f64 + Sync + 'a,
        potential: impl Fn(f64) -> f64 + Sync + 'a,
        max_speed: f64,
        nu: f64,
    ) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::invalid("nu", "must be positive"));
        }
        if !(max_speed >= 0.0 && max_speed.is_finite()) {
            return Err(Error::invalid("max_speed", "must be finite and nonnegative"));
        }
        Ok(Self {
            u0: Box::new(u0),
            potential: Box::new(potential),
            max_speed,
            nu,
        })
    }

    /// Tabulate the potential of a sampled initial velocity.
    ///
    /// Nodes carry the cumulative integral; between nodes the potential is
    /// the cubic Hermite interpolant with slopes `u0`. Bounded fields are
    /// zero outside the grid, so the potential is constant there. Periodic
    /// fields extend periodically and the potential gains the period mean.
    pub fn from_field(u0: &'a Field, nu: f64) -> Result<Self> {
        if !u0.is_finite() {
            return Err(Error::NonFinite("initial velocity".into()));
        }
        let grid = u0.grid;
        let n = grid.len();
        let (x0, dx) = (grid.x_min(), grid.dx());
        let v = &u0.values;
        let mut phi = u0.cumulative_integral().values;
        if grid.is_periodic() {
            if n < 4 {
                return Err(Error::invalid("n_points", "periodic potentials need four nodes"));
            }
            let wrap = dx / 24.0 * (-v[n - 2] + 13.0 * v[n - 1] + 13.0 * v[0] - v[1]);
            phi.push(phi[n - 1] + wrap);
        }
        // Lower limit of the potential at x = 0 when the grid covers it.
        let table = Table { x0, dx, phi, slope: v, periodic: grid.is_periodic(), n };
        let offset = if grid.is_periodic() || (grid.x_min()..=grid.x_max()).contains(&0.0) {
            table.eval(0.0)
        } else {
            0.0
        };
        let u_at = move |x: f64| u0.interpolate(x).unwrap_or(0.0);
        let potential = move |x: f64| table.eval(x) - offset;
        Self::from_functions(u_at, potential, u0.max_abs(), nu)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok((self.u0)(x));
        }
        let two_nu = 2.0 * self.nu;
        let spread = (4.0 * self.nu * t).sqrt();
        let m = (40.0 + self.max_speed * self.max_speed * t / two_nu).sqrt();
        let half = 2.0 * self.max_speed * t + m * spread;
        let (a, b) = (x - half, x + half);
        let h = |xp: f64| (self.potential)(xp) + (x - xp) * (x - xp) / (2.0 * t);

        // Coarse scan for the minimum of H; the integrand peaks there.
        let samples = 4001;
        let step = (b - a) / (samples - 1) as f64;
        let h_min = (0..samples)
            .map(|i| h(a + i as f64 * step))
            .fold(f64::INFINITY, f64::min);
        if !h_min.is_finite() {
            return Err(Error::NonFinite(format!("Cole-Hopf exponent near x = {x}")));
        }
        let weight = |xp: f64| (-(h(xp) - h_min) / two_nu).exp();
        let den = Integrator::with_tolerance(0.0, 1e-12).integrate(weight, a, b)?.value;
        if !(den > 0.0) {
            return Err(Error::NonFinite(format!("Cole-Hopf denominator at x = {x}")));
        }
        // The numerator may vanish; measure its error against the largest
        // slope the window allows.
        let num = Integrator::with_tolerance(1e-13 * den * half / t, 1e-12)
            .integrate(|xp| (x - xp) / t * weight(xp), a, b)?
            .value;
        Ok(num / den)
    }
}

struct Table<'a> {
    x0: f64,
    dx: f64,
    phi: Vec<f64>,
    slope: &'a [f64],
    periodic: bool,
    n: usize,
}

impl Table<'_> {
    fn eval(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        let (shift, s) = if self.periodic {
            let n = self.n as f64;
            let cycles = (s / n).floor();
            (cycles * self.phi[self.n], s - cycles * n)
        } else {
            let last = (self.n - 1) as f64;
            if s <= 0.0 {
                return self.phi[0];
            }
            if s >= last {
                return self.phi[self.n - 1];
            }
            (0.0, s)
        };
        let i = (s.floor() as usize).min(self.phi.len() - 2);
        let f = s - i as f64;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.slope[i] * self.dx, self.slope[(i + 1) % self.n] * self.dx);
        let f2 = f * f;
        let f3 = f2 * f;
        shift
            + (2.0 * f3 - 3.0 * f2 + 1.0) * p0
            + (f3 - 2.0 * f2 + f) * m0
            + (-2.0 * f3 + 3.0 * f2) * p1
            + (f3 - f2) * m1
    }
}

/// Cole-Hopf solution at `(x, t)` from sampled initial data.
pub fn cole_hopf_exact(u0: &Field, nu: f64, x: f64, t: f64) -> Result<f64> {
    ColeHopf::from_field(u0, nu)?.velocity(x, t)
}
