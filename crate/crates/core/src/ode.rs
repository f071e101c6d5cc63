//! Adaptive Dormand–Prince 5(4) integrator for complex linear systems.

use crate::{Error, Result, C64};

/// Step-size controlled explicit Runge–Kutta integrator.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on any single step.
    pub max_step: f64,
    /// Steps shorter than this abort the integration.
    pub min_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-14,
            max_step: f64::INFINITY,
            min_step: 1e-14,
        }
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    /// Integrates `dy/dt = f(t, y)` and returns `y` at every point of
    /// `t_grid`, which must be non-decreasing and start at the initial time.
    pub fn integrate<F>(&self, mut f: F, y0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if t_grid.is_empty() {
            return Ok(Vec::new());
        }
        if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidGrid("time grid must be non-decreasing".into()));
        }
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = t_grid[0];
        let mut out = Vec::with_capacity(t_grid.len());
        out.push(y.clone());

        let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        let mut y_new = vec![C64::new(0.0, 0.0); n];
        f(t, &y, &mut k[0]);

        let span = t_grid[t_grid.len() - 1] - t;
        let mut h = (span / 100.0).min(self.max_step).max(1e-6);

        for &target in &t_grid[1..] {
            while t < target {
                let mut step = h.min(target - t).min(self.max_step);
                let landing = step >= target - t;
                if landing {
                    step = target - t;
                }
                let stage = |k: &[Vec<C64>; 7], tmp: &mut Vec<C64>, coeffs: &[(usize, f64)]| {
                    for i in 0..n {
                        let mut acc = y[i];
                        for &(s, a) in coeffs {
                            acc += k[s][i] * (a * step);
                        }
                        tmp[i] = acc;
                    }
                };
                stage(&k, &mut tmp, &[(0, A21)]);
                f(t + C2 * step, &tmp, &mut k[1]);
                stage(&k, &mut tmp, &[(0, A31), (1, A32)]);
                f(t + C3 * step, &tmp, &mut k[2]);
                stage(&k, &mut tmp, &[(0, A41), (1, A42), (2, A43)]);
                f(t + C4 * step, &tmp, &mut k[3]);
                stage(&k, &mut tmp, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
                f(t + C5 * step, &tmp, &mut k[4]);
                stage(&k, &mut tmp, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
                f(t + step, &tmp, &mut k[5]);
                for i in 0..n {
                    y_new[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * step;
                }
                f(t + step, &y_new, &mut k[6]);

                let mut err_sq = 0.0;
                for i in 0..n {
                    let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7)
                        * step;
                    let scale = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                    err_sq += (e.norm() / scale).powi(2);
                }
                let err = (err_sq / n.max(1) as f64).sqrt();

                if err <= 1.0 {
                    t = if landing { target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6);
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !landing || factor < 1.0 {
                        h = step * factor;
                    }
                } else {
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                    if h < self.min_step {
                        return Err(Error::StepSizeUnderflow(t));
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}
