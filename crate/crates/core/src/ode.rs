//! Dormand–Prince 5(4) integration of a complex scalar ODE whose vector field
//! depends on a continuously tracked branch of `√φ`, with dense output and
//! event location.

use crate::qdiff::RationalQd;
use crate::scalar::{closest_root, Real, C};

/// A single accepted step with its continuous extension.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct DenseStep<T> {
    pub t0: T,
    pub h: T,
    /// Fraction of the step actually kept (< 1 only for the final step).
    pub frac: T,
    r: [C<T>; 5],
    pub sqrt0: C<T>,
}

impl<T: Real> DenseStep<T> {
    /// State at `t0 + σ h`.
    pub fn eval(&self, sigma: T) -> C<T> {
        let one = T::one();
        let [r1, r2, r3, r4, r5] = self.r;
        r1 + (r2 + (r3 + (r4 + r5 * (one - sigma)) * sigma) * (one - sigma)) * sigma
    }

    /// Derivative with respect to σ.
    pub fn deriv_sigma(&self, sigma: T) -> C<T> {
        let one = T::one();
        let [_, r2, r3, r4, r5] = self.r;
        let a = r4 + r5 * (one - sigma);
        let inner = r3 + a * sigma;
        let mid = r2 + inner * (one - sigma);
        let da = -r5;
        let dinner = a + da * sigma;
        let dmid = -inner + dinner * (one - sigma);
        mid + dmid * sigma
    }

    /// Derivative with respect to the integration variable.
    pub fn deriv(&self, sigma: T) -> C<T> {
        self.deriv_sigma(sigma) / self.h
    }

    pub fn t_end(&self) -> T {
        self.t0 + self.h * self.frac
    }
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    ZeroHit(usize),
    PoleCapture(usize),
    Escape,
    MaxParam,
}

/// Tolerances and event thresholds for one integration.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Drive<T> {
    pub t_max: T,
    pub max_step: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub escape_radius: T,
    pub zero_radius: T,
    pub pole_radius: T,
    /// Event location tolerance in the integration variable.
    pub event_tol: T,
}

/// Failure modes of the driver.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum DriveError {
    StepUnderflow { t: f64, z: String },
}

/// Outcome of an integration.
#[derive(Clone, Debug)]
pub(crate) struct Run<T> {
    pub steps: Vec<DenseStep<T>>,
    pub stop: Stop,
    /// Minimum sampled distance to each zero over the run.
    pub min_zero_dist: Vec<T>,
}

// Dormand–Prince tableau.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrate `dz/dt = field(z, √φ(z))` from `z0` with `√φ(z0) = sqrt0`.
///
/// The branch of `√φ` at every stage is the root closest to its value at
/// the start of the step; steps are limited so that they stay well inside
/// the disc free of critical points, which makes that choice unambiguous.
pub(crate) fn integrate<T, F>(
    qd: &RationalQd<T>,
    z0: C<T>,
    sqrt0: C<T>,
    field: F,
    cfg: &Drive<T>,
) -> Result<Run<T>, DriveError>
where
    T: Real,
    F: Fn(C<T>, C<T>) -> C<T>,
{
    let zeros = qd.zeros().to_vec();
    let poles: Vec<C<T>> = qd.inventory().finite_poles.iter().map(|p| p.0).collect();
    let k = |x: f64| T::cst(x);

    let eval = |z: C<T>, reference: C<T>| -> Option<(C<T>, C<T>)> {
        let phi = qd.eval(z).ok()?;
        let s = closest_root(phi.sqrt(), reference);
        let f = field(z, s);
        if f.re.is_finite() && f.im.is_finite() {
            Some((f, s))
        } else {
            None
        }
    };

    let mut min_zero_dist: Vec<T> = zeros.iter().map(|b| (z0 - *b).norm()).collect();
    let mut steps: Vec<DenseStep<T>> = Vec::new();
    let mut t = T::zero();
    let mut z = z0;
    let mut s = sqrt0;
    let (mut f0, _) = eval(z, s).ok_or_else(|| DriveError::StepUnderflow { t: 0.0, z: format!("{z}") })?;

    let safe_h = |z: C<T>, f: C<T>| {
        let d = qd.critical_distance(z);
        let speed = f.norm();
        if speed > T::zero() && d.is_finite() {
            k(0.25) * d / speed
        } else {
            T::infinity()
        }
    };
    let mut h = cfg.max_step.min(safe_h(z, f0)).min(cfg.t_max);
    let mut last_rejected = false;

    loop {
        if t >= cfg.t_max {
            return Ok(Run { steps, stop: Stop::MaxParam, min_zero_dist });
        }
        let cap = safe_h(z, f0).min(cfg.max_step);
        h = h.min(cap).min(cfg.t_max - t);
        if h <= k(1e-14) * (T::one() + t.abs()) {
            return Err(DriveError::StepUnderflow { t: t.f64(), z: format!("{z}") });
        }

        let stage = |zs: C<T>| eval(zs, s);
        let attempt = (|| {
            let k1 = f0;
            let (k2, _) = stage(z + (k1 * k(A21)) * h)?;
            let (k3, _) = stage(z + (k1 * k(A31) + k2 * k(A32)) * h)?;
            let (k4, _) = stage(z + (k1 * k(A41) + k2 * k(A42) + k3 * k(A43)) * h)?;
            let (k5, _) = stage(z + (k1 * k(A51) + k2 * k(A52) + k3 * k(A53) + k4 * k(A54)) * h)?;
            let (k6, _) =
                stage(z + (k1 * k(A61) + k2 * k(A62) + k3 * k(A63) + k4 * k(A64) + k5 * k(A65)) * h)?;
            let z1 = z + (k1 * k(A71) + k3 * k(A73) + k4 * k(A74) + k5 * k(A75) + k6 * k(A76)) * h;
            let (k7, s1) = stage(z1)?;
            let err = (k1 * k(E1) + k3 * k(E3) + k4 * k(E4) + k5 * k(E5) + k6 * k(E6) + k7 * k(E7)) * h;
            Some((k1, k3, k4, k5, k6, k7, z1, s1, err))
        })();

        let Some((k1, k3, k4, k5, k6, k7, z1, s1, err)) = attempt else {
            h = h * k(0.25);
            last_rejected = true;
            continue;
        };
        // Error per unit of displacement, so the dense derivative (and
        // hence the φ-speed) is accurate to about rel_tol everywhere.  The
        // new point must also lie on the continued branch: reject steps
        // where √φ changed by a large relative amount.
        let sc = cfg.abs_tol + cfg.rel_tol * (z1 - z).norm();
        let e = err.norm() / sc;
        if !(e <= T::one()) || (s1 - s).norm() > k(0.5) * s.norm() {
            let fac = if e.is_finite() { (k(0.9) * e.powf(k(-0.2))).max(k(0.2)).min(k(0.9)) } else { k(0.2) };
            h = h * fac;
            last_rejected = true;
            continue;
        }

        let ydiff = z1 - z;
        let bspl = k1 * h - ydiff;
        let r5 = (k1 * k(D1) + k3 * k(D3) + k4 * k(D4) + k5 * k(D5) + k6 * k(D6) + k7 * k(D7)) * h;
        let step = DenseStep { t0: t, h, frac: T::one(), r: [z, ydiff, bspl, ydiff - k7 * h - bspl, r5], sqrt0: s };

        // Events, by precedence: zero hit, pole capture, escape.
        let samples = [k(0.25), k(0.5), k(0.75), T::one()];
        let mut fired: Option<(u8, usize)> = None;
        for &sg in &samples {
            let zs = step.eval(sg);
            for (j, b) in zeros.iter().enumerate() {
                let d = (zs - *b).norm();
                if d < min_zero_dist[j] {
                    min_zero_dist[j] = d;
                }
                if d < cfg.zero_radius && fired.map_or(true, |(p, _)| p > 0) {
                    fired = Some((0, j));
                }
            }
            for (j, p) in poles.iter().enumerate() {
                if (zs - *p).norm() < cfg.pole_radius && fired.map_or(true, |(p, _)| p > 1) {
                    fired = Some((1, j));
                }
            }
            if zs.norm() > cfg.escape_radius && fired.is_none() {
                fired = Some((2, 0));
            }
        }
        if let Some((kind, j)) = fired {
            let g = |sg: T| -> T {
                let zs = step.eval(sg);
                match kind {
                    0 => (zs - zeros[j]).norm() - cfg.zero_radius,
                    1 => (zs - poles[j]).norm() - cfg.pole_radius,
                    _ => cfg.escape_radius - zs.norm(),
                }
            };
            // First sample where the event function is negative.
            let mut hi = T::one();
            for &sg in &samples {
                if g(sg) < T::zero() {
                    hi = sg;
                    break;
                }
            }
            let mut lo = T::zero();
            let tol = cfg.event_tol / h;
            while hi - lo > tol {
                let m = (lo + hi) * k(0.5);
                if g(m) < T::zero() {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            let mut last = step;
            last.frac = hi;
            if kind == 0 {
                let d = (last.eval(hi) - zeros[j]).norm();
                if d < min_zero_dist[j] {
                    min_zero_dist[j] = d;
                }
            }
            steps.push(last);
            let stop = match kind {
                0 => Stop::ZeroHit(j),
                1 => Stop::PoleCapture(j),
                _ => Stop::Escape,
            };
            return Ok(Run { steps, stop, min_zero_dist });
        }

        steps.push(step);
        t = if cfg.t_max - (t + h) <= k(1e-15) * cfg.t_max { cfg.t_max } else { t + h };
        z = z1;
        s = s1;
        f0 = k7;
        let grow = if e > T::zero() { (k(0.9) * e.powf(k(-0.2))).min(k(5.0)).max(k(0.2)) } else { k(5.0) };
        h = if last_rejected { h * grow.min(T::one()) } else { h * grow };
        last_rejected = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn dense_output_reproduces_endpoints() {
        let q = RationalQd::construct(vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
        // dz/dt = i z  (ignores √φ) → z = e^{it}
        let cfg = Drive {
            t_max: 1.0,
            max_step: 0.5,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            escape_radius: 10.0,
            zero_radius: 1e-4,
            pole_radius: 1e-3,
            event_tol: 1e-12,
        };
        let run = integrate(&q, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), |z, _| Complex64::i() * z, &cfg).unwrap();
        assert_eq!(run.stop, Stop::MaxParam);
        assert!((run.steps.last().map(|s| s.eval(s.frac)).unwrap() - Complex64::from_polar(1.0, 1.0)).norm() < 1e-11);
        for st in &run.steps {
            for sg in [0.0, 0.3, 0.7, 1.0] {
                let t = st.t0 + sg * st.h;
                assert!((st.eval(sg) - Complex64::from_polar(1.0, t)).norm() < 1e-9);
                assert!((st.deriv(sg) - Complex64::i() * Complex64::from_polar(1.0, t)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn escape_is_located() {
        let q = RationalQd::construct(vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let cfg = Drive {
            t_max: 100.0,
            max_step: 1.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            escape_radius: 5.0,
            zero_radius: 1e-4,
            pole_radius: 1e-3,
            event_tol: 1e-11,
        };
        let run = integrate(&q, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), |_, _| Complex64::new(1.0, 0.0), &cfg).unwrap();
        assert_eq!(run.stop, Stop::Escape);
        assert!((run.steps.last().map(|s| s.eval(s.frac)).unwrap().re - 5.0).abs() < 1e-10);
    }
}
