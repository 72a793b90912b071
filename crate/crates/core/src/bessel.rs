//! Bessel functions of the first and second kind of real order, and the
//! imaginary-order kernel `B(t, x) = -Im J_{2it}(x) / sinh(pi t)`.
//!
//! `J_nu` picks between the ascending series, the Hankel expansion and direct
//! quadrature of Schläfli's integral. `Y_nu` (`0 <= nu < 1`) uses the Hankel
//! expansion for large `x`, the connection formula where both `J_{+-nu}`
//! series are clean, the `Y_0` series at `nu = 0`, and otherwise its own
//! Schläfli-type integral, which is uniform in `nu` near zero.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_panels, Tolerance};

/// Largest order accepted by [`bessel_j`].
pub const NU_CAP: f64 = 1e4;
/// Largest argument accepted by the real-order evaluators.
pub const X_CAP: f64 = 1e7;
/// Largest `|t|` accepted by [`spectral_kernel`].
pub const T_CAP: f64 = 1e3;
/// The contour for [`spectral_kernel`] may not extend beyond `|s| = 50`.
pub const XI_MAX: f64 = 50.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Largest log-magnitude of the series terms we accept; beyond it the
/// alternating series loses more than about 1e-11 to cancellation.
const SERIES_LOG_LIMIT: f64 = 11.5;

/// Below this argument the Hankel expansion is not attempted.
const HANKEL_MIN_X: f64 = 25.0;

/// A function value with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EvalResult<T = f64> {
    pub value: T,
    pub est_abs_error: f64,
}

impl<T> EvalResult<T> {
    fn new(value: T, est_abs_error: f64) -> Self {
        Self {
            value,
            est_abs_error,
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= X_CAP) {
        return Err(Error::domain(format!("argument x = {x} outside (0, {X_CAP}]")));
    }
    Ok(())
}

/// Estimate of `ln I_nu(x)`, the log-size of the largest series term.
fn ln_series_scale(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let eta = nu.hypot(x);
    let ratio = if nu > 0.0 { nu * (x / (nu + eta)).ln() } else { 0.0 };
    eta + ratio - 0.5 * (2.0 * PI * eta).ln()
}

fn series_is_clean(nu: f64, x: f64) -> bool {
    ln_series_scale(nu, x) <= SERIES_LOG_LIMIT
}

/// Ascending series `sum (-1)^k (x/2)^(2k+nu) / (k! Gamma(k+nu+1))`, valid
/// for any `nu > -1`.
fn j_series(nu: f64, x: f64) -> EvalResult {
    let half = 0.5 * x;
    let mut term = if nu.abs() <= 20.0 {
        half.powf(nu) / gamma(nu + 1.0)
    } else {
        (nu * half.ln() - ln_gamma(nu + 1.0)).exp()
    };
    if term == 0.0 {
        return EvalResult::new(0.0, f64::MIN_POSITIVE);
    }
    let q = -half * half;
    let mut sum = term;
    let mut largest = term.abs();
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        largest = largest.max(term.abs());
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > half {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    let err = largest * f64::EPSILON * (2.0 + k.sqrt()) + sum.abs() * 4.0 * f64::EPSILON;
    EvalResult::new(sum, err)
}

/// Hankel's expansion: returns `(J, Y, error)` or `None` when the
/// asymptotic series does not reach double precision.
fn hankel(nu: f64, x: f64) -> Option<(f64, f64, f64)> {
    let (p, q, err) = hankel_pq(4.0 * nu * nu, x)?;
    let chi = x - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let amp = (FRAC_2_PI / x).sqrt();
    // the phase carries an absolute rounding error of about ulp(x)
    let phase_err = x * f64::EPSILON;
    Some((
        amp * (p * c - q * s),
        amp * (p * s + q * c),
        amp * (err + phase_err),
    ))
}

/// The asymptotic series `P`, `Q` for `mu = 4 nu^2` (real, possibly negative).
fn hankel_pq(mu: f64, x: f64) -> Option<(f64, f64, f64)> {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut largest: f64 = 1.0;
    let mut err = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * x);
        if next.abs() > term.abs() && odd * odd > mu {
            // past the smallest term: the expansion is exhausted
            err = term.abs();
            break;
        }
        term = next;
        largest = largest.max(term.abs());
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            err = term.abs();
            break;
        }
    }
    let err = err + largest * 4.0 * f64::EPSILON;
    if err > 1e-13 {
        return None;
    }
    Some((p, q, err))
}

/// `J_nu(x) = (1/pi) int_0^pi cos(nu th - x sin th) dth
///   - (sin nu pi / pi) int_0^inf exp(-x sinh u - nu u) du`.
fn j_schlafli(nu: f64, x: f64) -> Result<EvalResult> {
    let tol = Tolerance {
        abs: 1e-14,
        rel: 0.0,
        max_panels: crate::quad::MAX_PANELS,
    };
    let panels = ((nu + x) / 2.0).ceil() as usize + 4;
    let first = integrate(
        |th: f64| (nu * th - x * th.sin()).cos(),
        0.0,
        PI,
        panels,
        tol,
    )?;
    let mut value = first.value / PI;
    let mut err = first.est_error / PI;
    let s = (nu * PI).sin();
    if nu.fract() != 0.0 && s != 0.0 {
        let upper = decay_cutoff(|u| x * u.sinh() + nu * u, 45.0)?;
        let second = integrate(|u: f64| (-x * u.sinh() - nu * u).exp(), 0.0, upper, 8, tol)?;
        value -= s / PI * second.value;
        err += s.abs() / PI * second.est_error;
    }
    Ok(EvalResult::new(value, err + 1e-15))
}

/// Smallest doubling point where the increasing exponent `rate(u)` exceeds
/// `level`.
fn decay_cutoff(rate: impl Fn(f64) -> f64, level: f64) -> Result<f64> {
    let mut u = 0.5;
    while rate(u) < level {
        u *= 2.0;
        if u > 1e4 {
            return Err(Error::quadrature("integrand does not decay"));
        }
    }
    Ok(u)
}

/// Bessel function of the first kind `J_nu(x)` for `0 <= nu <= 1e4`,
/// `0 < x <= 1e7`.
pub fn bessel_j(nu: f64, x: f64) -> Result<EvalResult> {
    if !(0.0..=NU_CAP).contains(&nu) {
        return Err(Error::domain(format!("order nu = {nu} outside [0, {NU_CAP}]")));
    }
    check_x(x)?;
    if series_is_clean(nu, x) {
        return Ok(j_series(nu, x));
    }
    if x >= HANKEL_MIN_X && x >= 1.5 * nu {
        if let Some((j, _, err)) = hankel(nu, x) {
            return Ok(EvalResult::new(j, err));
        }
    }
    j_schlafli(nu, x)
}

/// `Y_0(x) = (2/pi)(ln(x/2) + gamma) J_0(x) + (2/pi) sum (-1)^(k+1) H_k (x^2/4)^k / (k!)^2`.
fn y0_series(x: f64) -> EvalResult {
    let j0 = j_series(0.0, x);
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    let mut largest: f64 = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let add = -term * harmonic;
        sum += add;
        largest = largest.max(add.abs());
        if add.abs() < 1e-18 && kf > 0.5 * x {
            break;
        }
    }
    let log_part = (0.5 * x).ln() + EULER_GAMMA;
    let value = FRAC_2_PI * (log_part * j0.value + sum);
    let err = FRAC_2_PI * (log_part.abs() * j0.est_abs_error + largest * 8.0 * f64::EPSILON)
        + value.abs() * 4.0 * f64::EPSILON;
    EvalResult::new(value, err)
}

/// `Y_nu(x) = (1/pi) int_0^pi sin(x sin th - nu th) dth
///   - (1/pi) int_0^inf (e^{nu t} + e^{-nu t} cos nu pi) e^{-x sinh t} dt`.
fn y_schlafli(nu: f64, x: f64) -> Result<EvalResult> {
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-14,
        max_panels: crate::quad::MAX_PANELS,
    };
    let panels = ((nu + x) / 2.0).ceil() as usize + 4;
    let first = integrate(|th: f64| (x * th.sin() - nu * th).sin(), 0.0, PI, panels, tol)?;
    let c = (nu * PI).cos();
    let upper = decay_cutoff(|t| x * t.sinh() - nu * t, 45.0)?;
    // the integrand varies on the scale asinh(1/x) near the origin
    let breaks = log_breaks(upper, (1.0 / x).asinh().min(1.0));
    let second = integrate_panels(
        |t: f64| ((nu * t).exp() + (-nu * t).exp() * c) * (-x * t.sinh()).exp(),
        &breaks,
        tol,
    )?;
    let value = (first.value - second.value) / PI;
    Ok(EvalResult::new(
        value,
        (first.est_error + second.est_error) / PI + 1e-15,
    ))
}

/// Breakpoints `0, s, 2s, ...` up to `upper`, at most a few dozen.
fn log_breaks(upper: f64, scale: f64) -> Vec<f64> {
    let n = ((upper / scale).ceil() as usize).clamp(1, 64);
    (0..=n).map(|i| upper * i as f64 / n as f64).collect()
}

/// Bessel function of the second kind `Y_nu(x)` for `0 <= nu < 1`.
pub fn bessel_y(nu: f64, x: f64) -> Result<EvalResult> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::domain(format!("order nu = {nu} outside [0, 1)")));
    }
    check_x(x)?;
    if x >= HANKEL_MIN_X {
        if let Some((_, y, err)) = hankel(nu, x) {
            return Ok(EvalResult::new(y, err));
        }
    }
    if nu == 0.0 && x <= 12.0 {
        return Ok(y0_series(x));
    }
    if (0.05..=0.95).contains(&nu) && series_is_clean(1.0, x) {
        let (s, c) = (nu * PI).sin_cos();
        let jp = j_series(nu, x);
        let jm = j_series(-nu, x);
        let value = (jp.value * c - jm.value) / s;
        let err = (jp.est_abs_error + jm.est_abs_error) / s + value.abs() * 4.0 * f64::EPSILON;
        return Ok(EvalResult::new(value, err));
    }
    y_schlafli(nu, x)
}

/// `Y_{2u}(x) + tan(pi u) J_{2u}(x)` for `0 <= u < 1/4`.
pub fn bessel_y_exceptional_kernel(u: f64, x: f64) -> Result<EvalResult> {
    if !(0.0..0.25).contains(&u) {
        return Err(Error::domain(format!("u = {u} outside [0, 1/4)")));
    }
    let y = bessel_y(2.0 * u, x)?;
    if u == 0.0 {
        return Ok(y);
    }
    let tan = (PI * u).tan();
    let j = bessel_j(2.0 * u, x)?;
    Ok(EvalResult::new(
        y.value + tan * j.value,
        y.est_abs_error + tan * j.est_abs_error,
    ))
}

/// Point on the deformed contour for `int exp(i (x cosh xi + 2 t xi)) dxi`:
/// `xi = s + i eta(s)`, returning `(xi, d xi / ds)`.
///
/// The contour passes through the real saddle `s0 = -asinh(2t/x)` at 45
/// degrees. To the right `eta` rises smoothly to `pi/2`; to the left `-eta`
/// stays below `sqrt(6 (1 - 1/r))` with `r = x |sinh s| / 2t`, which keeps
/// `x |sinh s| sin|eta| >= 2t |eta|`. Hence `Im phase >= 0` everywhere and
/// the integrand never exceeds one in modulus.
struct SaddlePath {
    x: f64,
    t: f64,
    s0: f64,
}

impl SaddlePath {
    fn new(t: f64, x: f64) -> Self {
        Self {
            x,
            t,
            s0: -(2.0 * t / x).asinh(),
        }
    }

    fn point(&self, s: f64) -> (Complex64, Complex64) {
        let d = s - self.s0;
        if d >= 0.0 {
            let arg = d / FRAC_PI_2;
            let th = arg.tanh();
            let eta = FRAC_PI_2 * th;
            let deta = 1.0 - th * th;
            return (Complex64::new(s, eta), Complex64::new(1.0, deta));
        }
        let d = -d;
        // cap(s) = sqrt(6 (1 - 1/r)), smooth minimum e = (d^-4 + cap^-4)^(-1/4)
        let (cap, dcap) = if self.t == 0.0 {
            (6f64.sqrt(), 0.0)
        } else {
            let r = -self.x * s.sinh() / (2.0 * self.t);
            let dr = -self.x * s.cosh() / (2.0 * self.t);
            let cap = (6.0 * (1.0 - 1.0 / r)).max(0.0).sqrt();
            let dcap = if cap > 0.0 { 3.0 * dr / (r * r * cap) } else { 0.0 };
            (cap, dcap)
        };
        if cap == 0.0 {
            return (Complex64::new(s, 0.0), Complex64::new(1.0, 0.0));
        }
        let inv = d.powi(-4) + cap.powi(-4);
        let e = inv.powf(-0.25);
        // dd/ds = -1
        let de = e.powi(5) * (-d.powi(-5) + cap.powi(-5) * dcap);
        (Complex64::new(s, -e), Complex64::new(1.0, -de))
    }

    fn phase(&self, xi: Complex64) -> Complex64 {
        xi.cosh() * self.x + xi * (2.0 * self.t)
    }

    /// Real part of the integrand `exp(i phase) d xi/ds`.
    fn integrand(&self, s: f64) -> f64 {
        let (xi, dxi) = self.point(s);
        let ph = self.phase(xi);
        let im = ph.im;
        if im > 700.0 {
            return 0.0;
        }
        let (sn, cs) = ph.re.sin_cos();
        let mag = (-im).exp();
        // Re[(cos + i sin) * (1 + i eta')] * e^{-Im phase}
        mag * (cs * dxi.re - sn * dxi.im)
    }

    fn im_phase(&self, s: f64) -> f64 {
        self.phase(self.point(s).0).im
    }

    /// First doubling step from the saddle at which `Im phase` exceeds
    /// `level`, searching in direction `dir`.
    fn cutoff(&self, dir: f64, level: f64) -> Result<f64> {
        let mut d = 0.25;
        loop {
            let s = self.s0 + dir * d;
            if s.abs() > XI_MAX {
                return Err(Error::quadrature(format!(
                    "contour for t = {}, x = {} not settled by |xi| = {XI_MAX}",
                    self.t, self.x
                )));
            }
            if self.im_phase(s) > level {
                return Ok(s);
            }
            d *= 2.0;
        }
    }
}

/// Exponent at which the contour integrand is negligible (`e^-45 < 3e-20`).
const CONTOUR_DECAY: f64 = 45.0;

/// `int_0^inf cos(x cosh xi) cos(2 t xi) dxi`, evaluated as half the real
/// part of the full-line integral of `exp(i (x cosh xi + 2|t| xi))` along a
/// steepest-descent-like contour.
fn cosh_cos_integral(t: f64, x: f64) -> Result<EvalResult> {
    let path = SaddlePath::new(t.abs(), x);
    let left = path.cutoff(-1.0, CONTOUR_DECAY)?;
    let right = path.cutoff(1.0, CONTOUR_DECAY)?;
    let curvature = x.hypot(2.0 * t);
    let width = (2.0 / curvature.sqrt()).min(1.0);
    let n = (((right - left) / width).ceil() as usize).clamp(4, 4000);
    let mut breaks: Vec<f64> = (0..=n)
        .map(|i| left + (right - left) * i as f64 / n as f64)
        .collect();
    // keep the saddle on a panel boundary
    if let Some(i) = breaks.iter().position(|&b| b > path.s0) {
        if i > 0 && path.s0 - breaks[i - 1] > 1e-3 * width && breaks[i] - path.s0 > 1e-3 * width {
            breaks.insert(i, path.s0);
        }
    }
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-14,
        max_panels: crate::quad::MAX_PANELS,
    };
    let r = integrate_panels(|s| path.integrand(s), &breaks, tol)?;
    Ok(EvalResult::new(0.5 * r.value, 0.5 * r.est_error + 1e-16))
}

/// The kernel `B(t, x) = (i / sinh pi t) (J_{2it}(x) - J_{-2it}(x)) / 2
/// = -Im J_{2it}(x) / sinh(pi t) = (2/pi) int_0^inf cos(x cosh xi) cos(2 t xi) dxi`.
///
/// Even in `t` by construction; `B(0, x) = -Y_0(x)`.
pub fn spectral_kernel(t: f64, x: f64) -> Result<EvalResult> {
    if !(t.abs() <= T_CAP) {
        return Err(Error::domain(format!("|t| = {} exceeds {T_CAP}", t.abs())));
    }
    check_x(x)?;
    let t = t.abs();
    if x >= HANKEL_MIN_X && 4.0 * t * t <= x {
        // with nu = 2it the Hankel series is real:
        // B = -sqrt(2/(pi x)) (P sin(x - pi/4) + Q cos(x - pi/4)), mu = -16 t^2
        if let Some((p, q, err)) = hankel_pq(-16.0 * t * t, x) {
            let (s, c) = (x - 0.25 * PI).sin_cos();
            let amp = (FRAC_2_PI / x).sqrt();
            return Ok(EvalResult::new(
                -amp * (p * s + q * c),
                amp * (err + x * f64::EPSILON),
            ));
        }
    }
    let i = cosh_cos_integral(t, x)?;
    Ok(EvalResult::new(FRAC_2_PI * i.value, FRAC_2_PI * i.est_abs_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn j(nu: f64, x: f64) -> f64 {
        bessel_j(nu, x).unwrap().value
    }
    fn y(nu: f64, x: f64) -> f64 {
        bessel_y(nu, x).unwrap().value
    }

    // Lanczos approximation (g = 7, n = 9) for complex arguments with
    // Re z >= 1/2, reflection otherwise.
    fn gamma_complex(z: Complex64) -> Complex64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.999_999_999_999_809_93,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_13,
            -176.615_029_162_140_59,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_571_6e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if z.re < 0.5 {
            let pi = Complex64::new(PI, 0.0);
            return pi / ((z * PI).sin() * gamma_complex(1.0 - z));
        }
        let z = z - 1.0;
        let mut a = Complex64::new(C[0], 0.0);
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * a
    }

    // J_{2it}(x) from its ascending series with complex Gamma.
    fn j_imaginary_order_series(t: f64, x: f64) -> Complex64 {
        let nu = Complex64::new(0.0, 2.0 * t);
        let half = Complex64::new(0.5 * x, 0.0);
        let mut term = half.powc(nu) / gamma_complex(nu + 1.0);
        let mut sum = term;
        for k in 1..200 {
            term *= -(0.25 * x * x) / (k as f64 * (nu + k as f64));
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        sum
    }

    // Y_nu for 0 < nu < 1/2 from
    // Y_nu(x) = -2 (x/2)^-nu / (sqrt(pi) Gamma(1/2 - nu)) int_1^inf cos(xy) (y^2-1)^-(nu+1/2) dy
    // with the path y = 1 + i s and s = w^(1/(1-mu)), mu = nu + 1/2.
    fn y_cosine_integral(nu: f64, x: f64) -> f64 {
        let mu = nu + 0.5;
        let pw = 1.0 / (1.0 - mu);
        let phase = Complex64::from_polar(1.0, -FRAC_PI_2 * mu);
        let s_max = 60.0 / x;
        let w_max = s_max.powf(1.0 - mu);
        let r = crate::quad::tanh_sinh(
            |w: f64| {
                let s = w.powf(pw);
                let tail = Complex64::new(2.0, s).powf(-mu);
                phase * tail * ((-x * s).exp() * pw)
            },
            0.0,
            w_max,
            1e-14,
        )
        .unwrap();
        let integral = Complex64::i() * Complex64::from_polar(1.0, x) * r.value;
        -2.0 * (0.5 * x).powf(-nu) / (PI.sqrt() * gamma(0.5 - nu)) * integral.re
    }

    #[test]
    fn j_small_argument_limit() {
        assert!((j(0.0, 1e-12) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_order_closed_forms() {
        let x = FRAC_PI_2;
        assert!((j(0.5, x) - 2.0 / PI).abs() < 1e-12);
        let pi = PI;
        assert!((y(0.5, pi) - 2f64.sqrt() / pi).abs() < 1e-12);
        for i in 0..200 {
            let x = 0.1 * 1000f64.powf(i as f64 / 199.0);
            let amp = (2.0 / (PI * x)).sqrt();
            assert!((j(0.5, x) - amp * x.sin()).abs() < 1e-10, "J x={x}");
            assert!((y(0.5, x) + amp * x.cos()).abs() < 1e-10, "Y x={x}");
        }
    }

    #[test]
    fn integer_orders_against_known_values() {
        // reference values from standard tables
        assert!((j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-13);
        assert!((j(1.0, 2.5) - 0.497_094_102_464_274_3).abs() < 1e-13);
        assert!((y(0.0, 1.0) - 0.088_256_964_215_676_96).abs() < 1e-12);
        assert!((y(0.0, 30.0) - (-0.117_295_731_686_663_98)).abs() < 1e-12);
        assert!((j(0.0, 30.0) - (-0.086_367_983_581_040_23)).abs() < 1e-12);
        assert!((j(10.0, 5.0) - 0.001_467_802_647_310_473_7).abs() < 1e-13);
    }

    #[test]
    fn series_agrees_with_schlafli() {
        for &(nu, x) in &[(10.0, 5.0), (0.3, 2.0), (3.7, 9.0), (25.5, 20.0)] {
            let s = j_series(nu, x).value;
            let q = j_schlafli(nu, x).unwrap().value;
            assert!((s - q).abs() < 1e-10, "nu={nu} x={x}: {s} vs {q}");
        }
    }

    #[test]
    fn hankel_agrees_with_schlafli() {
        for &(nu, x) in &[(0.0, 30.0), (0.75, 40.0), (3.0, 60.0), (12.5, 200.0)] {
            let (h, _, _) = hankel(nu, x).unwrap();
            let q = j_schlafli(nu, x).unwrap().value;
            assert!((h - q).abs() < 1e-11, "nu={nu} x={x}");
        }
    }

    #[test]
    fn y_branches_agree() {
        for &x in &[0.01, 0.5, 3.0, 11.0, 20.0, 30.0] {
            for &nu in &[0.1, 0.3, 0.7] {
                let q = y_schlafli(nu, x).unwrap().value;
                assert!((y(nu, x) - q).abs() < 1e-10 * q.abs().max(1.0), "nu={nu} x={x}");
            }
            let q = y_schlafli(0.0, x).unwrap().value;
            assert!((y(0.0, x) - q).abs() < 1e-10, "Y0 x={x}");
        }
    }

    #[test]
    fn y_is_continuous_near_order_zero() {
        // d/dnu Y_nu |_{nu=0} = -(pi/2) J_0
        for &x in &[0.3, 2.0, 8.0] {
            let nu = 1e-6;
            let slope = (y(nu, x) - y(0.0, x)) / nu;
            assert!((slope + FRAC_PI_2 * j(0.0, x)).abs() < 1e-3, "x={x}");
        }
    }

    #[test]
    fn y_large_argument_asymptotic() {
        let x = 50.0;
        let asym = (2.0 / (PI * x)).sqrt() * (x - PI / 4.0).sin();
        assert!((y(0.0, x) - asym).abs() <= 0.02 * asym.abs());
    }

    #[test]
    fn y_against_cosine_integral() {
        let v = y(7.0 / 32.0, 0.5);
        let c = y_cosine_integral(7.0 / 32.0, 0.5);
        assert!((v - c).abs() < 1e-8, "{v} vs {c}");
        for &(nu, x) in &[(0.01, 1.0), (0.25, 3.0), (0.45, 0.2), (0.1, 14.0)] {
            let v = y(nu, x);
            let c = y_cosine_integral(nu, x);
            assert!((v - c).abs() < 1e-8, "nu={nu} x={x}: {v} vs {c}");
        }
    }

    #[test]
    fn wronskian_by_differences() {
        let h = 1e-5;
        for &nu in &[0.0, 0.1, 0.219] {
            for i in 0..25 {
                let x = 0.5 * 100f64.powf(i as f64 / 24.0);
                let dj = (j(nu, x + h) - j(nu, x - h)) / (2.0 * h);
                let dy = (y(nu, x + h) - y(nu, x - h)) / (2.0 * h);
                let w = j(nu, x) * dy - dj * y(nu, x);
                assert!((w - 2.0 / (PI * x)).abs() < 1e-5, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn positive_before_first_zero() {
        for &nu in &[8.0, 12.5, 40.0] {
            for i in 1..40 {
                let x = nu * i as f64 / 40.0;
                assert!(j(nu, x) > 0.0, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(-0.5, 1.0).is_err());
        assert!(bessel_j(1.0, 0.0).is_err());
        assert!(bessel_y(1.0, 1.0).is_err());
        assert!(bessel_y(0.5, -1.0).is_err());
        assert!(spectral_kernel(2e3, 1.0).is_err());
        assert!(bessel_y_exceptional_kernel(0.25, 1.0).is_err());
    }

    #[test]
    fn exceptional_kernel_composition() {
        let v = bessel_y_exceptional_kernel(0.0, 2.0).unwrap().value;
        assert_eq!(v, y(0.0, 2.0));
        let v = bessel_y_exceptional_kernel(0.125, 1.0).unwrap().value;
        let expect = y(0.25, 1.0) + (PI / 8.0).tan() * j(0.25, 1.0);
        assert!((v - expect).abs() < 1e-14);
        let near = bessel_y_exceptional_kernel(0.2499, 1.0).unwrap();
        assert!(near.value.is_finite() && near.est_abs_error.is_finite());
    }

    #[test]
    fn kernel_at_zero_is_minus_y0() {
        for &x in &[0.05, 0.7, 3.0, 15.0, 80.0] {
            let b = spectral_kernel(0.0, x).unwrap().value;
            assert!((b + y(0.0, x)).abs() < 1e-11, "x={x}: {b} vs {}", -y(0.0, x));
        }
    }

    #[test]
    fn kernel_matches_complex_series() {
        for &(t, x) in &[(1.0, 1.0), (0.3, 0.5), (2.0, 5.0), (1.5, 3.0), (0.05, 2.0)] {
            let b = spectral_kernel(t, x).unwrap().value;
            let series = -j_imaginary_order_series(t, x).im / (PI * t).sinh();
            assert!((b - series).abs() < 1e-6, "t={t} x={x}: {b} vs {series}");
        }
    }

    #[test]
    fn kernel_asymptotic_branch_matches_contour() {
        for &(t, x) in &[(0.0, 30.0), (1.0, 40.0), (3.0, 100.0), (2.5, 25.0), (10.0, 500.0)] {
            let fast = spectral_kernel(t, x).unwrap().value;
            let contour = FRAC_2_PI * cosh_cos_integral(t, x).unwrap().value;
            assert!((fast - contour).abs() < 1e-12, "t={t} x={x}: {fast} vs {contour}");
        }
    }

    #[test]
    fn kernel_extreme_parameters() {
        for &(t, x) in &[(1000.0, 0.1), (1000.0, 500.0), (200.0, 0.33), (0.0, 1e-3), (3.0, 1e4)] {
            let b = spectral_kernel(t, x).unwrap_or_else(|e| panic!("t={t} x={x}: {e}"));
            assert!(b.value.is_finite() && b.est_abs_error < 1e-10, "t={t} x={x}");
        }
    }

    #[test]
    fn kernel_large_x_envelope() {
        // sqrt(x) |B(t, x)| stays bounded for fixed t
        let t = 2.0;
        let vals: Vec<f64> = (0..30)
            .map(|i| {
                let x = 10.0 * 100f64.powf(i as f64 / 29.0);
                x.sqrt() * spectral_kernel(t, x).unwrap().value.abs()
            })
            .collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2.0, "{max}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn kernel_even(t in -50.0f64..50.0, x in 0.05f64..60.0) {
            let a = spectral_kernel(t, x).unwrap().value;
            let b = spectral_kernel(-t, x).unwrap().value;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn three_term_recurrence(nu in 1.0f64..30.0, x in 0.5f64..60.0) {
            // J_{nu-1} + J_{nu+1} = (2 nu / x) J_nu
            let lhs = j(nu - 1.0, x) + j(nu + 1.0, x);
            let rhs = 2.0 * nu / x * j(nu, x);
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + 2.0 * nu / x));
        }
    }
}
