//! Scalar root finding, extremum search and adaptive quadrature.
//!
//! Everything here works on plain `f64 -> f64` closures. The root finders are
//! bracketing: they never step outside the interval they were given.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function returned a non-finite value {fx} at x = {x}")]
    NotFinite { x: f64, fx: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    QuadratureTolerance { estimate: f64, error: f64 },
}

/// Plain bisection on a sign-changing bracket. Stops when the bracket is
/// narrower than `xtol` (absolute) or the midpoint no longer moves.
pub fn bisect<F>(f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = ordered(lo, hi)?;
    let mut fa = checked(&f, a)?;
    let fb = checked(&f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    while b - a > xtol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = checked(&f, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection down to a relative bracket width of `coarse_rtol`, then damped
/// Newton steps. A Newton step that would leave the current bracket, or that
/// fails to shrink the residual, is halved and finally replaced by a
/// bisection step, so convergence is never worse than bisection.
pub fn bisect_newton<F, D>(f: F, df: D, lo: f64, hi: f64, coarse_rtol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = ordered(lo, hi)?;
    let mut fa = checked(&f, a)?;
    let fb = checked(&f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }

    while b - a > coarse_rtol * a.abs().max(b.abs()) {
        let m = 0.5 * (a + b);
        let fm = checked(&f, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }

    let mut x = 0.5 * (a + b);
    let mut fx = checked(&f, x)?;
    for _ in 0..100 {
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let slope = df(x);
        let mut next = None;
        if slope.is_finite() && slope != 0.0 {
            let mut step = fx / slope;
            for _ in 0..4 {
                let cand = x - step;
                if cand > a && cand < b {
                    let fc = checked(&f, cand)?;
                    if fc.abs() < fx.abs() {
                        next = Some((cand, fc));
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        let (nx, nfx) = match next {
            Some(p) => p,
            None => {
                let m = 0.5 * (a + b);
                (m, checked(&f, m)?)
            }
        };
        let moved = (nx - x).abs();
        x = nx;
        fx = nfx;
        if moved <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || b - a <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x)
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = ordered(lo, hi)?;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = checked(&f, c)?;
    let mut fd = checked(&f, d)?;
    while b - a > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = checked(&f, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = checked(&f, d)?;
        }
        if c >= d {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        kronrod += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is split until the summed
/// error drops below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(NumericsError::InvalidInterval { lo: a, hi: b });
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi)?;
    let mut pieces = vec![(lo, hi, v, e)];
    const MAX_PIECES: usize = 4000;
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(sign * total);
        }
        if pieces.len() >= MAX_PIECES {
            return Err(NumericsError::QuadratureTolerance { estimate: sign * total, error: err });
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval cannot be split further in f64
            let total: f64 = pieces.iter().map(|p| p.2).sum::<f64>();
            return Err(NumericsError::QuadratureTolerance { estimate: sign * total, error: err });
        }
        let (v1, e1) = gk15(&f, pa, mid)?;
        let (v2, e2) = gk15(&f, mid, pb)?;
        pieces.push((pa, mid, v1, e1));
        pieces.push((mid, pb, v2, e2));
    }
}

fn ordered(lo: f64, hi: f64) -> Result<(f64, f64), NumericsError> {
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    Ok(if lo < hi { (lo, hi) } else { (hi, lo) })
}

fn checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, NumericsError> {
    let fx = f(x);
    if fx.is_nan() {
        Err(NumericsError::NotFinite { x, fx })
    } else {
        Ok(fx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, NumericsError::NoSignChange { .. }));
    }

    #[test]
    fn bisect_newton_converges_to_machine_precision() {
        let r = bisect_newton(|x| x.cos() - x, |x| -x.sin() - 1.0, 0.0, 1.0, 1e-3).unwrap();
        assert!((r.cos() - r).abs() < 1e-15);
    }

    #[test]
    fn bisect_newton_survives_bad_derivative() {
        // derivative deliberately wrong: the bracket keeps it honest
        let r = bisect_newton(|x| x.powi(3) - 8.0, |_| 1e-9, 0.0, 5.0, 1e-2).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_locates_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 1e-10).unwrap();
        assert!((m - 0.3).abs() < 1e-8);
    }

    #[test]
    fn gauss_kronrod_is_exact_on_polynomials() {
        // GK15 integrates degree-29 polynomials exactly
        let v = integrate(|x| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, 1e-15, 0.0).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - 0.75 * (16.0 - 1.0);
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn adaptive_quadrature_handles_peaked_integrand() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * 100.0 * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(f64::exp, 1.0, 0.0, 1e-14, 0.0).unwrap();
        assert!((v + (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
