//! Special functions needed by the analytic initial state.
//!
//! `erf`, `erfc` and `Γ` come from `libm`. The sine integral, the Airy
//! function and the complex Riemann zeta function are evaluated here.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn atan(x: f64) -> f64 {
    x.atan()
}

/// Sine integral `Si(x) = ∫₀ˣ sin t / t dt`.
///
/// Power series for `|x| ≤ 4`; beyond, the continued fraction of `E₁(i x)`.
pub fn si(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 4.0 { si_series(ax) } else { si_cf(ax) };
    v.copysign(x)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0usize;
    loop {
        k += 1;
        let n = (2 * k) as f64;
        term *= -x2 / (n * (n + 1.0));
        let add = term / (n + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
    }
}

fn si_cf(x: f64) -> f64 {
    // modified Lentz on E₁(ix) = e^{-ix} / (1 + ix − 1²/(3 + ix − 2²/(5 + ix − …)))
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..1000 {
        let a = -((i - 1) * (i - 1)) as f64;
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let (s, co) = x.sin_cos();
    let h = Complex64::new(co, -s) * h;
    std::f64::consts::FRAC_PI_2 + h.im
}

const AI0: f64 = 0.355_028_053_887_817_239_260_063_186;
const AIP0: f64 = 0.258_819_403_792_806_798_405_183_560;

/// Airy function `Ai(x)` for `x ≥ −8`.
///
/// Maclaurin series for `|x| ≤ 5`; for `x > 5` the relation
/// `Ai(x) = sqrt(x/3) K_{1/3}(2/3 x^{3/2}) / π` with Steed's continued
/// fraction for `K`.
pub fn airy_ai(x: f64) -> Result<f64> {
    if !x.is_finite() || x < -8.0 {
        return Err(Error::Domain(format!("Ai({x}) outside the supported range x ≥ −8")));
    }
    if x <= 5.0 {
        Ok(airy_series(x))
    } else {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        Ok((x / 3.0).sqrt() * bessel_k_small_order(1.0 / 3.0, zeta) / std::f64::consts::PI)
    }
}

fn airy_series(x: f64) -> f64 {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut g = x;
    let mut tf = 1.0;
    let mut tg = x;
    for k in 0..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 + 2.0) * (k3 + 3.0));
        tg *= x3 / ((k3 + 3.0) * (k3 + 4.0));
        f += tf;
        g += tg;
        if tf.abs() < 1e-18 * f.abs() && tg.abs() <= 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// `K_ν(z)` for `|ν| ≤ 1/2` and `z ≥ 2` by Steed's method (Temme's CF2).
fn bessel_k_small_order(nu: f64, z: f64) -> f64 {
    debug_assert!(nu.abs() <= 0.5 && z >= 2.0);
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - nu * nu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp() / s
}

/// Terms of the accelerated alternating series.
pub const ZETA_TERMS: usize = 50;

/// Riemann zeta function for `Re s ≥ 0`, away from the pole at `s = 1`.
///
/// Uses `ζ(s) = η(s) / (1 − 2^{1−s})` with the Dirichlet eta series
/// accelerated by Borwein's Chebyshev weights.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if !(s.re >= 0.0) || !s.im.is_finite() || !s.re.is_finite() {
        return Err(Error::Domain(format!("ζ({s}) requires Re s ≥ 0")));
    }
    if (s - 1.0).norm() < 1e-6 {
        return Err(Error::Domain(format!("ζ({s}) too close to the pole at s = 1")));
    }
    let denom = Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - s).expf(2.0);
    if denom.norm() < 1e-12 {
        return Err(Error::Domain(format!("ζ({s}) hits a zero of 1 − 2^(1−s)")));
    }
    Ok(eta(s) / denom)
}

/// Dirichlet eta function by Borwein's algorithm 2 with `n = 50`.
fn eta(s: Complex64) -> Complex64 {
    let n = ZETA_TERMS;
    let nf = n as f64;
    // d_k = n Σ_{i ≤ k} (n+i−1)! 4^i / ((n−i)! (2i)!)
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0;
    let mut acc = term;
    d.push(acc);
    for i in 0..n {
        let fi = i as f64;
        term *= 4.0 * (nf + fi) * (nf - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
        acc += term;
        d.push(acc);
    }
    let dn = d[n];
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * (d[k] - dn) / dn;
        sum += (-s * ((k + 1) as f64).ln()).exp() * w;
    }
    -sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn anchor_values() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erfc(0.0), 1.0);
        assert!((gamma(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(si(0.0), 0.0);
        assert!((airy_ai(0.0).unwrap() - 0.355028053887817).abs() < 1e-15);
        let z0 = zeta(Complex64::new(0.0, 0.0)).unwrap();
        assert!((z0 - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sine_integral_reference() {
        let refs = [
            (0.5, 0.493107418043066689161626707573),
            (1.0, 0.946083070367183014941353313823),
            (3.9, 1.77650136044780545437943939454),
            (4.0, 1.75820313894905305810555930336),
            (4.1, 1.73874362649176899668201100097),
            (10.0, 1.65834759421887404933097187939),
            (30.0, 1.56675654003035111098373130901),
            (83.0, 1.56765024598490550734501975379),
        ];
        for (x, v) in refs {
            assert!(rel(si(x), v) < 1e-12, "Si({x}) = {} vs {v}", si(x));
            assert!(rel(si(-x), -v) < 1e-12);
        }
    }

    #[test]
    fn airy_reference() {
        let refs = [
            (-1.0, 0.535560883292352118799516565639),
            (1.0, 0.135292416312881415524147423515),
            (2.5, 0.0157259233804704899952660465408),
            (4.9, 0.00013599211701506742766865841986),
            (5.0, 0.000108344428136074417349865025033),
            (5.1, 0.0000861324270647885115543598295238),
            (5.5, 0.0000336853119085998144252897340569),
            (6.0, 0.00000994769436025288957023884766883),
            (8.0, 0.0000000469220761609923162564908170349),
            (12.75, 9.81153834601054064698707353997e-15),
        ];
        for (x, v) in refs {
            let a = airy_ai(x).unwrap();
            assert!(rel(a, v) < 1e-8, "Ai({x}) = {a} vs {v}");
        }
        assert!(airy_ai(-9.0).is_err());
    }

    #[test]
    fn zeta_reference() {
        let refs = [
            (0.3, -0.84175546942456364735853969983, -0.280837437862544161956308646995),
            (1.0, 0.57843302109931116894274910732, -1.96354949645297878459261893386),
            (2.0, 1.15035570325490267174284993474, -0.437530865919607881117527898593),
            (5.0, 0.990061347972801117936784504274, -0.0316410327583781368560266211063),
            (13.75, 1.00000392135101094445680756424, 0.0000722195495713519453735986049702),
        ];
        for (e, re, im) in refs {
            let z = zeta(Complex64::new(e, e / 2.0)).unwrap();
            let v = Complex64::new(re, im);
            assert!((z - v).norm() / v.norm() < 1e-8, "ζ at ε = {e}: {z} vs {v}");
        }
        assert!(zeta(Complex64::new(1.0, 0.0)).is_err());
        assert!(zeta(Complex64::new(-0.5, 0.0)).is_err());
    }
}
