//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use thiserror::Error;

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
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError<E> {
    #[error(transparent)]
    Integrand(E),
    #[error("quadrature did not converge: error estimate {estimate:e} after {intervals} intervals")]
    NoConvergence { estimate: f64, intervals: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
) -> Result<Segment, E> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrates `f` over `[a, b]` (either orientation) until the summed error
/// estimate drops below `abs_tol`, or below a rounding floor relative to the
/// result when that is larger.
pub fn integrate<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<f64, QuadError<E>> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, settings).map(|v| -v);
    }
    let mut segments = vec![kronrod(&mut f, a, b).map_err(QuadError::Integrand)?];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let floor = 64.0 * f64::EPSILON * segments.iter().map(|s| s.value.abs()).sum::<f64>();
        if error <= settings.abs_tol.max(floor) {
            return Ok(value);
        }
        if segments.len() >= settings.max_intervals {
            return Err(QuadError::NoConvergence {
                estimate: error,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(QuadError::NoConvergence {
                estimate: error,
                intervals: segments.len() + 1,
            });
        }
        segments.push(kronrod(&mut f, s.a, mid).map_err(QuadError::Integrand)?);
        segments.push(kronrod(&mut f, mid, s.b).map_err(QuadError::Integrand)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        integrate(|x| Ok::<_, Infallible>(f(x)), a, b, &QuadSettings::default()).unwrap()
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_rule_is_exact_for_high_degree_polynomials() {
        // Kronrod 15 is exact through degree 22, Gauss 7 through 13
        let mut f = |x: f64| Ok::<_, Infallible>(x.powi(22) + x.powi(13));
        let s = kronrod(&mut f, -1.0, 1.0).unwrap();
        assert!((s.value - 2.0 / 23.0).abs() < 1e-15);
        let mut g = |x: f64| Ok::<_, Infallible>(x.powi(12));
        let s = kronrod(&mut g, -1.0, 1.0).unwrap();
        assert!(s.error < 1e-15);
    }

    #[test]
    fn smooth_integrals() {
        assert!((quad(f64::sin, 0.0, std::f64::consts::PI) - 2.0).abs() < 1e-12);
        assert!((quad(f64::exp, 0.0, 1.0) - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((quad(|x| 1.0 / (1.0 + 100.0 * x * x), -1.0, 1.0) - 0.2 * 10f64.atan()).abs() < 1e-10);
    }

    #[test]
    fn orientation_flips_sign() {
        let fwd = quad(|x| x * x, 0.0, 2.0);
        let back = quad(|x| x * x, 2.0, 0.0);
        assert_eq!(fwd, -back);
        assert_eq!(quad(|x| x, 1.0, 1.0), 0.0);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // ∫₀¹ dx/√(1−x²) = π/2; needs many bisections towards x = 1
        let v = quad(|x| 1.0 / (1.0 - x * x).sqrt(), 0.0, 1.0 - 1e-12);
        assert!((v - (1.0f64 - 1e-12).asin()).abs() < 1e-8);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x| if x > 0.5 { Err("boom") } else { Ok(x) },
            0.0,
            1.0,
            &QuadSettings::default(),
        );
        assert_eq!(r, Err(QuadError::Integrand("boom")));
    }
}
