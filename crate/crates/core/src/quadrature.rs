//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Integrands with inverse-square-root endpoint behaviour are expected to be
//! transformed by the caller (see `kinematics`), so a plain globally adaptive
//! bisection scheme is enough here.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (integral, |K15 - G7|, integral of |f|).
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut absolute = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (f1 + f2);
        absolute += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), absolute * half.abs())
}

/// Integrates `f` over `[a, b]` to a relative tolerance `rel_tol`
/// The tolerance is floored at a few ulps of `int |f|`, below which the
/// Kronrod-Gauss difference is rounding noise.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_abs(f, a, b, rel_tol, 0.0)
}

/// As [`integrate`], also accepting an absolute error `abs_tol`. Needed when
/// the integrand is a cancelling sum of large terms.
pub fn integrate_abs<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 4096;
    let (v, e, m) = kronrod_panel(&f, a, b);
    let mut panels = vec![(a, b, v, e, m)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let magnitude: f64 = panels.iter().map(|p| p.4).sum();
        let scale = total.abs().max(f64::MIN_POSITIVE);
        if err <= rel_tol * scale || err <= abs_tol || err <= 50.0 * f64::EPSILON * magnitude || err <= 1e-300 {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Quadrature { tol: rel_tol, estimate: err / scale });
        }
        // bisect the worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(Error::Quadrature { tol: rel_tol, estimate: err / scale });
        }
        let (v1, e1, m1) = kronrod_panel(&f, pa, mid);
        let (v2, e2, m2) = kronrod_panel(&f, mid, pb);
        panels.push((pa, mid, v1, e1, m1));
        panels.push((mid, pb, v2, e2, m2));
    }
}
