//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_300_380,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub intervals: usize,
}

/// Tolerances for [`integrate`] and [`integrate_n`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Reported error above `fail_tol * max(1, |value|)` is an error.
    pub fail_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 4000,
            fail_tol: 1e-9,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

struct Piece<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

/// One 21-point Kronrod panel; returns the values and the largest component error.
fn panel<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    for j in 0..10 {
        fv1[j] = f(c - h * XGK[j]);
        fv2[j] = f(c + h * XGK[j]);
    }
    let mut out = [0.0; N];
    let mut worst: f64 = 0.0;
    for k in 0..N {
        let mut rk = WGK[10] * fc[k];
        let mut rg = 0.0;
        let mut rabs = rk.abs();
        for j in 0..10 {
            let s = fv1[j][k] + fv2[j][k];
            rk += WGK[j] * s;
            rabs += WGK[j] * (fv1[j][k].abs() + fv2[j][k].abs());
            if j % 2 == 1 {
                rg += WG[j / 2] * s;
            }
        }
        let mean = 0.5 * rk;
        let mut rasc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            rasc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        let err = rescale((rk - rg) * h, rabs * h.abs(), rasc * h.abs());
        out[k] = rk * h;
        worst = worst.max(err);
    }
    (out, worst)
}

/// Integrates a vector-valued function over `[a, b]` with a shared subdivision.
pub fn integrate_n<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    if a == b {
        return Ok(QuadResult {
            value: [0.0; N],
            error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = panel(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    let norm = |t: &[f64; N]| t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    while total_err > cfg.abs_tol.max(cfg.rel_tol * norm(&total)) && heap.len() < cfg.max_intervals
    {
        let worst = heap.pop().expect("heap nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a.min(worst.b) || m >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = panel(&mut f, worst.a, m);
        let (v2, e2) = panel(&mut f, m, worst.b);
        for k in 0..N {
            total[k] += v1[k] + v2[k] - worst.value[k];
        }
        total_err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: m,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Resum to avoid accumulated update round-off.
    let mut value = [0.0; N];
    let mut error = 0.0;
    for p in heap.iter() {
        for k in 0..N {
            value[k] += p.value[k];
        }
        error += p.error;
    }
    if !error.is_finite() || value.iter().any(|x| !x.is_finite()) {
        return Err(Error::QuadratureFailure {
            estimate: f64::INFINITY,
            tolerance: cfg.fail_tol,
        });
    }
    if error > cfg.fail_tol * norm(&value).max(1.0) {
        return Err(Error::QuadratureFailure {
            estimate: error,
            tolerance: cfg.fail_tol,
        });
    }
    Ok(QuadResult {
        value,
        error,
        intervals: heap.len(),
    })
}

/// Scalar convenience wrapper around [`integrate_n`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult<1>>
where
    F: FnMut(f64) -> f64,
{
    integrate_n(|x| [f(x)], a, b, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_panel_exact_for_degree_29() {
        let mut f = |x: f64| [x.powi(28) + x.powi(29)];
        let (v, _) = panel(&mut f, -1.0, 1.0);
        assert!((v[0] - 2.0 / 29.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_sqrt_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_integral() {
        let r = integrate(|x| (30.0 * x).cos(), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value[0] - (30.0f64).sin() / 30.0).abs() < 1e-14);
    }
}
