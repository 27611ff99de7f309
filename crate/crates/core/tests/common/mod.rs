#![allow(dead_code)]
//! Independent closed-form oracles for the built-in double-well family.

use std::f64::consts::PI;

/// Complete elliptic integral of the first kind, parameter `m = k²`, via the AGM.
pub fn ellip_k(m: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        if (a - b).abs() < 1e-16 * a {
            break;
        }
    }
    PI / (2.0 * a)
}

/// Separatrix loop area of one well: `(4/3) k^{3/2}`.
pub fn loop_area(k: f64) -> f64 {
    4.0 / 3.0 * k.powf(1.5)
}

/// Period of a well orbit with fast energy `e < 0` (relative to the saddle).
pub fn well_period(e: f64, k: f64) -> f64 {
    let eh = e / (k * k);
    let r = (1.0 + 4.0 * eh).sqrt();
    let q1s = 1.0 - r;
    let q2s = 1.0 + r;
    let m = (q2s - q1s) / q2s;
    2.0 * 2f64.sqrt() * ellip_k(m) / q2s.sqrt() / k.sqrt()
}

/// Period of an outer orbit with fast energy `e > 0`.
pub fn outer_period(e: f64, k: f64) -> f64 {
    let eh = e / (k * k);
    let r = (1.0 + 4.0 * eh).sqrt();
    let a2 = 1.0 + r;
    let b2 = r - 1.0;
    let m = a2 / (a2 + b2);
    4.0 * 2f64.sqrt() * ellip_k(m) / (a2 + b2).sqrt() / k.sqrt()
}

/// Constant term of the well period expansion `T = −a ln|E| + b`.
pub fn well_b(k: f64) -> f64 {
    (16f64.ln() + 2.0 * k.ln()) / k.sqrt()
}

/// Bracket `{S, h_s}` for the family.
pub fn theta(beta: f64, omega_y: f64, k0: f64, y: f64, x: f64) -> f64 {
    2.0 * beta * omega_y * y * (k0 + beta * x).sqrt()
}
