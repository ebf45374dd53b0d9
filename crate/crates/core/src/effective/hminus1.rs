use rustfft::num_complex::Complex64;

use super::GridField;
use crate::fft::{signed_index, Fft3};
use crate::{Error, Result};

/// Componentwise `Ḣ⁻¹(ℝ³)` norm of `f − g`, with the convention
/// `‖h‖² = (2π)⁻³ ∫ |ĥ(ξ)|² |ξ|⁻² dξ`.
///
/// The difference is zero-padded to twice the grid and paired with the
/// Fourier transform of the Green function `1/(4π|x|)` cut off at radius
/// `R = √3·side/2`, `(1 − cos(R|ξ|))/|ξ|²`, which is finite at `ξ = 0` and
/// reproduces the free-space value exactly while the support of `f − g`
/// lies in the central half of the box.
pub fn hminus1_distance(f: &GridField, g: &GridField) -> Result<f64> {
    if !f.same_layout(g) {
        return Err(Error::GridMismatch("hminus1_distance needs fields on the same grid".into()));
    }
    let spec = f.spec;
    let n = spec.n;
    let m = 2 * n;
    let side = spec.side();
    let period = 2.0 * side;
    let cutoff = 3f64.sqrt() * side / 2.0;
    let dk = 2.0 * std::f64::consts::PI / period;

    let weights: Vec<f64> = {
        let k2: Vec<f64> = (0..m).map(|i| (dk * signed_index(i, m) as f64).powi(2)).collect();
        let mut w = Vec::with_capacity(m * m * m);
        for a in &k2 {
            for b in &k2 {
                for c in &k2 {
                    let q2 = a + b + c;
                    w.push(if q2 == 0.0 { 0.5 * cutoff * cutoff } else { (1.0 - (cutoff * q2.sqrt()).cos()) / q2 });
                }
            }
        }
        w
    };

    let plan = Fft3::new(m);
    let mut buf = vec![Complex64::default(); m * m * m];
    let mut total = 0.0;
    for c in 0..f.components {
        let (fc, gc) = (f.component(c), g.component(c));
        if fc.iter().zip(gc).all(|(x, y)| x == y) {
            continue;
        }
        buf.iter_mut().for_each(|v| *v = Complex64::default());
        for i in 0..n {
            for j in 0..n {
                let src = (i * n + j) * n;
                let dst = (i * m + j) * m;
                for k in 0..n {
                    buf[dst + k] = Complex64::new(fc[src + k] - gc[src + k], 0.0);
                }
            }
        }
        plan.forward(&mut buf);
        total += buf.iter().zip(&weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>();
    }
    let h3 = spec.cell_volume();
    Ok((total * h3 * h3 / period.powi(3)).sqrt())
}
