//! Position-space (potential) factors of the split-operator step.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::surfaces::CoefficientFields;

/// `exp(−i·dt·[(S + V)·I + W·σx + G·σz])` on the `(|π1⟩, |π2⟩)` basis.
///
/// With `Ω = sqrt(W² + G²)` and `θ = Ω·dt` this is the phase
/// `exp(−i(S + V)dt)` times `cos θ·I − i·sin θ·(W·σx + G·σz)/Ω`; the bracket
/// is the identity when `Ω = 0`.
pub fn spin_propagator(s: f64, v: f64, w: f64, g: f64, dt: f64) -> [[C64; 2]; 2] {
    let phase = C64::from_polar(1.0, -(s + v) * dt);
    let omega = w.hypot(g);
    let (c, sw, sg) = if omega == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        let th = omega * dt;
        let sn = th.sin() / omega;
        (th.cos(), sn * w, sn * g)
    };
    let i = C64::i();
    [
        [phase * (c - i * sg), phase * (-i * sw)],
        [phase * (-i * sw), phase * (c + i * sg)],
    ]
}

/// Pointwise potential factor applied between kinetic half steps.
pub trait LocalOperator<const N: usize> {
    /// Applies the factor for one step. `row_phase[i]` carries the control
    /// phase for row `qx[i]`. With `reverse` the exact inverse is applied.
    fn apply(&self, comps: &mut [Array2<C64>; N], row_phase: &[C64], reverse: bool);
}

/// Precomputed `exp(−iS dt)·R` for the two-surface model; the control phase
/// is supplied per step.
pub struct SpinorLocal {
    m11: Array2<C64>,
    m12: Array2<C64>,
    m22: Array2<C64>,
}

impl SpinorLocal {
    pub fn new(coeffs: &CoefficientFields, dt: f64) -> Self {
        let shape = coeffs.s.dim();
        let mut m11 = Array2::zeros(shape);
        let mut m12 = Array2::zeros(shape);
        let mut m22 = Array2::zeros(shape);
        for ((idx, s), (w, g)) in coeffs
            .s
            .indexed_iter()
            .zip(coeffs.w.iter().zip(coeffs.g.iter()))
        {
            let m = spin_propagator(*s, 0.0, *w, *g, dt);
            m11[idx] = m[0][0];
            m12[idx] = m[0][1];
            m22[idx] = m[1][1];
        }
        SpinorLocal { m11, m12, m22 }
    }
}

impl LocalOperator<2> for SpinorLocal {
    fn apply(&self, comps: &mut [Array2<C64>; 2], row_phase: &[C64], reverse: bool) {
        let [a, b] = comps;
        let nz = a.dim().1;
        let (a, b) = (a.as_slice_mut().unwrap(), b.as_slice_mut().unwrap());
        let (m11, m12, m22) = (
            self.m11.as_slice().unwrap(),
            self.m12.as_slice().unwrap(),
            self.m22.as_slice().unwrap(),
        );
        for (i, &rp) in row_phase.iter().enumerate() {
            let r = i * nz..(i + 1) * nz;
            let rows = a[r.clone()]
                .iter_mut()
                .zip(b[r.clone()].iter_mut())
                .zip(m11[r.clone()].iter().zip(&m12[r.clone()]).zip(&m22[r]));
            if reverse {
                let rp = rp.conj();
                for ((x, y), ((p, q), s)) in rows {
                    let (x0, y0) = (*x, *y);
                    *x = rp * (p.conj() * x0 + q.conj() * y0);
                    *y = rp * (q.conj() * x0 + s.conj() * y0);
                }
            } else {
                for ((x, y), ((p, q), s)) in rows {
                    let (x0, y0) = (*x, *y);
                    *x = rp * (p * x0 + q * y0);
                    *y = rp * (q * x0 + s * y0);
                }
            }
        }
    }
}

/// `exp(−iV dt)` for a single surface.
pub struct ScalarLocal {
    phase: Array2<C64>,
}

impl ScalarLocal {
    pub fn new(potential: &Array2<f64>, dt: f64) -> Self {
        ScalarLocal {
            phase: potential.mapv(|v| C64::from_polar(1.0, -v * dt)),
        }
    }
}

impl LocalOperator<1> for ScalarLocal {
    fn apply(&self, comps: &mut [Array2<C64>; 1], row_phase: &[C64], reverse: bool) {
        let a = comps[0].as_slice_mut().unwrap();
        let nz = self.phase.dim().1;
        let ph = self.phase.as_slice().unwrap();
        for (i, &rp) in row_phase.iter().enumerate() {
            let r = i * nz..(i + 1) * nz;
            if reverse {
                let rp = rp.conj();
                for (x, p) in a[r.clone()].iter_mut().zip(&ph[r]) {
                    *x *= rp * p.conj();
                }
            } else {
                for (x, p) in a[r.clone()].iter_mut().zip(&ph[r]) {
                    *x *= rp * p;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_without_potential() {
        let m = spin_propagator(0.0, 0.0, 0.0, 0.0, 0.37);
        assert_eq!(m[0][0], C64::new(1.0, 0.0));
        assert_eq!(m[0][1], C64::new(0.0, 0.0));
        assert_eq!(m[1][1], C64::new(1.0, 0.0));
    }

    #[test]
    fn quarter_rotation_swaps() {
        let dt = 0.25;
        let w = std::f64::consts::FRAC_PI_2 / dt;
        let m = spin_propagator(0.0, 0.0, w, 0.0, dt);
        assert!(m[0][0].norm() < 1e-15);
        assert!((m[1][0] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
