use super::expr::apply_section;
use super::modes::{margin_vectors, ModeVec};
use super::{FourierTruncation, OpExpr};
use crate::numeric::composite_gauss;
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Excision half-angles `phi_0 / 2^k` used for extrapolation.
const LEVELS: usize = 6;
const PHI0: f64 = 0.2;

/// Principal value `(1/(pi i)) p.v. int f(tau) / (tau - t) dtau` over the unit circle.
///
/// The window `|tau - t| < R` is excised symmetrically, i.e. `|theta| < phi` with
/// `R = 2 sin(phi/2)`; the truncated integral has an error expansion in odd powers of
/// `phi`, which Richardson extrapolation removes. `panels` controls the Gauss rule on
/// the remaining arc.
pub fn cauchy_pv(f: impl Fn(C64) -> C64, t: C64, panels: usize) -> Result<C64> {
    if (t.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::PointOffCurve { re: t.re, im: t.im });
    }
    if panels == 0 {
        return Err(Error::Domain("quadrature needs at least one panel".into()));
    }
    let t = t / t.norm();
    let i = C64::new(0.0, 1.0);
    // f(t e^{i theta}) i e^{i theta} / (e^{i theta} - 1), paired with theta -> -theta
    let g = |theta: f64| {
        let e = C64::from_polar(1.0, theta);
        f(t * e) * i * e / (e - 1.0)
    };
    let truncated = |phi: f64| -> C64 {
        composite_gauss(phi, PI, panels, 16).into_iter().map(|(x, w)| (g(x) + g(-x)) * w).sum()
    };
    let mut table: Vec<Vec<C64>> = Vec::with_capacity(LEVELS);
    for k in 0..LEVELS {
        let mut row = vec![truncated(PHI0 / f64::powi(2.0, k as i32))];
        for j in 1..=k {
            let factor = f64::powi(2.0, 2 * j as i32 - 1);
            let better = (factor * row[j - 1] - table[k - 1][j - 1]) / (factor - 1.0);
            row.push(better);
        }
        table.push(row);
    }
    let best = table[LEVELS - 1][LEVELS - 1];
    let prev = table[LEVELS - 2][LEVELS - 2];
    let scale = best.norm().max(1.0);
    if !((best - prev).norm() <= 1e-8 * scale) {
        return Err(Error::NumericFailure(format!(
            "principal value did not converge: successive estimates differ by {:e}",
            (best - prev).norm()
        )));
    }
    Ok(best / (PI * i))
}

/// Applies the antilinear involution to a coefficient vector; the result is not clipped,
/// so applying it twice returns `x` exactly.
pub fn h_involution_apply(x: &ModeVec, trunc: &FourierTruncation) -> Result<ModeVec> {
    if x.comps() != trunc.block() {
        return Err(Error::SizeMismatch { expected: trunc.block(), found: x.comps() });
    }
    Ok(x.flip())
}

/// `max |<S_n x, y> + <x, H S_n H y>|` over a constant vector, single modes and random
/// vectors supported on `|m| <= n - 1`.
pub fn adjoint_residual(trunc: &FourierTruncation, seed: u64) -> Result<f64> {
    let n = trunc.n();
    let block = trunc.block();
    let s = OpExpr::s();
    let sn = |v: &ModeVec| apply_section(&s, v, n, 0);
    let side = |x: &ModeVec, y: &ModeVec| -> Result<f64> {
        let hy = h_involution_apply(y, trunc)?;
        let rhs = h_involution_apply(&sn(&hy)?, trunc)?;
        Ok((sn(x)?.inner(y) + x.inner(&rhs)).norm())
    };
    let mut pairs = vec![(ModeVec::basis(block, 0, 0), ModeVec::basis(block, 0, 0))];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = n as i64 - 1;
    for _ in 0..16 {
        let (cx, cy) = (rng.gen_range(0..block), rng.gen_range(0..block));
        let (mx, my) = (rng.gen_range(-w..=w), rng.gen_range(-w..=w));
        pairs.push((ModeVec::basis(block, cx, mx), ModeVec::basis(block, cy, my)));
        pairs.push((ModeVec::basis(block, cx, mx), ModeVec::basis(block, cx, mx)));
    }
    let xs = margin_vectors(block, n - 1, 8, seed.wrapping_add(1));
    let ys = margin_vectors(block, n - 1, 8, seed.wrapping_add(2));
    pairs.extend(xs.into_iter().zip(ys));
    pairs.iter().try_fold(0.0f64, |acc, (x, y)| Ok(acc.max(side(x, y)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::unit;

    fn trunc(n: usize) -> FourierTruncation {
        FourierTruncation::new(n, 1).unwrap()
    }

    #[test]
    fn principal_value_matches_the_fourier_multiplier() {
        let t = unit(0.0);
        let one = cauchy_pv(|_| C64::new(1.0, 0.0), t, 32).unwrap();
        assert!((one - 1.0).norm() < 1e-6);
        let t = unit(0.3);
        let tau = cauchy_pv(|z| z, t, 32).unwrap();
        assert!((tau - t).norm() < 1e-6);
        let inv = cauchy_pv(|z| 1.0 / z, t, 32).unwrap();
        assert!((inv + 1.0 / t).norm() < 1e-6);
    }

    #[test]
    fn principal_value_of_a_trig_polynomial() {
        // f = 2 tau^3 - tau^-2 + 0.5: S f = 2 tau^3 + tau^-2 + 0.5
        let f = |z: C64| 2.0 * z.powi(3) - z.powi(-2) + 0.5;
        let t = unit(0.71);
        let got = cauchy_pv(f, t, 64).unwrap();
        let want = 2.0 * t.powi(3) + t.powi(-2) + 0.5;
        assert!((got - want).norm() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn principal_value_rejects_points_off_the_circle() {
        assert!(matches!(cauchy_pv(|z| z, C64::new(0.5, 0.0), 8), Err(Error::PointOffCurve { .. })));
    }

    #[test]
    fn coarse_quadrature_reports_failure() {
        let f = |z: C64| z.powi(200);
        assert!(matches!(cauchy_pv(f, unit(0.1), 1), Err(Error::NumericFailure(_))));
    }

    #[test]
    fn involution_of_constant() {
        let h = h_involution_apply(&ModeVec::basis(1, 0, 0), &trunc(8)).unwrap();
        assert_eq!(h.get(0, -1), C64::new(0.0, -1.0));
        assert_eq!(h.support(), Some((-1, -1)));
        // pointwise oracle: e^{-i Theta} at tau = e^{i theta} is -i e^{-i theta}
        let theta = 0.7;
        let direct = C64::new(0.0, -1.0) * C64::from_polar(1.0, -theta);
        assert!((h.get(0, -1) * C64::from_polar(1.0, -theta) - direct).norm() < 1e-15);
    }

    #[test]
    fn involution_is_exact_and_antilinear() {
        let t = trunc(16);
        for x in margin_vectors(1, 16, 5, 9) {
            assert_eq!(h_involution_apply(&h_involution_apply(&x, &t).unwrap(), &t).unwrap(), x);
            let a = C64::new(-0.4, 2.5);
            assert_eq!(
                h_involution_apply(&x.scale(a), &t).unwrap(),
                h_involution_apply(&x, &t).unwrap().scale(a.conj())
            );
        }
    }

    #[test]
    fn adjoint_residual_vanishes() {
        for n in [8, 64, 128] {
            assert!(adjoint_residual(&trunc(n), 7).unwrap() <= 1e-12);
        }
        assert!(adjoint_residual(&FourierTruncation::new(16, 2).unwrap(), 3).unwrap() <= 1e-12);
    }
}
