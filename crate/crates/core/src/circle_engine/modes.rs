use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fourier-coefficient vector with `comps` components over the mode window `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVec {
    lo: i64,
    hi: i64,
    data: Vec<Vec<C64>>,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl ModeVec {
    pub fn zeros(comps: usize, lo: i64, hi: i64) -> Self {
        let len = (hi - lo + 1).max(0) as usize;
        Self { lo, hi, data: vec![vec![ZERO; len]; comps] }
    }

    pub fn basis(comps: usize, comp: usize, m: i64) -> Self {
        let mut v = Self::zeros(comps, m, m);
        v.data[comp][0] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_fn(comps: usize, lo: i64, hi: i64, f: impl Fn(usize, i64) -> C64) -> Self {
        let mut v = Self::zeros(comps, lo, hi);
        for c in 0..comps {
            for m in lo..=hi {
                v.data[c][(m - lo) as usize] = f(c, m);
            }
        }
        v
    }

    pub fn comps(&self) -> usize {
        self.data.len()
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn is_window_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn get(&self, comp: usize, m: i64) -> C64 {
        if m < self.lo || m > self.hi {
            ZERO
        } else {
            self.data[comp][(m - self.lo) as usize]
        }
    }

    pub fn component(&self, comp: usize) -> &[C64] {
        &self.data[comp]
    }

    pub fn component_vec(&self, comp: usize) -> ModeVec {
        Self { lo: self.lo, hi: self.hi, data: vec![self.data[comp].clone()] }
    }

    pub fn from_components(parts: Vec<ModeVec>) -> ModeVec {
        let lo = parts.iter().filter(|p| !p.is_window_empty()).map(|p| p.lo).min().unwrap_or(0);
        let hi = parts.iter().filter(|p| !p.is_window_empty()).map(|p| p.hi).max().unwrap_or(-1);
        ModeVec::from_fn(parts.len(), lo, hi, |c, m| parts[c].get(0, m))
    }

    fn zip_with(&self, other: &ModeVec, f: impl Fn(C64, C64) -> C64) -> ModeVec {
        let (lo, hi) = match (self.is_window_empty(), other.is_window_empty()) {
            (true, true) => (0, -1),
            (true, false) => (other.lo, other.hi),
            (false, true) => (self.lo, self.hi),
            (false, false) => (self.lo.min(other.lo), self.hi.max(other.hi)),
        };
        ModeVec::from_fn(self.comps(), lo, hi, |c, m| f(self.get(c, m), other.get(c, m)))
    }

    pub fn add(&self, other: &ModeVec) -> ModeVec {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ModeVec) -> ModeVec {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> ModeVec {
        Self { lo: self.lo, hi: self.hi, data: self.data.iter().map(|c| c.iter().map(|x| x * s).collect()).collect() }
    }

    /// Restriction to the mode window `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> ModeVec {
        let (nlo, nhi) = (self.lo.max(lo), self.hi.min(hi));
        ModeVec::from_fn(self.comps(), nlo, nhi, |c, m| self.get(c, m))
    }

    pub fn clip(&self, n: i64) -> ModeVec {
        self.restrict(-n, n)
    }

    /// Riesz projection onto modes `>= 0`.
    pub fn analytic_part(&self) -> ModeVec {
        self.restrict(0, i64::MAX)
    }

    /// Complementary projection onto modes `< 0`.
    pub fn coanalytic_part(&self) -> ModeVec {
        self.restrict(i64::MIN, -1)
    }

    /// `(Hx)_j = -i conj(x_{-j-1})`: the involution `e^{-i Theta} conj(phi)` on the unit circle.
    pub fn flip(&self) -> ModeVec {
        if self.is_window_empty() {
            return self.clone();
        }
        let minus_i = C64::new(0.0, -1.0);
        ModeVec::from_fn(self.comps(), -self.hi - 1, -self.lo - 1, |c, j| minus_i * self.get(c, -j - 1).conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ModeVec) -> f64 {
        self.sub(other).max_abs()
    }

    /// `sum_m <u_m, v_m>` with `v` conjugated.
    pub fn inner(&self, other: &ModeVec) -> C64 {
        let (lo, hi) = (self.lo.max(other.lo), self.hi.min(other.hi));
        (0..self.comps()).flat_map(|c| (lo..=hi).map(move |m| (c, m))).map(|(c, m)| self.get(c, m) * other.get(c, m).conj()).sum()
    }

    /// Smallest window containing all nonzero entries.
    pub fn support(&self) -> Option<(i64, i64)> {
        let nz = |m: i64| (0..self.comps()).any(|c| self.get(c, m) != ZERO);
        let lo = (self.lo..=self.hi).find(|&m| nz(m))?;
        let hi = (self.lo..=self.hi).rev().find(|&m| nz(m))?;
        Some((lo, hi))
    }

    /// Discrete convolution of component `comp` with coefficients `c` starting at mode `clo`.
    pub(crate) fn convolve_component(&self, comp: usize, clo: i64, c: &[C64]) -> ModeVec {
        if self.is_window_empty() || c.is_empty() {
            return ModeVec::zeros(1, 0, -1);
        }
        let x = &self.data[comp];
        let lo = self.lo + clo;
        let mut out = vec![ZERO; x.len() + c.len() - 1];
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for (k, ck) in c.iter().enumerate() {
                out[i + k] += xi * ck;
            }
        }
        let hi = lo + out.len() as i64 - 1;
        Self { lo, hi, data: vec![out] }
    }
}

/// `count` random vectors supported on modes `|m| <= half_width`, entries in the unit square.
pub fn margin_vectors(comps: usize, half_width: usize, count: usize, seed: u64) -> Vec<ModeVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = half_width as i64;
    (0..count)
        .map(|_| {
            let mut v = ModeVec::zeros(comps, -w, w);
            for c in 0..comps {
                for x in v.data[c].iter_mut() {
                    *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_is_an_exact_involution() {
        let x = ModeVec::from_fn(2, -3, 5, |c, m| C64::new(m as f64 + 0.25, c as f64 - 0.5 * m as f64));
        assert_eq!(x.flip().flip(), x);
    }

    #[test]
    fn flip_of_constant_is_minus_i_over_tau() {
        let one = ModeVec::basis(1, 0, 0);
        let h = one.flip();
        assert_eq!(h.window(), (-1, -1));
        assert_eq!(h.get(0, -1), C64::new(0.0, -1.0));
    }

    #[test]
    fn flip_is_antilinear() {
        let x = ModeVec::from_fn(1, -2, 2, |_, m| C64::new(1.0 + m as f64, 2.0));
        let a = C64::new(0.3, -1.7);
        assert!(x.scale(a).flip().max_abs_diff(&x.flip().scale(a.conj())) < 1e-15);
    }

    #[test]
    fn riesz_parts_split_the_vector() {
        let x = ModeVec::from_fn(1, -4, 4, |_, m| C64::new(m as f64, 1.0));
        assert_eq!(x.analytic_part().add(&x.coanalytic_part()), x);
        assert_eq!(x.analytic_part().window(), (0, 4));
    }
}
