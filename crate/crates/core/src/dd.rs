//! Error-free transformations and a compensated dot-product accumulator
//! (Ogita-Rump-Oishi "dot2"). The blended iteration locates fixed points
//! whose residual sits orders of magnitude below the magnitudes of the
//! intermediate products `A*Y`, so the residual assembly accumulates in
//! roughly twice the working precision.

/// Knuth two-sum: `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

const SPLIT: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLIT * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker two-product: `a * b = p + e` exactly (barring overflow).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Compensated accumulator for sums of products.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dot2 {
    sum: f64,
    comp: f64,
}

impl Dot2 {
    #[inline]
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
    }

    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.comp += e;
    }

    /// Rounded value of the accumulated sum.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Unevaluated (hi, lo) pair of the accumulated sum.
    #[inline]
    pub fn pair(&self) -> (f64, f64) {
        two_sum(self.sum, self.comp)
    }
}

/// Double-double value `hi + lo` with `|lo| <= ulp(hi)/2`, giving roughly
/// 32 significant digits. Only the operations the validation oracles need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl std::ops::Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        Dd::renorm(s, e + self.lo + other.lo)
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, other: Dd) -> Dd {
        self + (-other)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        Dd::renorm(p, e + self.hi * other.lo + self.lo * other.hi)
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self - other * Dd::from(q1);
        let q2 = r.hi / other.hi;
        let r2 = r - other * Dd::from(q2);
        let q3 = r2.hi / other.hi;
        Dd::renorm(q1, q2) + Dd::from(q3)
    }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Dd {
        let (h, l) = two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        // one Newton step from the double seed reaches dd accuracy
        let y = Dd::from(self.hi.sqrt());
        let half = Dd { hi: 0.5, lo: 0.0 };
        (y + self / y) * half
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// cos and sin by argument scaling (exact division by 64), a short
    /// Taylor series, and six double-angle steps. Adequate to ~1e-30 for
    /// arguments up to a few hundred.
    pub fn cos_sin(self) -> (Dd, Dd) {
        let scaled = Dd { hi: self.hi / 64.0, lo: self.lo / 64.0 };
        let x2 = scaled * scaled;
        // Taylor tails evaluated by Horner in x^2
        let terms = 16;
        let mut c_acc = Dd::ONE;
        let mut s_acc = Dd::ONE;
        for j in (1..=terms).rev() {
            let jf = 2.0 * j as f64;
            c_acc = Dd::ONE - x2 * c_acc / Dd::from(jf * (jf - 1.0));
            s_acc = Dd::ONE - x2 * s_acc / Dd::from(jf * (jf + 1.0));
        }
        let mut cos_t = c_acc;
        let mut sin_t = scaled * s_acc;
        for _ in 0..6 {
            // cos(2a) = 2 cos^2 - 1, sin(2a) = 2 sin cos
            let two = Dd::from(2.0);
            let new_cos = two * cos_t * cos_t - Dd::ONE;
            let new_sin = two * sin_t * cos_t;
            cos_t = new_cos;
            sin_t = new_sin;
        }
        (cos_t, sin_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn two_prod_recovers_rounding() {
        let a = 1.0 + f64::EPSILON;
        let b = 1.0 + f64::EPSILON;
        let (p, e) = two_prod(a, b);
        // a*b = 1 + 2eps + eps^2; the eps^2 term is the rounding error
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn dot2_cancellation() {
        // catastrophic cancellation handled to full precision
        let mut acc = Dot2::new();
        acc.add_prod(1e16, 1.0);
        acc.add_prod(1.0, 1.0);
        acc.add_prod(-1e16, 1.0);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn dd_division_and_sqrt() {
        let a = Dd::from(1.0) / Dd::from(3.0);
        let back = a * Dd::from(3.0);
        assert!((back.to_f64() - 1.0).abs() < 1e-30);
        assert!((back.lo + back.hi - 1.0).abs() < 1e-30);
        let r = Dd::from(2.0).sqrt();
        let sq = r * r;
        assert!(((sq - Dd::from(2.0)).to_f64()).abs() < 1e-30);
    }

    #[test]
    fn dd_trig_against_std() {
        for &x in &[0.1, 1.0, 5.0, 10.0, 60.0, 123.45] {
            let (c, s) = Dd::from(x).cos_sin();
            assert!((c.to_f64() - x.cos()).abs() <= 4.0 * f64::EPSILON, "cos({x})");
            assert!((s.to_f64() - x.sin()).abs() <= 4.0 * f64::EPSILON, "sin({x})");
            // Pythagorean identity at dd accuracy
            let one = c * c + s * s;
            assert!((one.to_f64() - 1.0).abs() < 1e-29);
            assert!((one - Dd::ONE).to_f64().abs() < 1e-29);
        }
    }
}
