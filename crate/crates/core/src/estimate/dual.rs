//! Forward-mode derivatives in four directions, enough for `(c, mu, lambda, rho)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; 4],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 4] }
    }

    pub fn from_parts(p: [f64; 4]) -> Self {
        Self {
            v: p[0],
            d: [p[1], p[2], p[3], 0.0],
        }
    }

    pub fn variable(v: f64, slot: usize) -> Self {
        let mut d = [0.0; 4];
        d[slot] = 1.0;
        Self { v, d }
    }

    fn map(self, v: f64, dv: f64) -> Self {
        Self {
            v,
            d: self.d.map(|x| x * dv),
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }

    pub fn ln(self) -> Self {
        self.map(self.v.ln(), 1.0 / self.v)
    }

    /// `1 - exp(-x)`.
    pub fn one_minus_exp_neg(self) -> Self {
        self.map(-(-self.v).exp_m1(), (-self.v).exp())
    }

    pub fn scale(self, k: f64) -> Self {
        self.map(self.v * k, k)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        let d = std::array::from_fn(|i| self.d[i] + o.d[i]);
        Dual { v: self.v + o.v, d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        self + (-o)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Dual) -> Dual {
        let d = std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]);
        Dual { v: self.v * o.v, d }
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}
