//! Forward-mode dual numbers with a dynamically sized gradient.
//!
//! A [`Dual`] carries a value together with its partial derivatives with
//! respect to every seeded variable. An empty derivative vector stands for a
//! constant, so plain evaluation through the same code path costs no
//! allocation. Mixed operations between a seeded dual and a constant treat the
//! missing entries as zero.
//!
//! Only first derivatives are tracked; that is all a Poisson bracket needs.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: Vec<f64>,
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d.is_empty() {
            write!(f, "Dual({})", self.v)
        } else {
            write!(f, "Dual({}, {:?})", self.v, self.d)
        }
    }
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: Vec::new() }
    }

    /// Variable number `index` out of `len` seeded variables.
    pub fn variable(v: f64, index: usize, len: usize) -> Self {
        let mut d = vec![0.0; len];
        d[index] = 1.0;
        Dual { v, d }
    }

    pub fn zero() -> Self {
        Dual::constant(0.0)
    }

    pub fn one() -> Self {
        Dual::constant(1.0)
    }

    pub fn value(&self) -> f64 {
        self.v
    }

    pub fn is_constant(&self) -> bool {
        self.d.is_empty()
    }

    /// Partial derivative with respect to variable `i` (zero for constants).
    pub fn partial(&self, i: usize) -> f64 {
        self.d.get(i).copied().unwrap_or(0.0)
    }

    /// Gradient padded to `len` entries.
    pub fn gradient(&self, len: usize) -> Vec<f64> {
        let mut g = vec![0.0; len];
        for (slot, x) in g.iter_mut().zip(&self.d) {
            *slot = *x;
        }
        g
    }

    /// Applies a scalar function with known value `f` and derivative `df`
    /// at `self.v` (chain rule).
    pub fn chain(&self, f: f64, df: f64) -> Dual {
        Dual {
            v: f,
            d: self.d.iter().map(|x| x * df).collect(),
        }
    }

    pub fn sin(&self) -> Dual {
        self.chain(self.v.sin(), self.v.cos())
    }

    pub fn cos(&self) -> Dual {
        self.chain(self.v.cos(), -self.v.sin())
    }

    pub fn tan(&self) -> Dual {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }

    pub fn sqrt(&self) -> Dual {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn recip(&self) -> Dual {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }

    pub fn sq(&self) -> Dual {
        self.chain(self.v * self.v, 2.0 * self.v)
    }

    pub fn powi(&self, n: i32) -> Dual {
        if n == 0 {
            return Dual::one();
        }
        self.chain(self.v.powi(n), n as f64 * self.v.powi(n - 1))
    }

    pub fn abs(&self) -> Dual {
        if self.v < 0.0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Two-argument arctangent `atan2(self, x)` with branch (-pi, pi].
    pub fn atan2(&self, x: &Dual) -> Dual {
        let y = self;
        let r2 = y.v * y.v + x.v * x.v;
        let v = y.v.atan2(x.v);
        // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
        let d = zip_with(&y.d, &x.d, |dy, dx| (x.v * dy - y.v * dx) / r2);
        Dual { v, d }
    }

    pub fn scale(&self, c: f64) -> Dual {
        Dual {
            v: self.v * c,
            d: self.d.iter().map(|x| x * c).collect(),
        }
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    if a.is_empty() && b.is_empty() {
        return Vec::new();
    }
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| f(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
        .collect()
}

fn add_ref(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v + b.v,
        d: zip_with(&a.d, &b.d, |x, y| x + y),
    }
}

fn sub_ref(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v - b.v,
        d: zip_with(&a.d, &b.d, |x, y| x - y),
    }
}

fn mul_ref(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v * b.v,
        d: zip_with(&a.d, &b.d, |x, y| x * b.v + a.v * y),
    }
}

fn div_ref(a: &Dual, b: &Dual) -> Dual {
    let inv = 1.0 / b.v;
    let v = a.v * inv;
    Dual {
        v,
        d: zip_with(&a.d, &b.d, |x, y| (x - v * y) * inv),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl $trait<Dual> for Dual {
            type Output = Dual;
            fn $method(self, rhs: Dual) -> Dual {
                $f(&self, &rhs)
            }
        }
        impl $trait<&Dual> for Dual {
            type Output = Dual;
            fn $method(self, rhs: &Dual) -> Dual {
                $f(&self, rhs)
            }
        }
        impl $trait<Dual> for &Dual {
            type Output = Dual;
            fn $method(self, rhs: Dual) -> Dual {
                $f(self, &rhs)
            }
        }
        impl $trait<&Dual> for &Dual {
            type Output = Dual;
            fn $method(self, rhs: &Dual) -> Dual {
                $f(self, rhs)
            }
        }
        impl $trait<f64> for Dual {
            type Output = Dual;
            fn $method(self, rhs: f64) -> Dual {
                $f(&self, &Dual::constant(rhs))
            }
        }
        impl $trait<f64> for &Dual {
            type Output = Dual;
            fn $method(self, rhs: f64) -> Dual {
                $f(self, &Dual::constant(rhs))
            }
        }
        impl $trait<Dual> for f64 {
            type Output = Dual;
            fn $method(self, rhs: Dual) -> Dual {
                $f(&Dual::constant(self), &rhs)
            }
        }
        impl $trait<&Dual> for f64 {
            type Output = Dual;
            fn $method(self, rhs: &Dual) -> Dual {
                $f(&Dual::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);
binop!(Div, div, div_ref);

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl AddAssign<&Dual> for Dual {
    fn add_assign(&mut self, rhs: &Dual) {
        *self = add_ref(self, rhs);
    }
}

impl AddAssign<Dual> for Dual {
    fn add_assign(&mut self, rhs: Dual) {
        *self = add_ref(self, &rhs);
    }
}

impl SubAssign<Dual> for Dual {
    fn sub_assign(&mut self, rhs: Dual) {
        *self = sub_ref(self, &rhs);
    }
}

impl MulAssign<&Dual> for Dual {
    fn mul_assign(&mut self, rhs: &Dual) {
        *self = mul_ref(self, rhs);
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl std::iter::Sum for Dual {
    fn sum<I: Iterator<Item = Dual>>(iter: I) -> Dual {
        iter.fold(Dual::zero(), |acc, x| acc + x)
    }
}

/// Lifts a slice of plain values to constants.
pub fn constants(xs: &[f64]) -> Vec<Dual> {
    xs.iter().copied().map(Dual::constant).collect()
}

/// Seeds `q` and `p` as the `2 * dim` independent variables of a phase point,
/// positions first.
pub fn seed_phase(q: &[f64], p: &[f64]) -> (Vec<Dual>, Vec<Dual>) {
    let n = q.len() + p.len();
    let qs = q.iter().enumerate().map(|(i, &v)| Dual::variable(v, i, n)).collect();
    let ps = p
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual::variable(v, q.len() + i, n))
        .collect();
    (qs, ps)
}

pub fn values(xs: &[Dual]) -> Vec<f64> {
    xs.iter().map(|x| x.v).collect()
}
