//! Truncated Taylor series (jets) in one complex variable.
//!
//! `Jet { c }` stands for `c[0] + c[1] h + ... + c[N-1] h^{N-1}`, so the
//! coefficients are `f^{(k)}(center) / k!`.

use std::ops::{Add, Mul};

use num_complex::Complex64;

pub const ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [Complex64; ORDER],
}

impl Jet {
    pub fn constant(v: Complex64) -> Jet {
        let mut c = [Complex64::new(0.0, 0.0); ORDER];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `center`.
    pub fn variable(center: Complex64) -> Jet {
        let mut j = Jet::constant(center);
        j.c[1] = Complex64::new(1.0, 0.0);
        j
    }

    pub fn scale(self, s: f64) -> Jet {
        let mut out = self;
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn exp(self) -> Jet {
        let mut b = [Complex64::new(0.0, 0.0); ORDER];
        b[0] = self.c[0].exp();
        for k in 1..ORDER {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.c[j] * b[k - j] * j as f64;
            }
            b[k] = acc / k as f64;
        }
        Jet { c: b }
    }

    /// Principal logarithm; requires `c[0] ≠ 0`.
    pub fn ln(self) -> Jet {
        let a0 = self.c[0];
        let mut l = [Complex64::new(0.0, 0.0); ORDER];
        l[0] = a0.ln();
        for k in 1..ORDER {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..k {
                acc += l[j] * self.c[k - j] * j as f64;
            }
            l[k] = (self.c[k] - acc / k as f64) / a0;
        }
        Jet { c: l }
    }

    /// `self^q` through the principal logarithm.
    pub fn powf(self, q: f64) -> Jet {
        self.ln().scale(q).exp()
    }

    /// Evaluate the first `terms` coefficients at offset `h`.
    pub fn sum(&self, h: Complex64, terms: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..terms.min(ORDER)).rev() {
            acc = acc * h + self.c[k];
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut out = self;
        for (a, b) in out.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [Complex64::new(0.0, 0.0); ORDER];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in rhs.c.iter().take(ORDER - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet { c: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn double_exponential_derivatives_match_closed_form() {
        // d^k/dz^k exp(e^z) = B_k(u) exp(u), u = e^z, with Touchard polynomials B_k
        let z = Complex64::new(0.3, -0.7);
        let j = Jet::variable(z).exp().exp();
        let u = z.exp();
        let e = u.exp();
        let touchard = [
            Complex64::new(1.0, 0.0),
            u,
            u + u * u,
            u + 3.0 * u * u + u * u * u,
            u + 7.0 * u * u + 6.0 * u * u * u + u.powi(4),
        ];
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for k in 0..ORDER {
            assert!(close(j.c[k] * fact[k], touchard[k] * e, 1e-13), "k={k}");
        }
    }

    #[test]
    fn log_power_matches_finite_differences() {
        let z = Complex64::new(4.0, 1.5);
        let f = |w: Complex64| w.ln().powf(1.5);
        let j = Jet::variable(z).ln().powf(1.5);
        let h = 1e-4;
        let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
        let d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        assert!(close(j.c[0], f(z), 1e-14));
        assert!(close(j.c[1], d1, 1e-7));
        assert!(close(j.c[2] * 2.0, d2, 1e-5));
    }

    #[test]
    fn sum_reproduces_polynomial() {
        let p = Jet::variable(Complex64::new(1.0, 0.0)) * Jet::variable(Complex64::new(1.0, 0.0));
        // (1 + h)^2
        let h = Complex64::new(0.25, 0.5);
        assert!(close(p.sum(h, 3), (h + 1.0) * (h + 1.0), 1e-15));
    }
}
