//! Independent cosine oracle: dot products and norms accumulated in
//! double-double arithmetic (error-free products via FMA, error-free sums),
//! roughly 106 bits of working precision.

#[derive(Clone, Copy, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    fn add_product(&mut self, a: f64, b: f64) {
        let (p, p_err) = two_prod(a, b);
        let (s, s_err) = two_sum(self.hi, p);
        self.hi = s;
        self.lo += p_err + s_err;
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut dot = DoubleDouble::default();
    let mut na = DoubleDouble::default();
    let mut nb = DoubleDouble::default();
    for (&x, &y) in a.iter().zip(b) {
        dot.add_product(x, y);
        na.add_product(x, x);
        nb.add_product(y, y);
    }
    let (dot, na, nb) = (dot.to_f64(), na.to_f64(), nb.to_f64());
    assert!(na > 0.0 && nb > 0.0);
    dot / (na.sqrt() * nb.sqrt())
}
