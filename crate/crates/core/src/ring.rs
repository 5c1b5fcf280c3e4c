//! Elements of the truncated ring A_{n,p} = k[x,z]/(x^p, z^n) and presentation matrices.

use serde_json::{json, Value};

use crate::error::{invalid, precision, Result};
use crate::field::Field;

/// A dense element of A_{n,p}; the coefficient of x^a z^b sits at index `a * n + b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElem<E> {
    n: usize,
    p: usize,
    coeffs: Vec<E>,
}

impl<E: Clone + PartialEq> RingElem<E> {
    pub fn zero<F: Field<Elem = E>>(f: &F, n: usize, p: usize) -> Self {
        RingElem {
            n,
            p,
            coeffs: vec![f.zero(); n * p],
        }
    }

    pub fn one<F: Field<Elem = E>>(f: &F, n: usize, p: usize) -> Self {
        Self::monomial(f, n, p, f.one(), 0, 0)
    }

    /// `c x^a z^b`; vanishes when z^b = 0, but x^a must fit the precision.
    pub fn monomial<F: Field<Elem = E>>(
        f: &F,
        n: usize,
        p: usize,
        c: E,
        a: usize,
        b: usize,
    ) -> Self {
        let mut r = Self::zero(f, n, p);
        if a < p && b < n {
            r.coeffs[a * n + b] = c;
        }
        r
    }

    /// Builds an element from integer terms `(c, a, b)` meaning `c x^a z^b`.
    /// Terms with `b >= n` vanish; terms with `a >= p` are rejected because they
    /// would not survive a change of precision.
    pub fn from_terms<F: Field<Elem = E>>(
        f: &F,
        n: usize,
        p: usize,
        terms: &[(i64, usize, usize)],
    ) -> Result<Self> {
        let mut r = Self::zero(f, n, p);
        for &(c, a, b) in terms {
            if b >= n {
                continue;
            }
            if a >= p {
                return precision(format!("term x^{a} does not fit precision {p}"));
            }
            let i = a * n + b;
            r.coeffs[i] = f.add(&r.coeffs[i], &f.from_i64(c));
        }
        Ok(r)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coeff(&self, a: usize, b: usize) -> &E {
        &self.coeffs[a * self.n + b]
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    /// Nonzero terms as `(a, b, c)`.
    pub fn terms<'a, F: Field<Elem = E>>(
        &'a self,
        f: &'a F,
    ) -> impl Iterator<Item = (usize, usize, &'a E)> + 'a {
        let n = self.n;
        self.coeffs
            .iter()
            .enumerate()
            .filter(move |(_, c)| !f.is_zero(c))
            .map(move |(i, c)| (i / n, i % n, c))
    }

    pub fn is_zero<F: Field<Elem = E>>(&self, f: &F) -> bool {
        self.coeffs.iter().all(|c| f.is_zero(c))
    }

    /// Largest x-exponent carrying a nonzero coefficient.
    pub fn x_degree<F: Field<Elem = E>>(&self, f: &F) -> Option<usize> {
        self.terms(f).map(|(a, _, _)| a).max()
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(
            (self.n, self.p),
            (other.n, other.p),
            "ring elements from different rings"
        );
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        self.check_same(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| f.add(a, b))
            .collect();
        RingElem {
            n: self.n,
            p: self.p,
            coeffs,
        }
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        self.check_same(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| f.sub(a, b))
            .collect();
        RingElem {
            n: self.n,
            p: self.p,
            coeffs,
        }
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        RingElem {
            n: self.n,
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| f.neg(a)).collect(),
        }
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, c: &E) -> Self {
        RingElem {
            n: self.n,
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| f.mul(a, c)).collect(),
        }
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        self.check_same(other);
        let (n, p) = (self.n, self.p);
        let mut out = Self::zero(f, n, p);
        for (a1, b1, c1) in self.terms(f) {
            for (a2, b2, c2) in other.terms(f) {
                if a1 + a2 < p && b1 + b2 < n {
                    let i = (a1 + a2) * n + b1 + b2;
                    f.mul_add(&mut out.coeffs[i], c1, c2);
                }
            }
        }
        out
    }

    /// Re-reads the element at precision `p2`, viewing it as a polynomial.
    /// Fails if a nonzero term would be cut off.
    pub fn lift<F: Field<Elem = E>>(&self, f: &F, p2: usize) -> Result<Self> {
        let mut out = Self::zero(f, self.n, p2);
        for (a, b, c) in self.terms(f) {
            if a >= p2 {
                return precision(format!("term x^{a} does not fit precision {p2}"));
            }
            out.coeffs[a * self.n + b] = c.clone();
        }
        Ok(out)
    }

    pub fn to_json<F: Field<Elem = E>>(&self, f: &F) -> Value {
        Value::Array(
            self.terms(f)
                .map(|(a, b, c)| json!([f.to_json(c), a, b]))
                .collect(),
        )
    }
}

/// Generators and relations; each relation is a column of `rows` ring elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationMatrix<E> {
    n: usize,
    p: usize,
    rows: usize,
    relations: Vec<Vec<RingElem<E>>>,
}

impl<E: Clone + PartialEq> PresentationMatrix<E> {
    pub fn new(n: usize, p: usize, rows: usize, relations: Vec<Vec<RingElem<E>>>) -> Result<Self> {
        if n == 0 || p == 0 {
            return invalid("n and p must be at least 1");
        }
        for (k, rel) in relations.iter().enumerate() {
            if rel.len() != rows {
                return invalid(format!(
                    "relation {k} has {} entries, expected {rows}",
                    rel.len()
                ));
            }
            if rel.iter().any(|e| e.n != n || e.p != p) {
                return invalid(format!("relation {k} lives in a different ring"));
            }
        }
        Ok(PresentationMatrix {
            n,
            p,
            rows,
            relations,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn relations(&self) -> &[Vec<RingElem<E>>] {
        &self.relations
    }

    pub fn lift<F: Field<Elem = E>>(&self, f: &F, p2: usize) -> Result<Self> {
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.iter()
                    .map(|e| e.lift(f, p2))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PresentationMatrix {
            n: self.n,
            p: p2,
            rows: self.rows,
            relations,
        })
    }

    pub fn to_json<F: Field<Elem = E>>(&self, f: &F) -> Value {
        json!({
            "n": self.n,
            "p": self.p,
            "q": f.spec().modulus(),
            "rows": self.rows,
            "relations": self
                .relations
                .iter()
                .map(|rel| Value::Array(rel.iter().map(|e| e.to_json(f)).collect()))
                .collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;

    #[test]
    fn multiplication_truncates() {
        let f = Fp::default();
        let x = RingElem::monomial(&f, 2, 3, 1, 1, 0);
        let z = RingElem::monomial(&f, 2, 3, 1, 0, 1);
        let x2 = x.mul(&f, &x);
        assert_eq!(*x2.coeff(2, 0), 1);
        assert!(x2.mul(&f, &x).is_zero(&f));
        assert!(z.mul(&f, &z).is_zero(&f));
        assert_eq!(*x.mul(&f, &z).coeff(1, 1), 1);
    }

    #[test]
    fn lift_preserves_terms_and_rejects_cuts() {
        let f = Fp::default();
        let e = RingElem::from_terms(&f, 2, 4, &[(3, 3, 1), (-1, 0, 0)]).unwrap();
        let up = e.lift(&f, 8).unwrap();
        assert_eq!(*up.coeff(3, 1), 3);
        assert_eq!(*up.coeff(0, 0), f.from_i64(-1));
        assert!(e.lift(&f, 3).is_err());
        assert!(RingElem::from_terms(&f, 2, 4, &[(1, 4, 0)]).is_err());
    }
}
