//! Exact coefficient fields.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_PRIME: u64 = 32003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Prime { q: u64 },
    Rationals,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Prime { q: DEFAULT_PRIME }
    }
}

impl FieldSpec {
    /// Modulus reported in provenance headers; 0 stands for the rationals.
    pub fn modulus(&self) -> u64 {
        match self {
            FieldSpec::Prime { q } => *q,
            FieldSpec::Rationals => 0,
        }
    }
}

pub trait Field: Clone + Debug + PartialEq + Send + Sync + 'static {
    type Elem: Clone + Debug + PartialEq + Eq + Hash + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    fn spec(&self) -> FieldSpec;
    fn to_json(&self, a: &Self::Elem) -> serde_json::Value;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    /// `acc += a * b`
    fn mul_add(&self, acc: &mut Self::Elem, a: &Self::Elem, b: &Self::Elem) {
        *acc = self.add(acc, &self.mul(a, b));
    }
}

/// The prime field Z/qZ with q < 2^31.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    q: u64,
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Fp {
    pub fn new(q: u64) -> Result<Self> {
        if q >= 1 << 31 {
            return invalid(format!("modulus {q} exceeds 2^31"));
        }
        if !is_prime(q) {
            return invalid(format!("modulus {q} is not prime"));
        }
        Ok(Fp { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % self.q;
            }
            b = b * b % self.q;
            e >>= 1;
        }
        r
    }
}

impl Default for Fp {
    fn default() -> Self {
        Fp { q: DEFAULT_PRIME }
    }
}

impl Field for Fp {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.q as i64) as u64
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.q
    }
    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.q - a
        }
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            None
        } else {
            Some(self.pow(*a, self.q - 2))
        }
    }
    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }
    fn spec(&self) -> FieldSpec {
        FieldSpec::Prime { q: self.q }
    }
    fn to_json(&self, a: &u64) -> serde_json::Value {
        serde_json::Value::from(*a)
    }
    #[inline]
    fn mul_add(&self, acc: &mut u64, a: &u64, b: &u64) {
        *acc = (*acc + a * b) % self.q;
    }
}

/// Exact rational numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> BigRational {
        self.from_i64(rng.gen_range(-9..=9))
    }
    fn spec(&self) -> FieldSpec {
        FieldSpec::Rationals
    }
    fn to_json(&self, a: &BigRational) -> serde_json::Value {
        match a.is_integer().then(|| a.numer().to_i64()).flatten() {
            Some(v) => serde_json::Value::from(v),
            None => serde_json::Value::from(a.to_string()),
        }
    }
}
