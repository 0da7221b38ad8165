//! Finite fields F_q with q = p^e.
//!
//! Elements are integer codes in `[0, q)`. For prime fields the code is the
//! residue mod p. For extension fields the code is the base-p number whose
//! digits are the polynomial coefficients, least significant first, so the
//! code of `c_0 + c_1 x + ... + c_{e-1} x^{e-1}` is `c_0 + c_1 p + ...`.
//!
//! Every field of order at most [`TABLE_LIMIT`] carries precomputed
//! addition, subtraction, multiplication, negation and inverse tables.
//! Larger prime fields fall back to modular arithmetic.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Element code.
pub type Elem = u32;

/// Largest order for which operation tables are built.
pub const TABLE_LIMIT: u64 = 256;

/// Largest supported prime characteristic (products must fit in 32 bits).
pub const MAX_PRIME: u64 = 65_521;

#[derive(Clone)]
struct Tables {
    add: Vec<Elem>,
    sub: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
}

/// The field F_q.
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    e: u32,
    q: u32,
    /// Monic modulus, little-endian, `e + 1` coefficients. Empty for prime fields.
    modulus: Vec<Elem>,
    tables: Option<Tables>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e == 1 {
            write!(f, "F_{}", self.q)
        } else {
            write!(f, "F_{} (mod {:?})", self.q, self.modulus)
        }
    }
}

/// Summary of a field for reports.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub p: u32,
    pub e: u32,
    pub q: u32,
    pub modulus: Vec<Elem>,
    pub odd: bool,
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Default irreducible moduli, little-endian.
fn default_modulus(p: u32, e: u32) -> Option<Vec<Elem>> {
    match (p, e) {
        (2, 2) => Some(vec![1, 1, 1]),    // x^2 + x + 1
        (2, 3) => Some(vec![1, 1, 0, 1]), // x^3 + x + 1
        (3, 2) => Some(vec![1, 0, 1]),    // x^2 + 1
        _ => None,
    }
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Remainder of `num` divided by the monic-or-not `den` over F_p. Both little-endian.
fn poly_rem(num: &[u32], den: &[u32], p: u32) -> Vec<u32> {
    let p64 = p as u64;
    let mut r: Vec<u32> = num.to_vec();
    let dd = den.len() - 1;
    let lead_inv = pow_mod(den[dd] as u64, p64 - 2, p64);
    while r.len() > dd {
        let top = *r.last().unwrap() as u64;
        if top != 0 {
            let factor = top * lead_inv % p64;
            let shift = r.len() - 1 - dd;
            for (i, &c) in den.iter().enumerate() {
                let sub = factor * c as u64 % p64;
                let cur = r[shift + i] as u64;
                r[shift + i] = ((cur + p64 - sub) % p64) as u32;
            }
        }
        r.pop();
    }
    r
}

/// True when `poly` (degree >= 1, little-endian) has no factor of degree
/// 1..=deg/2 over F_p. Exhaustive over monic candidates.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly.len() - 1;
    for cand_deg in 1..=deg / 2 {
        let count = (p as u64).pow(cand_deg as u32);
        for code in 0..count {
            let mut cand = Vec::with_capacity(cand_deg + 1);
            let mut c = code;
            for _ in 0..cand_deg {
                cand.push((c % p as u64) as u32);
                c /= p as u64;
            }
            cand.push(1);
            if poly_rem(poly, &cand, p).iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// Builds F_{p^e}. For `e > 1` the modulus is either `poly` (little-endian,
    /// exactly `e + 1` coefficients in `[0, p)`, nonzero leading coefficient)
    /// or, when omitted, the built-in default for q in {4, 8, 9}.
    pub fn new(p: u64, e: u32, poly: Option<&[u32]>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NonPrimeP(p));
        }
        if p > MAX_PRIME {
            return Err(Error::FieldTooLarge(p));
        }
        if e == 0 {
            return Err(Error::Config("extension degree must be at least 1".into()));
        }
        let q = p
            .checked_pow(e)
            .filter(|&q| e == 1 || q <= TABLE_LIMIT)
            .ok_or(Error::FieldTooLarge(p.saturating_pow(e)))?;
        let p32 = p as u32;
        let modulus = if e == 1 {
            if poly.is_some() {
                return Err(Error::InvalidPolynomial(
                    "a prime field takes no modulus".into(),
                ));
            }
            Vec::new()
        } else {
            let raw = match poly {
                Some(poly) => poly.to_vec(),
                None => default_modulus(p32, e).ok_or(Error::UnsupportedExtension(q))?,
            };
            if raw.len() != e as usize + 1 {
                return Err(Error::InvalidPolynomial(format!(
                    "expected {} coefficients, got {}",
                    e + 1,
                    raw.len()
                )));
            }
            if raw.iter().any(|&c| c >= p32) {
                return Err(Error::InvalidPolynomial(format!(
                    "coefficients must lie in [0, {p})"
                )));
            }
            let lead = raw[e as usize];
            if lead == 0 {
                return Err(Error::InvalidPolynomial("leading coefficient is zero".into()));
            }
            let lead_inv = pow_mod(lead as u64, p - 2, p) as u32;
            let monic: Vec<u32> = raw
                .iter()
                .map(|&c| (c as u64 * lead_inv as u64 % p) as u32)
                .collect();
            if !is_irreducible(&monic, p32) {
                return Err(Error::ReduciblePolynomial(raw, p32));
            }
            monic
        };
        let mut field = FieldSpec {
            p: p32,
            e,
            q: q as u32,
            modulus,
            tables: None,
        };
        if q <= TABLE_LIMIT {
            field.tables = Some(field.build_tables());
        }
        Ok(field)
    }

    /// F_p for a prime p.
    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1, None)
    }

    /// Builds the field of order `q`, factoring `q = p^e` and using the
    /// default modulus when `e > 1`.
    pub fn with_order(q: u64, poly: Option<&[u32]>) -> Result<Self> {
        if q < 2 {
            return Err(Error::NotPrimePower(q));
        }
        let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
        let mut rest = q;
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        if rest != 1 {
            return Err(Error::NotPrimePower(q));
        }
        Self::new(p, e, poly)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// True for odd characteristic, the setting the incidence theorems assume.
    pub fn is_odd(&self) -> bool {
        self.p != 2
    }

    pub fn modulus(&self) -> &[Elem] {
        &self.modulus
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            p: self.p,
            e: self.e,
            q: self.q,
            modulus: self.modulus.clone(),
            odd: self.is_odd(),
        }
    }

    /// Iterator over all element codes.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q
    }

    fn build_tables(&self) -> Tables {
        let q = self.q as usize;
        let mut add = vec![0; q * q];
        let mut sub = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                add[a * q + b] = self.slow_add(a as Elem, b as Elem);
                sub[a * q + b] = self.slow_sub(a as Elem, b as Elem);
                mul[a * q + b] = self.slow_mul(a as Elem, b as Elem);
            }
        }
        // Row 0 of the subtraction table is 0 - a.
        let neg = sub[..q].to_vec();
        let mut inv = vec![0; q];
        for a in 1..q {
            inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).unwrap_or(0) as Elem;
        }
        Tables { add, sub, mul, neg, inv }
    }

    fn digits(&self, a: Elem) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.e as usize);
        let mut a = a;
        for _ in 0..self.e {
            out.push(a % self.p);
            a /= self.p;
        }
        out
    }

    fn pack_digits(&self, digits: &[u32]) -> Elem {
        digits.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    fn slow_add(&self, a: Elem, b: Elem) -> Elem {
        if self.e == 1 {
            return ((a as u64 + b as u64) % self.p as u64) as Elem;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.pack_digits(&sum)
    }

    fn slow_sub(&self, a: Elem, b: Elem) -> Elem {
        if self.e == 1 {
            let p = self.p as u64;
            return ((a as u64 + p - b as u64) % p) as Elem;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let diff: Vec<u32> = da
            .iter()
            .zip(&db)
            .map(|(x, y)| (x + self.p - y) % self.p)
            .collect();
        self.pack_digits(&diff)
    }

    fn slow_mul(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p as u64;
        if self.e == 1 {
            return (a as u64 * b as u64 % p) as Elem;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0u32; 2 * self.e as usize - 1];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p) as u32;
            }
        }
        let mut rem = poly_rem(&prod, &self.modulus, self.p);
        rem.resize(self.e as usize, 0);
        self.pack_digits(&rem)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        match &self.tables {
            Some(t) => t.add[(a * self.q + b) as usize],
            None => self.slow_add(a, b),
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        match &self.tables {
            Some(t) => t.sub[(a * self.q + b) as usize],
            None => self.slow_sub(a, b),
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &self.tables {
            Some(t) => t.mul[(a * self.q + b) as usize],
            None => self.slow_mul(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        match &self.tables {
            Some(t) => t.neg[a as usize],
            None => self.slow_sub(0, a),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Elem) -> Option<Elem> {
        if a == 0 {
            return None;
        }
        match &self.tables {
            Some(t) => Some(t.inv[a as usize]),
            None => Some(pow_mod(a as u64, self.p as u64 - 2, self.p as u64) as Elem),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_field_axioms(f: &FieldSpec) {
        let q = f.order();
        for a in 0..q {
            assert_eq!(f.add(a, 0), a);
            assert_eq!(f.mul(a, 1), a);
            assert_eq!(f.add(a, f.neg(a)), 0);
            assert_eq!(f.sub(a, a), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "{f:?} inverse of {a}");
            }
            for b in 0..q {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
                for c in 0..q {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }

    #[test]
    fn axioms_hold_for_every_small_order() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 11, 13] {
            assert_field_axioms(&FieldSpec::with_order(q, None).unwrap());
        }
        // q = 16 needs an explicit modulus: x^4 + x + 1.
        assert_field_axioms(&FieldSpec::new(2, 4, Some(&[1, 1, 0, 0, 1])).unwrap());
    }

    #[test]
    fn f3_inverse_of_two_is_two() {
        let f = FieldSpec::prime(3).unwrap();
        assert_eq!(f.inv(2), Some(2));
        assert_eq!(f.inv(0), None);
    }

    #[test]
    fn f9_every_nonzero_element_is_invertible() {
        let f = FieldSpec::new(3, 2, None).unwrap();
        assert_eq!(f.order(), 9);
        let invertible = (1..9).filter(|&a| (1..9).any(|b| f.mul(a, b) == 1)).count();
        assert_eq!(invertible, 8);
    }

    #[test]
    fn composite_characteristic_is_rejected() {
        assert_eq!(FieldSpec::new(4, 1, None), Err(Error::NonPrimeP(4)));
        assert_eq!(FieldSpec::with_order(6, None), Err(Error::NotPrimePower(6)));
    }

    #[test]
    fn extension_without_default_needs_a_polynomial() {
        assert_eq!(
            FieldSpec::new(5, 2, None),
            Err(Error::UnsupportedExtension(25))
        );
        // x^2 + 2 is irreducible over F_5: -2 = 3 is a non-residue.
        assert!(FieldSpec::new(5, 2, Some(&[2, 0, 1])).is_ok());
    }

    #[test]
    fn reducible_modulus_is_rejected() {
        // x^2 + 2x + 1 = (x + 1)^2 over F_3.
        assert!(matches!(
            FieldSpec::new(3, 2, Some(&[1, 2, 1])),
            Err(Error::ReduciblePolynomial(..))
        ));
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2 over F_2: no roots, but a quadratic factor.
        assert!(matches!(
            FieldSpec::new(2, 4, Some(&[1, 0, 1, 0, 1])),
            Err(Error::ReduciblePolynomial(..))
        ));
    }

    #[test]
    fn large_prime_uses_modular_fallback() {
        let f = FieldSpec::prime(257).unwrap();
        assert_eq!(f.mul(256, 256), 1);
        assert_eq!(f.mul(3, f.inv(3).unwrap()), 1);
        assert_eq!(f.neg(1), 256);
    }
}
