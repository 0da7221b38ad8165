//! Index-level arithmetic in M_n(F_q).
//!
//! The digraph and counting loops never touch [`MatFq`](crate::MatFq)
//! values; they move matrix indices around. `MatrixRing` answers sums,
//! differences, products and ranks of indices, from lookup tables when the
//! ring is small and by decode/compute/encode otherwise.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec};
use crate::matrix::{decode_into, encode, mul_into, rank_in_place, space_size, MatFq};

/// Largest number of entries in any matrix handled on the stack.
pub(crate) const MAX_ENTRIES: usize = 64;

/// Rings with at most this many elements keep decoded entries and ranks.
const DECODE_LIMIT: u64 = 1 << 16;

/// Rings with at most this many element pairs keep operation tables.
const PAIR_TABLE_LIMIT: u64 = 1 << 22;

struct PairTables {
    add: Vec<u32>,
    sub: Vec<u32>,
    mul: Vec<u32>,
}

/// M_n(F_q) with matrices addressed by index.
pub struct MatrixRing {
    field: Arc<FieldSpec>,
    n: usize,
    count: u64,
    decoded: Option<Vec<Elem>>,
    ranks: Option<Vec<u8>>,
    pairs: Option<PairTables>,
}

impl std::fmt::Debug for MatrixRing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M_{}({:?})", self.n, self.field)
    }
}

impl MatrixRing {
    pub fn new(field: &Arc<FieldSpec>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("matrix size n must be at least 1".into()));
        }
        let count = space_size(field.order(), n * n)
            .filter(|_| n * n <= MAX_ENTRIES)
            .ok_or_else(|| Error::Config(format!("M_{n}(F_{}) is too large", field.order())))?;
        let mut ring = MatrixRing {
            field: Arc::clone(field),
            n,
            count,
            decoded: None,
            ranks: None,
            pairs: None,
        };
        let nn = n * n;
        if count <= DECODE_LIMIT {
            let mut decoded = vec![0; count as usize * nn];
            for (i, chunk) in decoded.chunks_mut(nn).enumerate() {
                decode_into(field.order(), i as u64, chunk);
            }
            let ranks = decoded
                .chunks(nn)
                .map(|c| {
                    let mut buf = c.to_vec();
                    rank_in_place(field, &mut buf, n, n) as u8
                })
                .collect();
            ring.decoded = Some(decoded);
            ring.ranks = Some(ranks);
        }
        if count.saturating_mul(count) <= PAIR_TABLE_LIMIT {
            let c = count as usize;
            let mut add = vec![0; c * c];
            let mut sub = vec![0; c * c];
            let mut mul = vec![0; c * c];
            for a in 0..c {
                for b in 0..c {
                    add[a * c + b] = ring.slow_add(a as u64, b as u64) as u32;
                    sub[a * c + b] = ring.slow_sub(a as u64, b as u64) as u32;
                    mul[a * c + b] = ring.slow_mul(a as u64, b as u64) as u32;
                }
            }
            ring.pairs = Some(PairTables { add, sub, mul });
        }
        Ok(ring)
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// q^(n^2).
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Writes the entries of matrix `index` into `out[..n*n]`.
    #[inline]
    pub fn entries_into(&self, index: u64, out: &mut [Elem]) {
        let nn = self.n * self.n;
        match &self.decoded {
            Some(d) => {
                let start = index as usize * nn;
                out[..nn].copy_from_slice(&d[start..start + nn]);
            }
            None => decode_into(self.field.order(), index, &mut out[..nn]),
        }
    }

    #[inline]
    pub fn encode(&self, entries: &[Elem]) -> u64 {
        encode(self.field.order(), &entries[..self.n * self.n])
    }

    pub fn matrix(&self, index: u64) -> MatFq {
        MatFq::unindex(index, self.n, self.n, &self.field).expect("index within the ring")
    }

    fn binary(&self, a: u64, b: u64, op: impl Fn(&FieldSpec, Elem, Elem) -> Elem) -> u64 {
        let nn = self.n * self.n;
        let mut x = [0; MAX_ENTRIES];
        let mut y = [0; MAX_ENTRIES];
        self.entries_into(a, &mut x);
        self.entries_into(b, &mut y);
        for i in 0..nn {
            x[i] = op(&self.field, x[i], y[i]);
        }
        self.encode(&x)
    }

    fn slow_add(&self, a: u64, b: u64) -> u64 {
        self.binary(a, b, FieldSpec::add)
    }

    fn slow_sub(&self, a: u64, b: u64) -> u64 {
        self.binary(a, b, FieldSpec::sub)
    }

    fn slow_mul(&self, a: u64, b: u64) -> u64 {
        let n = self.n;
        let mut x = [0; MAX_ENTRIES];
        let mut y = [0; MAX_ENTRIES];
        let mut z = [0; MAX_ENTRIES];
        self.entries_into(a, &mut x);
        self.entries_into(b, &mut y);
        mul_into(&self.field, &x, &y, n, n, n, &mut z);
        self.encode(&z)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        match &self.pairs {
            Some(t) => t.add[(a * self.count + b) as usize] as u64,
            None => self.slow_add(a, b),
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        match &self.pairs {
            Some(t) => t.sub[(a * self.count + b) as usize] as u64,
            None => self.slow_sub(a, b),
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match &self.pairs {
            Some(t) => t.mul[(a * self.count + b) as usize] as u64,
            None => self.slow_mul(a, b),
        }
    }

    pub fn rank(&self, a: u64) -> usize {
        match &self.ranks {
            Some(r) => r[a as usize] as usize,
            None => {
                let mut x = [0; MAX_ENTRIES];
                self.entries_into(a, &mut x);
                rank_in_place(&self.field, &mut x, self.n, self.n)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_and_direct_arithmetic_agree() {
        for (q, n) in [(3u64, 2usize), (2, 3), (4, 2)] {
            let field = Arc::new(FieldSpec::with_order(q, None).unwrap());
            let ring = MatrixRing::new(&field, n).unwrap();
            assert!(ring.pairs.is_some());
            let step = (ring.count() / 37).max(1);
            for a in (0..ring.count()).step_by(step as usize) {
                for b in (0..ring.count()).step_by(step as usize + 3) {
                    let (ma, mb) = (ring.matrix(a), ring.matrix(b));
                    assert_eq!(ring.add(a, b), ma.add(&mb).unwrap().index());
                    assert_eq!(ring.sub(a, b), ma.sub(&mb).unwrap().index());
                    assert_eq!(ring.mul(a, b), ma.mul(&mb).unwrap().index());
                    assert_eq!(ring.slow_mul(a, b), ring.mul(a, b));
                }
                assert_eq!(ring.rank(a), ring.matrix(a).rank());
            }
        }
    }

    #[test]
    fn large_rings_skip_tables() {
        let field = Arc::new(FieldSpec::prime(7).unwrap());
        let ring = MatrixRing::new(&field, 3).unwrap();
        assert!(ring.pairs.is_none() && ring.decoded.is_none());
        let id = MatFq::identity(3, &field).index();
        let x = 12_345_678;
        assert_eq!(ring.mul(id, x), x);
        assert_eq!(ring.sub(ring.add(x, id), id), x);
        assert_eq!(ring.rank(id), 3);
    }
}
