//! Dense matrices over F_q.
//!
//! A matrix is identified with an integer in `[0, q^(rows*cols))`: the
//! row-major entry list read as base-q digits, most significant first, so
//! entry (0, 0) is the leading digit and lexicographic order on entry lists
//! coincides with numeric order on indices.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec};

/// Default cap on the length of an exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 32;

/// `q^count`, or `None` on overflow.
pub fn space_size(q: u32, count: usize) -> Option<u64> {
    (q as u64).checked_pow(count as u32)
}

pub(crate) fn encode(q: u32, entries: &[Elem]) -> u64 {
    entries
        .iter()
        .fold(0u64, |acc, &e| acc * q as u64 + e as u64)
}

pub(crate) fn decode_into(q: u32, mut index: u64, out: &mut [Elem]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % q as u64) as Elem;
        index /= q as u64;
    }
}

/// Rank of the `rows x cols` row-major matrix in `buf`, destroying it.
pub(crate) fn rank_in_place(field: &FieldSpec, buf: &mut [Elem], rows: usize, cols: usize) -> usize {
    split_rank_in_place(field, buf, rows, cols, cols).1
}

/// Ranks of the leading `split` columns and of the whole matrix, from one
/// elimination pass. Plain Gauss-Jordan elimination pivoting on the first
/// nonzero entry of each column; columns are processed left to right, so
/// the pivot count after column `split - 1` is the rank of that prefix.
pub(crate) fn split_rank_in_place(
    field: &FieldSpec,
    buf: &mut [Elem],
    rows: usize,
    cols: usize,
    split: usize,
) -> (usize, usize) {
    let mut rank = 0;
    let mut prefix_rank = None;
    for col in 0..cols {
        if col == split {
            prefix_rank = Some(rank);
        }
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| buf[r * cols + col] != 0) else {
            continue;
        };
        if pivot != rank {
            for c in col..cols {
                buf.swap(pivot * cols + c, rank * cols + c);
            }
        }
        let inv = field.inv(buf[rank * cols + col]).expect("pivot is nonzero");
        for c in col..cols {
            buf[rank * cols + c] = field.mul(buf[rank * cols + c], inv);
        }
        for r in rank + 1..rows {
            let factor = buf[r * cols + col];
            if factor == 0 {
                continue;
            }
            for c in col..cols {
                let t = field.mul(factor, buf[rank * cols + c]);
                buf[r * cols + c] = field.sub(buf[r * cols + c], t);
            }
        }
        rank += 1;
    }
    // Unset when the split lies past the last column or every row was
    // pivoted before reaching it; either way the prefix has full rank.
    (prefix_rank.unwrap_or(rank), rank)
}

/// `out = a * b` for row-major `a` (n x m) and `b` (m x p).
pub(crate) fn mul_into(
    field: &FieldSpec,
    a: &[Elem],
    b: &[Elem],
    n: usize,
    m: usize,
    p: usize,
    out: &mut [Elem],
) {
    for i in 0..n {
        for j in 0..p {
            let mut acc = 0;
            for k in 0..m {
                acc = field.add(acc, field.mul(a[i * m + k], b[k * p + j]));
            }
            out[i * p + j] = acc;
        }
    }
}

/// An `rows x cols` matrix over F_q.
#[derive(Clone, PartialEq, Eq)]
pub struct MatFq {
    rows: usize,
    cols: usize,
    entries: Vec<Elem>,
    field: Arc<FieldSpec>,
}

impl fmt::Debug for MatFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatFq{:?}[", self.field)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Text form `q rows cols : e00 e01 ...` with row-major decimal codes.
impl fmt::Display for MatFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} :", self.field.order(), self.rows, self.cols)?;
        for e in &self.entries {
            write!(f, " {e}")?;
        }
        Ok(())
    }
}

impl MatFq {
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: Vec<Elem>,
        field: &Arc<FieldSpec>,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&e| e >= field.order()) {
            return Err(Error::Config(format!(
                "entry {bad} is not a code of F_{}",
                field.order()
            )));
        }
        Ok(MatFq {
            rows,
            cols,
            entries,
            field: Arc::clone(field),
        })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[&[Elem]], field: &Arc<FieldSpec>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_entries(rows.len(), cols, rows.concat(), field)
    }

    pub fn zeros(rows: usize, cols: usize, field: &Arc<FieldSpec>) -> Self {
        MatFq {
            rows,
            cols,
            entries: vec![0; rows * cols],
            field: Arc::clone(field),
        }
    }

    pub fn identity(n: usize, field: &Arc<FieldSpec>) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Inverse of [`MatFq::index`].
    pub fn unindex(index: u64, rows: usize, cols: usize, field: &Arc<FieldSpec>) -> Result<Self> {
        let size = space_size(field.order(), rows * cols).ok_or(Error::IndexOutOfRange {
            index,
            size: u64::MAX,
        })?;
        if index >= size {
            return Err(Error::IndexOutOfRange { index, size });
        }
        let mut m = Self::zeros(rows, cols, field);
        decode_into(field.order(), index, &mut m.entries);
        Ok(m)
    }

    /// Parses the text form written by `Display`. The field is rebuilt from
    /// `q` (default modulus for extensions) unless one is supplied, in which
    /// case its order must match.
    pub fn parse(text: &str, field: Option<&Arc<FieldSpec>>) -> Result<Self> {
        let (head, body) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("matrix text lacks ':' separator: {text:?}")))?;
        let nums = |s: &str| -> Result<Vec<u64>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::Config(format!("bad integer {t:?} in matrix text")))
                })
                .collect()
        };
        let head = nums(head)?;
        let [q, rows, cols] = head[..] else {
            return Err(Error::Config("matrix header must be `q rows cols`".into()));
        };
        let field = match field {
            Some(f) if f.order() as u64 == q => Arc::clone(f),
            Some(_) => return Err(Error::FieldMismatch),
            None => Arc::new(FieldSpec::with_order(q, None)?),
        };
        let entries = nums(body)?
            .into_iter()
            .map(|e| u32::try_from(e).map_err(|_| Error::Config(format!("entry {e} too large"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(rows as usize, cols as usize, entries, &field)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Elem] {
        &self.entries
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Base-q index, most significant digit first.
    pub fn index(&self) -> u64 {
        encode(self.field.order(), &self.entries)
    }

    fn same_field(&self, other: &MatFq) -> Result<()> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    fn zip_with(&self, other: &MatFq, op: impl Fn(Elem, Elem) -> Elem) -> Result<MatFq> {
        self.same_field(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(MatFq {
            entries,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &MatFq) -> Result<MatFq> {
        self.zip_with(other, |a, b| self.field.add(a, b))
    }

    pub fn sub(&self, other: &MatFq) -> Result<MatFq> {
        self.zip_with(other, |a, b| self.field.sub(a, b))
    }

    pub fn neg(&self) -> MatFq {
        MatFq {
            entries: self.entries.iter().map(|&a| self.field.neg(a)).collect(),
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &MatFq) -> Result<MatFq> {
        self.same_field(other)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, &self.field);
        mul_into(
            &self.field,
            &self.entries,
            &other.entries,
            self.rows,
            self.cols,
            other.cols,
            &mut out.entries,
        );
        Ok(out)
    }

    pub fn scale(&self, c: Elem) -> MatFq {
        MatFq {
            entries: self.entries.iter().map(|&a| self.field.mul(c, a)).collect(),
            ..self.clone()
        }
    }

    pub fn transpose(&self) -> MatFq {
        let mut entries = vec![0; self.entries.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                entries[c * self.rows + r] = self.entries[r * self.cols + c];
            }
        }
        MatFq {
            rows: self.cols,
            cols: self.rows,
            entries,
            field: Arc::clone(&self.field),
        }
    }

    /// `(self | other)`, placing `other` to the right.
    pub fn hconcat(&self, other: &MatFq) -> Result<MatFq> {
        self.same_field(other)?;
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot place {} rows beside {}",
                other.rows, self.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            entries.extend_from_slice(self.row(r));
            entries.extend_from_slice(other.row(r));
        }
        Ok(MatFq {
            rows: self.rows,
            cols,
            entries,
            field: Arc::clone(&self.field),
        })
    }

    pub fn rank(&self) -> usize {
        let mut buf = self.entries.clone();
        rank_in_place(&self.field, &mut buf, self.rows, self.cols)
    }

    /// A basis of the column space, as the columns of an `rows x rank` matrix.
    pub fn column_basis(&self) -> MatFq {
        let mut chosen: Vec<usize> = Vec::new();
        let mut buf = Vec::new();
        for c in 0..self.cols {
            // Keep column c iff it raises the rank of the columns kept so far.
            buf.clear();
            for r in 0..self.rows {
                buf.extend(chosen.iter().map(|&k| self.get(r, k)));
                buf.push(self.get(r, c));
            }
            if rank_in_place(&self.field, &mut buf, self.rows, chosen.len() + 1) > chosen.len() {
                chosen.push(c);
            }
            if chosen.len() == self.rows {
                break;
            }
        }
        let mut entries = Vec::with_capacity(self.rows * chosen.len());
        for r in 0..self.rows {
            entries.extend(chosen.iter().map(|&k| self.get(r, k)));
        }
        MatFq {
            rows: self.rows,
            cols: chosen.len(),
            entries,
            field: Arc::clone(&self.field),
        }
    }
}

/// Every `rows x cols` matrix over a field, in index order.
///
/// The stream can be restricted to an index interval with
/// [`MatrixEnumeration::with_range`], which is how parallel workers split it.
#[derive(Clone)]
pub struct MatrixEnumeration {
    rows: usize,
    cols: usize,
    field: Arc<FieldSpec>,
    range: Range<u64>,
}

impl MatrixEnumeration {
    pub fn len_total(&self) -> u64 {
        space_size(self.field.order(), self.rows * self.cols).unwrap()
    }

    pub fn with_range(mut self, range: Range<u64>) -> Self {
        let total = self.len_total();
        self.range = range.start.min(total)..range.end.min(total);
        self
    }
}

impl Iterator for MatrixEnumeration {
    type Item = MatFq;

    fn next(&mut self) -> Option<MatFq> {
        let i = self.range.next()?;
        let mut m = MatFq::zeros(self.rows, self.cols, &self.field);
        decode_into(self.field.order(), i, &mut m.entries);
        Some(m)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

impl ExactSizeIterator for MatrixEnumeration {}

/// All `rows x cols` matrices in index order; fails when there are more than `cap`.
pub fn enumerate_matrices(
    rows: usize,
    cols: usize,
    field: &Arc<FieldSpec>,
    cap: u64,
) -> Result<MatrixEnumeration> {
    let total = space_size(field.order(), rows * cols);
    match total {
        Some(total) if total <= cap => Ok(MatrixEnumeration {
            rows,
            cols,
            field: Arc::clone(field),
            range: 0..total,
        }),
        _ => Err(Error::EnumerationCapExceeded {
            requested: (field.order() as u128)
                .checked_pow((rows * cols) as u32)
                .unwrap_or(u128::MAX),
            cap: cap as u128,
        }),
    }
}
