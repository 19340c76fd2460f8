//! Dense matrices over the windowed Laurent-series ring.
//!
//! Determinants are computed by cofactor expansion (ranks here are <= 6)
//! and inverses either through the adjugate (general units) or a Neumann
//! sum (unipotent matrices, which invert exactly).

use crate::error::{KernelError, Result};
use crate::scalar::PadicScalar;
use crate::series::{Series, VarSpec, Window};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Series>,
}

impl SeriesMatrix {
    pub fn zero(rows: usize, cols: usize, p: u64, vars: VarSpec, prec: i64) -> Self {
        let data = (0..rows * cols).map(|_| Series::zero(p, vars, prec)).collect();
        SeriesMatrix { rows, cols, data }
    }

    pub fn identity(d: usize, p: u64, vars: VarSpec, prec: i64) -> Self {
        let mut m = Self::zero(d, d, p, vars, prec);
        for i in 0..d {
            *m.at_mut(i, i) = Series::constant(p, vars, prec, PadicScalar::one(p, prec));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Series>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        SeriesMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Series {
        &mut self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> impl Iterator<Item = &Series> {
        self.data.iter()
    }

    pub fn p(&self) -> u64 {
        self.data[0].p
    }

    pub fn vars(&self) -> VarSpec {
        self.data[0].vars
    }

    pub fn min_prec(&self) -> i64 {
        self.data.iter().map(|s| s.prec).min().unwrap_or(0)
    }

    pub fn map<F: FnMut(&Series) -> Series>(&self, mut f: F) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| f(s)).collect(),
        }
    }

    pub fn try_map<F: FnMut(&Series) -> Result<Series>>(&self, mut f: F) -> Result<Self> {
        Ok(SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| f(s)).collect::<Result<_>>()?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Ok(SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|s| s.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let p = self.p();
        let vars = self.vars();
        let prec = self.min_prec().min(other.min_prec());
        let mut out = Self::zero(self.rows, other.cols, p, vars, prec);
        for i in 0..self.rows {
            for k in 0..other.cols {
                let mut acc = Series::zero(p, vars, i64::MAX / 4);
                for j in 0..self.cols {
                    acc = acc.add(&self.at(i, j).mul(other.at(j, k))?)?;
                }
                *out.at_mut(i, k) = acc;
            }
        }
        Ok(out)
    }

    /// Entrywise multiplication by a fixed series.
    pub fn mul_series(&self, s: &Series) -> Result<Self> {
        self.try_map(|e| e.mul(s))
    }

    pub fn scalar_mul(&self, c: &PadicScalar) -> Self {
        self.map(|e| e.scalar_mul(c))
    }

    pub fn int_mul(&self, n: i128) -> Self {
        self.map(|e| e.int_mul(n))
    }

    pub fn transpose(&self) -> Self {
        let mut rows = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            rows.push((0..self.rows).map(|i| self.at(i, j).clone()).collect());
        }
        Self::from_rows(rows)
    }

    pub fn frobenius(&self, f: u32) -> Result<Self> {
        self.try_map(|e| e.frobenius(f))
    }

    pub fn theta(&self, i: usize) -> Self {
        self.map(|e| e.theta(i))
    }

    pub fn truncate_prec(&self, prec: i64) -> Self {
        self.map(|e| e.truncate_prec(prec))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    pub fn is_zero_mod(&self, k: i64) -> bool {
        self.data.iter().all(|s| s.is_zero_mod(k))
    }

    /// Extract the submatrix rows r0..r1, cols c0..c1 (half-open).
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut rows = Vec::with_capacity(r1 - r0);
        for i in r0..r1 {
            rows.push((c0..c1).map(|j| self.at(i, j).clone()).collect());
        }
        Self::from_rows(rows)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, m: &SeriesMatrix) {
        for i in 0..m.rows {
            for j in 0..m.cols {
                *self.at_mut(r0 + i, c0 + j) = m.at(i, j).clone();
            }
        }
    }

    /// Assemble [[a, b], [c, d]].
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        let mut out = Self::zero(
            a.rows + c.rows,
            a.cols + b.cols,
            a.p(),
            a.vars(),
            a.min_prec().min(b.min_prec()).min(c.min_prec()).min(d.min_prec()),
        );
        out.set_block(0, 0, a);
        out.set_block(0, a.cols, b);
        out.set_block(a.rows, 0, c);
        out.set_block(a.rows, a.cols, d);
        out
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let mut rows = Vec::with_capacity(self.rows - 1);
        for i in 0..self.rows {
            if i == skip_row {
                continue;
            }
            let mut row = Vec::with_capacity(self.cols - 1);
            for j in 0..self.cols {
                if j == skip_col {
                    continue;
                }
                row.push(self.at(i, j).clone());
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(&self) -> Result<Series> {
        assert_eq!(self.rows, self.cols, "determinant of a square matrix");
        match self.rows {
            0 => Ok(Series::constant(
                self.p(),
                self.vars(),
                self.min_prec(),
                PadicScalar::one(self.p(), self.min_prec()),
            )),
            1 => Ok(self.at(0, 0).clone()),
            _ => {
                let mut acc = Series::zero(self.p(), self.vars(), i64::MAX / 4);
                for j in 0..self.cols {
                    if self.at(0, j).is_zero() {
                        continue;
                    }
                    let term = self.at(0, j).mul(&self.minor(0, j).det()?)?;
                    acc = if j % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
                }
                Ok(acc)
            }
        }
    }

    /// Determinant of the submatrix with the given row/column index sets.
    pub fn sub_det(&self, rows: &[usize], cols: &[usize]) -> Result<Series> {
        let picked: Vec<Vec<Series>> = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| self.at(i, j).clone()).collect())
            .collect();
        Self::from_rows(picked).det()
    }

    /// Inverse of a matrix whose determinant is a unit of the integral
    /// subring, via the adjugate; certified on `target_window`.
    pub fn inverse(&self, target_window: &Window) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let det = self.det()?;
        let det_inv = det.invert_unit(target_window).map_err(|e| match e {
            KernelError::NotAUnit { context } => KernelError::NotInvertible {
                context: format!("determinant is not a unit: {context}"),
            },
            other => other,
        })?;
        let d = self.rows;
        let mut out = Self::zero(d, d, self.p(), self.vars(), self.min_prec());
        for i in 0..d {
            for j in 0..d {
                let cof = self.minor(j, i).det()?;
                let signed = if (i + j) % 2 == 0 { cof } else { cof.neg() };
                *out.at_mut(i, j) = signed.mul(&det_inv)?;
            }
        }
        Ok(out)
    }

    /// Exact inverse of I + M with M nilpotent (e.g. strictly triangular):
    /// the alternating Neumann sum terminates.
    pub fn inverse_unipotent(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let d = self.rows;
        let p = self.p();
        let vars = self.vars();
        let prec = self.min_prec();
        let id = Self::identity(d, p, vars, prec);
        let m = self.sub(&id)?;
        let mut acc = Self::identity(d, p, vars, prec);
        let mut power = Self::identity(d, p, vars, prec);
        for k in 1..=d {
            power = power.mul(&m)?;
            if power.is_zero() {
                break;
            }
            if k == d && !power.is_zero() {
                return Err(KernelError::NotInvertible {
                    context: "matrix is not unipotent".into(),
                });
            }
            acc = if k % 2 == 1 { acc.sub(&power)? } else { acc.add(&power)? };
        }
        Ok(acc)
    }

    /// Evaluate every entry at a point with Teichmüller coordinates.
    pub fn evaluate(&self, torus: &[u64], affine: &[u64]) -> Result<Vec<Vec<PadicScalar>>> {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self.at(i, j).evaluate(torus, affine)?);
            }
            out.push(row);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Exponent;

    fn ring() -> (u64, VarSpec, i64) {
        (5, VarSpec::new(1, 0), 10)
    }

    fn s(entries: &[(i64, i128)]) -> Series {
        let (p, vars, prec) = ring();
        let e: Vec<(Exponent, i128)> = entries.iter().map(|&(d, c)| (vec![d], c)).collect();
        Series::from_int_terms(p, vars, prec, &e)
    }

    fn m2(a: &[(i64, i128)], b: &[(i64, i128)], c: &[(i64, i128)], d: &[(i64, i128)]) -> SeriesMatrix {
        SeriesMatrix::from_rows(vec![vec![s(a), s(b)], vec![s(c), s(d)]])
    }

    #[test]
    fn det_via_permanent_oracle_2x2() {
        let m = m2(&[(0, 2), (1, 3)], &[(-1, 1)], &[(2, 4)], &[(0, 5)]);
        // ad - bc computed independently
        let expect = s(&[(0, 2), (1, 3)])
            .mul(&s(&[(0, 5)]))
            .unwrap()
            .sub(&s(&[(-1, 1)]).mul(&s(&[(2, 4)])).unwrap())
            .unwrap();
        assert!(m.det().unwrap().sub(&expect).unwrap().is_zero());
    }

    #[test]
    fn det_of_triangular_is_diagonal_product() {
        let (p, vars, prec) = ring();
        let z = Series::zero(p, vars, prec);
        let m = SeriesMatrix::from_rows(vec![
            vec![s(&[(1, 2)]), z.clone(), z.clone()],
            vec![s(&[(0, 7)]), s(&[(0, 3)]), z.clone()],
            vec![s(&[(-2, 1)]), s(&[(4, 9)]), s(&[(-1, 6)])],
        ]);
        let expect = s(&[(1, 2)]).mul(&s(&[(0, 3)])).unwrap().mul(&s(&[(-1, 6)])).unwrap();
        assert!(m.det().unwrap().sub(&expect).unwrap().is_zero());
    }

    #[test]
    fn inverse_multiplies_back_to_identity() {
        let (p, vars, prec) = ring();
        // unit determinant: det = 3·1 - p·T·something stays a unit
        let m = m2(&[(0, 3)], &[(1, 5)], &[(-1, 10)], &[(0, 1)]);
        let target = Window::from_bounds(vars, vec![(-6, 6)]).unwrap();
        let inv = m.inverse(&target).unwrap();
        let back = m.mul(&inv).unwrap();
        let id = SeriesMatrix::identity(2, p, vars, prec);
        assert!(back.sub(&id).unwrap().is_zero_mod(prec));
    }

    #[test]
    fn unipotent_inverse_is_exact() {
        let (p, vars, prec) = ring();
        let z = Series::zero(p, vars, prec);
        let one = Series::constant(p, vars, prec, PadicScalar::one(p, prec));
        let n = SeriesMatrix::from_rows(vec![
            vec![one.clone(), z.clone()],
            vec![s(&[(-3, 7), (2, 1)]), one.clone()],
        ]);
        let inv = n.inverse_unipotent().unwrap();
        let back = n.mul(&inv).unwrap();
        let id = SeriesMatrix::identity(2, p, vars, prec);
        assert!(back.sub(&id).unwrap().is_zero());
        // the inverse is exactly [[1,0],[-x,1]]
        assert!(inv.at(1, 0).sub(&s(&[(-3, -7), (2, -1)])).unwrap().is_zero());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = m2(&[(0, 1)], &[(0, 1)], &[(0, 1)], &[(0, 1)]);
        let (_, vars, _) = ring();
        let target = Window::from_bounds(vars, vec![(-2, 2)]).unwrap();
        assert!(matches!(
            m.inverse(&target),
            Err(KernelError::NotInvertible { .. }) | Err(KernelError::NotAUnit { .. })
        ));
    }

    #[test]
    fn block_assembly_round_trips() {
        let (p, vars, prec) = ring();
        let a = SeriesMatrix::from_rows(vec![vec![s(&[(0, 1)])]]);
        let b = SeriesMatrix::from_rows(vec![vec![s(&[(1, 2)]), s(&[(2, 3)])]]);
        let c = SeriesMatrix::from_rows(vec![vec![s(&[(-1, 4)])], vec![s(&[(0, 5)])]]);
        let d = SeriesMatrix::identity(2, p, vars, prec);
        let m = SeriesMatrix::from_blocks(&a, &b, &c, &d);
        assert_eq!(m.rows, 3);
        assert!(m.block(0, 1, 0, 1).sub(&a).unwrap().is_zero());
        assert!(m.block(1, 3, 1, 3).sub(&d).unwrap().is_zero());
        assert!(m.block(1, 3, 0, 1).sub(&c).unwrap().is_zero());
    }
}
