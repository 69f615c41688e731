//! Dense matrices of numbers and of polynomials (supermatrices).

use super::{AlgebraError, Coefficient, GeneratorTable, SuperPoly};

/// Dense matrix over an exact coefficient field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumMatrix<C> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

/// Reduced row echelon form with its pivot columns.
#[derive(Debug, Clone)]
pub struct RowEchelon<C> {
    pub reduced: NumMatrix<C>,
    pub pivot_cols: Vec<usize>,
}

impl<C> RowEchelon<C> {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }
}

impl<C: Coefficient> NumMatrix<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        NumMatrix { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        NumMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &C {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(r, c).clone());
            }
        }
        m
    }

    /// Gauss-Jordan elimination, scanning columns left to right. The pivot
    /// columns are therefore the lexicographically first column basis.
    pub fn row_echelon(&self) -> RowEchelon<C> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m.get(row, col).inverse().expect("nonzero pivot");
            for c in 0..m.cols {
                let v = m.get(row, c).clone() * inv.clone();
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for c in 0..m.cols {
                    let v = m.get(r, c).clone() - factor.clone() * m.get(row, c).clone();
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        RowEchelon { reduced: m, pivot_cols: pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().rank()
    }

    /// Lexicographically first set of linearly independent rows.
    pub fn independent_rows(&self) -> Vec<usize> {
        self.transpose().row_echelon().pivot_cols
    }

    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        if self.rows != self.cols {
            return Err(AlgebraError::Shape(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(self.clone());
        }
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, C::one());
        }
        let ech = aug.row_echelon();
        if ech.pivot_cols.len() < n || ech.pivot_cols[n - 1] != n - 1 {
            return Err(AlgebraError::SingularBody);
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        let rows: Vec<usize> = (0..n).collect();
        Ok(ech.reduced.select(&rows, &cols))
    }

    /// Basis of the right null space, one vector per non-pivot column.
    pub fn null_space(&self) -> Vec<Vec<C>> {
        let ech = self.row_echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !ech.pivot_cols.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![C::zero(); self.cols];
                v[f] = C::one();
                for (r, &pc) in ech.pivot_cols.iter().enumerate() {
                    v[pc] = -ech.reduced.get(r, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn to_poly(&self) -> PolyMatrix<C> {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| SuperPoly::constant(c.clone())).collect(),
        }
    }
}

/// Dense matrix of polynomials. Products keep the left factor's entries to
/// the left, which is what graded algebra requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix<C> {
    rows: usize,
    cols: usize,
    data: Vec<SuperPoly<C>>,
}

impl<C: Coefficient> PolyMatrix<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix { rows, cols, data: vec![SuperPoly::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        NumMatrix::identity(n).to_poly()
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> SuperPoly<C>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        PolyMatrix { rows, cols, data }
    }

    pub fn try_from_fn<E>(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<SuperPoly<C>, E>,
    ) -> Result<Self, E> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c)?);
            }
        }
        Ok(PolyMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &SuperPoly<C> {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: SuperPoly<C>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &SuperPoly<C>> + '_ {
        self.data.iter()
    }

    pub fn map(&self, f: impl FnMut(&SuperPoly<C>) -> SuperPoly<C>) -> Self {
        PolyMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(SuperPoly::is_zero)
    }

    pub fn mul(&self, rhs: &PolyMatrix<C>) -> Result<PolyMatrix<C>, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|k| self.get(r, k) * rhs.get(k, c)).sum()
        }))
    }

    pub fn add(&self, rhs: &PolyMatrix<C>) -> PolyMatrix<C> {
        Self::from_fn(self.rows, self.cols, |r, c| self.get(r, c) + rhs.get(r, c))
    }

    pub fn neg(&self) -> PolyMatrix<C> {
        self.map(|p| -p)
    }

    /// Matrix-vector product `M v` with vector entries to the right.
    pub fn apply(&self, v: &[SuperPoly<C>]) -> Vec<SuperPoly<C>> {
        (0..self.rows).map(|r| (0..self.cols).map(|k| self.get(r, k) * &v[k]).sum()).collect()
    }

    /// Numeric body: constant terms of every entry. Fails when an entry has
    /// an even, non-constant term (the soul would not be nilpotent).
    pub fn body(&self) -> Result<NumMatrix<C>, AlgebraError> {
        let mut m = NumMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let e = self.get(r, c);
                if !e.has_nilpotent_soul() {
                    return Err(AlgebraError::NonNumericBody);
                }
                m.set(r, c, e.constant_term());
            }
        }
        Ok(m)
    }

    pub fn soul(&self) -> PolyMatrix<C> {
        self.map(SuperPoly::soul)
    }

    /// Exact inverse via the body inverse and a Neumann series in the
    /// nilpotent soul, which terminates after finitely many terms.
    pub fn inverse(&self) -> Result<PolyMatrix<C>, AlgebraError> {
        let body_inv = self.body()?.inverse()?.to_poly();
        let soul = self.soul();
        if soul.is_zero() {
            return Ok(body_inv);
        }
        let n = body_inv.mul(&soul)?.neg();
        let odd_gens = self
            .data
            .iter()
            .flat_map(|p| p.generators())
            .filter(|g| g.is_odd())
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        let mut sum = PolyMatrix::identity(self.rows);
        let mut power = PolyMatrix::identity(self.rows);
        for _ in 0..=odd_gens {
            power = power.mul(&n)?;
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power);
        }
        debug_assert!(power.is_zero(), "soul series must terminate");
        sum.mul(&body_inv)
    }

    pub fn to_text(&self, table: &GeneratorTable) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).to_text(table)).collect())
            .collect()
    }
}
