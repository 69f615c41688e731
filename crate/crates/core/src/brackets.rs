//! Graded Poisson (Berezin) brackets over an explicit phase basis.

use crate::superalgebra::{AlgebraError, Coefficient, Generator, GeneratorTable, Parity, SuperPoly};

/// Ordered conjugate pairs the bracket sums over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseBasis {
    pairs: Vec<(Generator, Generator)>,
    extended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BasisError {
    #[error("pair members have different parity")]
    ParityMismatch,
    #[error("generator appears in two pairs")]
    Repeated,
}

impl PhaseBasis {
    pub fn new(pairs: Vec<(Generator, Generator)>, extended: bool) -> Result<Self, BasisError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(q, p) in &pairs {
            if q.parity() != p.parity() {
                return Err(BasisError::ParityMismatch);
            }
            if !seen.insert(q) || !seen.insert(p) {
                return Err(BasisError::Repeated);
            }
        }
        Ok(PhaseBasis { pairs, extended })
    }

    /// All declared coordinates with their momenta.
    pub fn canonical(table: &GeneratorTable) -> Self {
        let pairs = table.coordinates().iter().map(|h| (h.coordinate, h.momentum)).collect();
        PhaseBasis { pairs, extended: false }
    }

    /// The canonical pairs preceded by the time pair `(t, P0)`. The
    /// unexpressed coordinates double as the parameters `t^α` and their
    /// momenta as `P_α`, so no further pairs are needed.
    pub fn extended(table: &GeneratorTable) -> Self {
        let mut pairs = vec![(table.time(), table.time_momentum())];
        pairs.extend(table.coordinates().iter().map(|h| (h.coordinate, h.momentum)));
        PhaseBasis { pairs, extended: true }
    }

    pub fn pairs(&self) -> &[(Generator, Generator)] {
        &self.pairs
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Direct form: `Σ ∂r f/∂q ∂l g/∂p − (−1)^{P(f)P(g)} ∂r g/∂q ∂l f/∂p`.
pub fn berezin<C: Coefficient>(
    f: &SuperPoly<C>,
    g: &SuperPoly<C>,
    basis: &PhaseBasis,
) -> Result<SuperPoly<C>, AlgebraError> {
    let pf = f.parity_of()?;
    let pg = g.parity_of()?;
    let mut out = SuperPoly::zero();
    for &(q, p) in &basis.pairs {
        out += &(&f.derive_right(q) * &g.derive_left(p));
        let second = &g.derive_right(q) * &f.derive_left(p);
        if pf.sign_with(pg) {
            out += &second;
        } else {
            out -= &second;
        }
    }
    Ok(out)
}

/// Constant matrix `E^{IJ}` over `η = (q^1..q^N, p_1..p_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticMetric {
    eta: Vec<Generator>,
    entries: Vec<Vec<i8>>,
}

impl SymplecticMetric {
    pub fn new(basis: &PhaseBasis) -> Self {
        let n = basis.len();
        let mut eta: Vec<Generator> = basis.pairs.iter().map(|&(q, _)| q).collect();
        eta.extend(basis.pairs.iter().map(|&(_, p)| p));
        let mut entries = vec![vec![0i8; 2 * n]; 2 * n];
        for (i, &(q, _)) in basis.pairs.iter().enumerate() {
            entries[i][n + i] = 1;
            entries[n + i][i] = if q.parity() == Parity::Odd { 1 } else { -1 };
        }
        SymplecticMetric { eta, entries }
    }

    pub fn coordinates(&self) -> &[Generator] {
        &self.eta
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.entries[i][j]
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }
}

/// Metric form: `Σ ∂r F/∂η^I E^{IJ} ∂l G/∂η^J`.
pub fn symplectic_bracket<C: Coefficient>(
    f: &SuperPoly<C>,
    g: &SuperPoly<C>,
    metric: &SymplecticMetric,
) -> Result<SuperPoly<C>, AlgebraError> {
    f.parity_of()?;
    g.parity_of()?;
    let mut out = SuperPoly::zero();
    for (i, &a) in metric.eta.iter().enumerate() {
        let df = f.derive_right(a);
        if df.is_zero() {
            continue;
        }
        for (j, &b) in metric.eta.iter().enumerate() {
            let e = metric.entries[i][j];
            if e == 0 {
                continue;
            }
            let term = &df * &g.derive_left(b);
            if e > 0 {
                out += &term;
            } else {
                out -= &term;
            }
        }
    }
    Ok(out)
}

/// Matrix of brackets `{f_r, g_c}` in row-major order.
pub fn bracket_table<C: Coefficient>(
    fs: &[SuperPoly<C>],
    gs: &[SuperPoly<C>],
    basis: &PhaseBasis,
) -> Result<Vec<Vec<SuperPoly<C>>>, AlgebraError> {
    fs.iter().map(|f| gs.iter().map(|g| berezin(f, g, basis)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Poly;

    #[test]
    fn canonical_pairs() {
        let mut t = GeneratorTable::new();
        let q = t.declare_coordinate("q", Parity::Even, None).unwrap();
        let th = t.declare_coordinate("th", Parity::Odd, None).unwrap();
        let basis = PhaseBasis::canonical(&t);
        let metric = SymplecticMetric::new(&basis);
        let (qq, qp) = (Poly::generator(q.coordinate), Poly::generator(q.momentum));
        let (tq, tp) = (Poly::generator(th.coordinate), Poly::generator(th.momentum));
        assert_eq!(berezin(&qq, &qp, &basis).unwrap(), Poly::one());
        assert_eq!(berezin(&qp, &qq, &basis).unwrap(), -Poly::one());
        assert_eq!(berezin(&tq, &tp, &basis).unwrap(), Poly::one());
        assert_eq!(berezin(&tp, &tq, &basis).unwrap(), Poly::one());
        assert_eq!(symplectic_bracket(&qq, &qp, &metric).unwrap(), Poly::one());
        assert_eq!(symplectic_bracket(&tq, &tp, &metric).unwrap(), Poly::one());
        assert_eq!(symplectic_bracket(&tp, &tq, &metric).unwrap(), Poly::one());
    }

    #[test]
    fn metric_signs() {
        let mut t = GeneratorTable::new();
        t.declare_coordinate("q", Parity::Even, None).unwrap();
        t.declare_coordinate("th", Parity::Odd, None).unwrap();
        let m = SymplecticMetric::new(&PhaseBasis::canonical(&t));
        assert_eq!((m.entry(0, 2), m.entry(2, 0)), (1, -1));
        assert_eq!((m.entry(1, 3), m.entry(3, 1)), (1, 1));
        assert_eq!(m.entry(0, 1), 0);
    }

    #[test]
    fn mixed_parity_rejected() {
        let mut t = GeneratorTable::new();
        let q = t.declare_coordinate("q", Parity::Even, None).unwrap();
        let th = t.declare_coordinate("th", Parity::Odd, None).unwrap();
        let mixed = &Poly::generator(q.coordinate) + &Poly::generator(th.coordinate);
        let basis = PhaseBasis::canonical(&t);
        assert_eq!(berezin(&mixed, &Poly::one(), &basis), Err(AlgebraError::MixedParity));
    }
}
