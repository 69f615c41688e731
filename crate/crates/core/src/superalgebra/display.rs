use std::fmt;

use super::{Coefficient, GeneratorTable, SuperPoly};

/// Deterministic text form of a polynomial: terms in canonical order,
/// factors joined by `*`, coefficients as exact `a+bi` rationals.
pub struct PolyDisplay<'a, C: Coefficient> {
    poly: &'a SuperPoly<C>,
    table: &'a GeneratorTable,
}

impl<C: Coefficient> SuperPoly<C> {
    pub fn display<'a>(&'a self, table: &'a GeneratorTable) -> PolyDisplay<'a, C> {
        PolyDisplay { poly: self, table }
    }

    pub fn to_text(&self, table: &GeneratorTable) -> String {
        self.display(table).to_string()
    }
}

impl<C: Coefficient> fmt::Display for PolyDisplay<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        for (n, (factors, c)) in self.poly.terms().enumerate() {
            let negative = c.is_negative_like();
            let mag = if negative { -c.clone() } else { c.clone() };
            match (n, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let show_coeff = factors.is_empty() || !mag.is_one();
            if show_coeff {
                f.write_str(&mag.canonical_string())?;
            }
            for (k, &(g, e)) in factors.iter().enumerate() {
                if k > 0 || show_coeff {
                    f.write_str("*")?;
                }
                f.write_str(self.table.name(g))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superalgebra::{gaussian, GaussianRational, Parity};

    #[test]
    fn prints_canonical_form() {
        let mut t = GeneratorTable::new();
        let q = t.declare_coordinate("q", Parity::Even, None).unwrap();
        let th = t.declare_coordinate("th", Parity::Odd, None).unwrap();
        let p: SuperPoly<GaussianRational> = SuperPoly::normalize([
            (gaussian((1, 2), (0, 1)), vec![q.momentum, q.momentum]),
            (gaussian((-1, 1), (0, 1)), vec![q.coordinate]),
            (gaussian((0, 1), (-1, 2)), vec![th.momentum, th.coordinate]),
            (gaussian((3, 1), (0, 1)), vec![]),
        ]);
        assert_eq!(p.to_text(&t), "3 - q + 1/2i*th*p(th) + 1/2*p(q)^2");
        assert_eq!(SuperPoly::<GaussianRational>::zero().to_text(&t), "0");
    }
}
