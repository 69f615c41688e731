use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::coeff::{Coefficient, GaussianRational};
use super::{AlgebraError, Generator, Parity};

/// Ordered `(generator, exponent)` list. Sorted by generator, odd exponents
/// are always 1.
pub type Factors = Vec<(Generator, u32)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial<C = GaussianRational> {
    pub coeff: C,
    pub factors: Factors,
}

impl<C: Coefficient> Monomial<C> {
    pub fn parity(&self) -> Parity {
        factors_parity(&self.factors)
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }
}

fn factors_parity(factors: &[(Generator, u32)]) -> Parity {
    let odd = factors.iter().filter(|(g, _)| g.is_odd()).count();
    if odd % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Multiplies two canonical factor lists. Returns `None` when an odd
/// generator repeats, otherwise the sign flag and the merged list.
fn merge_factors(a: &[(Generator, u32)], b: &[(Generator, u32)]) -> Option<(bool, Factors)> {
    let mut odd_left_in_a = a.iter().filter(|(g, _)| g.is_odd()).count();
    let mut negate = false;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (ga, ea) = a[i];
        let (gb, eb) = b[j];
        if ga < gb {
            if ga.is_odd() {
                odd_left_in_a -= 1;
            }
            out.push((ga, ea));
            i += 1;
        } else if gb < ga {
            // gb moves left past every remaining odd factor of `a`.
            if gb.is_odd() && odd_left_in_a % 2 == 1 {
                negate = !negate;
            }
            out.push((gb, eb));
            j += 1;
        } else {
            if ga.is_odd() {
                return None;
            }
            out.push((ga, ea + eb));
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((negate, out))
}

/// Canonical polynomial over even and odd generators.
///
/// Terms are keyed by their factor list, so two values are equal exactly when
/// they are equal as elements of the algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperPoly<C = GaussianRational> {
    terms: BTreeMap<Factors, C>,
}

impl<C: Coefficient> Default for SuperPoly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> SuperPoly<C> {
    pub fn zero() -> Self {
        SuperPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(C::from_integer(n))
    }

    pub fn generator(g: Generator) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![(g, 1)], C::one());
        p
    }

    /// Canonicalizes a list of written products `coeff * g1 * g2 * ...`.
    ///
    /// Adjacent odd generators anticommute, even generators commute with
    /// everything and a repeated odd generator annihilates its term.
    pub fn normalize<I, G>(raw: I) -> Self
    where
        I: IntoIterator<Item = (C, G)>,
        G: IntoIterator<Item = Generator>,
    {
        let mut p = Self::zero();
        for (coeff, gens) in raw {
            let mut acc: Option<(bool, Factors)> = Some((false, Vec::new()));
            for g in gens {
                acc = acc.and_then(|(neg, f)| {
                    merge_factors(&f, &[(g, 1)]).map(|(n2, merged)| (neg ^ n2, merged))
                });
                if acc.is_none() {
                    break;
                }
            }
            if let Some((neg, factors)) = acc {
                p.add_term(factors, if neg { -coeff } else { coeff });
            }
        }
        p
    }

    /// Builds a polynomial from already-canonical monomials, merging equal
    /// factor lists.
    pub fn from_monomials<I: IntoIterator<Item = Monomial<C>>>(items: I) -> Self {
        let mut p = Self::zero();
        for m in items {
            p.add_term(m.factors, m.coeff);
        }
        p
    }

    fn add_term(&mut self, factors: Factors, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&factors) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&factors);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(factors, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Factors, &C)> + '_ {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial<C>> + '_ {
        self.terms.iter().map(|(f, c)| Monomial { coeff: c.clone(), factors: f.clone() })
    }

    /// Coefficient of the empty monomial.
    pub fn constant_term(&self) -> C {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|f| f.is_empty())
    }

    /// Returns the numeric value when the polynomial is a constant.
    pub fn as_constant(&self) -> Option<C> {
        self.is_constant().then(|| self.constant_term())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SuperPoly {
            terms: self.terms.iter().map(|(f, x)| (f.clone(), x.clone() * c.clone())).collect(),
        }
    }

    /// Common parity of all terms. The zero polynomial counts as even.
    pub fn parity_of(&self) -> Result<Parity, AlgebraError> {
        let mut seen: Option<Parity> = None;
        for f in self.terms.keys() {
            let p = factors_parity(f);
            match seen {
                None => seen = Some(p),
                Some(q) if q != p => return Err(AlgebraError::MixedParity),
                _ => {}
            }
        }
        Ok(seen.unwrap_or(Parity::Even))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.parity_of().is_ok()
    }

    pub fn generators(&self) -> BTreeSet<Generator> {
        self.terms.keys().flat_map(|f| f.iter().map(|&(g, _)| g)).collect()
    }

    pub fn contains(&self, g: Generator) -> bool {
        self.terms.keys().any(|f| f.iter().any(|&(h, _)| h == g))
    }

    /// Highest total exponent of the selected generators over all terms.
    pub fn degree_in(&self, pred: impl Fn(Generator) -> bool) -> u32 {
        self.terms
            .keys()
            .map(|f| f.iter().filter(|(g, _)| pred(*g)).map(|&(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    /// True when every non-constant term contains at least one odd
    /// generator, i.e. the polynomial minus its constant is nilpotent.
    pub fn has_nilpotent_soul(&self) -> bool {
        self.terms.keys().all(|f| f.is_empty() || f.iter().any(|(g, _)| g.is_odd()))
    }

    /// Polynomial minus its constant term.
    pub fn soul(&self) -> Self {
        let mut p = self.clone();
        p.terms.remove(&Vec::new());
        p
    }

    /// Graded partial derivative acting from the right: each occurrence of
    /// `g` is moved to the rightmost position before removal.
    pub fn derive_right(&self, g: Generator) -> Self {
        self.derive(g, Side::Right)
    }

    /// Graded partial derivative acting from the left.
    pub fn derive_left(&self, g: Generator) -> Self {
        self.derive(g, Side::Left)
    }

    fn derive(&self, g: Generator, side: Side) -> Self {
        let mut out = Self::zero();
        for (factors, c) in &self.terms {
            let Some(pos) = factors.iter().position(|&(h, _)| h == g) else {
                continue;
            };
            let (_, e) = factors[pos];
            let mut rest = factors.clone();
            let coeff = if g.is_odd() {
                let crossed = match side {
                    Side::Left => factors[..pos].iter().filter(|(h, _)| h.is_odd()).count(),
                    Side::Right => factors[pos + 1..].iter().filter(|(h, _)| h.is_odd()).count(),
                };
                rest.remove(pos);
                if crossed % 2 == 1 {
                    -c.clone()
                } else {
                    c.clone()
                }
            } else {
                if e == 1 {
                    rest.remove(pos);
                } else {
                    rest[pos].1 = e - 1;
                }
                c.clone() * C::from_integer(e as i64)
            };
            out.add_term(rest, coeff);
        }
        out
    }

    /// Simultaneous substitution of generators by expressions of the same
    /// parity.
    pub fn substitute(&self, bindings: &BTreeMap<Generator, SuperPoly<C>>) -> Result<Self, AlgebraError> {
        for (g, e) in bindings {
            if !e.is_zero() && e.parity_of()? != g.parity() {
                return Err(AlgebraError::ParityMismatch { generator: format!("{g:?}") });
            }
        }
        Ok(self.substitute_unchecked(bindings))
    }

    pub(crate) fn substitute_unchecked(&self, bindings: &BTreeMap<Generator, SuperPoly<C>>) -> Self {
        if bindings.is_empty() {
            return self.clone();
        }
        let mut out = Self::zero();
        for (factors, c) in &self.terms {
            if !factors.iter().any(|(g, _)| bindings.contains_key(g)) {
                out.add_term(factors.clone(), c.clone());
                continue;
            }
            let mut acc = Self::constant(c.clone());
            // Untouched runs are multiplied in as single monomials.
            let mut run: Factors = Vec::new();
            for &(g, e) in factors {
                match bindings.get(&g) {
                    Some(rep) => {
                        if !run.is_empty() {
                            acc = &acc * &Self::from_factors(std::mem::take(&mut run));
                        }
                        for _ in 0..e {
                            acc = &acc * rep;
                        }
                    }
                    None => run.push((g, e)),
                }
                if acc.is_zero() {
                    break;
                }
            }
            if !run.is_empty() {
                acc = &acc * &Self::from_factors(run);
            }
            out += &acc;
        }
        out
    }

    fn from_factors(factors: Factors) -> Self {
        let mut p = Self::zero();
        p.add_term(factors, C::one());
        p
    }

    /// Replaces one generator.
    pub fn substitute_one(&self, g: Generator, rep: &SuperPoly<C>) -> Result<Self, AlgebraError> {
        let mut b = BTreeMap::new();
        b.insert(g, rep.clone());
        self.substitute(&b)
    }

    /// Sets the selected generators to zero.
    pub fn drop_generators(&self, pred: impl Fn(Generator) -> bool) -> Self {
        SuperPoly {
            terms: self
                .terms
                .iter()
                .filter(|(f, _)| !f.iter().any(|(g, _)| pred(*g)))
                .map(|(f, c)| (f.clone(), c.clone()))
                .collect(),
        }
    }

    /// Leading monomial in canonical order.
    pub fn leading(&self) -> Option<(&Factors, &C)> {
        self.terms.iter().next()
    }

    /// If `self` equals `c * other` for a numeric `c`, returns `c`.
    pub fn ratio_to(&self, other: &SuperPoly<C>) -> Option<C> {
        if self.len() != other.len() || other.is_zero() {
            return None;
        }
        let (f0, c0) = other.leading()?;
        let s0 = self.terms.get(f0)?;
        let ratio = s0.clone() / c0.clone();
        (other.scale(&ratio) == *self).then_some(ratio)
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

impl<C: Coefficient> From<Generator> for SuperPoly<C> {
    fn from(g: Generator) -> Self {
        SuperPoly::generator(g)
    }
}

impl<'a, C: Coefficient> Add<&'a SuperPoly<C>> for &'a SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn add(self, rhs: &SuperPoly<C>) -> SuperPoly<C> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<C: Coefficient> Add for SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn add(mut self, rhs: SuperPoly<C>) -> SuperPoly<C> {
        self += &rhs;
        self
    }
}

impl<C: Coefficient> AddAssign<&SuperPoly<C>> for SuperPoly<C> {
    fn add_assign(&mut self, rhs: &SuperPoly<C>) {
        for (f, c) in &rhs.terms {
            self.add_term(f.clone(), c.clone());
        }
    }
}

impl<C: Coefficient> SubAssign<&SuperPoly<C>> for SuperPoly<C> {
    fn sub_assign(&mut self, rhs: &SuperPoly<C>) {
        for (f, c) in &rhs.terms {
            self.add_term(f.clone(), -c.clone());
        }
    }
}

impl<'a, C: Coefficient> Sub<&'a SuperPoly<C>> for &'a SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn sub(self, rhs: &SuperPoly<C>) -> SuperPoly<C> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<C: Coefficient> Sub for SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn sub(mut self, rhs: SuperPoly<C>) -> SuperPoly<C> {
        self -= &rhs;
        self
    }
}

impl<C: Coefficient> Neg for &SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn neg(self) -> SuperPoly<C> {
        SuperPoly { terms: self.terms.iter().map(|(f, c)| (f.clone(), -c.clone())).collect() }
    }
}

impl<C: Coefficient> Neg for SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn neg(self) -> SuperPoly<C> {
        -&self
    }
}

impl<'a, C: Coefficient> Mul<&'a SuperPoly<C>> for &'a SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn mul(self, rhs: &SuperPoly<C>) -> SuperPoly<C> {
        let mut out = SuperPoly::zero();
        for (fa, ca) in &self.terms {
            for (fb, cb) in &rhs.terms {
                if let Some((neg, f)) = merge_factors(fa, fb) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(f, if neg { -c } else { c });
                }
            }
        }
        out
    }
}

impl<C: Coefficient> Mul for SuperPoly<C> {
    type Output = SuperPoly<C>;

    fn mul(self, rhs: SuperPoly<C>) -> SuperPoly<C> {
        &self * &rhs
    }
}

impl<C: Coefficient> std::iter::Sum for SuperPoly<C> {
    fn sum<I: Iterator<Item = SuperPoly<C>>>(iter: I) -> Self {
        let mut out = SuperPoly::zero();
        for p in iter {
            out += &p;
        }
        out
    }
}
