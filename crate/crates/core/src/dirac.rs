//! Dirac's constraint algorithm over graded phase space.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::brackets::{berezin, PhaseBasis};
use crate::legendre::{LagrangianModel, LegendreResult};
use crate::superalgebra::{AlgebraError, Coefficient, GaussianRational, Generator, GeneratorTable, Kind, PolyMatrix, SuperPoly};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiracError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("inconsistent dynamics: consistency of {constraint} requires {value} = 0")]
    Inconsistent { constraint: String, value: String },
    #[error("constraint {constraint} has no solved form but `{generator}` occurs in the expression being reduced")]
    UnsolvableConstraint { constraint: String, generator: String },
    #[error("consistency of {0} leaves multipliers with non-invertible coefficients")]
    UndeterminedMultiplier(String),
    #[error("constraints did not close within {0} rounds")]
    NoClosure(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintClass {
    First,
    Second,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRecord<C = GaussianRational> {
    pub label: String,
    pub expr: SuperPoly<C>,
    pub stage: usize,
    pub class: ConstraintClass,
    pub solved_form: Option<(Generator, SuperPoly<C>)>,
}

/// Finds `g = rep` with `g` a canonical generator occurring only in a single
/// linear term with a numeric coefficient. Momenta are preferred.
pub fn solved_form<C: Coefficient>(expr: &SuperPoly<C>) -> Option<(Generator, SuperPoly<C>)> {
    let (g, c) = isolatable_term(expr)?;
    let inv = c.inverse()?;
    let rest = expr - &SuperPoly::generator(g).scale(&c);
    Some((g, -rest.scale(&inv)))
}

fn isolatable_term<C: Coefficient>(expr: &SuperPoly<C>) -> Option<(Generator, C)> {
    let mut candidates: Vec<(Generator, C)> = expr
        .terms()
        .filter_map(|(f, c)| match f.as_slice() {
            [(g, 1)] if matches!(g.kind(), Kind::Coordinate | Kind::Momentum) => Some((*g, c.clone())),
            _ => None,
        })
        .filter(|(g, _)| expr.terms().filter(|(f, _)| f.iter().any(|(h, _)| h == g)).count() == 1)
        .collect();
    candidates.sort_by_key(|(g, _)| (g.kind() != Kind::Momentum, *g));
    candidates.into_iter().next()
}

/// Rescales so that the isolatable term, if any, has coefficient one.
pub fn make_monic<C: Coefficient>(expr: &SuperPoly<C>) -> SuperPoly<C> {
    match isolatable_term(expr).and_then(|(_, c)| c.inverse()) {
        Some(inv) => expr.scale(&inv),
        None => expr.clone(),
    }
}

/// Weak equality by substitution of solved forms.
#[derive(Debug, Clone)]
pub struct WeakReducer<C = GaussianRational> {
    solved: BTreeMap<Generator, SuperPoly<C>>,
    unsolved: Vec<(String, SuperPoly<C>)>,
}

impl<C: Coefficient> WeakReducer<C> {
    pub fn new<'a, I>(constraints: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a SuperPoly<C>)>,
    {
        let mut r = WeakReducer { solved: BTreeMap::new(), unsolved: Vec::new() };
        let mut pending = Vec::new();
        for (label, expr) in constraints {
            let reduced = r.substitute(expr);
            match solved_form(&reduced) {
                Some((g, rep)) => {
                    let single = BTreeMap::from([(g, rep.clone())]);
                    for v in r.solved.values_mut() {
                        *v = v.substitute_unchecked(&single);
                    }
                    r.solved.insert(g, rep);
                }
                None => pending.push((label.to_string(), expr.clone())),
            }
        }
        for (label, expr) in pending {
            let reduced = r.substitute(&expr);
            if !reduced.is_zero() {
                r.unsolved.push((label, reduced));
            }
        }
        r
    }

    pub fn solved(&self) -> &BTreeMap<Generator, SuperPoly<C>> {
        &self.solved
    }

    /// Constraints without a solved form, already reduced.
    pub fn unsolved(&self) -> &[(String, SuperPoly<C>)] {
        &self.unsolved
    }

    fn substitute(&self, p: &SuperPoly<C>) -> SuperPoly<C> {
        let mut cur = p.clone();
        for _ in 0..=self.solved.len() {
            if !cur.generators().iter().any(|g| self.solved.contains_key(g)) {
                break;
            }
            cur = cur.substitute_unchecked(&self.solved);
        }
        cur
    }

    /// Canonical representative on the constraint surface.
    pub fn reduce(&self, p: &SuperPoly<C>, table: &GeneratorTable) -> Result<SuperPoly<C>, DiracError> {
        let cur = self.substitute(p);
        if cur.is_zero() {
            return Ok(cur);
        }
        for (_, u) in &self.unsolved {
            if cur.ratio_to(u).is_some() {
                return Ok(SuperPoly::zero());
            }
        }
        for (label, u) in &self.unsolved {
            let blocked = u.generators().into_iter().find(|g| g.kind() == Kind::Momentum && cur.contains(*g));
            if let Some(g) = blocked {
                return Err(DiracError::UnsolvableConstraint {
                    constraint: label.clone(),
                    generator: table.name(g).to_string(),
                });
            }
        }
        Ok(cur)
    }

    pub fn is_weakly_zero(&self, p: &SuperPoly<C>, table: &GeneratorTable) -> Result<bool, DiracError> {
        Ok(self.reduce(p, table)?.is_zero())
    }
}

/// Result of imposing `{Φ_μ, H_P} ≈ 0` on one constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyOutcome<C = GaussianRational> {
    IdenticallyZero,
    /// Fixes the listed multipliers.
    DeterminesMultipliers(Vec<Generator>),
    NewConstraint(SuperPoly<C>),
    /// Weakly zero only after determined multipliers are substituted, or
    /// equal to a constraint already found in this round.
    WeaklyZero,
}

#[derive(Debug, Clone)]
pub struct ConsistencyRecord<C = GaussianRational> {
    pub round: usize,
    pub constraint: usize,
    pub condition: SuperPoly<C>,
    pub outcome: ConsistencyOutcome<C>,
}

/// Body null vector of Δ lifted to the full algebra.
#[derive(Debug, Clone)]
pub struct NullVector<C = GaussianRational> {
    /// Index of the constraint the combination replaces.
    pub replaces: usize,
    /// Coefficients over all constraints (entry `replaces` is one), placed
    /// to the right of the constraints.
    pub coefficients: Vec<SuperPoly<C>>,
    /// True when `Δ v` weakly vanishes on every row.
    pub lifted: bool,
}

#[derive(Debug, Clone)]
pub struct DiracAnalysis<C = GaussianRational> {
    pub basis: PhaseBasis,
    pub primary_hamiltonian: SuperPoly<C>,
    pub constraints: Vec<ConstraintRecord<C>>,
    /// Constraints as found by the consistency loop, before recombination.
    pub found: Vec<ConstraintRecord<C>>,
    pub log: Vec<ConsistencyRecord<C>>,
    /// `{Φ_s, Φ_t}` over `found`, weakly reduced.
    pub initial_delta: PolyMatrix<C>,
    pub null_vectors: Vec<NullVector<C>>,
    /// `{Φ_s, Φ_t}` over the final `constraints`, weakly reduced.
    pub delta: PolyMatrix<C>,
    pub second_class: Vec<usize>,
    pub delta_inverse: PolyMatrix<C>,
    /// Multiplier generator to its determined value.
    pub multipliers: BTreeMap<Generator, SuperPoly<C>>,
    /// Multipliers left arbitrary.
    pub free_multipliers: Vec<Generator>,
    pub reducer: WeakReducer<C>,
}

pub fn constraint_matrix<C: Coefficient>(
    constraints: &[SuperPoly<C>],
    basis: &PhaseBasis,
    reducer: &WeakReducer<C>,
    table: &GeneratorTable,
) -> Result<PolyMatrix<C>, DiracError> {
    PolyMatrix::try_from_fn(constraints.len(), constraints.len(), |s, t| {
        reducer.reduce(&berezin(&constraints[s], &constraints[t], basis)?, table)
    })
}

fn reducer_for<C: Coefficient>(records: &[ConstraintRecord<C>]) -> WeakReducer<C> {
    WeakReducer::new(records.iter().map(|r| (r.label.as_str(), &r.expr)))
}

fn substitute_to_fixpoint<C: Coefficient>(p: &SuperPoly<C>, b: &BTreeMap<Generator, SuperPoly<C>>) -> SuperPoly<C> {
    let mut cur = p.clone();
    for _ in 0..=b.len() {
        if !cur.generators().iter().any(|g| b.contains_key(g)) {
            break;
        }
        cur = cur.substitute_unchecked(b);
    }
    cur
}

/// Splits `c = A + Σ B_f v^f` for multipliers placed rightmost.
fn split_linear<C: Coefficient>(c: &SuperPoly<C>, free: &[Generator]) -> (SuperPoly<C>, Vec<SuperPoly<C>>) {
    let a = c.drop_generators(|g| free.contains(&g));
    let b = free.iter().map(|&v| c.derive_right(v)).collect();
    (a, b)
}

/// `Δ⁻¹`-corrected bracket over the second-class constraints.
pub fn dirac_bracket<C: Coefficient>(
    f: &SuperPoly<C>,
    g: &SuperPoly<C>,
    analysis: &DiracAnalysis<C>,
    table: &GeneratorTable,
) -> Result<SuperPoly<C>, DiracError> {
    let basis = &analysis.basis;
    let sc: Vec<&SuperPoly<C>> = analysis.second_class.iter().map(|&i| &analysis.constraints[i].expr).collect();
    let left: Vec<SuperPoly<C>> = sc.iter().map(|phi| berezin(f, phi, basis)).collect::<Result<_, _>>()?;
    let right: Vec<SuperPoly<C>> = sc.iter().map(|phi| berezin(phi, g, basis)).collect::<Result<_, _>>()?;
    let mut out = berezin(f, g, basis)?;
    for (s, fs) in left.iter().enumerate() {
        if fs.is_zero() {
            continue;
        }
        for (t, gt) in right.iter().enumerate() {
            let d = analysis.delta_inverse.get(s, t);
            if gt.is_zero() || d.is_zero() {
                continue;
            }
            out -= &(&(fs * d) * gt);
        }
    }
    analysis.reducer.reduce(&out, table)
}

/// Runs the consistency loop, classification and Dirac-bracket setup.
pub fn run_dirac<C: Coefficient>(
    model: &LagrangianModel<C>,
    legendre: &LegendreResult<C>,
) -> Result<DiracAnalysis<C>, DiracError> {
    let table = &model.table;
    let basis = PhaseBasis::canonical(table);
    let h0 = &legendre.h0;

    let mut found: Vec<ConstraintRecord<C>> = legendre
        .primary_constraints()
        .into_iter()
        .map(|(a, expr)| {
            let name = table.name(legendre.coordinates[a].coordinate);
            ConstraintRecord {
                label: format!("primary[{name}]"),
                solved_form: solved_form(&expr),
                expr,
                stage: 0,
                class: ConstraintClass::Undetermined,
            }
        })
        .collect();
    let mult_of: Vec<Generator> =
        legendre.primary_h.iter().map(|(a, _)| legendre.coordinates[*a].multiplier).collect();
    let mut hp = h0.clone();
    for (rec, &v) in found.iter().zip(&mult_of) {
        hp += &(&rec.expr * &SuperPoly::generator(v));
    }

    let mut multipliers: BTreeMap<Generator, SuperPoly<C>> = BTreeMap::new();
    let mut log = Vec::new();
    let mut pending: Vec<usize> = (0..found.len()).collect();
    let max_rounds = 2 * basis.len() + 2;
    let mut round = 0;
    while !pending.is_empty() {
        round += 1;
        if round > max_rounds {
            return Err(DiracError::NoClosure(max_rounds));
        }
        let reducer = reducer_for(&found);
        let free: Vec<Generator> = mult_of.iter().copied().filter(|v| !multipliers.contains_key(v)).collect();
        let mut rows = Vec::new();
        for &mu in &pending {
            let raw = berezin(&found[mu].expr, &hp, &basis)?;
            let cond = reducer.reduce(&substitute_to_fixpoint(&raw, &multipliers), table)?;
            let (a, b) = split_linear(&cond, &free);
            rows.push((mu, cond, a, b));
        }
        // Body pivots of the multiplier coefficients decide which rows fix
        // multipliers.
        let bmat = PolyMatrix::from_fn(rows.len(), free.len(), |r, f| rows[r].3[f].clone());
        let (pivot_rows, pivot_cols) = match bmat.body() {
            Ok(body) if free.is_empty() || rows.is_empty() => {
                let _ = body;
                (Vec::new(), Vec::new())
            }
            Ok(body) => {
                let pr = body.independent_rows();
                let pc = body.select(&pr, &(0..free.len()).collect::<Vec<_>>()).row_echelon().pivot_cols;
                (pr, pc)
            }
            Err(AlgebraError::NonNumericBody) => {
                return Err(DiracError::UndeterminedMultiplier(found[rows[0].0].label.clone()))
            }
            Err(e) => return Err(e.into()),
        };
        let mut determined = Vec::new();
        if !pivot_rows.is_empty() {
            let block = bmat.select(&pivot_rows, &pivot_cols);
            let inv = block.inverse()?;
            let rest: Vec<usize> = (0..free.len()).filter(|f| !pivot_cols.contains(f)).collect();
            let rhs: Vec<SuperPoly<C>> = pivot_rows
                .iter()
                .map(|&r| {
                    let mut e = rows[r].2.clone();
                    for &f in &rest {
                        e += &(&rows[r].3[f] * &SuperPoly::generator(free[f]));
                    }
                    e
                })
                .collect();
            let sol = inv.apply(&rhs);
            for (k, &c) in pivot_cols.iter().enumerate() {
                let value = reducer.reduce(&-sol[k].clone(), table)?;
                multipliers.insert(free[c], value);
                determined.push(free[c]);
            }
            for v in multipliers.clone().keys() {
                let resolved = substitute_to_fixpoint(&multipliers[v], &multipliers);
                multipliers.insert(*v, resolved);
            }
        }
        let mut next = Vec::new();
        let mut round_new: Vec<SuperPoly<C>> = Vec::new();
        for (r, (mu, cond, _, _)) in rows.iter().enumerate() {
            let outcome = if pivot_rows.contains(&r) {
                ConsistencyOutcome::DeterminesMultipliers(determined.clone())
            } else if cond.is_zero() {
                ConsistencyOutcome::IdenticallyZero
            } else {
                let rem = reducer.reduce(&substitute_to_fixpoint(cond, &multipliers), table)?;
                if rem.is_zero() {
                    ConsistencyOutcome::WeaklyZero
                } else if rem.generators().iter().any(|g| mult_of.contains(g)) {
                    return Err(DiracError::UndeterminedMultiplier(found[*mu].label.clone()));
                } else if rem.is_constant() {
                    return Err(DiracError::Inconsistent {
                        constraint: found[*mu].label.clone(),
                        value: rem.to_text(table),
                    });
                } else {
                    let expr = make_monic(&rem);
                    if round_new.iter().any(|e| expr.ratio_to(e).is_some()) {
                        ConsistencyOutcome::WeaklyZero
                    } else {
                        round_new.push(expr.clone());
                        next.push(found.len());
                        found.push(ConstraintRecord {
                            label: format!("stage{round}[{}]", found[*mu].label),
                            solved_form: solved_form(&expr),
                            expr: expr.clone(),
                            stage: round,
                            class: ConstraintClass::Undetermined,
                        });
                        ConsistencyOutcome::NewConstraint(expr)
                    }
                }
            };
            log.push(ConsistencyRecord { round, constraint: *mu, condition: cond.clone(), outcome });
        }
        pending = next;
    }

    let found_reducer = reducer_for(&found);
    let exprs: Vec<SuperPoly<C>> = found.iter().map(|r| r.expr.clone()).collect();
    let initial_delta = constraint_matrix(&exprs, &basis, &found_reducer, table)?;
    let (constraints, null_vectors, second_class) = classify(&found, &initial_delta, &found_reducer, table)?;
    let reducer = reducer_for(&constraints);
    let final_exprs: Vec<SuperPoly<C>> = constraints.iter().map(|r| r.expr.clone()).collect();
    let delta = constraint_matrix(&final_exprs, &basis, &reducer, table)?;
    let delta_inverse = delta.select(&second_class, &second_class).inverse()?;
    let free_multipliers = mult_of.iter().copied().filter(|v| !multipliers.contains_key(v)).collect();
    Ok(DiracAnalysis {
        basis,
        primary_hamiltonian: hp,
        constraints,
        found,
        log,
        initial_delta,
        null_vectors,
        delta,
        second_class,
        delta_inverse,
        multipliers,
        free_multipliers,
        reducer,
    })
}

type Classified<C> = (Vec<ConstraintRecord<C>>, Vec<NullVector<C>>, Vec<usize>);

/// Body pivots of Δ give the second-class set; every other constraint is
/// replaced by its lifted null-vector combination.
pub fn first_class_recombination<C: Coefficient>(
    found: &[ConstraintRecord<C>],
    delta: &PolyMatrix<C>,
    reducer: &WeakReducer<C>,
    table: &GeneratorTable,
) -> Result<Classified<C>, DiracError> {
    classify(found, delta, reducer, table)
}

fn classify<C: Coefficient>(
    found: &[ConstraintRecord<C>],
    delta: &PolyMatrix<C>,
    reducer: &WeakReducer<C>,
    table: &GeneratorTable,
) -> Result<Classified<C>, DiracError> {
    let n = found.len();
    let body = delta.body()?;
    let second: Vec<usize> = body.row_echelon().pivot_cols;
    let rest: Vec<usize> = (0..n).filter(|j| !second.contains(j)).collect();
    let inv = delta.select(&second, &second).inverse()?;
    let mut out: Vec<ConstraintRecord<C>> = found.to_vec();
    let mut nulls = Vec::new();
    for &i in &second {
        out[i].class = ConstraintClass::Second;
    }
    for &j in &rest {
        let col: Vec<SuperPoly<C>> = second.iter().map(|&s| delta.get(s, j).clone()).collect();
        let vb: Vec<SuperPoly<C>> = inv.apply(&col).into_iter().map(|x| -x).collect();
        let mut coefficients = vec![SuperPoly::zero(); n];
        coefficients[j] = SuperPoly::one();
        for (k, &s) in second.iter().enumerate() {
            coefficients[s] = vb[k].clone();
        }
        let mut lifted = true;
        for row in delta.apply(&coefficients) {
            if !reducer.is_weakly_zero(&row, table)? {
                lifted = false;
            }
        }
        let trivial = second.iter().all(|&s| coefficients[s].is_zero());
        if !trivial {
            let mut expr = found[j].expr.clone();
            for &s in &second {
                expr += &(&found[s].expr * &coefficients[s]);
            }
            out[j].expr = expr;
            out[j].label = format!("combined[{}]", found[j].label);
            out[j].solved_form = solved_form(&out[j].expr);
        }
        out[j].class = if lifted { ConstraintClass::First } else { ConstraintClass::Undetermined };
        if !trivial {
            nulls.push(NullVector { replaces: j, coefficients, lifted });
        }
    }
    Ok((out, nulls, second))
}
