//! Hamilton-Jacobi description of singular systems: the family `H′_α`, the
//! characteristic total differential equations and their integrability.

use std::collections::BTreeMap;

use crate::brackets::{berezin, symplectic_bracket, PhaseBasis, SymplecticMetric};
use crate::dirac::{make_monic, DiracAnalysis, DiracError, WeakReducer};
use crate::legendre::LegendreResult;
use crate::superalgebra::{AlgebraError, Coefficient, GaussianRational, Generator, GeneratorTable, Parity, PolyMatrix, SuperPoly};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HjError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Reduction(#[from] DiracError),
    #[error("inconsistent: integrability of {hamiltonian} requires {value} = 0")]
    Inconsistent { hamiltonian: String, value: String },
    #[error("integrability closure did not finish within {0} rounds")]
    NoClosure(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPrime<C = GaussianRational> {
    pub label: String,
    pub expr: SuperPoly<C>,
    /// Evolution parameter `t^α`; `None` for Hamiltonians added by closure.
    pub parameter: Option<Generator>,
}

impl<C: Coefficient> HPrime<C> {
    pub fn parity(&self) -> Parity {
        self.expr.parity_of().unwrap_or(Parity::Even)
    }
}

#[derive(Debug, Clone)]
pub struct HJSystem<C = GaussianRational> {
    /// `t⁰ = t` followed by the unexpressed coordinates.
    pub parameters: Vec<Generator>,
    /// `H′₀ … H′_R`, aligned with `parameters`.
    pub hamiltonians: Vec<HPrime<C>>,
    /// `H_β` without the momentum, aligned with `parameters` (`H₀` first).
    pub h: Vec<SuperPoly<C>>,
    /// Coordinates whose velocities were expressed.
    pub expressed: Vec<(Generator, Generator)>,
    pub basis: PhaseBasis,
}

pub fn build_hj_system<C: Coefficient>(table: &GeneratorTable, legendre: &LegendreResult<C>) -> HJSystem<C> {
    let t = table.time();
    let mut parameters = vec![t];
    let mut hamiltonians = vec![HPrime {
        label: "H'[t]".into(),
        expr: &SuperPoly::generator(table.time_momentum()) + &legendre.h0,
        parameter: Some(t),
    }];
    let mut h = vec![legendre.h0.clone()];
    for (a, phi) in legendre.primary_constraints() {
        let q = legendre.coordinates[a].coordinate;
        parameters.push(q);
        hamiltonians.push(HPrime { label: format!("H'[{}]", table.name(q)), expr: phi, parameter: Some(q) });
        h.push(legendre.primary_h.iter().find(|(b, _)| *b == a).map(|(_, x)| x.clone()).unwrap_or_default());
    }
    let expressed = legendre
        .expressed
        .iter()
        .map(|&a| (legendre.coordinates[a].coordinate, legendre.coordinates[a].momentum))
        .collect();
    HJSystem { parameters, hamiltonians, h, expressed, basis: PhaseBasis::extended(table) }
}

/// Coefficients of `dt^α` (placed to the right) in the characteristic
/// equations; rows follow the extended basis, columns the parameters.
#[derive(Debug, Clone)]
pub struct TotalDifferentialSystem<C = GaussianRational> {
    pub coordinates: Vec<(Generator, Generator)>,
    pub parameters: Vec<Generator>,
    pub dq: Vec<Vec<SuperPoly<C>>>,
    pub dp: Vec<Vec<SuperPoly<C>>>,
    pub dz: Vec<SuperPoly<C>>,
    pub hamiltonians: Vec<SuperPoly<C>>,
}

pub fn total_differentials<C: Coefficient>(sys: &HJSystem<C>) -> TotalDifferentialSystem<C> {
    let pairs = sys.basis.pairs().to_vec();
    let parities: Vec<Parity> = sys.hamiltonians.iter().map(HPrime::parity).collect();
    let negate = |flag: bool, p: SuperPoly<C>| if flag { -p } else { p };
    let dq = pairs
        .iter()
        .map(|&(q, p)| {
            sys.hamiltonians
                .iter()
                .zip(&parities)
                .map(|(hp, &pa)| {
                    let pi = q.parity();
                    negate(pi.is_odd() ^ pi.sign_with(pa), hp.expr.derive_right(p))
                })
                .collect()
        })
        .collect();
    let dp = pairs
        .iter()
        .map(|&(q, _)| {
            sys.hamiltonians
                .iter()
                .zip(&parities)
                .map(|(hp, &pa)| negate(!q.parity().sign_with(pa), hp.expr.derive_right(q)))
                .collect()
        })
        .collect();
    let dz = sys
        .hamiltonians
        .iter()
        .zip(&parities)
        .zip(&sys.h)
        .map(|((hp, &pb), hb)| {
            let mut c = -hb.clone();
            for &(q, p) in &sys.expressed {
                let pa = q.parity();
                let term = &SuperPoly::generator(p) * &hp.expr.derive_right(p);
                c += &negate(pa.is_odd() ^ pa.sign_with(pb), term);
            }
            c
        })
        .collect();
    TotalDifferentialSystem {
        coordinates: pairs,
        parameters: sys.parameters.clone(),
        dq,
        dp,
        dz,
        hamiltonians: sys.hamiltonians.iter().map(|h| h.expr.clone()).collect(),
    }
}

/// Rows by basis pair, columns by parameter.
pub type CoefficientTable<C> = Vec<Vec<SuperPoly<C>>>;

/// Left-derivative route `dη^I = E^{IJ} ∂l H′_α/∂η^J dt^α`; returns the
/// coefficients of `dq` and `dp` in the same layout as `total_differentials`.
pub fn symplectic_differentials<C: Coefficient>(sys: &HJSystem<C>) -> (CoefficientTable<C>, CoefficientTable<C>) {
    let metric = SymplecticMetric::new(&sys.basis);
    let eta = metric.coordinates();
    let n = sys.basis.len();
    let rows = |offset: usize| -> Vec<Vec<SuperPoly<C>>> {
        (0..n)
            .map(|i| {
                sys.hamiltonians
                    .iter()
                    .map(|hp| {
                        let mut c = SuperPoly::zero();
                        for (j, &g) in eta.iter().enumerate() {
                            match metric.entry(offset + i, j) {
                                0 => {}
                                e if e > 0 => c += &hp.expr.derive_left(g),
                                _ => c -= &hp.expr.derive_left(g),
                            }
                        }
                        c
                    })
                    .collect()
            })
            .collect()
    };
    (rows(0), rows(n))
}

/// `X_α f = {f, H′_α}` over the extended basis.
pub fn apply_x<C: Coefficient>(sys: &HJSystem<C>, alpha: usize, f: &SuperPoly<C>) -> Result<SuperPoly<C>, AlgebraError> {
    berezin(f, &sys.hamiltonians[alpha].expr, &sys.basis)
}

/// `dF = Σ_α c_α dt^α` assembled from the flow coefficients.
pub fn differential_of<C: Coefficient>(tds: &TotalDifferentialSystem<C>, f: &SuperPoly<C>) -> Vec<SuperPoly<C>> {
    (0..tds.parameters.len())
        .map(|a| {
            let mut c = SuperPoly::zero();
            for (i, &(q, p)) in tds.coordinates.iter().enumerate() {
                c += &(&f.derive_right(q) * &tds.dq[i][a]);
                c += &(&f.derive_right(p) * &tds.dp[i][a]);
            }
            c
        })
        .collect()
}

/// Metric route for `dF`, via `{F, H′_α}` in the form `∂r F/∂η E ∂l H′/∂η`.
pub fn differential_of_symplectic<C: Coefficient>(
    sys: &HJSystem<C>,
    f: &SuperPoly<C>,
) -> Result<Vec<SuperPoly<C>>, AlgebraError> {
    let metric = SymplecticMetric::new(&sys.basis);
    sys.hamiltonians.iter().map(|hp| symplectic_bracket(f, &hp.expr, &metric)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HjOutcome {
    IdenticallyZero,
    WeaklyZero,
    /// Index into `IntegrabilityReport::added`.
    NewHamiltonian(usize),
    DifferentialRelation,
}

/// `dt^p = dt0 · dt⁰ + Σ_f coefficient · dt^f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtRelation<C = GaussianRational> {
    pub parameter: Generator,
    pub dt0: SuperPoly<C>,
    pub free: Vec<(Generator, SuperPoly<C>)>,
}

#[derive(Debug, Clone)]
pub struct IntegrabilityReport<C = GaussianRational> {
    /// All Hamiltonians after closure: the system's ones then the added.
    pub hamiltonians: Vec<HPrime<C>>,
    pub added: Vec<usize>,
    /// `{H′_μ, H′_α}` for all rows `μ` and parameter columns `α`.
    pub bracket_matrix: PolyMatrix<C>,
    pub weak_bracket_matrix: PolyMatrix<C>,
    pub outcomes: Vec<HjOutcome>,
    pub dt_relations: Vec<DtRelation<C>>,
    pub free_parameters: Vec<Generator>,
    pub rounds: usize,
    pub reducer: WeakReducer<C>,
}

impl<C: Coefficient> IntegrabilityReport<C> {
    /// Every bracket vanishes identically.
    pub fn strictly_integrable(&self) -> bool {
        self.added.is_empty() && self.dt_relations.is_empty() && self.bracket_matrix.is_zero()
    }
}

pub fn integrability_matrix<C: Coefficient>(
    hams: &[HPrime<C>],
    columns: &[usize],
    basis: &PhaseBasis,
) -> Result<PolyMatrix<C>, AlgebraError> {
    PolyMatrix::try_from_fn(hams.len(), columns.len(), |m, a| berezin(&hams[m].expr, &hams[columns[a]].expr, basis))
}

fn reducer_for<C: Coefficient>(hams: &[HPrime<C>]) -> WeakReducer<C> {
    WeakReducer::new(hams.iter().skip(1).map(|h| (h.label.as_str(), &h.expr)))
}

pub fn closure_loop<C: Coefficient>(
    sys: &HJSystem<C>,
    table: &GeneratorTable,
    max_rounds: usize,
) -> Result<IntegrabilityReport<C>, HjError> {
    let r = sys.parameters.len();
    let columns: Vec<usize> = (0..r).collect();
    let mut hams = sys.hamiltonians.clone();
    let mut added: Vec<usize> = Vec::new();
    let mut first_event: BTreeMap<usize, HjOutcome> = BTreeMap::new();
    let mut round = 0;
    loop {
        round += 1;
        if round > max_rounds {
            return Err(HjError::NoClosure(max_rounds));
        }
        let reducer = reducer_for(&hams);
        let raw = integrability_matrix(&hams, &columns, &sys.basis)?;
        let weak = PolyMatrix::try_from_fn(raw.rows(), raw.cols(), |m, a| reducer.reduce(raw.get(m, a), table))?;
        // Rows in order H′_1..H′_R, added, H′_0.
        let order: Vec<usize> = (1..hams.len()).chain(std::iter::once(0)).collect();
        let free_cols: Vec<usize> = (1..r).collect();
        let b = PolyMatrix::from_fn(order.len(), free_cols.len(), |i, f| weak.get(order[i], free_cols[f]).clone());
        let (pivot_rows, pivot_cols) = if free_cols.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            // Rows with a non-numeric coefficient cannot solve for a dt^f;
            // they are examined for new Hamiltonians instead.
            let all: Vec<usize> = (0..free_cols.len()).collect();
            let numeric: Vec<usize> = (0..order.len()).filter(|&i| b.select(&[i], &all).body().is_ok()).collect();
            let body = b.select(&numeric, &all).body()?;
            let pr: Vec<usize> = body.independent_rows().into_iter().map(|k| numeric[k]).collect();
            let pc = b.select(&pr, &all).body()?.row_echelon().pivot_cols;
            (pr, pc)
        };
        let rest: Vec<usize> = (0..free_cols.len()).filter(|f| !pivot_cols.contains(f)).collect();
        // K = −B⁻¹ [C_·0 | C_·rest]
        let mut relations = Vec::new();
        let mut k0: Vec<SuperPoly<C>> = Vec::new();
        let mut kf: Vec<Vec<SuperPoly<C>>> = Vec::new();
        if !pivot_rows.is_empty() {
            let inv = b.select(&pivot_rows, &pivot_cols).inverse()?;
            let c0: Vec<SuperPoly<C>> = pivot_rows.iter().map(|&i| weak.get(order[i], 0).clone()).collect();
            k0 = inv.apply(&c0).into_iter().map(|x| reducer.reduce(&-x, table)).collect::<Result<_, _>>()?;
            kf = vec![Vec::new(); pivot_cols.len()];
            for &f in &rest {
                let cf: Vec<SuperPoly<C>> =
                    pivot_rows.iter().map(|&i| weak.get(order[i], free_cols[f]).clone()).collect();
                for (k, x) in inv.apply(&cf).into_iter().enumerate() {
                    kf[k].push(reducer.reduce(&-x, table)?);
                }
            }
            for (k, &pc) in pivot_cols.iter().enumerate() {
                relations.push(DtRelation {
                    parameter: sys.parameters[free_cols[pc]],
                    dt0: k0[k].clone(),
                    free: rest.iter().map(|&f| sys.parameters[free_cols[f]]).zip(kf[k].clone()).collect(),
                });
            }
        }
        let mut outcomes = vec![HjOutcome::IdenticallyZero; hams.len()];
        let mut candidates: Vec<(usize, SuperPoly<C>)> = Vec::new();
        for (i, &m) in order.iter().enumerate() {
            if pivot_rows.contains(&i) {
                outcomes[m] = HjOutcome::DifferentialRelation;
                continue;
            }
            // Remaining coefficients of dt⁰ and of each free dt^f.
            let subst = |col: usize, ks: &dyn Fn(usize) -> SuperPoly<C>| -> SuperPoly<C> {
                let mut c = weak.get(m, col).clone();
                for (k, &pc) in pivot_cols.iter().enumerate() {
                    c += &(weak.get(m, free_cols[pc]) * &ks(k));
                }
                c
            };
            let mut remaining = vec![subst(0, &|k| k0[k].clone())];
            for (j, &f) in rest.iter().enumerate() {
                remaining.push(subst(free_cols[f], &|k| kf[k][j].clone()));
            }
            let mut row_outcome = if (0..r).all(|a| raw.get(m, a).is_zero()) {
                HjOutcome::IdenticallyZero
            } else {
                HjOutcome::WeaklyZero
            };
            for c in remaining {
                let c = reducer.reduce(&c, table)?;
                if c.is_zero() {
                    continue;
                }
                if c.is_constant() {
                    return Err(HjError::Inconsistent { hamiltonian: hams[m].label.clone(), value: c.to_text(table) });
                }
                let c = make_monic(&c);
                let known = hams.iter().any(|h| c.ratio_to(&h.expr).is_some())
                    || candidates.iter().any(|(_, e)| c.ratio_to(e).is_some());
                if !known {
                    candidates.push((m, c));
                    row_outcome = HjOutcome::NewHamiltonian(usize::MAX);
                }
            }
            outcomes[m] = row_outcome;
        }
        for (m, o) in outcomes.iter().enumerate() {
            if matches!(o, HjOutcome::NewHamiltonian(_) | HjOutcome::DifferentialRelation) {
                first_event.entry(m).or_insert(o.clone());
            }
        }
        if candidates.is_empty() {
            let mut final_outcomes = outcomes;
            for (m, o) in first_event {
                final_outcomes[m] = o;
            }
            let free_parameters = rest.iter().map(|&f| sys.parameters[free_cols[f]]).collect();
            return Ok(IntegrabilityReport {
                hamiltonians: hams,
                added,
                bracket_matrix: raw,
                weak_bracket_matrix: weak,
                outcomes: final_outcomes,
                dt_relations: relations,
                free_parameters,
                rounds: round,
                reducer,
            });
        }
        for (m, c) in candidates {
            let idx = hams.len();
            first_event.insert(m, HjOutcome::NewHamiltonian(added.len()));
            added.push(idx);
            hams.push(HPrime { label: format!("H'#{}", added.len()), expr: c, parameter: None });
        }
    }
}

/// Outcome of comparing the Dirac and Hamilton-Jacobi analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub matched: Vec<String>,
    pub mismatches: Vec<String>,
}

impl CrossCheck {
    pub fn is_equivalent(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_equivalent() {
            "equivalent"
        } else {
            "mismatch"
        }
    }
}

pub fn cross_check_dirac<C: Coefficient>(
    report: &IntegrabilityReport<C>,
    dirac: &DiracAnalysis<C>,
    table: &GeneratorTable,
) -> Result<CrossCheck, HjError> {
    let mut matched = Vec::new();
    let mut mismatches = Vec::new();
    let primary: Vec<&HPrime<C>> = report.hamiltonians.iter().filter(|h| h.parameter.is_some()).skip(1).collect();
    let base = WeakReducer::new(primary.iter().map(|h| (h.label.as_str(), &h.expr)));
    let mut used = vec![false; report.added.len()];
    for rec in dirac.found.iter().filter(|r| r.stage > 0) {
        let d = base.reduce(&rec.expr, table)?;
        let hit = report.added.iter().enumerate().find(|(k, &i)| {
            !used[*k] && base.reduce(&report.hamiltonians[i].expr, table).map(|h| h.ratio_to(&d).is_some()).unwrap_or(false)
        });
        match hit {
            Some((k, &i)) => {
                used[k] = true;
                matched.push(format!("{} <-> {}", rec.label, report.hamiltonians[i].label));
            }
            None => mismatches.push(format!("secondary {} has no added Hamiltonian", rec.label)),
        }
    }
    for (k, &i) in report.added.iter().enumerate() {
        if !used[k] {
            mismatches.push(format!("added {} has no secondary constraint", report.hamiltonians[i].label));
        }
    }
    let mult_to_param = |v: Generator| table.info(v).and_then(|i| i.coordinate);
    let reduce_final = |p: &SuperPoly<C>| dirac.reducer.reduce(p, table);
    for (&v, value) in &dirac.multipliers {
        let Some(q) = mult_to_param(v) else { continue };
        let Some(rel) = report.dt_relations.iter().find(|r| r.parameter == q) else {
            mismatches.push(format!("multiplier {} has no dt relation", table.name(v)));
            continue;
        };
        let free: Vec<Generator> = dirac.free_multipliers.clone();
        let at_zero = value.drop_generators(|g| free.contains(&g));
        let mut ok = reduce_final(&(&at_zero - &rel.dt0))?.is_zero();
        for &f in &free {
            let Some(fq) = mult_to_param(f) else { continue };
            let k = rel.free.iter().find(|(g, _)| *g == fq).map(|(_, k)| k.clone()).unwrap_or_default();
            ok &= reduce_final(&(&value.derive_right(f) - &k))?.is_zero();
        }
        if ok {
            matched.push(format!("{} <-> d{}", table.name(v), table.name(q)));
        } else {
            mismatches.push(format!("multiplier {} differs from the dt relation of {}", table.name(v), table.name(q)));
        }
    }
    for rel in &report.dt_relations {
        let v = table.coordinate_handle(rel.parameter).map(|h| h.multiplier);
        if !v.is_some_and(|v| dirac.multipliers.contains_key(&v)) {
            mismatches.push(format!("dt relation for {} has no determined multiplier", table.name(rel.parameter)));
        }
    }
    for rec in &dirac.constraints {
        if !report.reducer.is_weakly_zero(&rec.expr, table)? {
            mismatches.push(format!("constraint {} is not weakly zero on the HJ surface", rec.label));
        }
    }
    for h in report.hamiltonians.iter().skip(1) {
        if !dirac.reducer.is_weakly_zero(&h.expr, table)? {
            mismatches.push(format!("{} is not weakly zero on the Dirac surface", h.label));
        }
    }
    Ok(CrossCheck { matched, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;
    use crate::legendre::{analyze, LagrangianModel};
    use crate::superalgebra::gaussian;
    use crate::Poly;

    fn setup(src: &str) -> (LagrangianModel, HJSystem) {
        let model = load_model(src).unwrap();
        let l = analyze(&model).unwrap();
        let sys = build_hj_system(&model.table, &l);
        (model, sys)
    }

    const GAUGE: &str = "model g\neven q1, q2\nlagrangian: 1/2*(dot(q1) - q2)*(dot(q1) - q2)\n";
    const FERMION: &str = "model f\nodd psi, psibar\nparam m: even\n\
        lagrangian: i/2*(psibar*dot(psi) - dot(psibar)*psi) - m*psibar*psi\n";

    fn v(m: &LagrangianModel, name: &str) -> Poly {
        Poly::generator(m.table.lookup(name).unwrap())
    }

    fn text(m: &LagrangianModel, p: &Poly) -> String {
        p.to_text(&m.table)
    }

    #[test]
    fn hamiltonian_families() {
        let (m, sys) = setup("model s\neven q\nlagrangian: 1/2*dot(q)*dot(q) - 1/2*q*q\n");
        assert_eq!(sys.hamiltonians.len(), 1);
        assert_eq!(text(&m, &sys.hamiltonians[0].expr), "1/2*q^2 + P0 + 1/2*p(q)^2");

        let (m, sys) = setup(GAUGE);
        let h: Vec<String> = sys.hamiltonians.iter().map(|h| text(&m, &h.expr)).collect();
        assert_eq!(h, ["q2*p(q1) + P0 + 1/2*p(q1)^2", "p(q2)"]);

        let (m, sys) = setup(FERMION);
        let h: Vec<String> = sys.hamiltonians.iter().map(|h| text(&m, &h.expr)).collect();
        assert_eq!(h, ["-psi*psibar*m + P0", "-1/2i*psibar + p(psi)", "-1/2i*psi + p(psibar)"]);
        assert_eq!(sys.hamiltonians[1].parity(), Parity::Odd);
    }

    #[test]
    fn gauge_toy_characteristics() {
        let (m, sys) = setup(GAUGE);
        let tds = total_differentials(&sys);
        let row = |g: &str| tds.coordinates.iter().position(|&(q, _)| q == m.table.lookup(g).unwrap()).unwrap();
        assert_eq!(tds.dq[row("q1")], [&v(&m, "q2") + &v(&m, "p(q1)"), Poly::zero()]);
        assert_eq!(tds.dp[row("q2")], [-v(&m, "p(q1)"), Poly::zero()]);
        assert_eq!(tds.dq[row("q2")], [Poly::zero(), Poly::one()]);
        assert_eq!(tds.dq[row("t")], [Poly::one(), Poly::zero()]);
        let p1 = v(&m, "p(q1)");
        assert_eq!(tds.dz, [&Poly::constant(gaussian((1, 2), (0, 1))) * &(&p1 * &p1), Poly::zero()]);
        for g in ["q1", "p(q1)", "p(q2)"] {
            assert!(apply_x(&sys, 1, &v(&m, g)).unwrap().is_zero(), "{g}");
        }
        assert_eq!(apply_x(&sys, 1, &v(&m, "q2")).unwrap(), Poly::one());
    }

    #[test]
    fn operator_commutator_is_the_bracket_of_hamiltonians() {
        for src in [GAUGE, FERMION] {
            let (_, sys) = setup(src);
            let gens: Vec<Poly> = sys.basis.pairs().iter().flat_map(|&(q, p)| [Poly::generator(q), Poly::generator(p)]).collect();
            let f = &(&gens[2] * &gens[3]) + &(&gens[gens.len() - 1] * &gens[gens.len() - 2]);
            assert_eq!(f.parity_of().unwrap(), Parity::Even);
            for a in 0..sys.hamiltonians.len() {
                for b in 0..sys.hamiltonians.len() {
                    let (pa, pb) = (sys.hamiltonians[a].parity(), sys.hamiltonians[b].parity());
                    let xaxb = apply_x(&sys, a, &apply_x(&sys, b, &f).unwrap()).unwrap();
                    let xbxa = apply_x(&sys, b, &apply_x(&sys, a, &f).unwrap()).unwrap();
                    let graded = if pa.sign_with(pb) { &xaxb + &xbxa } else { &xaxb - &xbxa };
                    let hb_ha = berezin(&sys.hamiltonians[b].expr, &sys.hamiltonians[a].expr, &sys.basis).unwrap();
                    let want = berezin(&f, &hb_ha, &sys.basis).unwrap();
                    assert_eq!(graded, want, "{a},{b}");
                }
            }
        }
    }

    #[test]
    fn integrability_matrices() {
        let (m, sys) = setup(FERMION);
        let cols: Vec<usize> = (0..sys.parameters.len()).collect();
        let b = integrability_matrix(&sys.hamiltonians, &cols, &sys.basis).unwrap();
        assert_eq!(text(&m, b.get(1, 2)), "-i");

        let (_, sys) = setup("model s\neven q\nlagrangian: 1/2*dot(q)*dot(q)\n");
        let b = integrability_matrix(&sys.hamiltonians, &[0], &sys.basis).unwrap();
        assert_eq!((b.rows(), b.cols()), (1, 1));
        assert!(b.is_zero());
    }

    #[test]
    fn gauge_toy_closes_in_two_rounds() {
        let (m, sys) = setup(GAUGE);
        let rep = closure_loop(&sys, &m.table, 32).unwrap();
        assert_eq!(rep.added, [2]);
        assert_eq!(text(&m, &rep.hamiltonians[2].expr), "p(q1)");
        assert_eq!(rep.outcomes, [HjOutcome::WeaklyZero, HjOutcome::NewHamiltonian(0), HjOutcome::IdenticallyZero]);
        assert_eq!(rep.free_parameters, [m.table.lookup("q2").unwrap()]);
        assert!(rep.dt_relations.is_empty());
        assert_eq!(rep.rounds, 2);
        assert!(!rep.strictly_integrable());
        assert_eq!(closure_loop(&sys, &m.table, 1).unwrap_err(), HjError::NoClosure(1));
    }

    #[test]
    fn fermionic_dt_relations() {
        let (m, sys) = setup(FERMION);
        let rep = closure_loop(&sys, &m.table, 32).unwrap();
        assert!(rep.added.is_empty());
        let rel: Vec<(String, String)> = rep
            .dt_relations
            .iter()
            .map(|r| (m.table.name(r.parameter).to_string(), text(&m, &r.dt0)))
            .collect();
        assert_eq!(rel, [("psi".to_string(), "-i*psi*m".to_string()), ("psibar".to_string(), "i*psibar*m".to_string())]);
        assert!(rep.free_parameters.is_empty());
    }

    #[test]
    fn constant_bracket_is_inconsistent() {
        let (m, sys) = setup("model bad\neven q\nlagrangian: q\n");
        assert!(matches!(closure_loop(&sys, &m.table, 32), Err(HjError::Inconsistent { .. })));
    }
}
