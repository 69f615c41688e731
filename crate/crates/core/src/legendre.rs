//! Legendre map for Lagrangians that are polynomial and at most quadratic in
//! the velocities.

use std::collections::BTreeMap;

use crate::superalgebra::{
    AlgebraError, Coefficient, CoordinateHandle, GaussianRational, Generator, GeneratorTable, Kind, NumMatrix,
    Parity, PolyMatrix, SuperPoly,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LegendreError {
    #[error("the Lagrangian must be even")]
    OddLagrangian,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("unsupported Lagrangian: {0}")]
    UnsupportedLagrangian(String),
    #[error("velocity {0} survives in {1}")]
    ResidualVelocity(String, String),
}

/// A declared generator table together with an even Lagrangian.
#[derive(Debug, Clone)]
pub struct LagrangianModel<C = GaussianRational> {
    pub name: String,
    pub table: GeneratorTable,
    pub lagrangian: SuperPoly<C>,
}

impl<C: Coefficient> LagrangianModel<C> {
    pub fn new(name: impl Into<String>, table: GeneratorTable, lagrangian: SuperPoly<C>) -> Result<Self, LegendreError> {
        match lagrangian.parity_of()? {
            Parity::Even => {}
            Parity::Odd => return Err(LegendreError::OddLagrangian),
        }
        for g in lagrangian.generators() {
            if matches!(g.kind(), Kind::Momentum | Kind::Auxiliary) || g == table.time() {
                return Err(LegendreError::UnsupportedLagrangian(format!(
                    "`{}` may not appear in a Lagrangian",
                    table.name(g)
                )));
            }
        }
        Ok(LagrangianModel { name: name.into(), table, lagrangian })
    }

    pub fn coordinates(&self) -> &[CoordinateHandle] {
        self.table.coordinates()
    }
}

/// Everything the Legendre map produces.
///
/// Indices into `coordinates` are positions in declaration order. `expressed`
/// and `unexpressed` partition them; `reorder` lists unexpressed first so the
/// invertible block sits bottom-right.
#[derive(Debug, Clone)]
pub struct LegendreResult<C = GaussianRational> {
    pub coordinates: Vec<CoordinateHandle>,
    pub momenta_defs: Vec<SuperPoly<C>>,
    pub hessian: PolyMatrix<C>,
    pub rank: usize,
    pub reorder: Vec<usize>,
    pub expressed: Vec<usize>,
    pub unexpressed: Vec<usize>,
    /// Velocity generator to `f^a(q, p)`.
    pub solved_velocities: BTreeMap<Generator, SuperPoly<C>>,
    /// Coordinate index `α` with `H_α`, so that `p_α + H_α ≈ 0`.
    pub primary_h: Vec<(usize, SuperPoly<C>)>,
    pub h0: SuperPoly<C>,
}

impl<C: Coefficient> LegendreResult<C> {
    pub fn is_singular(&self) -> bool {
        !self.unexpressed.is_empty()
    }

    /// `Φ_α = p_α + H_α` for each unexpressed direction.
    pub fn primary_constraints(&self) -> Vec<(usize, SuperPoly<C>)> {
        self.primary_h
            .iter()
            .map(|(a, h)| (*a, &SuperPoly::generator(self.coordinates[*a].momentum) + h))
            .collect()
    }
}

/// `p_i = ∂r L / ∂q̇^i` in declaration order.
pub fn momenta<C: Coefficient>(model: &LagrangianModel<C>) -> Vec<SuperPoly<C>> {
    model.coordinates().iter().map(|h| model.lagrangian.derive_right(h.velocity)).collect()
}

/// `H_ij = ∂r p_i / ∂q̇^j`.
pub fn hessian<C: Coefficient>(model: &LagrangianModel<C>) -> PolyMatrix<C> {
    let p = momenta(model);
    let hs = model.coordinates();
    PolyMatrix::from_fn(hs.len(), hs.len(), |i, j| p[i].derive_right(hs[j].velocity))
}

/// Rank of the numeric body and the split `(unexpressed, expressed)`.
///
/// The expressed set is the lexicographically first set of pivot columns of
/// the body, and the principal block on it is invertible.
pub fn rank_and_split<C: Coefficient>(
    hessian: &PolyMatrix<C>,
) -> Result<(usize, Vec<usize>, Vec<usize>), AlgebraError> {
    let body = hessian.body()?;
    let expressed = body.row_echelon().pivot_cols;
    let unexpressed: Vec<usize> = (0..hessian.cols()).filter(|c| !expressed.contains(c)).collect();
    body.select(&expressed, &expressed).inverse()?;
    Ok((expressed.len(), unexpressed, expressed))
}

fn velocity_set<C: Coefficient>(model: &LagrangianModel<C>) -> Vec<Generator> {
    model.coordinates().iter().map(|h| h.velocity).collect()
}

fn first_velocity<C: Coefficient>(p: &SuperPoly<C>, vels: &[Generator]) -> Option<Generator> {
    p.generators().into_iter().find(|g| vels.contains(g))
}

/// Solves `q̇^a = f^a(q, p_a, q̇^α)` from the affine momentum relations
/// `p = c + H q̇` over the expressed block.
pub fn solve_velocities<C: Coefficient>(
    model: &LagrangianModel<C>,
    momenta_defs: &[SuperPoly<C>],
    hessian: &PolyMatrix<C>,
    expressed: &[usize],
    unexpressed: &[usize],
) -> Result<BTreeMap<Generator, SuperPoly<C>>, LegendreError> {
    let hs = model.coordinates();
    let vels = velocity_set(model);
    for (i, entry) in hessian.entries().enumerate() {
        if let Some(v) = first_velocity(entry, &vels) {
            let (r, c) = (i / hs.len(), i % hs.len());
            return Err(LegendreError::UnsupportedLagrangian(format!(
                "momentum of `{}` is not affine in the velocities (Hessian entry {r},{c} contains `{}`)",
                model.table.name(hs[r].coordinate),
                model.table.name(v)
            )));
        }
    }
    if expressed.is_empty() {
        return Ok(BTreeMap::new());
    }
    let block_inv = hessian.select(expressed, expressed).inverse()?;
    let rhs: Vec<SuperPoly<C>> = expressed
        .iter()
        .map(|&a| {
            let c = momenta_defs[a].drop_generators(|g| vels.contains(&g));
            let mut r = &SuperPoly::generator(hs[a].momentum) - &c;
            for &al in unexpressed {
                r -= &(hessian.get(a, al) * &SuperPoly::generator(hs[al].velocity));
            }
            r
        })
        .collect();
    let f = block_inv.apply(&rhs);
    let solved: BTreeMap<Generator, SuperPoly<C>> =
        expressed.iter().zip(f).map(|(&a, fa)| (hs[a].velocity, fa)).collect();
    for &a in expressed {
        let back = momenta_defs[a].substitute(&solved)?;
        if back != SuperPoly::generator(hs[a].momentum) {
            return Err(LegendreError::UnsupportedLagrangian(format!(
                "velocity of `{}` cannot be solved exactly",
                model.table.name(hs[a].coordinate)
            )));
        }
    }
    Ok(solved)
}

/// `H_α = −p_α(q, q̇)|_{q̇^a = f^a}`; must be velocity-free.
pub fn primary_constraints<C: Coefficient>(
    model: &LagrangianModel<C>,
    momenta_defs: &[SuperPoly<C>],
    solved: &BTreeMap<Generator, SuperPoly<C>>,
    unexpressed: &[usize],
) -> Result<Vec<(usize, SuperPoly<C>)>, LegendreError> {
    let vels = velocity_set(model);
    unexpressed
        .iter()
        .map(|&al| {
            let h = -momenta_defs[al].substitute(solved)?;
            if let Some(v) = first_velocity(&h, &vels) {
                return Err(LegendreError::ResidualVelocity(
                    model.table.name(v).to_string(),
                    format!("H of `{}`", model.table.name(model.coordinates()[al].coordinate)),
                ));
            }
            Ok((al, h))
        })
        .collect()
}

/// `H₀ = p_a f^a + p_α|_{p=−H} q̇^α − L|_{q̇^a=f^a}` with momenta to the left.
pub fn canonical_hamiltonian<C: Coefficient>(
    model: &LagrangianModel<C>,
    solved: &BTreeMap<Generator, SuperPoly<C>>,
    primary_h: &[(usize, SuperPoly<C>)],
) -> Result<SuperPoly<C>, LegendreError> {
    let hs = model.coordinates();
    let mut h = -model.lagrangian.clone();
    for (i, handle) in hs.iter().enumerate() {
        let v = SuperPoly::generator(handle.velocity);
        match primary_h.iter().find(|(a, _)| *a == i) {
            Some((_, ha)) => h -= &(ha * &v),
            None => h += &(&SuperPoly::generator(handle.momentum) * &v),
        }
    }
    let h = h.substitute(solved)?;
    let vels = velocity_set(model);
    if let Some(v) = first_velocity(&h, &vels) {
        return Err(LegendreError::ResidualVelocity(model.table.name(v).to_string(), "H0".into()));
    }
    Ok(h)
}

/// Runs the full Legendre map.
pub fn analyze<C: Coefficient>(model: &LagrangianModel<C>) -> Result<LegendreResult<C>, LegendreError> {
    let vels = velocity_set(model);
    if model.lagrangian.degree_in(|g| vels.contains(&g)) > 2 {
        return Err(LegendreError::UnsupportedLagrangian("more than quadratic in the velocities".into()));
    }
    let momenta_defs = momenta(model);
    let hess = hessian(model);
    let (rank, unexpressed, expressed) = rank_and_split(&hess)?;
    let solved = solve_velocities(model, &momenta_defs, &hess, &expressed, &unexpressed)?;
    let primary_h = primary_constraints(model, &momenta_defs, &solved, &unexpressed)?;
    let h0 = canonical_hamiltonian(model, &solved, &primary_h)?;
    let reorder = unexpressed.iter().chain(&expressed).copied().collect();
    Ok(LegendreResult {
        coordinates: model.coordinates().to_vec(),
        momenta_defs,
        hessian: hess,
        rank,
        reorder,
        expressed,
        unexpressed,
        solved_velocities: solved,
        primary_h,
        h0,
    })
}

/// Body of the Hessian, exposed for reports.
pub fn hessian_body<C: Coefficient>(result: &LegendreResult<C>) -> Result<NumMatrix<C>, AlgebraError> {
    result.hessian.body()
}
