//! Pipeline driver and deterministic report emission (text and JSON).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex;
use serde::Serialize;

use super::ast::ModelDocument;
use super::{elaborate, FrontendError};
use crate::dirac::{self, ConsistencyOutcome, DiracAnalysis};
use crate::hamilton_jacobi::{self as hj, HjOutcome, IntegrabilityReport};
use crate::legendre::{self, LagrangianModel, LegendreResult};
use crate::numeric_flow::{path_independence_check, FlowConfig, FlowSystem, GrassmannValue};
use crate::superalgebra::{Generator, GeneratorTable, Kind, Parity, PolyMatrix};
use crate::GaussianRational;

type Flow = FlowSystem<Complex<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Legendre,
    Dirac,
    Hj,
    Flow,
    All,
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "legendre" => Stage::Legendre,
            "dirac" => Stage::Dirac,
            "hj" => Stage::Hj,
            "flow" => Stage::Flow,
            "all" => Stage::All,
            other => return Err(format!("unknown stage `{other}`")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub stage: Stage,
    pub max_closure_rounds: usize,
    pub tolerance: f64,
    pub flow: Option<FlowConfig>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { stage: Stage::All, max_closure_rounds: 32, tolerance: 1e-8, flow: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Named {
    pub name: String,
    pub parity: Parity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Equation {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSection {
    pub name: String,
    pub coordinates: Vec<Named>,
    pub parameters: Vec<Named>,
    pub lagrangian: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreSection {
    pub momenta: Vec<Equation>,
    pub hessian: Vec<Vec<String>>,
    pub rank: usize,
    pub dimension: usize,
    pub expressed: Vec<String>,
    pub unexpressed: Vec<String>,
    pub velocities: Vec<Equation>,
    pub primary_constraints: Vec<Equation>,
    pub canonical_hamiltonian: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyLine {
    pub round: usize,
    pub constraint: String,
    pub condition: String,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintLine {
    pub label: String,
    pub stage: usize,
    pub class: dirac::ConstraintClass,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullVectorLine {
    pub replaces: String,
    pub coefficients: Vec<String>,
    pub lifted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketLine {
    pub left: String,
    pub right: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracSection {
    pub primary_hamiltonian: String,
    pub consistency: Vec<ConsistencyLine>,
    pub found: Vec<String>,
    pub constraints: Vec<ConstraintLine>,
    pub initial_delta: Vec<Vec<String>>,
    pub null_vectors: Vec<NullVectorLine>,
    pub delta: Vec<Vec<String>>,
    pub second_class: Vec<String>,
    pub delta_inverse: Vec<Vec<String>>,
    pub multipliers: Vec<Equation>,
    pub free_multipliers: Vec<String>,
    pub dirac_brackets: Vec<BracketLine>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianLine {
    pub label: String,
    pub parameter: Option<String>,
    pub expr: String,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRow {
    pub variable: String,
    pub coefficients: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DtRelationLine {
    pub parameter: String,
    pub dt0: String,
    pub free: Vec<Equation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckSection {
    pub verdict: String,
    pub matched: Vec<String>,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HjSection {
    pub parameters: Vec<String>,
    pub hamiltonians: Vec<HamiltonianLine>,
    pub flow_equations: Vec<FlowRow>,
    pub dz: Vec<String>,
    pub integrability_matrix: Vec<Vec<String>>,
    pub weak_integrability_matrix: Vec<Vec<String>>,
    pub dt_relations: Vec<DtRelationLine>,
    pub free_parameters: Vec<String>,
    pub rounds: usize,
    pub strictly_integrable: bool,
    pub cross_check: CrossCheckSection,
}

#[derive(Debug, Clone, Serialize)]
pub struct Measured {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRun {
    pub waypoints: Vec<Vec<String>>,
    pub steps: usize,
    pub drift: Vec<Measured>,
    pub max_drift: String,
    pub within_tolerance: bool,
    pub endpoint: Vec<Measured>,
    pub z: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableLine {
    pub name: String,
    pub first_class: bool,
    pub discrepancy: String,
    pub agrees: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathIndependenceSection {
    pub strict: bool,
    pub observables: Vec<ObservableLine>,
    pub flagged: Vec<String>,
    pub z_discrepancy: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowSection {
    pub algebra: usize,
    pub tolerance: String,
    pub paths: Vec<PathRun>,
    pub path_independence: Option<PathIndependenceSection>,
}

/// Full analysis report; absent stages serialize as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub model: ModelSection,
    pub legendre: LegendreSection,
    pub dirac: Option<DiracSection>,
    pub hj: Option<HjSection>,
    pub flow: Option<FlowSection>,
}

impl Report {
    /// Inconsistency findings: cross-check mismatches, excessive drift and
    /// failed path-independence checks.
    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(h) = &self.hj {
            out.extend(h.cross_check.mismatches.iter().cloned());
        }
        if let Some(f) = &self.flow {
            for (k, p) in f.paths.iter().enumerate() {
                if !p.within_tolerance {
                    out.push(format!("path {}: drift {} exceeds {}", k + 1, p.max_drift, f.tolerance));
                }
            }
            if let Some(pi) = &f.path_independence {
                if !pi.passed {
                    out.push("path independence check failed".into());
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }
}

/// Fixed-precision text for a float; `-0` prints as `0`.
pub fn fmt_float(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn fmt_sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn fmt_complex(c: Complex<f64>) -> String {
    let (re, im) = (fmt_float(c.re), fmt_float(c.im));
    match (re == "0", im == "0") {
        (_, true) => re,
        (true, false) => format!("{im}i"),
        (false, false) => {
            let sign = if im.starts_with('-') { "" } else { "+" };
            format!("({re}{sign}{im}i)")
        }
    }
}

/// Text form of a `Λ` value: `c + c*e1*e2 + …` over nonzero printed terms.
pub fn lambda_text(v: &GrassmannValue<Complex<f64>>) -> String {
    let mut terms = Vec::new();
    for (gens, c) in v.support() {
        let c = fmt_complex(c);
        if c == "0" {
            continue;
        }
        let mut t = c;
        for k in gens {
            write!(t, "*e{k}").expect("string write");
        }
        terms.push(t);
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn names(table: &GeneratorTable, gs: impl IntoIterator<Item = Generator>) -> Vec<String> {
    gs.into_iter().map(|g| table.name(g).to_string()).collect()
}

fn matrix(m: &PolyMatrix<GaussianRational>, table: &GeneratorTable) -> Vec<Vec<String>> {
    m.to_text(table)
}

fn model_section(model: &LagrangianModel) -> ModelSection {
    let t = &model.table;
    ModelSection {
        name: model.name.clone(),
        coordinates: t.coordinates().iter().map(|h| Named { name: t.name(h.coordinate).into(), parity: h.parity() }).collect(),
        parameters: t.parameters().iter().map(|&g| Named { name: t.name(g).into(), parity: g.parity() }).collect(),
        lagrangian: model.lagrangian.to_text(t),
    }
}

fn legendre_section(model: &LagrangianModel, l: &LegendreResult) -> LegendreSection {
    let t = &model.table;
    LegendreSection {
        momenta: l
            .coordinates
            .iter()
            .zip(&l.momenta_defs)
            .map(|(h, d)| Equation { lhs: t.name(h.momentum).into(), rhs: d.to_text(t) })
            .collect(),
        hessian: matrix(&l.hessian, t),
        rank: l.rank,
        dimension: l.coordinates.len(),
        expressed: l.expressed.iter().map(|&a| t.name(l.coordinates[a].coordinate).to_string()).collect(),
        unexpressed: l.unexpressed.iter().map(|&a| t.name(l.coordinates[a].coordinate).to_string()).collect(),
        velocities: l
            .solved_velocities
            .iter()
            .map(|(v, f)| Equation { lhs: t.name(*v).into(), rhs: f.to_text(t) })
            .collect(),
        primary_constraints: l
            .primary_constraints()
            .into_iter()
            .map(|(a, c)| Equation { lhs: format!("primary[{}]", t.name(l.coordinates[a].coordinate)), rhs: c.to_text(t) })
            .collect(),
        canonical_hamiltonian: l.h0.to_text(t),
    }
}

fn consistency_outcome(o: &ConsistencyOutcome, table: &GeneratorTable) -> String {
    match o {
        ConsistencyOutcome::IdenticallyZero => "identically zero".into(),
        ConsistencyOutcome::WeaklyZero => "weakly zero".into(),
        ConsistencyOutcome::DeterminesMultipliers(vs) => format!("determines {}", names(table, vs.iter().copied()).join(", ")),
        ConsistencyOutcome::NewConstraint(e) => format!("new constraint {}", e.to_text(table)),
    }
}

fn phase_generators(table: &GeneratorTable) -> Vec<Generator> {
    let mut gs: Vec<Generator> = table.coordinates().iter().map(|h| h.coordinate).collect();
    gs.extend(table.coordinates().iter().map(|h| h.momentum));
    gs
}

fn dirac_section(model: &LagrangianModel, d: &DiracAnalysis) -> Result<DiracSection, FrontendError> {
    let t = &model.table;
    let label = |k: usize| d.found.get(k).map(|r| r.label.clone()).unwrap_or_default();
    let mut brackets = Vec::new();
    let gs = phase_generators(t);
    for (i, &f) in gs.iter().enumerate() {
        for &g in &gs[i..] {
            let v = dirac::dirac_bracket(&crate::Poly::generator(f), &crate::Poly::generator(g), d, t)?;
            if !v.is_zero() {
                brackets.push(BracketLine { left: t.name(f).into(), right: t.name(g).into(), value: v.to_text(t) });
            }
        }
    }
    Ok(DiracSection {
        primary_hamiltonian: d.primary_hamiltonian.to_text(t),
        consistency: d
            .log
            .iter()
            .map(|r| ConsistencyLine {
                round: r.round,
                constraint: label(r.constraint),
                condition: r.condition.to_text(t),
                outcome: consistency_outcome(&r.outcome, t),
            })
            .collect(),
        found: d.found.iter().map(|r| format!("{} = {}", r.label, r.expr.to_text(t))).collect(),
        constraints: d
            .constraints
            .iter()
            .map(|r| ConstraintLine { label: r.label.clone(), stage: r.stage, class: r.class, expr: r.expr.to_text(t) })
            .collect(),
        initial_delta: matrix(&d.initial_delta, t),
        null_vectors: d
            .null_vectors
            .iter()
            .map(|nv| NullVectorLine {
                replaces: label(nv.replaces),
                coefficients: nv.coefficients.iter().map(|c| c.to_text(t)).collect(),
                lifted: nv.lifted,
            })
            .collect(),
        delta: matrix(&d.delta, t),
        second_class: d.second_class.iter().map(|&k| d.constraints[k].label.clone()).collect(),
        delta_inverse: matrix(&d.delta_inverse, t),
        multipliers: d.multipliers.iter().map(|(v, x)| Equation { lhs: t.name(*v).into(), rhs: x.to_text(t) }).collect(),
        free_multipliers: names(t, d.free_multipliers.iter().copied()),
        dirac_brackets: brackets,
    })
}

fn hj_outcome(o: &HjOutcome, rep: &IntegrabilityReport) -> String {
    match o {
        HjOutcome::IdenticallyZero => "identically zero".into(),
        HjOutcome::WeaklyZero => "weakly zero".into(),
        HjOutcome::DifferentialRelation => "differential relation".into(),
        HjOutcome::NewHamiltonian(k) => format!("adds {}", rep.hamiltonians[rep.added[*k]].label),
    }
}

fn hj_section(
    model: &LagrangianModel,
    sys: &hj::HJSystem,
    rep: &IntegrabilityReport,
    d: &DiracAnalysis,
) -> Result<HjSection, FrontendError> {
    let t = &model.table;
    let tds = hj::total_differentials(sys);
    let mut rows = Vec::new();
    for (i, &(q, p)) in tds.coordinates.iter().enumerate() {
        rows.push(FlowRow { variable: format!("d{}", t.name(q)), coefficients: tds.dq[i].iter().map(|c| c.to_text(t)).collect() });
        rows.push(FlowRow { variable: format!("d{}", t.name(p)), coefficients: tds.dp[i].iter().map(|c| c.to_text(t)).collect() });
    }
    let cc = hj::cross_check_dirac(rep, d, t)?;
    Ok(HjSection {
        parameters: names(t, sys.parameters.iter().copied()),
        hamiltonians: rep
            .hamiltonians
            .iter()
            .zip(&rep.outcomes)
            .map(|(h, o)| HamiltonianLine {
                label: h.label.clone(),
                parameter: h.parameter.map(|g| t.name(g).to_string()),
                expr: h.expr.to_text(t),
                outcome: hj_outcome(o, rep),
            })
            .collect(),
        flow_equations: rows,
        dz: tds.dz.iter().map(|c| c.to_text(t)).collect(),
        integrability_matrix: matrix(&rep.bracket_matrix, t),
        weak_integrability_matrix: matrix(&rep.weak_bracket_matrix, t),
        dt_relations: rep
            .dt_relations
            .iter()
            .map(|r| DtRelationLine {
                parameter: t.name(r.parameter).into(),
                dt0: r.dt0.to_text(t),
                free: r.free.iter().map(|(g, k)| Equation { lhs: t.name(*g).into(), rhs: k.to_text(t) }).collect(),
            })
            .collect(),
        free_parameters: names(t, rep.free_parameters.iter().copied()),
        rounds: rep.rounds,
        strictly_integrable: rep.strictly_integrable(),
        cross_check: CrossCheckSection { verdict: cc.verdict().into(), matched: cc.matched, mismatches: cc.mismatches },
    })
}

/// Default `Λ_n` size: one generator per odd coordinate.
pub fn default_algebra(table: &GeneratorTable) -> usize {
    table.coordinates().iter().filter(|h| h.parity().is_odd()).count()
}

fn flow_section(
    model: &LagrangianModel,
    sys: &hj::HJSystem,
    rep: &IntegrabilityReport,
    config: &FlowConfig,
    tolerance: f64,
) -> Result<FlowSection, FrontendError> {
    let t = &model.table;
    let n = config.algebra.unwrap_or_else(|| default_algebra(t));
    let tds = hj::total_differentials(sys);
    let flow: Flow = FlowSystem::new(sys, &tds, rep, t, n)?;
    let init = flow.initial_from_config(config, t, config.paths[0].start())?;
    let mut paths = Vec::new();
    for path in &config.paths {
        let res = flow.integrate(path, &init)?;
        let end = res.endpoint();
        paths.push(PathRun {
            waypoints: path.waypoints.iter().map(|w| w.iter().map(|&x| fmt_float(x)).collect()).collect(),
            steps: path.steps,
            drift: res.drift_per.iter().map(|(l, w)| Measured { name: l.clone(), value: fmt_sci(*w) }).collect(),
            max_drift: fmt_sci(res.drift),
            within_tolerance: res.drift <= tolerance,
            endpoint: res
                .generators
                .iter()
                .zip(&end.state)
                .filter(|(g, _)| g.kind() != Kind::Parameter)
                .map(|(g, v)| Measured { name: t.name(*g).into(), value: lambda_text(v) })
                .collect(),
            z: lambda_text(&res.z),
        });
    }
    let path_independence = if config.paths.len() >= 2 {
        let r = path_independence_check(&flow, sys, rep, t, &config.paths[0], &config.paths[1], &init, tolerance)?;
        Some(PathIndependenceSection {
            strict: r.strict,
            flagged: r.flagged().into_iter().map(String::from).collect(),
            observables: r
                .observables
                .iter()
                .map(|o| ObservableLine {
                    name: o.name.clone(),
                    first_class: o.first_class,
                    discrepancy: fmt_sci(o.discrepancy),
                    agrees: o.agrees,
                })
                .collect(),
            z_discrepancy: fmt_sci(r.z_discrepancy),
            passed: r.passed,
        })
    } else {
        None
    };
    Ok(FlowSection { algebra: n, tolerance: fmt_sci(tolerance), paths, path_independence })
}

/// Runs the requested stages on an elaborated model.
pub fn run_model(model: &LagrangianModel, options: &PipelineOptions) -> Result<Report, FrontendError> {
    let l = legendre::analyze(model)?;
    let mut report = Report {
        model: model_section(model),
        legendre: legendre_section(model, &l),
        dirac: None,
        hj: None,
        flow: None,
    };
    if options.stage == Stage::Legendre {
        return Ok(report);
    }
    let d = dirac::run_dirac(model, &l)?;
    report.dirac = Some(dirac_section(model, &d)?);
    if options.stage == Stage::Dirac {
        return Ok(report);
    }
    let sys = hj::build_hj_system(&model.table, &l);
    let rep = hj::closure_loop(&sys, &model.table, options.max_closure_rounds)?;
    report.hj = Some(hj_section(model, &sys, &rep, &d)?);
    if options.stage == Stage::Hj {
        return Ok(report);
    }
    if let Some(cfg) = &options.flow {
        report.flow = Some(flow_section(model, &sys, &rep, cfg, options.tolerance)?);
    }
    Ok(report)
}

pub fn run_pipeline(doc: &ModelDocument, options: &PipelineOptions) -> Result<Report, FrontendError> {
    run_model(&elaborate(doc)?, options)
}

fn push_matrix(out: &mut String, title: &str, m: &[Vec<String>]) {
    if m.is_empty() {
        let _ = writeln!(out, "  {title}: (empty)");
        return;
    }
    let _ = writeln!(out, "  {title}:");
    for row in m {
        let _ = writeln!(out, "    [{}]", row.join(", "));
    }
}

fn push_list(out: &mut String, title: &str, items: &[String]) {
    if items.is_empty() {
        let _ = writeln!(out, "  {title}: (none)");
    } else {
        let _ = writeln!(out, "  {title}: {}", items.join(", "));
    }
}

fn push_equations(out: &mut String, title: &str, eqs: &[Equation]) {
    if eqs.is_empty() {
        let _ = writeln!(out, "  {title}: (none)");
        return;
    }
    let _ = writeln!(out, "  {title}:");
    for e in eqs {
        let _ = writeln!(out, "    {} = {}", e.lhs, e.rhs);
    }
}

fn render_text(r: &Report) -> String {
    let mut o = String::new();
    let m = &r.model;
    let named = |xs: &[Named]| xs.iter().map(|x| format!("{} ({})", x.name, x.parity)).collect::<Vec<_>>();
    let _ = writeln!(o, "model {}", m.name);
    push_list(&mut o, "coordinates", &named(&m.coordinates));
    push_list(&mut o, "parameters", &named(&m.parameters));
    let _ = writeln!(o, "  lagrangian: {}", m.lagrangian);

    let l = &r.legendre;
    let _ = writeln!(o, "\n[legendre]");
    push_equations(&mut o, "momenta", &l.momenta);
    push_matrix(&mut o, "hessian", &l.hessian);
    let _ = writeln!(o, "  rank: {} of {}", l.rank, l.dimension);
    push_list(&mut o, "expressed", &l.expressed);
    push_list(&mut o, "unexpressed", &l.unexpressed);
    push_equations(&mut o, "velocities", &l.velocities);
    push_equations(&mut o, "primary constraints", &l.primary_constraints);
    let _ = writeln!(o, "  H0 = {}", l.canonical_hamiltonian);

    if let Some(d) = &r.dirac {
        let _ = writeln!(o, "\n[dirac]");
        let _ = writeln!(o, "  H_P = {}", d.primary_hamiltonian);
        let _ = writeln!(o, "  consistency:");
        for c in &d.consistency {
            let _ = writeln!(o, "    round {} {}: {} -> {}", c.round, c.constraint, c.condition, c.outcome);
        }
        push_list(&mut o, "found", &d.found);
        let _ = writeln!(o, "  constraints:");
        for c in &d.constraints {
            let class = match c.class {
                dirac::ConstraintClass::First => "first",
                dirac::ConstraintClass::Second => "second",
                dirac::ConstraintClass::Undetermined => "undetermined",
            };
            let _ = writeln!(o, "    {} (stage {}, {} class) = {}", c.label, c.stage, class, c.expr);
        }
        push_matrix(&mut o, "initial delta", &d.initial_delta);
        for nv in &d.null_vectors {
            let _ = writeln!(
                o,
                "  null vector replacing {}: [{}]{}",
                nv.replaces,
                nv.coefficients.join(", "),
                if nv.lifted { "" } else { " (not lifted)" }
            );
        }
        push_matrix(&mut o, "delta", &d.delta);
        push_list(&mut o, "second class", &d.second_class);
        push_matrix(&mut o, "delta inverse", &d.delta_inverse);
        push_equations(&mut o, "multipliers", &d.multipliers);
        push_list(&mut o, "free multipliers", &d.free_multipliers);
        let _ = writeln!(o, "  dirac brackets:");
        for b in &d.dirac_brackets {
            let _ = writeln!(o, "    {{{}, {}}}_D = {}", b.left, b.right, b.value);
        }
    }

    if let Some(h) = &r.hj {
        let _ = writeln!(o, "\n[hj]");
        push_list(&mut o, "parameters", &h.parameters);
        let _ = writeln!(o, "  hamiltonians:");
        for x in &h.hamiltonians {
            let param = x.parameter.as_deref().map(|p| format!(" [{p}]")).unwrap_or_default();
            let _ = writeln!(o, "    {}{} = {} -> {}", x.label, param, x.expr, x.outcome);
        }
        let _ = writeln!(o, "  flow equations (coefficients of d{}):", h.parameters.join(", d"));
        for row in &h.flow_equations {
            let _ = writeln!(o, "    {}: [{}]", row.variable, row.coefficients.join(", "));
        }
        let _ = writeln!(o, "    dZ: [{}]", h.dz.join(", "));
        push_matrix(&mut o, "integrability matrix", &h.integrability_matrix);
        push_matrix(&mut o, "weak integrability matrix", &h.weak_integrability_matrix);
        if h.dt_relations.is_empty() {
            let _ = writeln!(o, "  dt relations: (none)");
        } else {
            let _ = writeln!(o, "  dt relations:");
        }
        for rel in &h.dt_relations {
            let mut rhs = format!("({})*dt", rel.dt0);
            for f in &rel.free {
                let _ = write!(rhs, " + ({})*d{}", f.rhs, f.lhs);
            }
            let _ = writeln!(o, "    d{} = {}", rel.parameter, rhs);
        }
        push_list(&mut o, "free parameters", &h.free_parameters);
        let _ = writeln!(o, "  rounds: {}", h.rounds);
        let _ = writeln!(o, "  strictly integrable: {}", h.strictly_integrable);
        let _ = writeln!(o, "  cross-check: {}", h.cross_check.verdict);
        for x in &h.cross_check.matched {
            let _ = writeln!(o, "    matched {x}");
        }
        for x in &h.cross_check.mismatches {
            let _ = writeln!(o, "    mismatch {x}");
        }
    }

    if let Some(f) = &r.flow {
        let _ = writeln!(o, "\n[flow]");
        let _ = writeln!(o, "  algebra: Λ_{}", f.algebra);
        let _ = writeln!(o, "  tolerance: {}", f.tolerance);
        for (k, p) in f.paths.iter().enumerate() {
            let pts: Vec<String> = p.waypoints.iter().map(|w| format!("({})", w.join(", "))).collect();
            let _ = writeln!(o, "  path {}: {} in {} steps per segment", k + 1, pts.join(" -> "), p.steps);
            let _ = writeln!(o, "    max drift: {}{}", p.max_drift, if p.within_tolerance { "" } else { " (exceeds tolerance)" });
            for d in &p.drift {
                let _ = writeln!(o, "      |{}|: {}", d.name, d.value);
            }
            let _ = writeln!(o, "    endpoint:");
            for e in &p.endpoint {
                let _ = writeln!(o, "      {} = {}", e.name, e.value);
            }
            let _ = writeln!(o, "    Z = {}", p.z);
        }
        if let Some(pi) = &f.path_independence {
            let _ = writeln!(o, "  path independence ({}): {}", if pi.strict { "strict" } else { "weak" }, if pi.passed { "passed" } else { "failed" });
            for ob in &pi.observables {
                let _ = writeln!(
                    o,
                    "    {}: {} discrepancy {}{}",
                    ob.name,
                    if ob.first_class { "first class," } else { "not first class," },
                    ob.discrepancy,
                    if ob.agrees { "" } else { " (differs)" }
                );
            }
            push_list(&mut o, "  flagged", &pi.flagged);
            let _ = writeln!(o, "    Z discrepancy: {}", pi.z_discrepancy);
        }
    }
    o
}

/// Observables keyed by name, for tests and tools.
pub fn endpoint_map(run: &PathRun) -> BTreeMap<&str, &str> {
    run.endpoint.iter().map(|m| (m.name.as_str(), m.value.as_str())).collect()
}
