#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use supermech::frontend::report::{run_model, PipelineOptions, Report, Stage};
use supermech::frontend::load_model;
use supermech::legendre::LagrangianModel;
use supermech::numeric_flow::{parse_flow_config, FlowConfig};
use supermech::superalgebra::gaussian;
use supermech::{Generator, Parity, Poly};

pub const FIXTURES: [&str; 5] = ["sho", "fermionic_oscillator", "gauge_toy", "free_singular", "dirac_maxwell_reduced"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_source(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(format!("{name}.smf"))).expect("fixture exists")
}

pub fn fixture_model(name: &str) -> LagrangianModel {
    load_model(&fixture_source(name)).expect("fixture elaborates")
}

pub fn fixture_flow(name: &str) -> Option<FlowConfig> {
    let p = fixture_dir().join(format!("{name}.path"));
    p.exists().then(|| parse_flow_config(&std::fs::read_to_string(p).unwrap()).expect("path config parses"))
}

/// `--stage all` with the sibling path configuration, as the CLI runs it.
pub fn fixture_report(name: &str) -> Report {
    let options = PipelineOptions { stage: Stage::All, flow: fixture_flow(name), ..PipelineOptions::default() };
    run_model(&fixture_model(name), &options).expect("pipeline succeeds")
}

fn factors_parity(fs: &[Generator]) -> Parity {
    if fs.iter().filter(|g| g.is_odd()).count() % 2 == 1 {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// Random homogeneous polynomial of the given parity with up to
/// `max_terms` terms of total degree at most `max_degree`.
pub fn random_poly<R: Rng>(rng: &mut R, gens: &[Generator], parity: Parity, max_terms: usize, max_degree: usize) -> Poly {
    let mut p = Poly::zero();
    let terms = rng.gen_range(1..=max_terms);
    let mut made = 0;
    let mut attempts = 0;
    while made < terms && attempts < 200 {
        attempts += 1;
        let degree = rng.gen_range(0..=max_degree);
        let fs: Vec<Generator> = (0..degree).map(|_| gens[rng.gen_range(0..gens.len())]).collect();
        if factors_parity(&fs) != parity {
            continue;
        }
        let mut re = rng.gen_range(-3i64..=3);
        let im = rng.gen_range(-2i64..=2);
        if re == 0 && im == 0 {
            re = 1;
        }
        let mut term = Poly::constant(gaussian((re, 1), (im, 1)));
        for g in fs {
            term = &term * &Poly::generator(g);
        }
        p += &term;
        made += 1;
    }
    p
}

pub fn sign(negate: bool) -> Poly {
    Poly::integer(if negate { -1 } else { 1 })
}

pub fn random_parity<R: Rng>(rng: &mut R) -> Parity {
    if rng.gen_bool(0.5) {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// Every intermediate stage for one model.
pub struct Analysis {
    pub model: LagrangianModel,
    pub legendre: supermech::legendre::LegendreResult,
    pub dirac: supermech::dirac::DiracAnalysis,
    pub sys: supermech::hamilton_jacobi::HJSystem,
    pub tds: supermech::hamilton_jacobi::TotalDifferentialSystem,
    pub hj: supermech::hamilton_jacobi::IntegrabilityReport,
}

impl Analysis {
    pub fn of(model: LagrangianModel) -> Self {
        use supermech::{dirac, hamilton_jacobi as hj, legendre};
        let l = legendre::analyze(&model).expect("legendre");
        let d = dirac::run_dirac(&model, &l).expect("dirac");
        let sys = hj::build_hj_system(&model.table, &l);
        let tds = hj::total_differentials(&sys);
        let rep = hj::closure_loop(&sys, &model.table, 32).expect("closure");
        Analysis { model, legendre: l, dirac: d, sys, tds, hj: rep }
    }

    pub fn fixture(name: &str) -> Self {
        Self::of(fixture_model(name))
    }

    pub fn table(&self) -> &supermech::GeneratorTable {
        &self.model.table
    }

    pub fn g(&self, name: &str) -> Generator {
        self.table().lookup(name).unwrap_or_else(|| panic!("no generator `{name}`"))
    }

    pub fn var(&self, name: &str) -> Poly {
        Poly::generator(self.g(name))
    }

    pub fn text(&self, p: &Poly) -> String {
        p.to_text(self.table())
    }
}

pub fn c(re: i64, im: i64) -> Poly {
    Poly::constant(gaussian((re, 1), (im, 1)))
}

pub fn half() -> Poly {
    Poly::constant(gaussian((1, 2), (0, 1)))
}
