//! One check per acceptance criterion, printed as a PASS or FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use common::{c, half, random_parity, random_poly, sign, Analysis, FIXTURES};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use supermech::brackets::{berezin, symplectic_bracket, PhaseBasis, SymplecticMetric};
use supermech::dirac::{dirac_bracket, ConstraintClass};
use supermech::hamilton_jacobi::{cross_check_dirac, HjOutcome};
use supermech::numeric_flow::{path_independence_check, FlowSystem, PathSpec};
use supermech::{Generator, GeneratorTable, Parity, Poly};

const RANDOM_CASES: usize = 1000;
const SHO_TOLERANCE: f64 = 1e-6;
const DRIFT_TOLERANCE: f64 = 1e-8;
const PATH_TOLERANCE: f64 = 1e-8;
const CONVERGENCE_RANGE: (f64, f64) = (14.0, 18.0);

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn same(a: &Analysis, what: &str, got: &Poly, want: &Poly) -> Check {
    ensure(got == want, || format!("{what}: got `{}`, expected `{}`", a.text(got), a.text(want)))
}

fn random_table() -> (GeneratorTable, Vec<Generator>) {
    let mut t = GeneratorTable::new();
    let mut gens = Vec::new();
    for (name, parity) in [("x", Parity::Even), ("th", Parity::Odd), ("ph", Parity::Odd)] {
        let h = t.declare_coordinate(name, parity, None).unwrap();
        gens.push(h.coordinate);
        gens.push(h.momentum);
    }
    (t, gens)
}

fn parity_flag(a: Parity, b: Parity) -> bool {
    a.is_odd() && b.is_odd()
}

fn bracket_axioms() -> Check {
    let (t, gens) = random_table();
    let basis = PhaseBasis::canonical(&t);
    let br = |f: &Poly, g: &Poly| berezin(f, g, &basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut nontrivial = 0;
    for case in 0..RANDOM_CASES {
        let (pf, pg, pk) = (random_parity(&mut rng), random_parity(&mut rng), random_parity(&mut rng));
        let f = random_poly(&mut rng, &gens, pf, 4, 4);
        let g = random_poly(&mut rng, &gens, pg, 4, 4);
        let k = random_poly(&mut rng, &gens, pk, 4, 4);

        let anti = &br(&f, &g) + &(&sign(parity_flag(pf, pg)) * &br(&g, &f));
        ensure(anti.is_zero(), || format!("antisymmetry fails in case {case}"))?;

        let lhs = br(&f, &(&g * &k));
        let rhs = &(&br(&f, &g) * &k) + &(&sign(parity_flag(pf, pg)) * &(&g * &br(&f, &k)));
        ensure(lhs == rhs, || format!("Leibniz fails in case {case}"))?;

        let jac = &(&(&sign(parity_flag(pf, pk)) * &br(&f, &br(&g, &k)))
            + &(&sign(parity_flag(pg, pf)) * &br(&g, &br(&k, &f))))
            + &(&sign(parity_flag(pk, pg)) * &br(&k, &br(&f, &g)));
        ensure(jac.is_zero(), || format!("Jacobi fails in case {case}"))?;
        if !br(&g, &k).is_zero() && !br(&f, &br(&g, &k)).is_zero() {
            nontrivial += 1;
        }

        for &q in &gens {
            let s = q.is_odd() ^ parity_flag(q.parity(), pf);
            ensure(f.derive_left(q) == &sign(s) * &f.derive_right(q), || {
                format!("left/right derivative relation fails in case {case}")
            })?;
        }
    }
    ensure(nontrivial * 4 >= RANDOM_CASES, || format!("only {nontrivial} of {RANDOM_CASES} cases have a nonzero double bracket"))
}

fn symplectic_equivalence() -> Check {
    let (t, gens) = random_table();
    let basis = PhaseBasis::canonical(&t);
    let metric = SymplecticMetric::new(&basis);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for case in 0..RANDOM_CASES {
        let (pf, pg) = (random_parity(&mut rng), random_parity(&mut rng));
        let f = random_poly(&mut rng, &gens, pf, 4, 4);
        let g = random_poly(&mut rng, &gens, pg, 4, 4);
        ensure(symplectic_bracket(&f, &g, &metric).unwrap() == berezin(&f, &g, &basis).unwrap(), || {
            format!("symplectic and direct brackets differ in case {case}")
        })?;
    }
    Ok(())
}

/// γ matrices in the Dirac representation as `(re, im)` integer entries.
fn gamma(mu: usize) -> [[(i64, i64); 4]; 4] {
    let z = (0, 0);
    let sigma: [[(i64, i64); 2]; 2] = match mu {
        1 => [[z, (1, 0)], [(1, 0), z]],
        2 => [[z, (0, -1)], [(0, 1), z]],
        3 => [[(1, 0), z], [z, (-1, 0)]],
        _ => [[z, z], [z, z]],
    };
    let mut m = [[z; 4]; 4];
    if mu == 0 {
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = if a < 2 { (1, 0) } else { (-1, 0) };
        }
        return m;
    }
    for a in 0..2 {
        for b in 0..2 {
            m[a][b + 2] = sigma[a][b];
            m[a + 2][b] = (-sigma[a][b].0, -sigma[a][b].1);
        }
    }
    m
}

fn gam(mu: usize, a: usize, b: usize) -> Poly {
    let (re, im) = gamma(mu)[a][b];
    c(re, im)
}

fn eta(mu: usize) -> i64 {
    if mu == 0 {
        1
    } else {
        -1
    }
}

struct Spinors {
    psi: Vec<Poly>,
    psibar: Vec<Poly>,
    p_psi: Vec<Poly>,
    p_psibar: Vec<Poly>,
    a_upper: Vec<Poly>,
    e: Poly,
    m: Poly,
}

impl Spinors {
    fn of(a: &Analysis) -> Self {
        let fam = |f: &str| (1..=4).map(|k| a.var(&format!("{f}[{k}]"))).collect::<Vec<_>>();
        Spinors {
            psi: fam("psi"),
            psibar: fam("psibar"),
            p_psi: (1..=4).map(|k| a.var(&format!("p(psi[{k}])"))).collect(),
            p_psibar: (1..=4).map(|k| a.var(&format!("p(psibar[{k}])"))).collect(),
            a_upper: (0..4).map(|k| a.var(&format!("A[{k}]"))).collect(),
            e: a.var("e"),
            m: a.var("m"),
        }
    }

    /// `(ψ̄ γ^μ)_b`.
    fn bar_gamma(&self, mu: usize, b: usize) -> Poly {
        (0..4).fold(Poly::zero(), |acc, a| &acc + &(&self.psibar[a] * &gam(mu, a, b)))
    }

    /// `(γ^μ ψ)_a`.
    fn gamma_psi(&self, mu: usize, a: usize) -> Poly {
        (0..4).fold(Poly::zero(), |acc, b| &acc + &(&gam(mu, a, b) * &self.psi[b]))
    }

    fn current(&self, mu: usize) -> Poly {
        (0..4).fold(Poly::zero(), |acc, b| &acc + &(&self.bar_gamma(mu, b) * &self.psi[b]))
    }

    /// `A_μ` with the index lowered by η.
    fn a_lower(&self, mu: usize) -> Poly {
        &c(eta(mu), 0) * &self.a_upper[mu]
    }
}

fn dirac_maxwell_constraints() -> Check {
    let a = Analysis::fixture("dirac_maxwell_reduced");
    let s = Spinors::of(&a);
    let d = &a.dirac;
    let t = a.table();
    let found_at = |label: &str| d.found.iter().position(|r| r.label == label).ok_or(format!("no constraint {label}"));
    let chi = found_at("stage1[primary[A[0]]]")?;
    let phi2: Vec<usize> = (1..=4).map(|k| found_at(&format!("primary[psi[{k}]]"))).collect::<Result<_, _>>()?;
    let phi3: Vec<usize> = (1..=4).map(|k| found_at(&format!("primary[psibar[{k}]]"))).collect::<Result<_, _>>()?;

    same(&a, "chi", &d.found[chi].expr, &(&-s.e.clone() * &s.current(0)))?;

    // Normal-form Δ over (χ, φ2, φ3).
    let delta = |x: usize, y: usize| d.initial_delta.get(x, y).clone();
    same(&a, "{chi,chi}", &delta(chi, chi), &Poly::zero())?;
    for al in 0..4 {
        same(&a, "{chi,phi2}", &delta(chi, phi2[al]), &(&-s.e.clone() * &s.bar_gamma(0, al)))?;
        same(&a, "{chi,phi3}", &delta(chi, phi3[al]), &(&s.e * &s.gamma_psi(0, al)))?;
        same(&a, "{phi2,chi}", &delta(phi2[al], chi), &(&s.e * &s.bar_gamma(0, al)))?;
        same(&a, "{phi3,chi}", &delta(phi3[al], chi), &(&-s.e.clone() * &s.gamma_psi(0, al)))?;
        for be in 0..4 {
            same(&a, "{phi2,phi2}", &delta(phi2[al], phi2[be]), &Poly::zero())?;
            same(&a, "{phi3,phi3}", &delta(phi3[al], phi3[be]), &Poly::zero())?;
            same(&a, "{phi2,phi3}", &delta(phi2[al], phi3[be]), &(&c(0, -1) * &gam(0, be, al)))?;
            same(&a, "{phi3,phi2}", &delta(phi3[al], phi2[be]), &(&c(0, -1) * &gam(0, al, be)))?;
        }
    }
    let a0 = found_at("primary[A[0]]")?;
    for y in 0..d.found.len() {
        same(&a, "{phi1,Phi}", &delta(a0, y), &Poly::zero())?;
    }

    // Null vector: the ψ and ψ̄ entries pair with φ2 and φ3 respectively.
    ensure(d.null_vectors.len() == 1, || format!("expected one null vector, got {}", d.null_vectors.len()))?;
    let nv = &d.null_vectors[0];
    ensure(nv.replaces == chi && nv.lifted, || "null vector does not replace chi".into())?;
    let ie = &c(0, 1) * &s.e;
    let mut expected = vec![Poly::zero(); d.found.len()];
    expected[chi] = Poly::one();
    for al in 0..4 {
        expected[phi2[al]] = &ie * &s.psi[al];
        expected[phi3[al]] = &-ie.clone() * &s.psibar[al];
    }
    for (k, (got, want)) in nv.coefficients.iter().zip(&expected).enumerate() {
        same(&a, &format!("null vector entry {k}"), got, want)?;
    }
    let residual = |v: &[Poly]| -> bool {
        (0..d.found.len()).all(|r| {
            let row = (0..d.found.len()).fold(Poly::zero(), |acc, k| &acc + &(&delta(r, k) * &v[k]));
            d.reducer.is_weakly_zero(&row, t).unwrap()
        })
    };
    ensure(residual(&expected), || "corrected null vector is not annihilated by Δ".into())?;
    let mut printed = expected.clone();
    for al in 0..4 {
        printed[phi2[al]] = &ie * &s.psibar[al];
        printed[phi3[al]] = &-ie.clone() * &s.psi[al];
    }
    ensure(!residual(&printed), || "the unswapped vector was unexpectedly null".into())?;

    // Recombined first-class constraint ie(p_ψ ψ + ψ̄ p_ψ̄).
    let combined = d.constraints.iter().find(|r| r.label.starts_with("combined")).ok_or("no combined constraint")?;
    let want = (0..4).fold(Poly::zero(), |acc, k| {
        &acc + &(&ie * &(&(&s.p_psi[k] * &s.psi[k]) + &(&s.psibar[k] * &s.p_psibar[k])))
    });
    same(&a, "combined constraint", &combined.expr, &want)?;
    ensure(combined.class == ConstraintClass::First, || "combined constraint is not first class".into())?;

    // Δ and Δ⁻¹ over the second-class constraints, ordered φ2 then φ3.
    let sc_labels: Vec<&str> = d.second_class.iter().map(|&i| d.constraints[i].label.as_str()).collect();
    let want_labels: Vec<String> = (1..=4)
        .map(|k| format!("primary[psi[{k}]]"))
        .chain((1..=4).map(|k| format!("primary[psibar[{k}]]")))
        .collect();
    ensure(sc_labels == want_labels, || format!("second-class set {sc_labels:?}"))?;
    for x in 0..8 {
        for y in 0..8 {
            let (blk_x, ix) = (x / 4, x % 4);
            let (blk_y, iy) = (y / 4, y % 4);
            let (want_d, want_inv) = if blk_x == blk_y {
                (Poly::zero(), Poly::zero())
            } else {
                (&c(0, -1) * &gam(0, iy, ix), &c(0, 1) * &gam(0, ix, iy))
            };
            let sx = d.second_class[x];
            let sy = d.second_class[y];
            same(&a, &format!("delta[{x},{y}]"), &d.delta.get(sx, sy).clone(), &want_d)?;
            same(&a, &format!("delta_inverse[{x},{y}]"), d.delta_inverse.get(x, y), &want_inv)?;
        }
    }

    // Fundamental Dirac brackets.
    let db = |f: &Poly, g: &Poly| dirac_bracket(f, g, d, t).unwrap();
    for mu in 0..4 {
        for nu in 0..4 {
            let want = if mu == nu { Poly::one() } else { Poly::zero() };
            same(&a, "{A,p_A}_D", &db(&s.a_upper[mu], &a.var(&format!("p(A[{nu}])"))), &want)?;
            same(&a, "{A,A}_D", &db(&s.a_upper[mu], &s.a_upper[nu]), &Poly::zero())?;
        }
    }
    for l in 0..4 {
        for al in 0..4 {
            same(&a, "{psi,psibar}_D", &db(&s.psi[l], &s.psibar[al]), &(&c(0, -1) * &gam(0, l, al)))?;
            let delta_la = if l == al { Poly::one() } else { Poly::zero() };
            same(&a, "{psi,p_psi}_D", &db(&s.psi[l], &s.p_psi[al]), &delta_la)?;
            same(&a, "{psi,psi}_D", &db(&s.psi[l], &s.psi[al]), &Poly::zero())?;
            same(&a, "{psibar,psibar}_D", &db(&s.psibar[l], &s.psibar[al]), &Poly::zero())?;
            same(&a, "{psibar,p_psibar}_D", &db(&s.psibar[l], &s.p_psibar[al]), &Poly::zero())?;
        }
    }
    Ok(())
}

fn dirac_maxwell_hj() -> Check {
    let a = Analysis::fixture("dirac_maxwell_reduced");
    let s = Spinors::of(&a);
    let r = &a.hj;
    let find = |label: &str| r.hamiltonians.iter().position(|h| h.label == label).ok_or(format!("no {label}"));

    let mut hc = (1..4).fold(Poly::zero(), |acc, j| {
        let pj = a.var(&format!("p(A[{j}])"));
        &acc + &(&half() * &(&pj * &pj))
    });
    for mu in 0..4 {
        hc += &(&(&s.e * &s.a_lower(mu)) * &s.current(mu));
    }
    for k in 0..4 {
        hc += &(&s.m * &(&s.psibar[k] * &s.psi[k]));
    }
    let h0 = find("H'[t]")?;
    same(&a, "H'0", &r.hamiltonians[h0].expr, &(&a.var("P0") + &hc))?;
    let h1 = find("H'[A[0]]")?;
    same(&a, "H'1", &r.hamiltonians[h1].expr, &a.var("p(A[0])"))?;
    let mut h2 = Vec::new();
    let mut h3 = Vec::new();
    for k in 0..4 {
        let i = find(&format!("H'[psi[{}]]", k + 1))?;
        same(&a, "H'2", &r.hamiltonians[i].expr, &(&s.p_psi[k] - &(&c(0, 1) * &s.bar_gamma(0, k))))?;
        h2.push(i);
        let i = find(&format!("H'[psibar[{}]]", k + 1))?;
        same(&a, "H'3", &r.hamiltonians[i].expr, &s.p_psibar[k])?;
        h3.push(i);
    }

    ensure(r.added.len() == 1, || format!("expected one added Hamiltonian, got {}", r.added.len()))?;
    let h4 = r.added[0];
    same(&a, "H'4", &r.hamiltonians[h4].expr, &(&-s.e.clone() * &s.current(0)))?;
    ensure(r.outcomes[h1] == HjOutcome::NewHamiltonian(0), || format!("dH'1 outcome {:?}", r.outcomes[h1]))?;
    for &i in h2.iter().chain(&h3) {
        ensure(r.outcomes[i] == HjOutcome::DifferentialRelation, || {
            format!("{} outcome {:?}", r.hamiltonians[i].label, r.outcomes[i])
        })?;
    }
    for i in [h0, h4] {
        ensure(matches!(r.outcomes[i], HjOutcome::IdenticallyZero | HjOutcome::WeaklyZero), || {
            format!("{} outcome {:?}", r.hamiltonians[i].label, r.outcomes[i])
        })?;
    }

    // dψ = K_ψ dt and dψ̄ = K_ψ̄ dt reproduce the reduced Dirac equations.
    let k_of = |name: &str| -> Result<Poly, String> {
        let g = a.g(name);
        let rel = r.dt_relations.iter().find(|x| x.parameter == g).ok_or(format!("no dt relation for {name}"))?;
        ensure(rel.free.iter().all(|(_, k)| k.is_zero()), || format!("{name} depends on a free parameter"))?;
        Ok(rel.dt0.clone())
    };
    let k_psi: Vec<Poly> = (1..=4).map(|k| k_of(&format!("psi[{k}]"))).collect::<Result<_, _>>()?;
    let k_bar: Vec<Poly> = (1..=4).map(|k| k_of(&format!("psibar[{k}]"))).collect::<Result<_, _>>()?;
    for b in 0..4 {
        let lhs = (0..4).fold(Poly::zero(), |acc, al| &acc + &(&(&c(0, 1) * &k_bar[al]) * &gam(0, al, b)));
        let mut rhs = &-s.m.clone() * &s.psibar[b];
        for mu in 0..4 {
            rhs -= &(&(&s.e * &s.a_lower(mu)) * &s.bar_gamma(mu, b));
        }
        same(&a, "adjoint Dirac equation", &lhs, &rhs)?;

        let lhs = (0..4).fold(Poly::zero(), |acc, be| &acc + &(&(&c(0, 1) * &gam(0, b, be)) * &k_psi[be]));
        let mut rhs = &s.m * &s.psi[b];
        for mu in 0..4 {
            rhs += &(&(&s.e * &s.a_lower(mu)) * &s.gamma_psi(mu, b));
        }
        same(&a, "Dirac equation", &lhs, &rhs)?;
    }
    Ok(())
}

fn cross_check_library() -> Check {
    for name in FIXTURES {
        let a = Analysis::fixture(name);
        let cc = cross_check_dirac(&a.hj, &a.dirac, a.table()).map_err(|e| format!("{name}: {e}"))?;
        ensure(cc.verdict() == "equivalent", || format!("{name}: {:?}", cc.mismatches))?;
    }
    Ok(())
}

type Z = Complex<f64>;

/// Linear odd forms over `(ψ, ψ̄ | p_ψ, p_ψ̄)`; every odd pair brackets to one
/// in either order, so `{a·η, b·η} = Σ (a_q b_p + a_p b_q)`.
fn linear_odd_bracket(a: &[Z; 4], b: &[Z; 4]) -> Z {
    a[0] * b[2] + a[2] * b[0] + a[1] * b[3] + a[3] * b[1]
}

fn poly_to_complex(p: &Poly) -> Option<Z> {
    use num_traits::ToPrimitive;
    let k = p.as_constant()?;
    Some(Z::new(k.re.to_f64()?, k.im.to_f64()?))
}

fn fermionic_oracle() -> Check {
    let a = Analysis::fixture("fermionic_oscillator");
    let d = &a.dirac;
    let i = Z::new(0.0, 1.0);
    let one = Z::new(1.0, 0.0);
    let zero = Z::new(0.0, 0.0);
    // p_ψ = i/2 ψ̄ and p_ψ̄ = i/2 ψ by hand.
    let phi = [[zero, -i / 2.0, one, zero], [-i / 2.0, zero, zero, one]];
    let psi = [one, zero, zero, zero];
    let psibar = [zero, one, zero, zero];
    let hand_delta: Vec<Vec<Z>> = (0..2).map(|r| (0..2).map(|s| linear_odd_bracket(&phi[r], &phi[s])).collect()).collect();
    let det = hand_delta[0][0] * hand_delta[1][1] - hand_delta[0][1] * hand_delta[1][0];
    let hand_inv = [
        [hand_delta[1][1] / det, -hand_delta[0][1] / det],
        [-hand_delta[1][0] / det, hand_delta[0][0] / det],
    ];
    let mut hand_db = linear_odd_bracket(&psi, &psibar);
    for r in 0..2 {
        for s in 0..2 {
            hand_db -= linear_odd_bracket(&psi, &phi[r]) * hand_inv[r][s] * linear_odd_bracket(&phi[s], &psibar);
        }
    }
    let want_delta = [[zero, -i], [-i, zero]];
    let want_inv = [[zero, i], [i, zero]];
    ensure(d.second_class.len() == 2, || "two second-class constraints expected".into())?;
    for r in 0..2 {
        for s in 0..2 {
            ensure(hand_delta[r][s] == want_delta[r][s] && hand_inv[r][s] == want_inv[r][s], || {
                "hand expansion disagrees with the expected matrices".into()
            })?;
            let got = poly_to_complex(d.delta.get(d.second_class[r], d.second_class[s])).ok_or("Δ entry not constant")?;
            ensure(got == want_delta[r][s], || format!("Δ[{r},{s}] = {got}"))?;
            let got = poly_to_complex(d.delta_inverse.get(r, s)).ok_or("Δ⁻¹ entry not constant")?;
            ensure(got == want_inv[r][s], || format!("Δ⁻¹[{r},{s}] = {got}"))?;
        }
    }
    ensure(hand_db == -i, || format!("hand Dirac bracket {hand_db}"))?;
    let db = dirac_bracket(&a.var("psi"), &a.var("psibar"), d, a.table()).map_err(|e| e.to_string())?;
    same(&a, "{psi,psibar}_D", &db, &c(0, -1))
}

fn sho_endpoint(a: &Analysis, path: &PathSpec, q0: f64, p0: f64) -> (f64, f64, Vec<(f64, f64, f64)>) {
    use std::collections::BTreeMap;
    let flow: FlowSystem<f64> = FlowSystem::new(&a.sys, &a.tds, &a.hj, a.table(), 0).unwrap();
    let given: BTreeMap<Generator, _> = [(a.g("q"), q0), (a.g("p(q)"), p0)]
        .into_iter()
        .map(|(g, x)| (g, supermech::numeric_flow::GrassmannValue::scalar(0, x)))
        .collect();
    let init = flow.initial_state(&given, path.start()).unwrap();
    let res = flow.integrate(path, &init).unwrap();
    let (q, p) = (a.g("q"), a.g("p(q)"));
    let kq = res.generators.iter().position(|&g| g == q).unwrap();
    let kp = res.generators.iter().position(|&g| g == p).unwrap();
    let samples = res.samples.iter().map(|s| (s.point[0], s.state[kq].body(), s.state[kp].body())).collect();
    (res.value(q).unwrap().body(), res.z.body(), samples)
}

fn simpson(xs: &[(f64, f64)]) -> f64 {
    let n = xs.len() - 1;
    assert!(n.is_multiple_of(2), "Simpson needs an even number of intervals");
    let h = (xs[n].0 - xs[0].0) / n as f64;
    let mut s = xs[0].1 + xs[n].1;
    for (k, x) in xs.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * x.1;
    }
    s * h / 3.0
}

fn harmonic_oscillator() -> Check {
    let a = Analysis::fixture("sho");
    let q = a.var("q");
    let p = a.var("p(q)");
    let h = &a.legendre.h0;
    same(&a, "H0", h, &(&half() * &(&(&p * &p) + &(&q * &q))))?;
    let row = a.tds.coordinates.iter().position(|&(g, _)| g == a.g("q")).ok_or("q row")?;
    ensure(a.tds.parameters.len() == 1, || "nonsingular system has one parameter".into())?;
    same(&a, "dq", &a.tds.dq[row][0], &h.derive_left(a.g("p(q)")))?;
    same(&a, "dp", &a.tds.dp[row][0], &-h.derive_right(a.g("q")))?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let period = PathSpec::new(vec![vec![0.0], vec![two_pi]], 2000).unwrap();
    let (q_end, z, samples) = sho_endpoint(&a, &period, 1.0, 0.0);
    ensure((q_end - 1.0).abs() <= SHO_TOLERANCE, || format!("q(2π) = {q_end}"))?;
    let lag: Vec<(f64, f64)> = samples.iter().map(|&(t, q, p)| (t, 0.5 * (p * p - q * q))).collect();
    let action = simpson(&lag);
    ensure((z - action).abs() <= SHO_TOLERANCE, || format!("Z = {z}, quadrature {action}"))?;

    // Off a full period the action does not vanish; compare with the exact
    // trajectory q = cos t + ½ sin t.
    let partial = PathSpec::new(vec![vec![0.0], vec![2.0]], 2000).unwrap();
    let (_, z, _) = sho_endpoint(&a, &partial, 1.0, 0.5);
    let exact: Vec<(f64, f64)> = (0..=2000)
        .map(|k| {
            let t = 2.0 * k as f64 / 2000.0;
            let (qt, vt) = (t.cos() + 0.5 * t.sin(), -t.sin() + 0.5 * t.cos());
            (t, 0.5 * (vt * vt - qt * qt))
        })
        .collect();
    let action = simpson(&exact);
    ensure(action.abs() > 0.1 && (z - action).abs() <= SHO_TOLERANCE, || format!("Z = {z}, quadrature {action}"))?;

    // At a full period the amplitude error dominates and converges faster
    // than the phase error, so the order is measured off-period.
    let err = |steps: usize| {
        let path = PathSpec::new(vec![vec![0.0], vec![2.0]], steps).unwrap();
        let (_, _, samples) = sho_endpoint(&a, &path, 1.0, 0.0);
        let &(t, q, p) = samples.last().unwrap();
        (q - t.cos()).abs().max((p + t.sin()).abs())
    };
    let ratio = err(50) / err(100);
    ensure(ratio >= CONVERGENCE_RANGE.0 && ratio <= CONVERGENCE_RANGE.1, || format!("error ratio {ratio}"))
}

fn constraint_drift() -> Check {
    for name in ["fermionic_oscillator", "gauge_toy"] {
        let a = Analysis::fixture(name);
        let cfg = common::fixture_flow(name).ok_or("no path config")?;
        let n = cfg.algebra.unwrap_or_else(|| supermech::frontend::report::default_algebra(a.table()));
        let flow: FlowSystem = FlowSystem::new(&a.sys, &a.tds, &a.hj, a.table(), n).map_err(|e| e.to_string())?;
        let init = flow.initial_from_config(&cfg, a.table(), cfg.paths[0].start()).map_err(|e| e.to_string())?;
        for path in &cfg.paths {
            let total = path.steps * (path.waypoints.len() - 1);
            ensure(total >= 10_000, || format!("{name}: only {total} steps"))?;
            let res = flow.integrate(path, &init).map_err(|e| e.to_string())?;
            ensure(res.drift_per.len() == a.hj.hamiltonians.len(), || format!("{name}: drift not tracked for every H'"))?;
            ensure(res.drift <= DRIFT_TOLERANCE, || format!("{name}: drift {:e}", res.drift))?;
        }
    }
    Ok(())
}

fn path_independence() -> Check {
    for (name, flagged) in [("free_singular", vec![]), ("gauge_toy", vec!["q1", "q2"])] {
        let a = Analysis::fixture(name);
        let cfg = common::fixture_flow(name).ok_or("no path config")?;
        let n = cfg.algebra.unwrap_or_else(|| supermech::frontend::report::default_algebra(a.table()));
        let flow: FlowSystem = FlowSystem::new(&a.sys, &a.tds, &a.hj, a.table(), n).map_err(|e| e.to_string())?;
        let init = flow.initial_from_config(&cfg, a.table(), cfg.paths[0].start()).map_err(|e| e.to_string())?;
        let r = path_independence_check(&flow, &a.sys, &a.hj, a.table(), &cfg.paths[0], &cfg.paths[1], &init, PATH_TOLERANCE)
            .map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("{name}: path independence failed {r:?}"))?;
        ensure(r.flagged() == flagged, || format!("{name}: flagged {:?}", r.flagged()))?;
        for o in &r.observables {
            if o.first_class {
                ensure(o.discrepancy <= PATH_TOLERANCE, || format!("{name}: {} differs by {:e}", o.name, o.discrepancy))?;
            }
        }
        if name == "free_singular" {
            ensure(r.strict && r.z_discrepancy <= PATH_TOLERANCE, || "free model Z differs".into())?;
        } else {
            for obs in ["p(q1)", "p(q2)"] {
                let o = r.observables.iter().find(|o| o.name == obs).ok_or(format!("no {obs}"))?;
                ensure(o.first_class && o.agrees, || format!("{obs} not first class or disagrees"))?;
            }
            let q1 = r.observables.iter().find(|o| o.name == "q1").ok_or("no q1")?;
            ensure(q1.discrepancy > PATH_TOLERANCE, || "q1 unexpectedly path independent".into())?;
        }
    }
    Ok(())
}

fn determinism() -> Check {
    for name in FIXTURES {
        let first = common::fixture_report(name);
        let second = common::fixture_report(name);
        let (t1, t2) = (first.to_text(), second.to_text());
        let (j1, j2) = (first.to_json(), second.to_json());
        ensure(t1 == t2 && j1 == j2, || format!("{name}: consecutive runs differ"))?;
        let golden = common::fixture_dir().join("golden");
        let gt = std::fs::read_to_string(golden.join(format!("{name}.txt"))).map_err(|e| format!("{name}: {e}"))?;
        let gj = std::fs::read_to_string(golden.join(format!("{name}.json"))).map_err(|e| format!("{name}: {e}"))?;
        ensure(gt == t1 && gj == j1, || format!("{name}: report differs from the golden file"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bracket axioms on random graded polynomials", bracket_axioms),
        ("symplectic form equals the direct bracket", symplectic_equivalence),
        ("reduced Dirac-Maxwell constraint algebra", dirac_maxwell_constraints),
        ("reduced Dirac-Maxwell Hamilton-Jacobi closure", dirac_maxwell_hj),
        ("Dirac and Hamilton-Jacobi analyses agree on every fixture", cross_check_library),
        ("fermionic oscillator brackets against the hand expansion", fermionic_oracle),
        ("harmonic oscillator flow and RK4 order", harmonic_oscillator),
        ("constraint drift along integrated flows", constraint_drift),
        ("path independence and first-class observables", path_independence),
        ("byte-identical golden reports", determinism),
    ];
    let mut failed = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2} PASS ({secs:.2}s): {title}", k + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL ({secs:.2}s): {title}: {e}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
