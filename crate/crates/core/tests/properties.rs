mod common;

use common::*;
use plab_core::algebra::{Monomial, Poly, RatFunc, Rational};
use plab_core::contact::contact_generators;
use plab_core::dsl::{self, Decl};
use plab_core::equivalence::{gate, prolonged_action, verify_absolute, FiberedMap, GateVerdict, Verdict, Witness};
use plab_core::forms::DiffForm;
use plab_core::jet::{binomial, holonomic_jet, JetChart, MultiIndex, PolySection};
use plab_core::pde::{is_solution, jet_index, prolong, tangency_oracle, PdeSystem};
use plab_core::pfaffian::{flag_classify, FlagVerdict};
use plab_core::spencer::{spencer_cohomology, At};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn contact_system_of_curves_is_a_flag() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 1..=4 {
        let c = contact_generators(&JetChart::standard(1, 1, k)).to_pfaff();
        assert_eq!(flag_classify(&c, 5, &mut rng), FlagVerdict::Flag { length: k }, "k = {k}");
    }
}

#[test]
fn euler_characteristic_along_diagonals() {
    let cases = [("laplace.pde", 4), ("wave.pde", 5), ("ux.pde", 3), ("finite.pde", 4), ("free.pde", 4)];
    for (file, r) in cases {
        let s = system(file);
        let (n, k) = (s.chart().n(), s.order());
        let rep = spencer_cohomology(&s, r - n..=r, 0..=n, &At::Generic).unwrap();
        assert!(r - n >= k);
        let mut chain = 0i64;
        let mut homology = 0i64;
        for p in 0..=n {
            let sign = if p % 2 == 0 { 1 } else { -1 };
            chain += sign * (rep.symbol_dims[&(r - p)] * binomial(n, p)) as i64;
            homology += sign * rep.cohomology[&(r - p, p)] as i64;
        }
        assert_eq!(chain, homology, "{file} at q + p = {r}");
    }
}

/// Random solved systems without colliding prolonged leads.
fn random_solved(rng: &mut impl Rng) -> PdeSystem {
    if rng.gen_bool(0.5) {
        let m = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=2);
        let chart = JetChart::standard(1, m, k);
        let params: Vec<usize> = (0..chart.dimension()).filter(|&v| v < 1 + m * k).collect();
        let rules = (0..m).map(|a| (chart.u(a, &MultiIndex::new(vec![k as u32])), random_poly(rng, &params, 2, 3))).collect();
        PdeSystem::explicit(chart, rules).unwrap()
    } else {
        let chart = JetChart::standard(2, 1, 1);
        let params = vec![0, 1, 2, jet_index(&chart, 0, &[0, 1])];
        let rule = (jet_index(&chart, 0, &[1, 0]), random_poly(rng, &params, 2, 4));
        PdeSystem::explicit(chart, vec![rule]).unwrap()
    }
}

#[test]
fn prolongation_matches_tangency() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let s = random_solved(&mut rng);
        let p = prolong(&s, 1);
        let t = tangency_oracle(&s).unwrap();
        assert_eq!(p.chart(), t.chart());
        let (pf, tf) = (p.explicit_form().expect("no collisions"), t.explicit_form().unwrap());
        assert_eq!(pf.rules(), tf.rules(), "trial {trial}");
        // same locus: each raw equation of one reduces to zero on the other
        for f in t.equations() {
            assert!(pf.reduce(f).is_zero(), "trial {trial}");
        }
        for f in p.equations() {
            assert!(tf.reduce(f).is_zero(), "trial {trial}");
        }
    }
}

#[test]
fn gate_failures_persist_with_more_orders() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (finite, ux) = (system("finite.pde"), system("ux.pde"));
    for q in 0..=3 {
        let g = gate(&finite, &ux, q, 3, &mut rng).unwrap();
        assert!(matches!(g.verdict, GateVerdict::Fail { level: 0, .. }), "q_max = {q}");
    }
    let (l, w) = (system("laplace.pde"), system("wave.pde"));
    for q in 0..=2 {
        let g = gate(&l, &w, q, 3, &mut rng).unwrap();
        assert_eq!(g.verdict, GateVerdict::PassNecessary { q0: 2 }, "q_max = {q}");
    }
}

#[test]
fn gate_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let pairs = [("finite.pde", "ux.pde"), ("laplace.pde", "wave.pde"), ("laplace.pde", "ux.pde"), ("ux.pde", "ux.pde")];
    for (a, b) in pairs {
        let (sa, sb) = (system(a), system(b));
        let ab = gate(&sa, &sb, 1, 3, &mut rng).unwrap().verdict;
        let ba = gate(&sb, &sa, 1, 3, &mut rng).unwrap().verdict;
        match (&ab, &ba) {
            (
                GateVerdict::Fail { level: l1, condition: c1, witness: w1, .. },
                GateVerdict::Fail { level: l2, condition: c2, witness: w2, .. },
            ) => {
                assert_eq!((l1, c1), (l2, c2), "{a} vs {b}");
                if let (Some(Witness::Dimensions { left, right, .. }), Some(Witness::Dimensions { left: l, right: r, .. })) = (w1, w2) {
                    assert_eq!((left, right), (r, l));
                }
            }
            _ => assert_eq!(ab, ba, "{a} vs {b}"),
        }
    }
}

fn parse_map(text: &str) -> FiberedMap {
    match dsl::parse(text).unwrap().decls.remove(0) {
        Decl::Map(m) => m.to_fibered().unwrap(),
        _ => unreachable!(),
    }
}

#[test]
fn equivalences_transport_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let c = JetChart::standard(1, 1, 2);
    let u2 = jet_index(&c, 0, &[2]);
    let s = PdeSystem::explicit(c.clone(), vec![(u2, Poly::zero())]).unwrap();
    let t = PdeSystem::explicit(c.clone(), vec![(u2, Poly::int(2))]).unwrap();
    let phi = parse_map("map P { base: x -> x; fiber: u -> u + x^2; inverse: x -> x, u -> u - x^2; }");
    assert_eq!(verify_absolute(&s, &t, &phi, &mut rng).unwrap(), Verdict::AbsoluteEquivalent);
    let action = prolonged_action(&phi, &c).unwrap();
    for _ in 0..10 {
        let (a, b) = (small_rational(&mut rng), small_rational(&mut rng));
        let sigma = PolySection::new(vec![Poly::var(0).scale(&a) + Poly::constant(b)]);
        assert!(is_solution(&s, &sigma));
        let image = PolySection::new(vec![phi.fiber()[0].substitute(&|v| (v == 1).then(|| sigma.components[0].clone()))]);
        assert!(is_solution(&t, &image));
        let x0 = vec![small_rational(&mut rng)];
        let before = holonomic_jet(&sigma, &x0, &c).unwrap();
        let mapped: Vec<Rational> = action.iter().map(|p| p.eval(&before).unwrap()).collect();
        assert_eq!(mapped, holonomic_jet(&image, &x0, &c).unwrap());
    }
}

#[test]
fn prolonged_action_maps_jets_of_sections() {
    // τ(y) = f(ψ(y), σ(ψ(y))) with ψ the inverse base map
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let phi = parse_map("map S { base: x -> x + y^2, y -> y; fiber: u -> u + x*y; inverse: x -> x - y^2, y -> y, u -> u - (x - y^2)*y; }");
    let c = JetChart::standard(2, 1, 2);
    let action = prolonged_action(&phi, &c).unwrap();
    for _ in 0..10 {
        let sigma = random_poly(&mut rng, &[0, 1], 2, 4);
        let psi = phi.inverse_base();
        let on_psi = |p: &Poly| p.substitute(&|v| psi.get(v).cloned());
        let tau = phi.fiber()[0].substitute(&|v| match v {
            0 | 1 => Some(psi[v].clone()),
            2 => Some(on_psi(&sigma)),
            _ => None,
        });
        let x0: Vec<Rational> = (0..2).map(|_| small_rational(&mut rng)).collect();
        let y0: Vec<Rational> = phi.base().iter().map(|p| p.eval(&x0).unwrap()).collect();
        let before = holonomic_jet(&PolySection::new(vec![sigma]), &x0, &c).unwrap();
        let mapped: Vec<Rational> = action.iter().map(|p| p.eval(&before).unwrap()).collect();
        assert_eq!(mapped, holonomic_jet(&PolySection::new(vec![tau]), &y0, &c).unwrap());
    }
}

fn poly_strategy(vars: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(0u32..=2, vars)), 0..5).prop_map(|terms| {
        Poly::from_terms(terms.into_iter().map(|(c, e)| (Monomial::from_exponents(&e), Rational::from_integer(c.into()))))
    })
}

fn form_strategy(vars: usize, degree: usize) -> impl Strategy<Value = DiffForm> {
    prop::collection::vec((prop::collection::btree_set(0..vars, degree), poly_strategy(vars)), 0..4).prop_map(move |terms| {
        let mut w = DiffForm::zero(degree);
        for (idx, c) in terms {
            if idx.len() == degree {
                w = w.add(&{
                    let mut t = DiffForm::zero(degree);
                    t.add_term(idx.into_iter().collect(), RatFunc::from_poly(c));
                    t
                });
            }
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn d_squared_vanishes(w in form_strategy(4, 1)) {
        prop_assert!(w.d().d().is_zero());
    }

    #[test]
    fn d_obeys_leibniz(a in form_strategy(3, 1), b in form_strategy(3, 1)) {
        let lhs = a.wedge(&b).d();
        let rhs = a.d().wedge(&b).sub(&a.wedge(&b.d()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn printed_equations_parse_back(p in poly_strategy(5)) {
        prop_assume!(!p.is_zero());
        let chart = JetChart::new(vec!["x".into(), "y".into()], vec!["u".into()], 1).unwrap();
        let text = format!("system S {{ base x, y; fiber u; order 1; eq: {}; }}", chart.display(&p));
        let f = dsl::parse(&text).unwrap();
        let Decl::System(s) = &f.decls[0] else { unreachable!() };
        prop_assert_eq!(&s.equations[0], &p);
    }
}
