#![allow(dead_code)]

use std::path::PathBuf;

use plab_core::algebra::{Monomial, Poly, Rational};
use plab_core::dsl::{self, Decl};
use plab_core::equivalence::FiberedMap;
use plab_core::pde::PdeSystem;
use plab_core::pfaffian::PfaffSystem;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_file(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().into_owned()
}

fn decls(name: &str) -> Vec<Decl> {
    let text = std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file");
    dsl::parse(&text).expect("corpus parses").decls
}

pub fn system(name: &str) -> PdeSystem {
    decls(name)
        .into_iter()
        .find_map(|d| match d {
            Decl::System(s) => Some(s.to_system().expect("valid system")),
            _ => None,
        })
        .expect("a system declaration")
}

pub fn pfaffian(name: &str) -> PfaffSystem {
    decls(name)
        .into_iter()
        .find_map(|d| match d {
            Decl::Pfaffian(p) => Some(p.to_system().expect("valid pfaffian")),
            _ => None,
        })
        .expect("a pfaffian declaration")
}

pub fn fibered_map(name: &str) -> FiberedMap {
    decls(name)
        .into_iter()
        .find_map(|d| match d {
            Decl::Map(m) => Some(m.to_fibered().expect("valid map")),
            _ => None,
        })
        .expect("a map declaration")
}

pub fn small_int(rng: &mut impl Rng, bound: i64) -> Rational {
    Rational::from_integer(rng.gen_range(-bound..=bound).into())
}

pub fn small_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=3).into())
}

/// Random polynomial in variables `vars` with total degree at most `deg`.
pub fn random_poly(rng: &mut impl Rng, vars: &[usize], deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..terms {
        let d = rng.gen_range(0..=deg);
        let mut pairs = Vec::new();
        for _ in 0..d {
            if vars.is_empty() {
                break;
            }
            pairs.push((vars[rng.gen_range(0..vars.len())], 1));
        }
        let m = Monomial::from_pairs(pairs);
        p.add_term(m, small_int(rng, 3));
    }
    p
}

/// Drops every term of total degree above `k`.
pub fn truncate(p: &Poly, k: u32) -> Poly {
    Poly::from_terms(p.terms().filter(|(m, _)| m.degree() <= k).map(|(m, c)| (m.clone(), c.clone())))
}
