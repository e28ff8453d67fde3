//! Jet-space charts for the trivial fibration ℝⁿ × ℝᵐ → ℝⁿ.
//!
//! Coordinates of `J_kπ` are laid out as `x¹..xⁿ` followed by the jet
//! variables `u^a_α`, grouped by multi-index in graded lexicographic order
//! and then by fiber index. The chart of order `k` is therefore a prefix of
//! the chart of order `k + 1`, and a polynomial written on one is valid on
//! all higher ones.

mod groupoid;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

pub use groupoid::{conjugate_jet, jet_compose, jet_invert, InvertiblePolyMap, JetOfMap, PolyMap};

use crate::algebra::{Chart, Poly, Rational};
use crate::error::{Error, Result};

/// Exponent vector of a repeated partial derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|α|`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α + 1_i`
    pub fn raised(&self, i: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[i] += 1;
        MultiIndex(e)
    }

    /// `α − 1_i`, if `α_i > 0`.
    pub fn lowered(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(MultiIndex(e))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `α!`
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .map(|&e| (1..=e).fold(BigInt::one(), |acc, j| acc * BigInt::from(j)))
            .product()
    }

    /// Position in the graded lexicographic enumeration of all multi-indices
    /// of this length.
    pub fn rank(&self) -> usize {
        let n = self.0.len();
        let d = self.order() as usize;
        let mut pos = if d == 0 { 0 } else { binomial(n + d - 1, n) };
        let mut rem = d;
        for (j, &a) in self.0.iter().enumerate() {
            let parts = n - j - 1;
            for v in (a as usize + 1)..=rem {
                pos += compositions(rem - v, parts);
            }
            rem -= a as usize;
        }
        pos
    }

    /// Inverse of [`MultiIndex::rank`].
    pub fn unrank(n: usize, mut pos: usize) -> MultiIndex {
        let mut d = 0;
        loop {
            let c = compositions(d, n);
            if pos < c {
                break;
            }
            pos -= c;
            d += 1;
        }
        let mut e = vec![0u32; n];
        let mut rem = d;
        for (j, slot) in e.iter_mut().enumerate() {
            let parts = n - j - 1;
            let mut v = rem;
            loop {
                let c = compositions(rem - v, parts);
                if pos < c {
                    break;
                }
                pos -= c;
                v -= 1;
            }
            *slot = v as u32;
            rem -= v;
        }
        MultiIndex(e)
    }
}

impl Ord for MultiIndex {
    /// Graded, then lexicographically descending: `(1,0)` precedes `(0,1)`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// `C(a, b)`
pub fn binomial(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
}

/// Number of exponent vectors of length `parts` summing to `total`.
fn compositions(total: usize, parts: usize) -> usize {
    if parts == 0 {
        usize::from(total == 0)
    } else {
        binomial(total + parts - 1, parts - 1)
    }
}

/// All multi-indices of length `n` with `|α| ≤ k`, in graded lexicographic order.
pub fn enumerate_multi_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    (0..binomial(n + k, k)).map(|p| MultiIndex::unrank(n, p)).collect()
}

/// All multi-indices of length `n` with `|α| = q`.
pub fn multi_indices_of_order(n: usize, q: usize) -> Vec<MultiIndex> {
    let start = if q == 0 { 0 } else { binomial(n + q - 1, n) };
    (start..start + compositions(q, n)).map(|p| MultiIndex::unrank(n, p)).collect()
}

/// A coordinate of a jet chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JetCoord {
    Base(usize),
    Jet { fiber: usize, alpha: MultiIndex },
}

/// Chart of `J_kπ` for `π: ℝⁿ × ℝᵐ → ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetChart {
    base: Vec<String>,
    fiber: Vec<String>,
    order: usize,
}

impl JetChart {
    pub fn new(base: Vec<String>, fiber: Vec<String>, order: usize) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::Shape("a jet chart needs at least one base variable".into()));
        }
        if fiber.is_empty() {
            return Err(Error::Shape("a jet chart needs at least one fiber variable".into()));
        }
        let chart = JetChart { base, fiber, order };
        // rejects duplicate names
        chart.chart()?;
        Ok(chart)
    }

    /// Chart with default names `x1..xn`, `u1..um` (or `x`, `u` when one-dimensional).
    pub fn standard(n: usize, m: usize, order: usize) -> Self {
        let names = |prefix: &str, count: usize| -> Vec<String> {
            if count == 1 {
                vec![prefix.to_string()]
            } else {
                (1..=count).map(|i| format!("{prefix}{i}")).collect()
            }
        };
        JetChart::new(names("x", n), names("u", m), order).expect("standard names are distinct")
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.fiber.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.fiber
    }

    pub fn with_order(&self, order: usize) -> JetChart {
        JetChart { base: self.base.clone(), fiber: self.fiber.clone(), order }
    }

    pub fn same_shape(&self, other: &JetChart) -> bool {
        self.n() == other.n() && self.m() == other.m() && self.order == other.order
    }

    /// `n + m·C(n+k, k)`
    pub fn dimension(&self) -> usize {
        self.n() + self.m() * binomial(self.n() + self.order, self.order)
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    /// Index of `u^a_α`; valid on every chart of order at least `|α|`.
    pub fn u(&self, a: usize, alpha: &MultiIndex) -> usize {
        self.n() + alpha.rank() * self.m() + a
    }

    pub fn coord(&self, idx: usize) -> JetCoord {
        let n = self.n();
        if idx < n {
            JetCoord::Base(idx)
        } else {
            let r = idx - n;
            JetCoord::Jet { fiber: r % self.m(), alpha: MultiIndex::unrank(n, r / self.m()) }
        }
    }

    /// Order of a coordinate: 0 for base variables, `|α|` for `u^a_α`.
    pub fn coord_order(&self, idx: usize) -> usize {
        match self.coord(idx) {
            JetCoord::Base(_) => 0,
            JetCoord::Jet { alpha, .. } => alpha.order() as usize,
        }
    }

    pub fn coord_name(&self, idx: usize) -> String {
        match self.coord(idx) {
            JetCoord::Base(i) => self.base[i].clone(),
            JetCoord::Jet { fiber, alpha } => {
                if alpha.order() == 0 {
                    self.fiber[fiber].clone()
                } else {
                    format!("{}{}", self.fiber[fiber], alpha)
                }
            }
        }
    }

    /// Named coordinate chart of this jet space.
    pub fn chart(&self) -> Result<Chart> {
        Chart::new((0..self.dimension()).map(|i| self.coord_name(i)).collect())
    }

    /// Indices of the jet variables of order exactly `q`, ordered by
    /// multi-index and then fiber.
    pub fn coords_of_order(&self, q: usize) -> Vec<usize> {
        multi_indices_of_order(self.n(), q)
            .iter()
            .flat_map(|alpha| (0..self.m()).map(move |a| (a, alpha.clone())))
            .map(|(a, alpha)| self.u(a, &alpha))
            .collect()
    }

    pub fn display(&self, p: &Poly) -> String {
        p.display_with(&|v| self.coord_name(v))
    }

    /// Fails when `p` uses coordinates beyond this chart.
    pub fn check(&self, p: &Poly) -> Result<()> {
        match p.max_var() {
            Some(v) if v >= self.dimension() => Err(Error::ChartMismatch(format!(
                "{} (order {} chart)",
                self.coord_name(v),
                self.order
            ))),
            _ => Ok(()),
        }
    }
}

/// Total derivative `D_i F = ∂F/∂xⁱ + Σ u^a_{α+1_i} ∂F/∂u^a_α`.
///
/// `F` may live on any chart of the same `(n, m)`; the result lives one order higher.
pub fn total_derivative(chart: &JetChart, f: &Poly, i: usize) -> Poly {
    assert!(i < chart.n(), "total derivative direction out of range");
    let mut out = f.partial(chart.x(i));
    for v in f.vars() {
        if let JetCoord::Jet { fiber, alpha } = chart.coord(v) {
            let next = Poly::var(chart.u(fiber, &alpha.raised(i)));
            out = out + &f.partial(v) * &next;
        }
    }
    out
}

/// `D^β F`, applying the derivatives one direction at a time.
pub fn total_derivative_multi(chart: &JetChart, f: &Poly, beta: &MultiIndex) -> Poly {
    let mut out = f.clone();
    for (i, &e) in beta.exponents().iter().enumerate() {
        for _ in 0..e {
            out = total_derivative(chart, &out, i);
        }
    }
    out
}

/// A polynomial local section `x ↦ (x, σ(x))`; components use the base
/// variables `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySection {
    pub components: Vec<Poly>,
}

impl PolySection {
    pub fn new(components: Vec<Poly>) -> Self {
        PolySection { components }
    }

    /// `∂^α σ^a` as a polynomial in the base variables.
    pub fn derivative(&self, a: usize, alpha: &MultiIndex) -> Poly {
        let mut p = self.components[a].clone();
        for (i, &e) in alpha.exponents().iter().enumerate() {
            for _ in 0..e {
                p = p.partial(i);
            }
        }
        p
    }

    /// Every coordinate of `j_kσ` as a polynomial in the base variables.
    pub fn symbolic_jet(&self, chart: &JetChart) -> Vec<Poly> {
        (0..chart.dimension())
            .map(|idx| match chart.coord(idx) {
                JetCoord::Base(i) => Poly::var(i),
                JetCoord::Jet { fiber, alpha } => self.derivative(fiber, &alpha),
            })
            .collect()
    }
}

/// `j_kσ(x₀)` as a full coordinate assignment on `chart`.
pub fn holonomic_jet(section: &PolySection, x0: &[Rational], chart: &JetChart) -> Result<Vec<Rational>> {
    if x0.len() != chart.n() {
        return Err(Error::Shape(format!("base point has {} coordinates, expected {}", x0.len(), chart.n())));
    }
    if section.components.len() != chart.m() {
        return Err(Error::Shape(format!(
            "section has {} components, expected {}",
            section.components.len(),
            chart.m()
        )));
    }
    section.symbolic_jet(chart).iter().map(|p| p.eval(x0)).collect()
}

/// `α!` as a rational; converts between derivative values and Taylor coefficients.
pub(crate) fn factorial_rational(alpha: &MultiIndex) -> Rational {
    Rational::from_integer(alpha.factorial())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn dimensions() {
        assert_eq!(JetChart::standard(1, 1, 1).dimension(), 3);
        assert_eq!(JetChart::standard(2, 1, 2).dimension(), 8);
        for (n, m) in [(1, 1), (3, 2), (2, 4)] {
            assert_eq!(JetChart::standard(n, m, 0).dimension(), n + m);
        }
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(enumerate_multi_indices(1, 2), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
        assert_eq!(enumerate_multi_indices(2, 1), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        let three = enumerate_multi_indices(3, 2);
        assert_eq!(three.len(), 10);
        // brute force: every exponent vector with entries ≤ 2 and sum ≤ 2, sorted
        let mut brute = Vec::new();
        for a in 0..=2u32 {
            for b in 0..=2u32 {
                for c in 0..=2u32 {
                    if a + b + c <= 2 {
                        brute.push(mi(&[a, b, c]));
                    }
                }
            }
        }
        brute.sort();
        assert_eq!(three, brute);
        for (p, alpha) in three.iter().enumerate() {
            assert_eq!(alpha.rank(), p);
        }
    }

    #[test]
    fn chart_names_and_prefix_layout() {
        let c2 = JetChart::standard(2, 1, 2);
        let names: Vec<String> = (0..c2.dimension()).map(|i| c2.coord_name(i)).collect();
        assert_eq!(names, ["x1", "x2", "u", "u[1,0]", "u[0,1]", "u[2,0]", "u[1,1]", "u[0,2]"]);
        let c1 = c2.with_order(1);
        for i in 0..c1.dimension() {
            assert_eq!(c1.coord_name(i), c2.coord_name(i));
        }
    }

    #[test]
    fn total_derivative_examples() {
        let c = JetChart::standard(1, 1, 3);
        let u = |k: u32| Poly::var(c.u(0, &mi(&[k])));
        let x = Poly::var(0);
        assert_eq!(total_derivative(&c, &u(1), 0), u(2));
        assert_eq!(total_derivative(&c, &(&x * &u(0)), 0), &u(0) + &(&x * &u(1)));
        let c2 = JetChart::standard(2, 1, 2);
        let v = |a: u32, b: u32| Poly::var(c2.u(0, &mi(&[a, b])));
        let lap = &v(2, 0) + &v(0, 2);
        assert_eq!(total_derivative(&c2, &lap, 0), &v(3, 0) + &v(1, 2));
    }

    #[test]
    fn holonomic_jet_examples() {
        let c = JetChart::standard(1, 1, 2);
        let x = Poly::var(0);
        let sq = PolySection::new(vec![&x * &x]);
        assert_eq!(holonomic_jet(&sq, &[rat(1, 1)], &c).unwrap(), vec![rat(1, 1), rat(1, 1), rat(2, 1), rat(2, 1)]);
        let constant = PolySection::new(vec![Poly::constant(rat(7, 3))]);
        let j = holonomic_jet(&constant, &[rat(-2, 1)], &c).unwrap();
        assert!(j[2..].iter().all(crate::algebra::Field::is_zero));
        let c3 = JetChart::standard(1, 1, 3);
        let id = PolySection::new(vec![x.clone()]);
        assert_eq!(
            holonomic_jet(&id, &[rat(0, 1)], &c3).unwrap(),
            vec![rat(0, 1), rat(0, 1), rat(1, 1), rat(0, 1), rat(0, 1)]
        );
    }

    proptest::proptest! {
        #[test]
        fn total_derivatives_commute(
            terms in proptest::collection::vec((0usize..8, 0usize..8, -3i64..4), 1..5),
            i in 0usize..2, j in 0usize..2,
        ) {
            let c = JetChart::standard(2, 1, 2);
            let f = Poly::from_terms(terms.into_iter().map(|(a, b, k)| {
                (crate::algebra::Monomial::from_pairs([(a, 1), (b, 1)]), rat(k, 1))
            }));
            let dij = total_derivative(&c, &total_derivative(&c, &f, j), i);
            let dji = total_derivative(&c, &total_derivative(&c, &f, i), j);
            proptest::prop_assert_eq!(dij, dji);
        }

        #[test]
        fn holonomic_jet_projects_to_base_point(a in -5i64..5, b in -5i64..5) {
            let c = JetChart::standard(2, 2, 2);
            let x = Poly::var(0);
            let y = Poly::var(1);
            let s = PolySection::new(vec![&x * &y, &y.pow(3) + &x]);
            let j = holonomic_jet(&s, &[rat(a, 1), rat(b, 1)], &c).unwrap();
            proptest::prop_assert_eq!(&j[..2], &[rat(a, 1), rat(b, 1)][..]);
        }
    }
}
