//! The groupoid `Π_kℝⁿ` of invertible k-jets of local diffeomorphisms.
//!
//! A jet is stored as its truncated Taylor expansion at the source:
//! `f(s + h) = t + Σ_{1≤|β|≤k} c_β h^β`, one polynomial in the displacement
//! variables `h_0..h_{n-1}` per component. Composition truncates eagerly.

use std::fmt;

use super::{factorial_rational, JetChart, JetCoord, MultiIndex};
use crate::algebra::{Field, Matrix, Monomial, Poly, Rational};
use crate::error::{Error, Result};

/// An element of `Π_kℝⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetOfMap {
    order: usize,
    source: Vec<Rational>,
    target: Vec<Rational>,
    taylor: Vec<Poly>,
}

fn truncate(p: &Poly, k: usize) -> Poly {
    Poly::from_terms(
        p.terms()
            .filter(|(m, _)| m.degree() as usize <= k)
            .map(|(m, c)| (m.clone(), c.clone())),
    )
}

fn mul_truncated(a: &Poly, b: &Poly, k: usize) -> Poly {
    let mut out = Poly::zero();
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            if (ma.degree() + mb.degree()) as usize <= k {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
    }
    out
}

/// `outer(inner(h))` truncated at degree `k`; `inner` has no constant terms.
fn compose_truncated(outer: &[Poly], inner: &[Poly], k: usize) -> Vec<Poly> {
    // powers[v][e] = inner[v]^e mod deg > k
    let powers: Vec<Vec<Poly>> = inner
        .iter()
        .map(|p| {
            let mut pw = vec![Poly::one()];
            for e in 1..=k {
                let next = mul_truncated(&pw[e - 1], p, k);
                pw.push(next);
            }
            pw
        })
        .collect();
    outer
        .iter()
        .map(|f| {
            let mut acc = Poly::zero();
            for (m, c) in f.terms() {
                if m.degree() as usize > k {
                    continue;
                }
                let mut t = Poly::constant(c.clone());
                for &(v, e) in m.pairs() {
                    t = mul_truncated(&t, &powers[v][e as usize], k);
                }
                acc = acc + t;
            }
            acc
        })
        .collect()
}

fn invert_matrix(m: &Matrix<Rational>) -> Option<Matrix<Rational>> {
    let n = m.rows();
    let mut aug = Matrix::from_rows(
        2 * n,
        (0..n)
            .map(|r| {
                let mut row = m.row(r).to_vec();
                row.extend((0..n).map(|c| if c == r { <Rational as Field>::one() } else { <Rational as Field>::zero() }));
                row
            })
            .collect(),
    );
    let pivots = aug.rref_in_place();
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(Matrix::from_rows(n, (0..n).map(|r| aug.row(r)[n..].to_vec()).collect()))
}

impl JetOfMap {
    /// Builds a jet from its Taylor polynomials, which must have no constant
    /// term and an invertible linear part; higher terms are truncated.
    pub fn new(order: usize, source: Vec<Rational>, target: Vec<Rational>, taylor: Vec<Poly>) -> Result<Self> {
        let n = source.len();
        if target.len() != n || taylor.len() != n {
            return Err(Error::Shape("source, target and Taylor table must have the same dimension".into()));
        }
        if order == 0 {
            return Err(Error::Shape("jets in the groupoid have order at least one".into()));
        }
        let mut taylor: Vec<Poly> = taylor.iter().map(|p| truncate(p, order)).collect();
        for p in &mut taylor {
            if p.max_var().is_some_and(|v| v >= n) {
                return Err(Error::Shape("Taylor polynomial uses a variable beyond the dimension".into()));
            }
            let c = p.coefficient(&Monomial::one());
            if !Field::is_zero(&c) {
                *p = &*p - &Poly::constant(c);
            }
        }
        let jet = JetOfMap { order, source, target, taylor };
        if invert_matrix(&jet.linear_part()).is_none() {
            return Err(Error::SingularPoint("linear part of the jet is not invertible".into()));
        }
        Ok(jet)
    }

    pub fn identity(point: Vec<Rational>, order: usize) -> Self {
        let n = point.len();
        JetOfMap { order, source: point.clone(), target: point, taylor: (0..n).map(Poly::var).collect() }
    }

    /// `j_k f(at)` for a polynomial map `f: ℝⁿ → ℝⁿ`.
    pub fn of_map(map: &PolyMap, at: &[Rational], order: usize) -> Result<Self> {
        let n = at.len();
        if map.components.len() != n {
            return Err(Error::Shape("map dimension differs from point dimension".into()));
        }
        let target: Vec<Rational> = map.components.iter().map(|p| p.eval(at)).collect::<Result<_>>()?;
        let shift = |v: usize| (v < n).then(|| &Poly::var(v) + &Poly::constant(at[v].clone()));
        let taylor: Vec<Poly> = map.components.iter().map(|p| p.substitute(&shift)).collect();
        JetOfMap::new(order, at.to_vec(), target, taylor)
    }

    pub fn dim(&self) -> usize {
        self.source.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn source(&self) -> &[Rational] {
        &self.source
    }

    pub fn target(&self) -> &[Rational] {
        &self.target
    }

    /// Taylor polynomials in the displacement variables.
    pub fn taylor(&self) -> &[Poly] {
        &self.taylor
    }

    /// Taylor coefficient `c^i_β`.
    pub fn coefficient(&self, i: usize, beta: &MultiIndex) -> Rational {
        self.taylor[i].coefficient(&Monomial::from_exponents(beta.exponents()))
    }

    /// Derivative value `∂^β f^i(source) = β!·c^i_β`.
    pub fn derivative(&self, i: usize, beta: &MultiIndex) -> Rational {
        self.coefficient(i, beta) * factorial_rational(beta)
    }

    /// `(∂f^i/∂x^j)` at the source.
    pub fn linear_part(&self) -> Matrix<Rational> {
        let n = self.dim();
        Matrix::from_rows(
            n,
            (0..n)
                .map(|i| (0..n).map(|j| self.taylor[i].coefficient(&Monomial::var(j))).collect())
                .collect(),
        )
    }

    /// Coordinates of this jet on `J_k(ℝⁿ × ℝⁿ → ℝⁿ)`: source, target and
    /// derivative values `u^a_α`.
    pub fn to_jet_coordinates(&self, chart: &JetChart) -> Result<Vec<Rational>> {
        self.check_chart(chart)?;
        Ok((0..chart.dimension())
            .map(|idx| match chart.coord(idx) {
                JetCoord::Base(i) => self.source[i].clone(),
                JetCoord::Jet { fiber, alpha } if alpha.order() == 0 => self.target[fiber].clone(),
                JetCoord::Jet { fiber, alpha } => self.derivative(fiber, &alpha),
            })
            .collect())
    }

    /// Reads a jet back from jet coordinates; fails on a singular linear part.
    pub fn from_jet_coordinates(chart: &JetChart, point: &[Rational]) -> Result<Self> {
        if chart.n() != chart.m() {
            return Err(Error::Shape("groupoid charts need as many fiber as base variables".into()));
        }
        if point.len() != chart.dimension() {
            return Err(Error::Shape("point does not match the chart dimension".into()));
        }
        let n = chart.n();
        let mut source = vec![<Rational as Field>::zero(); n];
        let mut target = vec![<Rational as Field>::zero(); n];
        let mut taylor = vec![Poly::zero(); n];
        for (idx, value) in point.iter().enumerate() {
            match chart.coord(idx) {
                JetCoord::Base(i) => source[i] = value.clone(),
                JetCoord::Jet { fiber, alpha } if alpha.order() == 0 => target[fiber] = value.clone(),
                JetCoord::Jet { fiber, alpha } => taylor[fiber].add_term(
                    Monomial::from_exponents(alpha.exponents()),
                    value / factorial_rational(&alpha),
                ),
            }
        }
        JetOfMap::new(chart.order(), source, target, taylor)
    }

    fn check_chart(&self, chart: &JetChart) -> Result<()> {
        if chart.n() != self.dim() || chart.m() != self.dim() || chart.order() != self.order {
            return Err(Error::Shape("chart does not match the jet's dimension and order".into()));
        }
        Ok(())
    }
}

impl fmt::Display for JetOfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pt = |v: &[Rational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "j{}[({}) -> ({})]", self.order, pt(&self.source), pt(&self.target))?;
        for p in &self.taylor {
            write!(f, " {}", p.display_with(&|v| format!("h{}", v + 1)))?;
        }
        Ok(())
    }
}

/// `B ∘ A`, defined when `target(A) = source(B)` and the orders agree.
pub fn jet_compose(b: &JetOfMap, a: &JetOfMap) -> Result<JetOfMap> {
    if a.order != b.order {
        return Err(Error::OrderMismatch { left: b.order, right: a.order });
    }
    if a.dim() != b.dim() {
        return Err(Error::Shape("jets of different dimensions".into()));
    }
    if a.target != b.source {
        let pt = |v: &[Rational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
        return Err(Error::SourceTargetMismatch { target: pt(&a.target), next_source: pt(&b.source) });
    }
    Ok(JetOfMap {
        order: a.order,
        source: a.source.clone(),
        target: b.target.clone(),
        taylor: compose_truncated(&b.taylor, &a.taylor, a.order),
    })
}

/// Inverse jet, solved order by order from the inverse linear part.
pub fn jet_invert(a: &JetOfMap) -> JetOfMap {
    let n = a.dim();
    let k = a.order;
    let linv = invert_matrix(&a.linear_part()).expect("jet linear parts are invertible");
    // nonlinear part of the Taylor map
    let nonlinear: Vec<Poly> = a
        .taylor
        .iter()
        .map(|p| Poly::from_terms(p.terms().filter(|(m, _)| m.degree() >= 2).map(|(m, c)| (m.clone(), c.clone()))))
        .collect();
    let apply_linv = |w: &[Poly]| -> Vec<Poly> {
        (0..n)
            .map(|i| {
                (0..n).fold(Poly::zero(), |acc, j| {
                    let c = linv.get(i, j);
                    if Field::is_zero(c) {
                        acc
                    } else {
                        acc + w[j].scale(c)
                    }
                })
            })
            .collect()
    };
    let h: Vec<Poly> = (0..n).map(Poly::var).collect();
    // fixed point of Q = L⁻¹(h − N(Q)); each pass fixes one more order
    let mut q = apply_linv(&h);
    for _ in 1..k {
        let nq = compose_truncated(&nonlinear, &q, k);
        let rhs: Vec<Poly> = h.iter().zip(&nq).map(|(a, b)| a - b).collect();
        q = apply_linv(&rhs);
    }
    JetOfMap { order: k, source: a.target.clone(), target: a.source.clone(), taylor: q }
}

/// A polynomial map `ℝⁿ → ℝⁿ`; component `i` uses variables `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap {
    pub components: Vec<Poly>,
}

impl PolyMap {
    pub fn new(components: Vec<Poly>) -> Self {
        PolyMap { components }
    }

    pub fn identity(n: usize) -> Self {
        PolyMap { components: (0..n).map(Poly::var).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &PolyMap) -> PolyMap {
        let sub = |v: usize| inner.components.get(v).cloned();
        PolyMap { components: self.components.iter().map(|p| p.substitute(&sub)).collect() }
    }
}

/// A polynomial map together with a user supplied inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvertiblePolyMap {
    pub forward: PolyMap,
    pub inverse: PolyMap,
}

impl InvertiblePolyMap {
    pub fn new(forward: PolyMap, inverse: PolyMap) -> Result<Self> {
        if forward.dim() != inverse.dim() {
            return Err(Error::Shape("map and inverse have different dimensions".into()));
        }
        Ok(InvertiblePolyMap { forward, inverse })
    }

    /// Checks `X⁻¹ ∘ X = id` to order `k` at `x`, and `X ∘ X⁻¹ = id` at `X(x)`.
    pub fn verify_at(&self, x: &[Rational], order: usize) -> Result<()> {
        let jx = JetOfMap::of_map(&self.forward, x, order)?;
        let y = jx.target().to_vec();
        let jinv = JetOfMap::of_map(&self.inverse, &y, order)?;
        let pt = |v: &[Rational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
        let back = jet_compose(&jinv, &jx).map_err(|_| {
            Error::InverseCheck(format!("inverse does not send ({}) back to ({})", pt(&y), pt(x)))
        })?;
        if back != JetOfMap::identity(x.to_vec(), order) {
            return Err(Error::InverseCheck(format!("inverse ∘ map differs from the identity at ({})", pt(x))));
        }
        let forth = jet_compose(&jx, &jinv)?;
        if forth != JetOfMap::identity(y.clone(), order) {
            return Err(Error::InverseCheck(format!("map ∘ inverse differs from the identity at ({})", pt(&y))));
        }
        Ok(())
    }
}

/// `j_k(X) ∘ A ∘ j_k(X⁻¹)`, based at `X(source(A))`.
pub fn conjugate_jet(x: &InvertiblePolyMap, a: &JetOfMap) -> Result<JetOfMap> {
    let k = a.order();
    x.verify_at(a.source(), k)?;
    x.verify_at(a.target(), k)?;
    let xs = x.forward.apply(a.source())?;
    let jx_at_target = JetOfMap::of_map(&x.forward, a.target(), k)?;
    let jinv = JetOfMap::of_map(&x.inverse, &xs, k)?;
    jet_compose(&jx_at_target, &jet_compose(a, &jinv)?)
}
