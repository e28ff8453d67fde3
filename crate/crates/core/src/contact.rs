//! Contact systems on jet charts.

use crate::algebra::{Poly, RatFunc};
use crate::error::{Error, Result};
use crate::forms::DiffForm;
use crate::jet::{enumerate_multi_indices, total_derivative, JetChart, JetCoord, MultiIndex};
use crate::pde::PdeSystem;
use crate::pfaffian::PfaffSystem;

/// The contact system `C_k` of a jet chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContactSystem {
    chart: JetChart,
    labels: Vec<(usize, MultiIndex)>,
    generators: Vec<DiffForm>,
}

impl ContactSystem {
    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    pub fn generators(&self) -> &[DiffForm] {
        &self.generators
    }

    /// `(fiber, α)` of each generator `θ^a_α`.
    pub fn labels(&self) -> &[(usize, MultiIndex)] {
        &self.labels
    }

    pub fn to_pfaff(&self) -> PfaffSystem {
        let names = (0..self.chart.dimension()).map(|i| self.chart.coord_name(i)).collect();
        PfaffSystem::new(names, self.generators.clone()).expect("contact forms live on their chart")
    }
}

/// `θ^a_α = du^a_α − Σ_i u^a_{α+1_i} dx^i`
pub fn contact_form(chart: &JetChart, fiber: usize, alpha: &MultiIndex) -> DiffForm {
    let mut w = DiffForm::d_coord(chart.u(fiber, alpha));
    for i in 0..chart.n() {
        let c = RatFunc::from_poly(Poly::var(chart.u(fiber, &alpha.raised(i))));
        w = w.sub(&DiffForm::d_coord(chart.x(i)).scale(&c));
    }
    w
}

/// Generators `θ^a_α` for `|α| ≤ k − 1`, in chart order; empty when `k = 0`.
pub fn contact_generators(chart: &JetChart) -> ContactSystem {
    let mut labels = Vec::new();
    let mut generators = Vec::new();
    if chart.order() > 0 {
        for alpha in enumerate_multi_indices(chart.n(), chart.order() - 1) {
            for a in 0..chart.m() {
                generators.push(contact_form(chart, a, &alpha));
                labels.push((a, alpha.clone()));
            }
        }
    }
    ContactSystem { chart: chart.clone(), labels, generators }
}

fn total_derivative_ratfunc(chart: &JetChart, f: &RatFunc, i: usize) -> RatFunc {
    let dn = total_derivative(chart, f.num(), i);
    if f.den().is_constant() {
        return RatFunc::new(dn, f.den().clone());
    }
    let dd = total_derivative(chart, f.den(), i);
    RatFunc::new(&(&dn * f.den()) - &(f.num() * &dd), f.den() * f.den())
}

/// `L_i`, the derivation with `L_i(f dz) = (D_i f) dz + f d(D_i z)`.
///
/// `ω` lives on `chart`; the result lives one order higher.
pub fn total_lie_derivative(chart: &JetChart, w: &DiffForm, i: usize) -> DiffForm {
    let up = chart.with_order(chart.order() + 1);
    // d(D_i z) for a single coordinate
    let d_total = |z: usize| match up.coord(z) {
        JetCoord::Base(_) => DiffForm::zero(1),
        JetCoord::Jet { fiber, alpha } => DiffForm::d_coord(up.u(fiber, &alpha.raised(i))),
    };
    let mut out = DiffForm::zero(w.degree());
    for (idx, f) in w.terms() {
        let mut piece = DiffForm::function(total_derivative_ratfunc(&up, f, i));
        for &j in idx {
            piece = piece.wedge(&DiffForm::d_coord(j));
        }
        out = out.add(&piece);
        for r in 0..idx.len() {
            let mut piece = DiffForm::function(f.clone());
            for (s, &j) in idx.iter().enumerate() {
                piece = piece.wedge(&if s == r { d_total(j) } else { DiffForm::d_coord(j) });
            }
            out = out.add(&piece);
        }
    }
    out
}

/// `C_k` restricted to a solved system, on the chart of its parametric coordinates.
pub fn restrict_contact(s: &PdeSystem) -> Result<PfaffSystem> {
    let form = s
        .explicit_form()
        .ok_or_else(|| Error::UnsupportedForm("restricting the contact system needs a solved system".into()))?;
    let chart = s.chart();
    let dim = chart.dimension();
    let parametric: Vec<usize> = (0..dim).filter(|v| !form.is_lead(*v)).collect();
    let mut new_index = vec![usize::MAX; dim];
    for (k, &v) in parametric.iter().enumerate() {
        new_index[v] = k;
    }
    let images: Vec<Poly> = (0..dim)
        .map(|v| match form.get(v) {
            Some(expr) => expr.remap(&|w| new_index[w]),
            None => Poly::var(new_index[v]),
        })
        .collect();
    let generators: Vec<DiffForm> = contact_generators(chart)
        .generators
        .iter()
        .map(|g| g.pullback(&images))
        .filter(|g| !g.is_zero())
        .collect();
    let names = parametric.iter().map(|&v| chart.coord_name(v)).collect();
    Ok(PfaffSystem::new(names, generators)?.independent())
}

/// Whether the section `x ↦ (x, τ(x))` of `J_kπ → ℝⁿ` is an integral of `C_k`.
///
/// `tau` holds one polynomial in the base variables for every jet coordinate
/// `u^a_α`, in chart order.
pub fn is_holonomic_integral(chart: &JetChart, tau: &[Poly]) -> Result<bool> {
    let n = chart.n();
    if tau.len() != chart.dimension() - n {
        return Err(Error::Shape(format!(
            "assignment has {} entries, the chart has {} jet coordinates",
            tau.len(),
            chart.dimension() - n
        )));
    }
    if tau.iter().any(|p| p.max_var().is_some_and(|v| v >= n)) {
        return Err(Error::Shape("assignment uses non-base variables".into()));
    }
    let images: Vec<Poly> = (0..n).map(Poly::var).chain(tau.iter().cloned()).collect();
    Ok(contact_generators(chart).generators.iter().all(|g| g.pullback(&images).is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use crate::pde::jet_index;

    fn names(c: &JetChart) -> impl Fn(usize) -> String + '_ {
        move |v| c.coord_name(v)
    }

    #[test]
    fn generator_examples() {
        let c = JetChart::standard(1, 1, 1);
        let g = contact_generators(&c);
        assert_eq!(g.generators().len(), 1);
        assert_eq!(g.generators()[0].display_with(&names(&c)), "-u[1]*d(x) + d(u)");
        let c2 = JetChart::standard(1, 1, 2);
        let g2 = contact_generators(&c2);
        let shown: Vec<String> = g2.generators().iter().map(|w| w.display_with(&names(&c2))).collect();
        assert_eq!(shown, vec!["-u[1]*d(x) + d(u)", "-u[2]*d(x) + d(u[1])"]);
        let c3 = JetChart::standard(2, 1, 1);
        let g3 = contact_generators(&c3);
        assert_eq!(g3.generators()[0].display_with(&names(&c3)), "-u[1,0]*d(x1) - u[0,1]*d(x2) + d(u)");
        assert!(contact_generators(&JetChart::standard(1, 1, 0)).generators().is_empty());
    }

    #[test]
    fn lie_derivative_examples() {
        let c = JetChart::standard(1, 1, 1);
        let up = c.with_order(2);
        let theta = contact_generators(&c).generators()[0].clone();
        assert_eq!(total_lie_derivative(&c, &theta, 0), contact_form(&up, 0, &MultiIndex::new(vec![1])));
        assert!(total_lie_derivative(&c, &DiffForm::d_coord(0), 0).is_zero());
        let t2 = contact_form(&up, 0, &MultiIndex::new(vec![1]));
        assert_eq!(total_lie_derivative(&up, &t2, 0), contact_form(&up.with_order(3), 0, &MultiIndex::new(vec![2])));
    }

    #[test]
    fn restriction_examples() {
        let c = JetChart::standard(1, 1, 1);
        let u1 = jet_index(&c, 0, &[1]);
        let s = PdeSystem::explicit(c.clone(), vec![(u1, Poly::var(1))]).unwrap();
        let r = restrict_contact(&s).unwrap();
        assert_eq!(r.coords(), &["x".to_string(), "u".to_string()]);
        assert_eq!(r.generators().len(), 1);
        assert_eq!(r.display_form(&r.generators()[0]), "-u*d(x) + d(u)");

        let c2 = JetChart::standard(1, 1, 2);
        let u2 = jet_index(&c2, 0, &[2]);
        let s2 = PdeSystem::explicit(c2.clone(), vec![(u2, Poly::zero())]).unwrap();
        let r2 = restrict_contact(&s2).unwrap();
        let shown: Vec<String> = r2.generators().iter().map(|w| r2.display_form(w)).collect();
        assert_eq!(shown, vec!["-u[1]*d(x) + d(u)", "d(u[1])"]);

        let free = restrict_contact(&PdeSystem::free(c2.clone())).unwrap();
        assert_eq!(free, contact_generators(&c2).to_pfaff());
        let implicit = PdeSystem::new(c2, vec![Poly::var(u2)]).unwrap();
        assert!(matches!(restrict_contact(&implicit), Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn holonomic_examples() {
        let x = Poly::var(0);
        let c2 = JetChart::standard(1, 1, 2);
        let cube = vec![x.pow(3), x.pow(2).scale(&rat(3, 1)), x.scale(&rat(6, 1))];
        assert!(is_holonomic_integral(&c2, &cube).unwrap());
        let c1 = JetChart::standard(1, 1, 1);
        assert!(!is_holonomic_integral(&c1, &[x.clone(), Poly::zero()]).unwrap());
        let sq = vec![x.pow(2), x.scale(&rat(2, 1)), Poly::int(2)];
        assert!(is_holonomic_integral(&c2, &sq).unwrap());
    }
}
