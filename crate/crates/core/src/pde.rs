//! PDE systems as polynomial loci in jet charts, their prolongations,
//! generic dimension and regularity.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::{generic_rank, Field, Matrix, Monomial, Poly, RatFunc, Rational};
use crate::error::{Error, Result};
use crate::forms::DiffForm;
use crate::jet::{total_derivative, JetChart, JetCoord, MultiIndex, PolySection};

/// Solved form `lead = expression`, closed under substitution: no expression
/// mentions a leading coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitForm {
    rules: BTreeMap<usize, Poly>,
}

impl ExplicitForm {
    pub fn new(rules: Vec<(usize, Poly)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lead, expr) in rules {
            if map.insert(lead, expr).is_some() {
                return Err(Error::UnsupportedForm(format!("coordinate #{lead} is solved for twice")));
            }
        }
        for _ in 0..=map.len() {
            if !map.values().any(|e: &Poly| e.vars().iter().any(|v| map.contains_key(v))) {
                return Ok(ExplicitForm { rules: map });
            }
            let snapshot = map.clone();
            let sub = |v: usize| snapshot.get(&v).cloned();
            for e in map.values_mut() {
                *e = e.substitute(&sub);
            }
        }
        Err(Error::UnsupportedForm("solved form is cyclic".into()))
    }

    pub fn rules(&self) -> &BTreeMap<usize, Poly> {
        &self.rules
    }

    pub fn is_lead(&self, v: usize) -> bool {
        self.rules.contains_key(&v)
    }

    pub fn get(&self, lead: usize) -> Option<&Poly> {
        self.rules.get(&lead)
    }

    /// Substitutes every leading coordinate by its expression.
    pub fn reduce(&self, p: &Poly) -> Poly {
        p.substitute(&|v| self.rules.get(&v).cloned())
    }
}

/// A system `S ⊂ J_kπ` cut out by polynomial equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdeSystem {
    chart: JetChart,
    equations: Vec<Poly>,
    explicit: Option<ExplicitForm>,
}

impl PdeSystem {
    pub fn new(chart: JetChart, equations: Vec<Poly>) -> Result<Self> {
        for e in &equations {
            chart.check(e)?;
            if e.is_zero() {
                return Err(Error::Shape("zero equation".into()));
            }
        }
        Ok(PdeSystem { chart, equations, explicit: None })
    }

    /// System given by `lead = expression` rules; equations are `lead − expression`.
    pub fn explicit(chart: JetChart, rules: Vec<(usize, Poly)>) -> Result<Self> {
        let mut equations = Vec::with_capacity(rules.len());
        for (lead, expr) in &rules {
            if *lead < chart.n() || *lead >= chart.dimension() {
                return Err(Error::UnsupportedForm("only jet coordinates can be solved for".into()));
            }
            chart.check(expr)?;
            if expr.contains_var(*lead) {
                return Err(Error::UnsupportedForm(format!("{} appears on both sides", chart.coord_name(*lead))));
            }
            equations.push(&Poly::var(*lead) - expr);
        }
        let explicit = ExplicitForm::new(rules)?;
        Ok(PdeSystem { chart, equations, explicit: Some(explicit) })
    }

    /// All of `J_kπ`.
    pub fn free(chart: JetChart) -> Self {
        PdeSystem { chart, equations: Vec::new(), explicit: Some(ExplicitForm { rules: BTreeMap::new() }) }
    }

    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    pub fn order(&self) -> usize {
        self.chart.order()
    }

    pub fn equations(&self) -> &[Poly] {
        &self.equations
    }

    pub fn explicit_form(&self) -> Option<&ExplicitForm> {
        self.explicit.as_ref()
    }

    /// `∂F_r/∂z_c` over every chart coordinate.
    pub fn jacobian(&self) -> Matrix<Poly> {
        let dim = self.chart.dimension();
        Matrix::from_rows(dim, self.equations.iter().map(|f| (0..dim).map(|c| f.partial(c)).collect()).collect())
    }

    /// Fails with the first equation that does not vanish at `point`.
    pub fn check_on_locus(&self, point: &[Rational]) -> Result<()> {
        if point.len() != self.chart.dimension() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.chart.dimension()
            )));
        }
        for (i, f) in self.equations.iter().enumerate() {
            let v = f.eval(point)?;
            if !Field::is_zero(&v) {
                return Err(Error::NotOnLocus { equation: i, value: v.to_string() });
            }
        }
        Ok(())
    }

    pub fn display_equation(&self, i: usize) -> String {
        self.chart.display(&self.equations[i])
    }
}

/// `{D^β F : |β| ≤ ℓ}` on the order `k + ℓ` chart.
pub fn prolong(s: &PdeSystem, levels: usize) -> PdeSystem {
    if levels == 0 {
        return s.clone();
    }
    let chart = s.chart.with_order(s.order() + levels);
    let n = chart.n();
    // each β is produced once as a nondecreasing sequence of directions
    let mut frontier: Vec<(Poly, usize)> = s.equations.iter().map(|f| (f.clone(), 0)).collect();
    let mut equations = s.equations.clone();
    for _ in 0..levels {
        let mut next = Vec::new();
        for (f, first) in &frontier {
            for i in *first..n {
                let g = total_derivative(&chart, f, i);
                if !g.is_zero() {
                    next.push((g, i));
                }
            }
        }
        equations.extend(next.iter().map(|(g, _)| g.clone()));
        frontier = next;
    }
    let explicit = s.explicit.as_ref().and_then(|e| prolong_explicit(e, &chart, levels));
    PdeSystem { chart, equations, explicit }
}

/// Prolongs a solved form; `None` when two derivations of one leading
/// coordinate disagree after reduction.
fn prolong_explicit(form: &ExplicitForm, chart: &JetChart, levels: usize) -> Option<ExplicitForm> {
    let mut candidates: BTreeMap<usize, Vec<Poly>> =
        form.rules.iter().map(|(l, e)| (*l, vec![e.clone()])).collect();
    let mut frontier: Vec<(usize, Poly)> = form.rules.iter().map(|(l, e)| (*l, e.clone())).collect();
    for _ in 0..levels {
        let mut next = Vec::new();
        for (lead, expr) in &frontier {
            let JetCoord::Jet { fiber, alpha } = chart.coord(*lead) else { continue };
            for i in 0..chart.n() {
                let new_lead = chart.u(fiber, &alpha.raised(i));
                let e = total_derivative(chart, expr, i);
                candidates.entry(new_lead).or_default().push(e.clone());
                next.push((new_lead, e));
            }
        }
        frontier = next;
    }
    let closed = ExplicitForm::new(candidates.iter().map(|(l, c)| (*l, c[0].clone())).collect()).ok()?;
    for (lead, cands) in &candidates {
        let value = &closed.rules[lead];
        if cands.iter().skip(1).any(|c| &closed.reduce(c) != value) {
            return None;
        }
    }
    Some(closed)
}

/// Whether the constant `1` lies in the ℚ-span of the equations.
fn spans_constant(equations: &[Poly]) -> bool {
    let mut monomials: Vec<Monomial> = vec![Monomial::one()];
    for f in equations {
        for (m, _) in f.terms() {
            if !monomials.contains(m) {
                monomials.push(m.clone());
            }
        }
    }
    let rows: Vec<Vec<Rational>> = equations.iter().map(|f| monomials.iter().map(|m| f.coefficient(m)).collect()).collect();
    let base = Matrix::from_rows(monomials.len(), rows.clone());
    let mut with_one = rows;
    with_one.push(monomials.iter().map(|m| if m.is_one() { Field::one() } else { Field::zero() }).collect());
    let extended = Matrix::from_rows(monomials.len(), with_one);
    base.rank() == extended.rank()
}

/// `dim J_kπ − generic rank of the Jacobian`.
pub fn generic_dimension(s: &PdeSystem) -> Result<usize> {
    if spans_constant(&s.equations) {
        return Err(Error::EmptyLocus(format!(
            "the equations of the order {} system combine to 1 = 0",
            s.order()
        )));
    }
    Ok(s.chart.dimension() - generic_rank(&s.jacobian())?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Singular { point: Vec<Rational>, rank: usize, generic_rank: usize },
}

/// Compares the Jacobian rank at each on-locus point with the generic rank.
pub fn regularity_check(s: &PdeSystem, points: &[Vec<Rational>]) -> Result<Regularity> {
    if s.equations.is_empty() {
        return Ok(Regularity::Regular);
    }
    let jac = s.jacobian();
    let g = generic_rank(&jac)?;
    for p in points {
        s.check_on_locus(p)?;
        let r = jac.eval(p)?.rank();
        if r != g {
            return Ok(Regularity::Singular { point: p.clone(), rank: r, generic_rank: g });
        }
    }
    Ok(Regularity::Regular)
}

/// Whether every equation vanishes identically on `j_kσ`.
pub fn is_solution(s: &PdeSystem, section: &PolySection) -> bool {
    let jet = section.symbolic_jet(&s.chart);
    s.equations.iter().all(|f| f.substitute(&|v| jet.get(v).cloned()).is_zero())
}

/// First prolongation of a solved system computed from tangency: the
/// differential of each equation must vanish on the total vector fields.
pub fn tangency_oracle(s: &PdeSystem) -> Result<PdeSystem> {
    let form = s
        .explicit
        .as_ref()
        .ok_or_else(|| Error::UnsupportedForm("tangency oracle needs a solved system".into()))?;
    let chart = s.chart.with_order(s.order() + 1);
    let dim = chart.dimension();
    let n = chart.n();
    let total_fields: Vec<Vec<RatFunc>> = (0..n)
        .map(|i| {
            let mut v = vec![RatFunc::zero(); dim];
            v[chart.x(i)] = RatFunc::one();
            for (idx, slot) in v.iter_mut().enumerate().take(s.chart.dimension()).skip(n) {
                if let JetCoord::Jet { fiber, alpha } = chart.coord(idx) {
                    *slot = RatFunc::from_poly(Poly::var(chart.u(fiber, &alpha.raised(i))));
                }
            }
            v
        })
        .collect();
    let mut equations = Vec::new();
    let mut rules: Vec<(usize, Poly)> = Vec::new();
    for (lead, expr) in form.rules() {
        let f = &Poly::var(*lead) - expr;
        equations.push(f.clone());
        rules.push((*lead, expr.clone()));
    }
    for (lead, expr) in form.rules() {
        let f = &Poly::var(*lead) - expr;
        let df = DiffForm::differential(&RatFunc::from_poly(f));
        let JetCoord::Jet { fiber, alpha } = chart.coord(*lead) else { unreachable!() };
        for (i, field) in total_fields.iter().enumerate() {
            let e = df.interior(field).coefficient(&[]).as_poly().expect("polynomial contraction");
            let new_lead = chart.u(fiber, &alpha.raised(i));
            if !rules.iter().any(|(l, _)| *l == new_lead) {
                rules.push((new_lead, &Poly::var(new_lead) - &e));
            }
            if !e.is_zero() {
                equations.push(e);
            }
        }
    }
    let explicit = ExplicitForm::new(rules)?;
    Ok(PdeSystem { chart, equations, explicit: Some(explicit) })
}

fn random_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-4i64..=4).into(), rng.gen_range(1i64..=3).into())
}

/// Draws up to `count` rational points on the locus.
///
/// Solved systems assign parametric coordinates at random. Otherwise each
/// equation is solved for a variable in which it is affine, after assigning
/// the other free variables; draws that cannot be completed are discarded.
pub fn sample_points(s: &PdeSystem, count: usize, rng: &mut impl Rng) -> Vec<Vec<Rational>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count.max(1) {
        attempts += 1;
        let p = match &s.explicit {
            Some(form) => sample_explicit(s, form, rng),
            None => sample_implicit(s, rng),
        };
        if let Some(p) = p {
            if s.check_on_locus(&p).is_ok() {
                out.push(p);
            }
        }
    }
    out
}

fn sample_explicit(s: &PdeSystem, form: &ExplicitForm, rng: &mut impl Rng) -> Option<Vec<Rational>> {
    let dim = s.chart.dimension();
    let mut point: Vec<Rational> = (0..dim).map(|_| random_rational(rng)).collect();
    for (lead, expr) in form.rules() {
        point[*lead] = expr.eval(&point).ok()?;
    }
    Some(point)
}

fn sample_implicit(s: &PdeSystem, rng: &mut impl Rng) -> Option<Vec<Rational>> {
    let dim = s.chart.dimension();
    let mut vals: Vec<Option<Rational>> = vec![None; dim];
    for f in &s.equations {
        let known = vals.clone();
        let p = f.substitute(&|v| known[v].clone().map(Poly::constant));
        if let Some(c) = p.as_constant() {
            if Field::is_zero(&c) {
                continue;
            }
            return None;
        }
        if p.len() == 1 {
            let v = *p.vars().choose(rng)?;
            vals[v] = Some(<Rational as Field>::zero());
            continue;
        }
        let mut cands: Vec<usize> = p.vars().into_iter().filter(|&v| p.degree_in(v) == 1).collect();
        cands.shuffle(rng);
        let mut solved = false;
        for v in cands {
            let trial: BTreeMap<usize, Rational> =
                p.vars().into_iter().filter(|&w| w != v).map(|w| (w, random_rational(rng))).collect();
            let q = p.substitute(&|w| trial.get(&w).cloned().map(Poly::constant));
            let a = q.coefficient(&Monomial::var(v));
            if Field::is_zero(&a) {
                continue;
            }
            let b = q.coefficient(&Monomial::one());
            for (w, c) in trial {
                vals[w] = Some(c);
            }
            vals[v] = Some(-b / a);
            solved = true;
            break;
        }
        if !solved {
            return None;
        }
    }
    Some(vals.into_iter().map(|v| v.unwrap_or_else(|| random_rational(rng))).collect())
}

/// One line of a prolongation report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub order: usize,
    pub equations: usize,
    pub dimension: Result<usize>,
    pub regularity: Result<Regularity>,
    pub sampled_points: usize,
}

/// Prolongs level by level, recording dimension and sampled regularity.
pub fn prolongation_report(s: &PdeSystem, levels: usize, samples: usize, rng: &mut impl Rng) -> Vec<LevelReport> {
    (0..=levels)
        .map(|level| {
            let p = prolong(s, level);
            let dimension = generic_dimension(&p);
            let points = if dimension.is_ok() { sample_points(&p, samples, rng) } else { Vec::new() };
            let regularity = match &dimension {
                Err(e) => Err(e.clone()),
                Ok(_) => regularity_check(&p, &points),
            };
            LevelReport {
                level,
                order: p.order(),
                equations: p.equations.len(),
                dimension,
                regularity,
                sampled_points: points.len(),
            }
        })
        .collect()
}

/// Reads a multi-index written as exponents, for tests and parsers.
pub fn jet_index(chart: &JetChart, fiber: usize, exponents: &[u32]) -> usize {
    chart.u(fiber, &MultiIndex::new(exponents.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ode(k: usize) -> JetChart {
        JetChart::standard(1, 1, k)
    }

    fn u(c: &JetChart, e: &[u32]) -> Poly {
        Poly::var(jet_index(c, 0, e))
    }

    fn laplace() -> PdeSystem {
        let c = JetChart::standard(2, 1, 2);
        let eq = &u(&c, &[2, 0]) + &u(&c, &[0, 2]);
        PdeSystem::new(c, vec![eq]).unwrap()
    }

    #[test]
    fn prolong_examples() {
        let c = ode(1);
        let s = PdeSystem::new(c.clone(), vec![&u(&c, &[1]) - &u(&c, &[0])]).unwrap();
        let p = prolong(&s, 1);
        let c2 = p.chart().clone();
        assert_eq!(p.equations(), &[&u(&c2, &[1]) - &u(&c2, &[0]), &u(&c2, &[2]) - &u(&c2, &[1])]);
        assert_eq!(prolong(&s, 0), s);

        let l = prolong(&laplace(), 1);
        let c3 = l.chart().clone();
        assert_eq!(l.equations()[1], &u(&c3, &[3, 0]) + &u(&c3, &[1, 2]));
        assert_eq!(l.equations()[2], &u(&c3, &[2, 1]) + &u(&c3, &[0, 3]));
    }

    #[test]
    fn dimension_examples() {
        let c = ode(1);
        let s = PdeSystem::new(c.clone(), vec![&u(&c, &[1]) - &u(&c, &[0])]).unwrap();
        assert_eq!(generic_dimension(&s).unwrap(), 2);
        assert_eq!(generic_dimension(&PdeSystem::free(JetChart::standard(2, 1, 1))).unwrap(), 5);
        let c2 = JetChart::standard(2, 1, 1);
        let fin = PdeSystem::new(c2.clone(), vec![u(&c2, &[1, 0]), u(&c2, &[0, 1])]).unwrap();
        assert_eq!(generic_dimension(&fin).unwrap(), 3);
        // u_x = y, u_y = 0 is not formally integrable
        let y = Poly::var(1);
        let bad = PdeSystem::new(c2.clone(), vec![&u(&c2, &[1, 0]) - &y, u(&c2, &[0, 1])]).unwrap();
        assert!(matches!(generic_dimension(&prolong(&bad, 1)), Err(Error::EmptyLocus(_))));
    }

    #[test]
    fn regularity_examples() {
        let c = ode(1);
        let s = PdeSystem::new(c.clone(), vec![&u(&c, &[1]) - &u(&c, &[0])]).unwrap();
        assert_eq!(regularity_check(&s, &[vec![rat(0, 1), rat(1, 1), rat(1, 1)]]).unwrap(), Regularity::Regular);
        let sq = PdeSystem::new(c.clone(), vec![u(&c, &[1]).pow(2)]).unwrap();
        assert!(matches!(
            regularity_check(&sq, &[vec![rat(0, 1); 3]]).unwrap(),
            Regularity::Singular { rank: 0, generic_rank: 1, .. }
        ));
        assert!(matches!(
            regularity_check(&s, &[vec![rat(0, 1), rat(1, 1), rat(2, 1)]]),
            Err(Error::NotOnLocus { .. })
        ));
        assert_eq!(regularity_check(&PdeSystem::free(c), &[]).unwrap(), Regularity::Regular);
    }

    #[test]
    fn solution_examples() {
        let x = Poly::var(0);
        let c = ode(2);
        let s = PdeSystem::new(c.clone(), vec![u(&c, &[2])]).unwrap();
        assert!(is_solution(&s, &PolySection::new(vec![&x.scale(&rat(3, 1)) + &Poly::one()])));
        let c1 = ode(1);
        let e = PdeSystem::new(c1.clone(), vec![&u(&c1, &[1]) - &u(&c1, &[0])]).unwrap();
        assert!(!is_solution(&e, &PolySection::new(vec![x.clone()])));
        let y = Poly::var(1);
        let harmonic = PolySection::new(vec![&x.pow(2) - &y.pow(2)]);
        assert!(is_solution(&laplace(), &harmonic));
    }

    #[test]
    fn tangency_examples() {
        let c = ode(1);
        let u1 = jet_index(&c, 0, &[1]);
        let s = PdeSystem::explicit(c.clone(), vec![(u1, u(&c, &[0]))]).unwrap();
        let t = tangency_oracle(&s).unwrap();
        let c2 = t.chart().clone();
        assert_eq!(t.equations()[1], &u(&c2, &[2]) - &u(&c2, &[1]));

        let s = PdeSystem::explicit(c.clone(), vec![(u1, Poly::var(0))]).unwrap();
        let t = tangency_oracle(&s).unwrap();
        assert_eq!(t.equations()[1], &u(&c2, &[2]) - &Poly::one());
        assert!(matches!(tangency_oracle(&laplace()), Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn explicit_prolongation_tracks_the_locus() {
        let c = JetChart::standard(2, 1, 2);
        let lead = jet_index(&c, 0, &[2, 0]);
        let s = PdeSystem::explicit(c.clone(), vec![(lead, -u(&c, &[0, 2]))]).unwrap();
        let p = prolong(&s, 2);
        let form = p.explicit_form().unwrap();
        for f in p.equations() {
            assert!(form.reduce(f).is_zero());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = sample_points(&p, 5, &mut rng);
        assert_eq!(pts.len(), 5);
    }

    #[test]
    fn implicit_sampler_finds_points() {
        let c = ode(1);
        let s = PdeSystem::new(c.clone(), vec![&(&u(&c, &[1]) * &u(&c, &[0])) - &Poly::one()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_points(&s, 4, &mut rng);
        assert_eq!(pts.len(), 4);
        for p in pts {
            s.check_on_locus(&p).unwrap();
        }
    }
}
